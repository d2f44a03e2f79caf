# Copyright 2022 Google LLC
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Mathy utility functions."""

from typing import Callable

import numpy as np


def log_lerp(t, v0, v1):
    """Interpolate log-linearly from `v0` (t=0) to `v1` (t=1)."""
    if v0 <= 0 or v1 <= 0:
        raise ValueError(f'Interpolants {v0} and {v1} must be positive.')
    lv0 = np.log(v0)
    lv1 = np.log(v1)
    return np.exp(np.clip(t, 0, 1) * (lv1 - lv0) + lv0)


def log_grid(v0, v1, n):
    """`n` log-spaced values from `v0` to `v1`, both included."""
    if n == 1:
        return np.array([v0], dtype=np.float64)
    return log_lerp(np.linspace(0., 1., n), v0, v1)


def safe_sqrt(x):
    """sqrt() that maps round-off negatives to zero."""
    return np.sqrt(np.maximum(x, 0.))


def derivative_step(x, rel=1e-4):
    return rel * max(1., abs(float(x)))


def central_difference(fn: Callable[[float], float], x, step):
    """First derivative by a Richardson-extrapolated central difference."""
    d1 = (fn(x + step) - fn(x - step)) / (2 * step)
    half = step / 2
    d2 = (fn(x + half) - fn(x - half)) / (2 * half)
    return (4 * d2 - d1) / 3


def second_difference(fn: Callable[[float], float], x, step):
    """Second derivative by a Richardson-extrapolated central difference."""
    f0 = fn(x)
    s1 = (fn(x + step) - 2 * f0 + fn(x - step)) / step**2
    half = step / 2
    s2 = (fn(x + half) - 2 * f0 + fn(x - half)) / half**2
    return (4 * s2 - s1) / 3


def double_factorial(k: int) -> int:
    """k!! with the conventions (-1)!! = 0!! = 1."""
    if k < -1:
        raise ValueError(f'Double factorial undefined for {k}.')
    result = 1
    while k > 1:
        result *= k
        k -= 2
    return result


def sin_power_integral(n: int) -> float:
    """I_n = integral of sin(t)^n over one full period."""
    if n % 2:
        return 0.
    return 2 * np.pi * double_factorial(n - 1) / double_factorial(n)
