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

"""Quadrature rules with node-doubling error estimates."""

import dataclasses
import functools
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import special

_Integrand = Callable[[np.ndarray], np.ndarray]


@dataclasses.dataclass(frozen=True)
class QuadResult:
    value: float
    error: float  # |Q_fine - Q_coarse| of the last refinement.
    num_nodes: int
    method: str


@functools.lru_cache(maxsize=None)
def _legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = special.roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gaussian_quadrature(a, b, n):
    x, w = _legendre(n)
    points = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    return points, weights


def tanh_sinh_quadrature(a, b, level, t_max=3.):
    """Points and weights of the tanh-sinh rule with step 2**-level.

    Points close to either end are computed from their distance to that end,
    so no node collapses onto a or b in floating point.

    Args:
      a: float, lower limit of integration.
      b: float, upper limit of integration.
      level: int, the rule uses step 2**-level on [-t_max, t_max].
      t_max: float, half-width of the truncated t range.

    Returns:
      points: the nodes in (a, b).
      weights: the matching weights.
    """
    h = 2.**-level
    n = int(np.ceil(t_max / h))
    t = h * np.arange(-n, n + 1)
    u = 0.5 * np.pi * np.sinh(t)
    # 1 + tanh(u) = 2 expit(2u), 1 - tanh(u) = 2 expit(-2u).
    from_a = (b - a) * special.expit(2 * u)
    from_b = (b - a) * special.expit(-2 * u)
    points = np.where(u < 0, a + from_a, b - from_b)
    weights = h * 0.5 * np.pi * np.cosh(t) / np.cosh(u)**2 * 0.5 * (b - a)
    return points, weights


def adaptive_gauss(fn: _Integrand, a, b, tol, n_min=32,
                   n_max=4096) -> Optional[QuadResult]:
    """Gauss-Legendre with doubling; None if n_max is reached first."""
    n = n_min
    points, weights = gaussian_quadrature(a, b, n)
    coarse = float(np.dot(weights, fn(points)))
    while 2 * n <= n_max:
        n *= 2
        points, weights = gaussian_quadrature(a, b, n)
        fine = float(np.dot(weights, fn(points)))
        error = abs(fine - coarse)
        if error <= tol:
            return QuadResult(fine, error, n, 'gauss-legendre')
        coarse = fine
    return None


def adaptive_tanh_sinh(fn: _Integrand, a, b, tol, max_level=12,
                       min_level=3) -> QuadResult:
    """tanh-sinh with step halving; returns the best estimate reached."""
    points, weights = tanh_sinh_quadrature(a, b, min_level)
    coarse = float(np.dot(weights, fn(points)))
    error = np.inf
    fine = coarse
    level = min_level
    while level < max_level:
        level += 1
        points, weights = tanh_sinh_quadrature(a, b, level)
        fine = float(np.dot(weights, fn(points)))
        error = abs(fine - coarse)
        if error <= tol:
            break
        coarse = fine
    return QuadResult(fine, error, len(points), 'tanh-sinh')
