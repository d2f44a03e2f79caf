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

"""Zeros of sampled Melnikov curves and their simplicity."""

import dataclasses
from typing import List, Tuple

from absl import logging
import numpy as np

from internal import abelian
from internal import core_model
from internal import errors
from internal import utils

# A sample counts as signed when |M| exceeds this many error estimates.
_SIGNIFICANCE = 3.


@dataclasses.dataclass(frozen=True)
class ZeroRecord:
    h_star: float
    bracket: Tuple[float, float]
    derivative_estimate: float
    simple: bool
    refinement_error: float


def _significant(value, error) -> bool:
    return value != 0 and abs(value) > _SIGNIFICANCE * error


def _sign_brackets(curve: abelian.MelnikovCurve) -> List[Tuple[int, int]]:
    """Index pairs of consecutive signed samples with opposite signs."""
    h, m, e = curve.h, curve.values, curve.errors
    signed = [i for i in range(len(m)) if _significant(m[i], e[i])]
    if not signed:
        if np.any(m != 0):
            logging.warning(
                'Melnikov curve is at noise level on [%r, %r]; no zeros '
                'can be certified.', h[0], h[-1])
        else:
            logging.warning('Melnikov curve vanishes identically on [%r, %r].',
                            h[0], h[-1])
        return []
    brackets = []
    for i, j in zip(signed[:-1], signed[1:]):
        raw = np.sign(m[i:j + 1])
        raw = raw[raw != 0]
        flips = int(np.sum(raw[1:] != raw[:-1]))
        if np.sign(m[i]) != np.sign(m[j]):
            if flips > 1:
                raise errors.AmbiguousSignChange(
                    f'{flips} sign flips at noise level between h = {h[i]!r} '
                    f'and h = {h[j]!r}; densify the grid or tighten the '
                    f'tolerance.', bracket=(h[i], h[j]))
            brackets.append((i, j))
        elif j - i > 1:
            logging.warning(
                'Melnikov curve touches zero at noise level between h = %r '
                'and h = %r without changing sign (tangential zero?).', h[i],
                h[j])
    _warn_tangencies(curve, signed)
    return brackets


def _warn_tangencies(curve: abelian.MelnikovCurve, signed: List[int]):
    """Local minima of |M| whose parabola through three samples dips to 0."""
    h, m, e = curve.h, curve.values, curve.errors
    for a, b, c in zip(signed[:-2], signed[1:-1], signed[2:]):
        if not (np.sign(m[a]) == np.sign(m[b]) == np.sign(m[c])):
            continue
        if not (abs(m[b]) < abs(m[a]) and abs(m[b]) < abs(m[c])):
            continue
        coeffs = np.polyfit(h[[a, b, c]], m[[a, b, c]], 2)
        if coeffs[0] == 0:
            continue
        vertex = -coeffs[1] / (2 * coeffs[0])
        if not h[a] < vertex < h[c]:
            continue
        dip = np.polyval(coeffs, vertex)
        if np.sign(dip) != np.sign(m[b]) or abs(dip) <= _SIGNIFICANCE * e[b]:
            logging.warning(
                'Possible tangential (non-simple) zero of M near h = %r; '
                'it is not counted.', vertex)


def _refine(model, pert, lo, hi, f_lo, f_hi, e_lo, e_hi, width, kwargs):
    use_secant = True
    h_star = None
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        t = mid
        if use_secant and f_hi != f_lo:
            t = hi - f_hi * (hi - lo) / (f_hi - f_lo)
            if not lo < t < hi:
                t = mid
        use_secant = not use_secant
        f_t, e_t = abelian.melnikov_value(model, pert, t, **kwargs)
        if not _significant(f_t, e_t):
            # Noise floor reached inside a verified bracket.
            h_star = t
            break
        if np.sign(f_t) == np.sign(f_lo):
            lo, f_lo, e_lo = t, f_t, e_t
        else:
            hi, f_hi, e_hi = t, f_t, e_t
    if h_star is None:
        h_star = hi - f_hi * (hi - lo) / (f_hi - f_lo)
        if not lo < h_star < hi:
            h_star = 0.5 * (lo + hi)
    return h_star, lo, hi, f_lo, f_hi, max(e_lo, e_hi)


def find_zeros(curve: abelian.MelnikovCurve,
               model: core_model.PlanarModel,
               pert: abelian.PerturbationSpec,
               rel_width: float = 1e-9,
               deriv_rel_step: float = 1e-5,
               threads: int = 1,
               **kwargs) -> List[ZeroRecord]:
    """One record per sign change of the sampled curve.

    Each bracket is refined by alternating secant and bisection steps on
    fresh Melnikov evaluations until it is narrower than rel_width times the
    energy scale, or until M drops to its own noise level.

    Args:
      curve: the sampled Melnikov function.
      model: the model the curve was sampled on.
      pert: the perturbation the curve was sampled for.
      rel_width: target bracket width relative to h_ceiling (or to the top of
        the grid when the annulus is unbounded).
      deriv_rel_step: central-difference step relative to h_star.
      threads: brackets refined concurrently when > 1.
      **kwargs: quadrature settings forwarded to melnikov_value.

    Returns:
      The zero records in increasing h.

    Raises:
      AmbiguousSignChange: when quadrature noise hides how many sign changes a
        swing contains.
    """
    brackets = _sign_brackets(curve)
    if not brackets:
        return []
    h, m, e = curve.h, curve.values, curve.errors
    scale = model.h_ceiling if np.isfinite(model.h_ceiling) else h[-1]
    width = rel_width * scale

    def refine(bracket):
        i, j = bracket
        h_star, lo, hi, f_lo, f_hi, e_quad = _refine(model, pert, h[i], h[j],
                                                      m[i], m[j], e[i], e[j],
                                                      width, kwargs)
        step = deriv_rel_step * h_star
        m_plus, e_plus = abelian.melnikov_value(model, pert, h_star + step,
                                                **kwargs)
        m_minus, e_minus = abelian.melnikov_value(model, pert, h_star - step,
                                                  **kwargs)
        derivative = (m_plus - m_minus) / (2 * step)
        propagated = max(e_quad, e_plus, e_minus)
        floor = max(1e-8, 10 * propagated / (hi - lo))
        simple = bool(
            abs(derivative) > floor and
            np.sign(derivative) == np.sign(f_hi - f_lo))
        if not simple:
            logging.warning(
                'Sign change near h = %r has |M\'| = %.3e below the simplicity '
                'floor %.3e.', h_star, abs(derivative), floor)
        return ZeroRecord(h_star=float(h_star), bracket=(float(lo), float(hi)),
                          derivative_estimate=float(derivative), simple=simple,
                          refinement_error=float(hi - lo))

    return utils.parallel_map(refine, brackets, threads=threads)


def simple_zeros(records: List[ZeroRecord]) -> List[float]:
    return [r.h_star for r in records if r.simple]
