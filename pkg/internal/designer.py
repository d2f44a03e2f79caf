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

"""Monomial perturbations whose Melnikov function has prescribed zeros."""

import dataclasses
from typing import List, Optional, Sequence, Tuple

from absl import logging
import numpy as np

from internal import abelian
from internal import core_model
from internal import errors
from internal import math
from internal import zerofind

Exponents = Sequence[Tuple[int, int]]


def _basis(model: core_model.PlanarModel,
           exponents: Exponents) -> List[abelian.MonomialPerturbation]:
    combined = abelian.MonomialPerturbation(
        tuple((q, p, 1.) for q, p in exponents), x_shift=model.center_x)
    combined.check_distinct_weights()
    return [
        abelian.MonomialPerturbation(((q, p, 1.),), x_shift=model.center_x)
        for q, p in exponents
    ]


def basis_curves(model: core_model.PlanarModel,
                 exponents: Exponents,
                 h_grid: Sequence[float],
                 tol: float = 1e-10,
                 threads: int = 1,
                 progress: bool = False,
                 **kwargs) -> List[abelian.MelnikovCurve]:
    """J_j(h) for D_j = (x - x*)^(2 q_j) and y-power 2 p_j - 1.

    Raises:
      DuplicateWeight: when two exponent pairs share q + p.
    """
    curves = []
    for (q, p), pert in zip(exponents, _basis(model, exponents)):
        curve = abelian.melnikov_curve(model, pert, h_grid, tol=tol,
                                       threads=threads, progress=progress,
                                       **kwargs)
        if np.any(curve.values <= 0):
            logging.warning('Basis integral J_(%d,%d) is not positive on the '
                            'whole grid.', q, p)
        curves.append(curve)
    return curves


def null_vector(matrix: np.ndarray) -> np.ndarray:
    """Spans the null space of a full-rank l x (l+1) matrix.

    Gaussian elimination with complete pivoting brings the matrix to upper
    trapezoidal form; the free unknown is set to 1 and the rest follow by
    back substitution. The result is normalized so that its largest entry in
    magnitude is +1.
    """
    original = np.array(matrix, dtype=np.float64)
    a = original.copy()
    rows, cols = a.shape
    if cols != rows + 1:
        raise errors.InvalidParams(f'Expected an l x (l+1) matrix, got {a.shape}.')
    floor = max(a.shape) * np.finfo(np.float64).eps * np.max(np.abs(a),
                                                           initial=0.)
    perm = np.arange(cols)
    for k in range(rows):
        block = np.abs(a[k:, k:])
        i, j = np.unravel_index(np.argmax(block), block.shape)
        if block[i, j] <= floor:
            raise errors.IllConditioned('Collocation matrix is rank deficient.',
                                        matrix=original)
        a[[k, k + i]] = a[[k + i, k]]
        a[:, [k, k + j]] = a[:, [k + j, k]]
        perm[[k, k + j]] = perm[[k + j, k]]
        a[k + 1:, k:] -= np.outer(a[k + 1:, k] / a[k, k], a[k, k:])
    z = np.zeros(cols)
    z[rows] = 1.
    for k in reversed(range(rows)):
        z[k] = -np.dot(a[k, k + 1:], z[k + 1:]) / a[k, k]
    d = np.empty(cols)
    d[perm] = z
    return d / d[np.argmax(np.abs(d))]


@dataclasses.dataclass(frozen=True)
class DesignReport:
    perturbation: abelian.MonomialPerturbation
    targets: Tuple[float, ...]
    matrix: np.ndarray
    condition_number: float
    zeros: Tuple[zerofind.ZeroRecord, ...]
    residuals: Tuple[float, ...]


def _check_targets(model, targets, margin):
    targets = np.asarray(targets, dtype=np.float64)
    if np.any(np.diff(targets) <= 0):
        raise errors.TargetOutOfRange(
            f'Targets {targets.tolist()} must be strictly increasing.')
    h_bar = model.h_ceiling
    if np.isfinite(h_bar):
        lo, hi = margin * h_bar, (1 - margin) * h_bar
        bad = [t for t in targets if not lo < t < hi]
        if bad:
            raise errors.TargetOutOfRange(
                f'Targets {bad} are outside ({lo!r}, {hi!r}), the interior '
                f'{margin:.0%} margin of (0, {h_bar!r}).')
    elif np.any(targets <= 0):
        raise errors.TargetOutOfRange(
            f'Targets {targets.tolist()} must be positive.')
    return targets


def verification_grid(model: core_model.PlanarModel,
                      targets: Sequence[float],
                      n: int = 64,
                      lo_frac: float = 1e-4,
                      hi_frac: float = 0.999) -> np.ndarray:
    if np.isfinite(model.h_ceiling):
        return abelian.default_h_grid(model, n, lo_frac, hi_frac)
    top = 2 * max(targets) if len(targets) else 1.
    return math.log_grid(lo_frac * top, top, n)


def design_zeros(model: core_model.PlanarModel,
                 exponents: Exponents,
                 targets: Sequence[float],
                 tol: float = 1e-10,
                 cond_max: float = 1e12,
                 target_margin: float = 0.01,
                 rel_tol: float = 1e-3,
                 grid: Optional[Sequence[float]] = None,
                 threads: int = 1,
                 **kwargs) -> DesignReport:
    """Solves sum_j d_j J_j(h_i) = 0 at the targets and verifies the zeros.

    Args:
      model: the unperturbed model.
      exponents: l + 1 pairs (q_j, p_j) with distinct q_j + p_j.
      targets: l strictly increasing energies inside the annulus.
      tol: quadrature tolerance.
      cond_max: largest accepted condition number of the collocation matrix.
      target_margin: fraction of h_ceiling kept clear at both ends.
      rel_tol: relative distance allowed between a target and its zero.
      grid: energies for the verification scan; derived from the targets
        when omitted.
      threads: worker threads for sampling.
      **kwargs: quadrature settings forwarded to melnikov_value.

    Returns:
      A DesignReport with the coefficients and the recovered zeros.
    """
    exponents = [(int(q), int(p)) for q, p in exponents]
    targets = _check_targets(model, targets, target_margin)
    if len(exponents) != len(targets) + 1:
        raise errors.InvalidParams(
            f'{len(targets)} targets need {len(targets) + 1} exponent pairs, '
            f'got {len(exponents)}.')
    basis = _basis(model, exponents)

    ell = len(targets)
    matrix = np.zeros((ell, ell + 1))
    for j, pert in enumerate(basis):
        for i, h in enumerate(targets):
            matrix[i, j], _ = abelian.melnikov_value(model, pert, h, tol=tol,
                                                     **kwargs)

    if ell == 0:
        coefficients, condition = np.ones(1), 1.
    else:
        # Column scaling leaves the null direction fixed up to a diagonal map.
        scale = np.max(np.abs(matrix), axis=0)
        scale[scale == 0] = 1.
        scaled = matrix / scale
        condition = float(np.linalg.cond(scaled))
        if not np.isfinite(condition) or condition > cond_max:
            raise errors.IllConditioned(
                f'Collocation matrix condition number {condition:.3e} exceeds '
                f'{cond_max:.1e}.', matrix=matrix, condition_number=condition)
        coefficients = null_vector(scaled) / scale
        coefficients /= coefficients[np.argmax(np.abs(coefficients))]

    pert = abelian.MonomialPerturbation(
        tuple((q, p, float(d)) for (q, p), d in zip(exponents, coefficients)),
        x_shift=model.center_x)

    if grid is None:
        grid = verification_grid(model, targets)
    curve = abelian.melnikov_curve(model, pert, grid, tol=tol, threads=threads,
                                   **kwargs)
    records = zerofind.find_zeros(curve, model, pert, threads=threads, tol=tol,
                                  **kwargs)
    found = np.array(zerofind.simple_zeros(records))
    residuals = []
    for t in targets:
        nearest = found[np.argmin(np.abs(found - t))] if found.size else np.nan
        residuals.append(float(abs(nearest - t) / t))
    ok = (len(records) == ell and found.size == ell and
          all(r <= rel_tol for r in residuals))
    if not ok:
        raise errors.IllConditioned(
            f'Verification found {found.size} simple zeros '
            f'{found.tolist()} for targets {targets.tolist()}; relative '
            f'residuals {residuals}.', matrix=matrix,
            condition_number=condition, residuals=residuals)
    logging.info('Placed %d zeros with condition number %.3e.', ell, condition)
    return DesignReport(perturbation=pert, targets=tuple(targets.tolist()),
                        matrix=matrix, condition_number=condition,
                        zeros=tuple(records), residuals=tuple(residuals))


def place_zeros(model: core_model.PlanarModel, exponents: Exponents,
                targets: Sequence[float], **kwargs) -> abelian.MonomialPerturbation:
    return design_zeros(model, exponents, targets, **kwargs).perturbation
