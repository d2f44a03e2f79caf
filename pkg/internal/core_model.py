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

"""Planar near-Hamiltonian systems, their equilibria and period annuli.

A model is the unperturbed system

  x' =  H_y =  y / s(x, y),
  y' = -H_x =  f(x, y) / s(x, y),

with an integrating factor s > 0. The energy is normalized so that the
center sits at H = 0, and the period annulus is the band of energies
0 < h < h_ceiling whose level sets are closed ovals around the center.
"""

import dataclasses
import enum
from typing import Callable, Iterator, NamedTuple, Optional, Tuple

from absl import logging
import numpy as np
from scipy import optimize

from internal import errors
from internal import math

_Field = Callable[..., np.ndarray]

# Marching outward from the center along the x-axis.
_MARCH_START = 1e-6
_MARCH_GROWTH = 1.1
_MARCH_FAR = 1e8
_EDGE_HALVINGS = 60


@dataclasses.dataclass(frozen=True)
class ScalarField1D:
    """A real function of one variable with its first two derivatives."""
    value: _Field
    derivative: _Field
    second_derivative: _Field

    def __call__(self, x):
        return self.value(x)

    def shifted(self, offset: float) -> 'ScalarField1D':
        """The same field minus a constant."""
        value = self.value
        return dataclasses.replace(self, value=lambda x: value(x) - offset)

    def derivative_error(self, probes) -> float:
        """Largest relative mismatch between `derivative` and a finite
        difference of `value` over the probe points."""
        worst = 0.
        for x in np.asarray(probes, dtype=np.float64):
            step = math.derivative_step(x)
            fd = math.central_difference(self.value, x, step)
            exact = float(self.derivative(x))
            worst = max(worst, abs(fd - exact) / max(abs(exact), 1e-3))
        return worst


@dataclasses.dataclass(frozen=True)
class Domain:
    """Open rectangle of the (x, y) plane."""
    x_lo: float = -np.inf
    x_hi: float = np.inf
    y_lo: float = -np.inf
    y_hi: float = np.inf

    def contains(self, x, y=0.) -> bool:
        return (self.x_lo < x < self.x_hi) and (self.y_lo < y < self.y_hi)

    def closure_contains_x(self, x) -> bool:
        return self.x_lo <= x <= self.x_hi


class EquilibriumType(enum.Enum):
    CENTER = 'center'
    SADDLE = 'saddle'
    DEGENERATE = 'degenerate'


@dataclasses.dataclass(frozen=True)
class PlanarModel:
    """One period annulus of a planar Hamiltonian system."""
    hamiltonian: _Field  # H(x, y), zero at the center.
    s_factor: _Field  # Integrating factor s(x, y) > 0.
    f: _Field  # Restoring term, -H_x = f / s.
    center_x: float
    h_ceiling: float = np.inf
    domain: Domain = Domain()
    name: str = ''
    # (x, y) -> (H_x, H_y); derived from f and s when missing.
    gradient: Optional[Callable[..., Tuple[np.ndarray, np.ndarray]]] = None
    separable: Optional['SeparableHamiltonian'] = None
    # Where the annulus meets the x-axis on each side: saddle, edge or +-inf.
    x_stops: Tuple[float, float] = (-np.inf, np.inf)

    def grad(self, x, y):
        if self.gradient is not None:
            return self.gradient(x, y)
        s = self.s_factor(x, y)
        return -self.f(x, y) / s, y / s

    def h_x(self, x, y=0.):
        return self.grad(x, y)[0]

    def with_ceiling(self, h_ceiling: float) -> 'PlanarModel':
        return dataclasses.replace(self, h_ceiling=float(h_ceiling))

    def with_annulus(self, ceiling: 'Ceiling') -> 'PlanarModel':
        """Attaches the ceiling and the stop points from `locate_ceiling`."""
        return dataclasses.replace(self,
                                   h_ceiling=float(ceiling.h),
                                   x_stops=(float(ceiling.left),
                                            float(ceiling.right)))


@dataclasses.dataclass(frozen=True)
class SeparableHamiltonian:
    """H(x, y) = A(x) y^2 + B(x), with A(x_c) = a^2 and B''(x_c) = 2 / b^2."""
    A: ScalarField1D
    B: ScalarField1D
    center_x: float
    a_const: float
    b_const: float

    @classmethod
    def from_fields(cls, A: ScalarField1D, B: ScalarField1D,
                    center_x: float) -> 'SeparableHamiltonian':
        """Reads a and b off the fields at the center."""
        a2 = float(A(center_x))
        b2_inv = float(B.second_derivative(center_x)) / 2
        if a2 <= 0:
            raise errors.NoCenter(f'A({center_x}) = {a2} must be positive.')
        if b2_inv <= 0:
            raise errors.NoCenter(
                f'B\'\'({center_x}) = {2 * b2_inv} must be positive.')
        return cls(A=A, B=B, center_x=float(center_x), a_const=np.sqrt(a2),
                   b_const=np.sqrt(1 / b2_inv))

    def hamiltonian(self, x, y):
        return self.A(x) * y**2 + self.B(x)

    def gradient(self, x, y):
        return (self.A.derivative(x) * y**2 + self.B.derivative(x),
                2 * self.A(x) * y)

    def s_factor(self, x, y):
        return 1 / (2 * self.A(x)) + 0 * y

    def f(self, x, y):
        h_x, _ = self.gradient(x, y)
        return -h_x / (2 * self.A(x))

    def upper_branch(self, x, h):
        """y >= 0 on H(x, y) = h; NaN where no real branch exists."""
        with np.errstate(invalid='ignore', divide='ignore'):
            return np.sqrt((h - self.B(x)) / self.A(x))

    def invariant_residuals(self) -> dict:
        """Finite-difference checks of the normalization at the center."""
        xc = self.center_x
        step = math.derivative_step(xc, 1e-3)
        return {
            'A_minus_a2': float(self.A(xc)) - self.a_const**2,
            'B': float(self.B(xc)),
            'B_prime': math.central_difference(self.B, xc, step),
            'B_second_minus_2_over_b2': (
                math.second_difference(self.B, xc, step) - 2 /
                self.b_const**2),
        }

    def to_planar_model(self, domain: Domain = Domain(), name: str = '',
                        h_ceiling: float = np.inf) -> PlanarModel:
        return PlanarModel(
            hamiltonian=self.hamiltonian,
            s_factor=self.s_factor,
            f=self.f,
            center_x=self.center_x,
            h_ceiling=h_ceiling,
            domain=domain,
            name=name,
            gradient=self.gradient,
            separable=self)


def hessian_xx(model: PlanarModel, x_star: float) -> float:
    """H_xx at (x_star, 0)."""
    if model.separable is not None:
        return float(model.separable.B.second_derivative(x_star))
    step = math.derivative_step(x_star, 1e-3)
    return math.second_difference(lambda x: model.hamiltonian(x, 0.), x_star,
                                  step)


def classify_equilibrium(model: PlanarModel,
                         x_star: float,
                         tol: float = 1e-8,
                         equilibrium_tol: float = 1e-9) -> EquilibriumType:
    """Center/saddle test of an equilibrium on the x-axis.

    At an equilibrium df/dx = -s H_xx, and H_yy = 1/s > 0 with H_xy = 0 on
    the axis, so the sign of H_xx decides. H_xx stays finite where s blows up
    (the Ostrovsky saddle sits on such a line).

    Args:
      model: the planar model.
      x_star: abscissa of the equilibrium.
      tol: |H_xx| at or below this is reported as degenerate.
      equilibrium_tol: largest |H_x(x_star, 0)| accepted.

    Returns:
      The equilibrium type.

    Raises:
      NotAnEquilibrium: if H_x(x_star, 0) is not zero within tolerance.
    """
    if not model.domain.closure_contains_x(x_star):
        raise errors.DomainViolation(
            f'x* = {x_star} lies outside the model domain {model.domain}.')
    h_x = float(model.h_x(x_star, 0.))
    if not np.isfinite(h_x) or abs(h_x) > equilibrium_tol:
        raise errors.NotAnEquilibrium(
            f'H_x({x_star}, 0) = {h_x} is not zero.')
    h_xx = hessian_xx(model, x_star)
    if h_xx > tol:
        return EquilibriumType.CENTER
    if h_xx < -tol:
        return EquilibriumType.SADDLE
    return EquilibriumType.DEGENERATE


def is_strict_minimum(model: PlanarModel, x_star: float,
                      rel: float = 1e-3) -> bool:
    """H(x, 0) increases away from x_star on both sides.

    Used for centers with H_xx = 0, such as x^4 potentials.
    """
    scale = max(1., abs(x_star))
    for k in range(1, 6):
        dx = rel * scale * 2.**-k
        for x in (x_star - dx, x_star + dx):
            if not model.domain.contains(x):
                return False
            if (model.hamiltonian(x, 0.) - model.hamiltonian(x_star, 0.)) <= 0:
                return False
            if model.h_x(x, 0.) * (x - x_star) <= 0:
                return False
    return True


def _march(center: float, direction: int, edge: float) -> Iterator[Tuple[float,
                                                                        bool]]:
    """Abscissae moving away from the center, geometric then edge-halving.

    Yields (x, at_edge) pairs; the final pair is the edge itself when the
    edge is finite.
    """
    scale = max(1., abs(center))
    offset = _MARCH_START * scale
    limit = abs(edge - center) if np.isfinite(edge) else np.inf
    while offset < limit and offset < _MARCH_FAR * scale:
        yield center + direction * offset, False
        offset *= _MARCH_GROWTH
    if not np.isfinite(limit):
        return
    last = min(offset / _MARCH_GROWTH, limit)
    for _ in range(_EDGE_HALVINGS):
        last = limit - (limit - last) / 2
        yield center + direction * last, False
    yield edge, True


class Ceiling(NamedTuple):
    h: float
    left: float  # Where the left side stops: saddle, edge or -inf.
    right: float
    left_kind: str  # 'critical', 'edge' or 'unbounded'.
    right_kind: str


def _side_ceiling(model: PlanarModel, direction: int, xtol: float):
    center = model.center_x
    edge = model.domain.x_hi if direction > 0 else model.domain.x_lo
    axis = lambda x: float(model.hamiltonian(x, 0.))
    slope = lambda x: float(model.h_x(x, 0.)) * direction
    prev = center
    prev_h = 0.
    with np.errstate(all='ignore'):
        for x, at_edge in _march(center, direction, edge):
            if at_edge:
                h = axis(x)
                if not np.isfinite(h):
                    h = prev_h
                return h, x, 'edge'
            if slope(x) <= 0:
                lo, hi = sorted((prev, x))
                x_crit = optimize.brentq(lambda t: float(model.h_x(t, 0.)), lo,
                                         hi, xtol=xtol)
                return axis(x_crit), x_crit, 'critical'
            h = axis(x)
            if not np.isfinite(h):
                return prev_h, prev, 'edge'
            prev, prev_h = x, h
    return np.inf, direction * np.inf, 'unbounded'


def locate_ceiling(model: PlanarModel, tol: float = 1e-8,
                   xtol: float = 1e-13) -> Ceiling:
    """The energy ceiling together with where each side of the axis stops."""
    kind = classify_equilibrium(model, model.center_x, tol=tol)
    if kind == EquilibriumType.DEGENERATE and is_strict_minimum(
            model, model.center_x):
        logging.info('x = %r is a degenerate (nonlinear) center.',
                     model.center_x)
    elif kind != EquilibriumType.CENTER:
        raise errors.NoCenter(
            f'x = {model.center_x} is a {kind.value}, not a center.')
    h_left, x_left, left_kind = _side_ceiling(model, -1, xtol)
    h_right, x_right, right_kind = _side_ceiling(model, +1, xtol)
    return Ceiling(min(h_left, h_right), x_left, x_right, left_kind,
                   right_kind)


def energy_ceiling(model: PlanarModel, tol: float = 1e-8) -> float:
    """Supremum of the energies whose level set is a closed oval.

    Each side of the x-axis is followed outward from the center while H(x, 0)
    keeps increasing; a side stops at the first critical point (a saddle), at
    a domain edge, or never (+inf). The ceiling is the smaller side value.
    """
    return locate_ceiling(model, tol=tol).h


def turning_points(model: PlanarModel, h: float,
                   xtol: float = 1e-13) -> Tuple[float, float]:
    """Intersections x_minus < center < x_plus of the oval H = h with y = 0."""
    if not 0 < h < model.h_ceiling:
        raise errors.EnergyOutOfRange(
            f'h = {h} is outside the period annulus (0, {model.h_ceiling}).')
    return (_turning_point(model, h, -1, xtol),
            _turning_point(model, h, +1, xtol))


def _turning_point(model, h, direction, xtol):
    center = model.center_x
    # H(x, 0) is monotone between the center and a known stop, so the march
    # ends there instead of crossing a saddle into the next well.
    edge = model.x_stops[direction > 0]
    if not np.isfinite(edge):
        edge = model.domain.x_hi if direction > 0 else model.domain.x_lo
    level = lambda x: float(model.hamiltonian(x, 0.)) - h
    prev = center
    with np.errstate(all='ignore'):
        for x, at_edge in _march(center, direction, edge):
            value = level(x)
            if at_edge and not np.isfinite(value):
                break
            if value >= 0:
                lo, hi = sorted((prev, x))
                tight = xtol * min(1., abs(x - center))
                return optimize.brentq(level, lo, hi, xtol=max(tight, 1e-300))
            prev = x
    raise errors.BracketFailure(
        f'No turning point for h = {h} before x = {edge} '
        f'(direction {direction:+d}).')


def probe_points(model: PlanarModel, n: int = 100,
                 h_frac: float = 0.5, h_cap: float = 1.) -> np.ndarray:
    """`n` points strictly inside the oval at h_frac * min(h_ceiling, h_cap)."""
    h = h_frac * min(model.h_ceiling, h_cap)
    x_minus, x_plus = turning_points(model, h)
    rng = np.random.default_rng(0)
    u = rng.uniform(0.05, 0.95, size=n)
    x = x_minus + u * (x_plus - x_minus)
    points = []
    for xi, v in zip(x, rng.uniform(-0.9, 0.9, size=n)):
        y_top = _upper_y(model, xi, h)
        points.append((xi, v * y_top))
    return np.array(points)


def _upper_y(model: PlanarModel, x: float, h: float) -> float:
    if model.separable is not None:
        return float(model.separable.upper_branch(x, h))
    return solve_branch(model, x, h, +1)


def solve_branch(model: PlanarModel, x: float, h: float, sign: int) -> float:
    """y with H(x, y) = h on the upper (sign=+1) or lower branch."""
    level = lambda y: float(model.hamiltonian(x, y)) - h
    base = level(0.)
    if base > 1e-12 * max(1., abs(h)):
        raise errors.BranchSolveFailure(
            f'H({x}, 0) exceeds h = {h}; no real branch.')
    if base >= 0:
        return 0.
    y = 1e-3 * sign
    for _ in range(200):
        if level(y) >= 0:
            lo, hi = sorted((0., y))
            return optimize.brentq(level, lo, hi, xtol=1e-15)
        y *= 2
    raise errors.BranchSolveFailure(f'No branch at x = {x} for h = {h}.')


def hamiltonian_consistency_error(model: PlanarModel, probes) -> float:
    """Worst relative mismatch of H_y = y/s and H_x = -f/s on the probes."""
    worst = 0.
    for x, y in np.asarray(probes, dtype=np.float64):
        step_x = math.derivative_step(x)
        step_y = math.derivative_step(y)
        fd_x = math.central_difference(lambda t: model.hamiltonian(t, y), x,
                                       step_x)
        fd_y = math.central_difference(lambda t: model.hamiltonian(x, t), y,
                                       step_y)
        s = float(model.s_factor(x, y))
        exact_x = -float(model.f(x, y)) / s
        exact_y = y / s
        worst = max(worst,
                    abs(fd_x - exact_x) / max(abs(exact_x), 1e-3),
                    abs(fd_y - exact_y) / max(abs(exact_y), 1e-3))
    return worst
