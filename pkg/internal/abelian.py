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

"""Abelian integrals and Melnikov functions along the ovals of a model.

Every line integral runs clockwise, the direction of the flow x' = y/s, so
that the integral of y dx over an oval is the enclosed area.
"""

import dataclasses
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

from absl import logging
import numpy as np
from scipy import integrate

from internal import core_model
from internal import errors
from internal import math
from internal import quadrature
from internal import utils

_Integrand = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclasses.dataclass(frozen=True)
class Oval:
    """The closed level curve H = h, traversed clockwise."""
    h: float
    x_minus: float
    x_plus: float
    model_ref: core_model.PlanarModel
    orientation: str = 'clockwise'


def make_oval(model: core_model.PlanarModel, h: float,
              xtol: float = 1e-13) -> Oval:
    x_minus, x_plus = core_model.turning_points(model, h, xtol=xtol)
    return Oval(h=float(h), x_minus=x_minus, x_plus=x_plus, model_ref=model)


@dataclasses.dataclass(frozen=True)
class MonomialPerturbation:
    """sum_j d_j (x - x_shift)^(2 q_j) y^(2 p_j - 1)."""
    terms: Tuple[Tuple[int, int, float], ...] = ()
    x_shift: float = 0.

    def __post_init__(self):
        terms = tuple((int(q), int(p), float(d)) for q, p, d in self.terms)
        for q, p, _ in terms:
            if q < 0 or p < 1:
                raise errors.InvalidParams(
                    f'Monomial exponents need q >= 0 and p >= 1, got ({q}, {p}).')
        pairs = [(q, p) for q, p, _ in terms]
        if len(set(pairs)) != len(pairs):
            raise errors.InvalidParams(f'Repeated exponent pairs in {pairs}.')
        object.__setattr__(self, 'terms', terms)

    @property
    def weights(self) -> List[int]:
        return [q + p for q, p, _ in self.terms]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([d for _, _, d in self.terms])

    @property
    def is_zero(self) -> bool:
        return all(d == 0 for _, _, d in self.terms)

    def check_distinct_weights(self):
        weights = self.weights
        if len(set(weights)) != len(weights):
            raise errors.DuplicateWeight(
                f'Weights m_j = q_j + p_j must be distinct, got {weights}.')

    def scaled(self, factor: float) -> 'MonomialPerturbation':
        return MonomialPerturbation(
            tuple((q, p, factor * d) for q, p, d in self.terms), self.x_shift)

    def integrand(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        total = np.zeros(np.broadcast(x, y).shape)
        dx = x - self.x_shift
        for q, p, d in self.terms:
            total = total + d * dx**(2 * q) * y**(2 * p - 1)
        return total


@dataclasses.dataclass(frozen=True)
class FunctionPerturbation:
    """A closed-form integrand g(x, y, 0) / s(x, y)."""
    fn: _Integrand
    label: str = ''
    is_zero: bool = False

    def integrand(self, x, y):
        return self.fn(x, y)


PerturbationSpec = Union[MonomialPerturbation, FunctionPerturbation]


class Sample(NamedTuple):
    h: float
    M: float
    quad_error: float


@dataclasses.dataclass(frozen=True)
class MelnikovCurve:
    samples: Tuple[Sample, ...]

    @property
    def h_range(self) -> Tuple[float, float]:
        return self.samples[0].h, self.samples[-1].h

    @property
    def h(self) -> np.ndarray:
        return np.array([s.h for s in self.samples])

    @property
    def values(self) -> np.ndarray:
        return np.array([s.M for s in self.samples])

    @property
    def errors(self) -> np.ndarray:
        return np.array([s.quad_error for s in self.samples])

    def rows(self):
        return [tuple(s) for s in self.samples]


def _branches(model: core_model.PlanarModel, x: np.ndarray, h: float):
    """Upper and lower y on H(x, y) = h at every node."""
    sep = model.separable
    if sep is not None:
        with np.errstate(invalid='ignore', divide='ignore'):
            r = (h - sep.B(x)) / sep.A(x)
        floor = -1e-9 * max(abs(h), 1e-300) / np.abs(sep.A(x))
        if np.any(~np.isfinite(r)) or np.any(r < floor):
            bad = x[~np.isfinite(r) | (r < floor)][0]
            raise errors.BranchSolveFailure(
                f'No real y at x = {bad} on the oval h = {h}.')
        y = math.safe_sqrt(r)
        return y, -y
    upper = np.array([core_model.solve_branch(model, xi, h, +1) for xi in x])
    lower = np.array([core_model.solve_branch(model, xi, h, -1) for xi in x])
    return upper, lower


def integrate_oval_estimate(oval: Oval,
                            integrand: _Integrand,
                            tol: float = 1e-10,
                            n_min: int = 32,
                            n_max: int = 4096,
                            tanh_sinh_max_level: int = 12
                           ) -> quadrature.QuadResult:
    """Clockwise integral of integrand(x, y) dx with its error estimate.

    The oval integral is the x-integral of integrand(x, y+) - integrand(x, y-)
    between the turning points. With x = mid - half cos(theta) both branches
    become analytic in theta (y+ carries a factor sin(theta)), so
    Gauss-Legendre in theta converges geometrically. Close to a separatrix the
    convergence slows down and tanh-sinh in x takes over.

    Args:
      oval: the level curve.
      integrand: vectorized (x, y) -> value.
      tol: absolute tolerance on the returned value.
      n_min: first Gauss-Legendre rule.
      n_max: largest Gauss-Legendre rule before falling back.
      tanh_sinh_max_level: step halvings allowed in the fallback.

    Returns:
      A QuadResult with the value and |fine - coarse| as error.

    Raises:
      BranchSolveFailure: when some interior x has no real branch.
      ToleranceNotMet: when neither rule reaches `tol`.
    """
    model = oval.model_ref
    mid = 0.5 * (oval.x_plus + oval.x_minus)
    half = 0.5 * (oval.x_plus - oval.x_minus)

    def in_x(x):
        y_plus, y_minus = _branches(model, x, oval.h)
        return integrand(x, y_plus) - integrand(x, y_minus)

    def in_theta(theta):
        return in_x(mid - half * np.cos(theta)) * half * np.sin(theta)

    result = quadrature.adaptive_gauss(in_theta, 0., np.pi, tol, n_min, n_max)
    if result is not None:
        return result
    logging.warning('Gauss-Legendre stalled at h = %r on %s; using tanh-sinh.',
                    oval.h, model.name or 'model')
    result = quadrature.adaptive_tanh_sinh(in_x, oval.x_minus, oval.x_plus, tol,
                                           max_level=tanh_sinh_max_level)
    if not result.error <= tol:
        raise errors.ToleranceNotMet(
            f'Oval integral at h = {oval.h} reached error {result.error:.3e} > '
            f'{tol:.3e}.', h=oval.h)
    return result


def integrate_oval(oval: Oval, integrand: _Integrand, **kwargs) -> float:
    """Clockwise integral of integrand(x, y) dx over the oval."""
    return integrate_oval_estimate(oval, integrand, **kwargs).value


def _as_model(model) -> core_model.PlanarModel:
    if isinstance(model, core_model.SeparableHamiltonian):
        planar = model.to_planar_model()
        return planar.with_annulus(core_model.locate_ceiling(planar))
    if model.separable is None:
        raise errors.InvalidParams(
            f'{model.name or "model"} is not of the form A(x) y^2 + B(x).')
    return model


def abelian_J(model, D: Callable[[np.ndarray], np.ndarray], p: int, h: float,
              **kwargs) -> float:
    """J(h) = clockwise integral of D(x) y^p dx; exactly 0 for even p."""
    if p < 1:
        raise errors.InvalidParams(f'p = {p} must be positive.')
    if p % 2 == 0:
        return 0.
    model = _as_model(model)
    oval = make_oval(model, h)
    return integrate_oval(oval, lambda x, y: D(x) * y**p, **kwargs)


def K_closed_form(p: int, n: int) -> float:
    """(2p-1)!! (2n-1)!! pi / (8^(p+n) (p+n)!), evaluated as a running ratio."""
    if p < 1 or n < 0:
        raise errors.InvalidParams(f'K needs p >= 1 and n >= 0, got ({p}, {n}).')
    if p + n > 20:
        raise errors.OrderOverflow(f'p + n = {p + n} exceeds the guard 20.')
    value = np.pi
    for k in range(1, p + n + 1):
        value /= 8 * k
    for k in range(1, p + 1):
        value *= 2 * k - 1
    for k in range(1, n + 1):
        value *= 2 * k - 1
    return value


def K_quadrature(p: int, n: int, tol: float = 1e-13) -> float:
    """Integral over [0, 1] of (z(1-z))^((2p-1)/2) (z-1/2)^(2n) dz.

    With z = (1 - cos t)/2 it is 4^-(p+n) times the integral of
    sin^(2p) cos^(2n) over [0, pi].
    """
    fn = lambda t: np.sin(t)**(2 * p) * np.cos(t)**(2 * n)
    result = quadrature.adaptive_gauss(fn, 0., np.pi, tol, n_min=16,
                                       n_max=1024)
    if result is None:
        raise errors.ToleranceNotMet(f'K({p}, {n}) quadrature did not settle.')
    return result.value / 4.**(p + n)


def J_asymptotic_leading(model, d: float, n: int, p: int) -> Tuple[float, int]:
    """Leading term coefficient * h^(p+n) of J with D = d (x-x*)^(2n) + ...

    and y-power 2p-1, for H = A(x) y^2 + B(x) with A(x*) = a^2 and
    B(x) = (x-x*)^2 / b^2 + ....
    """
    sep = model if isinstance(model,
                              core_model.SeparableHamiltonian) else (
                                  model.separable)
    if sep is None:
        raise errors.InvalidParams('Leading asymptotics need a separable model.')
    a, b = sep.a_const, sep.b_const
    coefficient = (2 * d * b**(2 * n + 1) / a**(2 * p - 1) *
                   math.double_factorial(2 * p - 1) *
                   math.double_factorial(2 * n - 1) * np.pi /
                   (2.**(p + n) * float(np.prod(np.arange(1, p + n + 1)))))
    return coefficient, p + n


def interior_integral(model: core_model.PlanarModel, h: float,
                      integrand: _Integrand) -> float:
    """2-D integral of integrand(x, y) over the region enclosed by the oval."""
    oval = make_oval(model, h)
    y_plus = lambda x: float(_branches(model, np.array([x]), h)[0][0])
    y_minus = lambda x: float(_branches(model, np.array([x]), h)[1][0])
    value, _ = integrate.dblquad(lambda y, x: integrand(x, y), oval.x_minus,
                                 oval.x_plus, y_minus, y_plus, epsabs=1e-13,
                                 epsrel=1e-11)
    return value


def oval_period(model: core_model.PlanarModel, h: float,
                tol: float = 1e-8) -> float:
    """Period of the unperturbed flow around the oval, in its own time."""
    oval = make_oval(model, h)
    return integrate_oval(oval,
                          lambda x, y: model.s_factor(x, y) / y,
                          tol=tol * max(1., abs(h)))


def default_h_grid(model: core_model.PlanarModel,
                   n: int = 64,
                   lo_frac: float = 1e-4,
                   hi_frac: float = 0.999,
                   h_max: float = 2.) -> np.ndarray:
    """Log-spaced energies inside the annulus.

    For an unbounded annulus the grid spans lo_frac * h_max to h_max.
    """
    if np.isfinite(model.h_ceiling):
        return math.log_grid(lo_frac * model.h_ceiling,
                             hi_frac * model.h_ceiling, n)
    return math.log_grid(lo_frac * h_max, h_max, n)


def melnikov_value(model: core_model.PlanarModel,
                   pert: PerturbationSpec,
                   h: float,
                   tol: float = 1e-10,
                   **kwargs) -> Tuple[float, float]:
    """M(h) and its quadrature error estimate."""
    try:
        if pert.is_zero:
            core_model.turning_points(model, h)
            return 0., 0.
        oval = make_oval(model, h)
        result = integrate_oval_estimate(oval, pert.integrand, tol=tol,
                                         **kwargs)
    except errors.MelnikovError as e:
        if getattr(e, 'h', None) is None:
            e.h = h
            e.args = (f'h = {h!r}: {e}',) + e.args[1:]
        raise
    return result.value, result.error


def melnikov_curve(model: core_model.PlanarModel,
                   pert: PerturbationSpec,
                   h_grid: Sequence[float],
                   tol: float = 1e-10,
                   threads: int = 1,
                   progress: bool = False,
                   **kwargs) -> MelnikovCurve:
    """Samples M(h) on the grid, in grid order."""
    h_grid = np.asarray(h_grid, dtype=np.float64)
    if h_grid.size == 0:
        raise errors.InvalidParams('The h-grid is empty.')
    if np.any(np.diff(h_grid) <= 0):
        raise errors.InvalidParams('The h-grid must be strictly increasing.')
    if h_grid[0] <= 0 or h_grid[-1] >= model.h_ceiling:
        raise errors.EnergyOutOfRange(
            f'The h-grid [{h_grid[0]}, {h_grid[-1]}] leaves the annulus '
            f'(0, {model.h_ceiling}).')

    def sample(h):
        value, error = melnikov_value(model, pert, h, tol=tol, **kwargs)
        return Sample(float(h), value, error)

    samples = utils.parallel_map(sample, h_grid, threads=threads,
                                 desc='melnikov', progress=progress)
    return MelnikovCurve(tuple(samples))
