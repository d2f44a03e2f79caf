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

"""Traveling-wave reductions of perturbed PDE families to planar models.

Every constructor substitutes u(x, t) = U(x - c t), integrates the resulting
ODE once when its order exceeds two (introducing the constant k), and returns
the unperturbed Hamiltonian model together with the Melnikov integrand
g_c(x, y, 0) / s_c(x, y). The forcing g(u, u_x, u_t) enters through its
slice g(x, y, -c y) only; epsilon lives in dynamics_verify.
"""

import dataclasses
import enum
from typing import Any, Callable, Dict, Mapping, Sequence, Tuple, Union

from absl import logging
import numpy as np
from numpy.polynomial import Polynomial
from scipy import interpolate

from internal import abelian
from internal import core_model
from internal import errors
from internal import math
from internal import quadrature

# Working half-width around the center for models without closed-form
# potentials.
_CH_HALF_WIDTH = 8.
_CH_SPLINE_TOL = 1e-11
_CH_MAX_ROUNDS = 30
_CH_GAUSS_NODES = 24


class Family(enum.Enum):
    TOY = 'toy'
    OSTROVSKY = 'ostrovsky'
    KLEIN_GORDON = 'klein_gordon'
    SINE_GORDON = 'sine_gordon'
    GEN_KDV = 'gen_kdv'
    ROSENAU_HYMAN = 'rosenau_hyman'
    CAMASSA_HOLM_CLASS = 'camassa_holm_class'
    BOUSSINESQ = 'boussinesq'


@dataclasses.dataclass(frozen=True)
class PolynomialForcing:
    """g(u, u_x, u_t) = sum coef * u^i * u_x^j * u_t^k."""
    terms: Tuple[Tuple[int, int, int, float], ...] = ()

    def __post_init__(self):
        terms = tuple(
            (int(i), int(j), int(k), float(coef)) for i, j, k, coef in self.terms)
        if any(min(t[:3]) < 0 for t in terms):
            raise errors.InvalidParams(
                f'Forcing exponents must be non-negative: {terms}.')
        object.__setattr__(self, 'terms', terms)

    @property
    def is_zero(self) -> bool:
        return all(coef == 0 for *_, coef in self.terms)

    def __call__(self, u, ux, ut):
        u = np.asarray(u, dtype=np.float64)
        total = np.zeros(np.broadcast(u, ux, ut).shape)
        for i, j, k, coef in self.terms:
            total = total + coef * u**i * ux**j * ut**k
        return total


Forcing = Union[PolynomialForcing, Callable[..., np.ndarray], None]


def _traveling_slice(g: Forcing, c: float):
    """(x, y) -> g(x, y, -c y), or None for no forcing."""
    if g is None or getattr(g, 'is_zero', False):
        return None
    return lambda x, y: g(x, y, -c * y)


@dataclasses.dataclass(frozen=True)
class FamilyInstance:
    family: Family
    params: Mapping[str, Any]
    model: core_model.PlanarModel
    perturbation: abelian.PerturbationSpec
    notes: Tuple[str, ...] = ()

    @property
    def pert_integrand(self):
        return self.perturbation.integrand

    @property
    def c(self) -> float:
        return float(self.params['c'])

    def with_perturbation(self,
                          perturbation: abelian.PerturbationSpec
                         ) -> 'FamilyInstance':
        return dataclasses.replace(self, perturbation=perturbation)


def _perturbation(slice_fn, weight, label) -> abelian.FunctionPerturbation:
    """g_c / s_c as `weight(x) * slice_fn(x, y)`."""
    if slice_fn is None:
        return abelian.FunctionPerturbation(lambda x, y: 0. * x * y, label,
                                            is_zero=True)
    return abelian.FunctionPerturbation(
        lambda x, y: weight(x) * slice_fn(x, y), label)


def _poly_field(poly: Polynomial) -> core_model.ScalarField1D:
    d1 = poly.deriv(1)
    d2 = poly.deriv(2)
    return core_model.ScalarField1D(poly, d1, d2)


def _constant_field(value: float) -> core_model.ScalarField1D:
    return _poly_field(Polynomial([value]))


def _finish(family, params, separable, domain, perturbation, notes=()):
    """Attaches the energy ceiling and wraps everything in a FamilyInstance."""
    name = family.value
    model = separable.to_planar_model(domain=domain, name=name)
    ceiling = core_model.locate_ceiling(model)
    model = model.with_annulus(ceiling)
    logging.info('%s: center %r, energy ceiling %r.', name, model.center_x,
                 ceiling.h)
    return FamilyInstance(family=family, params=dict(params), model=model,
                          perturbation=perturbation, notes=tuple(notes)), ceiling


def _separable(A: core_model.ScalarField1D, B: core_model.ScalarField1D,
               center_x: float) -> core_model.SeparableHamiltonian:
    """Shifts B to vanish at the center; tolerates H_xx = 0 there."""
    B = B.shifted(float(B(center_x)))
    if float(B.second_derivative(center_x)) > 0:
        return core_model.SeparableHamiltonian.from_fields(A, B, center_x)
    a2 = float(A(center_x))
    if a2 <= 0:
        raise errors.NoCenter(f'A({center_x}) = {a2} must be positive.')
    # Degenerate center: B'' vanishes, so b is infinite.
    return core_model.SeparableHamiltonian(A=A, B=B, center_x=float(center_x),
                                           a_const=np.sqrt(a2),
                                           b_const=np.inf)


# Second order families.


def toy_speed_constant(a, b, d, c) -> float:
    c2 = a - b * c + d * c**2
    if c2 <= 0:
        raise errors.InvalidSpeed(f'C^2 = a - b c + d c^2 = {c2} must be > 0.')
    return float(np.sqrt(c2))


def make_toy(a: float = 1.,
             b: float = 0.,
             d: float = 0.,
             c: float = 0.,
             g_odd_coeffs: Union[Sequence[float], Mapping[int, float]] = ()
            ) -> FamilyInstance:
    """u + a u_xx + b u_xt + d u_tt + eps g(u_x, u_t) = 0.

    H = x^2 / (2 C^2) + y^2 / 2 with C^2 = a - b c + d c^2, s = 1 and an
    unbounded annulus. The perturbation is given directly as the
    coefficients g_j of g_c(y) = sum_j g_j y^j, where
    g_c(y) = -g(y, -c y) / C^2.
    """
    C = toy_speed_constant(a, b, d, c)
    coeffs = _toy_coeffs(g_odd_coeffs)
    poly = Polynomial(coeffs) if coeffs else None
    separable = core_model.SeparableHamiltonian.from_fields(
        _constant_field(0.5), _poly_field(Polynomial([0., 0., 0.5 / C**2])), 0.)
    if poly is None or not np.any(poly.coef):
        pert = _perturbation(None, None, 'toy')
    else:
        pert = abelian.FunctionPerturbation(lambda x, y: poly(y) + 0. * x,
                                            'toy')
    params = dict(a=a, b=b, d=d, c=c, C=C, g_c=list(coeffs))
    instance, _ = _finish(Family.TOY, params, separable, core_model.Domain(),
                          pert)
    return instance


def _toy_coeffs(g) -> list:
    if isinstance(g, Mapping):
        if not g:
            return []
        out = [0.] * (max(int(j) for j in g) + 1)
        for j, value in g.items():
            out[int(j)] = float(value)
        return out
    return [float(v) for v in g]


def toy_reference_melnikov(C: float, g_c_coeffs, h):
    """Closed-form Melnikov function of the toy family, clockwise.

    M(h) = 2 C h sum_i g_(2i+1) 2^i I_(2i+2) h^i, where I_2n is the integral
    of sin^2n over one period. Even powers of y integrate to zero.
    """
    coeffs = _toy_coeffs(g_c_coeffs)
    h = np.asarray(h, dtype=np.float64)
    total = np.zeros_like(h)
    for j in range(1, len(coeffs), 2):
        i = (j - 1) // 2
        i_2n = math.sin_power_integral(2 * i + 2)
        total = total + coeffs[j] * 2.**i * i_2n * h**i
    return 2 * C * h * total


def toy_coefficients_for_zeros(C: float,
                               targets: Sequence[float]) -> Dict[int, float]:
    """g_c coefficients whose toy Melnikov function vanishes at `targets`.

    M(h) / h is proportional to prod_j (h - h_j) = sum_i c_i h^i, which fixes
    g_(2i+1) = c_i / (2 C 2^i I_(2i+2)).
    """
    targets = np.asarray(targets, dtype=np.float64)
    if np.any(targets <= 0) or np.any(np.diff(targets) <= 0):
        raise errors.TargetOutOfRange(
            f'Targets {targets.tolist()} must be positive and increasing.')
    c_i = Polynomial.fromroots(targets).coef if targets.size else np.ones(1)
    return {
        2 * i + 1:
            float(ci / (2 * C * 2.**i * math.sin_power_integral(2 * i + 2)))
        for i, ci in enumerate(c_i)
    }


def make_ostrovsky(c: float = 1., g: Forcing = None) -> FamilyInstance:
    """(u_t + u u_x)_x - u + eps g = 0.

    H = (x - c)^2 y^2 / 2 + c x^2 / 2 - x^3 / 3 on x < c, s = (x - c)^-2,
    g_c = -g(x, y, -c y) / (x - c), integrand (x - c)^2 g_c. The saddle
    (c, 0) sits on the boundary line where s blows up; h_ceiling = c^3 / 6.
    """
    if c <= 0:
        raise errors.InvalidSpeed(f'Ostrovsky waves need c > 0, got c = {c}.')
    A = _poly_field(Polynomial([c**2 / 2, -c, 0.5]))
    B = _poly_field(Polynomial([0., 0., c / 2, -1. / 3]))
    separable = _separable(A, B, 0.)
    pert = _perturbation(_traveling_slice(g, c), lambda x: -(x - c),
                         'ostrovsky')
    instance, _ = _finish(Family.OSTROVSKY, dict(c=c), separable,
                          core_model.Domain(x_hi=c), pert)
    return instance


def make_klein_gordon(lam: float = 1.,
                      p_exp: int = 1,
                      c: float = np.sqrt(2.),
                      g: Forcing = None) -> FamilyInstance:
    """u_tt - u_xx + lam u^p + eps g = 0, p odd.

    H = C x^(p+1) / (p+1) + y^2 / 2 with C = lam / (c^2 - 1), s = 1,
    integrand -g(x, y, -c y) / (c^2 - 1). For p >= 3 the center is
    degenerate (H_xx = 0) but still a strict minimum of H.
    """
    if lam <= 0 or int(p_exp) != p_exp or p_exp < 1 or p_exp % 2 == 0 or (
            c**2 <= 1):
        raise errors.InvalidParams(
            f'Klein-Gordon needs lam > 0, odd p and c^2 > 1; got lam = {lam}, '
            f'p = {p_exp}, c = {c}.')
    p_exp = int(p_exp)
    C = lam / (c**2 - 1)
    coef = np.zeros(p_exp + 2)
    coef[-1] = C / (p_exp + 1)
    separable = _separable(_constant_field(0.5), _poly_field(Polynomial(coef)),
                           0.)
    pert = _perturbation(_traveling_slice(g, c), lambda x: -1 / (c**2 - 1),
                         'klein_gordon')
    instance, _ = _finish(Family.KLEIN_GORDON, dict(lam=lam, p_exp=p_exp, c=c,
                                                     C=C), separable,
                          core_model.Domain(), pert)
    return instance


def make_sine_gordon(c: float = np.sqrt(2.), g: Forcing = None) -> FamilyInstance:
    """u_tt - u_xx + sin u + eps g = 0.

    H = C (1 - cos x) + y^2 / 2 with C = 1 / (c^2 - 1), s = 1, saddles at
    +-pi and h_ceiling = 2 C. Integrand g(x, y, -c y) / (1 - c^2).
    """
    if c <= 1:
        raise errors.InvalidSpeed(f'sine-Gordon waves need c > 1, got c = {c}.')
    C = 1 / (c**2 - 1)
    B = core_model.ScalarField1D(lambda x: C * (1 - np.cos(x)),
                                 lambda x: C * np.sin(x),
                                 lambda x: C * np.cos(x))
    separable = _separable(_constant_field(0.5), B, 0.)
    pert = _perturbation(_traveling_slice(g, c), lambda x: 1 / (1 - c**2),
                         'sine_gordon')
    instance, _ = _finish(Family.SINE_GORDON, dict(c=c, C=C), separable,
                          core_model.Domain(), pert)
    return instance


# Higher order families.


def _quadratic_family(family, params, alpha, beta, gamma, weight, g, c,
                      notes=()):
    """y' = alpha + beta x + gamma x^2 + eps g_c, the common planar system.

    H = -alpha x - beta x^2 / 2 - gamma x^3 / 3 + y^2 / 2, s = 1. A period
    annulus exists when the quadratic has two distinct real roots; the root
    with beta + 2 gamma x < 0 is the center and the other one the saddle.
    """
    disc = beta**2 - 4 * alpha * gamma
    if gamma == 0 or disc <= 0:
        raise errors.NoPeriodAnnulus(
            f'alpha + beta x + gamma x^2 with (alpha, beta, gamma) = '
            f'({alpha!r}, {beta!r}, {gamma!r}) has no two distinct real roots.')
    roots = np.sort(np.real(Polynomial([alpha, beta, gamma]).roots()))
    center = [x for x in roots if beta + 2 * gamma * x < 0]
    if not center:
        raise errors.NoCenter(f'No center among the equilibria {roots}.')
    center_x = float(center[0])
    B = _poly_field(Polynomial([0., -alpha, -beta / 2, -gamma / 3]))
    separable = _separable(_constant_field(0.5), B, center_x)
    pert = _perturbation(_traveling_slice(g, c), lambda x: weight + 0. * x,
                         family.value)
    params = dict(params, alpha=alpha, beta=beta, gamma=gamma,
                  equilibria=roots.tolist())
    instance, _ = _finish(family, params, separable, core_model.Domain(), pert,
                          notes)
    return instance


def make_gen_kdv(a: float = 0.,
                 b: float = -6.,
                 d: float = 0.,
                 p: float = 1.,
                 q: float = 0.,
                 r: float = 0.,
                 s: float = 0.,
                 c: float = 1.,
                 k: float = 0.,
                 g: Forcing = None) -> FamilyInstance:
    """u_t + a u_x + b u u_x + d u u_t + p u_xxx + q u_xxt + r u_xtt + s u_ttt.

    Integrated once: (a - c) U + ((b - d c) / 2) U^2 + C U'' + eps g = k with
    C = p - q c + r c^2 - s c^3, so alpha = k / C, beta = (c - a) / C and
    gamma = (d c - b) / (2 C). Integrand -g(x, y, -c y) / C.
    """
    C = p - q * c + r * c**2 - s * c**3
    if C == 0:
        raise errors.ZeroDispersion(
            f'C = p - q c + r c^2 - s c^3 vanishes at c = {c}.')
    notes = ('gamma carries the 1/2 of the (b - d c) U^2 / 2 term.',)
    params = dict(a=a, b=b, d=d, p=p, q=q, r=r, s=s, c=c, k=k, C=C)
    return _quadratic_family(Family.GEN_KDV, params, k / C, (c - a) / C,
                             (d * c - b) / (2 * C), -1 / C, g, c, notes)


def make_boussinesq(a: float = -1.,
                    b: float = 0.,
                    d: float = 1.,
                    e: float = 0.5,
                    p: float = -1.,
                    q: float = 0.,
                    r: float = 0.,
                    s: float = 0.,
                    f: float = 0.,
                    c: float = 2.,
                    k: float = 0.,
                    g: Forcing = None) -> FamilyInstance:
    """a u_xx + b u_xt + d u_tt + 2e (u u_xx + u_x^2) + p u_xxxx + ... + f u_tttt.

    Integrated twice (k_1 = 0): C U + e U^2 + D U'' + eps g = k with
    C = a - b c + d c^2 and D = p - q c + r c^2 - s c^3 + f c^4. The same
    planar system as the generalized KdV family with alpha = k / D,
    beta = -C / D, gamma = -e / D; integrand -g(x, y, -c y) / D.
    """
    D = p - q * c + r * c**2 - s * c**3 + f * c**4
    if D == 0:
        raise errors.ZeroDispersion(
            f'D = p - q c + r c^2 - s c^3 + f c^4 vanishes at c = {c}.')
    C = a - b * c + d * c**2
    notes = ('C = a - b c + d c^2 (read as d c^2, not d^2 c).',)
    params = dict(a=a, b=b, d=d, e=e, p=p, q=q, r=r, s=s, f=f, c=c, k=k, C=C,
                  D=D)
    return _quadratic_family(Family.BOUSSINESQ, params, k / D, -C / D, -e / D,
                             -1 / D, g, c, notes)


def make_rosenau_hyman(a: float = 1.,
                       n: int = 2,
                       c: float = 1.,
                       k: float = 0.,
                       g: Forcing = None) -> FamilyInstance:
    """u_t + a (u^n)_x + (u^n)_xxx + eps grad g . (u_x, u_xx, u_xt, 0) = 0.

    H = (n/2) x^(2(n-1)) y^2 - (k/n) x^n - c x^(n+1)/(n+1) + a x^(2n)/(2n)
    on x > 0, s = x^(2(1-n)) / n. The equilibria solve a x^n - c x - k = 0;
    the smallest one with H_xx > 0 is the center. Integrand
    -x^(n-1) g(x, y, -c y).
    """
    if int(n) != n or n < 2:
        raise errors.InvalidParams(f'n = {n} must be an integer >= 2.')
    if a == 0:
        raise errors.InvalidParams('Rosenau-Hyman needs a != 0.')
    n = int(n)
    A_coef = np.zeros(2 * n - 1)
    A_coef[-1] = n / 2
    B_coef = np.zeros(2 * n + 1)
    B_coef[n] += -k / n
    B_coef[n + 1] += -c / (n + 1)
    B_coef[2 * n] += a / (2 * n)
    B_poly = Polynomial(B_coef)
    eq_coef = np.zeros(n + 1)
    eq_coef[0], eq_coef[1] = -k, -c
    eq_coef[n] += a
    roots = Polynomial(eq_coef).roots()
    positive = sorted(
        float(np.real(x)) for x in roots if abs(np.imag(x)) < 1e-12 and
        np.real(x) > 0)
    centers = [x for x in positive if B_poly.deriv(2)(x) > 0]
    if not centers:
        raise errors.NoCenter(
            f'No positive equilibrium with H_xx > 0 among {positive}.')
    center_x = centers[0]
    separable = _separable(_poly_field(Polynomial(A_coef)), _poly_field(B_poly),
                           center_x)
    pert = _perturbation(_traveling_slice(g, c), lambda x: -x**(n - 1),
                         'rosenau_hyman')
    params = dict(a=a, n=n, c=c, k=k, equilibria=positive)
    instance, _ = _finish(Family.ROSENAU_HYMAN, params, separable,
                          core_model.Domain(x_lo=0.), pert)
    return instance


# Camassa-Holm class.


def _clipped_power(base, exponent):
    """base^exponent with base clipped at 0, returned as numpy floats."""
    base = np.maximum(np.asarray(base, dtype=np.float64), 0.)
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.power(base, exponent)


@dataclasses.dataclass(frozen=True)
class _WeightFactor:
    """(C + d x) s_c(x) and the matching A_sep = 1 / (2 s_c).

    Everything is written in terms of 1 / phi so that a bounded integrand
    can be evaluated on the singular line C + d x = 0 itself.
    """
    C: float
    d: float
    beta: float

    @property
    def bounded_at_singular_line(self) -> bool:
        """Whether 1 / phi stays finite as C + d x -> 0."""
        return self.d != 0 and 1 - 2 * self.beta / self.d <= 0

    def inverse(self, x):
        if self.d == 0:
            return np.exp(2 * self.beta * np.asarray(x) / self.C) / self.C
        return _clipped_power(self.C + self.d * np.asarray(x),
                              2 * self.beta / self.d - 1)

    def inverse_prime(self, x):
        if self.d == 0:
            return 2 * self.beta / self.C**2 * np.exp(
                2 * self.beta * np.asarray(x) / self.C)
        return (2 * self.beta - self.d) * _clipped_power(
            self.C + self.d * np.asarray(x), 2 * self.beta / self.d - 2)

    def a_field(self) -> core_model.ScalarField1D:
        C, d, beta = self.C, self.d, self.beta
        if d == 0:
            return core_model.ScalarField1D(
                lambda x: 0.5 * np.exp(2 * beta * x / C),
                lambda x: beta / C * np.exp(2 * beta * x / C),
                lambda x: 2 * beta**2 / C**2 * np.exp(2 * beta * x / C))
        e = 2 * beta / d
        return core_model.ScalarField1D(
            lambda x: 0.5 * _clipped_power(C + d * x, e),
            lambda x: beta * _clipped_power(C + d * x, e - 1),
            lambda x: beta * (2 * beta - d) * _clipped_power(C + d * x, e - 2))


class HermitePotential:
    """B(x) = integral from x_ref to x of w, cached on an adaptive mesh.

    Node values come from Gauss-Legendre on each mesh interval, accumulated
    outward from x_ref; node slopes are w itself. Intervals are halved until
    the cubic Hermite interpolant matches a direct quadrature at every
    midpoint to `tol` (relative to max(1, |B|)). The field reports the
    derivative of the interpolant, so H_x = -f / s holds for the cached H.
    """

    def __init__(self, w, w_prime, lo, hi, x_ref, n_init=64,
                 tol=_CH_SPLINE_TOL):
        self._w = w
        self._w_prime = w_prime
        nodes = np.union1d(np.linspace(lo, hi, n_init), [x_ref])
        values = self._cumulative(nodes, x_ref)
        for _ in range(_CH_MAX_ROUNDS):
            spline = interpolate.CubicHermiteSpline(nodes, values, w(nodes))
            left, right = nodes[:-1], nodes[1:]
            mids = 0.5 * (left + right)
            direct = np.array([
                values[i] + self._segment(a, m) if m > x_ref else
                values[i + 1] - self._segment(m, b)
                for i, (a, m, b) in enumerate(zip(left, mids, right))
            ])
            bad = np.abs(spline(mids) - direct) > tol * np.maximum(
                1., np.abs(direct))
            if not np.any(bad):
                break
            order = np.argsort(np.concatenate([nodes, mids[bad]]))
            nodes = np.concatenate([nodes, mids[bad]])[order]
            values = np.concatenate([values, direct[bad]])[order]
        else:
            logging.warning('Hermite potential did not reach %.1e on %d nodes.',
                            tol, nodes.size)
        self.nodes = nodes
        self._spline = interpolate.CubicHermiteSpline(nodes, values, w(nodes))
        self._slope = self._spline.derivative()

    def _segment(self, a, b):
        points, weights = quadrature.gaussian_quadrature(a, b, _CH_GAUSS_NODES)
        return float(np.dot(weights, self._w(points)))

    def _cumulative(self, nodes, x_ref):
        steps = np.array(
            [self._segment(a, b) for a, b in zip(nodes[:-1], nodes[1:])])
        ref = int(np.searchsorted(nodes, x_ref))
        values = np.zeros(nodes.size)
        values[ref + 1:] = np.cumsum(steps[ref:])
        values[:ref] = -np.cumsum(steps[:ref][::-1])[::-1]
        return values

    def field(self) -> core_model.ScalarField1D:
        return core_model.ScalarField1D(self._spline, self._slope,
                                        self._w_prime)


CAMASSA_HOLM_PRESETS = {
    'camassa_holm': dict(b=-2., d=1., p=0., q=-1., r=0., s=0.),
    'degasperis_procesi': dict(A_coeffs=(0., 0., 2.), b=-3., d=-1., p=0.,
                               q=-1., r=0., s=0.),
    'constantin_lannes': dict(A_coeffs=(0., 1., 3., -2., 3.), b=28., d=14.,
                              p=1., q=-1., r=0., s=0.),
}


def make_camassa_holm_class(A_coeffs: Sequence[float] = (0., 2., 1.5),
                            b: float = -2.,
                            d: float = 1.,
                            p: float = 0.,
                            q: float = -1.,
                            r: float = 0.,
                            s: float = 0.,
                            c: float = 3.,
                            k: float = 0.,
                            g: Forcing = None,
                            half_width: float = _CH_HALF_WIDTH) -> FamilyInstance:
    """u_t + A'(u) u_x + b u_x u_xx + d u u_xxx + p u_xxx + ... = 0.

    Integrated once: A_c(U) + beta U'^2 + (C + d U) U'' + eps g = k with
    A_c = A(U) - c U, beta = (b - d) / 2 and C = p - q c + r c^2 - s c^3.
    H = y^2 / (2 s_c) + integral of (A_c - k) / ((C + d w) s_c), with
    s_c = (C + d x)^(-2 beta / d), or exp(-2 beta x / C) when d = 0.
    The integrand is g_c / ((C + d x) s_c) with g_c = -g(x, y, -c y) and no
    further divisor, unlike the second order families.

    A(u) is the polynomial sum A_coeffs[i] u^i with A(0) = 0. The potential
    is cached on [center - half_width, center + half_width], clipped to the
    side of the line C + d x = 0 that holds the center.
    """
    A = Polynomial(np.asarray(A_coeffs, dtype=np.float64))
    if A(0.) != 0:
        raise errors.InvalidParams(f'A(0) = {A(0.)} must vanish.')
    C = p - q * c + r * c**2 - s * c**3
    if d == 0 and C == 0:
        raise errors.ZeroDispersion(f'C vanishes at c = {c} with d = 0.')
    beta = (b - d) / 2
    A_c = A - Polynomial([0., c])
    weight = _WeightFactor(C=C, d=d, beta=beta)

    roots = (A_c - k).roots()
    real = sorted(float(np.real(x)) for x in roots if abs(np.imag(x)) < 1e-12)
    slope = A_c.deriv()
    centers = [x for x in real if slope(x) * (C + d * x) > 0]
    if not centers:
        raise errors.NoCenter(f'No equilibrium with H_xx > 0 among {real}.')
    admissible = [x for x in centers if C + d * x > 0]
    if not admissible:
        raise errors.DomainViolation(
            f'Every center candidate {centers} has C + d x <= 0.')
    center_x = min(admissible, key=abs)

    lo, hi = center_x - half_width, center_x + half_width
    if d != 0:
        singular = -C / d
        # A bounded integrand lets the domain reach the singular line itself.
        margin = 0. if weight.bounded_at_singular_line else 1e-4 * max(
            1., abs(singular))
        if d > 0:
            lo = max(lo, singular + margin)
        else:
            hi = min(hi, singular - margin)

    def w(x):
        return (A_c(x) - k) * weight.inverse(x)

    def w_prime(x):
        return (slope(x) * weight.inverse(x) +
                (A_c(x) - k) * weight.inverse_prime(x))

    potential = HermitePotential(w, w_prime, lo, hi, center_x)
    separable = _separable(weight.a_field(), potential.field(), center_x)

    pert = _perturbation(_traveling_slice(g, c), lambda x: -weight.inverse(x),
                         'camassa_holm_class')
    params = dict(A_coeffs=list(A.coef), b=b, d=d, p=p, q=q, r=r, s=s, c=c, k=k,
                  C=C, beta=beta, equilibria=real)
    instance, ceiling = _finish(
        Family.CAMASSA_HOLM_CLASS, params, separable,
        core_model.Domain(x_lo=lo, x_hi=hi), pert,
        ('g_c = -g with no divisor by C + d x.',))
    _check_ch_ceiling(instance, ceiling, singular_left=d > 0,
                      singular_right=d < 0)
    return instance


def _check_ch_ceiling(instance, ceiling, singular_left, singular_right):
    """The annulus must close before the singular line C + d x = 0.

    A tie between an edge and a critical point (a saddle on the boundary
    line, as for the Degasperis-Procesi family) is accepted.
    """
    H = instance.model.hamiltonian
    sides = [(ceiling.left, ceiling.left_kind, singular_left),
             (ceiling.right, ceiling.right_kind, singular_right)]
    levels = [float(H(stop, 0.)) if np.isfinite(stop) else np.inf
              for stop, _, _ in sides]
    for (stop, kind, singular), level, other in zip(sides, levels,
                                                     levels[::-1]):
        if kind != 'edge' or level >= other * (1 - 1e-9):
            continue
        if singular:
            raise errors.DomainViolation(
                f'Ovals near h = {level!r} reach the singular line '
                f'C + d x = 0 at x = {stop!r}.')
        logging.warning(
            'Energy ceiling %r comes from the working domain edge %r; '
            'widen half_width to see the true annulus.', level, stop)


# Presets and registry.


@dataclasses.dataclass(frozen=True)
class FamilySpec:
    family: Family
    constructor: Callable[..., FamilyInstance]
    equation: str
    params: Mapping[str, str]
    validity: str


FAMILIES = {
    Family.TOY: FamilySpec(
        Family.TOY, make_toy, 'u + a u_xx + b u_xt + d u_tt + eps g(u_x, u_t) = 0',
        dict(a='real', b='real', d='real', c='wave speed',
             g_odd_coeffs='coefficients g_j of g_c(y) = sum g_j y^j'),
        'a - b c + d c^2 > 0'),
    Family.OSTROVSKY: FamilySpec(
        Family.OSTROVSKY, make_ostrovsky, '(u_t + u u_x)_x - u + eps g = 0',
        dict(c='wave speed'), 'c > 0; ovals live in x < c'),
    Family.KLEIN_GORDON: FamilySpec(
        Family.KLEIN_GORDON, make_klein_gordon,
        'u_tt - u_xx + lam u^p + eps g = 0',
        dict(lam='positive real', p_exp='odd integer', c='wave speed'),
        'lam > 0, p odd, c^2 > 1'),
    Family.SINE_GORDON: FamilySpec(
        Family.SINE_GORDON, make_sine_gordon,
        'u_tt - u_xx + sin u + eps g = 0', dict(c='wave speed'), 'c > 1'),
    Family.GEN_KDV: FamilySpec(
        Family.GEN_KDV, make_gen_kdv,
        'u_t + a u_x + b u u_x + d u u_t + p u_xxx + q u_xxt + r u_xtt + '
        's u_ttt + eps grad g . (u_x, u_xx, u_xt, 0) = 0',
        dict(a='real', b='real', d='real', p='real', q='real', r='real',
             s='real', c='wave speed', k='integration constant'),
        'C = p - q c + r c^2 - s c^3 != 0; alpha + beta x + gamma x^2 has two '
        'distinct real roots'),
    Family.ROSENAU_HYMAN: FamilySpec(
        Family.ROSENAU_HYMAN, make_rosenau_hyman,
        'u_t + a (u^n)_x + (u^n)_xxx + eps grad g . (u_x, u_xx, u_xt, 0) = 0',
        dict(a='nonzero real', n='integer >= 2', c='wave speed',
             k='integration constant'),
        'a positive root x* of a x^n - c x - k with H_xx(x*, 0) > 0'),
    Family.CAMASSA_HOLM_CLASS: FamilySpec(
        Family.CAMASSA_HOLM_CLASS, make_camassa_holm_class,
        'u_t + A\'(u) u_x + b u_x u_xx + d u u_xxx + p u_xxx + q u_xxt + '
        'r u_xtt + s u_ttt + eps grad g . (u_x, u_xx, u_xt, 0) = 0',
        dict(A_coeffs='polynomial A(u) = sum A_i u^i with A(0) = 0', b='real',
             d='real', p='real', q='real', r='real', s='real', c='wave speed',
             k='integration constant'),
        'a root x* of A_c(x) = k with A_c\'(x*) / (C + d x*) > 0 and '
        'C + d x* > 0'),
    Family.BOUSSINESQ: FamilySpec(
        Family.BOUSSINESQ, make_boussinesq,
        'a u_xx + b u_xt + d u_tt + 2e (u u_xx + u_x^2) + p u_xxxx + '
        'q u_xxxt + r u_xxtt + s u_xttt + f u_tttt + eps G = 0',
        dict(a='real', b='real', d='real', e='nonzero real', p='real',
             q='real', r='real', s='real', f='real', c='wave speed',
             k='integration constant'),
        'D = p - q c + r c^2 - s c^3 + f c^4 != 0; C x + e x^2 = k has two '
        'distinct real roots'),
}

PRESETS = {
    'toy': (Family.TOY, dict(a=1., b=0., d=0., c=0.)),
    'ostrovsky': (Family.OSTROVSKY, dict(c=1.)),
    'klein_gordon': (Family.KLEIN_GORDON, dict(lam=1., p_exp=1, c=np.sqrt(2.))),
    'sine_gordon': (Family.SINE_GORDON, dict(c=np.sqrt(2.))),
    'kdv': (Family.GEN_KDV, dict(a=0., b=-6., d=0., p=1., q=0., r=0., s=0.,
                                 c=1., k=0.)),
    # u_t + u_x + u u_x - u_xxt = 0.
    'bbm': (Family.GEN_KDV, dict(a=1., b=1., d=0., p=0., q=-1., r=0., s=0.,
                                 c=2., k=0.)),
    'rosenau_hyman': (Family.ROSENAU_HYMAN, dict(a=1., n=2, c=1., k=0.)),
    'camassa_holm': (Family.CAMASSA_HOLM_CLASS,
                     dict(A_coeffs=(0., 2., 1.5), c=3., k=0.,
                          **CAMASSA_HOLM_PRESETS['camassa_holm'])),
    'degasperis_procesi': (Family.CAMASSA_HOLM_CLASS,
                           dict(c=1., k=0.,
                                **CAMASSA_HOLM_PRESETS['degasperis_procesi'])),
    # k = 0 leaves only a double root at 0.
    'constantin_lannes': (Family.CAMASSA_HOLM_CLASS,
                          dict(c=1., k=0.01,
                               **CAMASSA_HOLM_PRESETS['constantin_lannes'])),
    'boussinesq': (Family.BOUSSINESQ, dict(a=-1., b=0., d=1., e=0.5, p=-1.,
                                           c=2., k=0.)),
    # u_tt + u u_xx - u_xx + u_x^2 - u_xxtt = 0.
    'modified_boussinesq': (Family.BOUSSINESQ,
                            dict(a=-1., b=0., d=1., e=0.5, p=0., r=-1., c=2.,
                                 k=0.)),
}

# The preset each family is checked against.
FAMILY_DEFAULT_PRESET = {
    Family.TOY: 'toy',
    Family.OSTROVSKY: 'ostrovsky',
    Family.KLEIN_GORDON: 'klein_gordon',
    Family.SINE_GORDON: 'sine_gordon',
    Family.GEN_KDV: 'kdv',
    Family.ROSENAU_HYMAN: 'rosenau_hyman',
    Family.CAMASSA_HOLM_CLASS: 'camassa_holm',
    Family.BOUSSINESQ: 'boussinesq',
}


def parse_family(name: str) -> Family:
    try:
        return Family(name)
    except ValueError:
        raise errors.InvalidParams(
            f'Unknown family {name!r}; expected one of '
            f'{[f.value for f in Family]}.') from None


def make_instance(family: Union[Family, str], **params) -> FamilyInstance:
    """Dispatches to the family constructor; unknown parameters are errors."""
    if isinstance(family, str):
        family = parse_family(family)
    spec = FAMILIES[family]
    allowed = set(spec.params)
    if family != Family.TOY:
        allowed.add('g')
    if family == Family.CAMASSA_HOLM_CLASS:
        allowed.add('half_width')
    unknown = set(params) - allowed
    if unknown:
        raise errors.InvalidParams(
            f'Unknown parameters {sorted(unknown)} for {family.value}; '
            f'allowed: {sorted(allowed)}.')
    return spec.constructor(**params)


def make_preset(name: str, **overrides) -> FamilyInstance:
    if name not in PRESETS:
        raise errors.InvalidParams(
            f'Unknown preset {name!r}; expected one of {sorted(PRESETS)}.')
    family, params = PRESETS[name]
    return make_instance(family, **dict(params, **overrides))


def describe_family(family: Union[Family, str]) -> Dict[str, Any]:
    if isinstance(family, str):
        family = parse_family(family)
    spec = FAMILIES[family]
    return {
        'family': family.value,
        'equation': spec.equation,
        'params': dict(spec.params),
        'validity': spec.validity,
        'presets': sorted(n for n, (f, _) in PRESETS.items() if f == family),
    }


def consistency_error(instance: FamilyInstance, n: int = 100) -> float:
    """Worst dH mismatch on `n` probe points inside the annulus."""
    probes = core_model.probe_points(instance.model, n=n)
    return core_model.hamiltonian_consistency_error(instance.model, probes)


def instance_from_scenario(document: Mapping[str, Any]) -> FamilyInstance:
    """Builds the family and its perturbation from a scenario document.

    The document must already be validated; see cli.load_scenario.
    """
    family = parse_family(document['family'])
    params = dict(document.get('params', {}))
    pert_doc = document.get('perturbation') or {'kind': 'family_gc',
                                                'expr_coeffs': []}
    kind = pert_doc['kind']
    if kind == 'family_gc':
        coeffs = pert_doc.get('expr_coeffs', [])
        if family == Family.TOY:
            params['g_odd_coeffs'] = coeffs
        else:
            params['g'] = PolynomialForcing(tuple(tuple(t) for t in coeffs))
        return make_instance(family, **params)
    instance = make_instance(family, **params)
    pert = abelian.MonomialPerturbation(
        tuple(tuple(t) for t in pert_doc.get('terms', [])),
        x_shift=float(pert_doc.get('x_shift', instance.model.center_x)))
    return instance.with_perturbation(pert)
