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

"""Direct simulation of the perturbed planar system.

The perturbed field in the Hamiltonian time tau is

  x' = H_y,  y' = -H_x + eps * (g_c / s_c)(x, y),

and the Poincare section is {y = 0, x > center_x}, crossed downward by the
clockwise flow. Over one revolution H changes by eps times the clockwise
Melnikov integral, so the section displacement has the sign of eps * M.
"""

import dataclasses
import enum
from typing import List, Optional, Sequence, Tuple

from absl import logging
import numpy as np
from scipy import integrate
from scipy import optimize

from internal import abelian
from internal import core_model
from internal import errors
from internal import math
from internal import pde_catalog
from internal import utils
from internal import zerofind


class Stability(enum.Enum):
    ATTRACTING = 'attracting'
    REPELLING = 'repelling'


@dataclasses.dataclass(frozen=True)
class FixedPoint:
    x_section: float
    h_equiv: float
    stability: Stability


@dataclasses.dataclass(frozen=True)
class ZeroMatch:
    zero_h: float
    cycle_h: float
    relative_gap: float


@dataclasses.dataclass(frozen=True)
class LimitCycleReport:
    epsilon: float
    fixed_points: Tuple[FixedPoint, ...]
    matched_zeros: Tuple[ZeroMatch, ...]
    # Set when every seed is (numerically) fixed, as at eps = 0.
    degenerate: bool = False
    skipped_seeds: Tuple[float, ...] = ()


@dataclasses.dataclass(frozen=True)
class WaveProfile:
    samples: Tuple[Tuple[float, float], ...]  # (s, U(s)).
    period_s: float
    h: float
    c: float
    u_min: float
    u_max: float
    overflow: bool = False


def check_epsilon(epsilon: float, cap: float = 1e-2):
    if not np.isfinite(epsilon) or abs(epsilon) > cap:
        raise errors.InvalidParams(
            f'|epsilon| = {abs(epsilon)!r} exceeds the cap {cap!r}.')


def _field(model: core_model.PlanarModel, integrand, epsilon: float):

    def rhs(t, state):
        del t
        x, y = state[0], state[1]
        h_x, h_y = model.grad(x, y)
        dy = -h_x
        if epsilon:
            dy = dy + epsilon * integrand(x, y)
        return [float(h_y), float(dy)]

    return rhs


def _section_event(direction):

    def event(t, state):
        del t
        return state[1]

    event.terminal = True
    event.direction = direction
    return event


def _escape_events(model: core_model.PlanarModel) -> List:
    """Terminal events for leaving the annulus or the domain."""
    events = []
    if np.isfinite(model.h_ceiling):

        def energy(t, state):
            del t
            return model.h_ceiling - float(model.hamiltonian(state[0], state[1]))

        events.append(energy)
    for edge, sign in ((model.domain.x_lo, 1.), (model.domain.x_hi, -1.)):
        if np.isfinite(edge):
            events.append(lambda t, state, e=edge, s=sign: s * (state[0] - e))
    for event in events:
        event.terminal = True
        event.direction = -1
    return events


def _half_turn(rhs, state, t_max, direction, escapes, rtol, atol):
    """Integrates until y = 0 is crossed in `direction`; returns the state."""
    sol = integrate.solve_ivp(rhs, (0., t_max), state, method='DOP853',
                              rtol=rtol, atol=atol, dense_output=True,
                              events=[_section_event(direction)] + escapes)
    if sol.status == -1:
        raise errors.EscapedAnnulus(f'Integration failed: {sol.message}')
    for hits in sol.t_events[1:]:
        if hits.size:
            raise errors.EscapedAnnulus(
                f'Trajectory from {state} left the period annulus.')
    if not sol.t_events[0].size:
        raise errors.EscapedAnnulus(
            f'Trajectory from {state} did not return within tau = {t_max!r}.')
    return sol.t_events[0][0], sol.y_events[0][0], sol


def _time_budget(model, x0, escape_periods):
    h0 = float(model.hamiltonian(x0, 0.))
    return escape_periods * abelian.oval_period(model, h0)


def _check_start(model: core_model.PlanarModel, x0: float):
    if not x0 > model.center_x:
        raise errors.InvalidParams(
            f'x0 = {x0!r} must lie right of the center {model.center_x!r}.')
    if not model.domain.contains(x0):
        raise errors.EscapedAnnulus(f'x0 = {x0!r} lies outside the domain.')
    h0 = float(model.hamiltonian(x0, 0.))
    if not 0 < h0 < model.h_ceiling:
        raise errors.EscapedAnnulus(
            f'x0 = {x0!r} has energy {h0!r} outside (0, {model.h_ceiling!r}).')


def return_map(instance: pde_catalog.FamilyInstance,
               epsilon: float,
               x0: float,
               rtol: float = 1e-11,
               atol: float = 1e-13,
               escape_periods: float = 10.,
               epsilon_cap: float = 1e-2) -> float:
    """Next downward crossing of the section starting from (x0, 0).

    Raises:
      EscapedAnnulus: if the orbit leaves the annulus or the domain, or does
        not come back within escape_periods unperturbed periods.
    """
    check_epsilon(epsilon, epsilon_cap)
    model = instance.model
    _check_start(model, x0)
    rhs = _field(model, instance.pert_integrand, epsilon)
    t_max = _time_budget(model, x0, escape_periods)
    escapes = _escape_events(model)
    t1, left, _ = _half_turn(rhs, [x0, 0.], t_max, +1, escapes, rtol, atol)
    _, right, _ = _half_turn(rhs, [left[0], 0.], t_max - t1, -1, escapes,
                             rtol, atol)
    return float(right[0])


def displacement(instance: pde_catalog.FamilyInstance, epsilon: float,
                 x0: float, **kwargs) -> float:
    return return_map(instance, epsilon, x0, **kwargs) - x0


def _h_of_x(model, x0):
    return float(model.hamiltonian(x0, 0.))


def melnikov_ratio(instance: pde_catalog.FamilyInstance,
                   epsilon: float,
                   x0: float,
                   tol: float = 1e-10,
                   **kwargs) -> float:
    """displacement / (eps * M(H(x0, 0)))."""
    if epsilon == 0:
        raise errors.InvalidParams('The ratio needs a nonzero epsilon.')
    m, _ = abelian.melnikov_value(instance.model, instance.perturbation,
                                  _h_of_x(instance.model, x0), tol=tol)
    return displacement(instance, epsilon, x0, **kwargs) / (epsilon * m)


def displacement_sign(instance: pde_catalog.FamilyInstance, epsilon: float,
                      h: float, **kwargs) -> int:
    """+1 when the displacement has the sign of eps * M(h), -1 otherwise."""
    _, x0 = core_model.turning_points(instance.model, h)
    return int(np.sign(melnikov_ratio(instance, epsilon, x0, **kwargs)))


def seed_energies(model: core_model.PlanarModel,
                  n_seeds: int = 128,
                  lo_frac: float = 1e-2,
                  hi_frac: float = 0.95,
                  h_max: float = 2.) -> np.ndarray:
    top = model.h_ceiling if np.isfinite(model.h_ceiling) else h_max
    return math.log_grid(lo_frac * top, hi_frac * top, n_seeds)


def _nearest_zero(zeros: Sequence[float], cycle_h: float) -> ZeroMatch:
    zero_h = min(zeros, key=lambda z: abs(z - cycle_h))
    return ZeroMatch(zero_h=float(zero_h), cycle_h=float(cycle_h),
                     relative_gap=float(abs(cycle_h - zero_h) / abs(zero_h)))


def melnikov_zeros(instance: pde_catalog.FamilyInstance,
                   grid: Optional[Sequence[float]] = None,
                   tol: float = 1e-10,
                   threads: int = 1) -> List[float]:
    """Simple zeros of M on the default grid."""
    model = instance.model
    if grid is None:
        grid = abelian.default_h_grid(model)
    curve = abelian.melnikov_curve(model, instance.perturbation, grid, tol=tol,
                                   threads=threads)
    records = zerofind.find_zeros(curve, model, instance.perturbation, tol=tol,
                                  threads=threads)
    return zerofind.simple_zeros(records)


def detect_limit_cycles(instance: pde_catalog.FamilyInstance,
                        epsilon: float,
                        n_seeds: int = 128,
                        zeros: Optional[Sequence[float]] = None,
                        seed_lo_frac: float = 1e-2,
                        seed_hi_frac: float = 0.95,
                        h_max: float = 2.,
                        section_tol: float = 1e-10,
                        threads: int = 1,
                        progress: bool = False,
                        zero_tol: float = 1e-10,
                        **kwargs) -> LimitCycleReport:
    """Fixed points of the return map on the section, matched to zeros of M.

    Args:
      instance: the family instance with its perturbation.
      epsilon: perturbation size; |epsilon| <= epsilon_cap.
      n_seeds: section points, log-spaced in h across the annulus.
      zeros: simple zeros of M to match against; computed when omitted.
      seed_lo_frac: lowest seed energy as a fraction of h_ceiling (of h_max
        for an unbounded annulus).
      seed_hi_frac: highest seed energy, same convention.
      h_max: energy scale used when the annulus is unbounded.
      section_tol: fixed points satisfy |P(x) - x| < section_tol.
      threads: seeds integrated concurrently when > 1.
      progress: show a progress bar over the seeds.
      zero_tol: quadrature and root tolerance when `zeros` is computed here,
        on the default grid capped at h_max.
      **kwargs: integrator settings forwarded to return_map.

    Returns:
      A LimitCycleReport.
    """
    check_epsilon(epsilon, kwargs.get('epsilon_cap', 1e-2))
    model = instance.model
    h_seeds = seed_energies(model, n_seeds, seed_lo_frac, seed_hi_frac, h_max)
    x_seeds = [core_model.turning_points(model, h)[1] for h in h_seeds]

    def disp(x0):
        try:
            return displacement(instance, epsilon, x0, **kwargs)
        except errors.EscapedAnnulus as e:
            logging.warning('Seed x0 = %r skipped: %s', x0, e)
            return None

    values = utils.parallel_map(disp, x_seeds, threads=threads, desc='seeds',
                                progress=progress)
    skipped = tuple(float(x) for x, d in zip(x_seeds, values) if d is None)
    kept = [(x, d) for x, d in zip(x_seeds, values) if d is not None]

    if epsilon == 0 or all(abs(d) < section_tol for _, d in kept):
        logging.warning('Every seed is a fixed point at eps = %r: the annulus '
                        'is a continuum of closed orbits.', epsilon)
        return LimitCycleReport(epsilon=epsilon, fixed_points=(),
                                matched_zeros=(), degenerate=True,
                                skipped_seeds=skipped)

    brackets = [(a, b) for a, b in zip(kept[:-1], kept[1:])
                if np.sign(a[1]) != np.sign(b[1]) and a[1] != 0]

    def refine(bracket):
        (x_lo, d_lo), (x_hi, d_hi) = bracket
        if d_hi == 0:
            x_star = x_hi
        else:
            x_star = optimize.brentq(
                lambda x: displacement(instance, epsilon, x, **kwargs), x_lo,
                x_hi, xtol=1e-14 * max(1., abs(x_hi)))
        residual = abs(displacement(instance, epsilon, x_star, **kwargs))
        if residual >= section_tol:
            logging.warning(
                'Fixed point near x = %r only reaches |P(x) - x| = %.2e.',
                x_star, residual)
        stability = (Stability.ATTRACTING
                     if d_hi < d_lo else Stability.REPELLING)
        return FixedPoint(x_section=float(x_star),
                          h_equiv=_h_of_x(model, x_star), stability=stability)

    fixed_points = tuple(utils.parallel_map(refine, brackets, threads=threads))
    if zeros is None:
        grid = abelian.default_h_grid(model, h_max=h_max)
        zeros = melnikov_zeros(instance, grid=grid, tol=zero_tol,
                               threads=threads)
    matched = ()
    if len(zeros):
        matched = tuple(_nearest_zero(zeros, fp.h_equiv) for fp in fixed_points)
    logging.info('eps = %r: %d limit cycles, %d seeds skipped.', epsilon,
                 len(fixed_points), len(skipped))
    return LimitCycleReport(epsilon=epsilon, fixed_points=fixed_points,
                            matched_zeros=matched, skipped_seeds=skipped)


def linear_period_s(model: core_model.PlanarModel) -> float:
    """Small-amplitude period in the wave variable s at the center."""
    xc = model.center_x
    s = float(model.s_factor(xc, 0.))
    return 2 * np.pi / np.sqrt(s * core_model.hessian_xx(model, xc))


def wave_profile(instance: pde_catalog.FamilyInstance,
                 h: float,
                 n_samples: int = 256,
                 period_cap_factor: float = 5.,
                 rtol: float = 1e-11,
                 atol: float = 1e-13,
                 escape_periods: float = 10.) -> WaveProfile:
    """One period of U(s) on the oval H = h, starting at its maximum.

    The unperturbed tau-system is integrated together with
    sigma' = 1 / s_c(x, y), the wave variable. Samples are taken at equally
    spaced sigma by inverting the monotone sigma(tau) on the dense output.
    """
    model = instance.model
    x_minus, x_plus = core_model.turning_points(model, h)
    base = _field(model, None, 0.)

    def rhs(t, state):
        dx, dy = base(t, state)
        return [dx, dy, 1. / float(model.s_factor(state[0], state[1]))]

    t_max = escape_periods * abelian.oval_period(model, h)
    escapes = _escape_events(model)
    t1, left, sol1 = _half_turn(rhs, [x_plus, 0., 0.], t_max, +1, escapes,
                                rtol, atol)
    t2, right, sol2 = _half_turn(rhs, [left[0], 0., left[2]], t_max - t1, -1,
                                 escapes, rtol, atol)
    period_s = float(right[2])

    def at_sigma(target):
        if target <= left[2]:
            sol, t_end = sol1, t1
        else:
            sol, t_end = sol2, t2
            target = min(target, period_s)
        sigma = lambda t: sol.sol(t)[2] - target
        if sigma(0.) >= 0:
            return float(sol.sol(0.)[0])
        if sigma(t_end) <= 0:
            return float(sol.sol(t_end)[0])
        t = optimize.brentq(sigma, 0., t_end, xtol=1e-14 * max(1., t_end))
        return float(sol.sol(t)[0])

    s_grid = np.linspace(0., period_s, n_samples)
    samples = tuple((float(s), at_sigma(s)) for s in s_grid)

    cap = period_cap_factor * linear_period_s(model)
    overflow = period_s > cap
    if overflow:
        logging.warning(
            'PeriodOverflow: period %r at h = %r exceeds %r times the '
            'small-amplitude period.', period_s, h, period_cap_factor)
    return WaveProfile(samples=samples, period_s=period_s, h=float(h),
                       c=instance.c, u_min=float(left[0]), u_max=float(x_plus),
                       overflow=overflow)
