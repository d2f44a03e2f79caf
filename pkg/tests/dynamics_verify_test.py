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

"""Unit tests for dynamics_verify."""

from absl.testing import absltest
from absl.testing import parameterized
import numpy as np

from internal import abelian
from internal import core_model
from internal import designer
from internal import dynamics_verify
from internal import errors
from internal import pde_catalog
from internal import zerofind

Stability = dynamics_verify.Stability


def toy_one_zero():
    # g_c(y) = y^3 - y: M(h) = 2 pi h (3 h / 2 - 1), zero at h = 2/3.
    return pde_catalog.make_toy(g_odd_coeffs=[0., -1., 0., 1.])


def harmonic_three_zeros():
    # M(h) is proportional to h (h - 0.4)(h - 0.8)(h - 1.2).
    pert = abelian.MonomialPerturbation(
        ((0, 1, -0.48), (1, 1, 4.4), (2, 1, -6.), (3, 1, 2.)))
    return pde_catalog.make_toy().with_perturbation(pert)


class ReturnMapTest(parameterized.TestCase):

    def test_unperturbed_orbit_closes(self):
        instance = toy_one_zero()
        x1 = dynamics_verify.return_map(instance, 0., 1.)
        self.assertAlmostEqual(x1, 1., delta=1e-9)

    @parameterized.parameters(0.3, 1.2)
    def test_displacement_follows_melnikov_sign(self, h):
        instance = toy_one_zero()
        self.assertEqual(dynamics_verify.displacement_sign(instance, 1e-3, h),
                         1)
        self.assertEqual(dynamics_verify.displacement_sign(instance, -1e-3, h),
                         1)

    def test_melnikov_ratio_converges(self):
        instance = toy_one_zero()
        _, x0 = core_model.turning_points(instance.model, 1.2)
        r3 = dynamics_verify.melnikov_ratio(instance, 1e-3, x0)
        r4 = dynamics_verify.melnikov_ratio(instance, 1e-4, x0)
        self.assertGreater(r3, 0.)
        self.assertAlmostEqual(r3 / r4, 1., delta=2e-2)

    def test_start_left_of_center(self):
        with self.assertRaises(errors.InvalidParams):
            dynamics_verify.return_map(toy_one_zero(), 1e-3, -0.5)

    def test_epsilon_cap(self):
        with self.assertRaises(errors.InvalidParams):
            dynamics_verify.return_map(toy_one_zero(), 0.05, 1.)
        with self.assertRaises(errors.InvalidParams):
            dynamics_verify.check_epsilon(np.nan)
        dynamics_verify.check_epsilon(0.)

    def test_escape_through_the_ceiling(self):
        # g = u_t pumps energy in: M(h) = sqrt(2) times the enclosed area.
        g = pde_catalog.PolynomialForcing(((0, 0, 1, 1.),))
        instance = pde_catalog.make_sine_gordon(g=g)
        _, x0 = core_model.turning_points(instance.model, 1.99)
        with self.assertRaises(errors.EscapedAnnulus):
            dynamics_verify.return_map(instance, 1e-2, x0)

    def test_start_outside_the_domain(self):
        # Ostrovsky lives on x < c.
        instance = pde_catalog.make_ostrovsky()
        with self.assertRaises(errors.EscapedAnnulus):
            dynamics_verify.return_map(instance, 1e-3, 1.5)


class LimitCycleTest(parameterized.TestCase):

    def test_toy_single_cycle(self):
        instance = toy_one_zero()
        gaps = {}
        for epsilon in (1e-2, 1e-3, 1e-4):
            report = dynamics_verify.detect_limit_cycles(instance, epsilon,
                                                         n_seeds=32,
                                                         zeros=[2 / 3])
            self.assertLen(report.fixed_points, 1)
            self.assertFalse(report.degenerate)
            self.assertEqual(report.skipped_seeds, ())
            # M' > 0 at the zero, so the cycle repels for eps > 0.
            self.assertEqual(report.fixed_points[0].stability,
                             Stability.REPELLING)
            gaps[epsilon] = report.matched_zeros[0].relative_gap
        self.assertLess(gaps[1e-3], 5e-2)
        self.assertGreaterEqual(gaps[1e-2], 5 * gaps[1e-4])

    def test_negative_epsilon_flips_stability(self):
        report = dynamics_verify.detect_limit_cycles(toy_one_zero(), -1e-3,
                                                     n_seeds=16,
                                                     zeros=[2 / 3])
        self.assertLen(report.fixed_points, 1)
        self.assertEqual(report.fixed_points[0].stability,
                         Stability.ATTRACTING)

    def test_designed_three_cycles(self):
        report = dynamics_verify.detect_limit_cycles(harmonic_three_zeros(),
                                                     1e-3,
                                                     n_seeds=32,
                                                     h_max=2.4,
                                                     threads=4)
        self.assertLen(report.fixed_points, 3)
        self.assertLen(report.matched_zeros, 3)
        np.testing.assert_allclose([m.zero_h for m in report.matched_zeros],
                                   [0.4, 0.8, 1.2], rtol=1e-6)
        for match in report.matched_zeros:
            self.assertLess(match.relative_gap, 5e-2)
        stabilities = [fp.stability for fp in report.fixed_points]
        self.assertEqual(stabilities, [
            Stability.REPELLING, Stability.ATTRACTING, Stability.REPELLING
        ])

    def test_zeros_above_the_default_energy_scale(self):
        # Unbounded annulus with the only zero at h = 2.5 > 2.
        coeffs = pde_catalog.toy_coefficients_for_zeros(1., [2.5])
        instance = pde_catalog.make_toy(g_odd_coeffs=coeffs)
        report = dynamics_verify.detect_limit_cycles(instance, 1e-3,
                                                     n_seeds=32,
                                                     h_max=3.)
        self.assertLen(report.fixed_points, 1)
        self.assertLen(report.matched_zeros, 1)
        self.assertAlmostEqual(report.matched_zeros[0].zero_h, 2.5,
                               delta=1e-8)
        self.assertLess(report.matched_zeros[0].relative_gap, 5e-2)

    @parameterized.named_parameters(
        ('harmonic', pde_catalog.make_toy,
         [(0, 1), (1, 1), (2, 1), (3, 1)], [0.4, 0.8, 1.2], 2.4),
        ('sine_gordon', pde_catalog.make_sine_gordon,
         [(0, 1), (1, 1), (2, 1)], [0.5, 1.5], 2.),
    )
    def test_designed_zeros_become_cycles(self, make_instance, exponents,
                                          targets, h_max):
        instance = make_instance()
        report = designer.design_zeros(instance.model, exponents, targets)
        designed = instance.with_perturbation(report.perturbation)
        zeros = zerofind.simple_zeros(report.zeros)
        gaps = {}
        for epsilon in (1e-2, 1e-4):
            cycles = dynamics_verify.detect_limit_cycles(designed, epsilon,
                                                         n_seeds=32,
                                                         zeros=zeros,
                                                         h_max=h_max,
                                                         threads=4)
            self.assertLen(cycles.fixed_points, len(targets))
            stabilities = [fp.stability for fp in cycles.fixed_points]
            for a, b in zip(stabilities, stabilities[1:]):
                self.assertNotEqual(a, b)
            gaps[epsilon] = [m.relative_gap for m in cycles.matched_zeros]
        for coarse, fine in zip(gaps[1e-2], gaps[1e-4]):
            self.assertGreaterEqual(coarse, 5 * fine)

    def test_zero_epsilon_is_degenerate(self):
        report = dynamics_verify.detect_limit_cycles(toy_one_zero(), 0.,
                                                     n_seeds=8, zeros=[2 / 3])
        self.assertTrue(report.degenerate)
        self.assertEqual(report.fixed_points, ())

    def test_seed_energies(self):
        model = pde_catalog.make_sine_gordon().model
        seeds = dynamics_verify.seed_energies(model, 16)
        self.assertAlmostEqual(seeds[0], 0.02, delta=1e-12)
        self.assertAlmostEqual(seeds[-1], 1.9, delta=1e-12)
        unbounded = dynamics_verify.seed_energies(toy_one_zero().model, 4,
                                                  h_max=3.)
        self.assertAlmostEqual(unbounded[-1], 2.85, delta=1e-12)


class WaveProfileTest(parameterized.TestCase):

    def test_harmonic_is_cosine(self):
        profile = dynamics_verify.wave_profile(pde_catalog.make_toy(), 0.5)
        s, u = np.array(profile.samples).T
        self.assertAlmostEqual(profile.period_s, 2 * np.pi, delta=1e-8)
        np.testing.assert_allclose(u, np.cos(s), rtol=0, atol=1e-8)
        self.assertLen(profile.samples, 256)
        self.assertFalse(profile.overflow)

    def test_ostrovsky_extrema_are_turning_points(self):
        instance = pde_catalog.make_ostrovsky()
        profile = dynamics_verify.wave_profile(instance, 0.1, n_samples=128)
        x_minus, x_plus = core_model.turning_points(instance.model, 0.1)
        self.assertAlmostEqual(profile.u_max, x_plus, delta=1e-8)
        self.assertAlmostEqual(profile.u_min, x_minus, delta=1e-8)
        u = np.array(profile.samples)[:, 1]
        self.assertAlmostEqual(np.max(u), x_plus, delta=1e-8)
        self.assertGreaterEqual(np.min(u), x_minus - 1e-8)
        self.assertEqual(profile.c, 1.)

    def test_sine_gordon_period_overflow(self):
        instance = pde_catalog.make_sine_gordon()
        self.assertAlmostEqual(dynamics_verify.linear_period_s(instance.model),
                               2 * np.pi, places=12)
        profile = dynamics_verify.wave_profile(instance, 2 * (1 - 1e-7),
                                               n_samples=64)
        self.assertTrue(profile.overflow)
        self.assertGreater(profile.period_s, 10 * np.pi)

    def test_energy_out_of_range(self):
        with self.assertRaises(errors.EnergyOutOfRange):
            dynamics_verify.wave_profile(pde_catalog.make_sine_gordon(), 2.5)


if __name__ == '__main__':
    absltest.main()
