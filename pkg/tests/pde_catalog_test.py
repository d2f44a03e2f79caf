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

"""Unit tests for pde_catalog."""

from absl.testing import absltest
from absl.testing import parameterized
import numpy as np

from internal import abelian
from internal import core_model
from internal import errors
from internal import pde_catalog
from internal import zerofind

Family = pde_catalog.Family


class PresetTest(parameterized.TestCase):

    @parameterized.parameters(sorted(pde_catalog.PRESETS))
    def test_preset_is_consistent(self, name):
        instance = pde_catalog.make_preset(name)
        model = instance.model
        self.assertEqual(
            core_model.classify_equilibrium(model, model.center_x),
            core_model.EquilibriumType.CENTER)
        self.assertGreater(model.h_ceiling, 0.)
        self.assertLess(pde_catalog.consistency_error(instance), 1e-6)

    def test_every_family_has_a_preset(self):
        self.assertCountEqual(pde_catalog.FAMILY_DEFAULT_PRESET, list(Family))
        for family, name in pde_catalog.FAMILY_DEFAULT_PRESET.items():
            self.assertEqual(pde_catalog.PRESETS[name][0], family)

    def test_sine_gordon_ceiling(self):
        for c in (np.sqrt(2.), 1.5, 3.):
            instance = pde_catalog.make_sine_gordon(c=c)
            self.assertAlmostEqual(instance.model.h_ceiling,
                                   2 * instance.params['C'], delta=1e-14)

    def test_ostrovsky_ceiling(self):
        for c in (0.5, 1., 2.):
            model = pde_catalog.make_ostrovsky(c=c).model
            self.assertAlmostEqual(model.h_ceiling, c**3 / 6,
                                   delta=1e-12 * c**3)
            self.assertEqual(model.domain.x_hi, c)

    def test_kdv_equilibria(self):
        instance = pde_catalog.make_preset('kdv')
        self.assertAlmostEqual(instance.model.center_x, -1 / 3, places=14)
        np.testing.assert_allclose(sorted(instance.params['equilibria']),
                                   [-1 / 3, 0.], atol=1e-14)
        self.assertAlmostEqual(instance.model.h_ceiling, 1 / 54, places=14)

    def test_rosenau_hyman_ceiling(self):
        model = pde_catalog.make_rosenau_hyman().model
        self.assertAlmostEqual(model.center_x, 1., places=12)
        self.assertAlmostEqual(model.h_ceiling, 1 / 12, places=12)

    def test_klein_gordon_degenerate_center(self):
        model = pde_catalog.make_klein_gordon(p_exp=3).model
        self.assertEqual(
            core_model.classify_equilibrium(model, 0.),
            core_model.EquilibriumType.DEGENERATE)
        self.assertEqual(model.h_ceiling, np.inf)
        x_minus, x_plus = core_model.turning_points(model, 0.25)
        self.assertAlmostEqual(x_minus, -1., delta=1e-12)
        self.assertAlmostEqual(x_plus, 1., delta=1e-12)

    @parameterized.parameters('camassa_holm', 'degasperis_procesi',
                              'constantin_lannes')
    def test_camassa_holm_class_potential(self, name):
        model = pde_catalog.make_preset(name).model
        self.assertTrue(np.isfinite(model.h_ceiling))
        self.assertAlmostEqual(float(model.hamiltonian(model.center_x, 0.)), 0.,
                               delta=1e-12)
        # The cached potential agrees with its own slope field.
        xs = np.linspace(model.center_x - 0.1, model.center_x + 0.1, 11)
        self.assertLess(model.separable.B.derivative_error(xs), 1e-6)

    def test_degasperis_procesi_reaches_the_singular_line(self):
        instance = pde_catalog.make_preset('degasperis_procesi')
        model = instance.model
        C, d = instance.params['C'], instance.params['d']
        self.assertEqual(model.domain.x_hi, -C / d)
        edge = model.domain.x_hi
        self.assertTrue(np.isfinite(float(model.hamiltonian(edge, 0.))))
        self.assertTrue(np.isfinite(float(model.h_x(edge, 0.))))
        self.assertTrue(np.isfinite(float(model.hamiltonian(edge, 0.5))))
        self.assertLessEqual(model.x_stops[1], edge)

    def test_ostrovsky_boundary_equilibrium_is_a_saddle(self):
        model = pde_catalog.make_ostrovsky(c=1.).model
        self.assertEqual(core_model.classify_equilibrium(model, 1.),
                         core_model.EquilibriumType.SADDLE)
        self.assertEqual(model.x_stops[1], 1.)


class EquivalenceTest(absltest.TestCase):

    def test_gen_kdv_matches_boussinesq(self):
        # Both reduce to y' = x + 3 x^2 with the same forcing weight.
        g = pde_catalog.PolynomialForcing(((0, 1, 0, 1.), (2, 1, 0, -2.)))
        kdv = pde_catalog.make_gen_kdv(g=g)
        bsq = pde_catalog.make_boussinesq(a=-1., b=0., d=0., e=-3., p=1., c=1.,
                                          g=g)
        self.assertAlmostEqual(kdv.model.h_ceiling, bsq.model.h_ceiling,
                               places=14)
        grid = abelian.default_h_grid(kdv.model, n=16)
        m_kdv = abelian.melnikov_curve(kdv.model, kdv.perturbation, grid)
        m_bsq = abelian.melnikov_curve(bsq.model, bsq.perturbation, grid)
        np.testing.assert_allclose(m_kdv.values, m_bsq.values, rtol=0,
                                   atol=1e-10)


class ValidationTest(parameterized.TestCase):

    def test_toy_invalid_speed(self):
        with self.assertRaises(errors.InvalidSpeed):
            pde_catalog.make_toy(a=1., b=2., c=1.)

    @parameterized.parameters(1., 0.5)
    def test_sine_gordon_invalid_speed(self, c):
        with self.assertRaises(errors.InvalidSpeed):
            pde_catalog.make_sine_gordon(c=c)

    @parameterized.parameters(dict(lam=-1.), dict(p_exp=2), dict(c=0.5))
    def test_klein_gordon_invalid(self, **kwargs):
        with self.assertRaises(errors.InvalidParams):
            pde_catalog.make_klein_gordon(**kwargs)

    def test_zero_dispersion(self):
        with self.assertRaises(errors.ZeroDispersion):
            pde_catalog.make_gen_kdv(p=0.)
        with self.assertRaises(errors.ZeroDispersion):
            pde_catalog.make_boussinesq(p=0.)

    def test_no_period_annulus(self):
        with self.assertRaises(errors.NoPeriodAnnulus):
            pde_catalog.make_gen_kdv(b=0.)

    def test_rosenau_hyman_no_center(self):
        with self.assertRaises(errors.NoCenter):
            pde_catalog.make_rosenau_hyman(a=-1.)

    def test_camassa_holm_requires_a_zero_at_origin(self):
        with self.assertRaises(errors.InvalidParams):
            pde_catalog.make_camassa_holm_class(A_coeffs=(1., 2., 1.5))

    def test_unknown_family_and_parameter(self):
        with self.assertRaises(errors.InvalidParams):
            pde_catalog.parse_family('korteweg')
        with self.assertRaises(errors.InvalidParams):
            pde_catalog.make_instance('toy', speed=1.)
        with self.assertRaises(errors.InvalidParams):
            pde_catalog.make_instance(Family.TOY, g=None)
        with self.assertRaises(errors.InvalidParams):
            pde_catalog.make_preset('kawahara')


class ForcingTest(absltest.TestCase):

    def test_polynomial_forcing(self):
        g = pde_catalog.PolynomialForcing(((1, 0, 1, 2.), (0, 2, 0, -1.)))
        self.assertAlmostEqual(float(g(3., 0.5, -1.)), 2 * 3 * -1. - 0.25)
        self.assertFalse(g.is_zero)
        self.assertTrue(pde_catalog.PolynomialForcing().is_zero)
        with self.assertRaises(errors.InvalidParams):
            pde_catalog.PolynomialForcing(((-1, 0, 0, 1.),))

    def test_traveling_slice_sign(self):
        # g = u_t on u = U(x - c t) is -c U'.
        g = pde_catalog.PolynomialForcing(((0, 0, 1, 1.),))
        instance = pde_catalog.make_sine_gordon(c=np.sqrt(2.), g=g)
        # Integrand g / (1 - c^2) = -sqrt(2) y / (1 - 2).
        self.assertAlmostEqual(float(instance.pert_integrand(0.3, 0.5)),
                               np.sqrt(2.) * 0.5, places=14)

    def test_camassa_holm_area_forcing_has_no_zeros(self):
        # g = -(3 + u)^4 u_x makes g_c = (C + d x) s_c y with C = 3, so the
        # integrand is y and M(h) is the enclosed area.
        g = pde_catalog.PolynomialForcing(
            tuple((i, 1, 0, -coeff)
                  for i, coeff in enumerate((81., 108., 54., 12., 1.))))
        instance = pde_catalog.make_preset('camassa_holm', g=g)
        self.assertEqual(instance.params['C'], 3.)
        for x, y in ((0.5, 0.2), (0.9, -0.3)):
            self.assertAlmostEqual(float(instance.pert_integrand(x, y)), y,
                                   delta=1e-12)
        model = instance.model
        curve = abelian.melnikov_curve(model, instance.perturbation,
                                       abelian.default_h_grid(model, n=16))
        self.assertTrue(np.all(curve.values > 0))
        self.assertEmpty(
            zerofind.find_zeros(curve, model, instance.perturbation))

    def test_toy_coefficients_for_zeros(self):
        targets = [0.2, 0.5, 1.3]
        coeffs = pde_catalog.toy_coefficients_for_zeros(2., targets)
        self.assertEqual(sorted(coeffs), [1, 3, 5, 7])
        np.testing.assert_allclose(
            pde_catalog.toy_reference_melnikov(2., coeffs, targets),
            np.zeros(3), atol=1e-14)
        with self.assertRaises(errors.TargetOutOfRange):
            pde_catalog.toy_coefficients_for_zeros(1., [0.5, 0.2])


class ScenarioTest(absltest.TestCase):

    def test_toy_family_gc(self):
        instance = pde_catalog.instance_from_scenario({
            'family': 'toy',
            'params': {'c': 0.},
            'perturbation': {'kind': 'family_gc',
                             'expr_coeffs': [0., -1., 0., 1.]},
        })
        self.assertEqual(instance.family, Family.TOY)
        m, _ = abelian.melnikov_value(instance.model, instance.perturbation,
                                      2 / 3)
        self.assertAlmostEqual(m, 0., delta=1e-12)

    def test_forcing_terms(self):
        instance = pde_catalog.instance_from_scenario({
            'family': 'sine_gordon',
            'params': {'c': 1.5},
            'perturbation': {'kind': 'family_gc',
                             'expr_coeffs': [[0, 0, 1, 1.]]},
        })
        self.assertFalse(instance.perturbation.is_zero)

    def test_monomials_default_to_the_center(self):
        instance = pde_catalog.instance_from_scenario({
            'family': 'gen_kdv',
            'perturbation': {'kind': 'monomials', 'terms': [[1, 1, 1.]]},
        })
        self.assertAlmostEqual(instance.perturbation.x_shift, -1 / 3,
                               places=14)

    def test_missing_perturbation_is_zero(self):
        instance = pde_catalog.instance_from_scenario({'family': 'ostrovsky'})
        self.assertTrue(instance.perturbation.is_zero)

    def test_describe_family(self):
        doc = pde_catalog.describe_family('ostrovsky')
        self.assertEqual(doc['family'], 'ostrovsky')
        self.assertIn('c', doc['params'])
        self.assertEqual(doc['presets'], ['ostrovsky'])


if __name__ == '__main__':
    absltest.main()
