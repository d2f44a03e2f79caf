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

"""Unit tests for zerofind."""

from absl.testing import absltest
from absl.testing import parameterized
import numpy as np

from internal import abelian
from internal import errors
from internal import math
from internal import pde_catalog
from internal import zerofind


def _curve_and_zeros(instance, grid=None, **kwargs):
    model = instance.model
    if grid is None:
        grid = abelian.default_h_grid(model)
    curve = abelian.melnikov_curve(model, instance.perturbation, grid)
    return curve, zerofind.find_zeros(curve, model, instance.perturbation,
                                      **kwargs)


class FindZerosTest(parameterized.TestCase):

    def test_toy_single_zero(self):
        instance = pde_catalog.make_toy(g_odd_coeffs=[0., -1., 0., 1.])
        _, records = _curve_and_zeros(instance)
        self.assertLen(records, 1)
        record = records[0]
        self.assertAlmostEqual(record.h_star, 2 / 3, delta=1e-6)
        self.assertTrue(record.simple)
        # M(h) = 2 pi h (3 h / 2 - 1), so M'(2/3) = 2 pi.
        self.assertAlmostEqual(record.derivative_estimate, 2 * np.pi,
                               delta=1e-4)
        lo, hi = record.bracket
        self.assertLessEqual(lo, record.h_star)
        self.assertLessEqual(record.h_star, hi)
        self.assertEqual(zerofind.simple_zeros(records), [record.h_star])

    @parameterized.parameters(1, 4)
    def test_toy_placed_zeros(self, threads):
        targets = [0.3, 0.7, 1.5]
        coeffs = pde_catalog.toy_coefficients_for_zeros(1., targets)
        instance = pde_catalog.make_toy(g_odd_coeffs=coeffs)
        _, records = _curve_and_zeros(instance, threads=threads)
        np.testing.assert_allclose(zerofind.simple_zeros(records), targets,
                                   rtol=1e-6)

    def test_zero_perturbation(self):
        instance = pde_catalog.make_klein_gordon()
        _, records = _curve_and_zeros(instance,
                                      abelian.default_h_grid(instance.model,
                                                             n=16))
        self.assertEqual(records, [])

    def test_no_sign_change(self):
        instance = pde_catalog.make_toy(g_odd_coeffs=[0., 1., 0., 1.])
        _, records = _curve_and_zeros(instance)
        self.assertEqual(records, [])

    def test_double_zero_is_not_counted(self):
        # M(h) / h proportional to (h - 1)^2.
        coeffs = {
            2 * i + 1: c / (2 * 2.**i * math.sin_power_integral(2 * i + 2))
            for i, c in enumerate([1., -2., 1.])
        }
        instance = pde_catalog.make_toy(g_odd_coeffs=coeffs)
        curve, records = _curve_and_zeros(instance)
        self.assertTrue(np.all(curve.values > 0))
        self.assertEqual(records, [])

    def test_ambiguous_sign_change(self):
        h = np.linspace(0.1, 0.5, 5)
        values = [1., 1e-12, -1e-12, 1e-12, -1.]
        errs = [1e-14, 1e-11, 1e-11, 1e-11, 1e-14]
        curve = abelian.MelnikovCurve(
            tuple(abelian.Sample(*s) for s in zip(h, values, errs)))
        instance = pde_catalog.make_toy(g_odd_coeffs=[0., 1.])
        with self.assertRaises(errors.AmbiguousSignChange) as cm:
            zerofind.find_zeros(curve, instance.model, instance.perturbation)
        self.assertEqual(cm.exception.bracket, (0.1, 0.5))

    def test_bounded_annulus(self):
        # u_tt - u_xx + sin u + eps u_t (u^2 - 1/2) = 0.
        g = pde_catalog.PolynomialForcing(((2, 0, 1, 1.), (0, 0, 1, -0.5)))
        instance = pde_catalog.make_sine_gordon(g=g)
        _, records = _curve_and_zeros(instance)
        self.assertLen(records, 1)
        self.assertTrue(records[0].simple)
        self.assertBetween(records[0].h_star, 0., 2.)


if __name__ == '__main__':
    absltest.main()
