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

"""Unit tests for configs."""

import os

from absl.testing import absltest
import gin

from internal import configs
from internal import errors

CONFIG_DIR = os.path.join(os.path.dirname(__file__), '..', 'configs')


class ConfigsTest(absltest.TestCase):

  def tearDown(self):
    gin.clear_config()
    super().tearDown()

  def test_defaults(self):
    config = configs.Config()
    self.assertEqual(config.grid_n, 64)
    self.assertEqual(config.quad_tol, 1e-10)
    self.assertEqual(config.epsilon_cap, 1e-2)
    self.assertIsNone(config.scenario)

  def test_gin_bindings(self):
    gin.parse_config(['Config.grid_n = 16', 'Config.threads = 4'])
    config = configs.Config()
    self.assertEqual(config.grid_n, 16)
    self.assertEqual(config.threads, 4)

  def test_shipped_gin_files_parse(self):
    for name in ('default.gin', 'fast.gin', 'verify.gin'):
      gin.clear_config()
      gin.parse_config_file(os.path.join(CONFIG_DIR, name))
      configs.Config()
    gin.clear_config()
    gin.parse_config_file(os.path.join(CONFIG_DIR, 'fast.gin'))
    self.assertEqual(configs.Config().grid_n, 32)

  def test_parse_epsilons(self):
    self.assertEqual(configs.parse_epsilons(None), [])
    self.assertEqual(configs.parse_epsilons(['1e-2', '-1e-3']), [1e-2, -1e-3])
    with self.assertRaises(errors.SchemaError) as cm:
      configs.parse_epsilons(['small'])
    self.assertEqual(cm.exception.field, 'epsilons')


if __name__ == '__main__':
  absltest.main()
