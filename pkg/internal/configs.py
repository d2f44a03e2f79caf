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

"""Utility functions for handling configurations."""

import dataclasses
import os
from typing import List, Optional

from absl import flags
import gin
from internal import errors
from internal import utils


@gin.configurable()
@dataclasses.dataclass
class Config:
  """Configuration flags for everything."""
  scenario: Optional[str] = None  # Scenario JSON driving every subcommand.
  out_dir: Optional[str] = None  # Output directory for CSV/JSON artifacts.
  threads: int = 1  # Workers used to fan out grid samples and seeds.
  plot_data: bool = False  # If True, also write gnuplot-ready columns.
  save_config: bool = True  # If True, write the effective config.gin.
  progress: bool = True  # Show tqdm progress bars on long loops.

  # Quadrature along ovals.
  quad_tol: float = 1e-10  # Absolute tolerance of every oval integral.
  quad_min_nodes: int = 32  # First Gauss-Legendre rule tried.
  quad_max_nodes: int = 4096  # Largest rule before the tanh-sinh fallback.
  tanh_sinh_max_level: int = 12  # Step halvings allowed in the fallback.

  # Equilibria, ceilings and turning points.
  root_xtol: float = 1e-13  # Absolute tolerance of bracketed root solves.
  classify_tol: float = 1e-8  # |H_xx| below this is Degenerate.
  equilibrium_tol: float = 1e-9  # |H_x| allowed at a claimed equilibrium.

  # Default h-grid.
  grid_n: int = 64
  grid_lo_frac: float = 1e-4
  grid_hi_frac: float = 0.999
  grid_h_max: float = 2.0  # Top of the grid when the annulus is unbounded.

  # Zero refinement.
  zero_rel_width: float = 1e-9  # Brackets refined to this fraction of h_hi.
  deriv_rel_step: float = 1e-5  # Central-difference step, relative to h*.

  # Designer.
  design_cond_max: float = 1e12  # Collocation matrices above are rejected.
  design_target_margin: float = 0.01  # Targets this close to 0 or h̄ rejected.
  design_rel_tol: float = 1e-3  # Recovered zeros must sit this close.

  # Dynamics.
  ode_rtol: float = 1e-11
  ode_atol: float = 1e-13
  epsilon_cap: float = 1e-2  # Largest |epsilon| accepted by verify.
  n_seeds: int = 128  # Section seeds scanned for limit cycles.
  seed_lo_frac: float = 1e-2
  seed_hi_frac: float = 0.95
  escape_periods: float = 10.  # Unperturbed periods before EscapedAnnulus.
  section_tol: float = 1e-10  # Bisection width on the section.
  period_cap_factor: float = 5.  # PeriodOverflow past this many linear periods.
  profile_samples: int = 256  # Samples emitted by the profile subcommand.


def define_common_flags():
  # Define the flags shared by every subcommand.
  flags.DEFINE_multi_string('gin_bindings', None, 'Gin parameter bindings.')
  flags.DEFINE_multi_string('gin_configs', None, 'Gin config files.')
  flags.DEFINE_string('scenario', None, 'Scenario JSON file.')
  flags.DEFINE_string('out', None, 'Output directory.')
  flags.DEFINE_string('family', None, 'Restrict `catalog` to one family.')
  flags.DEFINE_bool('json', False, 'Machine-readable `catalog` listing.')
  flags.DEFINE_list('epsilons', None, 'Perturbation sizes for `verify`.')
  flags.DEFINE_float('h', None, 'Energy level for `profile`.')
  flags.DEFINE_integer('threads', None, 'Worker threads.')
  flags.DEFINE_float('tol', None, 'Quadrature tolerance.')
  flags.DEFINE_bool('plot_data', None, 'Write gnuplot-ready columns.')


def apply_flag_overrides(config: Config) -> Config:
  """Explicit command-line flags win over gin bindings."""
  overrides = {}
  if flags.FLAGS.scenario is not None:
    overrides['scenario'] = flags.FLAGS.scenario
  if flags.FLAGS.out is not None:
    overrides['out_dir'] = flags.FLAGS.out
  if flags.FLAGS.threads is not None:
    overrides['threads'] = flags.FLAGS.threads
  if flags.FLAGS.tol is not None:
    overrides['quad_tol'] = flags.FLAGS.tol
  if flags.FLAGS.plot_data is not None:
    overrides['plot_data'] = flags.FLAGS.plot_data
  return dataclasses.replace(config, **overrides)


def parse_epsilons(values: Optional[List[str]]) -> List[float]:
  if not values:
    return []
  try:
    return [float(v) for v in values]
  except ValueError as e:
    raise errors.SchemaError(str(e), field='epsilons') from e


def load_config(save_config=True):
  """Load the config, and optionally checkpoint it."""
  gin.parse_config_files_and_bindings(
      flags.FLAGS.gin_configs, flags.FLAGS.gin_bindings, skip_unknown=True)
  config = apply_flag_overrides(Config())
  if save_config and config.save_config and config.out_dir is not None:
    utils.makedirs(config.out_dir)
    with utils.open_file(os.path.join(config.out_dir, 'config.gin'), 'w') as f:
      f.write(gin.config_str())
  return config
