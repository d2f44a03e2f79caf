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

"""Scenario loading and the subcommands behind melnikov.py."""

import json
import numbers
import os
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

from absl import logging
import flatdict
import numpy as np

from internal import abelian
from internal import configs
from internal import designer
from internal import dynamics_verify
from internal import errors
from internal import pde_catalog
from internal import utils
from internal import zerofind

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_INPUT = 2

_TOP_LEVEL_KEYS = frozenset([
    'schema', 'family', 'params', 'perturbation', 'grid', 'targets',
    'exponents', 'epsilons', 'h', 'name', 'description'
])
_GRID_KEYS = frozenset(['n', 'lo_frac', 'hi_frac', 'h_max'])


def _is_number(v) -> bool:
    return isinstance(v, numbers.Real) and not isinstance(v, bool)


def _require(condition: bool, message: str, field: str):
    if not condition:
        raise errors.SchemaError(message, field=field)


def _number_list(value, field: str, length: Optional[int] = None):
    _require(isinstance(value, list), 'expected a list', field)
    for i, v in enumerate(value):
        if length is None:
            _require(_is_number(v), f'expected a number, got {v!r}',
                     f'{field}[{i}]')
        else:
            _require(
                isinstance(v, list) and len(v) == length and
                all(_is_number(e) for e in v),
                f'expected a list of {length} numbers, got {v!r}',
                f'{field}[{i}]')


def validate_scenario(document: Any) -> Dict[str, Any]:
    """Checks a scenario document against schema "1".

    Raises:
      SchemaError: naming the offending field.
    """
    _require(isinstance(document, dict), 'the scenario must be an object',
             '$')
    unknown = sorted(set(document) - _TOP_LEVEL_KEYS)
    _require(not unknown, f'unknown keys {unknown}', '$')
    _require(
        document.get('schema') == utils.SCHEMA_VERSION,
        f'expected "{utils.SCHEMA_VERSION}", got {document.get("schema")!r}',
        'schema')
    family = document.get('family')
    known = [f.value for f in pde_catalog.Family]
    _require(family in known, f'unknown family {family!r}; expected one of '
             f'{known}', 'family')

    params = document.get('params', {})
    _require(isinstance(params, dict), 'expected an object', 'params')
    for key, value in params.items():
        ok = _is_number(value) or (isinstance(value, list) and
                                   all(_is_number(v) for v in value))
        _require(ok, f'expected a number or a list of numbers, got {value!r}',
                 f'params.{key}')

    pert = document.get('perturbation')
    if pert is not None:
        _require(isinstance(pert, dict), 'expected an object', 'perturbation')
        kind = pert.get('kind')
        _require(kind in ('monomials', 'family_gc'),
                 f'expected "monomials" or "family_gc", got {kind!r}',
                 'perturbation.kind')
        if kind == 'monomials':
            _number_list(pert.get('terms'), 'perturbation.terms', length=3)
            if 'x_shift' in pert:
                _require(_is_number(pert['x_shift']), 'expected a number',
                         'perturbation.x_shift')
        elif family == pde_catalog.Family.TOY.value:
            _number_list(pert.get('expr_coeffs', []), 'perturbation.expr_coeffs')
        else:
            _number_list(pert.get('expr_coeffs', []), 'perturbation.expr_coeffs',
                         length=4)

    grid = document.get('grid', {})
    _require(isinstance(grid, dict), 'expected an object', 'grid')
    unknown = sorted(set(grid) - _GRID_KEYS)
    _require(not unknown, f'unknown keys {unknown}', 'grid')
    if 'n' in grid:
        _require(isinstance(grid['n'], int) and grid['n'] >= 2,
                 f'expected an integer >= 2, got {grid["n"]!r}', 'grid.n')
    for key in ('lo_frac', 'hi_frac'):
        if key in grid:
            _require(_is_number(grid[key]) and 0 < grid[key] < 1,
                     f'expected a number in (0, 1), got {grid[key]!r}',
                     f'grid.{key}')
    if 'h_max' in grid:
        _require(_is_number(grid['h_max']) and grid['h_max'] > 0,
                 'expected a positive number', 'grid.h_max')

    if 'targets' in document:
        _number_list(document['targets'], 'targets')
    if 'exponents' in document:
        _number_list(document['exponents'], 'exponents', length=2)
    if 'epsilons' in document:
        _number_list(document['epsilons'], 'epsilons')
    if 'h' in document:
        _require(_is_number(document['h']), 'expected a number', 'h')
    return document


def parse_scenario(text: str) -> Dict[str, Any]:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise errors.SchemaError(
            f'invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}') from e
    return validate_scenario(document)


def load_scenario(pth: str) -> Dict[str, Any]:
    if not utils.file_exists(pth):
        raise errors.SchemaError(f'no such file {pth!r}', field='scenario')
    with utils.open_file(pth, 'r') as f:
        return parse_scenario(f.read())


def _quad_kwargs(config: configs.Config) -> Dict[str, Any]:
    return dict(tol=config.quad_tol, n_min=config.quad_min_nodes,
                n_max=config.quad_max_nodes,
                tanh_sinh_max_level=config.tanh_sinh_max_level)


def _ode_kwargs(config: configs.Config) -> Dict[str, Any]:
    return dict(rtol=config.ode_rtol, atol=config.ode_atol,
                escape_periods=config.escape_periods,
                epsilon_cap=config.epsilon_cap)


def _grid(model, document, config: configs.Config) -> np.ndarray:
    grid = document.get('grid', {})
    return abelian.default_h_grid(model,
                                  n=grid.get('n', config.grid_n),
                                  lo_frac=grid.get('lo_frac',
                                                   config.grid_lo_frac),
                                  hi_frac=grid.get('hi_frac',
                                                   config.grid_hi_frac),
                                  h_max=grid.get('h_max', config.grid_h_max))


def _out_dir(config: configs.Config) -> str:
    if not config.out_dir:
        raise errors.InvalidParams('An output directory is required (--out).')
    utils.makedirs(config.out_dir)
    return config.out_dir


def _scenario(config: configs.Config) -> Dict[str, Any]:
    if not config.scenario:
        raise errors.SchemaError('a scenario file is required (--scenario)',
                                 field='scenario')
    document = load_scenario(config.scenario)
    logging.info('Scenario %s: %s', config.scenario, scenario_summary(document))
    return document


def _write_table(out_dir, name, header, rows, plot_data):
    rows = list(rows)
    utils.save_csv(header, rows, os.path.join(out_dir, f'{name}.csv'))
    if plot_data:
        utils.save_plot_data(header, rows, os.path.join(out_dir, f'{name}.dat'))


def cmd_catalog(family: Optional[str] = None, as_json: bool = False,
                echo: Callable[[str], None] = print) -> int:
    """Lists the families, their parameters and validity predicates."""
    if family is not None:
        entries = [pde_catalog.describe_family(family)]
    else:
        entries = [pde_catalog.describe_family(f) for f in pde_catalog.Family]
    if as_json:
        echo(utils.dumps_json({'schema': utils.SCHEMA_VERSION,
                               'families': entries}).rstrip('\n'))
        return EXIT_OK
    for entry in entries:
        echo(f'{entry["family"]}: {entry["equation"]}')
        for name, doc in entry['params'].items():
            echo(f'  {name}: {doc}')
        echo(f'  valid when: {entry["validity"]}')
        if entry['presets']:
            echo(f'  presets: {", ".join(entry["presets"])}')
    return EXIT_OK


def cmd_melnikov(config: configs.Config) -> int:
    """Samples M(h) on the scenario grid and reports its zeros."""
    document = _scenario(config)
    out_dir = _out_dir(config)
    instance = pde_catalog.instance_from_scenario(document)
    model = instance.model
    kwargs = _quad_kwargs(config)
    curve = abelian.melnikov_curve(model, instance.perturbation,
                                   _grid(model, document, config),
                                   threads=config.threads,
                                   progress=config.progress, **kwargs)
    records = zerofind.find_zeros(curve, model, instance.perturbation,
                                  rel_width=config.zero_rel_width,
                                  deriv_rel_step=config.deriv_rel_step,
                                  threads=config.threads, **kwargs)
    _write_table(out_dir, 'melnikov', ('h', 'M', 'quad_error'), curve.rows(),
                 config.plot_data)
    utils.save_json(
        {
            'family': instance.family,
            'h_ceiling': model.h_ceiling,
            'center_x': model.center_x,
            'zeros': records,
        }, os.path.join(out_dir, 'zeros.json'))
    logging.info('%s: %d sign changes, %d simple zeros.', instance.family.value,
                 len(records), len(zerofind.simple_zeros(records)))
    return EXIT_OK


def cmd_design(config: configs.Config) -> int:
    """Builds coefficients whose Melnikov function vanishes at the targets."""
    document = _scenario(config)
    for key in ('targets', 'exponents'):
        if key not in document:
            raise errors.SchemaError('required by design', field=key)
    out_dir = _out_dir(config)
    instance = pde_catalog.instance_from_scenario(document)
    model = instance.model
    targets = document['targets']
    exponents = document['exponents']
    grid = None
    if np.isfinite(model.h_ceiling):
        grid = _grid(model, document, config)
    report = designer.design_zeros(model, exponents, targets,
                                   cond_max=config.design_cond_max,
                                   target_margin=config.design_target_margin,
                                   rel_tol=config.design_rel_tol, grid=grid,
                                   threads=config.threads,
                                   **_quad_kwargs(config))
    utils.save_json(
        {
            'family': instance.family,
            'coefficients': [list(t) for t in report.perturbation.terms],
            'x_shift': report.perturbation.x_shift,
            'targets': report.targets,
            'matrix': report.matrix,
            'condition_number': report.condition_number,
            'zeros': report.zeros,
            'residuals': report.residuals,
        }, os.path.join(out_dir, 'design.json'))
    logging.info('Placed %d zeros; condition number %.3e.', len(targets),
                 report.condition_number)
    return EXIT_OK


def convergence_row(report: dynamics_verify.LimitCycleReport) -> Dict[str, Any]:
    """One flat summary row; nested keys are joined with '/'."""
    gaps = [m.relative_gap for m in report.matched_zeros]
    summary = {
        'epsilon': report.epsilon,
        'cycles': {
            'count': len(report.fixed_points),
            'attracting': sum(fp.stability == dynamics_verify.Stability.ATTRACTING
                              for fp in report.fixed_points),
        },
        'gap': {
            'max': max(gaps) if gaps else float('nan'),
            'mean': float(np.mean(gaps)) if gaps else float('nan'),
        },
        'degenerate': report.degenerate,
        'skipped_seeds': len(report.skipped_seeds),
    }
    return dict(flatdict.FlatDict(summary, delimiter='/'))


def cmd_verify(config: configs.Config,
               epsilons: Optional[Sequence[float]] = None) -> int:
    """Detects limit cycles for each epsilon and tabulates the gaps."""
    document = _scenario(config)
    epsilons = list(epsilons or document.get('epsilons', []))
    if not epsilons:
        raise errors.SchemaError('no epsilons given (--epsilons or scenario)',
                                 field='epsilons')
    for epsilon in epsilons:
        dynamics_verify.check_epsilon(epsilon, config.epsilon_cap)
    out_dir = _out_dir(config)
    instance = pde_catalog.instance_from_scenario(document)
    model = instance.model
    kwargs = _quad_kwargs(config)
    curve = abelian.melnikov_curve(model, instance.perturbation,
                                   _grid(model, document, config),
                                   threads=config.threads,
                                   progress=config.progress, **kwargs)
    zeros = zerofind.simple_zeros(
        zerofind.find_zeros(curve, model, instance.perturbation,
                            threads=config.threads, **kwargs))
    rows = []
    for i, epsilon in enumerate(epsilons):
        report = dynamics_verify.detect_limit_cycles(
            instance, epsilon, n_seeds=config.n_seeds, zeros=zeros,
            seed_lo_frac=config.seed_lo_frac, seed_hi_frac=config.seed_hi_frac,
            h_max=document.get('grid', {}).get('h_max', config.grid_h_max),
            section_tol=config.section_tol, threads=config.threads,
            progress=config.progress, **_ode_kwargs(config))
        utils.save_json({'report': report, 'melnikov_zeros': zeros},
                        os.path.join(out_dir, f'limit_cycles_{i:02d}.json'))
        rows.append(convergence_row(report))
    header = sorted(rows[0])
    _write_table(out_dir, 'convergence', header,
                 [[row[k] for k in header] for row in rows], config.plot_data)
    return EXIT_OK


def cmd_profile(config: configs.Config, h: Optional[float] = None) -> int:
    """Writes one period of the traveling wave on the oval H = h."""
    document = _scenario(config)
    h = h if h is not None else document.get('h')
    if h is None:
        raise errors.SchemaError('no energy given (--h or scenario)', field='h')
    out_dir = _out_dir(config)
    instance = pde_catalog.instance_from_scenario(document)
    profile = dynamics_verify.wave_profile(
        instance, h, n_samples=config.profile_samples,
        period_cap_factor=config.period_cap_factor, rtol=config.ode_rtol,
        atol=config.ode_atol, escape_periods=config.escape_periods)
    _write_table(out_dir, 'profile', ('s', 'U'), profile.samples,
                 config.plot_data)
    utils.save_json(
        {
            'family': instance.family,
            'h': profile.h,
            'c': profile.c,
            'period_s': profile.period_s,
            'u_min': profile.u_min,
            'u_max': profile.u_max,
            'overflow': profile.overflow,
        }, os.path.join(out_dir, 'profile.json'))
    return EXIT_OK


COMMANDS = ('catalog', 'melnikov', 'design', 'verify', 'profile')


def run(command: str,
        config: Optional[configs.Config] = None,
        family: Optional[str] = None,
        as_json: bool = False,
        epsilons: Optional[List[float]] = None,
        h: Optional[float] = None) -> int:
    """Runs one subcommand and maps failures to exit codes."""
    try:
        if command == 'catalog':
            return cmd_catalog(family, as_json)
        if command not in COMMANDS:
            raise errors.InvalidParams(
                f'Unknown command {command!r}; expected one of {COMMANDS}.')
        config = config or configs.Config()
        if command == 'melnikov':
            return cmd_melnikov(config)
        if command == 'design':
            return cmd_design(config)
        if command == 'verify':
            return cmd_verify(config, epsilons)
        return cmd_profile(config, h)
    except errors.InputError as e:
        logging.error('%s: %s', type(e).__name__, e)
        return EXIT_INPUT
    except errors.NumericalError as e:
        logging.error('%s: %s', type(e).__name__, e)
        return EXIT_NUMERICAL


def scenario_summary(document: Mapping[str, Any]) -> str:
    return f'{document["family"]} {json.dumps(document.get("params", {}))}'
