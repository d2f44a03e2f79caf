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

"""Utility functions."""

import concurrent.futures
import dataclasses
import enum
import json
import math
import os
from typing import Any, Callable, Iterable, List, Sequence

import numpy as np
import tqdm

SCHEMA_VERSION = '1'


def open_file(pth, mode='r'):
    # LF line endings on every platform.
    if 'b' in mode:
        return open(pth, mode=mode)
    return open(pth, mode=mode, encoding='utf-8', newline='\n')


def file_exists(pth):
    return os.path.exists(pth)


def makedirs(pth):
    if not file_exists(pth):
        os.makedirs(pth)


def format_float(x: float) -> str:
    """Shortest string that round-trips to the same double."""
    return repr(float(x))


def jsonable(obj: Any) -> Any:
    """Converts dataclasses, enums and numpy values into plain JSON values.

    Non-finite floats become the strings 'inf', '-inf' and 'nan' so that the
    output stays strict JSON.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return 'nan' if math.isnan(x) else ('inf' if x > 0 else '-inf')
    return obj


def dumps_json(payload: Any) -> str:
    return json.dumps(jsonable(payload), indent=2, sort_keys=True) + '\n'


def save_json(payload: Any, pth: str):
    """Writes a JSON document stamped with the schema version."""
    payload = dict(jsonable(payload))
    payload.setdefault('schema', SCHEMA_VERSION)
    with open_file(pth, 'w') as f:
        f.write(dumps_json(payload))


def load_json(pth: str) -> Any:
    with open_file(pth, 'r') as f:
        return json.load(f)


def save_csv(header: Sequence[str], rows: Iterable[Sequence[float]], pth: str):
    """Writes a CSV file with full double precision."""
    with open_file(pth, 'w') as f:
        f.write(','.join(header) + '\n')
        for row in rows:
            f.write(','.join(_format_cell(v) for v in row) + '\n')


def save_plot_data(header: Sequence[str], rows: Iterable[Sequence[float]],
                   pth: str):
    """Writes whitespace separated columns that gnuplot reads directly."""
    with open_file(pth, 'w') as f:
        f.write('# ' + ' '.join(header) + '\n')
        for row in rows:
            f.write(' '.join(_format_cell(v) for v in row) + '\n')


def _format_cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return 'true' if v else 'false'
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format_float(v)


def parallel_map(fn: Callable[[Any], Any],
                 items: Sequence[Any],
                 threads: int = 1,
                 desc: str = '',
                 progress: bool = False) -> List[Any]:
    """Maps `fn` over `items` keeping their order, optionally on a pool."""
    items = list(items)
    if threads <= 1:
        it = map(fn, items)
    else:
        executor = concurrent.futures.ThreadPoolExecutor(max_workers=threads)
        it = executor.map(fn, items)
    try:
        return list(tqdm.tqdm(it, total=len(items), desc=desc,
                              disable=not progress, leave=False))
    finally:
        if threads > 1:
            executor.shutdown(wait=True)
