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

"""Command-line front end: catalog, melnikov, design, verify, profile."""

import sys

from absl import app
from absl import flags
from absl import logging

from internal import cli
from internal import configs
from internal import errors

configs.define_common_flags()
FLAGS = flags.FLAGS


def main(argv):
    if len(argv) != 2:
        logging.error('Usage: melnikov.py {%s} [flags]', '|'.join(cli.COMMANDS))
        sys.exit(cli.EXIT_INPUT)
    command = argv[1]

    try:
        epsilons = configs.parse_epsilons(FLAGS.epsilons)
    except errors.InputError as e:
        logging.error('%s', e)
        sys.exit(cli.EXIT_INPUT)

    config = None
    if command != 'catalog':
        # load config file and save the effective bindings next to the outputs
        config = configs.load_config()

    code = cli.run(command, config,
                   family=FLAGS.family,
                   as_json=FLAGS.json,
                   epsilons=epsilons,
                   h=FLAGS.h)
    sys.exit(code)


if __name__ == '__main__':
    app.run(main)
