#
# This file is part of ohdqn, a DQN with option heads for the game of Catch.
# Copyright (C) 2026 ohdqn developers.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program. If not, see <https://www.gnu.org/licenses/gpl-3.0.html>.
#

"""Command-Line Interface for ohdqn experiments."""

import json
import logging
import typing

import click
import numpy as np

from .catch import Palette, TransferMode
from .config import HYPERPARAMETER_GRID, config_fields, load_config
from .harness import (Experiment, aggregate_sweep, dump_episode, oracle_report, read_curve,
                      restore_run, sweep, validate)
from .supervisor import RoutingSource
from .utils import write_svg

_choices = {
    'variant': ('standard', 'half', 'option_heads'),
    'mode': ('positive', 'negative'),
    'routing': ('classifier', 'oracle'),
    'target_update_unit': ('steps', 'updates'),
}


def _param_type(f):
    if f.name in _choices:
        return click.Choice(_choices[f.name])
    kind = f.type
    if typing.get_origin(kind) is typing.Union:
        kind = next(arg for arg in typing.get_args(kind) if arg is not type(None))
    return {int: click.INT, float: click.FLOAT}.get(kind, click.STRING)


def config_options(command):
    """Add one option per configuration key, named after the key."""
    for f in reversed(config_fields()):
        decls = [f'--{f.name.replace("_", "-")}']
        if '_' in f.name:
            decls.append(f'--{f.name}')
        command = click.option(*decls, f.name, type=_param_type(f), default=None,
                               help=f'Overrides the "{f.name}" configuration key.')(command)
    return command


def _setup_logging(verbose):
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def _load(config_file, overrides):
    try:
        return load_config(config_file, **overrides)
    except ValueError as e:
        raise click.UsageError(str(e))


def _parse_value(token):
    try:
        return json.loads(token)
    except ValueError:
        return token


def _parse_grid(entries):
    grid = {}
    for entry in entries:
        key, sep, values = entry.partition('=')
        if not sep or not values:
            raise click.BadParameter(f'expected KEY=V1,V2,..., got "{entry}".', param_hint='--grid')
        grid[key.strip()] = [_parse_value(v.strip()) for v in values.split(',')]
    return grid


def _parse_seeds(text):
    if '-' in text.strip('-'):
        first, last = text.split('-', 1)
        return list(range(int(first), int(last) + 1))
    return [int(s) for s in text.split(',')]


@click.group()
@click.version_option()
def cli():
    """Train and evaluate DQNs with option heads on the game of Catch.

    .. note:: Every configuration key can be given on the command line.
    """


@cli.command()
@click.option('-v', '--verbose', is_flag=True, default=False)
@click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False),
              help='JSON configuration file.')
@config_options
def train(verbose, config_file, **overrides):
    """Train one agent and write its scores and checkpoint."""
    _setup_logging(verbose)
    config = _load(config_file, overrides)

    click.secho(f'Run: {config.label}, seed {config.seed}', bold=True, fg='black')
    click.secho(f'\tTraining for {config.epochs} epoch(s)... ', bold=False, fg='black')

    def report(record):
        text = f'\t\tepoch {record.epoch}: {record.avg_score:.3f}'
        if record.routing_accuracy is not None:
            text += f' (oracle {record.oracle_score:.3f}, routing accuracy {record.routing_accuracy:.3f})'
        click.secho(text, bold=True, fg='green')

    experiment = Experiment(config)
    experiment.run(on_epoch=report)
    experiment.save(config.output_dir)

    click.secho(f'\tOutputs written to {config.output_dir}', bold=False, fg='black')


@cli.command('sweep')
@click.option('-v', '--verbose', is_flag=True, default=False)
@click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False),
              help='JSON configuration file of the base run.')
@click.option('--grid', 'grid_entries', multiple=True,
              help='Swept key and its values, e.g. --grid learning_rate=0.000125,0.00025')
@click.option('--search', is_flag=True, default=False,
              help='Sweep the learning rate, target update period and final epsilon search sets.')
@click.option('--seeds', type=str, default=None,
              help='Seeds to sweep, e.g. "0-14" or "0,1,2".')
@click.option('--workers', type=int, default=1, help='Cells run concurrently.')
@config_options
def sweep_command(verbose, config_file, grid_entries, search, seeds, workers, **overrides):
    """Run a grid of configurations and aggregate the completed cells."""
    _setup_logging(verbose)
    base = _load(config_file, overrides)

    grid = dict(HYPERPARAMETER_GRID) if search else {}
    grid.update(_parse_grid(grid_entries))
    if seeds is not None:
        grid['seed'] = _parse_seeds(seeds)

    try:
        cells = sweep(base, grid, workers=workers)
    except ValueError as e:
        raise click.UsageError(str(e))

    for cell in cells:
        color = {'completed': 'green', 'skipped': 'yellow', 'failed': 'red'}[cell.status]
        click.secho(f'\t{cell.status:>9}: {cell.name} {cell.message}', bold=True, fg=color)

    for panel, paths in aggregate_sweep(base.output_dir).items():
        click.secho(f'\t{panel}: {len(paths)} file(s) written', bold=False, fg='black')


@cli.command()
@click.option('-v', '--verbose', is_flag=True, default=False)
@click.option('--checkpoint', required=True, type=click.Path(exists=True, dir_okay=False),
              help='Checkpoint written by the train command.')
@click.option('--routing', type=click.Choice(['classifier', 'oracle']), default='classifier',
              help='Where options come from.')
@click.option('--mode', type=click.Choice(['positive', 'negative']), default=None,
              help='Reward scheme, the one of the run by default.')
@click.option('--steps', type=int, default=6000, help='Validation steps.')
@click.option('--seed', type=int, default=0, help='Seed of the validation environment.')
def evaluate(verbose, checkpoint, routing, mode, steps, seed):
    """Evaluate the greedy policy stored in a checkpoint."""
    _setup_logging(verbose)

    config, agent, supervisor = restore_run(checkpoint)
    mode = TransferMode(mode or config.mode)

    try:
        result = validate(agent, supervisor, mode, steps, np.random.default_rng(seed),
                          RoutingSource(routing), config.palette)
    except ValueError as e:
        raise click.UsageError(str(e))

    click.secho(f'{config.label}: {result.score:.4f} per episode over {result.episodes} episodes',
                bold=True, fg='green')
    if result.routing_accuracy is not None:
        click.secho(f'\trouting accuracy: {result.routing_accuracy:.4f}')


@cli.command('oracle-check')
@click.option('--steps', type=int, default=6000, help='Steps of the greedy policy evaluation.')
def oracle_check(steps):
    """Print the optimal score per episode of each transfer mode."""
    for mode, report in oracle_report(steps).items():
        click.secho(f'{mode}: optimal {report["optimal"]:.4f}, greedy policy {report["greedy"]:.4f} '
                    f'over {report["episodes"]} episodes', bold=True, fg='green')


@cli.command()
@click.argument('csv_files', nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('-o', '--output', required=True, type=click.Path(dir_okay=False),
              help='SVG file to write.')
@click.option('--title', type=str, default='', help='Plot title.')
def plot(csv_files, output, title):
    """Draw learning curves from score CSV files into an SVG file."""
    curves = [read_curve(path) for path in csv_files]
    write_svg(output, curves, title=title)
    click.secho(f'{len(curves)} curve(s) written to {output}', bold=True, fg='green')


@cli.command('dump-episode')
@click.option('--mode', type=click.Choice(['positive', 'negative']), default='negative')
@click.option('--seed', type=int, default=0, help='Seed of the environment.')
@click.option('--episode', type=int, default=0, help='Episode index, even is white, odd is grey.')
@click.option('--grey-intensity', type=float, default=0.5, help='Intensity of the grey ball.')
@click.option('-o', '--output-dir', required=True, type=click.Path(file_okay=False),
              help='Directory receiving the PGM frames.')
def dump_episode_command(mode, seed, episode, grey_intensity, output_dir):
    """Write the frames of an episode played by the optimal policy as PGM images."""
    paths = dump_episode(output_dir, TransferMode(mode), seed, episode, Palette(grey=grey_intensity))
    click.secho(f'{len(paths)} image(s) written to {output_dir}', bold=True, fg='green')
