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

"""Training and evaluation protocol, multi-seed aggregation and sweeps.

A run starts with ``warmup_steps`` uniformly random steps that fill the
replay memories. Each epoch then takes ``steps_per_epoch`` epsilon-greedy
training steps followed by a greedy validation pass of
``validation_steps`` steps (250 episodes by default) on an environment
driven by its own random stream.

Every random stream of a run is derived from the run seed, so a
configuration and a seed fully determine every reported score.
"""

import itertools
import json
import logging
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .agent import (Agent, DivergenceError, head_for_update, load_checkpoint, restore_agent,
                    save_checkpoint, select_action)
from .catch import (DEFAULT_PALETTE, EPISODE_LENGTH, N_ACTIONS, Catch, TransferMode, greedy_action,
                    optimal_episode_score, render)
from .config import RunConfig
from .replay import Transition
from .supervisor import RoutingSource, Supervisor, oracle_option
from .utils import (read_csv, tile_frames, write_aggregate_csv, write_csv, write_pgm, write_run_csv,
                    write_svg)

logger = logging.getLogger(__name__)

#: str: Name of the per-run score file, also marks a completed sweep cell.
SCORES_FILE = 'scores.csv'


@dataclass(frozen=True)
class EpochRecord:
    """Validation results of one epoch.

    Attributes:
        epoch (int): Epoch index, starting at 1.
        avg_score (float): Average score per validation episode.
        episodes (int): Validation episodes.
        duration (float): Wall-clock seconds of the epoch, validation included.
        oracle_score (float): Score with oracle routing (option heads only).
        routing_accuracy (float): Fraction of validation steps on which the
            classifier agreed with the oracle (option heads only).
    """

    epoch: int
    avg_score: float
    episodes: int
    duration: float
    oracle_score: Optional[float] = None
    routing_accuracy: Optional[float] = None


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of a validation pass."""

    score: float
    episodes: int
    total_reward: float
    routing_accuracy: Optional[float] = None


@dataclass(frozen=True)
class AggregateCurve:
    """Per-epoch statistics of the scores of several seeds.

    Attributes:
        label (str): Curve name, usually the variant.
        epochs (list): Epoch indices.
        mean (list): Sample mean per epoch.
        std (list): Sample standard deviation per epoch.
        median (list): Median per epoch.
        seeds (int): Number of runs aggregated.
    """

    label: str
    epochs: List[int]
    mean: List[float]
    std: List[float]
    median: List[float] = field(default_factory=list)
    seeds: int = 0

    def first_passage_epoch(self, threshold, statistic='median'):
        """Return the first epoch whose statistic reaches ``threshold``, or None."""
        return first_passage_epoch(self.epochs, getattr(self, statistic), threshold)

    def plot(self, ax=None, **options):
        """Plot the mean curve and its standard deviation band with Matplotlib.

        Raises:
            ImportError: If Matplotlib can not be imported.

        .. note::

            You should have Matplotlib installed, see the ``matplotlib`` extra.
        """
        try:
            import matplotlib.pyplot as plt
        except ImportError:
            raise ImportError('You should install Matplotlib!')

        if ax is None:
            _, ax = plt.subplots()

        mean = np.asarray(self.mean)
        std = np.asarray(self.std)

        line, = ax.plot(self.epochs, mean, label=options.get('label', self.label), linewidth=1.5)
        ax.fill_between(self.epochs, mean - std, mean + std, color=line.get_color(), alpha=0.2)

        ax.set_xlabel('Epoch')
        ax.set_ylabel('Average score per episode')
        ax.grid(visible=True, color='gray', linestyle='--', linewidth=0.5)
        ax.legend()

        return ax


def first_passage_epoch(epochs, values, threshold):
    """Return the first epoch whose value reaches ``threshold``, or None."""
    for epoch, value in zip(epochs, values):
        if value >= threshold:
            return epoch
    return None


class RunStreams:
    """Independent random streams of a run, all derived from its seed."""

    NAMES = ('network', 'supervisor', 'train_env', 'eval_env', 'oracle_env', 'agent', 'supervisor_sampling')

    def __init__(self, seed):
        """Spawn one stream per name from ``seed``."""
        children = np.random.SeedSequence(int(seed) % 2 ** 64).spawn(len(self.NAMES))
        self._sequences = dict(zip(self.NAMES, children))
        self._generators = {}

    def seed(self, name):
        """Return an integer seed derived for ``name``."""
        return int(self._sequences[name].generate_state(1, np.uint64)[0])

    def generator(self, name):
        """Return the generator of ``name``, created on first use."""
        if name not in self._generators:
            self._generators[name] = np.random.default_rng(self._sequences[name])
        return self._generators[name]


class AgentPolicy:
    """The evaluation policy of an agent: route to a head, then act with that head only."""

    def __init__(self, agent, supervisor=None, routing=RoutingSource.CLASSIFIER, epsilon=0.0, rng=None):
        """Create a policy.

        Args:
            agent (ohdqn.agent.Agent): The agent.
            supervisor (ohdqn.supervisor.Supervisor, optional): Required for
                classifier routing of a multi-head agent.
            routing (RoutingSource): Where options come from.
            epsilon (float): Exploration rate, 0 for a greedy policy.
            rng (numpy.random.Generator, optional): Stream for exploration.
        """
        routing = RoutingSource(routing)
        if agent.head_count > 1 and routing is RoutingSource.CLASSIFIER and supervisor is None:
            raise ValueError('classifier routing requires a supervisor.')

        self.agent = agent
        self.supervisor = supervisor
        self.routing = routing
        self.epsilon = epsilon
        self.rng = rng if rng is not None else np.random.default_rng(0)

        #: int: Steps routed by the classifier.
        self.routed = 0

        #: int: Routed steps on which the classifier agreed with the oracle.
        self.agreements = 0

    @property
    def routing_accuracy(self):
        """Return the agreement rate of the classifier with the oracle, if it was used."""
        return self.agreements / self.routed if self.routed else None

    def option(self, state, observation):
        """Return the option serving a state."""
        oracle = oracle_option(state.ball_type)
        if self.agent.head_count == 1 or self.routing is RoutingSource.ORACLE:
            return oracle

        option = self.supervisor.route(observation)
        self.routed += 1
        self.agreements += int(option == oracle)
        return option

    def __call__(self, state, observation):
        """Return the action for a state and its observation."""
        head = self.agent.head_for_option(self.option(state, observation))
        return select_action(self.agent.q_values(observation, head), self.epsilon, self.rng)


class GreedyCatchPolicy:
    """The hand-coded optimal policy, reading the environment state."""

    def __call__(self, state, observation):
        """Return the optimal action."""
        return greedy_action(state)


class RandomPolicy:
    """Uniformly random actions."""

    def __init__(self, rng):
        """Create a policy drawing from ``rng``."""
        self.rng = rng

    def __call__(self, state, observation):
        """Return a random action."""
        return int(self.rng.integers(N_ACTIONS))


def evaluate_policy(policy, mode, steps=6000, rng=None, palette=DEFAULT_PALETTE):
    """Play ``steps`` steps of Catch with a policy and return its average score per episode.

    Episodes are numbered from 0, so the first one uses a white ball.

    Raises:
        ValueError: If ``steps`` is not a positive multiple of the episode length.
    """
    if steps < EPISODE_LENGTH or steps % EPISODE_LENGTH:
        raise ValueError(f'validation steps must be a positive multiple of {EPISODE_LENGTH}, got {steps}.')

    env = Catch(mode, rng if rng is not None else np.random.default_rng(0), palette)
    state, observation = env.reset(0)

    total, episodes = 0.0, 0
    for i in range(steps):
        state, observation, reward, terminal = env.step(policy(state, observation))
        total += reward
        if terminal:
            episodes += 1
            if i + 1 < steps:
                state, observation = env.reset()

    return ValidationResult(score=total / episodes, episodes=episodes, total_reward=total,
                            routing_accuracy=getattr(policy, 'routing_accuracy', None))


def validate(agent, supervisor, mode, steps=6000, rng=None, routing=RoutingSource.CLASSIFIER,
             palette=DEFAULT_PALETTE, epsilon=0.0):
    """Evaluate the greedy policy of an agent.

    Args:
        agent (ohdqn.agent.Agent): The agent.
        supervisor (ohdqn.supervisor.Supervisor): Its supervisory network, may
            be None for single-head agents or oracle routing.
        mode (ohdqn.catch.TransferMode): Reward scheme.
        steps (int): Validation steps, a multiple of the episode length.
        rng (numpy.random.Generator, optional): Dedicated environment stream.
        routing (RoutingSource): Where options come from.
        palette (ohdqn.catch.Palette): Pixel intensities.
        epsilon (float): Exploration rate of the evaluation policy.

    Returns:
        ValidationResult: Average score per episode and routing statistics.
    """
    policy = AgentPolicy(agent, supervisor, routing, epsilon)
    return evaluate_policy(policy, mode, steps, rng, palette)


class Experiment:
    """A single training run: agent, supervisor, environment and random streams."""

    def __init__(self, config):
        """Build every component of a run from its configuration."""
        self.config = config
        self.streams = RunStreams(config.seed)
        self.mode = config.transfer_mode
        self.palette = config.palette

        self.agent = Agent(config.agent_variant, seed=self.streams.seed('network'),
                           optim=config.optim_config, discount=config.discount,
                           batch_size=config.batch_size, replay_capacity=config.replay_capacity,
                           train_period=config.train_period,
                           target_update_period=config.target_update_period,
                           target_update_unit=config.target_update_unit,
                           epsilon=config.epsilon_schedule, rng=self.streams.generator('agent'))

        self.supervisor = None
        if self.agent.head_count > 1:
            self.supervisor = Supervisor(seed=self.streams.seed('supervisor'),
                                         head_count=self.agent.head_count,
                                         hidden_units=config.supervisor_hidden_units,
                                         optim=config.supervisor_optim_config,
                                         buffer_size=config.supervisor_buffer_size,
                                         batch_size=config.supervisor_batch_size,
                                         train_period=config.supervisor_period,
                                         rng=self.streams.generator('supervisor_sampling'))

        self.env = Catch(self.mode, self.streams.generator('train_env'), self.palette)
        self.state, self.observation = self.env.reset()

        #: list: Records of the epochs completed so far.
        self.records = []

    def _env_step(self, action, option):
        state, observation, reward, terminal = self.env.step(action)
        self.agent.observe(Transition(self.observation, action, reward, observation, terminal), option)
        if self.supervisor is not None:
            self.supervisor.observe(self.observation, option)

        if terminal:
            self.state, self.observation = self.env.reset()
        else:
            self.state, self.observation = state, observation

    def warmup(self):
        """Take the uniformly random steps that fill the replay memories."""
        for _ in range(self.config.warmup_steps):
            option = oracle_option(self.state.ball_type)
            self._env_step(int(self.agent.rng.integers(N_ACTIONS)), option)
        logger.info('%s: warmup of %d steps done', self.config.label, self.config.warmup_steps)

    def train_step(self):
        """Take one epsilon-greedy step and the updates that fall due after it.

        Raises:
            DivergenceError: If a training loss is not finite.
        """
        option = oracle_option(self.state.ball_type)
        action = self.agent.act(self.observation, option)
        self._env_step(action, option)

        steps = self.agent.env_steps

        if steps % self.agent.train_period == 0:
            head = head_for_update(self.agent.update_count, self.agent.head_count)
            if self.agent.can_train(head):
                self.agent.train_update(head)

        if self.supervisor is not None:
            self.supervisor.maybe_train(steps)

        self.agent.maybe_sync_target()

    def validate(self):
        """Run the validation pass(es) of the current epoch."""
        routing = self.config.routing_source
        result = validate(self.agent, self.supervisor, self.mode, self.config.validation_steps,
                          self.streams.generator('eval_env'), routing, self.palette,
                          self.config.eval_epsilon)

        oracle = None
        if self.agent.head_count > 1:
            if routing is RoutingSource.ORACLE:
                oracle = result
            else:
                oracle = validate(self.agent, None, self.mode, self.config.validation_steps,
                                  self.streams.generator('oracle_env'), RoutingSource.ORACLE,
                                  self.palette, self.config.eval_epsilon)

        return result, oracle

    def run_epoch(self):
        """Train for one epoch, validate and return its :class:`EpochRecord`."""
        epoch = len(self.records) + 1
        started = time.perf_counter()

        try:
            for _ in range(self.config.steps_per_epoch):
                self.train_step()
        except DivergenceError as e:
            logger.error('%s: training diverged in epoch %d: %s', self.config.label, epoch, e)
            raise DivergenceError(f'epoch {epoch} of {self.config.label} (seed {self.config.seed}): {e}') from e

        result, oracle = self.validate()

        record = EpochRecord(epoch=epoch, avg_score=result.score, episodes=result.episodes,
                             duration=time.perf_counter() - started,
                             oracle_score=oracle.score if oracle is not None else None,
                             routing_accuracy=result.routing_accuracy)
        self.records.append(record)

        logger.info('%s seed %d epoch %d: score %.3f (%d episodes, %.1fs)', self.config.label,
                    self.config.seed, epoch, record.avg_score, record.episodes, record.duration)

        return record

    def run(self, on_epoch=None):
        """Warm up, then train and validate for every epoch.

        Args:
            on_epoch (callable, optional): Called with each :class:`EpochRecord`.

        Returns:
            list: The :class:`EpochRecord` of every epoch.
        """
        if self.agent.env_steps == 0:
            self.warmup()

        while len(self.records) < self.config.epochs:
            record = self.run_epoch()
            if on_epoch is not None:
                on_epoch(record)

        return self.records

    def save(self, directory):
        """Write the checkpoint, then the run outputs, to ``directory``.

        ``scores.csv`` is written last since it marks the run as complete.
        """
        os.makedirs(directory, exist_ok=True)
        save_checkpoint(os.path.join(directory, 'checkpoint.npz'), self.agent, self.supervisor,
                        self.config.to_dict())
        write_run_outputs(directory, self.records, self.config)


def run(config, on_epoch=None):
    """Train and validate an agent as described by ``config``.

    Returns:
        list: One :class:`EpochRecord` per epoch.
    """
    return Experiment(config).run(on_epoch)


def write_run_outputs(directory, records, config):
    """Write the files of a run.

    ``scores.csv`` holds ``epoch,avg_score``, ``records.csv`` every
    deterministic field of the records, ``timings.json`` the durations and
    ``provenance.json`` the configuration and package version.
    """
    write_csv(os.path.join(directory, 'records.csv'),
              ('epoch', 'avg_score', 'episodes', 'oracle_score', 'routing_accuracy'),
              ((r.epoch, r.avg_score, r.episodes, r.oracle_score, r.routing_accuracy) for r in records))

    with open(os.path.join(directory, 'timings.json'), 'wt', encoding='utf-8') as fp:
        json.dump({r.epoch: r.duration for r in records}, fp, indent=2)

    with open(os.path.join(directory, 'provenance.json'), 'wt', encoding='utf-8') as fp:
        json.dump(config.provenance(), fp, indent=2, sort_keys=True)

    write_run_csv(os.path.join(directory, SCORES_FILE), records)


def _scores(records):
    return [r.avg_score if isinstance(r, EpochRecord) else float(r) for r in records]


def aggregate(records_by_seed, label=''):
    """Compute per-epoch mean, standard deviation and median across seeds.

    Sums are computed exactly, so the result does not depend on the order
    of the seeds.

    Args:
        records_by_seed (sequence): One sequence of :class:`EpochRecord` (or
            of scores) per seed.
        label (str): Curve name.

    Returns:
        AggregateCurve: The statistics.

    Raises:
        ValueError: With fewer than two seeds or mismatched epoch counts.
    """
    runs = [_scores(records) for records in records_by_seed]
    if len(runs) < 2:
        raise ValueError(f'aggregation needs at least 2 seeds, got {len(runs)}.')

    lengths = {len(scores) for scores in runs}
    if len(lengths) != 1:
        raise ValueError(f'runs have mismatched epoch counts: {sorted(lengths)}.')

    per_epoch = list(zip(*runs))

    return AggregateCurve(label=label,
                          epochs=list(range(1, len(per_epoch) + 1)),
                          mean=[statistics.fmean(values) for values in per_epoch],
                          std=[statistics.stdev(values) for values in per_epoch],
                          median=[statistics.median(values) for values in per_epoch],
                          seeds=len(runs))


def emit_outputs(curves, config, output_dir, title=None):
    """Write the aggregate CSV of each curve and one SVG with all of them.

    Args:
        curves (sequence): :class:`AggregateCurve` objects.
        config (RunConfig): Configuration embedded in the SVG and in ``provenance.json``.
        output_dir (str): Destination directory, created if needed.
        title (str, optional): Plot title.

    Returns:
        list: Paths of the written files.
    """
    os.makedirs(output_dir, exist_ok=True)

    paths = []
    for curve in curves:
        path = os.path.join(output_dir, f'aggregate-{curve.label}.csv')
        write_aggregate_csv(path, curve)
        paths.append(path)

    provenance = config.provenance()
    provenance['curves'] = [{'label': c.label, 'seeds': c.seeds} for c in curves]

    path = os.path.join(output_dir, 'learning-curves.svg')
    write_svg(path, curves, title=title or f'{config.mode} transfer, {config.capacity} neurons',
              provenance=provenance)
    paths.append(path)

    with open(os.path.join(output_dir, 'provenance.json'), 'wt', encoding='utf-8') as fp:
        json.dump(provenance, fp, indent=2, sort_keys=True)

    return paths


def read_curve(path, label=None):
    """Read an aggregate (``epoch,mean,std``) or run (``epoch,avg_score``) CSV as a curve."""
    columns, data = read_csv(path)
    label = label or os.path.splitext(os.path.basename(path))[0].replace('aggregate-', '')
    if 'mean' in columns:
        return AggregateCurve(label, data['epoch'], data['mean'], data['std'])
    scores = data['avg_score']
    return AggregateCurve(label, data['epoch'], scores, [0.0] * len(scores), scores, 1)


def cell_name(overrides):
    """Return the directory name of a sweep cell."""
    if not overrides:
        return 'base'
    return '_'.join(f'{key}={value}' for key, value in sorted(overrides.items()))


def expand_grid(grid):
    """Return the cross product of a grid as a list of override dictionaries."""
    keys = sorted(grid)
    return [dict(zip(keys, values)) for values in itertools.product(*(grid[k] for k in keys))]


@dataclass(frozen=True)
class SweepCell:
    """Outcome of one sweep cell."""

    name: str
    directory: str
    overrides: dict
    status: str
    message: str = ''


def _run_cell(config_data, directory):
    """Run one sweep cell; failures are written to ``error.txt`` instead of raised."""
    error_path = os.path.join(directory, 'error.txt')
    try:
        config = RunConfig.from_dict(config_data)
        experiment = Experiment(config)
        experiment.run()
        experiment.save(directory)
        if os.path.exists(error_path):
            os.remove(error_path)
        return 'completed', ''
    except Exception as e:
        logger.exception('sweep cell %s failed', directory)
        os.makedirs(directory, exist_ok=True)
        with open(error_path, 'wt', encoding='utf-8') as fp:
            fp.write(f'{type(e).__name__}: {e}\n')
        return 'failed', str(e)


def sweep(base_config, grid, output_dir=None, workers=1):
    """Run every cell of a grid of configuration overrides.

    Cells whose directory already holds ``scores.csv`` are skipped, so an
    interrupted sweep resumes where it stopped. A failing cell is recorded
    and the sweep continues.

    Args:
        base_config (RunConfig): Values of the keys not in the grid.
        grid (dict): Mapping from configuration key to the list of its values.
        output_dir (str, optional): Root directory, ``base_config.output_dir`` by default.
        workers (int): Cells run concurrently in separate processes.

    Returns:
        list: One :class:`SweepCell` per cell.
    """
    if 'output_dir' in grid:
        raise ValueError('output_dir can not be swept, every cell gets its own directory.')

    output_dir = output_dir or base_config.output_dir

    cells, pending = [], []
    for overrides in expand_grid(grid):
        name = cell_name(overrides)
        directory = os.path.join(output_dir, name)
        config = base_config.replace(output_dir=directory, **overrides)

        if os.path.exists(os.path.join(directory, SCORES_FILE)):
            logger.info('sweep cell %s already completed, skipping', name)
            cells.append(SweepCell(name, directory, overrides, 'skipped'))
            continue

        pending.append((name, directory, overrides, config.to_dict()))

    logger.info('sweep: %d cell(s) to run, %d skipped', len(pending), len(cells))

    if workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_run_cell, data, directory) for _, directory, _, data in pending]
            outcomes = [future.result() for future in futures]
    else:
        outcomes = [_run_cell(data, directory) for _, directory, _, data in pending]

    for (name, directory, overrides, _), (status, message) in zip(pending, outcomes):
        cells.append(SweepCell(name, directory, overrides, status, message))

    return cells


def load_cell(directory):
    """Return the configuration and scores of a completed run directory, or None."""
    provenance_path = os.path.join(directory, 'provenance.json')
    scores_path = os.path.join(directory, SCORES_FILE)
    if not (os.path.exists(provenance_path) and os.path.exists(scores_path)):
        return None

    with open(provenance_path, 'rt', encoding='utf-8') as fp:
        config = RunConfig.from_dict(json.load(fp)['config'])

    _, data = read_csv(scores_path)

    return config, data['avg_score']


def _curve_label(settings, varying):
    return '_'.join([settings['variant']] + [f'{key}={settings[key]}' for key in varying])


def aggregate_sweep(output_dir):
    """Aggregate completed sweep cells over seeds, one figure per (mode, capacity) panel.

    Cells are grouped by every setting except ``seed`` and ``output_dir``;
    groups with fewer than two seeds are skipped. A curve is labeled by its
    variant followed by the settings that differ between the curves of its
    panel, such as ``standard_learning_rate=0.0005``.

    Returns:
        dict: Mapping from panel name to the list of written paths.
    """
    groups = {}
    for name in sorted(os.listdir(output_dir)):
        loaded = load_cell(os.path.join(output_dir, name))
        if loaded is None:
            continue
        config, scores = loaded
        settings = {k: v for k, v in config.to_dict().items() if k not in ('seed', 'output_dir')}
        key = json.dumps(settings, sort_keys=True)
        groups.setdefault(key, (config, settings, []))[2].append(scores)

    panels = {}
    for config, settings, runs in groups.values():
        if len(runs) < 2:
            logger.warning('%s: only %d seed(s), not aggregated', config.label, len(runs))
            continue
        panels.setdefault(f'{config.mode}-{config.capacity}', []).append((config, settings, runs))

    written = {}
    for panel, entries in panels.items():
        varying = sorted(key for key in entries[0][1] if key != 'variant'
                         and len({json.dumps(s[key]) for _, s, _ in entries}) > 1)
        curves = [aggregate(runs, label=_curve_label(settings, varying))
                  for _, settings, runs in entries]
        written[panel] = emit_outputs(curves, entries[0][0], os.path.join(output_dir, 'figures', panel))

    return written


def dump_episode(output_dir, mode, seed=0, episode_index=0, palette=DEFAULT_PALETTE, policy=None):
    """Play one episode and write each of its frames as a PGM image.

    Also writes ``grid.pgm``, all frames of the episode side by side.

    Args:
        output_dir (str): Destination directory, created if needed.
        mode (ohdqn.catch.TransferMode): Reward scheme.
        seed (int): Seed of the environment stream.
        episode_index (int): Index of the episode, selects the ball type.
        palette (ohdqn.catch.Palette): Pixel intensities.
        policy (callable, optional): ``policy(state, observation)``, the
            hand-coded optimal policy by default.

    Returns:
        list: Paths of the written files.
    """
    os.makedirs(output_dir, exist_ok=True)
    policy = policy or GreedyCatchPolicy()

    env = Catch(mode, np.random.default_rng(seed), palette)
    state, observation = env.reset(episode_index)

    frames = [render(state, palette)]
    reward, terminal = 0.0, False
    while not terminal:
        state, observation, reward, terminal = env.step(policy(state, observation))
        frames.append(render(state, palette))

    paths = []
    for i, frame in enumerate(frames):
        path = os.path.join(output_dir, f'step-{i:02d}.pgm')
        write_pgm(path, frame, comment=f'{state.ball_type.value} ball, step {i}')
        paths.append(path)

    path = os.path.join(output_dir, 'grid.pgm')
    write_pgm(path, tile_frames(frames), comment=f'{state.mode.value} transfer, reward {reward:g}')
    paths.append(path)

    return paths


def oracle_report(steps=6000, seed=0):
    """Return, per transfer mode, the brute-force optimal score and the score of the greedy policy."""
    report = {}
    for mode in TransferMode:
        result = evaluate_policy(GreedyCatchPolicy(), mode, steps, np.random.default_rng(seed))
        report[mode.value] = {'optimal': optimal_episode_score(mode), 'greedy': result.score,
                              'episodes': result.episodes}
    return report


def restore_run(path):
    """Rebuild the agent and supervisor stored in a checkpoint.

    Returns:
        tuple: The :class:`RunConfig`, the :class:`ohdqn.agent.Agent` and the
        :class:`ohdqn.supervisor.Supervisor` (None for single-head agents).

    Raises:
        OSError: If the checkpoint can not be read.
        ValueError: If the checkpoint is inconsistent.
    """
    manifest, networks = load_checkpoint(path)
    config = RunConfig.from_dict(manifest['config']) if manifest.get('config') else RunConfig(
        variant=manifest['variant']['kind'], capacity=manifest['variant']['capacity'],
        head_count=manifest['variant']['head_count'])

    experiment = Experiment(config)
    restore_agent(experiment.agent, manifest, networks)

    supervisor = experiment.supervisor
    if supervisor is not None:
        if 'supervisor' not in networks:
            raise ValueError(f'{path}: checkpoint of a multi-head agent without supervisor.')
        supervisor.params = networks['supervisor']

    return config, experiment.agent, supervisor
