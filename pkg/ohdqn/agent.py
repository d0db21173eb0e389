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

"""Deep Q-learning agents: standard DQN, half DQN and DQN with option heads.

All three variants share the convolutional trunk of :mod:`ohdqn.nn` and
differ only in their fully connected part:

- ``standard``: one head with ``capacity`` hidden units;
- ``half``: one head with ``capacity / 2`` hidden units;
- ``option_heads``: ``head_count`` heads with ``capacity / head_count``
  hidden units each, every head owning its own replay buffer.

Updates use double Q-learning targets computed with a delayed target
network, a squared error on the taken actions, global norm clipping and
Adam. With several heads the updates alternate between heads, so every
variant performs the same number of gradient updates for the same number
of environment steps.
"""

import json
import logging
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .catch import N_ACTIONS
from .nn import (Architecture, NetworkParams, OptimConfig, adam_step, backward, clip_global_norm,
                 forward, init_network, sync_target)
from .replay import ReplayBuffer
from .version import __version__

logger = logging.getLogger(__name__)

#: tuple: Hidden layer widths of the standard DQN that can be built.
SUPPORTED_CAPACITIES = (16, 32, 64)


class DivergenceError(ArithmeticError):
    """Raised when a training loss is not finite."""


class VariantKind(Enum):
    """Architectures compared by the experiments."""

    STANDARD = 'standard'
    HALF = 'half'
    OPTION_HEADS = 'option_heads'


@dataclass(frozen=True)
class AgentVariant:
    """An architecture together with its capacity.

    Attributes:
        kind (VariantKind): The architecture.
        capacity (int): Hidden units of the standard DQN this variant is compared to.
        head_count (int): Number of option heads, 1 for the other variants.
    """

    kind: VariantKind
    capacity: int = 32
    head_count: int = 1

    @classmethod
    def standard(cls, capacity=32):
        """Return the standard DQN variant."""
        return cls(VariantKind.STANDARD, capacity)

    @classmethod
    def half(cls, capacity=32):
        """Return the half DQN variant."""
        return cls(VariantKind.HALF, capacity)

    @classmethod
    def option_heads(cls, capacity=32, head_count=2):
        """Return the DQN with option heads."""
        return cls(VariantKind.OPTION_HEADS, capacity, head_count)

    @classmethod
    def from_name(cls, name, capacity=32, head_count=2):
        """Build a variant from its name (``standard``, ``half`` or ``option_heads``)."""
        kind = VariantKind(name)
        if kind is VariantKind.OPTION_HEADS:
            return cls.option_heads(capacity, head_count)
        return cls(kind, capacity)

    @property
    def heads(self):
        """Return the number of heads of the network."""
        return self.head_count if self.kind is VariantKind.OPTION_HEADS else 1

    @property
    def hidden_units(self):
        """Return the hidden units of each head."""
        if self.kind is VariantKind.STANDARD:
            return self.capacity
        if self.kind is VariantKind.HALF:
            return self.capacity // 2
        return self.capacity // max(self.head_count, 1)

    def architecture(self, n_outputs=N_ACTIONS):
        """Return the network topology of the variant.

        Raises:
            ValueError: If the capacity is unsupported or the head count is < 1.
        """
        if self.capacity not in SUPPORTED_CAPACITIES:
            raise ValueError(f'unsupported capacity {self.capacity}, '
                             f'expected one of {SUPPORTED_CAPACITIES}.')
        if self.heads < 1:
            raise ValueError(f'head count must be >= 1, got {self.head_count}.')
        return Architecture(hidden_units=self.hidden_units, head_count=self.heads,
                            n_outputs=n_outputs)

    def __str__(self):
        """Return a short label such as ``option_heads-32``."""
        return f'{self.kind.value}-{self.capacity}'


@dataclass(frozen=True)
class EpsilonSchedule:
    """Exploration rate: constant during warmup, then linearly annealed.

    Attributes:
        start (float): Value during warmup.
        final (float): Value once annealing is over.
        anneal_steps (int): Steps over which the value is annealed.
        warmup (int): Steps of random exploration before annealing starts.
    """

    start: float = 1.0
    final: float = 0.01
    anneal_steps: int = 10000
    warmup: int = 10000


def epsilon_at(schedule, step):
    """Return the exploration rate after ``step`` environment steps.

    Example:

        .. doctest::

            >>> from ohdqn.agent import EpsilonSchedule, epsilon_at
            >>> schedule = EpsilonSchedule(final=0.01)
            >>> [epsilon_at(schedule, s) for s in (0, 10000, 15000, 20000)]
            [1.0, 1.0, 0.505, 0.01]
    """
    if step < 0:
        raise ValueError(f'step must be >= 0, got {step}.')
    if step < schedule.warmup:
        return schedule.start
    if schedule.anneal_steps <= 0:
        return schedule.final

    fraction = min((step - schedule.warmup) / schedule.anneal_steps, 1.0)

    return (1.0 - fraction) * schedule.start + fraction * schedule.final


def select_action(q_values, epsilon, rng):
    """Pick an action epsilon-greedily.

    A uniform draw is always consumed, so the random stream advances the
    same way whatever the outcome. Ties go to the lowest action index.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f'epsilon must be in [0, 1], got {epsilon}.')
    if rng.random() < epsilon:
        return int(rng.integers(len(q_values)))
    return int(np.argmax(q_values))


def head_for_update(update_count, head_count):
    """Return the head trained by the next update: heads take turns."""
    if head_count < 1:
        raise ValueError(f'head count must be >= 1, got {head_count}.')
    return update_count % head_count


def double_dqn_from_q(rewards, terminals, q_online_next, q_target_next, discount):
    """Double Q-learning targets from next-state Q-values.

    The bootstrap action is selected by the online values and evaluated by
    the target values. Terminal transitions do not bootstrap.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    best = np.argmax(q_online_next, axis=1)
    bootstrap = q_target_next[np.arange(best.shape[0]), best]
    return np.where(np.asarray(terminals, dtype=bool), rewards, rewards + discount * bootstrap)


def double_dqn_targets(batch, online, target, discount, head):
    """Double Q-learning targets of a transition batch for one head.

    Args:
        batch (ohdqn.replay.TransitionBatch): Non-empty batch.
        online (NetworkParams): Online parameters, select the next action.
        target (NetworkParams): Target parameters, evaluate the next action.
        discount (float): Discount factor in ``[0, 1]``.
        head (int): The head whose values are used.

    Returns:
        numpy.ndarray: One target per transition.
    """
    if batch.size == 0:
        raise ValueError('cannot compute targets of an empty batch.')

    q_online, _ = forward(online, batch.next_observations)
    q_target, _ = forward(target, batch.next_observations)

    return double_dqn_from_q(batch.rewards, batch.terminals, q_online[head], q_target[head], discount)


def td_loss(q_values, actions, targets):
    """Mean squared error between the values of the taken actions and their targets.

    Returns:
        tuple: The loss and its gradient w.r.t. ``q_values``, zero on the
        actions that were not taken.
    """
    rows = np.arange(q_values.shape[0])
    error = q_values[rows, actions] - targets

    grad = np.zeros_like(q_values)
    grad[rows, actions] = 2.0 * error / q_values.shape[0]

    return float(np.mean(error ** 2)), grad


class Agent:
    """State of a learning agent: online and target networks, replay memories and counters."""

    def __init__(self, variant, seed=0, optim=None, discount=0.99, batch_size=32,
                 replay_capacity=10000, train_period=4, target_update_period=4,
                 target_update_unit='steps', epsilon=None, rng=None):
        """Create an agent.

        Args:
            variant (AgentVariant): Architecture and capacity.
            seed (int): Seed of the parameter initialization.
            optim (OptimConfig, optional): Adam and clipping settings.
            discount (float): Discount factor in ``[0, 1]``.
            batch_size (int): Transitions per update.
            replay_capacity (int): Capacity of each replay buffer.
            train_period (int): Environment steps between updates.
            target_update_period (int): Steps (or updates) between target syncs.
            target_update_unit (str): ``steps`` or ``updates``.
            epsilon (EpsilonSchedule, optional): Exploration schedule.
            rng (numpy.random.Generator, optional): Stream used for exploration
                and replay sampling.
        """
        if not 0.0 <= discount <= 1.0:
            raise ValueError(f'discount must be in [0, 1], got {discount}.')
        if target_update_unit not in ('steps', 'updates'):
            raise ValueError(f'target_update_unit must be "steps" or "updates", got {target_update_unit}.')

        self.variant = variant
        self.optim = optim or OptimConfig()
        self.discount = discount
        self.batch_size = batch_size
        self.train_period = train_period
        self.target_update_period = target_update_period
        self.target_update_unit = target_update_unit
        self.epsilon = epsilon or EpsilonSchedule()
        self.rng = rng if rng is not None else np.random.default_rng(seed)

        #: NetworkParams: Online parameters.
        self.online = init_network(variant, seed)

        #: NetworkParams: Target parameters, a delayed copy of the online ones.
        self.target = self.online.copy()

        #: list: One replay buffer per head.
        self.buffers = [ReplayBuffer(replay_capacity) for _ in range(self.head_count)]

        #: int: Environment steps observed so far.
        self.env_steps = 0

        #: int: Gradient updates performed so far.
        self.update_count = 0

        self._last_sync = 0

    @property
    def head_count(self):
        """Return the number of heads."""
        return self.variant.heads

    def head_for_option(self, option):
        """Return the head that serves an option: single-head agents always use head 0."""
        return option if self.head_count > 1 else 0

    def q_values(self, observation, head=0):
        """Return the Q-values of one observation for a head."""
        outputs, _ = forward(self.online, np.asarray(observation)[np.newaxis])
        return outputs[head][0]

    def current_epsilon(self):
        """Return the exploration rate at the current step."""
        return epsilon_at(self.epsilon, self.env_steps)

    def act(self, observation, option=0, epsilon=None):
        """Select an action for an observation with the head serving ``option``."""
        epsilon = self.current_epsilon() if epsilon is None else epsilon
        return select_action(self.q_values(observation, self.head_for_option(option)), epsilon, self.rng)

    def observe(self, transition, option=0):
        """Store a transition in the buffer of the option's head and count the step."""
        self.buffers[self.head_for_option(option)].push(transition)
        self.env_steps += 1

    def can_train(self, head):
        """Return True if the buffer of ``head`` holds a full batch."""
        return len(self.buffers[head]) >= self.batch_size

    def train_update(self, head=None):
        """Perform one update, on the head whose turn it is by default, and return the loss."""
        head = head_for_update(self.update_count, self.head_count) if head is None else head
        return train_update(self, head)

    def maybe_sync_target(self):
        """Synchronize the target network when due and return True if it was."""
        return maybe_sync_target(self)

    def __repr__(self):
        """Return the agent representation."""
        return f'Agent(variant={self.variant}, env_steps={self.env_steps}, ' \
               f'update_count={self.update_count})'


def train_update(agent, head):
    """Perform one double-DQN update of a head and of the shared trunk.

    Args:
        agent (Agent): The agent, updated in place.
        head (int): The head trained by this update, sampled from its own buffer.

    Returns:
        float: The loss of the sampled batch before the update.

    Raises:
        ValueError: If the head's buffer holds fewer transitions than a batch.
        DivergenceError: If the loss is not finite.
    """
    buffer = agent.buffers[head]
    if len(buffer) < agent.batch_size:
        raise ValueError(f'buffer of head {head} holds {len(buffer)} transitions, '
                         f'{agent.batch_size} are needed.')

    batch = buffer.sample(agent.batch_size, agent.rng)

    targets = double_dqn_targets(batch, agent.online, agent.target, agent.discount, head)

    outputs, cache = forward(agent.online, batch.observations)
    loss, grad = td_loss(outputs[head], batch.actions, targets)

    if not np.isfinite(loss):
        raise DivergenceError(f'non-finite loss {loss} on head {head} after '
                              f'{agent.env_steps} steps and {agent.update_count} updates.')

    grads = clip_global_norm(backward(agent.online, cache, head, grad), agent.optim.max_grad_norm)
    adam_step(agent.online, grads, agent.optim)

    agent.update_count += 1

    return loss


def maybe_sync_target(agent):
    """Copy the online parameters into the target every ``target_update_period`` steps.

    The period counts environment steps, or gradient updates when the
    agent's ``target_update_unit`` is ``updates``.

    Returns:
        bool: True if the target network was synchronized.
    """
    counter = agent.env_steps if agent.target_update_unit == 'steps' else agent.update_count

    if counter == 0 or counter == agent._last_sync or counter % agent.target_update_period:
        return False

    sync_target(agent.online, agent.target)
    agent._last_sync = counter
    logger.debug('target network synchronized at %s %d', agent.target_update_unit, counter)

    return True


def _pack(arrays, prefix, params):
    for name in params.names:
        arrays[f'{prefix}/tensor/{name}'] = params[name]
        arrays[f'{prefix}/m/{name}'] = params.first_moment[name]
        arrays[f'{prefix}/v/{name}'] = params.second_moment[name]
    return {
        'architecture': asdict(params.architecture),
        'shapes': {name: list(params[name].shape) for name in params.names},
        'step_count': dict(params.step_count),
    }


def _unpack(archive, prefix, meta):
    names = list(meta['shapes'])
    params = NetworkParams({name: archive[f'{prefix}/tensor/{name}'] for name in names},
                           Architecture(**meta['architecture']))
    for name in names:
        params.first_moment[name] = np.array(archive[f'{prefix}/m/{name}'], dtype=np.float64)
        params.second_moment[name] = np.array(archive[f'{prefix}/v/{name}'], dtype=np.float64)
        params.step_count[name] = int(meta['step_count'][name])
        if list(params[name].shape) != meta['shapes'][name]:
            raise ValueError(f'checkpoint tensor "{prefix}/{name}" does not match its manifest shape.')
    return params


def save_checkpoint(path, agent, supervisor=None, config=None):
    """Write the networks of an agent (and of its supervisor) to a ``.npz`` archive.

    The archive holds every tensor and Adam moment under a slash-separated
    key and a ``manifest`` entry with a JSON document describing shapes,
    counters, the run configuration and the package version.

    Args:
        path (str): Destination file.
        agent (Agent): The agent.
        supervisor (ohdqn.supervisor.Supervisor, optional): Its supervisory network.
        config (dict, optional): The run configuration, stored for provenance.
    """
    arrays = {}
    networks = {
        'online': _pack(arrays, 'online', agent.online),
        'target': _pack(arrays, 'target', agent.target),
    }
    if supervisor is not None:
        networks['supervisor'] = _pack(arrays, 'supervisor', supervisor.params)

    manifest = {
        'version': __version__,
        'variant': {'kind': agent.variant.kind.value, 'capacity': agent.variant.capacity,
                    'head_count': agent.variant.head_count},
        'env_steps': agent.env_steps,
        'update_count': agent.update_count,
        'networks': networks,
        'config': config,
    }
    arrays['manifest'] = np.array(json.dumps(manifest, sort_keys=True))

    with open(path, 'wb') as fp:
        np.savez(fp, **arrays)

    logger.info('checkpoint written to %s', path)


def load_checkpoint(path):
    """Read an archive written by :func:`save_checkpoint`.

    Returns:
        tuple: The manifest (dict) and a dict of :class:`NetworkParams`
        keyed by ``online``, ``target`` and, when present, ``supervisor``.

    Raises:
        OSError: If the file cannot be read.
        ValueError: If a tensor does not match the manifest.
    """
    with np.load(path, allow_pickle=False) as archive:
        manifest = json.loads(str(archive['manifest']))
        networks = {prefix: _unpack(archive, prefix, meta)
                    for prefix, meta in manifest['networks'].items()}

    return manifest, networks


def restore_agent(agent, manifest, networks):
    """Install checkpointed networks and counters into an agent built with the same variant."""
    if networks['online'].architecture != agent.online.architecture:
        raise ValueError('checkpoint architecture does not match the agent variant.')

    agent.online = networks['online']
    agent.target = networks['target']
    agent.env_steps = manifest['env_steps']
    agent.update_count = manifest['update_count']

    return agent
