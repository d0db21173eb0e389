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

"""Fixed-capacity experience replay with uniform sampling."""

import logging
from typing import NamedTuple

import numpy as np

from .catch import FRAME_STACK, GRID_SIZE, N_ACTIONS

logger = logging.getLogger(__name__)

#: tuple: Shape of an observation stored in a buffer.
OBSERVATION_SHAPE = (FRAME_STACK, GRID_SIZE, GRID_SIZE)

#: frozenset: Rewards a Catch transition may carry.
VALID_REWARDS = frozenset((-1.0, 0.0, 1.0))


class Transition(NamedTuple):
    """A single environment transition."""

    observation: np.ndarray
    action: int
    reward: float
    next_observation: np.ndarray
    terminal: bool


class TransitionBatch(NamedTuple):
    """Transitions stacked along a leading batch axis."""

    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_observations: np.ndarray
    terminals: np.ndarray

    def transition(self, i):
        """Return the i-th transition of the batch."""
        return Transition(self.observations[i], int(self.actions[i]), float(self.rewards[i]),
                          self.next_observations[i], bool(self.terminals[i]))

    @property
    def size(self):
        """Return the number of transitions in the batch."""
        return int(self.actions.shape[0])


class RingBuffer:
    """Fixed-capacity storage of named arrays that evicts its oldest entry first.

    Observations are stored as ``float32``, which is exact for the Catch
    intensities 0, 0.5 and 1.
    """

    def __init__(self, capacity, fields):
        """Allocate the storage.

        Args:
            capacity (int): Maximum number of entries.
            fields (dict): Mapping from field name to ``(shape, dtype)`` of one entry.
        """
        if capacity < 1:
            raise ValueError(f'capacity must be >= 1, got {capacity}.')

        #: int: Maximum number of entries.
        self.capacity = int(capacity)

        self._storage = {
            name: np.zeros((self.capacity,) + tuple(shape), dtype=dtype)
            for name, (shape, dtype) in fields.items()
        }

        #: int: Slot written by the next push.
        self.cursor = 0

        self._size = 0

    def __len__(self):
        """Return the number of stored entries."""
        return self._size

    @property
    def full(self):
        """Return True once the capacity is reached."""
        return self._size == self.capacity

    def _store(self, **values):
        for name, value in values.items():
            self._storage[name][self.cursor] = value
        self.cursor = (self.cursor + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def _slot(self, position):
        """Map a position in insertion order (0 is the oldest entry) to a storage slot."""
        if not -self._size <= position < self._size:
            raise IndexError(f'position {position} out of range for {self._size} entries.')
        position %= self._size
        start = self.cursor if self.full else 0
        return (start + position) % self.capacity

    def _gather(self, slots):
        return {name: array[slots] for name, array in self._storage.items()}

    def sample_slots(self, n, rng):
        """Draw ``n`` storage slots uniformly with replacement.

        Raises:
            ValueError: If fewer than ``n`` entries are stored.
        """
        if n < 1:
            raise ValueError(f'sample size must be >= 1, got {n}.')
        if self._size < n:
            raise ValueError(f'cannot sample {n} entries from a buffer holding {self._size}.')
        return rng.integers(self._size, size=n)


class ReplayBuffer(RingBuffer):
    """Experience replay memory of Catch transitions.

    Example:

        .. doctest::

            >>> import numpy as np
            >>> from ohdqn.replay import ReplayBuffer, Transition
            >>> buffer = ReplayBuffer(capacity=2)
            >>> frame = np.zeros((4, 24, 24))
            >>> for reward in (0.0, 1.0, -1.0):
            ...     _ = buffer.push(Transition(frame, 1, reward, frame, reward != 0.0))
            >>> len(buffer), buffer[0].reward
            (2, 1.0)
    """

    def __init__(self, capacity=10000, observation_shape=OBSERVATION_SHAPE):
        """Create an empty buffer.

        Args:
            capacity (int): Maximum number of transitions.
            observation_shape (tuple): Shape of one observation.
        """
        super(ReplayBuffer, self).__init__(capacity, {
            'observation': (observation_shape, np.float32),
            'action': ((), np.int64),
            'reward': ((), np.float64),
            'next_observation': (observation_shape, np.float32),
            'terminal': ((), np.bool_),
        })

    def push(self, transition):
        """Store a transition, overwriting the oldest one when full.

        Raises:
            ValueError: If the action or the reward is not a Catch value.
        """
        if not 0 <= int(transition.action) < N_ACTIONS:
            raise ValueError(f'invalid action {transition.action}.')
        if float(transition.reward) not in VALID_REWARDS:
            raise ValueError(f'invalid reward {transition.reward}.')

        self._store(observation=transition.observation, action=int(transition.action),
                    reward=float(transition.reward), next_observation=transition.next_observation,
                    terminal=bool(transition.terminal))

        return self

    def sample(self, n, rng):
        """Draw ``n`` transitions uniformly with replacement.

        Args:
            n (int): Batch size.
            rng (numpy.random.Generator): Random stream.

        Returns:
            TransitionBatch: The sampled transitions, observations as ``float64``.

        Raises:
            ValueError: If fewer than ``n`` transitions are stored.
        """
        data = self._gather(self.sample_slots(n, rng))

        return TransitionBatch(observations=data['observation'].astype(np.float64),
                               actions=data['action'],
                               rewards=data['reward'],
                               next_observations=data['next_observation'].astype(np.float64),
                               terminals=data['terminal'])

    def __getitem__(self, position):
        """Return a transition by insertion order, 0 being the oldest one."""
        data = self._gather(self._slot(position))
        return Transition(data['observation'].astype(np.float64), int(data['action']),
                          float(data['reward']), data['next_observation'].astype(np.float64),
                          bool(data['terminal']))

    def __repr__(self):
        """Return the buffer representation."""
        return f'ReplayBuffer(capacity={self.capacity}, size={len(self)})'
