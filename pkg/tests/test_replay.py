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

"""Unit-test for the experience replay memory."""

import numpy as np
import pytest

from ohdqn.replay import ReplayBuffer, RingBuffer, Transition


def _transition(value, reward=0.0, terminal=False, action=1):
    frame = np.full((4, 24, 24), value)
    return Transition(frame, action, reward, frame, terminal)


def test_push_and_get():
    buffer = ReplayBuffer(capacity=4)
    buffer.push(_transition(0.5, reward=1.0, terminal=True, action=2))

    transition = buffer[0]

    assert len(buffer) == 1
    assert transition.action == 2
    assert transition.reward == 1.0
    assert transition.terminal is True
    assert transition.observation.dtype == np.float64
    assert np.all(transition.observation == 0.5)


def test_fifo_eviction():
    buffer = ReplayBuffer(capacity=3)
    for i in range(5):
        buffer.push(_transition(i / 8))

    assert len(buffer) == 3
    assert buffer.full
    assert [buffer[i].observation[0, 0, 0] for i in range(3)] == [2 / 8, 3 / 8, 4 / 8]
    assert buffer[-1].observation[0, 0, 0] == 4 / 8

    with pytest.raises(IndexError):
        buffer[3]


def test_never_exceeds_capacity():
    buffer = ReplayBuffer(capacity=7)
    for i in range(50):
        buffer.push(_transition(0.0))
        assert len(buffer) == min(i + 1, 7)


def test_sample_shapes(rng):
    buffer = ReplayBuffer(capacity=40)
    for i in range(40):
        buffer.push(_transition(i / 64, reward=float(i % 2), terminal=bool(i % 2)))

    batch = buffer.sample(32, rng)

    assert batch.size == 32
    assert batch.observations.shape == (32, 4, 24, 24)
    assert batch.observations.dtype == np.float64
    assert batch.next_observations.shape == (32, 4, 24, 24)
    assert batch.actions.shape == (32,)
    assert np.array_equal(batch.terminals, batch.rewards == 1.0)
    assert batch.transition(0).reward in (0.0, 1.0)


def test_sample_is_uniform(rng):
    buffer = RingBuffer(100, {'value': ((), np.int64)})
    for i in range(250):
        buffer._store(value=i)

    slots = np.concatenate([buffer.sample_slots(100, rng) for _ in range(1000)])
    counts = np.bincount(slots, minlength=100)

    expected = slots.size / 100
    chi2 = float(np.sum((counts - expected) ** 2 / expected))

    # 99 degrees of freedom, p = 0.01
    assert slots.size == 10 ** 5
    assert chi2 < 134.64
    assert set(buffer._gather(slots)['value']) == set(range(150, 250))


def test_sample_full_buffer(rng):
    buffer = ReplayBuffer(capacity=10)
    for i in range(10):
        buffer.push(_transition(0.0, reward=float(i % 2)))

    assert buffer.sample(10, rng).size == 10


def test_sample_underfilled(rng):
    buffer = ReplayBuffer(capacity=10)
    for _ in range(3):
        buffer.push(_transition(0.0))

    with pytest.raises(ValueError):
        buffer.sample(4, rng)

    with pytest.raises(ValueError):
        buffer.sample(0, rng)


@pytest.mark.parametrize('action, reward', [(3, 0.0), (-1, 0.0), (0, 0.5), (2, 2.0)])
def test_push_rejects_invalid_values(action, reward):
    with pytest.raises(ValueError):
        ReplayBuffer(capacity=2).push(_transition(0.0, reward=reward, action=action))


def test_invalid_capacity():
    with pytest.raises(ValueError):
        ReplayBuffer(capacity=0)
