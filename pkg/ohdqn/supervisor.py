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

"""Supervisory policy choosing which option head acts.

During training an oracle maps the ball type of the episode to an option
(white to 0, grey to 1). A small classifier, sharing the convolutional
trunk design of the Q-networks and ending in a softmax over options, is
trained on the oracle labels at the same time and replaces the oracle at
evaluation time. The resulting policy acts greedily with the routed head
only, it never mixes the values of several heads.
"""

import logging
from enum import Enum

import numpy as np

from .catch import BallType
from .nn import (Architecture, OptimConfig, adam_step, backward, clip_global_norm, forward,
                 init_network, softmax, softmax_xent)
from .replay import OBSERVATION_SHAPE, RingBuffer

logger = logging.getLogger(__name__)

#: int: Option of the white ball subtask.
WHITE_OPTION = 0

#: int: Option of the grey ball subtask.
GREY_OPTION = 1


class RoutingSource(Enum):
    """Where the option of a state comes from."""

    ORACLE = 'oracle'
    CLASSIFIER = 'classifier'


def oracle_option(ball_type):
    """Return the ground-truth option of a ball type."""
    return WHITE_OPTION if BallType(ball_type) is BallType.WHITE else GREY_OPTION


def init_supervisor(seed, head_count=2, hidden_units=32):
    """Create the classifier parameters: the standard trunk, one hidden layer, ``head_count`` logits."""
    return init_network(Architecture(hidden_units=hidden_units, head_count=1, n_outputs=head_count), seed)


def classify(params, observation):
    """Return the distribution over options of one observation (or of a batch).

    Args:
        params (ohdqn.nn.NetworkParams): Classifier parameters.
        observation (numpy.ndarray): ``4 x 24 x 24`` observation or a batch of them.

    Returns:
        numpy.ndarray: Probabilities summing to one, one row per observation.
    """
    observation = np.asarray(observation, dtype=np.float64)
    single = observation.ndim == 3
    batch = observation[np.newaxis] if single else observation

    (logits,), _ = forward(params, batch)
    probabilities = softmax(logits)

    return probabilities[0] if single else probabilities


def route(params, observation):
    """Return the most probable option of an observation, ties going to the lowest index."""
    return int(np.argmax(classify(params, observation)))


def train_supervisor_step(params, observations, labels, config):
    """Take one cross-entropy step on a labeled batch.

    Args:
        params (ohdqn.nn.NetworkParams): Classifier parameters, updated in place.
        observations (numpy.ndarray): ``B x 4 x 24 x 24`` observations.
        labels (sequence): Oracle options.
        config (ohdqn.nn.OptimConfig): Adam and clipping settings.

    Returns:
        float: The loss of the batch before the step.
    """
    (logits,), cache = forward(params, observations)
    loss, grad = softmax_xent(logits, labels)

    grads = clip_global_norm(backward(params, cache, 0, grad), config.max_grad_norm)
    adam_step(params, grads, config)

    return loss


class LabelBuffer(RingBuffer):
    """Ring buffer of observations labeled with their oracle option."""

    def __init__(self, capacity=1000, observation_shape=OBSERVATION_SHAPE):
        """Create an empty buffer."""
        super(LabelBuffer, self).__init__(capacity, {
            'observation': (observation_shape, np.float32),
            'label': ((), np.int64),
        })

    def push(self, observation, label):
        """Store a labeled observation."""
        self._store(observation=observation, label=int(label))
        return self

    def sample(self, n, rng):
        """Draw ``n`` labeled observations uniformly with replacement."""
        data = self._gather(self.sample_slots(n, rng))
        return data['observation'].astype(np.float64), data['label']


class Supervisor:
    """The supervisory network with its labeled memory and training cadence."""

    def __init__(self, seed=0, head_count=2, hidden_units=32, optim=None, buffer_size=1000,
                 batch_size=32, train_period=4, rng=None):
        """Create a supervisor.

        Args:
            seed (int): Seed of the parameter initialization.
            head_count (int): Number of options.
            hidden_units (int): Hidden units of the classifier.
            optim (OptimConfig, optional): Adam and clipping settings.
            buffer_size (int): Capacity of the labeled memory.
            batch_size (int): Observations per training step.
            train_period (int): Environment steps between training steps.
            rng (numpy.random.Generator, optional): Stream used for sampling.
        """
        self.head_count = head_count
        self.optim = optim or OptimConfig()
        self.batch_size = batch_size
        self.train_period = train_period
        self.rng = rng if rng is not None else np.random.default_rng(seed)

        #: ohdqn.nn.NetworkParams: Classifier parameters.
        self.params = init_supervisor(seed, head_count, hidden_units)

        #: LabelBuffer: Recently observed states and their oracle options.
        self.memory = LabelBuffer(buffer_size)

        #: int: Training steps performed so far.
        self.step_count = 0

    def observe(self, observation, option):
        """Remember an observation labeled by the oracle."""
        self.memory.push(observation, option)

    def train_step(self):
        """Take one training step on a batch from memory and return its loss."""
        observations, labels = self.memory.sample(self.batch_size, self.rng)
        loss = train_supervisor_step(self.params, observations, labels, self.optim)
        self.step_count += 1
        return loss

    def maybe_train(self, env_steps):
        """Train when ``env_steps`` is a multiple of the period and memory holds a batch.

        Returns:
            float: The loss, or None if no step was taken.
        """
        if env_steps % self.train_period or len(self.memory) < self.batch_size:
            return None
        return self.train_step()

    def classify(self, observation):
        """Return the distribution over options of an observation."""
        return classify(self.params, observation)

    def route(self, observation):
        """Return the option chosen for an observation."""
        return route(self.params, observation)

    def accuracy(self, observations, labels):
        """Return the fraction of observations routed to their label."""
        observations = np.asarray(observations, dtype=np.float64)
        predicted = np.concatenate([
            np.argmax(classify(self.params, observations[i:i + 256]), axis=1)
            for i in range(0, len(observations), 256)
        ])
        return float(np.mean(predicted == np.asarray(labels)))

    def __repr__(self):
        """Return the supervisor representation."""
        return f'Supervisor(head_count={self.head_count}, step_count={self.step_count})'
