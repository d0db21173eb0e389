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

"""Experiment configuration.

A :class:`RunConfig` holds every setting of a training run. Defaults follow
the tuned double DQN except where the option-heads study changed them:

    ==============================  ========  ====================================
    Setting                         Default   Note
    ==============================  ========  ====================================
    ``replay_capacity``             10000     per head
    ``target_update_period``        4         environment steps
    ``warmup_steps``                10000     uniform random steps
    ``epsilon_anneal_steps``        10000     linear annealing
    ``max_grad_norm``               10
    ``steps_per_epoch``             10000     validation frequency
    ``validation_steps``            6000      250 episodes of Catch
    ``learning_rate``               ``None``  2.5e-4, or 1.25e-4 for the standard
                                              and half DQN under negative transfer
    ==============================  ========  ====================================

Configurations are read from JSON documents and validated against the
schema ``ohdqn/jsonschemas/run-config.json``:

    .. doctest::

        >>> from ohdqn.config import RunConfig
        >>> config = RunConfig(variant='half', mode='negative')
        >>> config.effective_learning_rate
        0.000125
        >>> RunConfig.from_dict({'capacity': 48})
        Traceback (most recent call last):
        ...
        ValueError: invalid configuration: 48 is not one of [16, 32, 64]
"""

import json
import logging
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

import jsonschema
from pkg_resources import resource_string

from .agent import AgentVariant, EpsilonSchedule, VariantKind
from .catch import Palette, TransferMode
from .nn import OptimConfig
from .supervisor import RoutingSource
from .version import __version__

logger = logging.getLogger(__name__)

_schema = json.loads(resource_string(__name__, 'jsonschemas/run-config.json'))

#: dict: The learning rate, target update period and final epsilon search sets.
HYPERPARAMETER_GRID = {
    'learning_rate': [1.25e-4, 2.5e-4, 5e-4],
    'target_update_period': [4, 32, 128],
    'epsilon_final': [0.01, 0.05],
}

#: tuple: Seeds of the full 15-run protocol.
DEFAULT_SEEDS = tuple(range(15))

#: float: Learning rate of every model unless overridden.
DEFAULT_LEARNING_RATE = 2.5e-4

#: float: Learning rate of the single-head models under negative transfer.
NEGATIVE_SINGLE_HEAD_LEARNING_RATE = 1.25e-4


@dataclass(frozen=True)
class RunConfig:
    """Configuration of a training run.

    Raises:
        ValueError: If a field violates the configuration schema.
    """

    variant: str = 'option_heads'
    mode: str = 'negative'
    capacity: int = 32
    head_count: int = 2
    seed: int = 0
    epochs: int = 30
    steps_per_epoch: int = 10000
    warmup_steps: int = 10000
    validation_steps: int = 6000
    learning_rate: Optional[float] = None
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    max_grad_norm: float = 10.0
    discount: float = 0.99
    batch_size: int = 32
    train_period: int = 4
    target_update_period: int = 4
    target_update_unit: str = 'steps'
    epsilon_start: float = 1.0
    epsilon_final: float = 0.01
    epsilon_anneal_steps: int = 10000
    eval_epsilon: float = 0.0
    replay_capacity: int = 10000
    routing: str = 'classifier'
    supervisor_hidden_units: int = 32
    supervisor_buffer_size: int = 1000
    supervisor_period: int = 4
    supervisor_batch_size: int = 32
    supervisor_learning_rate: float = 2.5e-4
    grey_intensity: float = 0.5
    white_intensity: float = 1.0
    paddle_intensity: float = 1.0
    output_dir: str = 'results'

    def __post_init__(self):
        """Validate the configuration against its schema."""
        validate_config(self.to_dict())

    @classmethod
    def from_dict(cls, data):
        """Build a configuration from a dictionary, rejecting unknown keys."""
        validate_config(data)
        return cls(**data)

    def to_dict(self):
        """Return the configuration as a JSON-serializable dictionary."""
        return asdict(self)

    def replace(self, **overrides):
        """Return a copy with some fields replaced."""
        validate_config(overrides)
        return replace(self, **overrides)

    def provenance(self):
        """Return the configuration together with the package version."""
        return {'version': __version__, 'config': self.to_dict()}

    @property
    def agent_variant(self):
        """Return the :class:`ohdqn.agent.AgentVariant` of the run."""
        return AgentVariant.from_name(self.variant, self.capacity, self.head_count)

    @property
    def transfer_mode(self):
        """Return the :class:`ohdqn.catch.TransferMode` of the run."""
        return TransferMode(self.mode)

    @property
    def routing_source(self):
        """Return the :class:`ohdqn.supervisor.RoutingSource` used during validation."""
        return RoutingSource(self.routing)

    @property
    def effective_learning_rate(self):
        """Return the learning rate, resolving ``None`` to the per-model default."""
        if self.learning_rate is not None:
            return self.learning_rate
        single_head = VariantKind(self.variant) is not VariantKind.OPTION_HEADS
        if single_head and self.transfer_mode is TransferMode.NEGATIVE:
            return NEGATIVE_SINGLE_HEAD_LEARNING_RATE
        return DEFAULT_LEARNING_RATE

    @property
    def optim_config(self):
        """Return the optimizer settings of the Q-network."""
        return OptimConfig(learning_rate=self.effective_learning_rate, beta1=self.adam_beta1,
                           beta2=self.adam_beta2, epsilon=self.adam_epsilon,
                           max_grad_norm=self.max_grad_norm)

    @property
    def supervisor_optim_config(self):
        """Return the optimizer settings of the supervisory network."""
        return replace(self.optim_config, learning_rate=self.supervisor_learning_rate)

    @property
    def epsilon_schedule(self):
        """Return the exploration schedule."""
        return EpsilonSchedule(start=self.epsilon_start, final=self.epsilon_final,
                               anneal_steps=self.epsilon_anneal_steps, warmup=self.warmup_steps)

    @property
    def palette(self):
        """Return the rendering intensities."""
        return Palette(paddle=self.paddle_intensity, white=self.white_intensity,
                       grey=self.grey_intensity)

    @property
    def label(self):
        """Return a short label such as ``option_heads-negative-32``."""
        return f'{self.variant}-{self.mode}-{self.capacity}'


def validate_config(data):
    """Validate a (partial) configuration dictionary.

    Raises:
        ValueError: If a key is unknown or a value violates the schema.
    """
    try:
        jsonschema.validate(instance=data, schema=_schema)
    except jsonschema.ValidationError as e:
        raise ValueError(f'invalid configuration: {e.message}') from e


def config_fields():
    """Return the dataclass fields of :class:`RunConfig`."""
    return fields(RunConfig)


def load_config(path=None, **overrides):
    """Read a configuration file and apply overrides.

    Args:
        path (str, optional): JSON document of key/value pairs.
        **overrides: Values taking precedence over the file; ``None`` values
            are ignored.

    Returns:
        RunConfig: The configuration.

    Raises:
        OSError: If the file cannot be read.
        ValueError: If the document is not valid JSON or violates the schema.
    """
    data = {}
    if path is not None:
        with open(path, 'rt', encoding='utf-8') as fp:
            try:
                data = json.load(fp)
            except json.JSONDecodeError as e:
                raise ValueError(f'{path}: {e}') from e
        if not isinstance(data, dict):
            raise ValueError(f'{path}: expected a JSON object.')

    data.update({key: value for key, value in overrides.items() if value is not None})

    return RunConfig.from_dict(data)
