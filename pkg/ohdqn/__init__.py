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

"""Deep Q-Networks with option heads on the game of Catch."""

from .agent import Agent, AgentVariant, EpsilonSchedule, VariantKind
from .catch import Action, BallType, Catch, TransferMode, optimal_episode_score
from .config import RunConfig, load_config
from .harness import AggregateCurve, EpochRecord, Experiment, aggregate, run, sweep, validate
from .nn import NetworkParams, OptimConfig, init_network
from .replay import ReplayBuffer, Transition
from .supervisor import RoutingSource, Supervisor
from .version import __version__

__all__ = (
    '__version__',
    'Action',
    'Agent',
    'AgentVariant',
    'AggregateCurve',
    'BallType',
    'Catch',
    'EpochRecord',
    'EpsilonSchedule',
    'Experiment',
    'NetworkParams',
    'OptimConfig',
    'ReplayBuffer',
    'RoutingSource',
    'RunConfig',
    'Supervisor',
    'Transition',
    'TransferMode',
    'VariantKind',
    'aggregate',
    'init_network',
    'load_config',
    'optimal_episode_score',
    'run',
    'sweep',
    'validate',
)
