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

"""Unit-test for the experiment configuration."""

import json

import pytest

from ohdqn.agent import VariantKind
from ohdqn.catch import TransferMode
from ohdqn.config import HYPERPARAMETER_GRID, RunConfig, config_fields, load_config
from ohdqn.supervisor import RoutingSource
from ohdqn.version import __version__


def test_defaults():
    config = RunConfig()

    assert config.variant == 'option_heads'
    assert config.capacity == 32
    assert config.replay_capacity == 10000
    assert config.target_update_period == 4
    assert config.warmup_steps == 10000
    assert config.max_grad_norm == 10.0
    assert config.validation_steps == 6000
    assert config.discount == 0.99
    assert config.batch_size == 32
    assert config.routing_source is RoutingSource.CLASSIFIER
    assert config.transfer_mode is TransferMode.NEGATIVE
    assert config.label == 'option_heads-negative-32'


@pytest.mark.parametrize('variant, mode, learning_rate', [
    ('option_heads', 'negative', 2.5e-4),
    ('option_heads', 'positive', 2.5e-4),
    ('standard', 'negative', 1.25e-4),
    ('half', 'negative', 1.25e-4),
    ('standard', 'positive', 2.5e-4),
    ('half', 'positive', 2.5e-4),
])
def test_effective_learning_rate(variant, mode, learning_rate):
    config = RunConfig(variant=variant, mode=mode)

    assert config.effective_learning_rate == learning_rate
    assert config.optim_config.learning_rate == learning_rate


def test_explicit_learning_rate_wins():
    config = RunConfig(variant='standard', mode='negative', learning_rate=5e-4)

    assert config.effective_learning_rate == 5e-4
    assert config.supervisor_optim_config.learning_rate == 2.5e-4
    assert config.supervisor_optim_config.max_grad_norm == 10.0


def test_derived_settings():
    config = RunConfig(variant='half', capacity=64, epsilon_final=0.05, grey_intensity=0.3)

    assert config.agent_variant.kind is VariantKind.HALF
    assert config.agent_variant.hidden_units == 32
    assert config.epsilon_schedule.final == 0.05
    assert config.epsilon_schedule.warmup == 10000
    assert config.palette.grey == 0.3


@pytest.mark.parametrize('data', [
    {'capacity': 48},
    {'variant': 'triple'},
    {'mode': 'neutral'},
    {'validation_steps': 100},
    {'learning_rate': 0.0},
    {'discount': 1.5},
    {'head_count': 0},
    {'head_count': 3},
    {'routing': 'random'},
    {'unknown_key': 1},
    {'epochs': 'ten'},
])
def test_invalid_configurations(data):
    with pytest.raises(ValueError):
        RunConfig.from_dict(data)


def test_invalid_keyword():
    with pytest.raises(ValueError):
        RunConfig(capacity=48)


def test_option_heads_has_one_head_per_ball_type():
    assert RunConfig(variant='option_heads').head_count == 2

    with pytest.raises(ValueError, match='is not one of'):
        RunConfig(variant='option_heads', head_count=3)


def test_replace_validates():
    config = RunConfig().replace(seed=4, learning_rate=5e-4)

    assert config.seed == 4
    assert config.learning_rate == 5e-4

    with pytest.raises(ValueError):
        RunConfig().replace(target_update_unit='epochs')


def test_round_trip_through_json():
    config = RunConfig(variant='standard', seed=9, learning_rate=1.25e-4)

    assert RunConfig.from_dict(json.loads(json.dumps(config.to_dict()))) == config


def test_provenance():
    provenance = RunConfig(seed=2).provenance()

    assert provenance['version'] == __version__
    assert provenance['config']['seed'] == 2


def test_every_field_is_in_the_schema():
    names = {f.name for f in config_fields()}

    assert RunConfig.from_dict({name: getattr(RunConfig(), name) for name in names}) == RunConfig()


def test_search_grid_has_18_cells():
    sizes = [len(values) for values in HYPERPARAMETER_GRID.values()]

    assert sizes == [3, 3, 2]


def test_load_config(tmpdir, TinyRun):
    path = tmpdir.join('run.json')
    path.write(json.dumps(TinyRun))

    config = load_config(str(path), seed=11, mode=None)

    assert config.seed == 11
    assert config.mode == 'negative'
    assert config.steps_per_epoch == TinyRun['steps_per_epoch']


def test_load_config_without_file():
    assert load_config(capacity=16).capacity == 16


@pytest.mark.parametrize('content', ['{"capacity": ', '[1, 2]', '{"capacity": 48}'])
def test_load_config_rejects_bad_documents(tmpdir, content):
    path = tmpdir.join('run.json')
    path.write(content)

    with pytest.raises(ValueError):
        load_config(str(path))
