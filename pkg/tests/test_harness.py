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

"""Unit-test for the training protocol, aggregation and sweeps."""

import math
import os

import numpy as np
import pytest

from ohdqn.agent import Agent, AgentVariant, DivergenceError
from ohdqn.catch import TransferMode, optimal_episode_score
from ohdqn.config import HYPERPARAMETER_GRID, RunConfig
from ohdqn.harness import (AggregateCurve, EpochRecord, Experiment, GreedyCatchPolicy, RandomPolicy,
                           RunStreams, aggregate, aggregate_sweep, cell_name, dump_episode,
                           emit_outputs, evaluate_policy, expand_grid, first_passage_epoch,
                           oracle_report, read_curve, restore_run, run, sweep, validate)
from ohdqn.supervisor import RoutingSource, Supervisor

slow = pytest.mark.skipif(not os.getenv('OHDQN_RUN_SLOW'), reason='long run, set OHDQN_RUN_SLOW=1')


def _read(path):
    with open(path, 'rb') as fp:
        return fp.read()


@pytest.mark.parametrize('mode, score', [(TransferMode.POSITIVE, 1.0), (TransferMode.NEGATIVE, 0.5)])
def test_greedy_policy_reaches_optimal_score(rng, mode, score):
    result = evaluate_policy(GreedyCatchPolicy(), mode, 6000, rng)

    assert result.episodes == 250
    assert result.score == score
    assert result.score == optimal_episode_score(mode)


@pytest.mark.parametrize('mode', list(TransferMode))
def test_random_policy_scores_low(rng, mode):
    result = evaluate_policy(RandomPolicy(rng), mode, 6000, np.random.default_rng(1))

    assert result.episodes == 250
    assert result.score < 0.25


@pytest.mark.parametrize('steps', [0, 23, 100])
def test_evaluate_policy_rejects_partial_episodes(steps):
    with pytest.raises(ValueError):
        evaluate_policy(GreedyCatchPolicy(), TransferMode.POSITIVE, steps)


def test_validate_single_head_agent(rng):
    agent = Agent(AgentVariant.standard(16), seed=1, replay_capacity=8)

    result = validate(agent, None, TransferMode.POSITIVE, 240, rng)

    assert result.episodes == 10
    assert -1.0 <= result.score <= 1.0
    assert result.routing_accuracy is None


def test_validate_option_heads(rng):
    agent = Agent(AgentVariant.option_heads(16), seed=1, replay_capacity=8)
    supervisor = Supervisor(seed=2, buffer_size=8)

    routed = validate(agent, supervisor, TransferMode.NEGATIVE, 96, rng)
    oracle = validate(agent, None, TransferMode.NEGATIVE, 96, rng, routing=RoutingSource.ORACLE)

    assert 0.0 <= routed.routing_accuracy <= 1.0
    assert oracle.routing_accuracy is None
    assert oracle.score <= 0.5

    with pytest.raises(ValueError):
        validate(agent, None, TransferMode.NEGATIVE, 96, rng)


def test_aggregate():
    curve = aggregate([[0.0, 1.0], [1.0, 3.0]], label='standard')

    assert curve.label == 'standard'
    assert curve.epochs == [1, 2]
    assert curve.mean == [0.5, 2.0]
    assert curve.std == pytest.approx([math.sqrt(0.5), math.sqrt(2.0)])
    assert curve.median == [0.5, 2.0]
    assert curve.seeds == 2


def test_aggregate_records():
    records = [[EpochRecord(1, score, 250, 0.1)] for score in (0.2, 0.4, 0.9)]

    curve = aggregate(records)

    assert curve.mean == pytest.approx([0.5])
    assert curve.median == [0.4]


def test_aggregate_is_permutation_invariant(rng):
    runs = rng.uniform(-1, 1, size=(5, 30)).tolist()

    curve = aggregate(runs)
    permuted = aggregate([runs[i] for i in (3, 0, 4, 2, 1)])

    assert curve == permuted


@pytest.mark.parametrize('runs', [[[0.1, 0.2]], [[0.1, 0.2], [0.3]], []])
def test_aggregate_rejects_bad_inputs(runs):
    with pytest.raises(ValueError):
        aggregate(runs)


def test_first_passage_epoch():
    curve = AggregateCurve('option_heads', [1, 2, 3, 4], [0.0, 0.3, 0.5, 0.9], [0.0] * 4,
                           [0.1, 0.44, 0.46, 0.9], 5)

    assert curve.first_passage_epoch(0.45) == 3
    assert curve.first_passage_epoch(0.45, statistic='mean') == 3
    assert curve.first_passage_epoch(0.95) is None
    assert first_passage_epoch([1, 2], [0.9, 1.0], 0.5) == 1


def test_run_streams_are_reproducible_and_independent():
    first, second = RunStreams(7), RunStreams(7)

    assert first.seed('network') == second.seed('network')
    assert first.generator('train_env').random() == second.generator('train_env').random()
    assert first.seed('network') != first.seed('supervisor')
    assert first.generator('eval_env').random() != RunStreams(8).generator('eval_env').random()
    assert first.generator('agent') is first.generator('agent')


def test_tiny_run_is_deterministic(tmpdir, TinyRun):
    config = RunConfig.from_dict(TinyRun)

    first, second = Experiment(config), Experiment(config)
    records, reported = first.run(on_epoch=lambda r: None), []
    second.run(on_epoch=reported.append)

    assert len(records) == 2
    assert reported == second.records
    assert [r.avg_score for r in records] == [r.avg_score for r in second.records]
    assert [r.oracle_score for r in records] == [r.oracle_score for r in second.records]
    for record in records:
        assert record.episodes == 2
        assert -1.0 <= record.avg_score <= 0.5
        assert -1.0 <= record.oracle_score <= 0.5
        assert 0.0 <= record.routing_accuracy <= 1.0

    first.save(str(tmpdir.join('a')))
    second.save(str(tmpdir.join('b')))

    for name in ('scores.csv', 'records.csv', 'provenance.json'):
        assert _read(tmpdir.join('a', name)) == _read(tmpdir.join('b', name))

    lines = tmpdir.join('a', 'scores.csv').read().splitlines()
    assert lines[0] == 'epoch,avg_score'
    assert len(lines) == 3
    assert lines[1].startswith('1,')


def test_tiny_standard_run(TinyStandardRun):
    config = RunConfig.from_dict(TinyStandardRun)
    experiment = Experiment(config)

    assert experiment.supervisor is None

    records = experiment.run()

    assert len(records) == 1
    assert records[0].oracle_score is None
    assert records[0].routing_accuracy is None
    assert experiment.agent.env_steps == 64 + 96
    assert experiment.agent.update_count == 24
    assert run(config)[0].avg_score == records[0].avg_score


@pytest.mark.parametrize('variant', ['option_heads', 'standard'])
def test_updates_are_shared_equally_between_heads(TinyRun, monkeypatch, variant):
    config = RunConfig.from_dict(dict(TinyRun, variant=variant))
    experiment = Experiment(config)
    heads = []

    def recording(head=None):
        heads.append(head)
        return Agent.train_update(experiment.agent, head)

    monkeypatch.setattr(experiment.agent, 'train_update', recording)
    experiment.run()

    updates = config.epochs * config.steps_per_epoch // config.train_period
    assert experiment.agent.update_count == updates == 48
    assert len(heads) == updates

    head_count = experiment.agent.head_count
    assert [heads.count(h) for h in range(head_count)] == [updates // head_count] * head_count
    assert heads == [i % head_count for i in range(updates)]


def test_divergence_names_the_epoch(TinyStandardRun, monkeypatch):
    experiment = Experiment(RunConfig.from_dict(TinyStandardRun))
    experiment.warmup()

    def diverge(head=None):
        raise DivergenceError('non-finite loss nan')

    monkeypatch.setattr(experiment.agent, 'train_update', diverge)

    with pytest.raises(DivergenceError, match='epoch 1 of standard-positive-16'):
        experiment.run_epoch()


def test_restore_run(tmpdir, TinyRun):
    config = RunConfig.from_dict(dict(TinyRun, epochs=1))
    experiment = Experiment(config)
    experiment.run()
    experiment.save(str(tmpdir))

    restored_config, agent, supervisor = restore_run(str(tmpdir.join('checkpoint.npz')))

    assert restored_config == config
    assert agent.env_steps == experiment.agent.env_steps
    for name in agent.online:
        assert np.array_equal(agent.online[name], experiment.agent.online[name])
    for name in supervisor.params:
        assert np.array_equal(supervisor.params[name], experiment.supervisor.params[name])

    score = validate(agent, supervisor, config.transfer_mode, 48, np.random.default_rng(0)).score
    expected = validate(experiment.agent, experiment.supervisor, config.transfer_mode, 48,
                        np.random.default_rng(0)).score
    assert score == expected


def test_emit_outputs(tmpdir):
    curves = [aggregate([[0.0, 0.5, 0.9], [0.2, 0.4, 1.0]], label=label)
              for label in ('standard', 'half', 'option_heads')]

    paths = emit_outputs(curves, RunConfig(mode='positive', capacity=64), str(tmpdir))

    assert len(paths) == 4
    svg = tmpdir.join('learning-curves.svg').read()
    assert svg.count('<path ') == 3
    assert svg.count('<polygon ') == 3
    assert '&#34;version&#34;' in svg or '"version"' in svg
    assert 'positive transfer, 64 neurons' in svg

    lines = tmpdir.join('aggregate-half.csv').read().splitlines()
    assert lines[0] == 'epoch,mean,std'
    assert len(lines) == 4

    curve = read_curve(str(tmpdir.join('aggregate-half.csv')))
    assert curve.label == 'half'
    assert curve.mean == curves[1].mean
    assert curve.std == curves[1].std
    assert tmpdir.join('provenance.json').check()


def test_grid_expansion():
    cells = expand_grid(HYPERPARAMETER_GRID)

    assert len(cells) == 18
    assert len({cell_name(cell) for cell in cells}) == 18
    assert expand_grid({}) == [{}]
    assert cell_name({}) == 'base'
    assert cell_name({'seed': 1, 'capacity': 16}) == 'capacity=16_seed=1'


def test_sweep_resumes_and_aggregates(tmpdir, TinyStandardRun):
    base = RunConfig.from_dict(dict(TinyStandardRun, output_dir=str(tmpdir)))

    cells = sweep(base, {'seed': [0, 1]})

    assert [(c.name, c.status) for c in cells] == [('seed=0', 'completed'), ('seed=1', 'completed')]
    assert tmpdir.join('seed=0', 'scores.csv').check()
    assert tmpdir.join('seed=1', 'checkpoint.npz').check()

    cells = sweep(base, {'seed': [0, 1]})

    assert [c.status for c in cells] == ['skipped', 'skipped']

    written = aggregate_sweep(str(tmpdir))

    assert list(written) == ['positive-16']
    assert tmpdir.join('figures', 'positive-16', 'aggregate-standard.csv').check()
    assert tmpdir.join('figures', 'positive-16', 'learning-curves.svg').read().count('<path ') == 1


def test_sweep_records_failures(tmpdir, TinyStandardRun, monkeypatch):
    def fail(self, on_epoch=None):
        raise DivergenceError('non-finite loss')

    monkeypatch.setattr(Experiment, 'run', fail)
    base = RunConfig.from_dict(dict(TinyStandardRun, output_dir=str(tmpdir)))

    cells = sweep(base, {})

    assert [(c.name, c.status) for c in cells] == [('base', 'failed')]
    assert tmpdir.join('base', 'error.txt').read() == 'DivergenceError: non-finite loss\n'
    assert not tmpdir.join('base', 'scores.csv').check()


def test_sweep_keeps_curves_of_different_settings_apart(tmpdir, TinyStandardRun):
    base = RunConfig.from_dict(dict(TinyStandardRun, output_dir=str(tmpdir)))
    sweep(base, {'learning_rate': [1.25e-4, 5e-4], 'seed': [0, 1]})

    written = aggregate_sweep(str(tmpdir))

    panel = tmpdir.join('figures', 'positive-16')
    assert sorted(os.path.basename(p) for p in written['positive-16'] if p.endswith('.csv')) == [
        'aggregate-standard_learning_rate=0.000125.csv',
        'aggregate-standard_learning_rate=0.0005.csv',
    ]
    svg = panel.join('learning-curves.svg').read()
    assert svg.count('<path ') == 2
    assert 'standard_learning_rate=0.0005' in svg


def test_sweep_clears_error_of_a_cell_that_recovers(tmpdir, TinyStandardRun, monkeypatch):
    base = RunConfig.from_dict(dict(TinyStandardRun, output_dir=str(tmpdir)))

    def fail(self, on_epoch=None):
        raise DivergenceError('non-finite loss')

    with monkeypatch.context() as m:
        m.setattr(Experiment, 'run', fail)
        assert [c.status for c in sweep(base, {})] == ['failed']

    assert tmpdir.join('base', 'error.txt').check()

    assert [c.status for c in sweep(base, {})] == ['completed']
    assert tmpdir.join('base', 'scores.csv').check()
    assert not tmpdir.join('base', 'error.txt').check()


def test_interrupted_save_leaves_cell_incomplete(tmpdir, TinyStandardRun, monkeypatch):
    def interrupted(*args, **kwargs):
        raise OSError('disk full')

    monkeypatch.setattr('ohdqn.harness.save_checkpoint', interrupted)
    base = RunConfig.from_dict(dict(TinyStandardRun, output_dir=str(tmpdir)))

    assert [c.status for c in sweep(base, {})] == ['failed']
    assert not tmpdir.join('base', 'scores.csv').check()
    assert tmpdir.join('base', 'error.txt').read() == 'OSError: disk full\n'


def test_sweep_rejects_output_dir(TinyStandardRun):
    with pytest.raises(ValueError):
        sweep(RunConfig.from_dict(TinyStandardRun), {'output_dir': ['a', 'b']})


def test_dump_episode(tmpdir):
    paths = dump_episode(str(tmpdir), TransferMode.NEGATIVE, seed=1, episode_index=1)

    assert len(paths) == 26

    lines = tmpdir.join('grid.pgm').read().splitlines()
    assert lines[0] == 'P2'
    assert lines[1] == '# negative transfer, reward 1'
    assert lines[2] == '624 24'
    assert lines[3] == '255'
    assert len(lines) == 4 + 24
    assert lines[-1].split()[0].isdigit()

    content = tmpdir.join('step-00.pgm').read()
    assert content.endswith('\n') and not content.endswith('\n\n')

    first = content.splitlines()
    assert len(first) == 4 + 24
    assert first[2] == '24 24'
    assert sum(int(v) for row in first[4:] for v in row.split()) == 2 * 255


def test_oracle_report():
    report = oracle_report(steps=240)

    assert report['positive'] == {'optimal': 1.0, 'greedy': 1.0, 'episodes': 10}
    assert report['negative'] == {'optimal': 0.5, 'greedy': 0.5, 'episodes': 10}


def _curves(mode, capacity, epochs, seeds=range(5)):
    curves = {}
    for variant in ('standard', 'half', 'option_heads'):
        configs = [RunConfig(variant=variant, mode=mode, capacity=capacity, seed=seed, epochs=epochs)
                   for seed in seeds]
        curves[variant] = aggregate([run(config) for config in configs], label=variant)
    return curves


@pytest.mark.slow
@slow
def test_positive_transfer_converges():
    curves = _curves('positive', 64, 30)

    for curve in curves.values():
        assert max(curve.median) >= 0.9

    final = [curve.median[-1] for curve in curves.values()]
    assert max(final) - min(final) <= 0.1


@pytest.mark.slow
@slow
def test_option_heads_learn_negative_transfer_faster():
    curves = _curves('negative', 32, 40)

    option_heads = curves['option_heads'].first_passage_epoch(0.45)
    standard = curves['standard'].first_passage_epoch(0.45) or math.inf
    half = curves['half'].first_passage_epoch(0.45) or math.inf

    assert option_heads is not None
    assert standard > option_heads
    assert standard >= 1.25 * option_heads
    assert half > option_heads


@pytest.mark.slow
@slow
def test_classifier_routing_accuracy():
    records = run(RunConfig(variant='option_heads', mode='negative', capacity=32, epochs=2))

    assert max(r.routing_accuracy for r in records) >= 0.99
