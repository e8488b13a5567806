# -*- coding: utf-8 -*-
"""
Tests of the bootstrap risk analysis: determinism, quantile ordering and the
statistical behaviour of both modes on the steam trap batches.
"""

import numpy as np
import pytest

import SCoRMLibrary as scorm
from SCoRMLibrary.bootstrap import BootstrapOptions, BootstrapSummary, bootstrap_nonparametric, \
    bootstrap_parametric, summarize_paths, replicate_paths, replicate_rng
from SCoRMLibrary.cost import CostPath, CostParams
from SCoRMLibrary.errors import ConfigurationError, InvalidInputError
from SCoRMLibrary.examples import load_fixture, GetExample, SYNTHETIC_HPD, SYNTHETIC_COST


#==============================================================================
#------------------------------Options-----------------------------------------
#==============================================================================
def test_options_validation():
    with pytest.raises(ConfigurationError):
        BootstrapOptions(replicates=0)
    with pytest.raises(ConfigurationError):
        BootstrapOptions(mode="jackknife")
    with pytest.raises(ConfigurationError):
        BootstrapOptions(quantiles=(0.5, 0.25))
    with pytest.raises(ConfigurationError):
        BootstrapOptions(quantiles=(0.0, 0.5))


def test_seed_required():
    with pytest.raises(ConfigurationError):
        bootstrap_nonparametric(load_fixture(), BootstrapOptions(replicates=10))


#==============================================================================
#------------------------------Summaries---------------------------------------
#==============================================================================
def test_two_path_median():
    paths = [CostPath([1, 2, 3], [1, 2, 3]), CostPath([1, 2, 3], [4, 6, 7])]
    summary = summarize_paths(paths, (0.5,))
    assert summary.quantile_paths[0.5].cumulative_cost.tolist() == [2.5, 4.0, 5.0]
    assert summary.best_total == 3 and summary.worst_total == 7
    assert summary.expected_total == 5


def test_single_replicate_collapses():
    summary = summarize_paths([CostPath([1, 2], [3.0, 8.0])], (0.025, 0.5, 0.975))
    for path in summary.quantile_paths.values():
        assert path.cumulative_cost.tolist() == [3.0, 8.0]
    assert summary.best_total == summary.worst_total == summary.expected_total == 8.0
    assert summary.total_std_error == 0.0


def test_summarize_rejects_misaligned_paths():
    with pytest.raises(InvalidInputError):
        summarize_paths([CostPath([1, 2], [1, 2]), CostPath([1, 3], [1, 2])], (0.5,))
    with pytest.raises(InvalidInputError):
        summarize_paths([], (0.5,))


def test_replicate_streams_are_independent_of_count():
    #Replicate r sees the same stream however many replicates run
    draw = lambda rng: (np.array([rng.random()]), 0)
    few, _ = replicate_paths(draw, 3, 11)
    many, _ = replicate_paths(draw, 10, 11)
    assert [p.tolist() for p in few] == [p.tolist() for p in many[:3]]
    assert replicate_rng(11, 0).random() != replicate_rng(11, 1).random()


#==============================================================================
#------------------------------Nonparametric-----------------------------------
#==============================================================================
def test_nonparametric_deterministic():
    options = BootstrapOptions(replicates=200, seed=42)
    first = bootstrap_nonparametric(load_fixture(), options)
    second = bootstrap_nonparametric(load_fixture(), options)
    assert np.array_equal(first.total_costs, second.total_costs)
    assert first.to_dict() == second.to_dict()
    other = bootstrap_nonparametric(load_fixture(), BootstrapOptions(replicates=200, seed=43))
    assert not np.array_equal(first.total_costs, other.total_costs)


def test_nonparametric_paths_ordered_and_monotone():
    summary = bootstrap_nonparametric(load_fixture(), BootstrapOptions(replicates=300, seed=1))
    low, mid, high = (summary.quantile_paths[q].cumulative_cost for q in (0.025, 0.5, 0.975))
    assert np.all(low <= mid) and np.all(mid <= high)
    for path in (low, mid, high, summary.expected_path.cumulative_cost):
        assert np.all(np.diff(path) >= 0)
    assert summary.best_total <= summary.expected_total <= summary.worst_total
    assert summary.quantile_paths[0.5].periods.tolist() == list(range(1, 82))
    assert summary.replicates == 300 and summary.mode == "nonparametric"


def test_nonparametric_mean_matches_observed_total():
    summary = bootstrap_nonparametric(load_fixture(), BootstrapOptions(replicates=3000, seed=7))
    assert abs(summary.expected_total - 54353) <= 3 * summary.total_std_error
    assert summary.quantile_paths[0.025].total < 54353 < summary.quantile_paths[0.975].total


def test_nonparametric_needs_costs():
    batches = load_fixture()
    batches[3].observed_cost = None
    with pytest.raises(InvalidInputError):
        bootstrap_nonparametric(batches, BootstrapOptions(replicates=10, seed=0))


def test_summary_serialization():
    summary = bootstrap_nonparametric(load_fixture(), BootstrapOptions(replicates=20, seed=5))
    restored = BootstrapSummary.from_dict(summary.to_dict())
    assert restored.to_dict() == summary.to_dict()
    assert "0.025" in summary.to_dict()["quantile_paths"]


#==============================================================================
#------------------------------Parametric--------------------------------------
#==============================================================================
def test_parametric_deterministic_and_extreme_fraction():
    pools = ("beta", (2.0, 2.0))
    options = BootstrapOptions(replicates=100, mode="parametric", seed=3)
    first = bootstrap_parametric(SYNTHETIC_HPD, SYNTHETIC_COST, pools, 200, options)
    second = bootstrap_parametric(SYNTHETIC_HPD, SYNTHETIC_COST, pools, 200, options)
    assert np.array_equal(first.total_costs, second.total_costs)
    assert abs(first.extreme_fraction - 0.1) <= 4 * np.sqrt(0.1 * 0.9 / 20000)
    assert first.quantile_paths[0.5].periods.tolist() == list(range(1, 201))


def test_parametric_zero_cost_curve():
    #Qualities of 1 cost nothing
    options = BootstrapOptions(replicates=5, mode="parametric", seed=0)
    summary = bootstrap_parametric(SYNTHETIC_HPD, SYNTHETIC_COST, [1.0], 30, options)
    assert summary.worst_total == 0.0


def test_parametric_rejects_bad_horizon():
    options = BootstrapOptions(replicates=5, mode="parametric", seed=0)
    with pytest.raises(ConfigurationError):
        bootstrap_parametric(SYNTHETIC_HPD, SYNTHETIC_COST, [0.5], 0, options)


def test_parametric_fixture_covers_observed_total():
    batches, options = GetExample('steam traps (parametric)')
    options.bootstrap = BootstrapOptions(replicates=500, mode="parametric", seed=2024)
    results = scorm.run_scorm(batches, options)
    summary = results.bootstrap
    assert summary.mode == "parametric"
    assert summary.quantile_paths[0.025].total <= 54353 <= summary.quantile_paths[0.975].total
    assert abs(summary.extreme_fraction - results.hpd_fit.params.p_extreme) < 0.02
    assert isinstance(results.cost_params, CostParams)
