# -*- coding: utf-8 -*-
"""
Bootstrap risk analysis of cumulative cost paths. Replicates are evaluated in
parallel over MPI ranks when mpi4py is available and serially otherwise; either
way replicate r always draws from the same sub-stream of the master seed.
"""

#3rd party Modules
import sys
from dataclasses import dataclass, field

import numpy as np

try:
    import mpi4py.MPI as MPI
except ImportError:
    MPI = None

#Package Modules
from . import cost, returns
from .errors import ConfigurationError, InvalidInputError


class BootstrapOptions:
    def __init__(self, replicates=3000, mode="nonparametric", seed=None, quantiles=(0.025, 0.5, 0.975)):
        self.replicates = replicates      #Number of bootstrapped cost paths
        self.mode = mode                  #nonparametric resamples batches, parametric simulates returns
        self.seed = seed                  #Master seed; required before running
        self.quantiles = tuple(float(q) for q in quantiles)
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ConfigurationError("Error! replicates must be an integer >= 1")
        if self.mode not in ("nonparametric", "parametric"):
            raise ConfigurationError("Error! mode must be 'nonparametric' or 'parametric', got " + str(mode))
        q = np.asarray(self.quantiles)
        if q.size == 0 or np.any((q <= 0) | (q >= 1)) or np.any(np.diff(q) <= 0):
            raise ConfigurationError("Error! quantiles must be strictly increasing values in (0,1)")
    pass


@dataclass
class BootstrapSummary:
    total_costs: np.ndarray
    quantile_paths: dict            #quantile level -> CostPath
    best_total: float
    worst_total: float
    expected_total: float
    expected_path: cost.CostPath
    mode: str = None
    replicates: int = 0
    seed: int = None
    total_std_error: float = 0.0
    extreme_fraction: float = None
    quantiles: list = field(default_factory=list)

    def to_dict(self):
        return {"mode": self.mode,
                "replicates": int(self.replicates),
                "seed": self.seed,
                "quantiles": [float(q) for q in self.quantiles],
                "best_total": float(self.best_total),
                "worst_total": float(self.worst_total),
                "expected_total": float(self.expected_total),
                "total_std_error": float(self.total_std_error),
                "extreme_fraction": None if self.extreme_fraction is None else float(self.extreme_fraction),
                "expected_path": self.expected_path.to_dict(),
                "quantile_paths": {repr(float(q)): path.to_dict() for q, path in self.quantile_paths.items()},
                "total_costs": np.asarray(self.total_costs, dtype=float).tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(total_costs=np.asarray(d["total_costs"], dtype=float),
                   quantile_paths={float(q): cost.CostPath.from_dict(p) for q, p in d["quantile_paths"].items()},
                   best_total=d["best_total"], worst_total=d["worst_total"], expected_total=d["expected_total"],
                   expected_path=cost.CostPath.from_dict(d["expected_path"]), mode=d["mode"],
                   replicates=d["replicates"], seed=d["seed"], total_std_error=d["total_std_error"],
                   extreme_fraction=d["extreme_fraction"], quantiles=d["quantiles"])


##--------------------------------------Bootstrap modes------------------------------------------
def bootstrap_nonparametric(batches, bootstrap_options, logging=False):
    """Resamples whole batches with replacement and accumulates their observed costs.

    Parameters
    ----------
    batches : list of BatchObservation
        Batches with observed costs.
    bootstrap_options : BootstrapOptions
        Replicates, seed and quantile levels.
    logging : bool or int
        Verbosity of progress messages.

    Returns
    -------
    BootstrapSummary
    """
    seed = _require_seed(bootstrap_options)
    if not batches:
        raise InvalidInputError("Nonparametric bootstrap needs at least one batch")
    if any(batch.observed_cost is None for batch in batches):
        raise InvalidInputError("Every batch needs an observed cost for the nonparametric bootstrap")
    costs = np.array([batch.observed_cost for batch in batches], dtype=float)
    n = costs.size

    def eval_replicate(rng):
        return np.cumsum(costs[rng.integers(0, n, size=n)]), 0

    if logging:
        _log("Resampling " + str(n) + " batches in " + str(bootstrap_options.replicates) + " replicates")
    paths, _ = replicate_paths(eval_replicate, bootstrap_options.replicates, seed, logging)
    return summarize_paths([cost.CostPath(np.arange(1, n + 1), path) for path in paths],
                           bootstrap_options.quantiles, mode="nonparametric", seed=seed)


def bootstrap_parametric(hpd, cost_params, quality_pools, horizon, bootstrap_options, transition=None,
                         logging=False):
    """Simulates return streams from the fitted models and prices every core.

    Parameters
    ----------
    hpd : HpdParams
        Fitted batch size mixture.
    cost_params : CostParams
        Per-regime cost parameters.
    quality_pools : dict or tuple
        Quality source accepted by returns.get_quality_sampler.
    horizon : int
        Periods per simulated path.
    bootstrap_options : BootstrapOptions
    transition : TransitionMatrix, optional
        Regime dynamics; Bernoulli rows from hpd.p_extreme by default.
    logging : bool or int

    Returns
    -------
    BootstrapSummary
        Includes the share of simulated batches that were extreme.
    """
    seed = _require_seed(bootstrap_options)
    #Validates horizon and quality source once before any replicate runs
    returns.ReturnSimConfig(horizon, hpd, quality_pools, seed, transition)

    def eval_replicate(rng):
        stream = returns.simulate_return_stream(returns.ReturnSimConfig(horizon, hpd, quality_pools, rng, transition))
        batch_costs = [cost.batch_cost(batch.qualities, cost_params, batch.label) for batch in stream]
        n_extreme = sum(batch.label == returns.RegimeLabel.EXTREME for batch in stream)
        return np.cumsum(batch_costs), n_extreme

    if logging:
        _log("Simulating " + str(bootstrap_options.replicates) + " return streams of " + str(horizon) + " periods")
    paths, n_extreme = replicate_paths(eval_replicate, bootstrap_options.replicates, seed, logging)
    return summarize_paths([cost.CostPath(np.arange(1, int(horizon) + 1), path) for path in paths],
                           bootstrap_options.quantiles, mode="parametric", seed=seed,
                           extreme_fraction=float(np.sum(n_extreme) / (int(horizon) * len(paths))))


##--------------------------------------Summaries------------------------------------------------
def summarize_paths(paths, quantiles, mode=None, seed=None, extreme_fraction=None):
    """Reduces replicate cost paths to quantile paths, the mean path and total-cost scenarios.

    Quantiles interpolate linearly between order statistics.

    Parameters
    ----------
    paths : list of CostPath
        Replicate paths on a common period axis.
    quantiles : sequence of float
        Quantile levels in (0,1).

    Returns
    -------
    BootstrapSummary
    """
    if not paths:
        raise InvalidInputError("No cost paths to summarize")
    periods = paths[0].periods
    if any(not np.array_equal(path.periods, periods) for path in paths):
        raise InvalidInputError("Cost paths do not share a period axis")
    if periods.size == 0:
        raise InvalidInputError("Cost paths are empty")
    quantiles = [float(q) for q in quantiles]
    path_mat = np.vstack([path.cumulative_cost for path in paths])
    quantile_mat = np.quantile(path_mat, quantiles, axis=0)
    totals = path_mat[:, -1]
    best, worst = float(np.min(totals)), float(np.max(totals))
    expected = float(np.clip(np.mean(totals), best, worst))
    std_error = float(np.std(totals, ddof=1) / np.sqrt(totals.size)) if totals.size > 1 else 0.0
    return BootstrapSummary(total_costs=totals,
                            quantile_paths={q: cost.CostPath(periods, quantile_mat[i]) for i, q in enumerate(quantiles)},
                            best_total=best, worst_total=worst, expected_total=expected,
                            expected_path=cost.CostPath(periods, np.mean(path_mat, axis=0)),
                            mode=mode, replicates=len(paths), seed=seed, total_std_error=std_error,
                            extreme_fraction=extreme_fraction, quantiles=quantiles)


##--------------------------------------Parallel evaluation--------------------------------------
def replicate_paths(eval_replicate, n_replicates, seed, logging=False):
    """Evaluates replicates across MPI ranks and returns them in replicate order on every rank.

    Parameters
    ----------
    eval_replicate : function
        Maps a np.random.Generator to (cumulative cost array, extreme batch count).
    n_replicates : int
    seed : int
        Master seed; replicate r uses SeedSequence(seed, spawn_key=(r,)).

    Returns
    -------
    paths : list of np.ndarray
    n_extreme : np.ndarray
    """
    if MPI is not None:
        mpi_comm = MPI.COMM_WORLD
        mpi_rank = mpi_comm.Get_rank()
        mpi_size = mpi_comm.Get_size()
    else:
        mpi_comm, mpi_rank, mpi_size = None, 0, 1

    #Strided share of replicate indices for this rank
    local = [(r,) + tuple(eval_replicate(replicate_rng(seed, r))) for r in range(mpi_rank, int(n_replicates), mpi_size)]
    if logging > 1:
        print("Rank " + str(mpi_rank) + " evaluated " + str(len(local)) + " replicates", file=sys.stderr)

    if mpi_size > 1:
        gathered = mpi_comm.gather(local, root=0)
        if mpi_rank == 0:
            local = sorted((item for part in gathered for item in part), key=lambda item: item[0])
        local = mpi_comm.bcast(local, root=0)
    return [item[1] for item in local], np.array([item[2] for item in local], dtype=int)


def replicate_rng(seed, r):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,)))


def _require_seed(bootstrap_options):
    if bootstrap_options.seed is None:
        raise ConfigurationError("A seed is required for bootstrap runs")
    return int(bootstrap_options.seed)


def _log(message):
    if MPI is None or MPI.COMM_WORLD.Get_rank() == 0:
        print(message, file=sys.stderr)
