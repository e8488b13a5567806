# -*- coding: utf-8 -*-
"""
Core return process: regime labels, Bernoulli and Geometric timing, the two-state
DTMC and synthetic return streams drawn from a fitted HPD.
"""

#3rd party Modules
import enum
from dataclasses import dataclass

import numpy as np
import scipy.stats as sct

#Package Modules
from . import evt
from .errors import InvalidParameterError, InvalidInputError, ConfigurationError, NumericalError

#Largest simulated batch size; larger draws raise NumericalError
MAX_BATCH_SIZE = 1000000


class RegimeLabel(enum.IntEnum):
    NORMAL = 0
    EXTREME = 1


class TransitionMatrix:
    """Row-stochastic 2x2 matrix of regime transitions, rows indexed by the current regime."""
    def __init__(self, rows):
        rows = np.array(rows, dtype=float)
        if rows.shape != (2, 2):
            raise InvalidParameterError("Error! Transition matrix must be 2x2, got shape " + str(rows.shape))
        if np.any(rows < 0) or np.any(rows > 1) or np.any(np.abs(rows.sum(axis=1) - 1) > 1e-12):
            raise InvalidParameterError("Error! Transition matrix rows must be probability vectors")
        rows.setflags(write=False)
        self.rows = rows

    @classmethod
    def bernoulli(cls, p):
        """Identical rows [1-p, p]: the i.i.d. Bernoulli label process."""
        if not 0 <= p <= 1:
            raise InvalidParameterError("Error! Bernoulli probability must lie in [0,1], got " + str(p))
        return cls([[1 - p, p], [1 - p, p]])

    def to_list(self):
        return self.rows.tolist()

    def __eq__(self, other):
        return isinstance(other, TransitionMatrix) and np.array_equal(self.rows, other.rows)

    def __repr__(self):
        return "TransitionMatrix(" + str(self.to_list()) + ")"


class ReturnSimConfig:
    def __init__(self, horizon, hpd, quality_source, seed, transition=None):
        self.horizon = horizon                  #Number of return periods to simulate
        self.hpd = hpd                          #HpdParams of batch sizes
        self.quality_source = quality_source    #Per-regime pools, one shared pool, or (dist_type, dist_param)
        self.seed = seed                        #int or np.random.Generator
        if transition is None:
            transition = TransitionMatrix.bernoulli(hpd.p_extreme)
        self.transition = transition
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ConfigurationError("Error! Simulation horizon must be an integer >= 1, got " + str(horizon))
        if not self.hpd.u > 1:
            raise ConfigurationError("Error! Threshold u must exceed 1 so that normal batches hold at least one core")
        self.quality_sampler = get_quality_sampler(quality_source)
    pass


@dataclass
class ReturnBatch:
    period: int
    size: int
    label: RegimeLabel
    qualities: np.ndarray


##--------------------------------------Labels and Bernoulli-------------------------------------
def classify_batches(sizes, u):
    """Labels each batch extreme iff its size is at least u."""
    if not u > 0:
        raise InvalidParameterError("Threshold u must be positive, got " + str(u))
    sizes = np.asarray(sizes, dtype=float).ravel()
    return [RegimeLabel.EXTREME if size >= u else RegimeLabel.NORMAL for size in sizes]


def estimate_p(labels):
    labels = np.asarray(labels, dtype=int).ravel()
    if labels.size == 0:
        raise InvalidInputError("Cannot estimate the extreme probability from zero labels")
    return float(np.count_nonzero(labels == RegimeLabel.EXTREME) / labels.size)


def threshold_from_labels(sizes, labels):
    """Threshold implied by labelled batches: the smallest extreme size, provided
    every normal batch is smaller. Returns None when the labels give no such split.
    """
    sizes = np.asarray(sizes, dtype=float).ravel()
    labels = np.asarray(labels, dtype=int).ravel()
    if sizes.size != labels.size:
        raise InvalidInputError("sizes and labels differ in length")
    extreme = sizes[labels == RegimeLabel.EXTREME]
    normal = sizes[labels == RegimeLabel.NORMAL]
    if extreme.size == 0:
        return None
    u = float(np.min(extreme))
    if normal.size and np.max(normal) >= u:
        return None
    return u


##--------------------------------------Geometric timing-----------------------------------------
def geometric_pmf(t, p):
    """P(T = t) = (1-p)^(t-1) p for t = 1, 2, ..."""
    _check_probability(p)
    t = np.asarray(t)
    if np.any(t < 1) or np.any(t != np.floor(t)):
        raise InvalidParameterError("Inter-arrival time must be an integer >= 1")
    return evt._as_output(sct.geom.pmf(t, p))


def sample_inter_arrival(p, rng):
    _check_probability(p)
    return int(rng.geometric(p))


def inter_arrival_times(labels):
    """Periods between successive extreme batches, the first measured from period 0."""
    labels = np.asarray(labels, dtype=int).ravel()
    periods = np.flatnonzero(labels == RegimeLabel.EXTREME) + 1
    return np.diff(np.concatenate(([0], periods))).astype(int)


##--------------------------------------DTMC-----------------------------------------------------
def dtmc_simulate(transition, horizon, initial, seed):
    """Simulates a regime trajectory of length horizon starting in initial.

    Parameters
    ----------
    transition : TransitionMatrix or array_like
        Row-stochastic 2x2 matrix.
    horizon : int
        Trajectory length, at least 1.
    initial : RegimeLabel
        State of the first period.
    seed : int or np.random.Generator
        Random stream.

    Returns
    -------
    list of RegimeLabel
    """
    if not isinstance(transition, TransitionMatrix):
        transition = TransitionMatrix(transition)
    if int(horizon) != horizon or horizon < 1:
        raise InvalidParameterError("Horizon must be an integer >= 1, got " + str(horizon))
    rng = np.random.default_rng(seed)
    draws = rng.random(int(horizon) - 1)
    p_to_extreme = transition.rows[:, RegimeLabel.EXTREME]
    state = int(RegimeLabel(initial))
    states = [state]
    for draw in draws:
        state = int(draw < p_to_extreme[state])
        states.append(state)
    return [RegimeLabel(s) for s in states]


def fit_transition_matrix(labels):
    """Maximum likelihood transition matrix from an observed label sequence.
    Rows of states never left fall back to the Bernoulli row."""
    labels = np.asarray(labels, dtype=int).ravel()
    p = estimate_p(labels)
    counts = np.zeros((2, 2))
    np.add.at(counts, (labels[:-1], labels[1:]), 1)
    rows = np.array([[1 - p, p], [1 - p, p]])
    visited = counts.sum(axis=1) > 0
    rows[visited] = counts[visited] / counts[visited].sum(axis=1, keepdims=True)
    return TransitionMatrix(rows)


def stationary_distribution(transition):
    """Stationary (normal, extreme) probabilities; all-normal when the chain never switches."""
    if not isinstance(transition, TransitionMatrix):
        transition = TransitionMatrix(transition)
    to_extreme = transition.rows[0, 1]
    to_normal = transition.rows[1, 0]
    if to_extreme + to_normal == 0:
        return np.array([1.0, 0.0])
    return np.array([to_normal, to_extreme]) / (to_extreme + to_normal)


##--------------------------------------Return streams-------------------------------------------
def simulate_return_stream(config):
    """Generates one synthetic return stream.

    Each period draws its regime from the DTMC (the first from the stationary
    distribution), a size from the HPD component of that regime and that many
    qualities from the regime's quality source.

    Parameters
    ----------
    config : ReturnSimConfig
        Horizon, fitted HPD, quality source, transition matrix and seed.

    Returns
    -------
    list of ReturnBatch
    """
    rng = np.random.default_rng(config.seed)
    hpd = config.hpd
    pi_extreme = stationary_distribution(config.transition)[RegimeLabel.EXTREME]
    initial = RegimeLabel.EXTREME if rng.random() < pi_extreme else RegimeLabel.NORMAL
    labels = dtmc_simulate(config.transition, config.horizon, initial, rng)

    #Sizes conditioned on the regime, rounded and kept on the regime's side of u
    is_extreme = np.array(labels, dtype=int) == RegimeLabel.EXTREME
    v = rng.random(int(config.horizon))
    extreme_sizes = np.maximum(np.rint(evt.gpd_ppf(v, hpd.gpd)), np.ceil(hpd.u))
    normal_sizes = np.clip(np.rint(evt.trunc_normal_ppf(v, hpd.mu, hpd.sigma, hpd.u)), 1, np.ceil(hpd.u) - 1)
    sizes = np.where(is_extreme, extreme_sizes, normal_sizes)
    if not np.all(np.isfinite(sizes)) or np.any(sizes > MAX_BATCH_SIZE):
        raise NumericalError("Simulated batch size exceeds " + str(MAX_BATCH_SIZE) + " cores (GPD xi="
                             + str(hpd.gpd.xi) + ", beta=" + str(hpd.gpd.beta) + ")")
    sizes = sizes.astype(int)

    stream = []
    for period, (label, size) in enumerate(zip(labels, sizes), start=1):
        qualities = config.quality_sampler[label](rng, int(size))
        stream.append(ReturnBatch(period=period, size=int(size), label=label, qualities=qualities))
    return stream


def get_quality_sampler(quality_source):
    """Builds per-regime quality samplers from a quality source.

    Parameters
    ----------
    quality_source : dict, array_like or tuple
        {regime: pool} resamples each regime's pool with replacement; a single
        array is shared by both regimes; ('beta', (a, b)) and ('uniform', (lo, hi))
        draw from the named distribution.

    Returns
    -------
    dict
        RegimeLabel -> function(rng, n) returning n qualities in [0,1].
    """
    if isinstance(quality_source, tuple) and len(quality_source) == 2 and isinstance(quality_source[0], str):
        dist_type, dist_param = quality_source
        if dist_type == 'beta':
            a, b = dist_param
            if not (a > 0 and b > 0):
                raise ConfigurationError("Error! Beta quality shapes must be positive")
            sample_fcn = lambda rng, n: rng.beta(a, b, size=n)
        elif dist_type == 'uniform':
            lo, hi = dist_param
            if not 0 <= lo <= hi <= 1:
                raise ConfigurationError("Error! Uniform quality bounds must satisfy 0 <= lo <= hi <= 1")
            sample_fcn = lambda rng, n: rng.uniform(lo, hi, size=n)
        else:
            raise ConfigurationError("Error! Unsupported quality distribution '" + str(dist_type)
                                     + "'. Supported distributions are beta and uniform.")
        return {RegimeLabel.NORMAL: sample_fcn, RegimeLabel.EXTREME: sample_fcn}

    if isinstance(quality_source, dict):
        pools = {RegimeLabel(k): np.asarray(v, dtype=float).ravel() for k, v in quality_source.items()}
    else:
        pool = np.asarray(quality_source, dtype=float).ravel()
        pools = {RegimeLabel.NORMAL: pool, RegimeLabel.EXTREME: pool}
    for label, pool in pools.items():
        if np.any((pool < 0) | (pool > 1)) or not np.all(np.isfinite(pool)):
            raise ConfigurationError("Error! Quality pool for " + label.name.lower() + " regime leaves [0,1]")
    return {label: _pool_sampler(pools.get(label), label) for label in RegimeLabel}


def _pool_sampler(pool, label):
    def sample_fcn(rng, n):
        if pool is None or pool.size == 0:
            raise ConfigurationError("No quality values available for the " + label.name.lower() + " regime")
        return rng.choice(pool, size=n, replace=True)
    return sample_fcn


def _check_probability(p):
    if not 0 < p <= 1:
        raise InvalidParameterError("Probability must lie in (0,1], got " + str(p))
