# -*- coding: utf-8 -*-
"""
Remanufacturing cost model: the power-law core cost a0 (1 - q^theta), its least
squares calibration per regime, batch and total costs, cost paths and the
prediction error metrics used to validate them.
"""

#3rd party Modules
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize as opt

#Package Modules
from .errors import InvalidParameterError, InvalidInputError, InsufficientDataError, \
    UnidentifiableError, NumericalError
from .returns import RegimeLabel

THETA_BOUNDS = (1e-4, 20.0)

###----------------------------------------------------------------------------------------------
###-------------------------------------Class Definitions----------------------------------------
###----------------------------------------------------------------------------------------------

@dataclass(frozen=True)
class CostParams:
    a0_normal: float
    theta_normal: float
    a0_extreme: float
    theta_extreme: float

    def __post_init__(self):
        if not (self.a0_normal >= 0 and self.a0_extreme >= 0):
            raise InvalidParameterError("Cost at zero quality a0 must be non-negative")
        if not (self.theta_normal > 0 and self.theta_extreme > 0):
            raise InvalidParameterError("Cost exponent theta must be positive")

    def for_label(self, label):
        """(a0, theta) of the regime."""
        if label == RegimeLabel.EXTREME:
            return self.a0_extreme, self.theta_extreme
        return self.a0_normal, self.theta_normal

    def to_dict(self):
        return {"a0_normal": float(self.a0_normal), "theta_normal": float(self.theta_normal),
                "a0_extreme": float(self.a0_extreme), "theta_extreme": float(self.theta_extreme)}

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in ("a0_normal", "theta_normal", "a0_extreme", "theta_extreme")})


@dataclass
class CoreObservation:
    batch_id: int
    quality: float
    observed_cost: float = None
    features: dict = field(default_factory=dict)   #Opaque metadata such as the steam trap features
    quality_derived: bool = False

    def __post_init__(self):
        if not 0 <= self.quality <= 1:
            raise InvalidInputError("Core quality must lie in [0,1], got " + str(self.quality))


@dataclass
class BatchObservation:
    period: int
    size: int
    label: RegimeLabel          #None until the batch is classified
    mean_quality: float = None
    observed_cost: float = None
    predicted_cost: float = None
    cores: list = None          #CoreObservation list when per-core data exist

    def __post_init__(self):
        if self.size < 1:
            raise InvalidInputError("Batch size must be at least 1, got " + str(self.size))
        if self.mean_quality is not None and not 0 <= self.mean_quality <= 1:
            raise InvalidInputError("Mean quality must lie in [0,1], got " + str(self.mean_quality))
        if self.label is not None:
            self.label = RegimeLabel(self.label)

    @property
    def qualities(self):
        if not self.cores:
            return None
        return np.array([core.quality for core in self.cores], dtype=float)


@dataclass
class CostPath:
    periods: np.ndarray
    cumulative_cost: np.ndarray

    def __post_init__(self):
        self.periods = np.asarray(self.periods, dtype=int)
        self.cumulative_cost = np.asarray(self.cumulative_cost, dtype=float)
        if self.periods.shape != self.cumulative_cost.shape:
            raise InvalidInputError("Cost path periods and costs differ in length")

    @property
    def total(self):
        return float(self.cumulative_cost[-1]) if self.cumulative_cost.size else 0.0

    def to_dict(self):
        return {"periods": self.periods.tolist(), "cumulative_cost": self.cumulative_cost.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(periods=d["periods"], cumulative_cost=d["cumulative_cost"])


class CostOptions:
    def __init__(self, a0=500, a0_extreme=None, joint=False):
        self.a0 = a0                                                    #Cost of a zero-quality core, normal regime
        self.a0_extreme = a0 if a0_extreme is None else a0_extreme      #Same, extreme regime
        self.joint = joint                                              #Fit a0 along with theta
        if not (self.a0 > 0 and self.a0_extreme > 0):
            raise InvalidParameterError("Error! a0 must be positive")
    pass


###----------------------------------------------------------------------------------------------
###-------------------------------------Cost Functions-------------------------------------------
###----------------------------------------------------------------------------------------------

def core_cost(q, a0, theta):
    """Remanufacturing cost of a core of quality q: a0 (1 - q^theta).

    Parameters
    ----------
    q : float or np.ndarray
        Core quality in [0,1]; 1 is like-new.
    a0 : float
        Cost of a core with the lowest quality.
    theta : float
        Exponent of the cost curve.

    Returns
    -------
    float or np.ndarray
        Cost in the units of a0.
    """
    q = np.asarray(q, dtype=float)
    if np.any((q < 0) | (q > 1)) or np.any(np.isnan(q)):
        raise InvalidInputError("Core quality must lie in [0,1]")
    if not a0 >= 0 or not theta > 0:
        raise InvalidParameterError("Require a0 >= 0 and theta > 0, got a0=" + str(a0) + ", theta=" + str(theta))
    cost = a0 * (1 - q ** theta)
    return cost[()] if cost.ndim == 0 else cost


def batch_cost(qualities, params, label):
    a0, theta = params.for_label(label)
    return float(np.sum(core_cost(np.asarray(qualities, dtype=float).ravel(), a0, theta)))


def total_cost(batches, params):
    """Total cost split by regime.

    Parameters
    ----------
    batches : list of (qualities, RegimeLabel)
    params : CostParams

    Returns
    -------
    (total, normal_part, extreme_part)
    """
    parts = {RegimeLabel.NORMAL: 0.0, RegimeLabel.EXTREME: 0.0}
    for qualities, label in batches:
        parts[RegimeLabel(label)] += batch_cost(qualities, params, label)
    return parts[RegimeLabel.NORMAL] + parts[RegimeLabel.EXTREME], parts[RegimeLabel.NORMAL], \
        parts[RegimeLabel.EXTREME]


def cost_path(batch_costs):
    """Cumulative cost over periods from (period, cost) pairs, sorted by period."""
    pairs = sorted(((int(period), float(cost)) for period, cost in batch_costs), key=lambda pc: pc[0])
    costs = np.array([c for _, c in pairs], dtype=float)
    if np.any(costs < 0) or np.any(np.isnan(costs)):
        raise InvalidInputError("Batch costs must be non-negative")
    return CostPath(periods=[p for p, _ in pairs], cumulative_cost=np.cumsum(costs))


###----------------------------------------------------------------------------------------------
###-------------------------------------Calibration----------------------------------------------
###----------------------------------------------------------------------------------------------

def fit_theta(pairs, a0):
    """Least squares exponent theta for fixed a0.

    A log-spaced scan over (1e-4, 20] brackets the minimum of the sum of squared
    errors, which golden section search then refines.

    Parameters
    ----------
    pairs : array_like
        n x 2 array of (quality, observed cost).
    a0 : float
        Cost at zero quality.

    Returns
    -------
    float
        Fitted theta.
    """
    q, c = _usable_pairs(pairs)
    if not a0 > 0:
        raise InvalidParameterError("a0 must be positive, got " + str(a0))

    def sse(theta):
        return float(np.sum((c - a0 * (1 - q ** theta)) ** 2))

    grid = np.geomspace(THETA_BOUNDS[0], THETA_BOUNDS[1], 400)
    values = np.array([sse(theta) for theta in grid])
    i_min = int(np.argmin(values))
    if 0 < i_min < grid.size - 1 and values[i_min] < values[i_min - 1] and values[i_min] < values[i_min + 1]:
        result = opt.minimize_scalar(sse, bracket=(grid[i_min - 1], grid[i_min], grid[i_min + 1]),
                                     method='golden', options={'xtol': 1e-10})
    else:
        result = opt.minimize_scalar(sse, bounds=THETA_BOUNDS, method='bounded', options={'xatol': 1e-10})
    theta = float(result.x)
    if not (np.isfinite(theta) and THETA_BOUNDS[0] <= theta <= THETA_BOUNDS[1]):
        raise NumericalError("Theta search left the admissible range: " + str(theta))
    return theta


def fit_cost_joint(pairs):
    """Joint least squares of (a0, theta) for data without a known a0."""
    q, c = _usable_pairs(pairs)
    a0_start = max(float(np.max(c / (1 - q))), 1e-6)
    result = opt.least_squares(lambda x: c - x[0] * (1 - q ** x[1]), x0=[a0_start, 1.0],
                               bounds=([0, THETA_BOUNDS[0]], [np.inf, THETA_BOUNDS[1]]))
    if not result.success:
        raise NumericalError("Joint (a0, theta) fit did not converge: " + str(result.message))
    return float(result.x[0]), float(result.x[1])


def fit_cost_params(batches, cost_options=None):
    """Fits theta (and optionally a0) separately for normal and extreme batches.

    Batches with per-core qualities and costs contribute one pair per core. Otherwise
    each batch contributes size copies of (mean quality, observed cost / size) and
    the fit is flagged approximate.

    Parameters
    ----------
    batches : list of BatchObservation
    cost_options : CostOptions

    Returns
    -------
    (CostParams, bool)
        Fitted parameters and whether the batch-mean surrogate was used.
    """
    if cost_options is None:
        cost_options = CostOptions()
    pairs = {RegimeLabel.NORMAL: [], RegimeLabel.EXTREME: []}
    approximate = False
    for batch in batches:
        if batch.cores and all(core.observed_cost is not None for core in batch.cores):
            pairs[batch.label].extend((core.quality, core.observed_cost) for core in batch.cores)
        elif batch.mean_quality is not None and batch.observed_cost is not None:
            pairs[batch.label].extend([(batch.mean_quality, batch.observed_cost / batch.size)] * batch.size)
            approximate = True
    a0 = {RegimeLabel.NORMAL: cost_options.a0, RegimeLabel.EXTREME: cost_options.a0_extreme}

    fitted = {}
    for label in RegimeLabel:
        if not pairs[label]:
            continue
        if cost_options.joint:
            fitted[label] = fit_cost_joint(pairs[label])
        else:
            fitted[label] = (a0[label], fit_theta(pairs[label], a0[label]))
    if not fitted:
        raise InsufficientDataError("No batch carries both quality and observed cost")
    for label in RegimeLabel:
        if label not in fitted:
            other = RegimeLabel(1 - label)
            warnings.warn("No " + label.name.lower() + " batches to fit; reusing the "
                          + other.name.lower() + " cost parameters")
            fitted[label] = fitted[other]
    params = CostParams(a0_normal=fitted[RegimeLabel.NORMAL][0], theta_normal=fitted[RegimeLabel.NORMAL][1],
                        a0_extreme=fitted[RegimeLabel.EXTREME][0], theta_extreme=fitted[RegimeLabel.EXTREME][1])
    return params, approximate


def predict_batch_costs(batches, params):
    """Predicted cost of each batch, using per-core qualities when present and
    size copies of the mean quality otherwise.

    Returns
    -------
    (np.ndarray, bool)
        Costs in batch order and whether any batch used the mean-quality fallback.
    """
    costs = np.empty(len(batches))
    approximate = False
    for i, batch in enumerate(batches):
        qualities = batch.qualities
        if qualities is None:
            if batch.mean_quality is None:
                raise InvalidInputError("Batch in period " + str(batch.period) + " has no quality information")
            qualities = np.full(batch.size, batch.mean_quality)
            approximate = True
        costs[i] = batch_cost(qualities, params, batch.label)
    return costs, approximate


###----------------------------------------------------------------------------------------------
###-------------------------------------Metrics--------------------------------------------------
###----------------------------------------------------------------------------------------------

def mse(predicted, observed):
    predicted, observed = _paired(predicted, observed)
    return float(np.mean((predicted - observed) ** 2))


def percent_error(predicted_total, observed_total):
    """|predicted - observed| / observed x 100."""
    if not observed_total > 0:
        raise InvalidInputError("Observed total must be positive, got " + str(observed_total))
    return float(abs(predicted_total - observed_total) / observed_total * 100)


def zeror_predict(training_costs):
    """ZeroR baseline: the training mean, predicted for every batch."""
    training_costs = np.asarray(training_costs, dtype=float).ravel()
    if training_costs.size == 0:
        raise InvalidInputError("ZeroR needs at least one training cost")
    return float(np.mean(training_costs))


def regime_shares(batches):
    """Share of batches, cores, observed and predicted cost carried by extreme batches."""
    if not batches:
        raise InvalidInputError("No batches given")
    extreme = np.array([batch.label == RegimeLabel.EXTREME for batch in batches])
    sizes = np.array([batch.size for batch in batches], dtype=float)
    shares = {"batches": float(np.mean(extreme)),
              "cores": float(sizes[extreme].sum() / sizes.sum())}
    for key in ("observed_cost", "predicted_cost"):
        values = [getattr(batch, key) for batch in batches]
        if any(v is None for v in values) or sum(values) <= 0:
            shares[key] = None
        else:
            values = np.array(values, dtype=float)
            shares[key] = float(values[extreme].sum() / values.sum())
    return shares


###----------------------------------------------------------------------------------------------
###-------------------------------------Support Functions----------------------------------------
###----------------------------------------------------------------------------------------------

def _usable_pairs(pairs):
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if pairs.shape[0] == 0:
        raise InsufficientDataError("No (quality, cost) pairs given")
    q, c = pairs[:, 0], pairs[:, 1]
    if np.any((q < 0) | (q > 1)):
        raise InvalidInputError("Core quality must lie in [0,1]")
    usable = (q > 0) & (q < 1)
    if not np.any(usable):
        raise UnidentifiableError("Qualities of exactly 0 or 1 carry no information about theta")
    if np.count_nonzero(usable) < 2:
        raise InsufficientDataError("Need at least 2 pairs with quality strictly inside (0,1)")
    return q[usable], c[usable]


def _paired(predicted, observed):
    predicted = np.asarray(predicted, dtype=float).ravel()
    observed = np.asarray(observed, dtype=float).ravel()
    if predicted.size != observed.size or predicted.size == 0:
        raise InvalidInputError("Predicted and observed must be nonempty and of equal length")
    return predicted, observed
