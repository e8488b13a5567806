# -*- coding: utf-8 -*-
"""
Return-quantity distributions: truncated normal body, generalized Pareto tail
and their hybrid Pareto (HPD) mixture, with maximum likelihood fitting and a
Pearson chi-square goodness of fit test.
"""

#3rd party Modules
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize as opt
import scipy.stats as sct

#Package Modules
from .errors import InvalidParameterError, InvalidInputError, InsufficientDataError, ConfigurationError, \
    TailUnidentifiableError, NumericalError

#|xi| below this uses the exponential branch of the GPD
XI_ZERO_TOL = 1e-8

###----------------------------------------------------------------------------------------------
###-------------------------------------Class Definitions----------------------------------------
###----------------------------------------------------------------------------------------------

@dataclass(frozen=True)
class GpdParams:
    """Generalized Pareto tail above threshold u with shape xi and scale beta."""
    u: float
    xi: float
    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise InvalidParameterError("GPD scale beta must be positive, got " + str(self.beta))
        if not (np.isfinite(self.u) and np.isfinite(self.xi)):
            raise InvalidParameterError("GPD threshold and shape must be finite")

    @property
    def upper_endpoint(self):
        if self.xi < -XI_ZERO_TOL:
            return self.u - self.beta / self.xi
        return np.inf

    def to_dict(self):
        return {"u": float(self.u), "xi": float(self.xi), "beta": float(self.beta)}

    @classmethod
    def from_dict(cls, d):
        return cls(u=d["u"], xi=d["xi"], beta=d["beta"])


@dataclass(frozen=True)
class HpdParams:
    """Hybrid Pareto mixture: (1-p_extreme) x normal truncated to (-inf, u), p_extreme x GPD on [u, ...)."""
    mu: float
    sigma: float
    gpd: GpdParams
    p_extreme: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidParameterError("Body scale sigma must be positive, got " + str(self.sigma))
        if not 0 <= self.p_extreme <= 1:
            raise InvalidParameterError("Mixture weight p_extreme must lie in [0,1], got " + str(self.p_extreme))

    @property
    def u(self):
        return self.gpd.u

    def to_dict(self):
        return {"mu": float(self.mu), "sigma": float(self.sigma), "u": float(self.gpd.u),
                "xi": float(self.gpd.xi), "beta": float(self.gpd.beta),
                "p_extreme": float(self.p_extreme)}

    @classmethod
    def from_dict(cls, d):
        return cls(mu=d["mu"], sigma=d["sigma"], gpd=GpdParams(d["u"], d["xi"], d["beta"]),
                   p_extreme=d["p_extreme"])


class HpdOptions:
    def __init__(self, threshold=None, min_exceedances=5, min_sample=20, percentile_range=(50, 95),
                 max_candidates=60, max_iter=2000, x_tol=1e-8, xi_max=1.0, beta_min_ratio=0.01):
        self.threshold = threshold                  #None searches the grid, a number fixes u
        self.min_exceedances = min_exceedances      #Exceedances required for a candidate u
        self.min_sample = min_sample
        self.percentile_range = percentile_range    #Empirical percentiles bounding the grid
        self.max_candidates = max_candidates        #Larger grids are thinned to this many values
        self.max_iter = max_iter
        self.x_tol = x_tol
        self.xi_max = xi_max                        #Upper bound on the tail shape; the tail mean is infinite from 1
        self.beta_min_ratio = beta_min_ratio        #Floor on the tail scale as a fraction of the mean excess
        if self.threshold is not None and not (np.isfinite(self.threshold) and self.threshold > 0):
            raise ConfigurationError("Error! Fixed threshold must be a positive number")
        if self.min_exceedances < 1 or self.min_sample < 1:
            raise ConfigurationError("Error! min_exceedances and min_sample must be at least 1")
        lo, hi = self.percentile_range
        if not 0 <= lo < hi <= 100:
            raise ConfigurationError("Error! percentile_range must be increasing within [0, 100]")
        if self.max_candidates < 1 or self.max_iter < 1 or not self.x_tol > 0:
            raise ConfigurationError("Error! max_candidates, max_iter and x_tol must be positive")
        if not (self.xi_max > 0 and np.isfinite(self.xi_max)):
            raise ConfigurationError("Error! xi_max must be a positive number")
        if not 0 < self.beta_min_ratio < 1:
            raise ConfigurationError("Error! beta_min_ratio must lie in (0, 1)")
    pass


@dataclass
class HpdFitReport:
    params: HpdParams
    log_likelihood: float
    n_normal: int
    n_extreme: int
    threshold_candidates: list = field(default_factory=list)   #(u, log-likelihood) pairs
    converged: bool = True

    def to_dict(self):
        return {"params": self.params.to_dict(),
                "log_likelihood": float(self.log_likelihood),
                "n_normal": int(self.n_normal),
                "n_extreme": int(self.n_extreme),
                "threshold_candidates": [[float(u), _json_float(ll)] for u, ll in self.threshold_candidates],
                "converged": bool(self.converged)}

    @classmethod
    def from_dict(cls, d):
        return cls(params=HpdParams.from_dict(d["params"]), log_likelihood=d["log_likelihood"],
                   n_normal=d["n_normal"], n_extreme=d["n_extreme"],
                   threshold_candidates=[(u, _from_json_float(ll)) for u, ll in d["threshold_candidates"]],
                   converged=d["converged"])


@dataclass
class GofResult:
    statistic: float
    degrees_of_freedom: int
    p_value: float
    bins: list = field(default_factory=list)    #(lower, upper, observed, expected)

    def to_dict(self):
        return {"statistic": float(self.statistic),
                "degrees_of_freedom": int(self.degrees_of_freedom),
                "p_value": float(self.p_value),
                "bins": [[_json_float(lo), _json_float(hi), int(o), float(e)] for lo, hi, o, e in self.bins]}

    @classmethod
    def from_dict(cls, d):
        return cls(statistic=d["statistic"], degrees_of_freedom=d["degrees_of_freedom"],
                   p_value=d["p_value"],
                   bins=[(_from_json_float(lo), _from_json_float(hi), o, e) for lo, hi, o, e in d["bins"]])


###----------------------------------------------------------------------------------------------
###-------------------------------------Densities------------------------------------------------
###----------------------------------------------------------------------------------------------

def trunc_normal_pdf(x, mu, sigma, upper_bound=np.inf):
    """Density of the normal(mu, sigma) truncated to (-inf, upper_bound) and renormalized.

    Parameters
    ----------
    x : float or np.ndarray
        Evaluation points.
    mu, sigma : float
        Location and scale of the parent normal.
    upper_bound : float
        Truncation point; the density is 0 at and above it.

    Returns
    -------
    float or np.ndarray
        Density values.
    """
    _check_sigma(sigma)
    x = np.asarray(x, dtype=float)
    return _as_output(np.exp(_trunc_normal_logpdf(x, mu, sigma, upper_bound)))


def trunc_normal_logpdf(x, mu, sigma, upper_bound=np.inf):
    _check_sigma(sigma)
    return _as_output(_trunc_normal_logpdf(np.asarray(x, dtype=float), mu, sigma, upper_bound))


def trunc_normal_cdf(x, mu, sigma, upper_bound=np.inf):
    _check_sigma(sigma)
    x = np.asarray(x, dtype=float)
    log_norm = sct.norm.logcdf((upper_bound - mu) / sigma)
    cdf = np.exp(sct.norm.logcdf((x - mu) / sigma) - log_norm)
    return _as_output(np.where(x < upper_bound, np.minimum(cdf, 1.0), 1.0))


def trunc_normal_ppf(q, mu, sigma, upper_bound=np.inf):
    _check_sigma(sigma)
    q = np.asarray(q, dtype=float)
    mass = sct.norm.cdf((upper_bound - mu) / sigma)
    x = mu + sigma * sct.norm.ppf(q * mass)
    #Keep draws strictly inside the support
    return _as_output(np.minimum(x, np.nextafter(upper_bound, -np.inf)))


def gpd_pdf(x, p):
    """Generalized Pareto density, 0 outside [u, upper endpoint]."""
    return _as_output(_genpareto(p).pdf(np.asarray(x, dtype=float)))


def gpd_logpdf(x, p):
    return _as_output(_genpareto(p).logpdf(np.asarray(x, dtype=float)))


def gpd_cdf(x, p):
    return _as_output(_genpareto(p).cdf(np.asarray(x, dtype=float)))


def gpd_ppf(q, p):
    return _as_output(_genpareto(p).ppf(np.asarray(q, dtype=float)))


def hpd_pdf(x, p):
    """Mixture density: (1-p) x truncated normal below u, p x GPD at and above u.

    Parameters
    ----------
    x : float or np.ndarray
        Batch sizes at which to evaluate the density.
    p : HpdParams
        Mixture parameters.

    Returns
    -------
    float or np.ndarray
        Density values, integrating to 1 over the support.
    """
    return _as_output(np.exp(hpd_logpdf(x, p)))


def hpd_logpdf(x, p):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide='ignore'):
        log_body = np.log1p(-p.p_extreme) + trunc_normal_logpdf(x, p.mu, p.sigma, p.u)
        log_tail = np.log(p.p_extreme) + gpd_logpdf(x, p.gpd)
    return _as_output(np.where(x < p.u, log_body, log_tail))


def hpd_cdf(x, p):
    """Mixture CDF; equals 1 - p_extreme at u by construction."""
    x = np.asarray(x, dtype=float)
    body = (1 - p.p_extreme) * np.asarray(trunc_normal_cdf(x, p.mu, p.sigma, p.u))
    tail = (1 - p.p_extreme) + p.p_extreme * np.asarray(gpd_cdf(x, p.gpd))
    return _as_output(np.where(x < p.u, body, tail))


def hpd_ppf(q, p):
    """Quantile function of the mixture, the inverse of hpd_cdf."""
    q = np.asarray(q, dtype=float)
    if np.any((q < 0) | (q > 1)):
        raise InvalidInputError("Probabilities must lie in [0,1]")
    p_body = 1 - p.p_extreme
    with np.errstate(divide='ignore', invalid='ignore'):
        q_body = np.where(p_body > 0, np.minimum(q / p_body, 1.0), 0.0)
        q_tail = np.where(p.p_extreme > 0, np.clip((q - p_body) / p.p_extreme, 0.0, 1.0), 0.0)
    x_body = np.asarray(trunc_normal_ppf(q_body, p.mu, p.sigma, p.u))
    x_tail = np.asarray(gpd_ppf(q_tail, p.gpd))
    return _as_output(np.where(q < p_body, x_body, x_tail))


def density_jump(p):
    """Density jump at the threshold, hpd_pdf(u) minus the limit from below."""
    below = (1 - p.p_extreme) * np.exp(_trunc_normal_logpdf(np.nextafter(p.u, -np.inf), p.mu, p.sigma, p.u))
    return float(p.p_extreme / p.gpd.beta - below)


###----------------------------------------------------------------------------------------------
###-------------------------------------Sampling and Likelihood---------------------------------
###----------------------------------------------------------------------------------------------

def hpd_sample(p, count, seed):
    """Draws count batch sizes from the mixture by inverse-CDF sampling.

    Parameters
    ----------
    p : HpdParams
        Mixture parameters.
    count : int
        Number of draws (0 gives an empty array).
    seed : int or np.random.Generator
        Seed or generator owning the random stream.

    Returns
    -------
    np.ndarray
        count draws.
    """
    if count < 0:
        raise InvalidInputError("Sample count must be non-negative, got " + str(count))
    rng = np.random.default_rng(seed)
    return np.asarray(hpd_ppf(rng.random(int(count)), p), dtype=float).reshape(int(count))


def hpd_neg_log_lik(data, p):
    """Negative log-likelihood of data under the mixture, inf if any point has zero density."""
    data = np.asarray(data, dtype=float).ravel()
    if data.size == 0:
        raise InvalidInputError("Negative log-likelihood requires at least one observation")
    log_dens = np.asarray(hpd_logpdf(data, p))
    if not np.all(np.isfinite(log_dens)):
        return np.inf
    return float(-np.sum(log_dens))


###----------------------------------------------------------------------------------------------
###-------------------------------------Fitting--------------------------------------------------
###----------------------------------------------------------------------------------------------

def threshold_grid(data, hpd_options):
    """Candidate thresholds: unique data values inside the percentile range leaving
    at least min_exceedances exceedances, thinned to max_candidates."""
    data = np.sort(np.asarray(data, dtype=float).ravel())
    lo, hi = np.percentile(data, hpd_options.percentile_range)
    candidates = np.unique(data)
    candidates = candidates[(candidates >= lo) & (candidates <= hi)]
    n_exceed = data.size - np.searchsorted(data, candidates, side='left')
    keep = (n_exceed >= hpd_options.min_exceedances) & (data.size - n_exceed >= 2)
    candidates = candidates[keep]
    if candidates.size > hpd_options.max_candidates:
        index = np.unique(np.round(np.linspace(0, candidates.size - 1, hpd_options.max_candidates)).astype(int))
        candidates = candidates[index]
    return candidates


def fit_hpd(data, hpd_options=None, logging=False):
    """Maximum likelihood fit of the mixture with threshold selection.

    For each candidate threshold the mixture weight is fixed to the empirical
    exceedance fraction and the body (mu, sigma) and tail (xi, beta) are fitted
    separately by Nelder-Mead with restarts. The candidate with the largest total
    log-likelihood wins; exact ties go to the smallest threshold.

    Parameters
    ----------
    data : array_like
        Observed batch sizes.
    hpd_options : HpdOptions
        Fit settings; a fixed hpd_options.threshold skips the search.
    logging : bool or int
        Verbosity of progress messages.

    Returns
    -------
    HpdFitReport
        Best parameters, log-likelihood, regime counts and the examined candidates.
    """
    if hpd_options is None:
        hpd_options = HpdOptions()
    data = np.asarray(data, dtype=float).ravel()
    if not np.all(np.isfinite(data)):
        raise InvalidInputError("Batch sizes must be finite")
    if data.size < hpd_options.min_sample:
        raise InsufficientDataError("HPD fit needs at least " + str(hpd_options.min_sample)
                                    + " observations, got " + str(data.size))
    if hpd_options.threshold is None:
        candidates = threshold_grid(data, hpd_options)
        if candidates.size == 0:
            raise TailUnidentifiableError("No candidate threshold leaves " + str(hpd_options.min_exceedances)
                                          + " exceedances")
    else:
        u = float(hpd_options.threshold)
        if np.sum(data >= u) < hpd_options.min_exceedances:
            raise TailUnidentifiableError("Threshold " + str(u) + " leaves fewer than "
                                          + str(hpd_options.min_exceedances) + " exceedances")
        if np.sum(data < u) < 2:
            raise InsufficientDataError("Threshold " + str(u) + " leaves fewer than 2 body observations")
        candidates = np.array([u])
    if logging:
        print("Fitting HPD over " + str(candidates.size) + " candidate thresholds", file=sys.stderr)

    best = None
    examined = []
    for u in candidates:
        try:
            params, log_lik, converged = _fit_at_threshold(data, u, hpd_options)
        except (InvalidParameterError, NumericalError):
            params, log_lik, converged = None, -np.inf, False
        examined.append((float(u), float(log_lik)))
        if logging > 1:
            print("  u=" + str(u) + " log-likelihood=" + str(log_lik), file=sys.stderr)
        #Candidates run in ascending order so a strict comparison keeps the smallest u on ties
        if params is not None and np.isfinite(log_lik) and (best is None or log_lik > best[1]):
            best = (params, log_lik, converged)
    if best is None:
        raise NumericalError("HPD likelihood could not be maximized at any candidate threshold")

    params, log_lik, converged = best
    if not converged:
        warnings.warn("Nelder-Mead reached " + str(hpd_options.max_iter)
                      + " iterations before the simplex converged at u=" + str(params.u))
    n_extreme = int(np.sum(data >= params.u))
    return HpdFitReport(params=params, log_likelihood=float(log_lik),
                        n_normal=int(data.size - n_extreme), n_extreme=n_extreme,
                        threshold_candidates=examined, converged=converged)


def chi_square_gof(data, p, n_estimated_params=0, min_expected=5):
    """Pearson chi-square test of data against the mixture with equal-probability bins.

    The number of bins is 2 n^(2/5), capped so every bin expects at least
    min_expected observations.

    Parameters
    ----------
    data : array_like
        Observed batch sizes.
    p : HpdParams
        Hypothesized (usually fitted) mixture.
    n_estimated_params : int
        Parameters estimated from data, subtracted from the degrees of freedom.
    min_expected : int
        Minimum expected count per bin.

    Returns
    -------
    GofResult
        Statistic, degrees of freedom, p-value and bin table.
    """
    data = np.asarray(data, dtype=float).ravel()
    n = data.size
    if n < 20:
        raise InsufficientDataError("Chi-square test needs at least 20 observations, got " + str(n))
    n_bins = int(min(n // min_expected, max(3, round(2 * n ** 0.4))))
    dof = n_bins - 1 - int(n_estimated_params)
    if n_bins < 3 or dof < 1:
        raise InsufficientDataError("Cannot form enough bins with expected count >= " + str(min_expected)
                                    + " for " + str(n_estimated_params) + " estimated parameters")
    edges = np.asarray(hpd_ppf(np.arange(1, n_bins) / n_bins, p), dtype=float)
    observed = np.bincount(np.searchsorted(edges, data, side='right'), minlength=n_bins)
    expected = np.full(n_bins, n / n_bins)
    statistic = float(np.sum((observed - expected) ** 2 / expected))
    p_value = float(sct.chi2.sf(statistic, dof))
    lower = np.concatenate(([-np.inf], edges))
    upper = np.concatenate((edges, [p.gpd.upper_endpoint if p.p_extreme > 0 else p.u]))
    bins = [(float(lower[i]), float(upper[i]), int(observed[i]), float(expected[i])) for i in range(n_bins)]
    return GofResult(statistic=statistic, degrees_of_freedom=dof, p_value=p_value, bins=bins)


###----------------------------------------------------------------------------------------------
###-------------------------------------Support Functions----------------------------------------
###----------------------------------------------------------------------------------------------

def _fit_at_threshold(data, u, hpd_options):
    body = data[data < u]
    tail = data[data >= u]
    n_body, n_tail = body.size, tail.size
    p_extreme = n_tail / data.size
    mu, sigma, ll_body, body_converged = _fit_body(body, u, hpd_options)
    xi, beta, ll_tail, tail_converged = _fit_tail(tail - u, hpd_options)
    log_lik = ll_body + ll_tail + n_body * np.log1p(-p_extreme) + n_tail * np.log(p_extreme)
    params = HpdParams(mu=mu, sigma=sigma, gpd=GpdParams(u=float(u), xi=xi, beta=beta), p_extreme=p_extreme)
    return params, float(log_lik), body_converged and tail_converged


def _fit_body(x, u, hpd_options):
    def neg_log_lik(theta):
        sigma = np.exp(theta[1])
        if not (np.isfinite(sigma) and sigma > 0):
            return np.inf
        value = -np.sum(_trunc_normal_logpdf(x, theta[0], sigma, u))
        return value if np.isfinite(value) else np.inf

    sd = max(np.std(x), 1e-3 * max(1.0, abs(np.mean(x))))
    mad = 1.4826 * np.median(np.abs(x - np.median(x)))
    starts = [(np.mean(x), np.log(sd)),
              (np.median(x), np.log(mad if mad > 0 else sd)),
              (np.mean(x), np.log(2 * sd))]
    theta, value, converged = _nelder_mead(neg_log_lik, starts, hpd_options)
    return float(theta[0]), float(np.exp(theta[1])), -value, converged


def _fit_tail(y, hpd_options):
    """Bounded maximum likelihood fit of the GPD to excesses y over the threshold.

    Excesses tied at 0 let the likelihood grow without bound as beta shrinks and
    xi grows, so xi is kept in (-1, xi_max] and beta above beta_min_ratio times the
    mean excess. An optimum on either bound is rejected with NumericalError.
    """
    if not np.max(y) > 0:
        raise NumericalError("All exceedances equal the threshold; GPD scale is unidentifiable")
    beta_floor = hpd_options.beta_min_ratio * np.mean(y)
    xi_max = hpd_options.xi_max

    def neg_log_lik(theta):
        beta = np.exp(theta[1])
        #Likelihood is unbounded for xi <= -1
        if not (-1 < theta[0] <= xi_max) or not (np.isfinite(beta) and beta > 0):
            return np.inf
        value = -np.sum(sct.genpareto.logpdf(y, _gpd_shape(theta[0]), scale=beta))
        return value if np.isfinite(value) else np.inf

    y_max = np.max(y)
    starts = []
    for xi0, beta0 in _gpd_starts(y):
        xi0 = float(np.clip(xi0, -0.9, 0.9 * xi_max))
        #Start inside the support when the tail is bounded
        if xi0 < 0:
            beta0 = max(beta0, -xi0 * y_max * 1.05)
        starts.append((xi0, np.log(max(beta0, 2 * beta_floor))))
    bounds = opt.Bounds([-1.0, np.log(beta_floor)], [xi_max, np.inf])
    theta, value, converged = _nelder_mead(neg_log_lik, starts, hpd_options, bounds=bounds)
    xi, beta = float(theta[0]), float(np.exp(theta[1]))
    if xi >= xi_max - 1e-3 or beta <= beta_floor * (1 + 1e-3):
        raise NumericalError("GPD optimum sits on its bound (xi=" + str(xi) + ", beta=" + str(beta)
                             + "); the tail is degenerate at this threshold")
    return xi, beta, -value, converged


def _gpd_starts(y):
    """Start values (xi, beta): scipy's own GPD fit plus two fixed shapes."""
    starts = [(0.0, np.mean(y)), (0.5, 0.5 * np.mean(y))]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            xi0, _, beta0 = sct.genpareto.fit(y, floc=0)
        except (ValueError, RuntimeError, FloatingPointError):
            return starts
    if np.isfinite(xi0) and np.isfinite(beta0) and beta0 > 0:
        starts.insert(0, (xi0, beta0))
    return starts


def _nelder_mead(fcn, starts, hpd_options, bounds=None):
    best = None
    for start in starts:
        if not np.isfinite(fcn(np.asarray(start))):
            continue
        result = opt.minimize(fcn, np.asarray(start, dtype=float), method='Nelder-Mead', bounds=bounds,
                              options={'xatol': hpd_options.x_tol, 'fatol': hpd_options.x_tol,
                                       'maxiter': hpd_options.max_iter})
        if np.isfinite(result.fun) and (best is None or result.fun < best.fun):
            best = result
    if best is None:
        raise NumericalError("No start value gave a finite likelihood")
    return best.x, float(best.fun), bool(best.success)


def _trunc_normal_logpdf(x, mu, sigma, upper_bound):
    with np.errstate(divide='ignore'):
        log_dens = sct.norm.logpdf((x - mu) / sigma) - np.log(sigma) \
            - sct.norm.logcdf((upper_bound - mu) / sigma)
    return np.where(x < upper_bound, log_dens, -np.inf)


def _gpd_shape(xi):
    return 0.0 if abs(xi) < XI_ZERO_TOL else float(xi)


def _genpareto(p):
    return sct.genpareto(c=_gpd_shape(p.xi), loc=p.u, scale=p.beta)


def _check_sigma(sigma):
    if not sigma > 0:
        raise InvalidParameterError("Normal scale sigma must be positive, got " + str(sigma))


def _as_output(values):
    """Returns numpy scalars for 0-d results and arrays otherwise."""
    values = np.asarray(values)
    return values[()] if values.ndim == 0 else values


def _json_float(value):
    value = float(value)
    if np.isfinite(value):
        return value
    return "inf" if value > 0 else ("-inf" if value < 0 else "nan")


def _from_json_float(value):
    return float(value)
