#SCoRMLibrary
#Stochastic cost of remanufacturing: hybrid Pareto batch sizes, Bernoulli/DTMC return timing,
#   power-law core costs and bootstrapped cost paths
#Required Modules: numpy, scipy, pandas, tabulate (mpi4py optional)
#Functions: evt->fit_hpd, chi_square_gof
#           returns->simulate_return_stream, cost->fit_cost_params, bootstrap->bootstrap_parametric

#3rd party Modules
import sys
import warnings

import numpy as np
from tabulate import tabulate

#Package Modules
from . import errors
from . import evt
from . import returns
from . import cost
from . import bootstrap
from . import data
from . import examples
from .bootstrap import BootstrapOptions
from .cost import CostOptions

__version__ = "0.2.0"

###----------------------------------------------------------------------------------------------
###-------------------------------------Class Definitions----------------------------------------
###----------------------------------------------------------------------------------------------

##--------------------------------------Options--------------------------------------------------
#   Class holding the module option classes and run-level settings
class Options:
    def __init__(self, hpd=None, cost=None, bootstrap=None, load=None, threshold="auto", horizon=None,
                 gof_estimated_params=5, run_bootstrap=True, display=False):
        self.hpd = evt.HpdOptions() if hpd is None else hpd
        self.cost = CostOptions() if cost is None else cost
        self.bootstrap = BootstrapOptions() if bootstrap is None else bootstrap
        self.load = data.LoadOptions() if load is None else load
        self.threshold = threshold                          #"auto", "search" or a number
        self.horizon = horizon                              #Parametric bootstrap periods; None uses the data
        self.gof_estimated_params = gof_estimated_params    #Subtracted from the chi-square degrees of freedom
        self.run_bootstrap = run_bootstrap
        self.display = display                              #Whether to print result tables
        if isinstance(self.threshold, str):
            if self.threshold.lower() not in ("auto", "search"):
                raise errors.ConfigurationError("Error! threshold must be 'auto', 'search' or a number")
            self.threshold = self.threshold.lower()
        elif not self.threshold > 0:
            raise errors.ConfigurationError("Error! A fixed threshold must be positive")
        if self.horizon is not None and (int(self.horizon) != self.horizon or self.horizon < 1):
            raise errors.ConfigurationError("Error! horizon must be an integer >= 1")
    pass


##--------------------------------------Results--------------------------------------------------
#   The run report; every field is plain data or a result class with to_dict/from_dict
class Results:
    def __init__(self, hpd_fit=None, threshold_source=None, gof=None, regime=None, cost_params=None,
                 cost_approximate=None, metrics=None, shares=None, paths=None, bootstrap=None, provenance=None):
        self.hpd_fit = hpd_fit                      #HpdFitReport
        self.threshold_source = threshold_source    #"labels", "search" or "fixed"
        self.gof = gof                              #GofResult, None when too few observations
        self.regime = regime                        #p_extreme, counts, inter-arrival and transition summary
        self.cost_params = cost_params              #CostParams
        self.cost_approximate = cost_approximate    #True when fitted from batch means
        self.metrics = metrics                      #mse, percent error and the ZeroR baseline
        self.shares = shares                        #Extreme share of batches, cores and costs
        self.paths = {} if paths is None else paths     #Named CostPath objects
        self.bootstrap = bootstrap                  #BootstrapSummary
        self.provenance = {} if provenance is None else provenance
    pass

    def to_dict(self):
        return {"hpd_fit": None if self.hpd_fit is None else self.hpd_fit.to_dict(),
                "threshold_source": self.threshold_source,
                "gof": None if self.gof is None else self.gof.to_dict(),
                "regime": self.regime,
                "cost_params": None if self.cost_params is None else self.cost_params.to_dict(),
                "cost_approximate": self.cost_approximate,
                "metrics": self.metrics,
                "shares": self.shares,
                "paths": {name: path.to_dict() for name, path in self.paths.items()},
                "bootstrap": None if self.bootstrap is None else self.bootstrap.to_dict(),
                "provenance": self.provenance}

    @classmethod
    def from_dict(cls, d):
        return cls(hpd_fit=None if d["hpd_fit"] is None else evt.HpdFitReport.from_dict(d["hpd_fit"]),
                   threshold_source=d["threshold_source"],
                   gof=None if d["gof"] is None else evt.GofResult.from_dict(d["gof"]),
                   regime=d["regime"],
                   cost_params=None if d["cost_params"] is None else cost.CostParams.from_dict(d["cost_params"]),
                   cost_approximate=d["cost_approximate"], metrics=d["metrics"], shares=d["shares"],
                   paths={name: cost.CostPath.from_dict(p) for name, p in d["paths"].items()},
                   bootstrap=None if d["bootstrap"] is None else bootstrap.BootstrapSummary.from_dict(d["bootstrap"]),
                   provenance=d["provenance"])

    def dumps(self):
        return data.dumps(self.to_dict())


###----------------------------------------------------------------------------------------------
###-------------------------------------Main Functions-------------------------------------------
###----------------------------------------------------------------------------------------------

##--------------------------------------run_scorm------------------------------------------------
def run_scorm(batches, options=None, logging=False, provenance=None):
    """Runs the full cost-of-remanufacturing analysis on a list of batches.

    Fits the batch size mixture, labels and summarizes the return regimes, tests
    goodness of fit, calibrates the cost curves, scores predictions against the
    ZeroR baseline and bootstraps the cost paths. Unlabelled batches are
    labelled in place from the fitted threshold.

    Parameters
    ----------
    batches : list of BatchObservation
        Returned batches in period order.
    options : Options
        Run settings.
    logging : bool or int
        0 silent, 1 stage messages, 2 or more intermediate values.
    provenance : dict, optional
        Input digests and similar facts copied into the report.

    Returns
    -------
    Results
        The run report.
    """
    if options is None:
        options = Options()
    if not batches:
        raise errors.InvalidInputError("No batches to analyse")
    results = Results(provenance=dict(provenance or {}))
    results.provenance["version"] = __version__

    #Return quantity
    if logging:
        _log("Fitting batch size distribution")
    results.hpd_fit, results.threshold_source = fit_batch_sizes(batches, options, logging=logging)
    hpd = results.hpd_fit.params
    inferred = returns.classify_batches([b.size for b in batches], hpd.u)
    for batch, label in zip(batches, inferred):
        if batch.label is None:
            batch.label = label
        elif batch.label != label:
            warnings.warn("Period " + str(batch.period) + " is labelled " + batch.label.name.lower()
                          + " but its size classifies it " + label.name.lower() + " at u=" + str(hpd.u))
    results.regime = regime_summary([b.label for b in batches])

    sizes = np.array([b.size for b in batches], dtype=float)
    try:
        results.gof = evt.chi_square_gof(sizes, hpd, n_estimated_params=options.gof_estimated_params)
    except errors.InsufficientDataError as err:
        warnings.warn("Skipping goodness of fit: " + str(err))

    #Costs
    has_costs = all(b.observed_cost is not None for b in batches)
    has_quality = all(b.mean_quality is not None or b.cores for b in batches)
    if has_costs and has_quality:
        if logging:
            _log("Fitting cost parameters")
        results.cost_params, results.cost_approximate = cost.fit_cost_params(batches, options.cost)
    if has_costs:
        results.paths["observed"] = cost.cost_path([(b.period, b.observed_cost) for b in batches])
    predicted = predicted_costs(batches, results.cost_params)
    if predicted is not None:
        results.paths["predicted"] = cost.cost_path(zip([b.period for b in batches], predicted))
        if has_costs:
            results.metrics = prediction_metrics([b.observed_cost for b in batches], predicted)
    if has_costs:
        results.shares = cost.regime_shares(batches)

    #Bootstrap
    if options.run_bootstrap:
        results.bootstrap = run_bootstrap(batches, hpd, results.cost_params, options, logging=logging)
        results.provenance["seed"] = results.bootstrap.seed

    if options.display and _is_root():
        print_results(results, options)
    return results


def fit_batch_sizes(batches, options, logging=False):
    """Resolves the threshold per options.threshold and fits the mixture.

    Returns
    -------
    (HpdFitReport, str)
        The fit and where its threshold came from: labels, search or fixed.
    """
    sizes = np.array([b.size for b in batches], dtype=float)
    hpd_options = options.hpd
    source = "search"
    threshold = None
    if options.threshold == "auto" and all(b.label is not None for b in batches):
        threshold = returns.threshold_from_labels(sizes, [b.label for b in batches])
        if threshold is not None:
            source = "labels"
    elif not isinstance(options.threshold, str):
        threshold, source = float(options.threshold), "fixed"
    if threshold is not None:
        hpd_options = evt.HpdOptions(threshold=threshold, min_exceedances=hpd_options.min_exceedances,
                                     min_sample=hpd_options.min_sample, percentile_range=hpd_options.percentile_range,
                                     max_candidates=hpd_options.max_candidates, max_iter=hpd_options.max_iter,
                                     x_tol=hpd_options.x_tol, xi_max=hpd_options.xi_max,
                                     beta_min_ratio=hpd_options.beta_min_ratio)
    if logging > 1:
        _log("Threshold source: " + source + ("" if threshold is None else ", u=" + str(threshold)))
    return evt.fit_hpd(sizes, hpd_options, logging=logging), source


def regime_summary(labels):
    labels = [returns.RegimeLabel(label) for label in labels]
    gaps = returns.inter_arrival_times(labels)
    return {"p_extreme": returns.estimate_p(labels),
            "n_normal": int(sum(label == returns.RegimeLabel.NORMAL for label in labels)),
            "n_extreme": int(sum(label == returns.RegimeLabel.EXTREME for label in labels)),
            "extreme_periods": [i + 1 for i, label in enumerate(labels) if label == returns.RegimeLabel.EXTREME],
            "inter_arrival_times": gaps.tolist(),
            "mean_inter_arrival": float(np.mean(gaps)) if gaps.size else None,
            "transition": returns.fit_transition_matrix(labels).to_list()}


def predicted_costs(batches, cost_params):
    """Stored predictions when every batch has one, else model predictions, else None."""
    if all(b.predicted_cost is not None for b in batches):
        return np.array([b.predicted_cost for b in batches], dtype=float)
    if cost_params is None:
        return None
    try:
        return cost.predict_batch_costs(batches, cost_params)[0]
    except errors.InvalidInputError:
        return None


def prediction_metrics(observed, predicted):
    """MSE and percent error of predicted batch costs next to the ZeroR baseline."""
    observed = np.asarray(observed, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    zeror = cost.zeror_predict(observed)
    return {"mse": cost.mse(predicted, observed),
            "percent_error": cost.percent_error(float(np.sum(predicted)), float(np.sum(observed))),
            "observed_total": float(np.sum(observed)),
            "predicted_total": float(np.sum(predicted)),
            "underestimates": bool(np.sum(predicted) < np.sum(observed)),
            "zeror_value": zeror,
            "zeror_mse": cost.mse(np.full(observed.size, zeror), observed)}


def quality_pools(batches):
    """Per-regime pools of core qualities; batches without cores add size copies of their mean quality."""
    pools = {returns.RegimeLabel.NORMAL: [], returns.RegimeLabel.EXTREME: []}
    for batch in batches:
        if batch.cores:
            pools[batch.label].extend(batch.qualities.tolist())
        elif batch.mean_quality is not None:
            pools[batch.label].extend([batch.mean_quality] * batch.size)
    return {label: np.array(pool, dtype=float) for label, pool in pools.items()}


def run_bootstrap(batches, hpd, cost_params, options, logging=False):
    if options.bootstrap.mode == "nonparametric":
        return bootstrap.bootstrap_nonparametric(batches, options.bootstrap, logging=logging)
    if cost_params is None:
        raise errors.ConfigurationError("Parametric bootstrap needs cost parameters, which need observed costs")
    horizon = len(batches) if options.horizon is None else options.horizon
    return bootstrap.bootstrap_parametric(hpd, cost_params, quality_pools(batches), horizon, options.bootstrap,
                                          logging=logging)


##--------------------------------------print_results--------------------------------------------
def print_results(results, options=None, file=None):
    """Prints Results tables to console or document.

    Parameters
    ----------
    results : Results
        Run report.
    options : Options
        Run settings (unused beyond display choices).
    file : file-like, optional
        Destination; standard output by default.
    """
    out = sys.stdout if file is None else file
    if results.hpd_fit is not None:
        p = results.hpd_fit.params
        print('\n Batch Size Mixture (threshold from ' + str(results.threshold_source) + ')', file=out)
        print(tabulate([[p.mu, p.sigma, p.u, p.gpd.xi, p.gpd.beta, p.p_extreme, results.hpd_fit.log_likelihood]],
                       headers=["mu", "sigma", "u", "xi", "beta", "p", "log-lik"]), file=out)
    if results.regime is not None:
        print('\n Return Regimes', file=out)
        print(tabulate([[results.regime["n_normal"], results.regime["n_extreme"], results.regime["p_extreme"],
                         results.regime["mean_inter_arrival"]]],
                       headers=["n normal", "n extreme", "p extreme", "mean gap"]), file=out)
    if results.gof is not None:
        print('\n Pearson Chi-Square Goodness of Fit', file=out)
        print(tabulate([[results.gof.statistic, results.gof.degrees_of_freedom, results.gof.p_value]],
                       headers=["chi2", "df", "p-value"]), file=out)
    if results.cost_params is not None:
        c = results.cost_params
        print('\n Cost Parameters' + (' (batch-mean approximation)' if results.cost_approximate else ''), file=out)
        print(tabulate([["normal", c.a0_normal, c.theta_normal], ["extreme", c.a0_extreme, c.theta_extreme]],
                       headers=["regime", "a0", "theta"]), file=out)
    if results.metrics is not None:
        m = results.metrics
        print('\n Prediction Error', file=out)
        print(tabulate([["SCoRM", m["mse"], m["percent_error"]], ["ZeroR", m["zeror_mse"], None]],
                       headers=["model", "MSE", "e%"]), file=out)
    if results.shares is not None:
        print('\n Extreme Share', file=out)
        print(tabulate([[k, v] for k, v in sorted(results.shares.items())], headers=["quantity", "share"]), file=out)
    if results.bootstrap is not None:
        b = results.bootstrap
        print('\n Bootstrap (' + str(b.mode) + ', ' + str(b.replicates) + ' replicates, seed ' + str(b.seed) + ')',
              file=out)
        print(tabulate([[b.best_total, b.expected_total, b.worst_total, b.total_std_error]],
                       headers=["best", "expected", "worst", "std error"]), file=out)


###----------------------------------------------------------------------------------------------
###-------------------------------------Support Functions----------------------------------------
###----------------------------------------------------------------------------------------------

def _is_root():
    return bootstrap.MPI is None or bootstrap.MPI.COMM_WORLD.Get_rank() == 0


def _log(message):
    if _is_root():
        print(message, file=sys.stderr)
