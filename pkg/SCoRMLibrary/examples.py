# SCoRMLibrary examples
# Bundled steam trap case study and synthetic return streams
#   Each example outputs a list of batches and an options object with all required fields

import json
import os

import numpy as np

from . import cost, evt, returns
from .data import load_batches

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
FIXTURE_BATCHES = os.path.join(DATA_DIR, "steam_traps_batches.csv")
FIXTURE_SUMS = os.path.join(DATA_DIR, "steam_traps_sums.json")

#Generating models of the synthetic example
SYNTHETIC_HPD = evt.HpdParams(mu=12.0, sigma=4.0, gpd=evt.GpdParams(u=25.0, xi=0.2, beta=15.0), p_extreme=0.1)
SYNTHETIC_COST = cost.CostParams(a0_normal=500.0, theta_normal=0.64, a0_extreme=500.0, theta_extreme=0.76)


def GetExample(example, **kwargs):
    # Master function for selecting an example using a corresponding string
    # Inputs: example- string that corresponds to the desired data set
    # Outputs: batches and options objects corresponding to the desired data set
    from . import Options

    options = Options()
    if example.lower() == 'steam traps':
        batches = load_fixture()
    elif example.lower() == 'steam traps (parametric)':
        batches = load_fixture()
        options.bootstrap.mode = "parametric"
    elif example.lower() == 'synthetic':
        batches = synthetic_batches(**kwargs)
        options.threshold = "search"
    else:
        raise Exception("Unrecognized Example Type")
    return batches, options


def load_fixture():
    """The 81 steam trap batches, one per weekly return period."""
    return load_batches(FIXTURE_BATCHES)


def fixture_sums():
    with open(FIXTURE_SUMS, encoding="utf-8") as f:
        return json.load(f)


def synthetic_batches(horizon=200, seed=0, noise=0.05, hpd=SYNTHETIC_HPD, cost_params=SYNTHETIC_COST):
    """Simulated batches with per-core qualities and noisy per-core costs.

    Qualities are Beta(2, 2); each core's observed cost is its model cost times a
    lognormal factor with log-scale noise.
    """
    rng = np.random.default_rng(seed)
    config = returns.ReturnSimConfig(horizon, hpd, ("beta", (2.0, 2.0)), rng)
    batches = []
    for batch in returns.simulate_return_stream(config):
        a0, theta = cost_params.for_label(batch.label)
        model_cost = cost.core_cost(batch.qualities, a0, theta)
        observed = model_cost * rng.lognormal(0.0, noise, size=batch.size)
        cores = [cost.CoreObservation(batch_id=batch.period, quality=float(q), observed_cost=float(c))
                 for q, c in zip(batch.qualities, observed)]
        batches.append(cost.BatchObservation(period=batch.period, size=batch.size, label=batch.label,
                                             mean_quality=float(np.mean(batch.qualities)),
                                             observed_cost=float(np.sum(observed)), cores=cores))
    return batches
