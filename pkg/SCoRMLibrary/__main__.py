#Command line interface: scorm <fit|validate|simulate|bootstrap|report>

import argparse
import io
import json
import os
import sys

import pandas as pd

import SCoRMLibrary as scorm
from SCoRMLibrary.errors import ScormError, InvalidInputError

STOCHASTIC_COMMANDS = ("simulate", "bootstrap", "report")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in STOCHASTIC_COMMANDS and args.seed is None:
        parser.error("--seed is required for " + args.command)
    try:
        return COMMANDS[args.command](args)
    except ScormError as err:
        print("scorm: error: " + str(err), file=sys.stderr)
        return err.exit_code
    except OSError as err:
        print("scorm: error: " + str(err), file=sys.stderr)
        return 3


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument("--cores", metavar="PATH", help="core-level CSV (one row per returned core)")
    source.add_argument("--batches", metavar="PATH",
                        help="batch-level CSV; the bundled steam trap batches when neither input is given")
    common.add_argument("--threshold", type=threshold_arg, default="auto", metavar="AUTO|SEARCH|N",
                        help="AUTO uses consistent labels if present, SEARCH maximizes the likelihood, N fixes u")
    common.add_argument("--a0", type=positive_float, default=500.0, help="cost of a zero-quality core")
    common.add_argument("--joint-cost-fit", action="store_true", help="fit a0 together with theta")
    common.add_argument("--leak-rate-max", type=positive_float, default=35.0,
                        help="leak rate (kg/hr) mapped to quality 0 when quality is absent")
    common.add_argument("--replicates", type=positive_int, default=3000)
    common.add_argument("--mode", choices=["nonparametric", "parametric"], default="nonparametric")
    common.add_argument("--quantiles", type=quantiles_arg, default=(0.025, 0.5, 0.975), metavar="A,B,C")
    common.add_argument("--horizon", type=positive_int, default=None, help="simulated periods (default: observed)")
    common.add_argument("--seed", type=int, default=None, help="master seed (required for stochastic commands)")
    common.add_argument("--out", metavar="PATH", default=None, help="output file (default: standard output)")
    common.add_argument("--format", choices=["text", "csv", "json"], default=None)
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="scorm", description="Stochastic cost of remanufacturing model")
    parser.add_argument("--version", action="version", version="%(prog)s " + scorm.__version__)
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    sub.add_parser("fit", parents=[common], help="fit batch sizes, regimes and cost curves")
    sub.add_parser("validate", parents=[common], help="prediction error against observed batch costs")
    sub.add_parser("simulate", parents=[common], help="simulate a return stream from the fitted models")
    sub.add_parser("bootstrap", parents=[common], help="bootstrap the cumulative cost path")
    sub.add_parser("report", parents=[common], help="full run report")
    return parser


##--------------------------------------Commands-------------------------------------------------
def cmd_fit(args):
    results = _run(args, run_bootstrap=False)
    fmt = args.format or "text"
    if fmt == "json":
        d = results.to_dict()
        keys = ("hpd_fit", "threshold_source", "gof", "regime", "cost_params", "cost_approximate", "provenance")
        _emit(scorm.data.dumps({k: d[k] for k in keys}), args)
    elif fmt == "csv":
        row = results.hpd_fit.params.to_dict()
        row.update({"n_normal": results.hpd_fit.n_normal, "n_extreme": results.hpd_fit.n_extreme,
                    "log_likelihood": results.hpd_fit.log_likelihood})
        if results.cost_params is not None:
            row.update(results.cost_params.to_dict())
        _emit(pd.DataFrame([row]).to_csv(index=False), args)
    else:
        fit = results.hpd_fit
        #p, n_normal and n_extreme all follow the fitted threshold
        summary = "u={:g} p={:.4f} n_normal={} n_extreme={}".format(fit.params.u, fit.params.p_extreme,
                                                                   fit.n_normal, fit.n_extreme)
        if abs(results.regime["p_extreme"] - fit.params.p_extreme) > 1e-12:
            summary += " p_labels={:.4f}".format(results.regime["p_extreme"])
        _emit(summary + "\n" + _tables(results), args)
    return 0


def cmd_validate(args):
    batches, provenance = load_input(args)
    if any(b.observed_cost is None for b in batches):
        raise InvalidInputError("validate needs an observed cost for every batch")
    results = _run(args, run_bootstrap=False, batches=batches, provenance=provenance)
    if results.metrics is None:
        raise InvalidInputError("validate needs a predicted_cost column or qualities to predict from")
    fmt = args.format or "text"
    if fmt == "json":
        _emit(scorm.data.dumps({"metrics": results.metrics, "shares": results.shares}), args)
    elif fmt == "csv":
        _emit(pd.DataFrame([results.metrics]).to_csv(index=False), args)
    else:
        m = results.metrics
        summary = "MSE={:.2f} e%={:.4f} ZeroR_MSE={:.2f}\n".format(m["mse"], m["percent_error"], m["zeror_mse"])
        _emit(summary + _tables(results), args)
    return 0


def cmd_simulate(args):
    batches, provenance = load_input(args)
    results = _run(args, run_bootstrap=False, batches=batches, provenance=provenance)
    horizon = args.horizon or len(batches)
    config = scorm.returns.ReturnSimConfig(horizon, results.hpd_fit.params, scorm.quality_pools(batches), args.seed)
    stream = scorm.returns.simulate_return_stream(config)
    if (args.format or "csv") == "json":
        records = json.loads(_stream_frame(stream, results.cost_params).to_json(orient="records"))
        _emit(scorm.data.dumps(records), args)
    else:
        _emit(_stream_frame(stream, results.cost_params).to_csv(index=False), args)
    return 0


def cmd_bootstrap(args):
    results = _run(args, run_bootstrap=True)
    fmt = args.format or "json"
    summary = results.bootstrap
    if fmt == "json":
        _emit(scorm.data.dumps(summary.to_dict()), args)
    elif fmt == "csv":
        series = {"q" + repr(q): path for q, path in summary.quantile_paths.items()}
        series["expected"] = summary.expected_path
        series.update(results.paths)
        _emit(scorm.data.plot_series(series).to_csv(index=False), args)
    else:
        _emit(_tables(results), args)
    return 0


def cmd_report(args):
    results = _run(args, run_bootstrap=True)
    if (args.format or "json") == "json":
        _emit(results.dumps(), args)
    else:
        _emit(_tables(results), args)
    return 0


COMMANDS = {"fit": cmd_fit, "validate": cmd_validate, "simulate": cmd_simulate,
            "bootstrap": cmd_bootstrap, "report": cmd_report}


##--------------------------------------Support Functions----------------------------------------
def load_input(args):
    """Batches and provenance for the chosen input file."""
    threshold = None if isinstance(args.threshold, str) else args.threshold
    if args.cores:
        path = args.cores
        batches = scorm.data.load_cores(path, scorm.data.LoadOptions(threshold=threshold,
                                                                     leak_rate_max=args.leak_rate_max))
    else:
        path = args.batches or scorm.examples.FIXTURE_BATCHES
        batches = scorm.data.load_batches(path, threshold=threshold)
    if not batches:
        raise InvalidInputError("No batches in " + str(path))
    provenance = {"input": os.path.basename(path), "input_sha256": scorm.data.file_digest(path)}
    return batches, provenance


def build_options(args, run_bootstrap):
    return scorm.Options(cost=scorm.CostOptions(a0=args.a0, joint=args.joint_cost_fit),
                         bootstrap=scorm.BootstrapOptions(replicates=args.replicates, mode=args.mode, seed=args.seed,
                                                          quantiles=args.quantiles),
                         load=scorm.data.LoadOptions(leak_rate_max=args.leak_rate_max),
                         threshold=args.threshold, horizon=args.horizon, run_bootstrap=run_bootstrap)


def _run(args, run_bootstrap, batches=None, provenance=None):
    if batches is None:
        batches, provenance = load_input(args)
    provenance = dict(provenance)
    if args.seed is not None:
        provenance["seed"] = args.seed
    return scorm.run_scorm(batches, build_options(args, run_bootstrap), logging=args.verbose, provenance=provenance)


def _stream_frame(stream, cost_params):
    buffer = io.StringIO()
    scorm.data.write_stream(stream, buffer, cost_params)
    buffer.seek(0)
    return pd.read_csv(buffer)


def _tables(results):
    buffer = io.StringIO()
    scorm.print_results(results, file=buffer)
    return buffer.getvalue().lstrip("\n") + "\n"


def _emit(text, args):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def threshold_arg(value):
    if value.lower() in ("auto", "search"):
        return value.lower()
    try:
        number = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected AUTO, SEARCH or a positive number, got " + repr(value)) from None
    if not number > 0:
        raise argparse.ArgumentTypeError("threshold must be positive")
    return number


def positive_float(value):
    number = float(value)
    if not number > 0:
        raise argparse.ArgumentTypeError("expected a positive number, got " + repr(value))
    return number


def positive_int(value):
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError("expected an integer >= 1, got " + repr(value))
    return number


def quantiles_arg(value):
    try:
        levels = tuple(float(v) for v in value.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated probabilities, got " + repr(value)) from None
    if any(not 0 < q < 1 for q in levels) or any(b <= a for a, b in zip(levels, levels[1:])):
        raise argparse.ArgumentTypeError("quantiles must be strictly increasing values in (0,1)")
    return levels


if __name__ == '__main__':
    sys.exit(main())
