# -*- coding: utf-8 -*-
"""
Reading and writing of core-level and batch-level CSV files, tidy plot series and
the JSON run report.
"""

#3rd party Modules
import hashlib
import json
import warnings

import numpy as np
import pandas as pd

#Package Modules
from .cost import BatchObservation, CoreObservation, batch_cost
from .errors import InvalidInputError, SchemaError
from .returns import RegimeLabel

#Columns of the steam trap core file with a dedicated meaning; others are kept as features
CORE_COLUMNS = ("tag_number", "period", "batch_type", "quality", "leak_rate", "observed_cost")
NON_FEATURE_COLUMNS = ("period", "batch_type", "quality", "observed_cost")
BATCH_COLUMNS = ("period", "size", "label", "mean_quality", "observed_cost", "predicted_cost")


class LoadOptions:
    def __init__(self, threshold=None, leak_rate_max=35.0):
        self.threshold = threshold              #Cross-check labels, or classify unlabelled core files
        self.leak_rate_max = leak_rate_max      #Leak rate (kg/hr) mapped to quality 0
        if not self.leak_rate_max > 0:
            raise InvalidInputError("Error! leak_rate_max must be positive")
    pass


##--------------------------------------Loaders--------------------------------------------------
def load_cores(path, load_options=None):
    """Loads a core-level CSV and groups the cores into batches by period.

    When a row has no quality but a leak rate, quality is derived as
    max(0, 1 - leak_rate / leak_rate_max) and the core is marked derived.

    Parameters
    ----------
    path : str or path-like
        CSV with at least tag_number, period and one of quality or leak_rate.
    load_options : LoadOptions

    Returns
    -------
    list of BatchObservation
        One batch per period in ascending order, each holding its CoreObservation list.
    """
    if load_options is None:
        load_options = LoadOptions()
    df = _read_csv(path)
    _require_columns(df, ("tag_number", "period"))
    if "quality" not in df.columns and "leak_rate" not in df.columns:
        raise SchemaError("Core file needs a quality or leak_rate column", column="quality")
    if df.empty:
        return []

    cores = {}
    labels = {}
    n_derived = 0
    for line, row in df.iterrows():
        period = _whole_number(row["period"], "period", line, minimum=1)
        quality = _optional(row, "quality")
        derived = False
        if quality is None:
            leak_rate = _optional(row, "leak_rate")
            if leak_rate is None:
                raise SchemaError("Core has neither quality nor leak rate", column="quality", line=line)
            if leak_rate < 0:
                raise SchemaError("Leak rate must be non-negative", column="leak_rate", line=line)
            quality = max(0.0, 1.0 - leak_rate / load_options.leak_rate_max)
            derived = True
            n_derived += 1
        elif not 0 <= quality <= 1:
            raise SchemaError("Quality must lie in [0,1], got " + str(quality), column="quality", line=line)
        observed_cost = _optional(row, "observed_cost")
        if observed_cost is not None and observed_cost < 0:
            raise SchemaError("Observed cost must be non-negative", column="observed_cost", line=line)
        batch_type = _optional(row, "batch_type")
        if batch_type is not None:
            labels.setdefault(period, _label(batch_type, "batch_type", line))
        features = {key: _plain(value) for key, value in row.items()
                    if key not in NON_FEATURE_COLUMNS and not _is_missing(value)}
        cores.setdefault(period, []).append(CoreObservation(batch_id=period, quality=quality,
                                                            observed_cost=observed_cost, features=features,
                                                            quality_derived=derived))
    if n_derived:
        warnings.warn("Derived quality from leak rate for " + str(n_derived) + " cores (leak_rate_max="
                      + str(load_options.leak_rate_max) + ")")

    batches = []
    for period in sorted(cores):
        members = cores[period]
        label = labels.get(period)
        if label is None and load_options.threshold is not None:
            label = RegimeLabel.EXTREME if len(members) >= load_options.threshold else RegimeLabel.NORMAL
        costs = [core.observed_cost for core in members]
        batches.append(BatchObservation(period=period, size=len(members), label=label,
                                        mean_quality=float(np.mean([core.quality for core in members])),
                                        observed_cost=None if None in costs else float(np.sum(costs)),
                                        cores=members))
    _check_labels(batches, load_options.threshold)
    return batches


def load_batches(path, threshold=None):
    """Loads a batch-level CSV with one row per period.

    Parameters
    ----------
    path : str or path-like
        CSV with period and size columns and optionally label, mean_quality,
        observed_cost and predicted_cost.
    threshold : float, optional
        When given, labels disagreeing with size >= threshold raise a warning.

    Returns
    -------
    list of BatchObservation
        Rows in file order.
    """
    df = _read_csv(path)
    _require_columns(df, ("period", "size"))
    batches = []
    seen = set()
    for line, row in df.iterrows():
        period = _whole_number(row["period"], "period", line, minimum=1)
        if period in seen:
            raise SchemaError("Duplicate period " + str(period), column="period", line=line)
        seen.add(period)
        size = _whole_number(row["size"], "size", line, minimum=1)
        label = _optional(row, "label")
        mean_quality = _optional(row, "mean_quality")
        if mean_quality is not None and not 0 <= mean_quality <= 1:
            raise SchemaError("Mean quality must lie in [0,1]", column="mean_quality", line=line)
        costs = {}
        for key in ("observed_cost", "predicted_cost"):
            costs[key] = _optional(row, key)
            if costs[key] is not None and costs[key] < 0:
                raise SchemaError("Cost must be non-negative", column=key, line=line)
        batches.append(BatchObservation(period=period, size=size,
                                        label=None if label is None else _label(label, "label", line),
                                        mean_quality=mean_quality, **costs))
    _check_labels(batches, threshold)
    return batches


##--------------------------------------Writers--------------------------------------------------
def write_batches(batches, path):
    batches_to_frame(batches).to_csv(path, index=False)


def batches_to_frame(batches):
    rows = [{"period": b.period, "size": b.size, "label": None if b.label is None else int(b.label),
             "mean_quality": b.mean_quality, "observed_cost": b.observed_cost, "predicted_cost": b.predicted_cost}
            for b in batches]
    df = pd.DataFrame(rows, columns=list(BATCH_COLUMNS))
    return df.astype({"label": "Int64"})


def write_stream(stream, path, cost_params=None):
    """Writes a simulated return stream in the batch CSV layout; with cost_params
    the priced batch costs fill predicted_cost."""
    rows = []
    for batch in stream:
        rows.append(BatchObservation(period=batch.period, size=batch.size, label=batch.label,
                                     mean_quality=float(np.mean(batch.qualities)),
                                     predicted_cost=None if cost_params is None
                                     else batch_cost(batch.qualities, cost_params, batch.label)))
    write_batches(rows, path)


def plot_series(paths):
    """Tidy (period, series, value) frame from named cost paths."""
    frames = [pd.DataFrame({"period": path.periods, "series": name, "value": path.cumulative_cost})
              for name, path in paths.items()]
    if not frames:
        return pd.DataFrame(columns=["period", "series", "value"])
    return pd.concat(frames, ignore_index=True)


##--------------------------------------Report serialization-------------------------------------
def dumps(report_dict):
    return json.dumps(report_dict, sort_keys=True, indent=2) + "\n"


def file_digest(path):
    sha = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            sha.update(chunk)
    return sha.hexdigest()


##--------------------------------------Support Functions----------------------------------------
def _read_csv(path):
    try:
        df = pd.read_csv(path, skipinitialspace=True, encoding="utf-8")
    except (FileNotFoundError, IsADirectoryError, PermissionError) as err:
        raise InvalidInputError("Cannot read " + str(path) + ": " + str(err)) from err
    except pd.errors.EmptyDataError as err:
        raise SchemaError("File " + str(path) + " has no header row") from err
    except (pd.errors.ParserError, UnicodeDecodeError) as err:
        raise SchemaError("File " + str(path) + " is not a valid CSV: " + str(err)) from err
    df.columns = [str(c).strip() for c in df.columns]
    df.index = _file_lines(path, len(df))
    return df


def _file_lines(path, n_rows):
    """1-based file line of each data row; pandas drops blank lines from the frame."""
    with open(path, encoding="utf-8") as f:
        lines = [number for number, text in enumerate(f, start=1) if text.strip()]
    if len(lines) == n_rows + 1:
        return lines[1:]
    #Quoted fields spanning lines: fall back to counting rows after the header
    return list(range(2, n_rows + 2))


def _require_columns(df, columns):
    for column in columns:
        if column not in df.columns:
            raise SchemaError("Missing required column", column=column, line=1)


def _optional(row, key):
    if key not in row.index or _is_missing(row[key]):
        return None
    try:
        return float(row[key])
    except (TypeError, ValueError) as err:
        raise SchemaError("Expected a number, got " + repr(row[key]), column=key, line=row.name) from err


def _whole_number(value, column, line, minimum):
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise SchemaError("Expected an integer, got " + repr(value), column=column, line=line) from None
    if not np.isfinite(number) or number != np.floor(number) or number < minimum:
        raise SchemaError("Expected an integer >= " + str(minimum) + ", got " + repr(value), column=column, line=line)
    return int(number)


def _label(value, column, line):
    if value not in (0, 1):
        raise SchemaError("Label must be 0 or 1, got " + repr(value), column=column, line=line)
    return RegimeLabel(int(value))


def _check_labels(batches, threshold):
    if threshold is None:
        return
    for batch in batches:
        if batch.label is not None and batch.label != (batch.size >= threshold):
            warnings.warn("Period " + str(batch.period) + ": label " + str(int(batch.label)) + " disagrees with size "
                          + str(batch.size) + " and threshold " + str(threshold) + "; keeping the label")


def _is_missing(value):
    return value is None or (np.ndim(value) == 0 and bool(pd.isna(value)))


def _plain(value):
    """numpy scalars to Python values so features stay JSON-friendly."""
    return value.item() if isinstance(value, np.generic) else value
