"""Declarative figure descriptions.

A figure spec is a small JSON document naming a result CSV, the columns
to use, and the output basename. Validation happens against the CSV
header before any drawing so schema drift fails loudly with the
offending column named.
"""

import csv
import json
import os
from dataclasses import dataclass, field

LINE = "line"
HEATMAP = "heatmap"

# Columns every harness CSV carries regardless of experiment.
REQUIRED_COLUMNS = ("metric", "mean", "stderr")


class SpecError(ValueError):
    """Malformed figure spec or a spec/CSV mismatch."""


@dataclass(frozen=True)
class FigureSpec:
    source_csv: str
    kind: str
    x_param: str
    metric: tuple            # one or more metric names to plot
    output: str
    series_param: str | None = None
    filters: dict = field(default_factory=dict)
    log_x: bool = False
    log_y: bool = False
    title: str | None = None
    y_label: str | None = None

    def columns_used(self):
        cols = [self.x_param] + list(REQUIRED_COLUMNS)
        if self.series_param:
            cols.append(self.series_param)
        cols.extend(self.filters)
        return cols


def parse_spec(raw, origin="<spec>"):
    raw = dict(raw)
    try:
        source_csv = raw.pop("source_csv")
        kind = raw.pop("kind")
        x_param = raw.pop("x_param")
        metric = raw.pop("metric")
        output = raw.pop("output")
    except KeyError as err:
        raise SpecError(f"{origin}: missing required field {err.args[0]!r}")
    if kind not in (LINE, HEATMAP):
        raise SpecError(f"{origin}: unknown kind {kind!r}")
    if isinstance(metric, str):
        metric = (metric,)
    else:
        metric = tuple(metric)
    if not metric:
        raise SpecError(f"{origin}: metric list is empty")
    series_param = raw.pop("series_param", None)
    if kind == HEATMAP and series_param is None:
        raise SpecError(f"{origin}: heatmap needs series_param for the "
                        "y axis")
    if kind == HEATMAP and len(metric) != 1:
        raise SpecError(f"{origin}: heatmap takes exactly one metric")
    log_axes = raw.pop("log_axes", {})
    spec = FigureSpec(
        source_csv=source_csv, kind=kind, x_param=x_param, metric=metric,
        output=output, series_param=series_param,
        filters=dict(raw.pop("filters", {})),
        log_x=bool(log_axes.get("x", False)),
        log_y=bool(log_axes.get("y", False)),
        title=raw.pop("title", None),
        y_label=raw.pop("y_label", None),
    )
    if raw:
        raise SpecError(f"{origin}: unknown fields {sorted(raw)}")
    return spec


def load_spec(path):
    with open(path) as fh:
        return parse_spec(json.load(fh), origin=os.path.basename(path))


def read_table(csv_path):
    """Rows of a harness CSV as dicts, plus the header list."""
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SpecError(f"{csv_path}: empty file, no header")
        return list(reader), list(reader.fieldnames)


def validate_columns(spec, header, csv_path):
    for col in spec.columns_used():
        if col not in header:
            raise SpecError(
                f"{csv_path}: missing required column {col!r}")


def select_rows(rows, metric, spec):
    out = []
    for row in rows:
        if row["metric"] != metric:
            continue
        if any(row[k] != str(v) for k, v in spec.filters.items()):
            continue
        out.append(row)
    return out
