"""Turn a FigureSpec plus a results directory into PNG and SVG files.

No statistics are computed here: points come straight from the mean
column and error bars from stderr. Styling is pinned so the same CSV
bytes always produce the same image bytes.
"""

import os

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .specs import HEATMAP, LINE, SpecError, read_table, select_rows, \
    validate_columns  # noqa: E402

_STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "figrender",
}

# Fixed timestamps and tool tags would break byte-level reproducibility.
_NO_METADATA = {"png": {"Software": None},
                "svg": {"Date": None, "Creator": None}}

_MARKERS = ("o", "s", "^", "d", "v", "x", "*")


def _float(row, col):
    try:
        return float(row[col])
    except ValueError:
        raise SpecError(f"column {col!r} holds non-numeric value "
                        f"{row[col]!r}")


def _sort_key(value):
    try:
        return (0, float(value), "")
    except (TypeError, ValueError):
        return (1, 0.0, str(value))


def _series_groups(spec, rows):
    """Ordered (label, rows) groups, one per drawn line."""
    groups = []
    for metric in spec.metric:
        matched = select_rows(rows, metric, spec)
        if spec.series_param is None:
            groups.append((metric, matched))
            continue
        keys = sorted({r[spec.series_param] for r in matched},
                      key=_sort_key)
        for key in keys:
            label = key if len(spec.metric) == 1 else f"{key} {metric}"
            groups.append(
                (label,
                 [r for r in matched if r[spec.series_param] == key]))
    return [(label, g) for label, g in groups if g]


def _draw_line(spec, rows, ax):
    groups = _series_groups(spec, rows)
    if not groups:
        raise SpecError(f"no rows match metric {spec.metric} with filters "
                        f"{spec.filters}")
    for i, (label, group) in enumerate(groups):
        group = sorted(group, key=lambda r: _float(r, spec.x_param))
        x = np.array([_float(r, spec.x_param) for r in group])
        y = np.array([_float(r, "mean") for r in group])
        err = np.array([_float(r, "stderr") for r in group])
        ax.errorbar(x, y, yerr=err, label=label,
                    marker=_MARKERS[i % len(_MARKERS)], capsize=3)
    if spec.log_x:
        ax.set_xscale("log")
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel(spec.x_param)
    ax.set_ylabel(spec.y_label or ", ".join(spec.metric))
    if len(groups) > 1:
        ax.legend()


def _draw_heatmap(spec, rows, ax):
    metric = spec.metric[0]
    matched = select_rows(rows, metric, spec)
    if not matched:
        raise SpecError(f"no rows match metric {metric!r} with filters "
                        f"{spec.filters}")
    xs = sorted({_float(r, spec.x_param) for r in matched})
    ys = sorted({_float(r, spec.series_param) for r in matched})
    grid = np.full((len(ys), len(xs)), np.nan)
    for row in matched:
        i = ys.index(_float(row, spec.series_param))
        j = xs.index(_float(row, spec.x_param))
        grid[i, j] = _float(row, "mean")
    image = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(xs)), [f"{v:g}" for v in xs])
    ax.set_yticks(range(len(ys)), [f"{v:g}" for v in ys])
    ax.set_xlabel(spec.x_param)
    ax.set_ylabel(spec.series_param)
    ax.grid(False)
    span = np.nanmax(grid) - np.nanmin(grid)
    mid = np.nanmin(grid) + 0.5 * (span if span > 0 else 1.0)
    for i in range(len(ys)):
        for j in range(len(xs)):
            if np.isnan(grid[i, j]):
                continue
            color = "black" if grid[i, j] > mid else "white"
            ax.text(j, i, f"{100 * grid[i, j]:.1f}%", ha="center",
                    va="center", color=color, fontsize=8)
    plt.colorbar(image, ax=ax, label=metric)


def render(spec, results_dir, out_dir=None):
    """Render one figure; returns the (png, svg) paths written."""
    csv_path = os.path.join(results_dir, spec.source_csv)
    if not os.path.exists(csv_path):
        raise SpecError(f"result file not found: {csv_path}")
    rows, header = read_table(csv_path)
    validate_columns(spec, header, csv_path)
    if not rows:
        raise SpecError(f"{csv_path}: no data rows")

    out_dir = out_dir or results_dir
    os.makedirs(out_dir, exist_ok=True)
    base = os.path.join(out_dir, spec.output)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        try:
            if spec.kind == LINE:
                _draw_line(spec, rows, ax)
            elif spec.kind == HEATMAP:
                _draw_heatmap(spec, rows, ax)
            else:
                raise SpecError(f"unknown kind {spec.kind!r}")
            if spec.title:
                ax.set_title(spec.title)
            fig.tight_layout()
            paths = []
            for ext in ("png", "svg"):
                path = f"{base}.{ext}"
                fig.savefig(path, metadata=_NO_METADATA[ext])
                paths.append(path)
        finally:
            plt.close(fig)
    return tuple(paths)
