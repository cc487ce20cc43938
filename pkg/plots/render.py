#!/usr/bin/env python3
"""Render TV decay figures from the experiment runner's CSV output.

Reads the tv_decay.csv and bounds.csv tables written by `oulevy
tv-decay` and `oulevy bounds`, overlays the empirical TV points (with
3 standard-error bars) on the bound curves, and adds a log-scale panel
whose decay-rate fit is recomputed from the same rows so it can be
eyeballed against the runner's fitted constants.  Pure consumer: reads
nothing but the two CSVs, imports nothing from the simulation package.

Usage:
    plots/render.py --tv FILE --bounds FILE --out FILE
                    [--scale linear|loglog|loglinear] [--title TEXT]

Exit codes: 0 success, 1 unreadable input or unwritable output,
2 schema violation (message names the offending column) or bad flags.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

TV_REQUIRED = ("t", "tv_projection", "tv_stderr", "tv_coupling_upper")
BOUNDS_REQUIRED = ("t", "kind", "value", "params_json")
SCALES = ("linear", "loglog", "loglinear")
FORMATS = (".png", ".svg")


class SchemaError(Exception):
    """CSV input does not conform to the documented table schema."""


def read_table(path: str, required: tuple[str, ...],
               numeric: tuple[str, ...]) -> tuple[list[str], list[dict]]:
    """Load a CSV, check required columns, parse numeric ones in place."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames
        if names is None:
            raise SchemaError(f"{path}: empty file, expected a header row")
        for col in required:
            if col not in names:
                raise SchemaError(f"{path}: missing required column {col!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    for i, row in enumerate(rows, start=2):
        for col in numeric:
            cell = row[col]
            try:
                value = float(cell) if cell is not None else math.nan
            except (TypeError, ValueError):
                value = math.nan
            if not math.isfinite(value):
                raise SchemaError(f"{path}: non-numeric value {cell!r} in "
                                  f"column {col!r} (line {i})")
            row[col] = value
    return list(names), rows


def load_tv(path: str) -> tuple[list[dict], list[str], str | None]:
    """Return rows, the bound_* column names, and the seed (if present)."""
    names, rows = read_table(path, TV_REQUIRED, TV_REQUIRED)
    bound_cols = [c for c in names if c.startswith("bound_")]
    for i, row in enumerate(rows, start=2):
        for col in bound_cols:
            try:
                row[col] = float(row[col])
            except (TypeError, ValueError):
                raise SchemaError(f"{path}: non-numeric value {row[col]!r} "
                                  f"in column {col!r} (line {i})") from None
    seed = rows[0].get("seed") if "seed" in names else None
    return rows, bound_cols, seed


def load_bounds(path: str) -> dict[str, list[tuple[float, float]]]:
    """Group bounds.csv rows into kind -> [(t, value), ...] sorted by t."""
    _, rows = read_table(path, BOUNDS_REQUIRED, ("t", "value"))
    curves: dict[str, list[tuple[float, float]]] = {}
    for row in rows:
        curves.setdefault(row["kind"], []).append((row["t"], row["value"]))
    for pts in curves.values():
        pts.sort(key=lambda p: p[0])
    return curves


def fit_line(ts: list[float], vs: list[float],
             log_t: bool) -> tuple[float, float] | None:
    """Least-squares slope/intercept of log v against t (or log t).

    Uses the strictly positive rows only; returns None when fewer than
    two remain.
    """
    xs, ys = [], []
    for t, v in zip(ts, vs):
        if v > 0.0 and (t > 0.0 or not log_t):
            xs.append(math.log(t) if log_t else t)
            ys.append(math.log(v))
    if len(xs) < 2:
        return None
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    if sxx == 0.0:
        return None
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
    return slope, my - slope * mx


def render(tv_path: str, bounds_path: str, out_path: str, scale: str,
           title: str | None) -> None:
    ext = os.path.splitext(out_path)[1].lower()
    if ext not in FORMATS:
        raise SchemaError(f"{out_path}: output format must be one of "
                          f"{', '.join(FORMATS)}")
    rows, bound_cols, seed = load_tv(tv_path)
    curves = load_bounds(bounds_path)

    ts = [row["t"] for row in rows]
    tv = [row["tv_projection"] for row in rows]
    err3 = [3.0 * row["tv_stderr"] for row in rows]
    upper = [row["tv_coupling_upper"] for row in rows]

    fig, (ax, axr) = plt.subplots(1, 2, figsize=(11.0, 4.5))

    ax.errorbar(ts, tv, yerr=err3, fmt="o", capsize=3, color="tab:blue",
                label="projection TV (3 se)")
    ax.plot(ts, upper, "s--", color="tab:orange", label="coupling upper")
    for col in bound_cols:
        ax.plot(ts, [row[col] for row in rows], "-", label=col)
    for kind, pts in curves.items():
        ax.plot([p[0] for p in pts], [p[1] for p in pts], ":", label=kind)
    if scale == "loglog":
        ax.set_xscale("log")
    if scale in ("loglog", "loglinear"):
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("total variation")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)

    # rate-fit panel: always log in TV; log in t only for the loglog view
    log_t = scale == "loglog"
    pos = [(t, v) for t, v in zip(ts, tv) if v > 0.0]
    axr.plot([p[0] for p in pos], [p[1] for p in pos], "o",
             color="tab:blue", label="projection TV")
    fit = fit_line(ts, tv, log_t)
    if fit is not None:
        slope, intercept = fit
        name = "slope" if log_t else "rate"
        lo = min(p[0] for p in pos)
        hi = max(p[0] for p in pos)
        grid = [lo + (hi - lo) * k / 99.0 for k in range(100)]
        line = [math.exp(intercept + slope * (math.log(g) if log_t else g))
                for g in grid if not log_t or g > 0.0]
        axr.plot(grid[-len(line):], line, "-", color="tab:red",
                 label=f"fit {name} = {slope:.3g}")
    else:
        axr.text(0.5, 0.5, "too few positive points to fit",
                 transform=axr.transAxes, ha="center")
    if log_t:
        axr.set_xscale("log")
    axr.set_yscale("log")
    axr.set_xlabel("t")
    axr.set_ylabel("total variation")
    axr.grid(True, alpha=0.3)
    axr.legend(fontsize=8)

    if title is None:
        title = "TV decay" + (f" (seed {seed})" if seed is not None else "")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render.py",
        description="Overlay empirical TV decay points on bound curves")
    parser.add_argument("--tv", required=True, help="tv_decay.csv path")
    parser.add_argument("--bounds", required=True, help="bounds.csv path")
    parser.add_argument("--out", required=True,
                        help="output image (.png or .svg)")
    parser.add_argument("--scale", choices=SCALES, default="linear")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    try:
        render(args.tv, args.bounds, args.out, args.scale, args.title)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
