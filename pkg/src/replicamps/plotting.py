"""Deterministic SVG plots of a records file.

Every growth observable gets one figure per chain length with a linear and
a log-log panel, a fitted power-law guide line, and the exponent annotated.
Profiles get a snapshot overlay. Output is a pure function of the input
rows: the SVG date stamp is stripped and the element-id hash salt is
pinned, so replotting the same records yields identical bytes.
"""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "replicamps"

import matplotlib.pyplot as plt  # noqa: E402

from .observables import average_over_realizations, fit_power_law
from .runner import FITTABLE, read_records, rows_to_records
from .tensors import ShapeError

__all__ = ["plot_records"]

SVG_METADATA = {"Date": None}
MAX_PROFILE_SNAPSHOTS = 6

AXIS_LABELS = {
    "pe": "participation entropy",
    "pe_exact": "participation entropy (dense)",
    "pe_sampled": "participation entropy (sampled)",
    "sre": "stabilizer Renyi entropy",
    "sre_exact": "stabilizer Renyi entropy (dense)",
    "sre_sampled": "stabilizer Renyi entropy (sampled)",
    "transfer": "polarization transfer",
}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return path


def _empty_figure(out_dir: Path) -> list[Path]:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.set_xlabel("t")
    ax.set_title("no records")
    return [_save(fig, out_dir / "plot_empty.svg")]


def _guide_line(ax, series, window):
    """Fitted power law drawn through the window's last point, slope annotated."""
    try:
        fit = fit_power_law(series, window=window)
    except ShapeError:
        return
    lo, hi = fit.window
    ref_t, ref_y = max((t, y) for t, y in series if lo <= t <= hi)
    scale = ref_y / ref_t**fit.exponent
    ts = [lo + (hi - lo) * i / 40 for i in range(41)]
    ax.plot(ts, [scale * t**fit.exponent for t in ts], "k--", linewidth=1)
    ax.annotate(
        f"$\\sim t^{{{fit.exponent:.2f}}}$",
        xy=(ref_t, ref_y),
        xytext=(-10, 10),
        textcoords="offset points",
        fontsize=10,
    )


def _plot_growth(observable, length, curves, window, out_dir: Path) -> Path:
    fig, (ax_lin, ax_log) = plt.subplots(1, 2, figsize=(9.5, 3.8))
    for index in sorted(curves, key=lambda x: x or 0.0):
        series = sorted(curves[index])
        ts = [t for t, _ in series]
        ys = [y for _, y in series]
        label = None if index is None else f"index {index:g}"
        ax_lin.plot(ts, ys, marker="o", markersize=3, label=label)
        pos = [(t, y) for t, y in series if t > 0 and y > 0]
        if len(pos) >= 2:
            ax_log.loglog([t for t, _ in pos], [y for _, y in pos], marker="o", markersize=3, label=label)
            _guide_line(ax_log, pos, window)
    for ax in (ax_lin, ax_log):
        ax.set_xlabel("t")
        if any(v is not None for v in curves):
            ax.legend(fontsize=8)
    ax_lin.set_ylabel(AXIS_LABELS.get(observable, observable))
    fig.suptitle(f"{observable}, L = {length}")
    fig.tight_layout()
    return _save(fig, out_dir / f"plot_{observable}_L{length}.svg")


def _plot_profiles(length, rows, out_dir: Path) -> Path:
    by_time: dict[float, dict[int, float]] = defaultdict(dict)
    for r in rows:
        by_time[r.time][int(r.index)] = r.value
    times = sorted(by_time)
    stride = max(1, math.ceil(len(times) / MAX_PROFILE_SNAPSHOTS))
    shown = times[::stride]
    if times and times[-1] not in shown:
        shown.append(times[-1])
    fig, ax = plt.subplots(figsize=(6, 3.8))
    for t in shown:
        profile = by_time[t]
        sites = sorted(profile)
        ax.plot(sites, [profile[j] for j in sites], marker=".", label=f"t = {t:g}")
    ax.set_xlabel("site")
    ax.set_ylabel("$\\langle Z_j \\rangle$")
    ax.legend(fontsize=8)
    fig.suptitle(f"magnetization profile, L = {length}")
    fig.tight_layout()
    return _save(fig, out_dir / f"plot_z_profile_L{length}.svg")


def plot_records(
    records_path: str | Path,
    out_dir: str | Path | None = None,
    observables: list[str] | None = None,
    window: tuple[float, float] | None = None,
) -> list[Path]:
    """Render one SVG per (observable, L) found in the records file."""
    records_path = Path(records_path)
    rows = read_records(records_path)
    out = Path(out_dir) if out_dir else records_path.parent / "plots"
    out.mkdir(parents=True, exist_ok=True)
    if not rows:
        return _empty_figure(out)
    lengths = {row["L"]: None for row in rows}
    averaged = average_over_realizations(rows_to_records(rows))
    wanted = set(observables) if observables else None
    written: list[Path] = []
    for length in sorted(lengths):
        if len(lengths) == 1:
            scoped = averaged
        else:
            scoped_rows = [row for row in rows if row["L"] == length]
            scoped = average_over_realizations(rows_to_records(scoped_rows))
        curves: dict[str, dict[float | None, list[tuple[float, float]]]] = {}
        profile_rows = []
        for r in scoped:
            if r.observable == "z_profile":
                profile_rows.append(r)
            elif wanted is None or r.observable in wanted:
                if r.observable in FITTABLE:
                    curves.setdefault(r.observable, {}).setdefault(r.index, []).append(
                        (r.time, r.value)
                    )
        for observable in sorted(curves):
            written.append(_plot_growth(observable, length, curves[observable], window, out))
        if profile_rows and (wanted is None or "z_profile" in wanted):
            written.append(_plot_profiles(length, profile_rows, out))
    if not written:
        return _empty_figure(out)
    return written
