"""Run orchestration: domain-wall quench trajectories to records on disk.

One trajectory = one disorder realization evolved on the configured
schedule, with every observable measured at the snapshot times. Realizations
are independent work units (their sampling streams are keyed by realization
index, not by execution order), so they can run in worker processes and the
merged output is still deterministic: rows are concatenated in realization
order and floats are serialized with ``repr``, which round-trips exactly.

records.csv columns, in order:
    time, observable, index, L, Jz, h, realization, chi, chi_replica,
    value, stderr, discarded_weight
A field that does not apply to a row is written as an empty cell, never as
a zero. ``discarded_weight`` is the cumulative relative weight dropped on
the path from the initial state to that number (evolution truncation, the
optional measurement compression, and the replica sweeps of the
measurement itself).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import time as _time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .config import SimulationConfig, config_to_dict
from .evolution import XXZModel, domain_wall_state, evolve
from .exact import densify, participation_entropy_dense, sre_dense
from .mps import MatrixProductState, compress, entanglement_entropy
from .observables import (
    TimeSeriesRecord,
    average_over_realizations,
    fit_power_law,
    fit_power_law_offset,
    magnetization_profile,
    polarization_transfer,
)
from .participation import participation_entropy
from .sampling import estimate_pe, estimate_sre
from .stabilizer import stabilizer_renyi_entropy
from .tensors import ShapeError, TruncationSpec

__all__ = [
    "SCHEMA",
    "SchemaError",
    "compute_fits",
    "oracle_check",
    "oracle_tolerance",
    "read_records",
    "rows_to_records",
    "run",
    "write_records",
]

SCHEMA = (
    "time",
    "observable",
    "index",
    "L",
    "Jz",
    "h",
    "realization",
    "chi",
    "chi_replica",
    "value",
    "stderr",
    "discarded_weight",
)

FITTABLE = ("pe", "pe_exact", "pe_sampled", "sre", "sre_exact", "sre_sampled", "transfer")

ORACLE_TOL = 1e-8


class SchemaError(ValueError):
    """records.csv header does not match the published schema."""


# ---------------------------------------------------------------------------
# one trajectory


def _renormalized(m: MatrixProductState) -> MatrixProductState:
    return dataclasses.replace(m, log_norm=0.0)


def _measurement_copy(
    state: MatrixProductState, measure_chi: int
) -> tuple[MatrixProductState, float]:
    if measure_chi <= 0 or state.max_bond <= measure_chi:
        return state, 0.0
    squeezed, dw = compress(state, TruncationSpec(max_rank=measure_chi, weight_cutoff=1e-12))
    return _renormalized(squeezed), dw


def run_trajectory(cfg: SimulationConfig, realization: int) -> list[TimeSeriesRecord]:
    """All records of one realization, in measurement order."""
    length = cfg.model.length
    fields = cfg.disorder_spec.fields(length, realization) if cfg.disorder > 0 else ()
    model = XXZModel(length, cfg.model.coupling, cfg.model.anisotropy, fields)
    tag = realization if cfg.disorder > 0 else None
    rng = np.random.default_rng([cfg.seed, 7, realization])
    need_profile = cfg.observables.profile or cfg.observables.transfer
    base_profile = None
    records: list[TimeSeriesRecord] = []

    for i, sample in enumerate(evolve(domain_wall_state(length), model, cfg.schedule, cfg.truncation)):
        t, state = sample.time, sample.state
        evo_dw = sample.diagnostics.cumulative_discarded_weight
        chi = state.max_bond

        def emit(observable, index, value, stderr=None, chi_replica=None, dw=evo_dw):
            records.append(
                TimeSeriesRecord(
                    time=t,
                    observable=observable,
                    index=index,
                    value=float(value),
                    stderr=stderr,
                    chi=chi,
                    chi_replica=chi_replica,
                    discarded_weight=min(dw, 1.0),
                    realization=tag,
                )
            )

        if need_profile:
            profile = magnetization_profile(state)
            if base_profile is None:
                base_profile = profile
            if cfg.observables.profile:
                for j, z in enumerate(profile):
                    emit("z_profile", j, z)
            if cfg.observables.transfer:
                emit("transfer", None, polarization_transfer(profile, base_profile))
        if cfg.observables.entanglement:
            emit("entanglement", length // 2, entanglement_entropy(state))

        due_pe = [e for e in cfg.pe_plan if i % e.every == 0]
        due_sre = [e for e in cfg.sre_plan if i % e.every == 0]
        if not due_pe and not due_sre:
            continue
        meas, squeeze_dw = _measurement_copy(state, cfg.observables.measure_chi)
        meas_dw = evo_dw + squeeze_dw
        dense = None
        if any(e.method == "exact" for e in due_pe + due_sre):
            dense = densify(state)

        for e in due_pe:
            if e.method == "replica":
                spec = TruncationSpec(max_rank=e.chi, weight_cutoff=e.weight_cutoff)
                value, diag = participation_entropy(meas, e.index, spec)
                emit("pe", e.index, value, chi_replica=e.chi,
                     dw=meas_dw + diag.cumulative_discarded_weight)
            elif e.method == "exact":
                emit("pe_exact", e.index, participation_entropy_dense(dense, e.index), dw=evo_dw)
            else:
                batch = estimate_pe(meas, e.index, e.n_samples, rng)
                emit("pe_sampled", e.index, batch.estimator_value,
                     stderr=batch.standard_error, dw=meas_dw)

        for e in due_sre:
            if e.method == "replica":
                spec = TruncationSpec(max_rank=e.chi, weight_cutoff=e.weight_cutoff)
                value, diag = stabilizer_renyi_entropy(meas, e.index, spec)
                emit("sre", e.index, value, chi_replica=e.chi,
                     dw=meas_dw + diag.cumulative_discarded_weight)
            elif e.method == "exact":
                emit("sre_exact", e.index, sre_dense(dense, e.index), dw=evo_dw)
            else:
                spec = TruncationSpec(max_rank=e.chi, weight_cutoff=e.weight_cutoff) if e.chi >= 1 else None
                batch = estimate_sre(meas, e.index, e.n_samples, rng, spec=spec)
                emit("sre_sampled", e.index, batch.estimator_value,
                     stderr=batch.standard_error,
                     chi_replica=e.chi if e.chi >= 1 else None, dw=meas_dw)
    return records


# ---------------------------------------------------------------------------
# records serialization


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(int(value)) if value.is_integer() and abs(value) < 2**53 else repr(value)
    return str(value)


def write_records(path: Path, records: Sequence[TimeSeriesRecord], cfg: SimulationConfig) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCHEMA)
        for r in records:
            writer.writerow(
                [
                    repr(float(r.time)),
                    r.observable,
                    _cell(None if r.index is None else float(r.index)),
                    cfg.model.length,
                    _cell(float(cfg.model.anisotropy)),
                    _cell(float(cfg.disorder)),
                    _cell(r.realization),
                    _cell(r.chi),
                    _cell(r.chi_replica),
                    repr(float(r.value)),
                    _cell(r.stderr),
                    repr(float(r.discarded_weight)),
                ]
            )


def read_records(path: Path) -> list[dict]:
    """Typed rows from a records.csv; empty cells come back as None."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {SCHEMA}") from None
        if header != SCHEMA:
            missing = [c for c in SCHEMA if c not in header]
            extra = [c for c in header if c not in SCHEMA]
            raise SchemaError(
                f"{path}: header mismatch (missing: {missing or 'none'}, "
                f"unexpected: {extra or 'none'}, expected order: {list(SCHEMA)})"
            )
        rows = []
        floats = {"time", "index", "Jz", "h", "value", "stderr", "discarded_weight"}
        ints = {"L", "realization", "chi", "chi_replica"}
        for raw in reader:
            row: dict = {}
            for key, cell in zip(SCHEMA, raw):
                if cell == "":
                    row[key] = None
                elif key in floats:
                    row[key] = float(cell)
                elif key in ints:
                    row[key] = int(cell)
                else:
                    row[key] = cell
            rows.append(row)
    return rows


def rows_to_records(rows: Iterable[dict]) -> list[TimeSeriesRecord]:
    return [
        TimeSeriesRecord(
            time=row["time"],
            observable=row["observable"],
            index=row["index"],
            value=row["value"],
            stderr=row["stderr"],
            chi=row["chi"],
            chi_replica=row["chi_replica"],
            discarded_weight=row["discarded_weight"] or 0.0,
            realization=row["realization"],
        )
        for row in rows
    ]


# ---------------------------------------------------------------------------
# fits


def compute_fits(
    records: Sequence[TimeSeriesRecord], window: tuple[float, float] | None
) -> dict:
    """Fit every growth curve present; disorder realizations are averaged first.

    Each curve is fit twice: "loglog" is the straight line in (ln t, ln y)
    and "offset" profiles an additive constant out before reading the
    exponent, which is the estimator to trust for curves that grow out of
    zero through a transient. Both land in the report so the bias is
    visible instead of silently chosen away.
    """
    averaged = average_over_realizations(records)
    series: dict[tuple[str, float | None], list[tuple[float, float]]] = {}
    for r in averaged:
        if r.observable in FITTABLE:
            series.setdefault((r.observable, r.index), []).append((r.time, r.value))
    fits, skipped = [], []
    for (observable, index), points in sorted(
        series.items(), key=lambda kv: (kv[0][0], kv[0][1] or 0.0)
    ):
        for model, fitter in (("loglog", fit_power_law), ("offset", fit_power_law_offset)):
            label = {"observable": observable, "index": index, "model": model}
            try:
                fit = fitter(points, window=window)
            except ShapeError as exc:
                skipped.append({**label, "reason": str(exc)})
                continue
            fits.append(
                {
                    **label,
                    "exponent": fit.exponent,
                    "exponent_error": fit.exponent_error,
                    "window": list(fit.window),
                    "r_squared": fit.r_squared,
                    "n_points": fit.n_points,
                }
            )
    return {
        "format_version": 2,
        "window": list(window) if window else "auto",
        "fits": fits,
        "skipped": skipped,
    }


# ---------------------------------------------------------------------------
# top-level entry points


def _worker_count(cfg: SimulationConfig, workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("REPLICAMPS_WORKERS", "1"))
    return max(1, min(workers, cfg.realizations))


def run(cfg: SimulationConfig, workers: int | None = None) -> int:
    """Execute a validated config; artifacts land in cfg.output.directory.

    Returns a process exit status: 0 on success, 1 when a trajectory died
    (partial records are kept and the manifest carries the failure).
    """
    out = cfg.output.directory
    out.mkdir(parents=True, exist_ok=True)
    started = _time.monotonic()
    n_workers = _worker_count(cfg, workers)
    records: list[TimeSeriesRecord] = []
    failure = None
    try:
        if n_workers > 1:
            with ProcessPoolExecutor(max_workers=n_workers) as pool:
                for chunk in pool.map(run_trajectory, [cfg] * cfg.realizations, range(cfg.realizations)):
                    records.extend(chunk)
        else:
            for r in range(cfg.realizations):
                records.extend(run_trajectory(cfg, r))
    except Exception as exc:  # noqa: BLE001 - the manifest is the error channel
        failure = f"{type(exc).__name__}: {exc}"

    if "csv" in cfg.output.formats:
        write_records(out / "records.csv", records, cfg)
    fits = compute_fits(records, cfg.observables.fit_window)
    if "json" in cfg.output.formats:
        with open(out / "fits.json", "w") as fh:
            json.dump(fits, fh, indent=2)
            fh.write("\n")
    manifest = {
        "format_version": 1,
        "package_version": __version__,
        "status": "failed" if failure else "complete",
        "config": config_to_dict(cfg),
        "seeds": {
            "root": cfg.seed,
            "sampling_streams": [[cfg.seed, 7, r] for r in range(cfg.realizations)],
            "disorder_streams": [[cfg.seed, r] for r in range(cfg.realizations)]
            if cfg.disorder > 0
            else [],
        },
        "artifacts": {
            "records": "records.csv" if "csv" in cfg.output.formats else None,
            "fits": "fits.json" if "json" in cfg.output.formats else None,
        },
        "n_records": len(records),
        "workers": n_workers,
        "elapsed_seconds": round(_time.monotonic() - started, 3),
    }
    if failure:
        manifest["error"] = failure
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return 1 if failure else 0


def _with_exact_twins(plan, length: int, kind: str):
    if length > 14:
        raise ShapeError(f"oracle mode needs L <= 14 for dense {kind} cross-checks, got L = {length}")
    out = list(plan)
    # one twin per Renyi index, or entries sharing an index would write
    # duplicate exact rows into the same curve
    covered = {e.index for e in plan if e.method == "exact"}
    for e in plan:
        if e.method != "exact" and e.index not in covered:
            out.append(dataclasses.replace(e, method="exact"))
            covered.add(e.index)
    return tuple(out)


def oracle_tolerance(r) -> float:
    """How far a row may sit from its dense twin before the oracle objects.

    Sampled rows get 5 standard errors. Replica rows get the larger of
    1e-8 and sqrt of their recorded discarded weight: a dropped 2-norm
    weight w perturbs amplitudes at the sqrt(w) scale, and the replica
    functionals are nonlinear in those amplitudes, so a truncating row
    cannot honestly promise better. Lossless rows keep the strict gate.
    """
    if r.stderr:
        return 5.0 * r.stderr
    return max(ORACLE_TOL, math.sqrt(max(r.discarded_weight, 0.0)))


def oracle_check(cfg: SimulationConfig, workers: int | None = None) -> int:
    """Run with forced dense cross-checks; oracle.json records the deviations.

    Every non-exact plan entry gets an exact twin, and the run passes when
    each (curve, time, realization) pair agrees within ``oracle_tolerance``
    of its twin, so truncating rows are judged on the error scale their own
    discarded weight implies while lossless rows face the strict 1e-8 gate.
    """
    cfg = dataclasses.replace(
        cfg,
        pe_plan=_with_exact_twins(cfg.pe_plan, cfg.model.length, "participation"),
        sre_plan=_with_exact_twins(cfg.sre_plan, cfg.model.length, "stabilizer"),
    )
    status = run(cfg, workers=workers)
    rows = rows_to_records(read_records(cfg.output.directory / "records.csv"))
    exact: dict[tuple, float] = {}
    for r in rows:
        if r.observable in ("pe_exact", "sre_exact"):
            exact[(r.observable.split("_")[0], r.index, r.time, r.realization)] = r.value
    checks = []
    worst: dict[tuple[str, float], dict] = {}
    for r in rows:
        base = r.observable.split("_")[0]
        if r.observable in ("pe", "sre", "pe_sampled", "sre_sampled"):
            ref = exact.get((base, r.index, r.time, r.realization))
            if ref is None:
                continue
            dev = abs(r.value - ref)
            tol = oracle_tolerance(r)
            checks.append(dev <= tol)
            key = (r.observable, r.index)
            cur = worst.setdefault(
                key, {"observable": r.observable, "index": r.index, "max_abs_deviation": 0.0,
                      "tolerance": tol, "n_times": 0}
            )
            cur["max_abs_deviation"] = max(cur["max_abs_deviation"], dev)
            cur["tolerance"] = max(cur["tolerance"], tol)
            cur["n_times"] += 1
    passed = bool(checks) and all(checks) and status == 0
    report = {
        "format_version": 1,
        "pass": passed,
        "n_comparisons": len(checks),
        "curves": sorted(worst.values(), key=lambda c: (c["observable"], c["index"])),
    }
    with open(cfg.output.directory / "oracle.json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return 0 if passed else 1
