"""Declarative run descriptions: TOML in, validated dataclass tree out.

The config file is the operational surface of the whole package, so parsing
is strict: unknown keys are rejected (with the line they appear on where the
raw text allows it), plan methods are checked against what the chain length
can support, and every numeric constraint is enforced before any work
starts. A validated ``SimulationConfig`` is immutable and picklable, which
is what lets trajectories ship to worker processes untouched.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .evolution import DisorderSpec, TrotterSchedule, XXZModel
from .tensors import TruncationSpec

__all__ = [
    "ConfigError",
    "ObservablesConfig",
    "OutputConfig",
    "PlanEntry",
    "SimulationConfig",
    "config_to_dict",
    "load_config",
    "parse_config",
]

DENSE_LIMIT = 14
METHODS = ("replica", "sampling", "exact")
OUTPUT_FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Invalid run description; message carries a line number when known."""


@dataclass(frozen=True)
class PlanEntry:
    """One entropy measurement: Renyi index, bond budget, and algorithm.

    ``every`` thins the measurement to every j-th snapshot, which is how the
    expensive Pauli constructions stay affordable on long schedules without
    coarsening the cheap observables.
    """

    index: int
    chi: int
    method: str = "replica"
    n_samples: int = 0
    every: int = 1
    weight_cutoff: float = 1e-12


@dataclass(frozen=True)
class ObservablesConfig:
    profile: bool = True
    transfer: bool = True
    entanglement: bool = False
    # compress a copy of each snapshot to this bond before entropy
    # measurements (0 = measure the snapshot as-is)
    measure_chi: int = 0
    fit_window: tuple[float, float] | None = None


@dataclass(frozen=True)
class OutputConfig:
    directory: Path
    formats: tuple[str, ...] = ("csv", "json")


@dataclass(frozen=True)
class SimulationConfig:
    model: XXZModel
    schedule: TrotterSchedule
    truncation: TruncationSpec
    pe_plan: tuple[PlanEntry, ...] = ()
    sre_plan: tuple[PlanEntry, ...] = ()
    observables: ObservablesConfig = field(default_factory=ObservablesConfig)
    output: OutputConfig = field(default_factory=lambda: OutputConfig(Path("runs/out")))
    seed: int = 0
    realizations: int = 1
    disorder: float = 0.0

    @property
    def disorder_spec(self) -> DisorderSpec:
        return DisorderSpec(self.disorder, self.realizations, self.seed)


def load_config(path: str | Path) -> SimulationConfig:
    text = Path(path).read_text()
    return parse_config(text, source=str(path))


def parse_config(text: str, source: str = "<config>") -> SimulationConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    ctx = _Context(text, source)
    return _build(raw, ctx)


@dataclass
class _Context:
    text: str
    source: str

    def fail(self, key: str, message: str):
        line = _line_of(self.text, key)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: {message}")


def _line_of(text: str, key: str) -> int | None:
    """Best-effort line lookup: first line that introduces ``key``."""
    leaf = key.rsplit(".", 1)[-1]
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith(f"{leaf} ") or stripped.startswith(f"{leaf}="):
            return i
        if stripped.startswith("[") and leaf in stripped:
            return i
    return None


def _take(table: Mapping[str, Any], allowed: dict[str, type | tuple], where: str, ctx: _Context) -> dict:
    out = {}
    for key, value in table.items():
        if key not in allowed:
            ctx.fail(key, f"unknown key '{key}' in {where} (allowed: {', '.join(sorted(allowed))})")
        want = allowed[key]
        if want is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if want is int and isinstance(value, bool):
            ctx.fail(key, f"'{key}' in {where} must be an integer, got a boolean")
        if not isinstance(value, want):
            label = want.__name__ if isinstance(want, type) else "value"
            ctx.fail(key, f"'{key}' in {where} must be {label}, got {type(value).__name__}")
        out[key] = value
    return out


def _plan(tables: Any, index_key: str, where: str, length: int, ctx: _Context) -> tuple[PlanEntry, ...]:
    if not isinstance(tables, list):
        ctx.fail(where, f"{where} must be an array of tables ([[{where}]])")
    entries = []
    allowed = {
        index_key: int,
        "chi": int,
        "method": str,
        "n_samples": int,
        "every": int,
        "weight_cutoff": float,
    }
    for table in tables:
        got = _take(table, allowed, where, ctx)
        if index_key not in got:
            ctx.fail(where, f"every {where} entry needs '{index_key}'")
        method = got.get("method", "replica")
        if method not in METHODS:
            ctx.fail("method", f"{where} method must be one of {METHODS}, got '{method}'")
        index = got[index_key]
        chi = got.get("chi", 0)
        n_samples = got.get("n_samples", 0)
        if method == "exact" and length > DENSE_LIMIT:
            ctx.fail("method", f"{where} exact method needs L <= {DENSE_LIMIT}, chain has L = {length}")
        if method == "replica" and index < 2:
            ctx.fail(index_key, f"{where} replica method needs {index_key} >= 2 (use sampling or exact below that)")
        if method == "sampling" and n_samples < 2:
            ctx.fail("n_samples", f"{where} sampling method needs n_samples >= 2")
        if index < 1:
            ctx.fail(index_key, f"{where} needs {index_key} >= 1")
        if method == "replica" and chi < 1:
            ctx.fail("chi", f"{where} replica method needs chi >= 1")
        if got.get("every", 1) < 1:
            ctx.fail("every", f"{where} 'every' must be >= 1")
        if got.get("weight_cutoff", 0.0) < 0.0:
            ctx.fail("weight_cutoff", f"{where} weight_cutoff must be >= 0")
        entries.append(
            PlanEntry(
                index=index,
                chi=chi,
                method=method,
                n_samples=n_samples,
                every=got.get("every", 1),
                weight_cutoff=got.get("weight_cutoff", 1e-12),
            )
        )
    return tuple(entries)


def _build(raw: Mapping[str, Any], ctx: _Context) -> SimulationConfig:
    root_allowed = {
        "seed": int,
        "realizations": int,
        "model": dict,
        "schedule": dict,
        "truncation": dict,
        "pe_plan": list,
        "sre_plan": list,
        "observables": dict,
        "output": dict,
    }
    root = _take(raw, root_allowed, "the top level", ctx)
    if "model" not in root:
        ctx.fail("model", "a [model] section is required")

    model_raw = _take(
        root["model"],
        {"length": int, "coupling": float, "anisotropy": float, "disorder": float},
        "[model]",
        ctx,
    )
    if "length" not in model_raw:
        ctx.fail("length", "[model] needs 'length'")
    disorder = model_raw.pop("disorder", 0.0)
    if disorder < 0.0:
        ctx.fail("disorder", "[model] disorder strength must be >= 0")
    try:
        model = XXZModel(**model_raw)
    except Exception as exc:
        ctx.fail("model", f"[model] rejected: {exc}")

    schedule_raw = _take(
        root.get("schedule", {}),
        {"dt": float, "t_max": float, "order": int, "measure_every": int},
        "[schedule]",
        ctx,
    )
    try:
        schedule = TrotterSchedule(**schedule_raw)
    except Exception as exc:
        ctx.fail("schedule", f"[schedule] rejected: {exc}")

    truncation_raw = _take(
        root.get("truncation", {}),
        {"max_rank": int, "weight_cutoff": float},
        "[truncation]",
        ctx,
    )
    try:
        truncation = TruncationSpec(
            max_rank=truncation_raw.get("max_rank", 128),
            weight_cutoff=truncation_raw.get("weight_cutoff", 1e-12),
        )
    except Exception as exc:
        ctx.fail("truncation", f"[truncation] rejected: {exc}")

    pe_plan = _plan(root.get("pe_plan", []), "k", "pe_plan", model.length, ctx)
    sre_plan = _plan(root.get("sre_plan", []), "n", "sre_plan", model.length, ctx)

    obs_raw = _take(
        root.get("observables", {}),
        {
            "profile": bool,
            "transfer": bool,
            "entanglement": bool,
            "measure_chi": int,
            "fit_window": list,
        },
        "[observables]",
        ctx,
    )
    window = obs_raw.pop("fit_window", None)
    if window is not None:
        if len(window) != 2 or not all(isinstance(x, (int, float)) for x in window):
            ctx.fail("fit_window", "[observables] fit_window must be [t_min, t_max]")
        window = (float(window[0]), float(window[1]))
        if not window[0] < window[1]:
            ctx.fail("fit_window", "[observables] fit_window needs t_min < t_max")
    if obs_raw.get("measure_chi", 0) < 0:
        ctx.fail("measure_chi", "[observables] measure_chi must be >= 0")
    observables = ObservablesConfig(fit_window=window, **obs_raw)

    out_raw = _take(
        root.get("output", {}),
        {"directory": str, "formats": list},
        "[output]",
        ctx,
    )
    formats = tuple(out_raw.get("formats", list(OUTPUT_FORMATS)))
    for fmt in formats:
        if fmt not in OUTPUT_FORMATS:
            ctx.fail("formats", f"[output] formats entries must be among {OUTPUT_FORMATS}, got '{fmt}'")
    output = OutputConfig(directory=Path(out_raw.get("directory", "runs/out")), formats=formats)

    realizations = root.get("realizations", 1)
    if realizations < 1:
        ctx.fail("realizations", "realizations must be >= 1")
    if realizations > 1 and disorder == 0.0:
        ctx.fail("realizations", "realizations > 1 is meaningless without [model] disorder > 0")
    if observables.transfer and model.length % 2:
        ctx.fail("length", "polarization transfer needs an even chain (disable it or adjust length)")

    return SimulationConfig(
        model=model,
        schedule=schedule,
        truncation=truncation,
        pe_plan=pe_plan,
        sre_plan=sre_plan,
        observables=observables,
        output=output,
        seed=root.get("seed", 0),
        realizations=realizations,
        disorder=disorder,
    )


def config_to_dict(cfg: SimulationConfig) -> dict:
    """JSON-ready echo of the full configuration (manifest payload)."""
    out = dataclasses.asdict(cfg)
    out["output"]["directory"] = str(cfg.output.directory)
    out["output"]["formats"] = list(cfg.output.formats)
    for plan in ("pe_plan", "sre_plan"):
        out[plan] = [dataclasses.asdict(e) for e in getattr(cfg, plan)]
    obs = out["observables"]
    if obs["fit_window"] is not None:
        obs["fit_window"] = list(obs["fit_window"])
    out["model"]["fields"] = list(cfg.model.fields)
    return out
