"""Session fixtures: repo paths and produce-or-reuse acceptance artifacts."""

import dataclasses
import json
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent


def _is_complete(out_dir: Path) -> bool:
    manifest = out_dir / "manifest.json"
    if not manifest.exists() or not (out_dir / "records.csv").exists():
        return False
    return json.loads(manifest.read_text()).get("status") == "complete"


@pytest.fixture(scope="session")
def acceptance_run():
    """Path to a named transport run, executing its config on a cache miss.

    Cached artifacts under runs/acceptance/ are reused as-is, so the slow
    tiers only ever pay their cost once per checkout.
    """
    from replicamps.config import load_config
    from replicamps.runner import run

    def produce(name: str) -> Path:
        out = REPO_ROOT / "runs" / "acceptance" / name
        if _is_complete(out):
            return out
        cfg = load_config(REPO_ROOT / "configs" / f"{name}.toml")
        cfg = dataclasses.replace(
            cfg, output=dataclasses.replace(cfg.output, directory=out)
        )
        assert run(cfg) == 0, f"{name} trajectory failed; see {out / 'manifest.json'}"
        return out

    return produce
