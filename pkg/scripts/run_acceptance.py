"""Produce every cached artifact the acceptance tests read.

Runs the three transport configs and the replica-bond convergence scan,
skipping anything whose output directory already holds a complete manifest.
The diffusive tier is ten disorder realizations and dominates the wall
clock; pass --skip-long to leave it out.
"""

import argparse
import json
import subprocess
import sys
import time
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
TRANSPORT = ("ballistic", "superdiffusive", "diffusive")


def is_complete(out_dir: Path) -> bool:
    manifest = out_dir / "manifest.json"
    if not manifest.exists() or not (out_dir / "records.csv").exists():
        return False
    return json.loads(manifest.read_text()).get("status") == "complete"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--skip-long", action="store_true", help="skip the diffusive tier")
    parser.add_argument("--force", action="store_true", help="rerun even when complete")
    args = parser.parse_args()

    jobs = [name for name in TRANSPORT if not (args.skip_long and name == "diffusive")]
    for name in jobs:
        out = REPO / "runs" / "acceptance" / name
        if not args.force and is_complete(out):
            print(f"{name}: reusing {out}")
            continue
        t0 = time.monotonic()
        print(f"{name}: running...", flush=True)
        status = subprocess.call(
            [sys.executable, "-m", "replicamps.cli", "run",
             str(REPO / "configs" / f"{name}.toml"), "--out", str(out)],
            cwd=REPO,
        )
        print(f"{name}: exit {status} after {time.monotonic() - t0:.0f}s", flush=True)
        if status != 0:
            return status

    scan = REPO / "runs" / "acceptance" / "convergence" / "scan.json"
    if args.force or not scan.exists():
        status = subprocess.call([sys.executable, str(REPO / "scripts" / "convergence_scan.py")], cwd=REPO)
        if status != 0:
            return status
    else:
        print(f"convergence: reusing {scan}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
