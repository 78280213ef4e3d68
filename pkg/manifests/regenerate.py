"""Rebuild the shipped manifests for both kernel backends.

Run from the repository root:  python manifests/regenerate.py
Each manifest is replayed by the acceptance suite, which checks that the
output checksums match byte for byte under the same backend.
"""
import os
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

GMM = "gmm:means=-2,0;2,0 std=0.3 n=100 seed=7"
RUNS = {
    "schedule": ["schedule"],
    "sample": ["sample", "--dataset", GMM, "--n-traj", "8", "--seed", "11", "--steps", "40"],
    "jump": ["jump", "--dataset", GMM, "--n-traj", "16", "--seed", "3", "--jump-index", "6", "--solver", "euler"],
    "stats": ["stats", "manifests/inputs/gmm_traj.jsonl"],
    "meanshift": ["meanshift", "--dataset", "pair:1", "--queries", "manifests/inputs/meanshift_queries.csv",
                  "--queries-header", "--bandwidth", "0.5"],
    "interp": ["interp", "--dims", "2,16,128", "--samples", "500", "--seed", "1"],
    "diagnose": ["diagnose", "--dataset", GMM, "--amplitude", "0.3", "--denoiser-seed", "2", "--n-traj", "16",
                 "--seed", "5"],
    "shell": ["shell", "--dim", "3072", "--sigma", "80", "--samples", "5000", "--seed", "1"],
}


def main():
    root = Path(__file__).resolve().parent
    for backend in ("numba", "numpy"):
        dest = root / backend
        dest.mkdir(exist_ok=True)
        env = dict(os.environ, DIFFGEO_BACKEND=backend)
        for name, argv in RUNS.items():
            with tempfile.TemporaryDirectory() as tmp:
                subprocess.run([sys.executable, "-m", "diffgeo", *argv, "--out", tmp], check=True, env=env,
                               cwd=root.parent)
                shutil.copy(Path(tmp) / "manifest.json", dest / f"{name}.json")
        print(f"{backend}: {len(RUNS)} manifests", file=sys.stderr)


if __name__ == "__main__":
    main()
