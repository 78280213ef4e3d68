"""Score-deviation curves between two denoisers and nearest-neighbour lookup."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dataset import PointSet
from .denoiser import Denoiser
from .errors import DimensionMismatch, InvalidParam
from .sampler import initial_samples, solve_batch
from .schedule import TimeGrid

# family name -> which trajectory supplies the states
#   "*_on_opt_traj": states from solving with den_b (the reference / optimal)
#   "*_on_traj":     states from solving with den_a (the "learned" one)
FAMILIES = {
    "r_on_opt_traj": "b",
    "ropt_on_opt_traj": "b",
    "r_on_traj": "a",
    "ropt_on_traj": "a",
}
SWAP = {
    "r_on_opt_traj": "r_on_traj",
    "ropt_on_opt_traj": "ropt_on_traj",
    "r_on_traj": "r_on_opt_traj",
    "ropt_on_traj": "ropt_on_opt_traj",
}


@dataclass
class DeviationCurve:
    family: str
    s: np.ndarray
    deviation: np.ndarray
    stderr: np.ndarray


@dataclass
class DeviationResult:
    curves: dict
    final_a: np.ndarray
    final_b: np.ndarray


def deviation_curves(den_a: Denoiser, den_b: Denoiser, grid: TimeGrid, n_traj: int, solver: str = "heun",
                     seed: int = 0) -> DeviationResult:
    """Mean ``|den_a(x) - den_b(x)|`` at every ``s_N .. s_1`` along both trajectory families.

    Both solves start from the same seeded ``N(0, s_N^2 I)`` draws.  The
    ``r_*`` and ``ropt_*`` families on one state sequence share their values:
    each is the deviation of its denoising sequence from the other denoiser's
    output at the same states.
    """
    if den_a.d != den_b.d:
        raise DimensionMismatch(f"denoiser dimensions differ: {den_a.d} vs {den_b.d}")
    if n_traj < 1:
        raise InvalidParam("n_traj must be >= 1")
    X = initial_samples(grid, den_a.d, n_traj, seed)
    runs = {"a": solve_batch(den_a, grid, X, solver, seed=seed), "b": solve_batch(den_b, grid, X, solver, seed=seed)}
    times = grid.descending()[:-1]
    dev = {}
    for key, run in runs.items():
        states = run.states[:-1]
        other = den_b if key == "a" else den_a
        own = run.denoised
        gap = np.empty((len(times), n_traj))
        for k, s in enumerate(times):
            gap[k] = np.linalg.norm(own[k] - other(states[k], s), axis=1)
        se = gap.std(axis=1, ddof=1) / np.sqrt(n_traj) if n_traj > 1 else np.zeros(len(times))
        dev[key] = (gap.mean(axis=1), se)
    curves = {
        fam: DeviationCurve(fam, times.copy(), dev[src][0].copy(), dev[src][1].copy())
        for fam, src in FAMILIES.items()
    }
    return DeviationResult(curves, runs["a"].states[-1], runs["b"].states[-1])


def knn(ps: PointSet, query, k: int) -> list[tuple[int, float]]:
    """The ``k`` nearest rows of ``ps`` to ``query`` as ``(row, distance)``, ascending; ties go to the lower row."""
    if not 1 <= k <= ps.n:
        raise InvalidParam(f"k must be in [1, {ps.n}], got {k}")
    q = np.asarray(query, dtype=np.float64).reshape(1, -1)
    if q.shape[1] != ps.d:
        raise DimensionMismatch(f"query dimension {q.shape[1]} != {ps.d}")
    sq = _kernels.sqdist(q, ps.points)[0]
    order = np.argsort(sq, kind="stable")[:k]
    return [(int(i), float(np.sqrt(sq[i]))) for i in order]


def nearest_distance(ps: PointSet, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    idx = _kernels.nearest(X, ps.points)
    return np.linalg.norm(X - ps.points[idx], axis=1)
