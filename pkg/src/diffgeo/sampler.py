"""Euler / Heun solvers for the empirical probability-flow ODE

    dx/dt = -(r(x; t) - x) / t

run backwards over a TimeGrid, plus exact forward perturbation and ODE-Jump.

The last step into ``s_0 = 0`` is always an Euler step, which lands exactly on
the denoiser output at ``s_1``.  Heun therefore spends ``2N - 1`` denoiser
evaluations on an ``N``-step grid.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _rng
from .denoiser import Denoiser
from .errors import InvalidParam, NonFiniteInput
from .schedule import TimeGrid, build_grid

SOLVERS = ("euler", "heun")


def perturb_forward(x, sigma: float, seed: int, offset: int = 0) -> np.ndarray:
    """``x + sigma * z``.  For an ``(m, d)`` batch row ``i`` uses stream ``(seed, offset + i)``."""
    if not sigma >= 0:
        raise InvalidParam(f"sigma must be >= 0, got {sigma}")
    X = np.asarray(x, dtype=np.float64)
    if sigma == 0:
        return X.copy()
    if X.ndim <= 1:
        z = _rng.stream(seed, _rng.TAG_FORWARD, offset).standard_normal(X.size).reshape(X.shape)
    else:
        z = _rng.normal_rows(seed, X.shape[0], X.shape[1], offset=offset, tag=_rng.TAG_FORWARD)
    return X + sigma * z


def forward_marginal(ps, sigma: float, m: int, seed: int) -> np.ndarray:
    """``m`` exact draws of ``x + sigma z`` with ``x`` uniform over the rows of ``ps``.

    Row picks and noise come from seeded per-row streams, so the draws for one
    ``seed`` at different ``sigma`` share ``x`` and ``z``.
    """
    rows = _rng.stream(seed, _rng.TAG_DATA_PICK).integers(0, ps.n, m)
    return perturb_forward(ps.points[rows], sigma, seed)


def initial_samples(grid: TimeGrid, d: int, m: int, seed: int, offset: int = 0) -> np.ndarray:
    """``m`` draws of ``N(0, s_N^2 I)``; trajectory ``i`` uses stream ``(seed, offset + i)``."""
    return perturb_forward(np.zeros((m, d)), grid.sigma_max, seed, offset)


def ode_rhs(den: Denoiser, x, t: float, denoised=None) -> np.ndarray:
    if not t > 0:
        raise InvalidParam(f"ode_rhs needs t > 0, got {t}")
    x = np.asarray(x, dtype=np.float64)
    r = den(x, t) if denoised is None else denoised
    return (x - r) / t


def _combine(x, r, t_from: float, t_to: float):
    # (t_to/t_from) x + ((t_from - t_to)/t_from) r; exactly r when t_to == 0
    return (t_to / t_from) * x + ((t_from - t_to) / t_from) * r


def euler_step(den: Denoiser, x, t_from: float, t_to: float, denoised=None) -> np.ndarray:
    """One Euler step written as a convex combination of ``x`` and ``r(x; t_from)``."""
    if not t_from > 0 or not t_to >= 0:
        raise InvalidParam(f"euler_step needs t_from > 0 and t_to >= 0, got {t_from}, {t_to}")
    x = np.asarray(x, dtype=np.float64)
    r = den(x, t_from) if denoised is None else denoised
    return _combine(x, r, t_from, t_to)


def heun_step(den: Denoiser, x, t_from: float, t_to: float, denoised=None, query_offset: int = 0) -> np.ndarray:
    if not t_from > 0 or not t_to > 0:
        raise InvalidParam(f"heun_step needs t_from > 0 and t_to > 0, got {t_from}, {t_to}")
    x = np.asarray(x, dtype=np.float64)
    if t_to == t_from:
        return x.copy()
    r = den(x, t_from, query_offset) if denoised is None else denoised
    x_pred = _combine(x, r, t_from, t_to)
    r_pred = den(x_pred, t_to, query_offset)
    slope = 0.5 * ((x - r) / t_from + (x_pred - r_pred) / t_to)
    return x + (t_to - t_from) * slope


@dataclass(frozen=True, eq=False)
class TrajectoryBatch:
    """``m`` solves sharing one grid.

    ``states[k]`` is the batch at ``s_{N-k}`` (``k = 0 .. N``) and
    ``denoised[k]`` is ``r(states[k]; s_{N-k})`` for ``k = 0 .. N-1``.
    ``nfe`` counts denoiser evaluations per trajectory.
    """

    grid: TimeGrid
    solver: str
    seed: Optional[int]
    states: np.ndarray
    denoised: np.ndarray
    nfe: int
    denoiser_info: dict
    dataset_hash: str = ""

    @property
    def m(self) -> int:
        return self.states.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.descending()

    def trajectory(self, i: int) -> "Trajectory":
        return Trajectory(self.grid, self.solver, self.seed, self.states[:, i].copy(),
                          self.denoised[:, i].copy(), self.nfe, self.denoiser_info,
                          self.dataset_hash, index=i)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One solve: ``states`` is ``(N+1, d)`` from ``s_N`` to ``s_0``; ``denoised`` is ``(N, d)`` from ``s_N`` to ``s_1``."""

    grid: TimeGrid
    solver: str
    seed: Optional[int]
    states: np.ndarray
    denoised: np.ndarray
    nfe: int
    denoiser_info: dict
    dataset_hash: str = ""
    index: int = 0

    @property
    def times(self) -> np.ndarray:
        return self.grid.descending()

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def header(self) -> dict:
        return {
            "solver": self.solver,
            "seed": self.seed,
            "index": self.index,
            "grid": self.grid.params(),
            "nfe": self.nfe,
            "denoiser": self.denoiser_info,
            "dataset_hash": self.dataset_hash,
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header(), sort_keys=True)]
        N = self.grid.N
        for k, s in enumerate(self.times):
            rec = {
                "n": N - k,
                "s": float(s),
                "x": [float(v) for v in self.states[k]],
                "r": [float(v) for v in self.denoised[k]] if k < N else None,
            }
            lines.append(json.dumps(rec, sort_keys=True))
        return "\n".join(lines) + "\n"

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_jsonl())


def load_trajectory(path: str | os.PathLike) -> Trajectory:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln.strip()]
    if not lines:
        raise InvalidParam(f"{os.fspath(path)}: empty trajectory file")
    head = json.loads(lines[0])
    g = head["grid"]
    grid = build_grid(g["kind"], g["sigma_min"], g["sigma_max"], g["rho"], g["N"])
    recs = [json.loads(ln) for ln in lines[1:]]
    if len(recs) != grid.N + 1:
        raise InvalidParam(f"{os.fspath(path)}: expected {grid.N + 1} step records, found {len(recs)}")
    recs.sort(key=lambda r: -r["n"])
    states = np.array([r["x"] for r in recs], dtype=np.float64)
    denoised = np.array([r["r"] for r in recs[:-1]], dtype=np.float64)
    return Trajectory(grid, head["solver"], head.get("seed"), states, denoised, head["nfe"],
                      head.get("denoiser", {}), head.get("dataset_hash", ""), head.get("index", 0))


def solve_batch(den: Denoiser, grid: TimeGrid, x_T, solver: str = "heun", stop_index: int = 0,
                seed: Optional[int] = None, query_offset: int = 0) -> TrajectoryBatch:
    """Integrate every row of ``x_T`` from ``s_N`` down to ``s_{stop_index}``.

    With ``stop_index > 0`` the arrays are truncated at that grid point and
    ``denoised`` gets one extra entry, ``r(x_{s_stop}; s_stop)``, as used by
    ODE-Jump.
    """
    if solver not in SOLVERS:
        raise InvalidParam(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    N = grid.N
    if not 0 <= stop_index <= N:
        raise InvalidParam(f"stop_index must be in [0, {N}], got {stop_index}")
    X = np.array(x_T, dtype=np.float64, ndmin=2)
    if X.shape[1] != den.d:
        X = X.reshape(-1, den.d)
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("x_T contains NaN or Inf")
    s = grid.values
    m, d = X.shape
    n_states = N - stop_index + 1
    states = np.empty((n_states, m, d))
    denoised = np.empty((n_states if stop_index > 0 else N, m, d))
    states[0] = X
    nfe = 0
    x = X
    for k in range(n_states - 1):
        t_from = s[N - k]
        t_to = s[N - k - 1]
        r = den(x, t_from, query_offset)
        nfe += 1
        denoised[k] = r
        if solver == "heun" and t_to > 0:
            x_pred = _combine(x, r, t_from, t_to)
            r_pred = den(x_pred, t_to, query_offset)
            nfe += 1
            x = x + (t_to - t_from) * (0.5 * ((x - r) / t_from + (x_pred - r_pred) / t_to))
        else:
            x = _combine(x, r, t_from, t_to)
        states[k + 1] = x
    if stop_index > 0:
        denoised[-1] = den(x, s[stop_index], query_offset)
        nfe += 1
    info = den.describe()
    src = den.source if den.source is not None else den.support
    return TrajectoryBatch(grid, solver, seed, states, denoised, nfe, info, src.content_hash())


def solve(den: Denoiser, grid: TimeGrid, x_T, solver: str = "heun", seed: Optional[int] = None) -> Trajectory:
    x_T = np.asarray(x_T, dtype=np.float64).reshape(1, -1)
    return solve_batch(den, grid, x_T, solver, seed=seed).trajectory(0)


def sample_batch(den: Denoiser, grid: TimeGrid, m: int, seed: int, solver: str = "heun") -> TrajectoryBatch:
    """Draw ``m`` initial points from ``N(0, s_N^2 I)`` and solve them all."""
    X = initial_samples(grid, den.d, m, seed)
    return solve_batch(den, grid, X, solver, seed=seed)


def ode_jump(den: Denoiser, grid: TimeGrid, x_T, solver: str = "heun", jump_index: int = 1) -> np.ndarray:
    """Solve down to ``s_jump`` and return the denoiser output there."""
    if not 1 <= jump_index <= grid.N:
        raise InvalidParam(f"jump_index must be in [1, {grid.N}], got {jump_index}")
    X = np.asarray(x_T, dtype=np.float64)
    single = X.ndim <= 1
    batch = solve_batch(den, grid, X.reshape(-1, den.d), solver, stop_index=jump_index)
    out = batch.denoised[-1]
    return out[0] if single else out
