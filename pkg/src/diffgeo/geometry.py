"""Trajectory geometry (chord deviation, angle deviation, magnitudes,
monotonicity) and Monte-Carlo concentration experiments for isotropic
Gaussian noise."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _rng
from .errors import DegenerateChord, DegenerateDirection, InvalidParam
from .sampler import Trajectory, TrajectoryBatch

CHORD_EPS = 1e-30
DEGENERATE_ENDPOINT = 1e-9
DEFAULT_SLACK = 1e-3
_MC_CHUNK = 1024


def chord_deviation(p, a, b) -> np.ndarray | float:
    """Distance from ``p`` (a vector or ``(k, d)`` rows) to the infinite line through ``a`` and ``b``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    chord = b - a
    length = float(np.linalg.norm(chord))
    if length <= CHORD_EPS:
        raise DegenerateChord(f"chord endpoints coincide (|b - a| = {length:g})")
    u = chord / length
    v = np.asarray(p, dtype=np.float64) - a
    resid = v - np.multiply.outer(v @ u, u)
    dist = np.linalg.norm(resid, axis=-1)
    return float(dist) if np.ndim(dist) == 0 else dist


def _cosine(u, v) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateDirection("zero-length direction")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def angle_cosine(den, x, s: float, x_final, denoised=None) -> float:
    """Cosine between the backward ODE direction at ``(x, s)`` and ``x_final - x``."""
    if not s > 0:
        raise InvalidParam(f"s must be > 0, got {s}")
    x = np.asarray(x, dtype=np.float64)
    r = den(x, s) if denoised is None else np.asarray(denoised)
    return _cosine((r - x) / s, np.asarray(x_final, dtype=np.float64) - x)


def _violations(seq: np.ndarray, direction: str, slack: float) -> int:
    """Consecutive pairs that move against ``direction`` by more than ``slack`` relative to the larger of the two."""
    seq = np.asarray(seq, dtype=np.float64)
    prev, nxt = seq[:-1], seq[1:]
    tol = slack * np.maximum(np.abs(prev), np.abs(nxt))
    if direction == "down":
        return int(np.sum(nxt - prev > tol))
    return int(np.sum(prev - nxt > tol))


@dataclass
class GeometryReport:
    which: str
    s: np.ndarray
    chord_dev: np.ndarray
    angle_cos: np.ndarray  # NaN where undefined (s_0, degenerate directions)
    magnitude: np.ndarray
    dist_to_final: np.ndarray
    summary: dict = field(default_factory=dict)

    def rows(self):
        for k in range(len(self.s)):
            yield {
                "s": float(self.s[k]),
                "chord_dev": float(self.chord_dev[k]),
                "angle_cos": None if math.isnan(self.angle_cos[k]) else float(self.angle_cos[k]),
                "magnitude": float(self.magnitude[k]),
                "dist_to_final": float(self.dist_to_final[k]),
            }


def _sequence(traj: Trajectory, which: str):
    if which == "sampling":
        return traj.states, traj.times
    if which == "denoising":
        return traj.denoised, traj.times[:-1]
    raise InvalidParam(f"which must be 'sampling' or 'denoising', got {which!r}")


def trajectory_report(traj: Trajectory, which: str = "sampling", slack: float = DEFAULT_SLACK) -> GeometryReport:
    """Per-step geometry of one trajectory against the chord joining its first and last point.

    A (near-)constant sequence has no chord; its deviations are reported as 0
    and the curvature ratio as 0.
    """
    pts, times = _sequence(traj, which)
    if len(pts) < 3:
        raise InvalidParam("trajectory needs at least 3 points")
    first, last = pts[0], pts[-1]
    dist_to_final = np.linalg.norm(pts - last, axis=1)
    endpoint = float(dist_to_final[0])
    if endpoint <= DEGENERATE_ENDPOINT:
        chord = np.zeros(len(pts))
        ratio = 0.0
    else:
        chord = chord_deviation(pts, first, last)
        ratio = float(chord.max() / endpoint)
    magnitude = np.linalg.norm(pts, axis=1)
    angle = np.full(len(pts), np.nan)
    if which == "sampling":
        for k in range(len(pts) - 1):
            try:
                angle[k] = _cosine((traj.denoised[k] - pts[k]) / times[k], last - pts[k])
            except DegenerateDirection:
                pass
    mag_dir = "down" if which == "sampling" else "up"
    summary = {
        "curvature_ratio": ratio,
        "endpoint_distance": endpoint,
        "max_chord_dev": float(chord.max()),
        "monotone_violations": {
            "dist_to_final": _violations(dist_to_final, "down", slack),
            "magnitude": _violations(magnitude, mag_dir, slack),
        },
    }
    if which == "sampling":
        finite = angle[~np.isnan(angle)]
        summary["mean_angle_cos"] = float(finite.mean()) if finite.size else None
        summary["min_angle_cos"] = float(finite.min()) if finite.size else None
    return GeometryReport(which, np.asarray(times, dtype=np.float64), chord, angle, magnitude, dist_to_final, summary)


@dataclass
class BatchProfile:
    """Batch means (and standard errors) of per-step quantities over many trajectories."""

    which: str
    s: np.ndarray
    mean_dist_to_final: np.ndarray
    mean_magnitude: np.ndarray
    se_magnitude: np.ndarray
    mean_curvature_ratio: float
    violations: dict


def batch_profile(batch: TrajectoryBatch, which: str = "sampling", slack: float = DEFAULT_SLACK) -> BatchProfile:
    times = batch.times
    if which == "sampling":
        pts = batch.states
    elif which == "denoising":
        pts, times = batch.denoised, times[:-1]
    else:
        raise InvalidParam(f"which must be 'sampling' or 'denoising', got {which!r}")
    last = pts[-1]
    dist = np.linalg.norm(pts - last[None], axis=2)
    mag = np.linalg.norm(pts, axis=2)
    m = pts.shape[1]
    ratios = []
    for i in range(m):
        endpoint = dist[0, i]
        if endpoint <= DEGENERATE_ENDPOINT:
            ratios.append(0.0)
        else:
            ratios.append(float(chord_deviation(pts[:, i], pts[0, i], last[i]).max() / endpoint))
    mean_dist = dist.mean(axis=1)
    mean_mag = mag.mean(axis=1)
    se_mag = mag.std(axis=1, ddof=1) / math.sqrt(m) if m > 1 else np.zeros(len(times))
    mag_dir = "down" if which == "sampling" else "up"
    violations = {
        "dist_to_final": _violations(mean_dist, "down", slack),
        "magnitude": _violations(mean_mag, mag_dir, slack),
    }
    return BatchProfile(which, np.asarray(times), mean_dist, mean_mag, se_mag, float(np.mean(ratios)), violations)


# --------------------------------------------------------------------------- Monte Carlo


def _gaussian_chunks(d: int, sigma: float, n_samples: int, seed: int, tag: int):
    """Yield ``sigma * N(0, I_d)`` blocks; block ``k`` comes from stream ``(seed, tag, k)``."""
    for k, start in enumerate(range(0, n_samples, _MC_CHUNK)):
        rows = min(_MC_CHUNK, n_samples - start)
        yield sigma * _rng.stream(seed, tag, k).standard_normal((rows, d))


@dataclass(frozen=True)
class ShellStats:
    mean_norm: float
    std_norm: float
    mean_sq_norm: float
    var_sq_norm: float
    se_mean_norm: float
    se_mean_sq_norm: float
    n_samples: int


def thin_shell_experiment(d: int, sigma: float, n_samples: int, seed: int = 0) -> ShellStats:
    """Norm statistics of ``z ~ N(0, sigma^2 I_d)``; analytically ``E|z|^2 = sigma^2 d`` and ``Var|z|^2 = 2 d sigma^4``."""
    if n_samples < 2:
        raise InvalidParam("n_samples must be >= 2")
    if d < 1 or not sigma > 0:
        raise InvalidParam("need d >= 1 and sigma > 0")
    sq = np.concatenate([np.einsum("ij,ij->i", z, z) for z in _gaussian_chunks(d, sigma, n_samples, seed, _rng.TAG_SHELL)])
    norms = np.sqrt(sq)
    root_n = math.sqrt(n_samples)
    return ShellStats(
        mean_norm=float(norms.mean()),
        std_norm=float(norms.std(ddof=1)),
        mean_sq_norm=float(sq.mean()),
        var_sq_norm=float(sq.var(ddof=1)),
        se_mean_norm=float(norms.std(ddof=1) / root_n),
        se_mean_sq_norm=float(sq.std(ddof=1) / root_n),
        n_samples=n_samples,
    )


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    n_samples: int


def expansion_probability(x, sigma: float, n_samples: int, seed: int = 0) -> Estimate:
    """Monte-Carlo estimate of ``P(|x + z| > |x|)`` for ``z ~ N(0, sigma^2 I)``."""
    if n_samples < 1:
        raise InvalidParam("n_samples must be >= 1")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    base = float(x @ x)
    hits = 0
    for z in _gaussian_chunks(x.size, sigma, n_samples, seed, _rng.TAG_SHELL):
        y = x + z
        hits += int(np.sum(np.einsum("ij,ij->i", y, y) > base))
    p = hits / n_samples
    return Estimate(p, math.sqrt(p * (1 - p) / n_samples), n_samples)


def squared_norm_gap(x, sigma: float, n_samples: int, seed: int = 0) -> Estimate:
    """Monte-Carlo estimate of ``E[|x + z|^2 - |x|^2]`` (analytically ``sigma^2 d``)."""
    if n_samples < 2:
        raise InvalidParam("n_samples must be >= 2")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    base = float(x @ x)
    gaps = []
    for z in _gaussian_chunks(x.size, sigma, n_samples, seed, _rng.TAG_SHELL):
        y = x + z
        gaps.append(np.einsum("ij,ij->i", y, y) - base)
    g = np.concatenate(gaps)
    return Estimate(float(g.mean()), float(g.std(ddof=1) / math.sqrt(n_samples)), n_samples)
