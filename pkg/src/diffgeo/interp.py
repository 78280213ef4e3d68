"""Latent interpolation between two Gaussian encodings.

Strategies: ``linear``, ``slerp``, ``nlinear`` (linear weights rescaled to
unit Euclidean norm) and ``indist`` (``sqrt(1 - lam^2) a + lam b``).  For
independent ``N(0, T^2 I)`` inputs each output is ``N(0, f T^2 I)``;
``variance_factor`` gives ``f``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .errors import InvalidParam

STRATEGIES = ("linear", "slerp", "nlinear", "indist")
SLERP_EPS = 1e-8


@dataclass(frozen=True)
class InterpSpec:
    strategy: str
    alpha: float

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidParam(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidParam(f"alpha must be in [0, 1], got {self.alpha}")


def nlinear_weights(alpha: float) -> tuple[float, float]:
    norm = math.hypot(1.0 - alpha, alpha)
    return (1.0 - alpha) / norm, alpha / norm


def indist_weights(lam: float) -> tuple[float, float]:
    return math.sqrt(1.0 - lam * lam), lam


def slerp_angle(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise InvalidParam("slerp needs non-zero inputs")
    # half-angle form; acos loses about half the digits near 0 and pi
    ua, ub = a / na, b / nb
    return 2.0 * math.atan2(float(np.linalg.norm(ua - ub)), float(np.linalg.norm(ua + ub)))


def slerp_weights(alpha: float, psi: float) -> tuple[float, float]:
    sp = math.sin(psi)
    return math.sin((1.0 - alpha) * psi) / sp, math.sin(alpha * psi) / sp


def coefficients(a, b, spec: InterpSpec) -> tuple[float, float, bool]:
    """``(c_a, c_b, fell_back)`` with output ``c_a a + c_b b``.  ``fell_back`` marks a
    slerp that degraded to nlinear because the inputs were (anti)parallel."""
    alpha = spec.alpha
    if spec.strategy == "linear":
        return 1.0 - alpha, alpha, False
    if spec.strategy == "nlinear":
        return (*nlinear_weights(alpha), False)
    if spec.strategy == "indist":
        return (*indist_weights(alpha), False)
    psi = slerp_angle(a, b)
    if math.sin(psi) < SLERP_EPS:
        return (*nlinear_weights(alpha), True)
    return (*slerp_weights(alpha, psi), False)


def interpolate(a, b, spec: InterpSpec) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidParam(f"shape mismatch {a.shape} vs {b.shape}")
    # endpoints are returned as copies so they match bit for bit
    if spec.alpha == 0.0:
        return a.copy()
    if spec.alpha == 1.0:
        return b.copy()
    ca, cb, _ = coefficients(a, b, spec)
    return ca * a + cb * b


def variance_factor(strategy: str, alpha: float, psi: float = math.pi / 2) -> float:
    if strategy not in STRATEGIES:
        raise InvalidParam(f"unknown strategy {strategy!r}")
    if not 0.0 <= alpha <= 1.0:
        raise InvalidParam(f"alpha must be in [0, 1], got {alpha}")
    if strategy == "linear":
        return (1.0 - alpha) ** 2 + alpha**2
    if strategy in ("nlinear", "indist"):
        return 1.0
    if not 0.0 < psi < math.pi:
        raise InvalidParam(f"psi must be in (0, pi), got {psi}")
    return (math.sin((1.0 - alpha) * psi) ** 2 + math.sin(alpha * psi) ** 2) / math.sin(psi) ** 2


@dataclass(frozen=True)
class SweepPoint:
    d: int
    empirical_f: float
    stderr: float


def _pairs(d: int, n: int, T: float, seed: int):
    g = _rng.stream(seed, _rng.TAG_INTERP, d)
    return T * g.standard_normal((n, d)), T * g.standard_normal((n, d))


def interpolate_rows(A: np.ndarray, B: np.ndarray, spec: InterpSpec) -> np.ndarray:
    return np.stack([interpolate(a, b, spec) for a, b in zip(A, B)])


def variance_sweep(strategy: str, alpha: float, dims, n_samples: int, T: float = 80.0, seed: int = 0) -> list[SweepPoint]:
    """Empirical variance factor per dimension.

    For each ``d``, ``n_samples`` independent pairs from ``N(0, T^2 I_d)`` are
    interpolated; the per-coordinate sample variance (zero known mean) is
    averaged over coordinates and divided by ``T^2``.  ``stderr`` is the
    spread of the per-coordinate estimates over ``sqrt(d)``.
    """
    if n_samples < 100:
        raise InvalidParam("n_samples must be >= 100")
    spec = InterpSpec(strategy, alpha)
    out = []
    for d in dims:
        d = int(d)
        A, B = _pairs(d, n_samples, T, seed)
        Y = interpolate_rows(A, B, spec)
        per_coord = np.mean(Y * Y, axis=0) / (T * T)
        se = float(per_coord.std(ddof=1) / math.sqrt(d)) if d > 1 else float(per_coord[0] * math.sqrt(2.0 / n_samples))
        out.append(SweepPoint(d, float(per_coord.mean()), se))
    return out
