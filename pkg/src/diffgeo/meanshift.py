"""Gaussian mean shift and its annealed (shrinking-bandwidth) variant."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .dataset import PointSet
from .denoiser import denoise_optimal, mixture_log_density
from .errors import InvalidParam


def mean_vector(ps: PointSet, x, h: float) -> np.ndarray:
    """Gaussian-kernel mean ``m(x, h)``; the optimal denoiser at noise level ``h``."""
    if not h > 0:
        raise InvalidParam(f"bandwidth must be > 0, got {h}")
    return denoise_optimal(ps, x, h)


class MeanShiftResult(NamedTuple):
    point: np.ndarray
    iterations: int
    converged: bool
    path: list


def mean_shift_converge(ps: PointSet, x0, h: float, tol: float = 1e-10, max_iter: int = 500,
                        keep_path: bool = False) -> MeanShiftResult:
    """Iterate ``x <- m(x, h)`` until the step length is at most ``tol``.

    Hitting ``max_iter`` is reported through ``converged=False``.  Exactly
    symmetric starts (a saddle of the density) stay put.
    """
    if not tol > 0:
        raise InvalidParam(f"tol must be > 0, got {tol}")
    if max_iter < 1:
        raise InvalidParam(f"max_iter must be >= 1, got {max_iter}")
    x = np.array(x0, dtype=np.float64).reshape(ps.d)
    path = [x.copy()] if keep_path else []
    for it in range(1, max_iter + 1):
        nxt = mean_vector(ps, x, h)
        step = float(np.linalg.norm(nxt - x))
        x = nxt
        if keep_path:
            path.append(x.copy())
        if step <= tol:
            return MeanShiftResult(x, it, True, path)
    return MeanShiftResult(x, max_iter, False, path)


def ascent_profile(ps: PointSet, path, h: float) -> np.ndarray:
    """Kernel log-density at each iterate of a mean-shift path."""
    return mixture_log_density(ps, np.asarray(path), h)


def annealed_step(ps: PointSet, x, s_hi: float, s_lo: float) -> np.ndarray:
    """``(s_lo/s_hi) x + ((s_hi - s_lo)/s_hi) m(x, s_hi)``: one Euler step of the
    empirical flow seen as a convex blend of the current point and one
    mean-shift iteration at bandwidth ``s_hi``."""
    if not 0 <= s_lo < s_hi:
        raise InvalidParam(f"need 0 <= s_lo < s_hi, got {s_lo}, {s_hi}")
    x = np.asarray(x, dtype=np.float64)
    return (s_lo / s_hi) * x + ((s_hi - s_lo) / s_hi) * mean_vector(ps, x, s_hi)
