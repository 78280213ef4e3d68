"""Discrete noise-level grids and the Euler-step convex weights they induce."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParam

KINDS = ("polynomial", "linear", "quadratic")


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Noise levels ``values[0] = 0 < values[1] = sigma_min < ... < values[N] = sigma_max``."""

    kind: str
    sigma_min: float
    sigma_max: float
    rho: float
    N: int
    values: np.ndarray

    def params(self) -> dict:
        return {
            "kind": self.kind,
            "sigma_min": self.sigma_min,
            "sigma_max": self.sigma_max,
            "rho": self.rho,
            "N": self.N,
        }

    def descending(self) -> np.ndarray:
        """Grid values from ``s_N`` down to ``s_0``."""
        return self.values[::-1]


def build_grid(kind: str = "polynomial", sigma_min: float = 0.002, sigma_max: float = 80.0,
               rho: float = 7.0, N: int = 18) -> TimeGrid:
    if kind not in KINDS:
        raise InvalidParam(f"unknown grid kind {kind!r}; expected one of {KINDS}")
    N = int(N)
    if N < 2:
        raise InvalidParam(f"N must be >= 2, got {N}")
    sigma_min = float(sigma_min)
    sigma_max = float(sigma_max)
    if not (0 < sigma_min < sigma_max and np.isfinite(sigma_max)):
        raise InvalidParam(f"need 0 < sigma_min < sigma_max, got {sigma_min}, {sigma_max}")
    rho = float(rho)
    if kind == "polynomial" and not rho > 0:
        raise InvalidParam(f"rho must be > 0, got {rho}")

    # each entry in closed form from its index
    frac = np.arange(N, dtype=np.float64) / (N - 1)
    if kind == "polynomial":
        lo = sigma_min ** (1.0 / rho)
        hi = sigma_max ** (1.0 / rho)
        s = (lo + frac * (hi - lo)) ** rho
    elif kind == "linear":
        s = sigma_min + frac * (sigma_max - sigma_min)
    else:
        s = sigma_min + frac**2 * (sigma_max - sigma_min)
    # pin the endpoints; the power round-trip can be off by an ulp
    s[0] = sigma_min
    s[-1] = sigma_max
    values = np.concatenate(([0.0], s))
    if not np.all(np.diff(values) > 0):
        raise InvalidParam("grid is not strictly increasing (N too large for the sigma range?)")
    values.setflags(write=False)
    return TimeGrid(kind, sigma_min, sigma_max, rho, N, values)


def weight_sequence(grid: TimeGrid) -> np.ndarray:
    """``w[n-1] = (s_{n+1} - s_n) / s_{n+1}`` for ``n = 1 .. N-1``.

    This is the weight an Euler step from ``s_{n+1}`` to ``s_n`` puts on the
    denoiser output (the annealed mean-shift target) versus the current state.
    """
    s = grid.values
    return (s[2:] - s[1:-1]) / s[2:]


def log_increments(grid: TimeGrid) -> np.ndarray:
    """Backward differences ``log s_{n+1} - log s_n`` for ``n = 1 .. N-1``; ``weight_sequence`` is their first-order approximation."""
    s = grid.values
    return np.log(s[2:]) - np.log(s[1:-1])
