"""Exact optimal denoiser over a point set, its Gaussian-mixture density and
score, and perturbed variants that stand in for a learned model.

For a support ``{x_i}`` and noise level ``sigma`` the optimal denoiser is the
posterior mean

    r(x; sigma) = sum_i u_i x_i,   u = softmax_i(-|x - x_i|^2 / 2 sigma^2),

which is also the Gaussian mean-shift vector with bandwidth ``sigma``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels, _rng
from .dataset import PointSet
from .errors import DimensionMismatch, InvalidParam, NonFiniteInput

VARIANTS = ("optimal", "subsampled", "weight_noised")


def _as_queries(ps: PointSet, x) -> tuple[np.ndarray, bool]:
    """Return ``(X (m, d), was_single)`` after dimension and finiteness checks."""
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim <= 1
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X.reshape(1, -1)
    elif X.ndim != 2:
        raise DimensionMismatch(f"queries must be a vector or an (m, d) matrix, got shape {X.shape}")
    if X.shape[1] != ps.d:
        raise DimensionMismatch(f"query dimension {X.shape[1]} != support dimension {ps.d}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("query contains NaN or Inf")
    return X, single


def _check_sigma(sigma, allow_zero: bool) -> float:
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma < 0 or (sigma == 0 and not allow_zero):
        raise InvalidParam(f"sigma must be {'>= 0' if allow_zero else '> 0'} and finite, got {sigma}")
    return sigma


def _denoise_matrix(ps: PointSet, X: np.ndarray, sigma: float, noise=None) -> np.ndarray:
    if sigma == 0.0:
        return ps.points[_kernels.nearest(X, ps.points)].copy()
    return _kernels.denoise(X, ps.points, sigma, noise)


def denoise_optimal(ps: PointSet, x_hat, sigma) -> np.ndarray:
    """Posterior mean of the data given ``x_hat = x + sigma z``.

    ``x_hat`` may be one vector or an ``(m, d)`` batch.  At ``sigma == 0`` the
    nearest support row is returned (lowest index on ties).
    """
    X, single = _as_queries(ps, x_hat)
    out = _denoise_matrix(ps, X, _check_sigma(sigma, allow_zero=True))
    return out[0] if single else out


def posterior_weights(ps: PointSet, x_hat, sigma) -> np.ndarray:
    """Softmax weights ``u_i`` (rows sum to one) for each query."""
    X, single = _as_queries(ps, x_hat)
    w = _kernels.softmax_weights(X, ps.points, _check_sigma(sigma, allow_zero=False))
    return w[0] if single else w


def mixture_log_density(ps: PointSet, x_hat, sigma) -> np.ndarray | float:
    """``log( (1/n) sum_i N(x_hat; x_i, sigma^2 I) )`` including the Gaussian normaliser."""
    X, single = _as_queries(ps, x_hat)
    sigma = _check_sigma(sigma, allow_zero=False)
    lse = _kernels.logsumexp_kernel(X, ps.points, sigma)
    val = lse - math.log(ps.n) - 0.5 * ps.d * math.log(2.0 * math.pi * sigma * sigma)
    return float(val[0]) if single else val


def mixture_score(ps: PointSet, x_hat, sigma) -> np.ndarray:
    """Gradient of ``mixture_log_density`` in ``x_hat``: ``(r(x_hat) - x_hat) / sigma^2``."""
    X, single = _as_queries(ps, x_hat)
    sigma = _check_sigma(sigma, allow_zero=False)
    out = (_denoise_matrix(ps, X, sigma) - X) / (sigma * sigma)
    return out[0] if single else out


@dataclass(frozen=True, eq=False)
class Denoiser:
    """A callable ``(x, sigma) -> r(x; sigma)`` over a fixed support.

    ``support`` is the set actually averaged over: for ``subsampled`` it is the
    chosen subset of ``source``.  ``weight_noised`` adds
    ``amplitude * N(0, 1)`` to every logit; the noise for query row ``q`` is
    drawn from stream ``(seed, q + query_offset)`` so batch evaluation order
    and chunking do not change results.
    """

    support: PointSet
    variant: str = "optimal"
    fraction: float = 1.0
    amplitude: float = 0.0
    seed: int = 0
    source: Optional[PointSet] = None

    @property
    def d(self) -> int:
        return self.support.d

    def describe(self) -> dict:
        info = {"variant": self.variant, "support_n": self.support.n}
        if self.variant == "subsampled":
            info.update(fraction=self.fraction, seed=self.seed)
        elif self.variant == "weight_noised":
            info.update(amplitude=self.amplitude, seed=self.seed)
        return info

    def logit_noise(self, m: int, query_offset: int = 0) -> np.ndarray:
        n = self.support.n
        out = np.empty((m, n))
        for q in range(m):
            out[q] = _rng.stream(self.seed, _rng.TAG_LOGIT_NOISE, query_offset + q).standard_normal(n)
        return self.amplitude * out

    def _noise_for(self, m: int, query_offset: int):
        if self.variant == "weight_noised" and self.amplitude > 0:
            return self.logit_noise(m, query_offset)
        return None

    def __call__(self, x, sigma, query_offset: int = 0) -> np.ndarray:
        X, single = _as_queries(self.support, x)
        sigma = _check_sigma(sigma, allow_zero=True)
        noise = None if sigma == 0 else self._noise_for(X.shape[0], query_offset)
        out = _denoise_matrix(self.support, X, sigma, noise)
        return out[0] if single else out

    def weights(self, x, sigma, query_offset: int = 0) -> np.ndarray:
        X, single = _as_queries(self.support, x)
        sigma = _check_sigma(sigma, allow_zero=False)
        w = _kernels.softmax_weights(X, self.support.points, sigma, self._noise_for(X.shape[0], query_offset))
        return w[0] if single else w


def optimal(ps: PointSet) -> Denoiser:
    return Denoiser(ps, "optimal", source=ps)


def subsample_rows(n: int, fraction: float, seed: int) -> np.ndarray:
    """Sorted row indices of a seeded subset of size ``max(1, round(fraction * n))``."""
    k = max(1, int(round(fraction * n)))
    rows = _rng.stream(seed, _rng.TAG_SUBSAMPLE).choice(n, size=k, replace=False)
    return np.sort(rows)


def make_perturbed(ps: PointSet, variant: str, seed: int = 0, *, fraction: float = 1.0,
                   amplitude: float = 0.0) -> Denoiser:
    if variant == "optimal":
        return optimal(ps)
    if variant == "subsampled":
        if not 0 < fraction <= 1:
            raise InvalidParam(f"fraction must be in (0, 1], got {fraction}")
        return Denoiser(ps.subset(subsample_rows(ps.n, fraction, seed)), "subsampled",
                        fraction=float(fraction), seed=int(seed), source=ps)
    if variant == "weight_noised":
        if not amplitude >= 0 or not math.isfinite(amplitude):
            raise InvalidParam(f"amplitude must be >= 0, got {amplitude}")
        return Denoiser(ps, "weight_noised", amplitude=float(amplitude), seed=int(seed), source=ps)
    raise InvalidParam(f"unknown denoiser variant {variant!r}; expected one of {VARIANTS}")
