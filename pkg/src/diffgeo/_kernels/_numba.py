"""numba kernels mirroring ``_numpy``. Each query row is independent, so the
``prange`` result does not depend on the thread count."""
import numpy as np
from numba import njit, prange

_EMPTY = np.empty((0, 0))


@njit(parallel=True, cache=True)
def _sqdist(X, P, out):
    m, d = X.shape
    n = P.shape[0]
    for q in prange(m):
        for i in range(n):
            acc = 0.0
            for c in range(d):
                t = X[q, c] - P[i, c]
                acc += t * t
            out[q, i] = acc


@njit(parallel=True, cache=True)
def _denoise(X, P, scale, noise, use_noise, out, wout, keep_weights):
    m, d = X.shape
    n = P.shape[0]
    for q in prange(m):
        logits = np.empty(n)
        top = -np.inf
        for i in range(n):
            acc = 0.0
            for c in range(d):
                t = X[q, c] - P[i, c]
                acc += t * t
            v = acc * scale
            if use_noise:
                v += noise[q, i]
            logits[i] = v
            if v > top:
                top = v
        total = 0.0
        for i in range(n):
            e = np.exp(logits[i] - top)
            logits[i] = e
            total += e
        for c in range(d):
            out[q, c] = 0.0
        for i in range(n):
            wi = logits[i] / total
            if keep_weights:
                wout[q, i] = wi
            for c in range(d):
                out[q, c] += wi * P[i, c]


@njit(parallel=True, cache=True)
def _logsumexp(X, P, scale, out):
    m, d = X.shape
    n = P.shape[0]
    for q in prange(m):
        logits = np.empty(n)
        top = -np.inf
        for i in range(n):
            acc = 0.0
            for c in range(d):
                t = X[q, c] - P[i, c]
                acc += t * t
            logits[i] = acc * scale
            if logits[i] > top:
                top = logits[i]
        total = 0.0
        for i in range(n):
            total += np.exp(logits[i] - top)
        out[q] = top + np.log(total)


@njit(parallel=True, cache=True)
def _nearest(X, P, out):
    m, d = X.shape
    n = P.shape[0]
    for q in prange(m):
        best = np.inf
        arg = 0
        for i in range(n):
            acc = 0.0
            for c in range(d):
                t = X[q, c] - P[i, c]
                acc += t * t
            if acc < best:
                best = acc
                arg = i
        out[q] = arg


def sqdist(X, P):
    out = np.empty((X.shape[0], P.shape[0]))
    _sqdist(X, P, out)
    return out


def _run_denoise(X, P, sigma, noise, keep_weights):
    m, d = X.shape
    out = np.empty((m, d))
    wout = np.empty((m, P.shape[0])) if keep_weights else _EMPTY
    use_noise = noise is not None
    _denoise(X, P, -0.5 / (sigma * sigma), noise if use_noise else _EMPTY, use_noise, out, wout, keep_weights)
    return out, wout


def softmax_weights(X, P, sigma, noise=None):
    return _run_denoise(X, P, sigma, noise, True)[1]


def denoise(X, P, sigma, noise=None):
    return _run_denoise(X, P, sigma, noise, False)[0]


def logsumexp_kernel(X, P, sigma):
    out = np.empty(X.shape[0])
    _logsumexp(X, P, -0.5 / (sigma * sigma), out)
    return out


def nearest(X, P):
    out = np.empty(X.shape[0], dtype=np.int64)
    _nearest(X, P, out)
    return out
