"""Pure-numpy kernels. Rows of the query matrix are processed in chunks so the
``(chunk, n, d)`` difference tensor stays near ``_CHUNK_ELEMS`` elements."""
import numpy as np

_CHUNK_ELEMS = 1 << 21


def _chunks(m, n, d):
    step = max(1, _CHUNK_ELEMS // max(1, n * d))
    for start in range(0, m, step):
        yield slice(start, min(m, start + step))


def sqdist(X, P):
    m, d = X.shape
    out = np.empty((m, P.shape[0]))
    for sl in _chunks(m, P.shape[0], d):
        diff = X[sl, None, :] - P[None, :, :]
        out[sl] = np.einsum("mnd,mnd->mn", diff, diff)
    return out


def _logits(X, P, sigma, noise):
    # direct differences, not |x|^2 + |p|^2 - 2 x.p: queries sit far from the data at large sigma
    logits = sqdist(X, P) * (-0.5 / (sigma * sigma))
    if noise is not None:
        logits += noise
    return logits


def softmax_weights(X, P, sigma, noise=None):
    logits = _logits(X, P, sigma, noise)
    logits -= logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    w /= w.sum(axis=1, keepdims=True)
    return w


def denoise(X, P, sigma, noise=None):
    m, d = X.shape
    out = np.empty((m, d))
    for sl in _chunks(m, P.shape[0], d):
        w = softmax_weights(X[sl], P, sigma, None if noise is None else noise[sl])
        # explicit reduction, not w @ P: BLAS picks gemv/gemm by batch size and the bits change
        out[sl] = np.einsum("mn,nd->md", w, P, optimize=False)
    return out


def logsumexp_kernel(X, P, sigma):
    """Row-wise ``log sum_i exp(-|x - p_i|^2 / 2 sigma^2)``."""
    logits = _logits(X, P, sigma, None)
    top = logits.max(axis=1)
    return top + np.log(np.exp(logits - top[:, None]).sum(axis=1))


def nearest(X, P):
    # argmin returns the first minimum: lowest row index wins ties
    return np.argmin(sqdist(X, P), axis=1)
