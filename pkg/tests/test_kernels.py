"""The numba and numpy backends must agree; both are exercised regardless of DIFFGEO_BACKEND."""
import numpy as np
import pytest

from diffgeo import _kernels

IMPLS = [pytest.param(_kernels.numpy_impl, id="numpy")]
if _kernels.NUMBA_AVAILABLE:
    IMPLS.append(pytest.param(_kernels.numba_impl, id="numba"))


def _brute_denoise(X, P, sigma, noise=None):
    out = np.empty_like(X)
    for q, x in enumerate(X):
        logits = np.array([-np.sum((x - p) ** 2) / (2 * sigma**2) for p in P])
        if noise is not None:
            logits = logits + noise[q]
        w = np.exp(logits - logits.max())
        out[q] = (w / w.sum()) @ P
    return out


@pytest.fixture
def data():
    rng = np.random.default_rng(0)
    return rng.normal(size=(37, 3)) * 2, rng.normal(size=(23, 3))


@pytest.mark.parametrize("impl", IMPLS)
@pytest.mark.parametrize("sigma", [0.05, 0.7, 5.0, 80.0])
def test_denoise_matches_brute_force(impl, data, sigma):
    X, P = data
    np.testing.assert_allclose(impl.denoise(X, P, sigma), _brute_denoise(X, P, sigma), rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("impl", IMPLS)
def test_denoise_with_noise(impl, data):
    X, P = data
    noise = np.random.default_rng(1).normal(size=(X.shape[0], P.shape[0]))
    np.testing.assert_allclose(impl.denoise(X, P, 1.3, noise), _brute_denoise(X, P, 1.3, noise), rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("impl", IMPLS)
def test_weights_sum_to_one(impl, data):
    X, P = data
    w = impl.softmax_weights(X, P, 0.3)
    assert np.all(w >= 0)
    assert np.max(np.abs(w.sum(axis=1) - 1)) <= 1e-12


@pytest.mark.parametrize("impl", IMPLS)
def test_logsumexp_stable_at_tiny_sigma(impl, data):
    X, P = data
    X = X + 100.0
    out = impl.logsumexp_kernel(X, P, 1e-4)
    assert np.all(np.isfinite(out))
    ref = -impl.sqdist(X, P).min(axis=1) / (2e-8)
    np.testing.assert_allclose(out, ref, rtol=1e-12)


@pytest.mark.parametrize("impl", IMPLS)
def test_nearest_tie_break(impl):
    P = np.array([[1.0], [-1.0], [1.0]])
    X = np.array([[0.0], [2.0]])
    np.testing.assert_array_equal(impl.nearest(X, P), [0, 0])


def test_backends_agree(data):
    if not _kernels.NUMBA_AVAILABLE:
        pytest.skip("numba missing")
    X, P = data
    for sigma in (0.01, 1.0, 80.0):
        np.testing.assert_allclose(_kernels.numba_impl.denoise(X, P, sigma), _kernels.numpy_impl.denoise(X, P, sigma),
                                   rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(_kernels.numba_impl.logsumexp_kernel(X, P, sigma),
                                   _kernels.numpy_impl.logsumexp_kernel(X, P, sigma), rtol=1e-13)


def test_numpy_chunking_is_transparent(data, monkeypatch):
    X, P = data
    full = _kernels.numpy_impl.denoise(X, P, 0.9)
    monkeypatch.setattr(_kernels.numpy_impl, "_CHUNK_ELEMS", 7)
    np.testing.assert_array_equal(_kernels.numpy_impl.denoise(X, P, 0.9), full)


@pytest.mark.parametrize("impl", IMPLS)
def test_rows_independent_of_batch(impl, data):
    X, P = data
    full = impl.denoise(X, P, 0.6)
    for q in (0, 5, 36):
        np.testing.assert_array_equal(impl.denoise(X[q:q + 1], P, 0.6)[0], full[q])
