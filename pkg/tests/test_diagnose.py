import numpy as np
import pytest

from diffgeo import PointSet, build_grid, deviation_curves, knn, make_perturbed, optimal
from diffgeo.diagnose import FAMILIES, SWAP, nearest_distance
from diffgeo.errors import DimensionMismatch, InvalidParam


@pytest.fixture(scope="module")
def small_grid():
    return build_grid(N=18)


def test_identical_denoisers_give_zero(ref_gmm, small_grid):
    den = optimal(ref_gmm)
    res = deviation_curves(den, den, small_grid, 20, seed=1)
    assert set(res.curves) == set(FAMILIES)
    for c in res.curves.values():
        assert np.all(c.deviation == 0.0)
        assert len(c.s) == 18 and c.s[0] == 80.0
    np.testing.assert_array_equal(res.final_a, res.final_b)


def test_subsampled_deviation_at_top_is_mean_gap(ref_gmm, small_grid):
    sub = make_perturbed(ref_gmm, "subsampled", seed=3, fraction=0.1)
    res = deviation_curves(sub, optimal(ref_gmm), small_grid, 50, seed=2)
    # at s_N the posterior is nearly uniform: both outputs are close to their set means
    gap = np.linalg.norm(sub.support.points.mean(axis=0) - ref_gmm.points.mean(axis=0))
    top = res.curves["r_on_opt_traj"].deviation[0]
    assert top == pytest.approx(gap, rel=0.05, abs=1e-3)


def test_amplitude_ordering(ref_gmm, small_grid):
    opt = optimal(ref_gmm)
    tops = []
    for amp in (0.0, 0.1, 1.0):
        den = make_perturbed(ref_gmm, "weight_noised", seed=4, amplitude=amp)
        res = deviation_curves(den, opt, small_grid, 40, seed=5)
        tops.append(res.curves["r_on_opt_traj"].deviation.mean())
    assert tops[0] == 0.0
    assert tops[0] < tops[1] < tops[2]


def test_swap_symmetry(ref_gmm, small_grid):
    a = make_perturbed(ref_gmm, "subsampled", seed=6, fraction=0.3)
    b = optimal(ref_gmm)
    fwd = deviation_curves(a, b, small_grid, 15, seed=7)
    rev = deviation_curves(b, a, small_grid, 15, seed=7)
    for fam, other in SWAP.items():
        np.testing.assert_array_equal(fwd.curves[fam].deviation, rev.curves[other].deviation)
    np.testing.assert_array_equal(fwd.final_a, rev.final_b)


def test_dimension_mismatch(ref_gmm, small_grid, two_point):
    with pytest.raises(DimensionMismatch):
        deviation_curves(optimal(ref_gmm), optimal(two_point), small_grid, 2)
    with pytest.raises(InvalidParam):
        deviation_curves(optimal(ref_gmm), optimal(ref_gmm), small_grid, 0)


def test_knn_examples():
    ps = PointSet(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [-1.0, 0.0]]))
    assert knn(ps, [0.1, 0.0], 2) == [(0, pytest.approx(0.1)), (1, pytest.approx(0.9))]
    # exact tie between rows 1 and 3: the lower row comes first
    assert [i for i, _ in knn(ps, [0.0, 0.0], 3)] == [0, 1, 3]
    with pytest.raises(InvalidParam):
        knn(ps, [0.0, 0.0], 5)
    with pytest.raises(DimensionMismatch):
        knn(ps, [0.0], 1)


def test_final_samples_attracted_to_training_points(ref_gmm, ref_batch):
    final = ref_batch.states[-1]
    dist = nearest_distance(ref_gmm, final)
    # the empirical flow memorizes: every sample lands within s_1-ish of a data point
    assert np.median(dist) < 1e-2
    spread = nearest_distance(ref_gmm, ref_gmm.points + 0.3)
    assert np.median(dist) < 0.1 * np.median(spread)
