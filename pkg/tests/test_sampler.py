import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from diffgeo import PointSet, build_grid, denoise_optimal, euler_step, heun_step, ode_jump, ode_rhs, optimal
from diffgeo import perturb_forward, solve, solve_batch
from diffgeo.errors import InvalidParam
from diffgeo.meanshift import mean_vector
from diffgeo.sampler import initial_samples, load_trajectory, sample_batch
from diffgeo.schedule import weight_sequence

# Euler, N = 18 EDM grid, support {-1, +1}, x_T from seed 5.  Cross-checked in
# test_golden_trajectory_close_to_ode_solution against a tight DOP853 solve.
EULER18_GOLDEN = [
    207.01704185859822, 149.0250621218182, 105.5608788834982, 73.45814554570372, 50.12993923959282,
    33.48613519133115, 21.859566437478637, 13.940610473913607, 8.718901041463697, 5.425859319845779,
    3.4601483065582, 2.3206925238885856, 1.6688470279675, 1.314783620114161, 1.135255943749506,
    1.0517459392750015, 1.016985072785533, 1.0045124940872903, 1.0,
]


def test_perturb_forward():
    x = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(perturb_forward(x, 0.0, 1), x)
    a = perturb_forward(x, 2.0, 42)
    b = perturb_forward(x, 2.0, 42)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, perturb_forward(x, 2.0, 43))


def test_perturb_forward_batch_rows_use_own_streams():
    X = np.zeros((5, 3))
    full = perturb_forward(X, 1.0, 8)
    np.testing.assert_array_equal(perturb_forward(X[3], 1.0, 8, offset=3), full[3])


def test_perturb_forward_thin_shell_stats():
    X = np.zeros((10_000, 3072))
    norms = np.linalg.norm(perturb_forward(X, 80.0, 2024), axis=1)
    assert abs(norms.mean() - 80 * math.sqrt(3072)) / (80 * math.sqrt(3072)) < 0.01
    assert abs(norms.std() - 80 / math.sqrt(2)) / (80 / math.sqrt(2)) < 0.1
    assert abs(norms.mean() - 4434) < 57


def test_ode_rhs(two_point):
    ps = PointSet(np.array([[1.0, 1.0]]))
    den = optimal(ps)
    np.testing.assert_allclose(ode_rhs(den, [3.0, -1.0], 2.0), [1.0, -1.0])
    np.testing.assert_array_equal(ode_rhs(den, [1.0, 1.0], 0.5), [0.0, 0.0])
    assert ode_rhs(optimal(two_point), [1.0], 1.0)[0] == pytest.approx(1 - math.tanh(1.0), rel=1e-14)
    with pytest.raises(InvalidParam):
        ode_rhs(den, [0.0, 0.0], 0.0)


def test_euler_identities():
    rng = np.random.default_rng(0)
    ps = PointSet(rng.normal(size=(9, 3)))
    den = optimal(ps)
    for _ in range(100):
        x = rng.normal(size=3) * 5
        t = rng.uniform(0.01, 50)
        assert euler_step(den, x, t, 0.0).tobytes() == den(x, t).tobytes()
        np.testing.assert_array_equal(euler_step(den, x, t, t), x)
        # the ODE-increment form agrees with the convex-combination form
        t_to = rng.uniform(0, t)
        np.testing.assert_allclose(euler_step(den, x, t, t_to), x + (t_to - t) * ode_rhs(den, x, t), rtol=1e-12, atol=1e-12)


def test_euler_is_annealed_mean_shift(edm_grid):
    rng = np.random.default_rng(1)
    ps = PointSet(rng.normal(size=(12, 2)))
    den = optimal(ps)
    s = edm_grid.values
    w = weight_sequence(edm_grid)
    for n in range(1, edm_grid.N):
        x = rng.normal(size=2) * s[n + 1]
        expect = (s[n] / s[n + 1]) * x + w[n - 1] * mean_vector(ps, x, s[n + 1])
        got = euler_step(den, x, s[n + 1], s[n])
        assert np.linalg.norm(got - expect) <= 1e-14 * max(np.linalg.norm(expect), np.linalg.norm(x))


def test_heun_exact_on_single_point():
    x0 = np.array([0.5, -1.0])
    den = optimal(PointSet(x0[None]))
    xT = np.array([30.0, 12.0])
    T = 40.0
    x = xT
    t = T
    for t_to in (33.0, 20.0, 7.5, 0.3):
        x = heun_step(den, x, t, t_to)
        exact = x0 + (t_to / T) * (xT - x0)
        assert np.max(np.abs(x - exact)) <= 1e-12
        t = t_to


def test_heun_trivial_and_invalid(two_point):
    den = optimal(two_point)
    np.testing.assert_array_equal(heun_step(den, [0.4], 2.0, 2.0), [0.4])
    with pytest.raises(InvalidParam):
        heun_step(den, [0.4], 2.0, 0.0)


def test_heun_second_order_gap(two_point):
    den = optimal(two_point)
    x, t = np.array([1.3]), 2.0
    gaps = []
    for dt in (0.1, 0.05, 0.025):
        h = heun_step(den, x, t, t - dt)
        e = euler_step(den, euler_step(den, x, t, t - dt / 2), t - dt / 2, t - dt)
        gaps.append(abs(h - e)[0])
    ratios = np.array(gaps[:-1]) / np.array(gaps[1:])
    assert np.all((ratios > 3.5) & (ratios < 5.0))


def test_single_point_solve(edm_grid):
    x0 = np.array([2.0, -3.0])
    den = optimal(PointSet(x0[None]))
    for solver in ("euler", "heun"):
        tr = solve(den, edm_grid, [100.0, 50.0], solver)
        assert np.max(np.abs(tr.final - x0)) <= 1e-9
        np.testing.assert_array_equal(tr.denoised, np.tile(x0, (18, 1)))


def test_nfe_accounting(edm_grid, two_point):
    den = optimal(two_point)
    assert solve(den, edm_grid, [3.0], "euler").nfe == 18
    assert solve(den, edm_grid, [3.0], "heun").nfe == 35
    g = build_grid(N=7)
    assert solve(den, g, [3.0], "heun").nfe == 2 * 7 - 1


def test_trajectory_layout(edm_grid, two_point):
    tr = solve(optimal(two_point), edm_grid, [3.0], "heun")
    assert tr.states.shape == (19, 1)
    assert tr.denoised.shape == (18, 1)
    np.testing.assert_array_equal(tr.times, edm_grid.values[::-1])
    # the final Euler step lands exactly on the last recorded denoiser output
    assert tr.final.tobytes() == tr.denoised[-1].tobytes()
    for k in range(18):
        assert tr.denoised[k].tobytes() == denoise_optimal(two_point, tr.states[k], tr.times[k]).tobytes()


def test_golden_trajectory(edm_grid, two_point):
    xT = initial_samples(edm_grid, 1, 1, seed=5)[0]
    tr = solve(optimal(two_point), edm_grid, xT, "euler", seed=5)
    np.testing.assert_allclose(tr.states[:, 0], EULER18_GOLDEN, rtol=1e-12, atol=1e-14)


def test_golden_trajectory_close_to_ode_solution(two_point):
    """Independent oracle: DOP853 on dx/dt = (x - tanh(x/t^2))/t, the closed form for {-1, +1}."""
    xT = EULER18_GOLDEN[0]
    sol = solve_ivp(lambda t, x: (x - np.tanh(x / t**2)) / t, (80.0, 0.002), [xT],
                    method="DOP853", rtol=1e-12, atol=1e-12, dense_output=True)
    fine = build_grid(N=10_000)
    tr = solve(optimal(two_point), fine, [xT], "euler")
    ts = fine.descending()[:-1]
    assert np.max(np.abs(tr.states[:-1, 0] - sol.sol(ts)[0])) < 1e-3
    # the coarse Euler run tracks the same solution to first-order accuracy
    coarse = build_grid(N=18).descending()[:-1]
    assert np.max(np.abs(np.array(EULER18_GOLDEN[:-1]) - sol.sol(coarse)[0])) < 0.2
    assert EULER18_GOLDEN[-1] == 1.0


def test_batch_matches_single(two_point, edm_grid):
    den = optimal(PointSet(np.random.default_rng(2).normal(size=(10, 2))))
    X = initial_samples(edm_grid, 2, 6, seed=3)
    batch = solve_batch(den, edm_grid, X, "heun", seed=3)
    for i in (0, 4):
        single = solve(den, edm_grid, X[i], "heun", seed=3)
        assert single.states.tobytes() == batch.trajectory(i).states.tobytes()


def test_ode_jump(edm_grid):
    rng = np.random.default_rng(4)
    pts = rng.normal(size=(20, 2)) * 0.5
    ps = PointSet(pts)
    den = optimal(ps)
    xT = initial_samples(edm_grid, 2, 1, seed=9)[0]
    for solver in ("euler", "heun"):
        full = solve(den, edm_grid, xT, solver)
        assert ode_jump(den, edm_grid, xT, solver, 1).tobytes() == full.final.tobytes()
        top = ode_jump(den, edm_grid, xT, solver, edm_grid.N)
        assert top.tobytes() == den(xT, 80.0).tobytes()
        assert np.linalg.norm(top - pts.mean(axis=0)) < 0.01
        for n in range(1, edm_grid.N + 1):
            assert ode_jump(den, edm_grid, xT, solver, n).tobytes() == full.denoised[edm_grid.N - n].tobytes()
    x0 = np.array([0.25, 4.0])
    single = optimal(PointSet(x0[None]))
    for n in (1, 5, 18):
        np.testing.assert_array_equal(ode_jump(single, edm_grid, xT, "heun", n), x0)
    with pytest.raises(InvalidParam):
        ode_jump(den, edm_grid, xT, "heun", 0)


def test_jsonl_round_trip(tmp_path, two_point, edm_grid):
    tr = solve(optimal(two_point), edm_grid, [12.5], "heun", seed=4)
    path = tmp_path / "t.jsonl"
    tr.save(path)
    back = load_trajectory(path)
    assert back.states.tobytes() == tr.states.tobytes()
    assert back.denoised.tobytes() == tr.denoised.tobytes()
    assert back.to_jsonl() == tr.to_jsonl()
    lines = path.read_text().splitlines()
    assert len(lines) == 20
    assert '"r": null' in lines[-1]


def test_determinism_bytes(ref_gmm, edm_grid):
    den = optimal(ref_gmm)
    a = sample_batch(den, edm_grid, 5, seed=77, solver="heun")
    b = sample_batch(den, edm_grid, 5, seed=77, solver="heun")
    assert all(a.trajectory(i).to_jsonl() == b.trajectory(i).to_jsonl() for i in range(5))


def test_invalid_solver(two_point, edm_grid):
    with pytest.raises(InvalidParam):
        solve(optimal(two_point), edm_grid, [1.0], "rk4")
