import numpy as np
import pytest

import glss
from conftest import random_model


def test_simulate_reproducible():
    model = random_model(seed=1)
    a = glss.simulate(model, 500, glss.Seeds(1, 2, 3))
    b = glss.simulate(model, 500, glss.Seeds(1, 2, 3))
    for name in ("u", "pi", "v", "x", "y"):
        assert np.array_equal(a.signal(name), b.signal(name))
    c = glss.simulate(model, 500, glss.Seeds(1, 2, 4))
    assert not np.array_equal(a.v, c.v)


@pytest.mark.parametrize("kind", glss.KINDS)
def test_replay_is_bit_exact(kind):
    model = random_model(kind=kind, seed=2)
    traj = glss.simulate(model, 2000, glss.Seeds(5, 6, 7))
    x, y = glss.replay(model, traj)
    assert np.array_equal(x, traj.x)
    assert np.array_equal(y, traj.y)


def test_simulate_burn_in_override():
    model = random_model(seed=3)
    traj = glss.simulate(model, 100, glss.Seeds(), burn_in=7)
    assert traj.burn_in == 7
    assert traj.T == 100


def test_simulate_rejects_unstable():
    model = random_model(seed=4)
    bad = glss.GlssModel(model.A * 3.0, model.B, model.K, model.C, model.D,
                         model.F, model.switching, model.Q, model.R)
    with pytest.raises(glss.InstabilityError):
        glss.simulate(bad, 100)


def test_simulated_noise_matches_requested_covariance():
    model = random_model(seed=5)
    Qv, Ru = model.driving_covariances()
    traj = glss.simulate(model, 200_000, glss.Seeds(8, 9, 10))
    emp_v = traj.v @ traj.v.T / traj.T
    emp_u = traj.u @ traj.u.T / traj.T
    assert np.abs(emp_v - Qv).max() < 0.02 * np.abs(Qv).max()
    assert np.abs(emp_u - Ru).max() < 0.02 * np.abs(Ru).max()


def test_default_burn_in_monotone():
    assert glss.default_burn_in(0.0) == 1
    assert glss.default_burn_in(0.9) > glss.default_burn_in(0.3)
    assert glss.default_burn_in(0.999999) <= 10_000


def test_trajectory_csv_roundtrip(tmp_path):
    model = random_model(seed=6)
    traj = glss.simulate(model, 300, glss.Seeds(1, 2, 3))
    path = tmp_path / "t.csv"
    glss.save_trajectory_csv(traj, path)
    dims = (model.nu, model.p, model.nn, model.nx, model.ny)
    back = glss.load_trajectory_csv(path, dims)
    # %.17g serialization reproduces doubles exactly
    for name in ("u", "pi", "v", "x", "y"):
        assert np.array_equal(back.signal(name), traj.signal(name)), name


def test_trajectory_csv_header(tmp_path):
    model = random_model(seed=6)
    traj = glss.simulate(model, 10, glss.Seeds())
    path = tmp_path / "t.csv"
    glss.save_trajectory_csv(traj, path)
    header = path.read_text().splitlines()[0].split(",")
    assert header[0] == "t"
    assert "y_1" in header and "pi_1" in header
    with pytest.raises(glss.DimensionError):
        glss.load_trajectory_csv(path, (5, 5, 5, 5, 5))


def test_trajectory_binary_roundtrip(tmp_path):
    model = random_model(seed=7)
    traj = glss.simulate(model, 257, glss.Seeds(11, 12, 13))
    path = tmp_path / "t.bin"
    glss.save_trajectory_binary(traj, path)
    back = glss.load_trajectory_binary(path)
    for name in ("u", "pi", "v", "x", "y"):
        assert np.array_equal(back.signal(name), traj.signal(name)), name
    assert back.seeds == traj.seeds
    assert back.burn_in == traj.burn_in


def test_trajectory_binary_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"not a trajectory at all")
    with pytest.raises(glss.DimensionError):
        glss.load_trajectory_binary(path)


def test_compute_z_manual_values():
    spec = glss.make_discrete_iid_spec((0.5, 0.5))
    pi = np.array([[2.0, 3.0, 5.0, 7.0], [11.0, 13.0, 17.0, 19.0]])
    r = np.array([[1.0, 10.0, 100.0, 1000.0]])
    z = glss.compute_z(pi, r, spec, 2)
    assert np.array_equal(z.entries[()].values, r)
    # z_w(t) = r(t - |w|) * pi_w(t-1) / sqrt(p_w)
    got = z.entries[(1, 2)].values[0]
    assert got[0] == 0.0 and got[1] == 0.0
    assert got[2] == pytest.approx(1.0 * (2.0 * 13.0) / 0.5)
    assert got[3] == pytest.approx(10.0 * (3.0 * 17.0) / 0.5)
    one = z.entries[(2,)].values[0]
    assert one[1] == pytest.approx(1.0 * 11.0 / np.sqrt(0.5))
    assert z.entries[(1, 2)].start == 2


def test_compute_z_requires_positive_weights():
    spec = glss.make_discrete_iid_spec((1.0, 0.0))
    pi = np.ones((2, 50))
    with pytest.raises(ValueError):
        glss.compute_z(pi, np.ones((1, 50)), spec, 2)


def test_compute_z_budget_guard():
    spec = glss.make_discrete_iid_spec((0.5, 0.5))
    pi = np.ones((2, 1000))
    with pytest.raises(ValueError):
        glss.compute_z(pi, np.ones((1, 1000)), spec, 4, budget=100)


def test_compute_z_trajectory_signals():
    model = random_model(seed=8)
    traj = glss.simulate(model, 400, glss.Seeds())
    z = glss.compute_z(traj, "y", model.switching, 2)
    assert z.base == "y"
    with pytest.raises(LookupError):
        glss.compute_z(traj, "nope", model.switching, 2)


def test_zseries_stacked_alignment():
    model = random_model(seed=9)
    traj = glss.simulate(model, 300, glss.Seeds())
    z = glss.compute_z(traj, "u", model.switching, 3)
    X, start, words = z.stacked()
    assert start == 3
    assert words[0] == ()
    assert X.shape[0] == len(words) * model.nu
    lengths = [len(w) for w in words]
    assert lengths == sorted(lengths)


def test_cross_moment_battery_matches_direct():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((4, 5000))
    B = rng.standard_normal((3, 5000))
    mean, err = glss.cross_moment_battery(A, B)
    n = A.shape[1]
    for i in range(4):
        for j in range(3):
            prod = A[i] * B[j]
            assert mean[i, j] == pytest.approx(prod.mean())
            assert err[i, j] == pytest.approx(
                prod.std() / np.sqrt(n), rel=1e-6)


def test_empirical_cov_window_guard():
    with pytest.raises(glss.WindowError):
        glss.empirical_cov(np.ones((1, 50)), np.ones((1, 50)))


def test_whiteness_passes_for_independent_noise():
    spec = glss.make_discrete_iid_spec((0.4, 0.6))
    rng = np.random.default_rng(5)
    T = 100_000
    pi = glss.sample_switching(spec, T, seed=6)
    e = rng.standard_normal((2, T))
    z = glss.compute_z(pi, e, spec, 3)
    report = glss.whiteness_report(z)
    assert report.passed, report.summary()


def test_whiteness_fails_for_colored_noise():
    spec = glss.make_discrete_iid_spec((0.4, 0.6))
    rng = np.random.default_rng(7)
    T = 100_000
    pi = glss.sample_switching(spec, T, seed=8)
    e = rng.standard_normal(T + 1)
    colored = (e[1:] + 0.9 * e[:-1])[None, :]
    z = glss.compute_z(pi, colored, spec, 2)
    assert not glss.whiteness_report(z).passed


def test_whiteness_flags_singular_letter_moment():
    spec = glss.make_discrete_iid_spec((0.4, 0.6))
    T = 50_000
    pi = glss.sample_switching(spec, T, seed=9)
    z = glss.compute_z(pi, np.zeros((1, T)), spec, 2)
    report = glss.whiteness_report(z)
    assert any("nonsingular" in c.name for c in report.failures())


def test_simulate_batch_matches_sequential(monkeypatch):
    model = random_model(seed=10)
    seeds = [glss.Seeds(i, i + 1, i + 2) for i in range(4)]
    base = glss.simulate_batch(model, 200, seeds)
    monkeypatch.setenv("GLSS_THREADS", "3")
    threaded = glss.simulate_batch(model, 200, seeds)
    for a, b in zip(base, threaded):
        assert np.array_equal(a.y, b.y)
