import numpy as np
import pytest
import scipy.linalg

import glss
from conftest import (brute_force_gramian_by_length, random_model,
                      single_mode_model)


def brute_force_gramian_word_enumeration(model, depth):
    """Explicit sum over admissible words; exponential, for small depth."""
    spec = model.switching
    w = np.asarray(spec.weights)
    table = glss.build_word_table(spec.alphabet, model.A, w, depth)
    inject = np.stack([
        model.K[s] @ model.Q[s] @ model.K[s].T
        + model.B[s] @ model.R[s] @ model.B[s].T
        for s in range(model.p)
    ])
    total = np.zeros((model.nx, model.nx))
    for word in table.words(include_empty=True):
        for s in range(1, model.p + 1):
            if word and (s, word[0]) not in spec.alphabet.edges:
                continue
            Aw = table.product[word]
            total += table.weight[word] * w[s - 1] * (Aw @ inject[s - 1] @ Aw.T)
    return total


def test_gramian_single_mode_closed_form():
    model = single_mode_model(a=0.5, b=0.0, k=1.0, q=1.0)
    got = glss.solve_stationary_gramian(model)
    assert got.gramian[0, 0] == pytest.approx(4.0 / 3.0, rel=1e-10)
    assert got.radius == pytest.approx(0.25)


def test_gramian_single_mode_matches_scipy():
    model = single_mode_model(nx=3, a=0.7)
    got = glss.solve_stationary_gramian(model).gramian
    G = model.K[0] @ model.Q[0] @ model.K[0].T \
        + model.B[0] @ model.R[0] @ model.B[0].T
    want = scipy.linalg.solve_discrete_lyapunov(model.A[0], G)
    assert np.allclose(got, want, atol=1e-10)


@pytest.mark.parametrize("kind", glss.KINDS)
def test_gramian_matches_by_length_series(kind):
    model = random_model(kind=kind, rho=0.4, seed=21)
    got = glss.solve_stationary_gramian(model).gramian
    want = brute_force_gramian_by_length(model, 80)
    assert np.abs(got - want).max() < 1e-10


def test_by_length_series_matches_word_enumeration():
    # the two oracles agree on their common truncation
    model = random_model(kind="markov-embedded", rho=0.45, seed=3)
    for depth in (0, 1, 5, 11):
        a = brute_force_gramian_by_length(model, depth)
        b = brute_force_gramian_word_enumeration(model, depth)
        assert np.abs(a - b).max() < 1e-12, depth


def test_gramian_unstable_raises():
    model = random_model(seed=2)
    bad = glss.GlssModel(model.A * 2.5, model.B, model.K, model.C, model.D,
                         model.F, model.switching, model.Q, model.R)
    with pytest.raises(glss.InstabilityError):
        glss.solve_stationary_gramian(bad)


def test_gramian_monte_carlo():
    model = random_model(kind="discrete-iid", rho=0.5, seed=31)
    T = 200_000
    traj = glss.simulate(model, T, glss.Seeds(1, 2, 3))
    emp = traj.x @ traj.x.T / T
    want = glss.solve_stationary_gramian(model).gramian
    scale = np.abs(np.diag(want)).max()
    assert np.abs(emp - want).max() < 10.0 / np.sqrt(T) * scale * 3


def test_validate_detects_nonfinite():
    model = random_model(seed=4)
    A = model.A.copy()
    A[0, 0, 0] = np.nan
    bad = glss.GlssModel(A, model.B, model.K, model.C, model.D, model.F,
                         model.switching, model.Q, model.R)
    report = glss.validate_sglss(bad)
    assert not report.passed
    assert any("finite" in c.name for c in report.failures())


def test_validate_detects_nonedge_products():
    model = random_model(kind="markov-embedded", seed=6)
    A = model.A.copy()
    A += 0.05  # dense perturbation breaks the block sparsity
    bad = glss.GlssModel(A, model.B, model.K, model.C, model.D, model.F,
                         model.switching, model.Q, model.R)
    report = glss.validate_sglss(bad)
    assert any("non-edge" in c.name for c in report.failures())


def test_validate_detects_bad_noise_moments():
    model = random_model(seed=7)
    Q = model.Q.copy()
    Q[0, 0, 1] += 0.5  # asymmetric
    bad = glss.GlssModel(model.A, model.B, model.K, model.C, model.D,
                         model.F, model.switching, Q, model.R)
    assert any("symmetric" in c.name
               for c in glss.validate_sglss(bad).failures())
    Q2 = model.Q.copy()
    Q2[1] = -np.eye(model.nn)
    bad2 = glss.GlssModel(model.A, model.B, model.K, model.C, model.D,
                          model.F, model.switching, Q2, model.R)
    assert any("positive definite" in c.name
               for c in glss.validate_sglss(bad2).failures())


@pytest.mark.parametrize("kind", glss.KINDS)
def test_driving_covariance_roundtrip(kind):
    model = random_model(kind=kind, seed=8)
    Qv, Ru = model.driving_covariances()
    assert np.allclose(glss.independent_noise_moments(model.switching, Qv),
                       model.Q)
    assert np.allclose(glss.independent_noise_moments(model.switching, Ru),
                       model.R)


def test_driving_covariance_inconsistent_letters():
    model = random_model(kind="markov-embedded", seed=9)
    Q = model.Q.copy()
    Q[0] *= 3.0
    bad = glss.GlssModel(model.A, model.B, model.K, model.C, model.D,
                         model.F, model.switching, Q, model.R)
    with pytest.raises(ValueError):
        bad.driving_covariances()


def test_restricted_fixed_point_divergence():
    spec = glss.make_discrete_iid_spec((0.5, 0.5))
    big = np.stack([2.0 * np.eye(2)] * 2)
    inject = np.stack([np.eye(2)] * 2)
    with pytest.raises(glss.ConvergenceError):
        glss.restricted_lyapunov_fixed_point(big, big, inject, spec)


@pytest.mark.parametrize("kind", glss.KINDS)
def test_state_series_approximates_trajectory(kind):
    # word count grows exponentially in depth, so push the tail down with a
    # small radius instead of a deep truncation
    model = random_model(kind=kind, rho=0.05, seed=13)
    traj = glss.simulate(model, 3000, glss.Seeds(4, 5, 6))
    depth = 8
    series, start = glss.stationary_state_series(model, traj.u, traj.pi,
                                                 traj.v, depth)
    err = np.linalg.norm(series[:, start:] - traj.x[:, start:])
    ref = np.linalg.norm(traj.x[:, start:])
    assert err / ref < 1e-4


def test_output_covariance_family_empty_word_monte_carlo():
    model = random_model(kind="discrete-iid", rho=0.5, seed=15)
    fam = glss.output_covariance_family(model, 1)
    T = 300_000
    traj = glss.simulate(model, T, glss.Seeds(7, 8, 9))
    emp = traj.y @ traj.y.T / T
    scale = np.abs(fam[()]).max()
    assert np.abs(emp - fam[()]).max() < 6.0 / np.sqrt(T) * scale * 3


@pytest.mark.parametrize("kind", glss.KINDS)
def test_output_covariance_family_word_entries_monte_carlo(kind):
    model = random_model(kind=kind, rho=0.5, seed=16)
    depth = 3
    fam = glss.output_covariance_family(model, depth)
    T = 300_000
    traj = glss.simulate(model, T, glss.Seeds(10, 11, 12))
    z = glss.compute_z(traj, "y", model.switching, depth)
    for w in z.words(include_empty=True):
        entry = z.entries[w]
        est = glss.empirical_cov(entry, traj.y)
        tol = 6.0 * est.stderr + 1e-12
        assert (np.abs(est.value - fam[w]) < tol).all(), w
