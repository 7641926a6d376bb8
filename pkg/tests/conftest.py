"""Shared random-model factories for the test suite.

All randomness is routed through explicit seeds so every test is
reproducible; factories return validated stationary models with the
requested weighted spectral radius.
"""

import numpy as np

import glss


def scale_to_radius(A, weights, rho):
    """Rescale a letter stack so the weighted Kronecker radius equals rho."""
    r0 = glss.stability_radius(A, np.asarray(weights))
    if r0 == 0.0:
        return A
    return A * np.sqrt(rho / r0)


def random_spec(kind, rng, states=2):
    if kind == "discrete-iid":
        q = rng.uniform(0.2, 1.0, 2)
        return glss.make_discrete_iid_spec(tuple(q / q.sum()))
    if kind == "iid-white":
        return glss.make_iid_white_spec((1.0, float(rng.uniform(0.4, 1.2))),
                                        "rademacher")
    P = rng.uniform(0.15, 1.0, (states, states))
    P /= P.sum(axis=1, keepdims=True)
    return glss.make_markov_spec(P)


def random_model(kind="discrete-iid", nx=2, nu=1, ny=1, nn=2, rho=0.5,
                 seed=0, states=2, b_scale=1.0, k_scale=1.0, d_scale=1.0,
                 f_scale=1.0):
    """Random validated stationary model of the requested switching kind.

    Markov-embedded models are built block-structured (state block per
    chain state) so the non-edge products vanish exactly; nx must then be
    a multiple of the state count.
    """
    rng = np.random.default_rng(seed)
    spec = random_spec(kind, rng, states)
    p = spec.p
    if kind == "markov-embedded":
        if nx % states:
            raise ValueError("markov models need nx divisible by states")
        nb = nx // states
        sel = np.zeros((states, nx, nb))
        for q in range(states):
            sel[q, q * nb:(q + 1) * nb] = np.eye(nb)
        pairs = spec.letter_pairs()
        A = np.zeros((p, nx, nx))
        B = np.zeros((p, nx, nu))
        K = np.zeros((p, nx, nn))
        for i, (q2, q1) in enumerate(pairs):
            A[i] = sel[q2 - 1] @ rng.standard_normal((nb, nb)) @ sel[q1 - 1].T
            B[i] = sel[q2 - 1] @ rng.standard_normal((nb, nu))
            K[i] = sel[q2 - 1] @ rng.standard_normal((nb, nn))
    else:
        A = rng.standard_normal((p, nx, nx))
        B = rng.standard_normal((p, nx, nu))
        K = rng.standard_normal((p, nx, nn))
    A = scale_to_radius(A, spec.weights, rho)
    B *= b_scale
    K *= k_scale
    C = rng.standard_normal((ny, nx))
    D = d_scale * rng.standard_normal((ny, nu))
    F = f_scale * rng.standard_normal((ny, nn))
    base_q = rng.standard_normal((nn, nn)) / np.sqrt(nn)
    Qv = base_q @ base_q.T + 0.4 * np.eye(nn)
    base_r = rng.standard_normal((nu, nu)) / np.sqrt(nu)
    Ru = base_r @ base_r.T + 0.3 * np.eye(nu)
    Q = glss.independent_noise_moments(spec, Qv)
    R = glss.independent_noise_moments(spec, Ru)
    model = glss.GlssModel(A, B, K, C, D, F, spec, Q, R)
    assert glss.validate_sglss(model).passed
    return model


def single_mode_model(a=0.5, b=0.7, k=1.0, c=1.0, d=0.2, f=1.0, q=1.0, r=1.0,
                      nx=1):
    """Degenerate single-letter model (classical LTI case), p_1 = 1."""
    spec = glss.make_discrete_iid_spec((1.0,))
    if nx == 1:
        A = np.array([[[a]]])
        B = np.array([[[b]]])
        K = np.array([[[k]]])
        C = np.array([[c]])
        D = np.array([[d]])
        F = np.array([[f]])
        Q = np.array([[[q]]])
        R = np.array([[[r]]])
    else:
        rng = np.random.default_rng(17)
        A = scale_to_radius(rng.standard_normal((1, nx, nx)), spec.weights,
                            abs(a))
        B = rng.standard_normal((1, nx, 1))
        K = rng.standard_normal((1, nx, 1))
        C = rng.standard_normal((1, nx))
        D = np.array([[d]])
        F = np.array([[f]])
        Q = np.array([[[q]]])
        R = np.array([[[r]]])
    return glss.GlssModel(A, B, K, C, D, F, spec, Q, R)


def basis_change(model, T0):
    """Same model in the state basis x_hat = T0 x."""
    Ti = np.linalg.inv(T0)
    p = model.p
    return glss.GlssModel(
        np.stack([T0 @ model.A[s] @ Ti for s in range(p)]),
        np.stack([T0 @ model.B[s] for s in range(p)]),
        np.stack([T0 @ model.K[s] for s in range(p)]),
        model.C @ Ti, model.D, model.F, model.switching,
        model.Q, model.R, meta=dict(model.meta))


def well_conditioned(rng, n, cond_cap=1e3):
    """Random invertible matrix with condition number below the cap."""
    while True:
        T0 = rng.standard_normal((n, n))
        if np.linalg.cond(T0) <= cond_cap:
            return T0


def brute_force_gramian_by_length(model, depth):
    """Length-indexed partial sums of the stationary state series.

    S_0[s] = p_s (K_s Q_s K_s^T + B_s R_s B_s^T); extending the word by a
    letter multiplies by that letter's matrix on the left and its weight.
    Independent of the fixed-point solver.
    """
    p = model.p
    w = np.asarray(model.switching.weights)
    S = np.stack([
        w[s] * (model.K[s] @ model.Q[s] @ model.K[s].T
                + model.B[s] @ model.R[s] @ model.B[s].T)
        for s in range(p)
    ])
    total = S.sum(axis=0)
    edges = model.switching.alphabet.edges
    for _ in range(depth):
        S_next = np.zeros_like(S)
        for t in range(p):
            pred = sum((S[s - 1] for s in range(1, p + 1)
                        if (s, t + 1) in edges), np.zeros_like(S[0]))
            S_next[t] = w[t] * (model.A[t] @ pred @ model.A[t].T)
        S = S_next
        total = total + S.sum(axis=0)
    return total


def duplicated_model(model):
    """Same output law on a doubled, unobservable state space."""
    p, nx = model.p, model.nx
    Z = np.zeros((nx, nx))
    A = np.stack([np.block([[model.A[s], Z], [Z, model.A[s]]])
                  for s in range(p)])
    B = np.stack([np.vstack([model.B[s], model.B[s]]) for s in range(p)])
    K = np.stack([np.vstack([model.K[s], model.K[s]]) for s in range(p)])
    C = np.hstack([0.5 * model.C, 0.5 * model.C])
    return glss.GlssModel(A, B, K, C, model.D, model.F, model.switching,
                          model.Q, model.R)
