"""Switched state-space models and their stationary second moments.

A model is the tuple ``({A_s, B_s, K_s}_s, C, D, F)`` over a switching
spec: the state recursion combines per-letter updates weighted by the
switching components, and the output reads the state plus direct input
and noise feedthrough.  Noise and input enter through per-letter second
moments ``Q_s`` / ``R_s`` measured in the normalized word coordinates
(the z-processes of :mod:`glss.simulate`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InstabilityError, ConvergenceError
from .reporting import ValidationReport
from .switching import SwitchingSpec
from .words import (Word, admissible_words, build_word_table, stability_radius,
                    word_series_table)


@dataclass
class GlssModel:
    """Model matrices plus the switching spec and noise law.

    Shapes: A (p, nx, nx), B (p, nx, nu), K (p, nx, nn), C (ny, nx),
    D (ny, nu), F (ny, nn), Q (p, nn, nn), R (p, nu, nu).
    """

    A: np.ndarray
    B: np.ndarray
    K: np.ndarray
    C: np.ndarray
    D: np.ndarray
    F: np.ndarray
    switching: SwitchingSpec
    Q: np.ndarray
    R: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        self.K = np.asarray(self.K, dtype=float)
        self.C = np.asarray(self.C, dtype=float)
        self.D = np.asarray(self.D, dtype=float)
        self.F = np.asarray(self.F, dtype=float)
        self.Q = np.asarray(self.Q, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        p = self.switching.p
        nx, nu, nn, ny = self.nx, self.nu, self.nn, self.ny
        expect = {
            "A": (self.A, (p, nx, nx)), "B": (self.B, (p, nx, nu)),
            "K": (self.K, (p, nx, nn)), "C": (self.C, (ny, nx)),
            "D": (self.D, (ny, nu)), "F": (self.F, (ny, nn)),
            "Q": (self.Q, (p, nn, nn)), "R": (self.R, (p, nu, nu)),
        }
        for name, (arr, shape) in expect.items():
            if arr.shape != shape:
                raise DimensionError(f"{name} has shape {arr.shape}, expected {shape}")

    @property
    def nx(self) -> int:
        return self.A.shape[1]

    @property
    def nu(self) -> int:
        return self.B.shape[2]

    @property
    def nn(self) -> int:
        return self.K.shape[2]

    @property
    def ny(self) -> int:
        return self.C.shape[0]

    @property
    def p(self) -> int:
        return self.switching.p

    def stability_radius(self) -> float:
        return stability_radius(self.A, np.asarray(self.switching.weights))

    def driving_covariances(self, rtol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
        """Covariances of switching-independent driving noise/input.

        Per-letter second moments of a process sampled independently of the
        switching must equal ``cov * E[pi_s^2] / p_s``; this inverts that
        relation and errors when the letters disagree, i.e. when the noise
        law cannot come from independent sampling.
        """
        w = np.asarray(self.switching.weights)
        m2 = np.asarray(self.switching.second_moments)
        ratio = (w / m2)[:, None, None]
        Qv = self.Q * ratio
        Ru = self.R * ratio
        for name, arr in (("Q", Qv), ("R", Ru)):
            spread = np.abs(arr - arr[0]).max()
            scale = max(np.abs(arr[0]).max(), 1e-30)
            if spread > rtol * scale:
                raise ValueError(
                    f"per-letter {name} moments are not proportional to the "
                    "switching second moments; no independent sampler exists"
                )
        return Qv[0], Ru[0]


def independent_noise_moments(spec: SwitchingSpec, cov: np.ndarray) -> np.ndarray:
    """Per-letter z-coordinate second moments of independent noise.

    A process drawn independently of the switching with covariance ``cov``
    has letter-wise moments ``cov * E[pi_s^2] / p_s``.
    """
    cov = np.asarray(cov, dtype=float)
    w = np.asarray(spec.weights)
    m2 = np.asarray(spec.second_moments)
    return np.stack([cov * (m2[s] / w[s]) for s in range(spec.p)])


@dataclass
class StationaryMoments:
    """Aggregate and per-letter stationary state Gramians.

    ``per_letter[s]`` collects the word-series terms whose word ends with
    letter ``s+1``; their sum is the stationary state covariance.
    """

    gramian: np.ndarray
    per_letter: np.ndarray
    radius: float
    iterations: int


def _edge_masks(spec: SwitchingSpec) -> np.ndarray:
    """mask[t, s] = 1 when letter s+1 may be followed by letter t+1."""
    p = spec.p
    mask = np.zeros((p, p))
    for (a, b) in spec.alphabet.edges:
        mask[b - 1, a - 1] = 1.0
    return mask


def restricted_lyapunov_fixed_point(
    left: np.ndarray,
    right: np.ndarray,
    inject: np.ndarray,
    spec: SwitchingSpec,
    tol: float = 1e-12,
    max_iter: int = 100_000,
) -> tuple[np.ndarray, int]:
    """Solve X_t = p_t * (left_t @ (sum over edges (s,t) of X_s) @ right_t^T + inject_t).

    Shared backbone of the stationary Gramian, cross-moment and error
    Gramian computations; ``left``/``right`` are (p, n, m)-stacked factor
    matrices and ``inject`` the per-letter constant terms.  Divergence
    (10 consecutive growth steps beyond the initial scale) raises.
    """
    p = spec.p
    weights = np.asarray(spec.weights)
    mask = _edge_masks(spec)
    X = np.zeros_like(inject, dtype=float)
    scale = max(np.abs(inject).max(), 1e-30)
    grow = 0
    last_delta = np.inf
    for it in range(1, max_iter + 1):
        pred = np.einsum("ts,sij->tij", mask, X)
        X_new = weights[:, None, None] * (
            np.einsum("tij,tjk,tlk->til", left, pred, right) + inject
        )
        delta = np.abs(X_new - X).max()
        X = X_new
        if delta < tol * scale:
            return X, it
        if delta > last_delta and delta > 1e6 * scale:
            grow += 1
            if grow >= 10:
                raise ConvergenceError(
                    "restricted fixed point diverges; spectral radius >= 1?"
                )
        else:
            grow = 0
        last_delta = delta
    raise ConvergenceError(f"restricted fixed point: no convergence in {max_iter} steps")


def solve_stationary_gramian(
    model: GlssModel, tol: float = 1e-12, max_iter: int = 100_000
) -> StationaryMoments:
    """Stationary state covariance as a word-series fixed point.

    Requires the weighted spectral radius below one; the per-letter pieces
    solve the edge-restricted recursion with injection
    ``K_s Q_s K_s^T + B_s R_s B_s^T``.
    """
    rho = model.stability_radius()
    if rho >= 1.0:
        raise InstabilityError(
            f"stationarity violated: weighted Kronecker-square spectral radius "
            f"{rho:.6f} >= 1"
        )
    inject = np.einsum("sij,sjk,slk->sil", model.K, model.Q, model.K) \
        + np.einsum("sij,sjk,slk->sil", model.B, model.R, model.B)
    per_letter, its = restricted_lyapunov_fixed_point(
        model.A, model.A, inject, model.switching, tol=tol, max_iter=max_iter
    )
    return StationaryMoments(per_letter.sum(axis=0), per_letter, rho, its)


def validate_sglss(model: GlssModel, tol: float = 1e-9) -> ValidationReport:
    """Structural validity report for a stationary switched model.

    Checks the stationarity radius, the vanishing products required for
    non-edges (both the bare A-products and the gain columns weighted by
    their channel covariances), and symmetry/positive-definiteness of the
    per-letter noise moments.
    """
    report = ValidationReport("model validity")
    finite = all(np.isfinite(m).all() for m in
                 (model.A, model.B, model.K, model.C, model.D, model.F,
                  model.Q, model.R))
    report.add("all entries finite", 0.0 if finite else 1.0, 0.5)
    if not finite:
        return report
    rho = model.stability_radius()
    report.add("stationarity: weighted spectral radius < 1", rho, 1.0 - 1e-12,
               detail=f"radius {rho:.6f}")
    report.info["radius"] = rho
    edges = model.switching.alphabet.edges
    p = model.p
    scale = max(np.abs(model.A).max(), 1.0)
    for s1 in range(1, p + 1):
        for s2 in range(1, p + 1):
            if (s1, s2) in edges:
                continue
            prod = model.A[s2 - 1] @ model.A[s1 - 1]
            report.add(f"non-edge ({s1},{s2}): A_{s2} A_{s1} == 0",
                       np.abs(prod).max(), tol * scale ** 2)
            gain = model.A[s2 - 1] @ np.hstack([
                model.K[s1 - 1] @ model.Q[s1 - 1],
                model.B[s1 - 1] @ model.R[s1 - 1],
            ])
            report.add(f"non-edge ({s1},{s2}): A_{s2} [K_{s1} Q, B_{s1} R] == 0",
                       np.abs(gain).max() if gain.size else 0.0, tol * scale ** 2)
    for name, mats in (("Q", model.Q), ("R", model.R)):
        for s in range(p):
            m = mats[s]
            if m.size == 0:
                continue
            sym = np.abs(m - m.T).max()
            report.add(f"{name}_{s + 1} symmetric", sym, tol * max(np.abs(m).max(), 1.0))
            mineig = float(np.linalg.eigvalsh((m + m.T) / 2).min())
            report.add(f"{name}_{s + 1} positive definite", -mineig, 0.0,
                       detail=f"min eigenvalue {mineig:.3e}")
    return report


def stationary_state_series(
    model: GlssModel,
    u: np.ndarray,
    pi: np.ndarray,
    v: np.ndarray,
    max_depth: int,
) -> tuple[np.ndarray, int]:
    """Truncated word-series evaluation of the stationary state.

    Sums, over admissible words up to ``max_depth``, the word matrix product
    applied to the head-letter gains and lagged samples; the result is valid
    from index ``max_depth`` (earlier entries would need samples before the
    window and are left zero).

    Returns (values (nx, T), first_valid_index).
    """
    return _gain_series(model.A, [(model.K, v), (model.B, u)], pi,
                        model.switching, max_depth)


def _gain_series(A, channels, pi, spec, max_depth):
    """Word series sum_{words sw} A_w @ sum_channels(G_s r(t-|sw|)) * pi_sw(t-1)."""
    pi = np.asarray(pi, dtype=float)
    T = pi.shape[1]
    nx = A.shape[1]
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    alphabet = spec.alphabet
    table = build_word_table(alphabet, A, np.ones(spec.p), max_depth - 1)
    x = np.zeros((nx, T))
    # per-word switching products, aligned so entry t holds pi_w(t)
    words = admissible_words(alphabet, max_depth)
    prods = word_series_table(pi, words)
    for w in words:
        k = len(w)
        head, tail = w[0], w[1:]
        if tail not in table.product:
            continue
        gain = sum(
            table.product[tail] @ (G[head - 1] @ np.asarray(r, dtype=float)[:, : T - k])
            for G, r in channels
        )
        x[:, k:] += gain * prods[w][k - 1: T - 1]
    return x, max_depth


def output_covariance_family(
    model: GlssModel, max_depth: int, moments: StationaryMoments | None = None
) -> dict[Word, np.ndarray]:
    """Closed-form covariances E[z^y_w(t) y(t)^T] for admissible words.

    Derived from the word-series form of the state: for a word ``w`` with
    head letter ``h``,

        sqrt(p_w) * [ C (sum of per-letter Gramians feeding h) A_w^T C^T
                      + (F Q_h K_h^T + D R_h B_h^T) A_tail(w)^T C^T ]

    and the empty word maps to the full output covariance.  These depend on
    the model only through matrices, weights and letter-wise moments, so
    two models with matching families are output-equivalent to this depth.
    """
    if moments is None:
        moments = solve_stationary_gramian(model)
    spec = model.switching
    alphabet = spec.alphabet
    weights = np.asarray(spec.weights)
    table = build_word_table(alphabet, model.A, weights, max_depth)
    fam: dict[Word, np.ndarray] = {}
    # unconditional covariance of a driving process from its letter moments:
    # E[r r^T] = sum_s alpha_s^2 p_s Q_s, via the affine combination == 1
    coef = np.asarray(spec.alpha) ** 2 * weights
    Rv = np.einsum("s,sij->ij", coef, model.Q)
    Ru = np.einsum("s,sij->ij", coef, model.R)
    P = moments.gramian
    fam[()] = model.C @ P @ model.C.T + model.F @ Rv @ model.F.T \
        + model.D @ Ru @ model.D.T
    pred_sum = np.zeros((model.p, model.nx, model.nx))
    for s in range(1, model.p + 1):
        for q in alphabet.predecessors(s):
            pred_sum[s - 1] += moments.per_letter[q - 1]
    for w in table.words():
        h = w[0]
        tail = w[1:]
        direct = (model.F @ model.Q[h - 1] @ model.K[h - 1].T
                  + model.D @ model.R[h - 1] @ model.B[h - 1].T) \
            @ table.product[tail].T @ model.C.T
        through = model.C @ pred_sum[h - 1] @ table.product[w].T @ model.C.T
        fam[w] = np.sqrt(table.weight[w]) * (through + direct)
    return fam
