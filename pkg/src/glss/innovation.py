"""Innovation representations of the noise-driven output component.

The construction replaces the noise gains by filter gains so that the
model is driven by its own one-step prediction errors.  Gains come from a
mode-indexed fixed point on the cross moments between the filter error and
the true state, written entirely in the letter-wise quantities of the
model; its single-mode specialization is the classical filtering Riccati
equation, which the tests use as an oracle.  Data-driven counterparts
(regression on word regressors) provide the independent estimates the
statistical certificates compare against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .decompose import ridge_fit
from .errors import ConvergenceError, DimensionError
from .model import GlssModel, _edge_masks, solve_stationary_gramian
from .simulate import Series, Trajectory, ZSeries, compute_z
from .switching import SwitchingSpec
from .words import stability_radius


@dataclass
class InnovationEstimate:
    """Regression residual of a process on its own word regressors."""

    innovation: Series
    residual_variance_by_depth: list[float]
    coefficients: np.ndarray
    ridge: float


def _nested_depth_fits(X, starts_per_depth, Y, start, ridge):
    """Residual variance for each nested regressor prefix (length-major)."""
    coef, used = ridge_fit(X, Y, start, ridge)
    out = []
    for m in starts_per_depth:
        sub, _ = ridge_fit(X[:m], Y, start, ridge if ridge is not None else used)
        resid = Y[:, start:] - sub @ X[:m, start:]
        out.append(float(np.mean(resid ** 2)))
    return coef, used, out


def estimate_innovation(
    y_s: np.ndarray | Series,
    pi: np.ndarray,
    spec: SwitchingSpec,
    max_depth: int,
    ridge: float | None = None,
) -> InnovationEstimate:
    """Innovation of a process: residual after projecting on its own past.

    Regressors are the word entries of the process itself (strictly past
    values); the per-depth residual variances expose convergence in the
    truncation depth.
    """
    base = y_s.values if isinstance(y_s, Series) else np.asarray(y_s, dtype=float)
    base_start = y_s.start if isinstance(y_s, Series) else 0
    z = compute_z(np.asarray(pi, dtype=float), base, spec, max_depth)
    X, start, words = z.stacked(include_empty=False)
    start = max(start, base_start)
    d = base.shape[0]
    counts = []
    for depth in range(1, max_depth + 1):
        counts.append(sum(len(w) <= depth for w in words) * d)
    coef, used, curve = _nested_depth_fits(X, counts, base, start, ridge)
    resid = base.copy()
    resid[:, start:] = base[:, start:] - coef @ X[:, start:]
    return InnovationEstimate(Series(resid, start), curve, coef, used)


@dataclass
class PredictorEstimate:
    """One-step output prediction from past outputs, inputs and the input."""

    y_hat: Series
    residual: Series
    coefficients: np.ndarray
    ridge: float


def predictor_estimate(
    traj: Trajectory,
    spec: SwitchingSpec,
    max_depth: int,
    ridge: float | None = None,
) -> PredictorEstimate:
    """Project y(t) on the output/input word regressors and the current input."""
    zy = compute_z(traj, "y", spec, max_depth)
    zu = compute_z(traj, "u", spec, max_depth)
    Xy, sy, _ = zy.stacked(include_empty=False)
    Xu, su, _ = zu.stacked(include_empty=True)
    X = np.vstack([Xy, Xu])
    start = max(sy, su)
    coef, used = ridge_fit(X, traj.y, start, ridge)
    yhat = np.zeros_like(traj.y)
    yhat[:, start:] = coef @ X[:, start:]
    resid = traj.y - yhat
    return PredictorEstimate(Series(yhat, start), Series(resid, start), coef, used)


@dataclass
class InnovationModel:
    """Innovation form: original dynamics, filter gains, identity feedthrough.

    ``innovation_cov`` holds the letter-wise second moments of the
    innovation process; ``info`` carries fixed-point diagnostics (iteration
    count, gain equation residual, closed-loop radius).
    """

    A: np.ndarray
    B: np.ndarray
    K: np.ndarray
    C: np.ndarray
    D: np.ndarray
    switching: SwitchingSpec
    innovation_cov: np.ndarray
    R: np.ndarray
    info: dict = field(default_factory=dict)

    @property
    def nx(self) -> int:
        return self.A.shape[1]

    @property
    def ny(self) -> int:
        return self.C.shape[0]

    def as_glss(self) -> GlssModel:
        ny = self.ny
        return GlssModel(self.A, self.B, self.K, self.C, self.D, np.eye(ny),
                         self.switching, self.innovation_cov, self.R,
                         meta={"innovation": True, **self.info})


def build_innovation_form(
    model: GlssModel,
    tolerance: float = 1e-10,
    max_iter: int = 100_000,
) -> InnovationModel:
    """Filter gains and innovation moments via a mode-indexed fixed point.

    Iterates letter-wise cross moments M_s between the filter error and the
    state (word-series terms grouped by last letter).  Each sweep computes
    the predecessor sums feeding a letter, solves the gain equation there,
    and refreshes M with the closed-loop/open-loop pairing.  Converged
    gains are followed by the closed-loop error Gramians, which yield the
    letter-wise innovation moments.
    """
    spec = model.switching
    p, nx, ny = model.p, model.nx, model.ny
    weights = np.asarray(spec.weights)
    alpha = np.asarray(spec.alpha)
    mask = _edge_masks(spec)
    A, K, C, F, Q = model.A, model.K, model.C, model.F, model.Q

    # predecessor-summed noise moments: sum over edges (s,t) of
    # alpha_s^2 p_s Q_s; equals E[v v^T] times the mean predecessor weight
    coef = alpha ** 2 * weights
    Rt = np.einsum("ts,s,sij->tij", mask, coef, Q)
    base_cov = np.stack([F @ Rt[t] @ F.T for t in range(p)])
    for t in range(p):
        eigs = np.linalg.eigvalsh((base_cov[t] + base_cov[t].T) / 2)
        if eigs.min() <= 0:
            raise ValueError(
                "innovation form needs a nondegenerate output noise floor; "
                f"letter {t + 1} has a singular F-weighted moment"
            )

    # start from the zero-gain error moments (the open-loop letter
    # Gramians): they dominate the stabilizing solution, so the sweep
    # descends to it instead of sticking at a non-stabilizing fixed point
    # (M = 0 is one whenever F is square and invertible)
    M = solve_stationary_gramian(model).per_letter.copy()
    gains = np.zeros((p, nx, ny))
    last_delta = np.inf
    grow = 0
    scale = max(np.abs(Q).max() * max(np.abs(K).max(), 1.0) ** 2, 1e-30)
    for it in range(1, max_iter + 1):
        phi = np.einsum("ts,sij->tij", mask, M)
        M_new = np.empty_like(M)
        for t in range(p):
            lam = C @ phi[t] @ C.T + base_cov[t]
            rhs = A[t] @ phi[t] @ C.T + K[t] @ Rt[t] @ F.T
            gains[t] = np.linalg.solve(lam.T, rhs.T).T
            Abar = A[t] - gains[t] @ C
            Kbar = K[t] - gains[t] @ F
            M_new[t] = weights[t] * (Abar @ phi[t] @ A[t].T
                                     + Kbar @ Q[t] @ K[t].T)
        delta = np.abs(M_new - M).max()
        M = M_new
        if delta < tolerance * scale:
            break
        if delta > last_delta and delta > 1e9 * scale:
            grow += 1
            if grow >= 10:
                raise ConvergenceError("innovation fixed point diverges")
        else:
            grow = 0
        last_delta = delta
    else:
        raise ConvergenceError(
            f"innovation fixed point: no convergence in {max_iter} sweeps"
        )

    # closed-loop error Gramians under the converged gains
    Abar = np.stack([A[t] - gains[t] @ C for t in range(p)])
    Kbar = np.stack([K[t] - gains[t] @ F for t in range(p)])
    W = np.zeros((p, nx, nx))
    for _ in range(max_iter):
        pred = np.einsum("ts,sij->tij", mask, W)
        W_new = weights[:, None, None] * (
            np.einsum("tij,tjk,tlk->til", Abar, pred, Abar)
            + np.einsum("tij,tjk,tlk->til", Kbar, Q, Kbar)
        )
        if np.abs(W_new - W).max() < tolerance * scale:
            W = W_new
            break
        W = W_new
    psi = np.einsum("ts,sij->tij", mask, W)
    lam_letters = np.stack([C @ psi[t] @ C.T + F @ Q[t] @ F.T for t in range(p)])

    phi = np.einsum("ts,sij->tij", mask, M)
    gain_resid = max(
        np.abs((A[t] - gains[t] @ C) @ phi[t] @ C.T
               + (K[t] - gains[t] @ F) @ Rt[t] @ F.T).max()
        for t in range(p)
    )
    # restricted closed-loop operator on stacked letter Gramians
    big = np.zeros((p * nx * nx, p * nx * nx))
    for t in range(p):
        for s in range(p):
            if mask[t, s]:
                big[t * nx * nx:(t + 1) * nx * nx, s * nx * nx:(s + 1) * nx * nx] = \
                    weights[t] * np.kron(Abar[t], Abar[t])
    closed_radius = float(np.max(np.abs(np.linalg.eigvals(big)))) if big.size else 0.0

    info = {
        "method": "fixed-point",
        "iterations": it,
        "gain_equation_residual": float(gain_resid),
        "closed_loop_radius": closed_radius,
        "error_gramian_consistency": float(np.abs(M.sum(axis=0) - W.sum(axis=0)).max()),
        "open_loop_radius": float(stability_radius(A, weights)),
    }
    return InnovationModel(A.copy(), model.B.copy(), gains, C.copy(),
                           model.D.copy(), spec, lam_letters, model.R.copy(),
                           info)


def run_predictor_filter(
    inn: InnovationModel,
    y: np.ndarray,
    u: np.ndarray,
    pi: np.ndarray,
    x0: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run the one-step predictor over a window.

    Returns (state estimates, output predictions, residuals), all with one
    column per window sample.  A wrong ``x0`` decays at the closed-loop
    rate; None starts at zero.
    """
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    pi = np.asarray(pi, dtype=float)
    T = y.shape[1]
    if u.shape[1] != T or pi.shape[1] != T:
        raise DimensionError("window lengths differ")
    nx = inn.nx
    x = np.zeros(nx) if x0 is None else np.asarray(x0, dtype=float)
    A_eff = np.einsum("st,sij->tij", pi, inn.A)
    K_eff = np.einsum("st,sij->tij", pi, inn.K)
    bu = np.einsum("st,sij,jt->it", pi, inn.B, u)
    xs = np.empty((nx, T))
    es = np.empty((inn.ny, T))
    yh = np.empty((inn.ny, T))
    for t in range(T):
        xs[:, t] = x
        yh[:, t] = inn.C @ x + inn.D @ u[:, t]
        es[:, t] = y[:, t] - yh[:, t]
        x = A_eff[t] @ x + bu[:, t] + K_eff[t] @ es[:, t]
    return xs, yh, es


def fit_innovation_gains(
    model: GlssModel,
    traj: Trajectory,
    max_depth: int,
    ridge: float | None = None,
) -> np.ndarray:
    """Data-driven gain estimate, independent of the fixed point.

    Projects the noise-driven state component on the word regressors of the
    noise-driven output to get filtered states, then regresses the one-step
    filter update on the mode-gated innovation to recover per-letter gains.
    """
    from .decompose import decompose_series

    dec = decompose_series(model, traj, max_depth)
    ys = dec.y_s
    est = estimate_innovation(ys, traj.pi, model.switching, max_depth, ridge)
    z = compute_z(traj.pi, ys.values, model.switching, max_depth)
    X, start, _ = z.stacked(include_empty=False)
    start = max(start, ys.start)
    coef, _ = ridge_fit(X, dec.x_s.values, start, ridge)
    xhat = coef @ X
    # xhat(t+1) - sum_s pi_s(t) A_s xhat(t) = sum_s pi_s(t) Khat_s e(t)
    A_eff = np.einsum("st,sij->tij", traj.pi, model.A)
    lhs = xhat[:, start + 1:] - np.einsum(
        "tij,jt->it", A_eff[start:-1], xhat[:, start:-1])
    e = est.innovation.values
    gated = np.vstack([traj.pi[s, start:-1] * e[:, start:-1]
                       for s in range(model.p)])
    gcoef, _ = ridge_fit(gated, lhs, 0, ridge)
    return gcoef.reshape(model.nx, model.p, model.ny).swapaxes(0, 1)
