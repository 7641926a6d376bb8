"""Splitting outputs into input-driven and noise-driven components.

Two routes produce the same split and are kept deliberately separate: a
series route that needs the model (truncated word series of the state) and
a projection route that only sees data (ridge regression of the output on
the input word regressors).  Their agreement is itself one of the checks
in :func:`verify_decomposition`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularRegressionError, WindowError
from .model import GlssModel, _gain_series
from .reporting import ValidationReport
from .simulate import Series, Trajectory, ZSeries, compute_z, cross_moment_battery
from .switching import SwitchingSpec


def ridge_fit(
    X: np.ndarray,
    Y: np.ndarray,
    start: int,
    ridge: float | None = None,
) -> tuple[np.ndarray, float]:
    """Least squares of Y rows on X rows over columns >= start.

    ``ridge=None`` applies the default regularization
    ``1e-8 * trace(Gram) / n_features``; an explicit 0 requests plain least
    squares and raises if the Gram matrix is numerically singular.
    Returns (coefficients with shape (rows_Y, rows_X), ridge used).
    """
    Xv = X[:, start:]
    Yv = Y[:, start:]
    m, n = Xv.shape
    if n < 10 * m:
        raise WindowError(f"{n} samples for {m} regressors; need at least {10 * m}")
    gram = Xv @ Xv.T / n
    cross = Yv @ Xv.T / n
    if ridge is None:
        ridge = 1e-8 * np.trace(gram) / m
    if ridge == 0.0:
        eigs = np.linalg.eigvalsh(gram)
        if eigs.min() <= 1e-12 * max(eigs.max(), 1e-30):
            raise SingularRegressionError(
                "regressor Gram matrix is numerically singular; pass ridge > 0"
            )
    coef = np.linalg.solve(gram + ridge * np.eye(m), cross.T).T
    return coef, float(ridge)


def stack_input_regressors(zu: ZSeries) -> tuple[np.ndarray, int, list]:
    """Input-side regressors: all word entries plus the current input."""
    return zu.stacked(include_empty=True)


@dataclass
class DecompositionResult:
    """Split of an output window into input-driven and noise-driven parts.

    The series method also carries the state-level split; the projection
    method leaves those as None.
    """

    y_d: Series
    y_s: Series
    x_d: Series | None
    x_s: Series | None
    depth: int
    method: str
    diagnostics: dict = field(default_factory=dict)


def decompose_series(model: GlssModel, traj: Trajectory, max_depth: int) -> DecompositionResult:
    """Model-based split via the truncated stationary word series.

    ``y_d + y_s`` differs from the recorded output only by the shared
    series truncation tail, whose observed size and geometric rate estimate
    land in the diagnostics.
    """
    xd, start = _gain_series(model.A, [(model.B, traj.u)], traj.pi,
                             model.switching, max_depth)
    xs, _ = _gain_series(model.A, [(model.K, traj.v)], traj.pi,
                         model.switching, max_depth)
    yd = model.C @ xd + model.D @ traj.u
    ys = model.C @ xs + model.F @ traj.v
    resid = traj.y[:, start:] - yd[:, start:] - ys[:, start:]
    rho = model.stability_radius()
    rate = float(np.sqrt(rho) ** (max_depth + 1) / max(1.0 - np.sqrt(rho), 1e-12))
    diag = {
        "truncation_rms": float(np.sqrt(np.mean(resid ** 2))),
        "truncation_rate_estimate": rate,
        "radius": rho,
    }
    return DecompositionResult(Series(yd, start), Series(ys, start),
                               Series(xd, start), Series(xs, start),
                               max_depth, "series", diag)


def decompose_projection(
    traj: Trajectory,
    spec: SwitchingSpec,
    max_depth: int,
    ridge: float | None = None,
) -> DecompositionResult:
    """Data-only split: project the output on the input word regressors.

    One global ridge regression of y(t) on the stacked input regressors
    (word entries plus the current input); the complement is the noise
    part by definition, so additivity is exact.
    """
    zu = compute_z(traj, "u", spec, max_depth)
    X, start, words = stack_input_regressors(zu)
    coef, used = ridge_fit(X, traj.y, start, ridge)
    yd = coef @ X
    ys = traj.y - yd
    fit_rms = float(np.sqrt(np.mean((traj.y[:, start:] - yd[:, start:]) ** 2)))
    diag = {"ridge": used, "n_features": X.shape[0], "fit_residual_rms": fit_rms,
            "feature_words": words}
    return DecompositionResult(Series(yd, start), Series(ys, start), None, None,
                               max_depth, "projection", diag)


def verify_decomposition(
    model: GlssModel,
    traj: Trajectory,
    max_depth: int,
    tolerance: float = 5.0,
    rel_tol: float = 0.05,
    ridge: float | None = None,
) -> ValidationReport:
    """Statistical certificate for the two-part output decomposition.

    (a) the series and projection splits agree in relative rms,
    (b) the noise process and its word regressors are orthogonal to the
        input span, (c) so is the noise-driven state component, and
    (d) the two output components are mutually orthogonal.
    Pair thresholds scale as ``tolerance * sigma_hat / sqrt(T)``.
    """
    report = ValidationReport("output decomposition",
                              info={"depth": max_depth, "T": traj.T})
    ser = decompose_series(model, traj, max_depth)
    proj = decompose_projection(traj, model.switching, max_depth, ridge)
    start = max(ser.y_d.start, proj.y_d.start)
    scale = float(np.sqrt(np.mean(traj.y[:, start:] ** 2)))
    dist = float(np.sqrt(np.mean(
        (ser.y_d.values[:, start:] - proj.y_d.values[:, start:]) ** 2)))
    report.add("(a) series vs projection, relative rms", dist / max(scale, 1e-30),
               rel_tol)
    report.info["series_vs_projection_rms"] = dist

    zv = compute_z(traj, "v", model.switching, max_depth)
    zu = compute_z(traj, "u", model.switching, max_depth)
    A, a_start, _ = zv.stacked(include_empty=True)
    B, b_start, _ = zu.stacked(include_empty=True)
    s0 = max(a_start, b_start, start)
    mean, se = cross_moment_battery(A[:, s0:], B[:, s0:])
    stat_idx = np.abs(mean / (tolerance * se + 1e-12)).argmax()
    report.add(f"(b) noise family vs input span, worst of {mean.size} entries",
               np.abs(mean).flat[stat_idx],
               (tolerance * se + 1e-12).flat[stat_idx])

    mean_c, se_c = cross_moment_battery(ser.x_s.values[:, s0:], B[:, s0:])
    idx = np.abs(mean_c / (tolerance * se_c + 1e-12)).argmax()
    report.add("(c) noise-driven state vs input span, worst entry",
               np.abs(mean_c).flat[idx], (tolerance * se_c + 1e-12).flat[idx])

    mean_d, se_d = cross_moment_battery(ser.y_d.values[:, s0:],
                                        ser.y_s.values[:, s0:])
    idx = np.abs(mean_d / (tolerance * se_d + 1e-12)).argmax()
    report.add("(d) component cross moment E[y_d y_s^T], worst entry",
               np.abs(mean_d).flat[idx], (tolerance * se_d + 1e-12).flat[idx])
    return report


def export_decomposition(traj: Trajectory, result: DecompositionResult, path) -> None:
    """Trajectory CSV schema extended with the component column groups."""
    start = result.y_d.start
    groups = [("u", traj.u), ("pi", traj.pi), ("v", traj.v),
              ("x", traj.x), ("y", traj.y),
              ("yd", result.y_d.values), ("ys", result.y_s.values)]
    if result.x_d is not None:
        groups.append(("xd", result.x_d.values))
    if result.x_s is not None:
        groups.append(("xs", result.x_s.values))
    header = ["t"]
    for name, arr in groups:
        header.extend(f"{name}_{i + 1}" for i in range(arr.shape[0]))
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for t in range(start, traj.T):
            row = [str(traj.t_start + t)]
            for _, arr in groups:
                row.extend(f"{val:.17g}" for val in arr[:, t])
            fh.write(",".join(row) + "\n")
