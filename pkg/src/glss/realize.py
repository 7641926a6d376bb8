"""Minimality rank tests and basis-change recovery between models.

Observability stacks output maps along admissible words; reachability
concatenates noise/input injection maps propagated along admissible words,
weighted by the word probabilities and the noise covariance factors.  Both
matrices are truncated at word length ``nx - 1``; ranks saturate there on
generic instances, which the tests verify empirically.  Two minimal models
describing the same output law differ by a state basis change, recovered
here from the observability matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, HypothesisViolationError
from .model import GlssModel
from .words import build_word_table


def _as_glss(model) -> GlssModel:
    return model.as_glss() if hasattr(model, "as_glss") else model


def observability_matrix(model, depth: int | None = None) -> np.ndarray:
    """Stack sqrt(p_w) * C * A_w over the empty word and admissible words."""
    m = _as_glss(model)
    depth = m.nx - 1 if depth is None else depth
    blocks = [m.C]
    if depth > 0:
        table = build_word_table(m.switching.alphabet, m.A,
                                 np.asarray(m.switching.weights), depth)
        for w in table.words():
            blocks.append(np.sqrt(table.weight[w]) * (m.C @ table.product[w]))
    return np.vstack(blocks)


def reachability_matrix(model, depth: int | None = None) -> np.ndarray:
    """Concatenate propagated excitation blocks over admissible words.

    For every letter s and admissible continuation w (so the word s,w is
    admissible), the block is sqrt(p_s p_w) * A_w @ [K_s Q_s^{1/2}, B_s R_s^{1/2}].
    Covariance square roots weight the directions actually excited.
    """
    m = _as_glss(model)
    depth = m.nx - 1 if depth is None else depth
    weights = np.asarray(m.switching.weights)
    gens = []
    for s in range(m.p):
        cols = [m.K[s] @ np.linalg.cholesky(m.Q[s]),
                m.B[s] @ np.linalg.cholesky(m.R[s])]
        gens.append(np.sqrt(weights[s]) * np.hstack(cols))
    blocks = list(gens)
    if depth > 0:
        table = build_word_table(m.switching.alphabet, m.A, weights, depth)
        alphabet = m.switching.alphabet
        for w in table.words():
            prop = np.sqrt(table.weight[w]) * table.product[w]
            for s in range(m.p):
                if (s + 1, w[0]) in alphabet.edges:
                    blocks.append(prop @ gens[s])
    return np.hstack(blocks)


def _numerical_rank(matrix: np.ndarray, rtol: float) -> tuple[int, np.ndarray]:
    sv = np.linalg.svd(matrix, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0, sv
    return int(np.sum(sv > rtol * sv[0])), sv


@dataclass(frozen=True)
class RankReport:
    observability: np.ndarray
    reachability: np.ndarray
    observability_singular_values: np.ndarray
    reachability_singular_values: np.ndarray
    observability_rank: int
    reachability_rank: int
    state_dim: int
    tolerance: float

    @property
    def minimal(self) -> bool:
        return (self.observability_rank == self.state_dim
                and self.reachability_rank == self.state_dim)

    def summary(self) -> str:
        verdict = "minimal" if self.minimal else "not minimal"
        return (f"observability rank {self.observability_rank}/{self.state_dim}, "
                f"reachability rank {self.reachability_rank}/{self.state_dim}: "
                f"{verdict}")

    def to_dict(self) -> dict:
        return {
            "state_dim": self.state_dim,
            "tolerance": self.tolerance,
            "observability_rank": self.observability_rank,
            "reachability_rank": self.reachability_rank,
            "observability_singular_values":
                self.observability_singular_values.tolist(),
            "reachability_singular_values":
                self.reachability_singular_values.tolist(),
            "minimal": self.minimal,
        }


def check_minimality(model, rank_tolerance: float = 1e-8) -> RankReport:
    """Numerical ranks of the word-indexed observability/reachability matrices."""
    m = _as_glss(model)
    O = observability_matrix(m)
    Rm = reachability_matrix(m)
    orank, osv = _numerical_rank(O, rank_tolerance)
    rrank, rsv = _numerical_rank(Rm, rank_tolerance)
    return RankReport(O, Rm, osv, rsv, orank, rrank, m.nx, rank_tolerance)


@dataclass(frozen=True)
class Isomorphism:
    """Basis change x_hat = T x relating two models, with fit residuals.

    ``residuals`` holds the worst relative mismatch per constraint family:
    dynamics (T A T^-1 vs A_hat), gains (T [K, B] vs [K_hat, B_hat]) and
    output map (C T^-1 vs C_hat).  ``found`` requires every residual at or
    below the tolerance and an invertible T.
    """

    T: np.ndarray
    residuals: dict
    condition_number: float
    tolerance: float
    found: bool

    def summary(self) -> str:
        worst = max(self.residuals.values())
        state = "isomorphism found" if self.found else "no isomorphism"
        return (f"{state}: worst residual {worst:.3e} "
                f"(tolerance {self.tolerance:.1e}), cond(T) = "
                f"{self.condition_number:.3e}")

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "T": self.T.tolist(),
            "condition_number": self.condition_number,
            "tolerance": self.tolerance,
            "residuals": dict(self.residuals),
        }


def _rel(diff: np.ndarray, ref: np.ndarray) -> float:
    return float(np.linalg.norm(diff) / max(1.0, np.linalg.norm(ref)))


def _span_containment(inner: np.ndarray, outer: np.ndarray,
                      rtol: float = 1e-8) -> float:
    """Relative residual of projecting inner's columns on outer's column span."""
    norm = np.linalg.norm(inner)
    if norm == 0.0:
        return 0.0
    U, sv, _ = np.linalg.svd(outer, full_matrices=False)
    keep = sv > (rtol * sv[0] if sv.size and sv[0] > 0 else np.inf)
    basis = U[:, keep]
    resid = inner - basis @ (basis.T @ inner)
    return float(np.linalg.norm(resid) / norm)


def find_isomorphism(
    model_a,
    model_b,
    residual_tolerance: float = 1e-8,
    rank_tolerance: float = 1e-8,
) -> Isomorphism:
    """Recover the basis change between two minimal models of one output law.

    T solves the stacked observability equation O_b T = O_a in least
    squares; the constraint families are then evaluated directly.  A
    residual above tolerance yields ``found=False`` rather than an error;
    violated preconditions (mismatched shapes or switching, non-minimal
    input, unequal feedthrough, degenerate noise moments, input columns
    outside the noise span) raise instead.
    """
    a = _as_glss(model_a)
    b = _as_glss(model_b)
    if (a.nx, a.nu, a.ny, a.nn) != (b.nx, b.nu, b.ny, b.nn):
        raise DimensionError("state/input/output/noise dimensions differ")
    if a.switching.alphabet != b.switching.alphabet or not np.allclose(
            a.switching.weights, b.switching.weights):
        raise DimensionError("switching structures differ")
    if _rel(a.D - b.D, b.D) > max(residual_tolerance, 1e-10):
        raise HypothesisViolationError("feedthrough matrices differ")
    for m, tag in ((a, "first"), (b, "second")):
        for s in range(m.p):
            if np.linalg.eigvalsh((m.Q[s] + m.Q[s].T) / 2).min() <= 0:
                raise HypothesisViolationError(
                    f"{tag} model: noise second moment of letter {s + 1} "
                    "is singular")
    for s in range(a.p):
        stacked_b = np.vstack([a.B[s], b.B[s]])
        stacked_k = np.vstack([a.K[s], b.K[s]])
        gap = _span_containment(stacked_b, stacked_k)
        if gap > 1e-6:
            raise HypothesisViolationError(
                f"letter {s + 1}: input columns leave the noise span "
                f"(relative gap {gap:.2e})")
    ra = check_minimality(a, rank_tolerance)
    rb = check_minimality(b, rank_tolerance)
    if not ra.minimal or not rb.minimal:
        raise HypothesisViolationError(
            f"minimality required: first {ra.summary()}; second {rb.summary()}")

    Oa = observability_matrix(a)
    Ob = observability_matrix(b)
    T, *_ = np.linalg.lstsq(Ob, Oa, rcond=None)
    cond = float(np.linalg.cond(T))
    invertible = np.isfinite(cond) and cond < 1e12
    residuals = {"dynamics": np.inf, "gains": np.inf, "output_map": np.inf}
    if invertible:
        Tinv = np.linalg.inv(T)
        residuals["dynamics"] = max(
            _rel(T @ a.A[s] @ Tinv - b.A[s], b.A[s]) for s in range(a.p))
        residuals["gains"] = max(
            _rel(np.hstack([T @ a.K[s] - b.K[s], T @ a.B[s] - b.B[s]]),
                 np.hstack([b.K[s], b.B[s]]))
            for s in range(a.p))
        residuals["output_map"] = _rel(a.C @ Tinv - b.C, b.C)
    found = invertible and all(v <= residual_tolerance
                               for v in residuals.values())
    return Isomorphism(T, residuals, cond, residual_tolerance, found)
