"""Switching processes: construction, sampling and path validation.

Three families are supported.  All expose the same interface: per-letter
weights ``p`` (conditional second-moment constants), combination
coefficients ``alpha`` with ``sum_s alpha_s * pi_s(t) == 1`` along every
path, and a constraint edge set.

``iid-white``
    Letter 1 is the constant 1; letters >= 2 are independent zero-mean
    sequences (scaled Rademacher or Gaussian) with ``p_s = E[pi_s^2]``.
    All letter pairs are edges.

``discrete-iid``
    ``pi_s(t)`` indicates an i.i.d. categorical draw; ``p_s`` is the
    category probability.  All letter pairs are edges.

``markov-embedded``
    Letters are ordered state pairs ``(next, current)`` of a finite Markov
    chain; ``pi_(q2,q1)(t)`` indicates the transition ``q1 -> q2`` at time
    t, ``p_(q2,q1)`` is the transition probability (required positive), and
    edges chain pairs that share the middle state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidTransitionError, WindowError
from .reporting import ValidationReport
from .words import Alphabet, Word, admissible_words, full_edges, word_series_table

KINDS = ("iid-white", "discrete-iid", "markov-embedded")


@dataclass(frozen=True)
class SwitchingSpec:
    """Distributional description of a switching process.

    ``weights`` are the per-letter conditional second-moment constants,
    ``alpha`` the affine-combination coefficients, ``second_moments`` the
    unconditional ``E[pi_s(t)^2]`` (needed to convert between letter-wise
    and driving-noise covariances), and ``params`` the kind-specific
    sampling parameters.
    """

    kind: str
    alphabet: Alphabet
    weights: tuple[float, ...]
    alpha: tuple[float, ...]
    second_moments: tuple[float, ...]
    params: dict

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidTransitionError(f"unknown switching kind {self.kind!r}")
        p = self.alphabet.size
        if not (len(self.weights) == len(self.alpha) == len(self.second_moments) == p):
            raise InvalidTransitionError("per-letter vectors must match alphabet size")

    @property
    def p(self) -> int:
        return self.alphabet.size

    def letter_pairs(self) -> list[tuple[int, int]] | None:
        """(next, current) state pairs for markov-embedded specs, else None."""
        if self.kind != "markov-embedded":
            return None
        m = self.params["states"]
        return [(q2, q1) for q1 in range(1, m + 1) for q2 in range(1, m + 1)]


def make_iid_white_spec(second_moments, law: str = "rademacher") -> SwitchingSpec:
    """Spec with a constant first letter and independent zero-mean others.

    ``second_moments[0]`` must be 1 (the constant letter); the remaining
    entries are the variances of the scaled components.
    """
    sm = tuple(float(v) for v in second_moments)
    if len(sm) < 2:
        raise InvalidTransitionError("iid-white needs at least two letters")
    if abs(sm[0] - 1.0) > 1e-12:
        raise InvalidTransitionError("letter 1 is the constant 1, so its second moment must be 1")
    if any(v <= 0 for v in sm):
        raise InvalidTransitionError("second moments must be positive")
    if law not in ("rademacher", "gaussian"):
        raise InvalidTransitionError(f"unknown component law {law!r}")
    p = len(sm)
    alphabet = Alphabet(p, full_edges(p))
    alpha = (1.0,) + (0.0,) * (p - 1)
    return SwitchingSpec("iid-white", alphabet, sm, alpha, sm,
                         {"law": law, "second_moments": list(sm)})


def make_discrete_iid_spec(probabilities) -> SwitchingSpec:
    """Spec for i.i.d. categorical mode indicators.

    Zero probabilities are accepted for sampling (the letter simply never
    fires), but any word machinery that normalizes by the weights requires
    them positive.
    """
    q = np.asarray(probabilities, dtype=float)
    if q.ndim != 1 or len(q) < 1:
        raise InvalidTransitionError("probabilities must be a nonempty vector")
    if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-12:
        raise InvalidTransitionError("probabilities must be nonnegative and sum to 1")
    p = len(q)
    alphabet = Alphabet(p, full_edges(p))
    probs = tuple(float(v) for v in q)
    ones = (1.0,) * p
    return SwitchingSpec("discrete-iid", alphabet, probs, ones, probs,
                         {"probabilities": list(probs)})


def stationary_distribution(transition: np.ndarray, tol: float = 1e-12,
                            max_iter: int = 100_000) -> np.ndarray:
    """Left Perron vector of a row-stochastic matrix, by power iteration."""
    P = np.asarray(transition, dtype=float)
    m = P.shape[0]
    s = np.full(m, 1.0 / m)
    for _ in range(max_iter):
        s_new = s @ P
        s_new /= s_new.sum()
        if np.abs(s_new - s).max() < tol:
            return s_new
        s = s_new
    return s


def make_markov_spec(transition) -> SwitchingSpec:
    """Embed a finite Markov chain as a pair-indexed switching process.

    ``transition[q1-1, q2-1]`` is the probability of moving from state q1
    to state q2; every entry must be strictly positive so that all pair
    letters have positive weight.
    """
    P = np.asarray(transition, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 1:
        raise InvalidTransitionError("transition must be a square matrix")
    m = P.shape[0]
    if np.any(P <= 0.0):
        raise InvalidTransitionError("all transition probabilities must be positive")
    if np.abs(P.sum(axis=1) - 1.0).max() > 1e-10:
        raise InvalidTransitionError("transition rows must sum to 1")
    # letters enumerate pairs (q2, q1) = (next, current), current-major
    pairs = [(q2, q1) for q1 in range(1, m + 1) for q2 in range(1, m + 1)]
    index = {pair: i + 1 for i, pair in enumerate(pairs)}
    edges = set()
    for (q2, q1) in pairs:
        for q3 in range(1, m + 1):
            edges.add((index[(q2, q1)], index[(q3, q2)]))
    alphabet = Alphabet(m * m, frozenset(edges))
    weights = tuple(float(P[q1 - 1, q2 - 1]) for (q2, q1) in pairs)
    s = stationary_distribution(P)
    second = tuple(float(s[q1 - 1] * P[q1 - 1, q2 - 1]) for (q2, q1) in pairs)
    ones = (1.0,) * (m * m)
    return SwitchingSpec("markov-embedded", alphabet, weights, ones, second,
                         {"states": m, "transition": P.tolist()})


def sample_switching(spec: SwitchingSpec, T: int, seed: int) -> np.ndarray:
    """Draw one switching path as a (p, T) array, reproducible from the seed."""
    if T < 1:
        raise ValueError("T must be positive")
    rng = np.random.default_rng(seed)
    p = spec.p
    pi = np.zeros((p, T))
    if spec.kind == "iid-white":
        pi[0] = 1.0
        scale = np.sqrt(np.asarray(spec.weights[1:]))
        if spec.params["law"] == "rademacher":
            draws = rng.integers(0, 2, size=(p - 1, T)) * 2.0 - 1.0
        else:
            draws = rng.standard_normal(size=(p - 1, T))
        pi[1:] = scale[:, None] * draws
    elif spec.kind == "discrete-iid":
        q = np.asarray(spec.weights)
        theta = rng.choice(p, size=T, p=q)
        pi[theta, np.arange(T)] = 1.0
    else:
        P = np.asarray(spec.params["transition"])
        m = P.shape[0]
        s = stationary_distribution(P)
        theta = np.zeros(T + 1, dtype=int)
        theta[0] = rng.choice(m, p=s)
        # cumulative-inverse draws keep the path reproducible row by row
        u = rng.random(T)
        cum = np.cumsum(P, axis=1)
        for t in range(T):
            theta[t + 1] = np.searchsorted(cum[theta[t]], u[t], side="right")
        pairs = spec.letter_pairs()
        index = {pair: i for i, pair in enumerate(pairs)}
        for t in range(T):
            pi[index[(theta[t + 1] + 1, theta[t] + 1)], t] = 1.0
    return pi


def _mean_and_scale(series: np.ndarray) -> tuple[float, float]:
    """Mean of a residual series and its standard-error scale."""
    mu = float(series.mean())
    sd = float(series.std())
    return mu, sd


def validate_admissibility(
    pi: np.ndarray,
    spec: SwitchingSpec,
    max_depth: int = 3,
    tolerance: float = 5.0,
    nonadmissible_cap: int = 512,
) -> ValidationReport:
    """Statistical certificate that a sampled path matches a switching spec.

    Checks, in order: (a) word products of non-admissible words vanish,
    (b) the conditional product-moment identities hold unconditionally as
    zero-mean residual series, (c) the affine combination of letters is
    exactly 1, (d) first/second moments agree across window halves.
    Thresholds scale as ``tolerance * sigma_hat / sqrt(T)``.
    """
    pi = np.asarray(pi, dtype=float)
    p, T = pi.shape
    if p != spec.p:
        raise ValueError("path row count does not match the alphabet size")
    if T - max_depth < 1_000:
        raise WindowError(f"need T - max_depth >= 1000 samples, got {T - max_depth}")
    report = ValidationReport("switching admissibility", info={"T": T, "depth": max_depth})
    alphabet = spec.alphabet
    weights = np.asarray(spec.weights)
    alpha = np.asarray(spec.alpha)
    eps = 1e-10

    # (a) non-admissible words vanish along the path
    admissible = set(admissible_words(alphabet, max_depth))
    checked = 0
    for k in range(2, max_depth + 1):
        if checked >= nonadmissible_cap:
            break
        stack: list[Word] = [(s,) for s in alphabet.letters]
        for _ in range(k - 1):
            stack = [w + (s,) for w in stack for s in alphabet.letters]
        for w in stack:
            if w in admissible or checked >= nonadmissible_cap:
                continue
            prod = np.ones(T - k + 1)
            for i, s in enumerate(w):
                prod = prod * pi[s - 1, i : T - k + 1 + i]
            report.add(f"(a) vanishing word {w}", np.abs(prod).max(), eps)
            checked += 1
    if checked == 0:
        report.info["nonadmissible"] = "none below depth cap (full edge set)"

    # (b) conditional product moments, in unconditional residual form:
    # E[pi_{ws}(t) pi_{vs'}(t)] - 1{s==s', ws and vs' admissible} * p_s *
    # E[pi_w(t-1) pi_v(t-1)] == 0 for all words w, v (empty allowed) except
    # the fully empty diagonal pair, whose value is kind-dependent.
    prefixes: list[Word] = [()] + admissible_words(alphabet, max_depth - 1)
    series = word_series_table(pi, [w for w in prefixes if w], include_empty=True)
    series[()] = np.ones(T)
    ext: dict[Word, np.ndarray] = {}
    for w in prefixes:
        for s in alphabet.letters:
            ws = w + (s,)
            if ws not in ext:
                arr = np.zeros(T)
                arr[1:] = series[w][:-1] * pi[s - 1, 1:]
                if len(ws) == 1:
                    arr = pi[s - 1]
                ext[ws] = arr
    start = max_depth
    worst = (0.0, 1.0, None)
    n_b = 0
    for i, w in enumerate(prefixes):
        for v in prefixes[i:]:
            for s in alphabet.letters:
                for s2 in alphabet.letters:
                    if w == () and v == () and s == s2:
                        continue  # E[pi_s^2] has no kind-independent value
                    a = ext[w + (s,)][start:]
                    b = ext[v + (s2,)][start:]
                    prodab = a * b
                    if s == s2 and alphabet.is_admissible(w + (s,)) \
                            and alphabet.is_admissible(v + (s,)):
                        target = weights[s - 1] * (series[w][start - 1: -1]
                                                   * series[v][start - 1: -1])
                    else:
                        target = np.zeros_like(prodab)
                    resid = prodab - target
                    mu, sd = _mean_and_scale(resid)
                    thr = tolerance * sd / np.sqrt(len(resid)) + eps
                    n_b += 1
                    if abs(mu) / thr > worst[0] / worst[1]:
                        worst = (abs(mu), thr, (w + (s,), v + (s2,)))
                    if abs(mu) > thr:
                        report.add(f"(b) product moment {w + (s,)} x {v + (s2,)}",
                                   abs(mu), thr)
    report.add(f"(b) product moments, worst of {n_b} pairs",
               worst[0], worst[1], detail=f"pair {worst[2]}")

    # (c) affine combination is exactly 1 along the path
    comb = alpha @ pi
    report.add("(c) sum alpha_s pi_s == 1", np.abs(comb - 1.0).max(), eps)

    # (d) stationarity: moments agree across window halves
    half = T // 2
    for s in alphabet.letters:
        for name, arr in (("mean", pi[s - 1]), ("second moment", pi[s - 1] ** 2)):
            m1, v1 = arr[:half].mean(), arr[:half].var()
            m2, v2 = arr[half:].mean(), arr[half:].var()
            thr = tolerance * np.sqrt(v1 / half + v2 / (T - half)) + eps
            report.add(f"(d) stationary {name}, letter {s}", abs(m1 - m2), thr)
    return report
