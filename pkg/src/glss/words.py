"""Mode words over a constrained alphabet.

A switched system with ``p`` discrete modes is indexed by words over the
alphabet ``{1, ..., p}``.  Consecutive letters are constrained by a directed
edge set: the word ``(s1, ..., sk)`` is admissible when every pair
``(s_i, s_{i+1})`` is an edge.  Matrix products attached to a word are taken
in reverse letter order (the last letter acts last), and word weights are the
product of the per-letter weights.

Everything downstream (covariance sums, z-regressors, rank tests) enumerates
words in length-major order with a lexicographic tie-break, so that ordering
is fixed here once.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidAlphabetError

Word = tuple[int, ...]

EPSILON: Word = ()


@dataclass(frozen=True)
class Alphabet:
    """Letters ``1..size`` plus the directed constraint edges between them.

    Every letter must have at least one outgoing edge, otherwise no admissible
    word can be extended past it and the series machinery breaks down.
    """

    size: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.size < 1:
            raise InvalidAlphabetError("alphabet needs at least one letter")
        letters = range(1, self.size + 1)
        for a, b in self.edges:
            if a not in letters or b not in letters:
                raise InvalidAlphabetError(f"edge ({a},{b}) uses an unknown letter")
        missing = [s for s in letters if not any(a == s for a, _ in self.edges)]
        if missing:
            raise InvalidAlphabetError(
                f"letters {missing} have no outgoing edge; every letter must "
                "be extendable"
            )

    @property
    def letters(self) -> range:
        return range(1, self.size + 1)

    def successors(self, letter: int) -> list[int]:
        return sorted(b for a, b in self.edges if a == letter)

    def predecessors(self, letter: int) -> list[int]:
        return sorted(a for a, b in self.edges if b == letter)

    def is_admissible(self, word: Word) -> bool:
        return all((a, b) in self.edges for a, b in zip(word, word[1:]))


def full_edges(size: int) -> frozenset[tuple[int, int]]:
    """Unconstrained edge set (every letter may follow every letter)."""
    return frozenset(itertools.product(range(1, size + 1), repeat=2))


def admissible_words(alphabet: Alphabet, max_depth: int) -> list[Word]:
    """Enumerate all admissible words of length 1..max_depth.

    Parameters
    ----------
    alphabet : Alphabet
        Letters and constraint edges.
    max_depth : int
        Longest word length to enumerate (>= 0; 0 yields an empty list).

    Returns
    -------
    list of tuple
        Words in length-major order, lexicographic within a length.  The
        empty word is never included; callers add it where needed.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    out: list[Word] = []
    current: list[Word] = [(s,) for s in alphabet.letters]
    for _ in range(max_depth):
        out.extend(current)
        current = [w + (s,) for w in current for s in alphabet.successors(w[-1])]
    return out


@dataclass
class WordTable:
    """Word-indexed weights and matrix products.

    ``weight[w]`` is the product of per-letter weights along ``w`` and
    ``product[w]`` the reverse-order matrix product; the empty word maps to
    ``(1.0, identity)``.
    """

    alphabet: Alphabet
    max_depth: int
    weight: dict[Word, float] = field(default_factory=dict)
    product: dict[Word, np.ndarray] = field(default_factory=dict)

    def words(self, include_empty: bool = False) -> list[Word]:
        ws = sorted((w for w in self.weight if w != EPSILON), key=lambda w: (len(w), w))
        return ([EPSILON] + ws) if include_empty else ws


def build_word_table(
    alphabet: Alphabet,
    matrices: np.ndarray,
    weights: np.ndarray,
    max_depth: int,
) -> WordTable:
    """Tabulate weights and matrix products for all admissible words.

    Parameters
    ----------
    matrices : (p, n, n) array
        One square matrix per letter.
    weights : (p,) array
        Positive per-letter weights.
    max_depth : int
        Longest word tabulated.

    Returns
    -------
    WordTable
        Products follow the reverse-order convention: extending ``w`` by
        letter ``s`` multiplies by the letter matrix on the left.
    """
    matrices = np.asarray(matrices, dtype=float)
    weights = np.asarray(weights, dtype=float)
    p = alphabet.size
    if matrices.shape[0] != p or weights.shape != (p,):
        raise ValueError("matrices/weights must carry one entry per letter")
    if np.any(weights <= 0.0):
        raise ValueError("word weights require strictly positive letter weights")
    n = matrices.shape[1]
    table = WordTable(alphabet, max_depth)
    table.weight[EPSILON] = 1.0
    table.product[EPSILON] = np.eye(n)
    frontier = [EPSILON]
    for depth in range(max_depth):
        nxt = []
        for w in frontier:
            succ = alphabet.letters if w == EPSILON else alphabet.successors(w[-1])
            for s in succ:
                ws = w + (s,)
                table.weight[ws] = table.weight[w] * weights[s - 1]
                table.product[ws] = matrices[s - 1] @ table.product[w]
                nxt.append(ws)
        frontier = nxt
    return table


def stability_radius(
    matrices: np.ndarray,
    weights: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> float:
    """Spectral radius of the weighted Kronecker-square operator.

    The operator maps X to ``sum_s weights[s] * A_s X A_s^T``; its spectral
    radius below one is the mean-square stationarity condition for the
    switched recursion.

    Uses a dense eigensolve for state dimension <= 8 and power iteration on
    the matrix-free operator above that.  The iteration cap guards spectra
    with several eigenvalues tied in modulus.
    """
    matrices = np.asarray(matrices, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = matrices.shape[1]
    if n <= 8:
        dim = n * n
        op = np.zeros((dim, dim))
        for a, w in zip(matrices, weights):
            op += w * np.kron(a, a)
        eigs = np.linalg.eigvals(op)
        return float(np.max(np.abs(eigs))) if dim else 0.0

    rng = np.random.default_rng(0)
    x = rng.normal(size=(n, n))
    x /= np.linalg.norm(x)
    rho = 0.0
    for _ in range(max_iter):
        y = np.zeros_like(x)
        for a, w in zip(matrices, weights):
            y += w * (a @ x @ a.T)
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        rho_new = norm
        x = y / norm
        if abs(rho_new - rho) <= tol * max(rho_new, 1.0):
            return float(rho_new)
        rho = rho_new
    return float(rho)


def word_indicator_series(pi: np.ndarray, word: Word) -> np.ndarray:
    """Time-aligned product of switching rows along a word.

    ``out[t]`` is the product ``pi[w1, t-k+1] * ... * pi[wk, t]`` for a word
    of length k; entries before index ``k-1`` are zero because they would
    need samples outside the window.
    """
    pi = np.asarray(pi, dtype=float)
    k = len(word)
    T = pi.shape[1]
    if k == 0:
        return np.ones(T)
    out = np.zeros(T)
    if k - 1 >= T:
        return out
    acc = pi[word[0] - 1, : T - k + 1].copy()
    for i, s in enumerate(word[1:], start=1):
        acc = acc * pi[s - 1, i : T - k + 1 + i]
    out[k - 1 :] = acc
    return out


def word_series_table(
    pi: np.ndarray, words: list[Word], *, include_empty: bool = False
) -> dict[Word, np.ndarray]:
    """Products along many words at once, reusing shared prefixes.

    Equivalent to calling :func:`word_indicator_series` per word but built
    incrementally; prefixes of requested words are computed (and returned)
    as a side effect.
    """
    pi = np.asarray(pi, dtype=float)
    T = pi.shape[1]
    table: dict[Word, np.ndarray] = {EPSILON: np.ones(T)}

    def build(w: Word) -> np.ndarray:
        got = table.get(w)
        if got is not None:
            return got
        if len(w) == 1:
            out = pi[w[0] - 1].copy()
        else:
            prefix = build(w[:-1])
            out = np.zeros(T)
            out[1:] = prefix[:-1] * pi[w[-1] - 1, 1:]
        table[w] = out
        return out

    for w in words:
        build(w)
    if not include_empty:
        table.pop(EPSILON, None)
    return table
