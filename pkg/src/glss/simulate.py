"""Trajectory sampling, normalized word regressors and whiteness checks."""

from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InstabilityError, WindowError
from .model import GlssModel
from .reporting import ValidationReport
from .switching import SwitchingSpec, sample_switching
from .words import EPSILON, Word, admissible_words, word_series_table

_MAGIC = b"GLSSTRJ\x00"
_HEADER = struct.Struct("<8s6HQq3QI")
assert _HEADER.size == 64


@dataclass(frozen=True)
class Seeds:
    """Independent seeds for the switching, input and noise streams."""

    switching: int = 0
    input: int = 1
    noise: int = 2

    def astuple(self) -> tuple[int, int, int]:
        return (self.switching, self.input, self.noise)


@dataclass
class Trajectory:
    """One sampled window of the joint process, columns indexed by time."""

    u: np.ndarray
    pi: np.ndarray
    v: np.ndarray
    x: np.ndarray
    y: np.ndarray
    seeds: Seeds = field(default_factory=Seeds)
    t_start: int = 0
    burn_in: int = 0

    @property
    def T(self) -> int:
        return self.y.shape[1]

    def signal(self, name: str) -> np.ndarray:
        try:
            return {"u": self.u, "pi": self.pi, "v": self.v,
                    "x": self.x, "y": self.y}[name]
        except KeyError:
            raise LookupError(f"unknown base process {name!r}") from None


def default_burn_in(rho: float, cap: int = 10_000) -> int:
    """Steps until the zero-state transient is below 1e-8 in mean square."""
    if rho <= 0.0:
        return 1
    if rho >= 1.0:
        return cap
    need = math.ceil(2.0 * math.log(1e-8) / math.log(rho))
    return int(min(max(need, 1), cap))


def _iterate_state(A_eff: np.ndarray, drive: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """x(t+1) = A_eff[t] @ x(t) + drive[:, t]; returns x over the window."""
    T = drive.shape[1]
    out = np.empty((x0.shape[0], T + 1))
    out[:, 0] = x0
    x = x0
    for t in range(T):
        x = A_eff[t] @ x + drive[:, t]
        out[:, t + 1] = x
    return out


def _effective_terms(model: GlssModel, pi, u, v):
    """Per-step combined state matrix and input+noise drive."""
    A_eff = np.einsum("st,sij->tij", pi, model.A)
    drive = np.einsum("st,sij,jt->it", pi, model.B, u) \
        + np.einsum("st,sij,jt->it", pi, model.K, v)
    return A_eff, drive


def simulate(
    model: GlssModel,
    T: int,
    seeds: Seeds = Seeds(),
    burn_in: int | None = None,
) -> Trajectory:
    """Sample a stationary trajectory of length T.

    The switching, input and noise streams are drawn independently from the
    three seeds, the model requires letter-wise noise moments consistent
    with independent sampling (see ``GlssModel.driving_covariances``), and
    the recursion starts from zero ``burn_in`` steps before the window.
    """
    if T < 1:
        raise ValueError("T must be positive")
    rho = model.stability_radius()
    if rho >= 1.0:
        raise InstabilityError(
            f"cannot sample a stationary trajectory: weighted Kronecker-square "
            f"spectral radius {rho:.6f} >= 1"
        )
    Qv, Ru = model.driving_covariances()
    if burn_in is None:
        burn_in = default_burn_in(rho)
    H = T + burn_in
    pi = sample_switching(model.switching, H, seeds.switching)
    rng_u = np.random.default_rng(seeds.input)
    rng_v = np.random.default_rng(seeds.noise)
    Lu = np.linalg.cholesky(Ru) if model.nu else np.zeros((0, 0))
    Lv = np.linalg.cholesky(Qv) if model.nn else np.zeros((0, 0))
    u = Lu @ rng_u.standard_normal((model.nu, H))
    v = Lv @ rng_v.standard_normal((model.nn, H))
    A_eff, drive = _effective_terms(model, pi, u, v)
    xs = _iterate_state(A_eff, drive, np.zeros(model.nx))
    x = xs[:, burn_in:-1]
    sl = slice(burn_in, H)
    y = model.C @ x + model.D @ u[:, sl] + model.F @ v[:, sl]
    return Trajectory(u[:, sl].copy(), pi[:, sl].copy(), v[:, sl].copy(),
                      x.copy(), y, seeds=seeds, burn_in=burn_in)


def replay(model: GlssModel, traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Recompute (x, y) from the stored inputs, starting at the stored x(t0).

    Uses the same arithmetic as :func:`simulate`, so a trajectory produced
    by the same model reproduces bit for bit from the first sample on.
    """
    A_eff, drive = _effective_terms(model, traj.pi, traj.u, traj.v)
    xs = _iterate_state(A_eff[:-1], drive[:, :-1], traj.x[:, 0])
    y = model.C @ xs + model.D @ traj.u + model.F @ traj.v
    return xs, y


def simulate_batch(
    model: GlssModel,
    T: int,
    seeds_list: list[Seeds],
    workers: int | None = None,
) -> list[Trajectory]:
    """Independent trajectories, one per seed triple.

    Worker count defaults to the GLSS_THREADS environment variable (1 if
    unset); results are returned in input order regardless of scheduling.
    """
    if workers is None:
        workers = int(os.environ.get("GLSS_THREADS", "1"))
    workers = max(1, workers)
    if workers == 1:
        return [simulate(model, T, s) for s in seeds_list]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: simulate(model, T, s), seeds_list))


@dataclass
class Series:
    """Array of time samples with the first statistically valid column."""

    values: np.ndarray
    start: int = 0

    @property
    def T(self) -> int:
        return self.values.shape[1]

    def valid(self) -> np.ndarray:
        return self.values[:, self.start:]


@dataclass
class ZSeries:
    """Normalized word regressors z^r_w(t) = r(t-|w|) pi_w(t-1) / sqrt(p_w).

    ``entries[()]`` is the base process itself; other entries are valid
    from index ``len(word)`` (earlier columns are zero).
    """

    base: str
    depth: int
    entries: dict[Word, Series]

    def words(self, include_empty: bool = True) -> list[Word]:
        ws = sorted((w for w in self.entries if w != EPSILON),
                    key=lambda w: (len(w), w))
        return ([EPSILON] + ws) if include_empty else ws

    def stacked(self, include_empty: bool = True) -> tuple[np.ndarray, int, list[Word]]:
        """All regressors stacked row-wise plus the common valid start."""
        ws = self.words(include_empty)
        mats = [self.entries[w].values for w in ws]
        start = max(self.entries[w].start for w in ws)
        return np.vstack(mats), start, ws


def compute_z(
    source: Trajectory | np.ndarray,
    r: str | np.ndarray,
    spec: SwitchingSpec,
    max_depth: int,
    budget: int = 200_000_000,
    name: str | None = None,
) -> ZSeries:
    """Word regressor family for a base process over a switching path.

    ``source`` is either a trajectory (then ``r`` names one of its signals)
    or the raw (p, T) switching path with ``r`` an explicit (d, T) array;
    ``name`` labels the family in downstream reports.  Entries for
    non-admissible words are omitted (they vanish identically).
    """
    if isinstance(source, Trajectory):
        pi = source.pi
        base = source.signal(r) if isinstance(r, str) else np.asarray(r, dtype=float)
        if name is None:
            name = r if isinstance(r, str) else "series"
    else:
        pi = np.asarray(source, dtype=float)
        if isinstance(r, str):
            raise LookupError("named signals need a Trajectory source")
        base = np.asarray(r, dtype=float)
        name = name or "series"
    if base.ndim == 1:
        base = base[None, :]
    d, T = base.shape
    if pi.shape[1] != T:
        raise DimensionError("switching path and base process lengths differ")
    words = admissible_words(spec.alphabet, max_depth)
    total = (len(words) + 1) * d * T
    if total > budget:
        raise ValueError(
            f"regressor family needs {total} entries exceeding the budget "
            f"{budget}; lower max_depth"
        )
    weights = np.asarray(spec.weights)
    if np.any(weights <= 0):
        raise ValueError("z normalization requires positive letter weights")
    prods = word_series_table(pi, words)
    entries: dict[Word, Series] = {EPSILON: Series(base, 0)}
    for w in words:
        k = len(w)
        pw = math.prod(weights[s - 1] for s in w)
        vals = np.zeros((d, T))
        if k < T:
            vals[:, k:] = base[:, : T - k] * (prods[w][k - 1: T - 1] / math.sqrt(pw))
        entries[w] = Series(vals, k)
    return ZSeries(name, max_depth, entries)


@dataclass
class CovEstimate:
    value: np.ndarray
    stderr: np.ndarray
    count: int


def empirical_cov(a: Series | np.ndarray, b: Series | np.ndarray,
                  min_count: int = 100) -> CovEstimate:
    """Time-average cross moment E[a(t) b(t)^T] with per-entry standard error."""
    av, astart = (a.values, a.start) if isinstance(a, Series) else (np.asarray(a), 0)
    bv, bstart = (b.values, b.start) if isinstance(b, Series) else (np.asarray(b), 0)
    if av.ndim == 1:
        av = av[None, :]
    if bv.ndim == 1:
        bv = bv[None, :]
    if av.shape[1] != bv.shape[1]:
        raise DimensionError("series lengths differ")
    start = max(astart, bstart)
    n = av.shape[1] - start
    if n < min_count:
        raise WindowError(f"only {n} aligned samples, need {min_count}")
    aa, bb = av[:, start:], bv[:, start:]
    value = aa @ bb.T / n
    second = (aa ** 2) @ (bb.T ** 2) / n
    var = np.maximum(second - value ** 2, 0.0)
    return CovEstimate(value, np.sqrt(var / n), n)


def cross_moment_battery(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Means and standard errors of all row products of two stacked families.

    Returns (mean, stderr) of shape (rows_A, rows_B); both computed with two
    matrix products so large batteries stay cheap.
    """
    n = A.shape[1]
    mean = A @ B.T / n
    second = (A ** 2) @ (B.T ** 2) / n
    var = np.maximum(second - mean ** 2, 0.0)
    return mean, np.sqrt(var / n)


def whiteness_report(
    z: ZSeries,
    tolerance: float = 5.0,
    nonsingular_rtol: float = 1e-8,
) -> ValidationReport:
    """Certificate that a process is white in the normalized word coordinates.

    Distinct words must have vanishing cross moments, repeating a word must
    reproduce its head-letter second moment, and the letter-level second
    moments must be nonsingular.  Pair checks are thresholded at
    ``tolerance * sigma_hat / sqrt(T)``; the report's pass fraction is the
    headline number for large batteries.
    """
    words = z.words(include_empty=True)
    stackedA, start, _ = z.stacked()
    d = z.entries[EPSILON].values.shape[0]
    start = max(start, max(len(w) for w in words) if words else 0)
    X = stackedA[:, start:]
    T_eff = X.shape[1]
    if T_eff < 100:
        raise WindowError("window too short after alignment")
    mean, stderr = cross_moment_battery(X, X)
    report = ValidationReport(f"whiteness of {z.base!r}",
                              info={"T_eff": T_eff, "depth": z.depth})
    eps = 1e-12
    for i, w in enumerate(words):
        for j in range(i + 1, len(words)):
            blk = mean[i * d:(i + 1) * d, j * d:(j + 1) * d]
            se = stderr[i * d:(i + 1) * d, j * d:(j + 1) * d]
            stat = np.abs(blk).max()
            thr = (tolerance * se + eps).flat[np.abs(blk).argmax()]
            report.add(f"cross {w} x {words[j]}", stat, thr)
    # repeated words reproduce the head-letter moment
    for w in words:
        if len(w) < 2:
            continue
        a = z.entries[w]
        h = z.entries[(w[0],)]
        diff = a.values[:, start:] [:, None, :] * a.values[:, start:][None, :, :] \
            - h.values[:, start:][:, None, :] * h.values[:, start:][None, :, :]
        stat = np.abs(diff.mean(axis=2)).max()
        scale = diff.std(axis=2).max()
        report.add(f"repeat {w} matches head ({w[0]},)", stat,
                   tolerance * scale / np.sqrt(T_eff) + eps)
    for s_idx, w in enumerate(words):
        if len(w) != 1:
            continue
        blk = mean[s_idx * d:(s_idx + 1) * d, s_idx * d:(s_idx + 1) * d]
        svals = np.linalg.svd(blk, compute_uv=False)
        min_sv = float(svals.min()) if svals.size else 0.0
        max_sv = float(svals.max()) if svals.size else 0.0
        # a zero block would pass the relative gap vacuously; force a failure
        stat = 1.0 if max_sv == 0.0 else -(min_sv - nonsingular_rtol * max_sv)
        report.add(f"nonsingular letter moment {w}", stat, 0.0,
                   detail=f"min sv {min_sv:.3e}")
    return report


def save_trajectory_csv(traj: Trajectory, path) -> None:
    """Columnar text export; floats carry 17 significant digits so the
    binary values survive a round trip."""
    groups = [("u", traj.u), ("pi", traj.pi), ("v", traj.v),
              ("x", traj.x), ("y", traj.y)]
    header = ["t"]
    for name, arr in groups:
        header.extend(f"{name}_{i + 1}" for i in range(arr.shape[0]))
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for t in range(traj.T):
            row = [str(traj.t_start + t)]
            for _, arr in groups:
                row.extend(f"{val:.17g}" for val in arr[:, t])
            fh.write(",".join(row) + "\n")


def load_trajectory_csv(path, dims: tuple[int, int, int, int, int],
                        seeds: Seeds = Seeds()) -> Trajectory:
    """Load a trajectory written by :func:`save_trajectory_csv`.

    ``dims`` is (nu, p, nn, nx, ny); the header is checked against it.
    """
    nu, p, nn, nx, ny = dims
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    expect = 1 + nu + p + nn + nx + ny
    if len(header) != expect or data.shape[1] != expect:
        raise DimensionError(
            f"trajectory file has {len(header)} columns, expected {expect}"
        )
    t = data[:, 0].astype(int)
    cols = np.cumsum([1, nu, p, nn, nx])
    u, pi, v, x = (data[:, a:b].T for a, b in zip(cols[:-1], cols[1:]))
    y = data[:, cols[-1]:].T
    return Trajectory(u, pi, v, x, y, seeds=seeds,
                      t_start=int(t[0]) if len(t) else 0)


def save_trajectory_binary(traj: Trajectory, path) -> None:
    """Raw little-endian export: 64-byte header then float64 blocks."""
    nu, p = traj.u.shape[0], traj.pi.shape[0]
    nn, nx, ny = traj.v.shape[0], traj.x.shape[0], traj.y.shape[0]
    head = _HEADER.pack(_MAGIC, 1, nu, p, nn, nx, ny, traj.T, traj.t_start,
                        traj.seeds.switching, traj.seeds.input,
                        traj.seeds.noise, traj.burn_in)
    with open(path, "wb") as fh:
        fh.write(head)
        for arr in (traj.u, traj.pi, traj.v, traj.x, traj.y):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_trajectory_binary(path) -> Trajectory:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size or raw[:8] != _MAGIC:
        raise DimensionError("not a trajectory file (bad magic)")
    (_, version, nu, p, nn, nx, ny, T, t_start,
     s_sw, s_in, s_no, burn) = _HEADER.unpack(raw[:_HEADER.size])
    if version != 1:
        raise DimensionError(f"unsupported trajectory format version {version}")
    body = np.frombuffer(raw[_HEADER.size:], dtype="<f8")
    sizes = [nu * T, p * T, nn * T, nx * T, ny * T]
    if body.size != sum(sizes):
        raise DimensionError("trajectory payload size mismatch")
    parts = np.split(body, np.cumsum(sizes)[:-1])
    u, pi, v, x, y = (part.reshape(d, T) for part, d in
                      zip(parts, (nu, p, nn, nx, ny)))
    return Trajectory(u.copy(), pi.copy(), v.copy(), x.copy(), y.copy(),
                      seeds=Seeds(s_sw, s_in, s_no), t_start=t_start,
                      burn_in=burn)
