"""Model files: a single JSON document per model.

Layout: ``dims`` (nx/nu/ny/nn), ``letters`` (one {A,B,K} object per mode),
``C``/``D``/``F``, ``switching`` (kind, kind-specific params, plus the
derived edges/p/alpha which are validated for consistency), ``noise``
(per-letter square factors of the second moments, guaranteeing symmetry
and positive semidefiniteness by construction) and an optional
``innovation`` flag marking filter-form models (F pinned to identity).
Every violation reports the JSON path of the offending field.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import GlssError, ModelFormatError
from .model import GlssModel
from .switching import (KINDS, SwitchingSpec, make_discrete_iid_spec,
                        make_iid_white_spec, make_markov_spec)


def _matrix(doc, path: str, shape: tuple[int, int]) -> np.ndarray:
    try:
        arr = np.asarray(doc, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(path, f"not a numeric matrix: {exc}") from None
    if arr.ndim != 2 or arr.shape != shape:
        raise ModelFormatError(
            path, f"expected shape {shape}, got {arr.shape if arr.ndim == 2 else arr.ndim}-d")
    if not np.isfinite(arr).all():
        raise ModelFormatError(path, "contains non-finite entries")
    return arr


def _require(doc: dict, key: str, path: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ModelFormatError(f"{path}{key}", "missing required field")
    return doc[key]


def _vector(doc, path: str, length: int) -> np.ndarray:
    try:
        arr = np.asarray(doc, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(path, f"not a numeric vector: {exc}") from None
    if arr.ndim != 1 or arr.shape[0] != length:
        raise ModelFormatError(path, f"expected {length} entries")
    return arr


def _build_spec(sw: dict) -> SwitchingSpec:
    kind = _require(sw, "kind", "switching.")
    if kind not in KINDS:
        raise ModelFormatError("switching.kind",
                               f"unknown kind {kind!r}, expected one of {KINDS}")
    params = _require(sw, "params", "switching.")
    try:
        if kind == "iid-white":
            moments = np.asarray(_require(params, "second_moments",
                                          "switching.params."), dtype=float)
            law = params.get("law", "rademacher")
            return make_iid_white_spec(tuple(moments), law)
        if kind == "discrete-iid":
            probs = np.asarray(_require(params, "probabilities",
                                        "switching.params."), dtype=float)
            return make_discrete_iid_spec(tuple(probs))
        transition = np.asarray(_require(params, "transition",
                                         "switching.params."), dtype=float)
        return make_markov_spec(transition)
    except ModelFormatError:
        raise
    except (GlssError, ValueError, TypeError) as exc:
        raise ModelFormatError("switching.params", str(exc)) from None


def _check_spec_consistency(sw: dict, spec: SwitchingSpec):
    p = len(spec.weights)
    declared_p = _vector(_require(sw, "p", "switching."), "switching.p", p)
    if not np.allclose(declared_p, spec.weights, rtol=1e-9, atol=1e-12):
        raise ModelFormatError("switching.p",
                               "does not match the value derived from params")
    declared_a = _vector(_require(sw, "alpha", "switching."), "switching.alpha", p)
    if not np.allclose(declared_a, spec.alpha, rtol=1e-9, atol=1e-12):
        raise ModelFormatError("switching.alpha",
                               "does not match the value derived from params")
    raw_edges = _require(sw, "edges", "switching.")
    try:
        declared_e = {(int(a), int(b)) for a, b in raw_edges}
    except (TypeError, ValueError):
        raise ModelFormatError("switching.edges",
                               "expected a list of [from, to] pairs") from None
    if declared_e != set(spec.alphabet.edges):
        raise ModelFormatError("switching.edges",
                               "does not match the edge set derived from params")


def model_from_dict(doc: dict) -> GlssModel:
    dims = _require(doc, "dims", "")
    sizes = {}
    for key in ("nx", "nu", "ny", "nn"):
        val = _require(dims, key, "dims.")
        if not isinstance(val, int) or val < 1:
            raise ModelFormatError(f"dims.{key}", "must be a positive integer")
        sizes[key] = val
    nx, nu, ny, nn = sizes["nx"], sizes["nu"], sizes["ny"], sizes["nn"]

    spec = _build_spec(_require(doc, "switching", ""))
    _check_spec_consistency(doc["switching"], spec)
    p = len(spec.weights)

    letters = _require(doc, "letters", "")
    if not isinstance(letters, list) or len(letters) != p:
        raise ModelFormatError(
            "letters", f"expected {p} letter blocks for this switching kind")
    A = np.empty((p, nx, nx))
    B = np.empty((p, nx, nu))
    K = np.empty((p, nx, nn))
    for i, entry in enumerate(letters):
        A[i] = _matrix(_require(entry, "A", f"letters[{i}]."),
                       f"letters[{i}].A", (nx, nx))
        B[i] = _matrix(_require(entry, "B", f"letters[{i}]."),
                       f"letters[{i}].B", (nx, nu))
        K[i] = _matrix(_require(entry, "K", f"letters[{i}]."),
                       f"letters[{i}].K", (nx, nn))
    C = _matrix(_require(doc, "C", ""), "C", (ny, nx))
    D = _matrix(_require(doc, "D", ""), "D", (ny, nu))
    F = _matrix(_require(doc, "F", ""), "F", (ny, nn))

    noise = _require(doc, "noise", "")
    qf = _require(noise, "Q_factors", "noise.")
    rf = _require(noise, "R_factors", "noise.")
    if not isinstance(qf, list) or len(qf) != p:
        raise ModelFormatError("noise.Q_factors", f"expected {p} factors")
    if not isinstance(rf, list) or len(rf) != p:
        raise ModelFormatError("noise.R_factors", f"expected {p} factors")
    Q = np.empty((p, nn, nn))
    R = np.empty((p, nu, nu))
    for i in range(p):
        L = _matrix(qf[i], f"noise.Q_factors[{i}]", (nn, nn))
        Q[i] = L @ L.T
        M = _matrix(rf[i], f"noise.R_factors[{i}]", (nu, nu))
        R[i] = M @ M.T

    innovation = doc.get("innovation", False)
    if not isinstance(innovation, bool):
        raise ModelFormatError("innovation", "must be a boolean")
    if innovation and not (ny == nn and np.allclose(F, np.eye(ny))):
        raise ModelFormatError("F", "innovation models require an identity F")

    try:
        return GlssModel(A, B, K, C, D, F, spec, Q, R,
                         meta={"innovation": innovation})
    except GlssError as exc:
        raise ModelFormatError("", str(exc)) from None


def model_to_dict(model) -> dict:
    if hasattr(model, "as_glss"):
        inner = model.as_glss()
        innovation = True
    else:
        inner = model
        innovation = bool(inner.meta.get("innovation", False))
    spec = inner.switching
    doc = {
        "dims": {"nx": inner.nx, "nu": inner.nu, "ny": inner.ny, "nn": inner.nn},
        "letters": [
            {"A": inner.A[i].tolist(), "B": inner.B[i].tolist(),
             "K": inner.K[i].tolist()}
            for i in range(inner.p)
        ],
        "C": inner.C.tolist(),
        "D": inner.D.tolist(),
        "F": inner.F.tolist(),
        "switching": {
            "kind": spec.kind,
            "params": {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                       for k, v in spec.params.items()},
            "edges": sorted([a, b] for a, b in spec.alphabet.edges),
            "p": list(spec.weights),
            "alpha": list(spec.alpha),
        },
        "noise": {
            "Q_factors": [np.linalg.cholesky(inner.Q[i]).tolist()
                          for i in range(inner.p)],
            "R_factors": [np.linalg.cholesky(inner.R[i]).tolist()
                          for i in range(inner.p)],
        },
        "innovation": innovation,
    }
    return doc


def save_model(model, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path) -> GlssModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError("", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelFormatError("", "top level must be an object")
    return model_from_dict(doc)


def canonical_json(doc: dict) -> str:
    """Stable serialization used for config hashing."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))
