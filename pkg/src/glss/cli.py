"""Command-line front end.

Subcommands wrap the library modules one-to-one and write their results
as files in the output directory: trajectories as CSV plus a bit-exact
binary twin, reports as JSON, figures as SVG with the plotted numbers in
a CSV next to them.  Every report embeds the SHA-256 of the resolved
configuration (model document plus numeric options) and the seed triple,
and identical configurations produce byte-identical outputs.

Exit codes: 0 success, 2 invalid input (model file, dimensions, window),
3 stationarity violation, 4 statistical check failure or non-convergence,
5 no isomorphism.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from .decompose import (decompose_projection, decompose_series,
                        export_decomposition, verify_decomposition)
from .errors import (ConvergenceError, DimensionError, GlssError,
                     HypothesisViolationError, InstabilityError,
                     ModelFormatError, SingularRegressionError, WindowError)
from .innovation import build_innovation_form, estimate_innovation, \
    run_predictor_filter
from .model import output_covariance_family, solve_stationary_gramian, \
    validate_sglss
from .modelio import canonical_json, load_model, model_to_dict, save_model
from .plots import save_depth_curve, save_singular_values
from .realize import check_minimality, find_isomorphism
from .reporting import ValidationReport
from .simulate import (Seeds, compute_z, default_burn_in,
                       load_trajectory_binary, load_trajectory_csv, simulate,
                       save_trajectory_binary, save_trajectory_csv,
                       whiteness_report)
from .switching import sample_switching, validate_admissibility

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_UNSTABLE = 3
EXIT_STATISTICAL = 4
EXIT_NO_MATCH = 5


def _seeds(args) -> Seeds:
    return Seeds(args.seed_switch, args.seed_input, args.seed_noise)


def _config_digest(args, model_docs: list[dict]) -> str:
    payload = {
        "command": args.command,
        "models": model_docs,
        "options": {
            "horizon": args.horizon,
            "burn_in": args.burn_in,
            "depth": args.depth,
            "ridge": args.ridge,
            "tolerance": args.tolerance,
            "seeds": list(_seeds(args).astuple()),
        },
    }
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


def _base_report(args, model_docs: list[dict]) -> dict:
    s = _seeds(args)
    return {
        "command": args.command,
        "config_hash": _config_digest(args, model_docs),
        "seeds": {"switching": s.switching, "input": s.input, "noise": s.noise},
    }


def _write_json(path, doc: dict):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _names(*paths) -> list[str]:
    # reports embed file names, not directories, so reruns into different
    # output directories stay byte-identical
    return [os.path.basename(str(p)) for p in paths]


def _gate(model) -> int | None:
    """Structural validation; distinguishes instability from other defects."""
    report = validate_sglss(model)
    if report.passed:
        return None
    print(report.summary(), file=sys.stderr)
    fails = report.failures()
    if all(c.name.startswith("stationarity") for c in fails):
        return EXIT_UNSTABLE
    return EXIT_INVALID


def _load_trajectory(path, model):
    if str(path).endswith(".bin"):
        return load_trajectory_binary(path)
    dims = (model.nu, model.p, model.nn, model.nx, model.ny)
    return load_trajectory_csv(path, dims)


def _obtain_trajectory(args, model):
    if args.trajectory:
        return _load_trajectory(args.trajectory, model)
    return simulate(model, args.horizon, _seeds(args), args.burn_in)


def _statistical_tolerance(args, default: float = 5.0) -> float:
    return default if args.tolerance is None else args.tolerance


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    gate = _gate(model)
    if gate is not None:
        return gate
    traj = simulate(model, args.horizon, _seeds(args), args.burn_in)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "trajectory.csv")
    bin_path = os.path.join(args.out, "trajectory.bin")
    save_trajectory_csv(traj, csv_path)
    save_trajectory_binary(traj, bin_path)
    moments = solve_stationary_gramian(model)
    fam = output_covariance_family(model, 1, moments)
    emp = traj.y @ traj.y.T / traj.T
    report = _base_report(args, [model_to_dict(model)])
    report.update({
        "horizon": traj.T,
        "burn_in": traj.burn_in,
        "stability_radius": moments.radius,
        "gramian_trace": float(np.trace(moments.gramian)),
        "output_second_moment": {
            "empirical_diagonal": np.diag(emp).tolist(),
            "analytic_diagonal": np.diag(fam[()]).tolist(),
        },
        "files": _names(csv_path, bin_path),
    })
    _write_json(os.path.join(args.out, "simulate_report.json"), report)
    print(f"stability radius {moments.radius:.6f}, "
          f"gramian trace {np.trace(moments.gramian):.6g}")
    print(f"wrote {csv_path} and {bin_path} ({traj.T} samples)")
    return EXIT_OK


def cmd_decompose(args) -> int:
    model = load_model(args.model)
    gate = _gate(model)
    if gate is not None:
        return gate
    traj = _obtain_trajectory(args, model)
    series = decompose_series(model, traj, args.depth)
    projection = decompose_projection(traj, model.switching, args.depth,
                                      args.ridge)
    os.makedirs(args.out, exist_ok=True)
    series_path = os.path.join(args.out, "decomposition_series.csv")
    proj_path = os.path.join(args.out, "decomposition_projection.csv")
    export_decomposition(traj, series, series_path)
    export_decomposition(traj, projection, proj_path)
    check = verify_decomposition(model, traj, args.depth,
                                 tolerance=_statistical_tolerance(args),
                                 ridge=args.ridge)
    report = _base_report(args, [model_to_dict(model)])
    report.update({
        "horizon": traj.T,
        "depth": args.depth,
        "verification": check.to_dict(),
        "series_diagnostics": dict(series.diagnostics),
        "files": _names(series_path, proj_path),
    })
    _write_json(os.path.join(args.out, "decompose_report.json"), report)
    print(check.summary())
    return EXIT_OK if check.passed else EXIT_STATISTICAL


def cmd_innovate(args) -> int:
    model = load_model(args.model)
    gate = _gate(model)
    if gate is not None:
        return gate
    inn = build_innovation_form(model)
    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, "innovation_model.json")
    save_model(inn, model_path)

    traj = _obtain_trajectory(args, model)
    skip = default_burn_in(min(inn.info["closed_loop_radius"], 0.999999),
                           cap=min(5000, traj.T // 4))
    _, _, resid = run_predictor_filter(inn, traj.y, traj.u, traj.pi)
    z = compute_z(traj.pi[:, skip:], resid[:, skip:], model.switching,
                  args.depth, name="filter residual")
    white = whiteness_report(z, tolerance=_statistical_tolerance(args))

    fam_model = output_covariance_family(model, args.depth)
    fam_inn = output_covariance_family(inn.as_glss(), args.depth)
    scale = max(np.abs(m).max() for m in fam_model.values())
    equivalence = ValidationReport("output-law equivalence")
    for w in fam_model:
        diff = np.abs(fam_model[w] - fam_inn[w]).max()
        equivalence.add(f"word {w}: covariance match", diff,
                        1e-6 * max(scale, 1.0))

    dec = decompose_series(model, traj, args.depth)
    est = estimate_innovation(dec.y_s, traj.pi, model.switching, args.depth,
                              args.ridge)
    curve_files = save_depth_curve(
        range(1, args.depth + 1), est.residual_variance_by_depth,
        os.path.join(args.out, "innovation_depth_curve"))

    report = _base_report(args, [model_to_dict(model)])
    report.update({
        "horizon": traj.T,
        "depth": args.depth,
        "construction": dict(inn.info),
        "whiteness": white.to_dict(),
        "equivalence": equivalence.to_dict(),
        "residual_variance_by_depth": est.residual_variance_by_depth,
        "files": _names(model_path, *curve_files),
    })
    _write_json(os.path.join(args.out, "innovate_report.json"), report)
    print(f"innovation form built in {inn.info['iterations']} sweeps, "
          f"closed-loop radius {inn.info['closed_loop_radius']:.6f}")
    print(white.summary())
    print(equivalence.summary())
    ok = white.passed and equivalence.passed
    return EXIT_OK if ok else EXIT_STATISTICAL


def cmd_check_minimal(args) -> int:
    model = load_model(args.model)
    gate = _gate(model)
    if gate is not None:
        return gate
    tol = 1e-8 if args.tolerance is None else args.tolerance
    rank = check_minimality(model, tol)
    os.makedirs(args.out, exist_ok=True)
    plot_files = save_singular_values(
        rank, os.path.join(args.out, "singular_values"))
    report = _base_report(args, [model_to_dict(model)])
    report.update({"rank_report": rank.to_dict(), "files": _names(*plot_files)})
    _write_json(os.path.join(args.out, "minimality_report.json"), report)
    print(rank.summary())
    return EXIT_OK


def cmd_match(args) -> int:
    model_a = load_model(args.model)
    model_b = load_model(args.other)
    for m in (model_a, model_b):
        gate = _gate(m)
        if gate is not None:
            return gate
    tol = 1e-8 if args.tolerance is None else args.tolerance
    try:
        iso = find_isomorphism(model_a, model_b, residual_tolerance=tol)
    except HypothesisViolationError as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_NO_MATCH
    os.makedirs(args.out, exist_ok=True)
    report = _base_report(args, [model_to_dict(model_a),
                                 model_to_dict(model_b)])
    report.update({"isomorphism": iso.to_dict()})
    _write_json(os.path.join(args.out, "match_report.json"), report)
    print(iso.summary())
    return EXIT_OK if iso.found else EXIT_NO_MATCH


def cmd_validate_switching(args) -> int:
    model = load_model(args.model)
    pi = sample_switching(model.switching, args.horizon, args.seed_switch)
    check = validate_admissibility(pi, model.switching,
                                   max_depth=min(args.depth, 4),
                                   tolerance=_statistical_tolerance(args))
    os.makedirs(args.out, exist_ok=True)
    report = _base_report(args, [model_to_dict(model)])
    report.update({"horizon": args.horizon, "validation": check.to_dict()})
    _write_json(os.path.join(args.out, "switching_report.json"), report)
    print(check.summary())
    return EXIT_OK if check.passed else EXIT_STATISTICAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glss",
        description="Stochastic switched linear systems: simulation, output "
                    "decomposition, innovation forms and realization checks.",
        epilog="GLSS_THREADS caps worker threads for batched simulation.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", required=True, metavar="FILE",
                        help="model JSON file")
    common.add_argument("--trajectory", metavar="FILE", default=None,
                        help="existing trajectory (.csv or .bin) instead of "
                             "simulating")
    common.add_argument("--horizon", type=int, default=20_000, metavar="N",
                        help="samples to simulate (default 20000)")
    common.add_argument("--burn-in", type=int, default=None, dest="burn_in",
                        metavar="N", help="transient samples to discard "
                        "(default: automatic from the stability radius)")
    common.add_argument("--depth", type=int, default=4, metavar="N",
                        help="word truncation depth (default 4)")
    common.add_argument("--ridge", type=float, default=None, metavar="X",
                        help="regression regularization (default automatic; "
                             "0 forces plain least squares)")
    common.add_argument("--tolerance", type=float, default=None, metavar="X",
                        help="statistical tolerance multiplier, or residual/"
                             "rank tolerance for match and check-minimal")
    common.add_argument("--seed-switch", type=int, default=0, metavar="S")
    common.add_argument("--seed-input", type=int, default=1, metavar="S")
    common.add_argument("--seed-noise", type=int, default=2, metavar="S")
    common.add_argument("--out", default=".", metavar="DIR",
                        help="output directory (default .)")
    sub = parser.add_subparsers(dest="command", required=True)
    cmds = [
        ("simulate", cmd_simulate, "sample a stationary trajectory"),
        ("decompose", cmd_decompose,
         "split the output into input-driven and noise-driven parts"),
        ("innovate", cmd_innovate,
         "build the innovation form and certify it"),
        ("check-minimal", cmd_check_minimal,
         "observability/reachability rank report"),
        ("match", cmd_match,
         "recover the basis change between two models"),
        ("validate-switching", cmd_validate_switching,
         "certify a sampled switching path against its declared law"),
    ]
    for name, func, desc in cmds:
        sp = sub.add_parser(name, parents=[common], help=desc,
                            description=desc)
        if name == "match":
            sp.add_argument("--other", required=True, metavar="FILE",
                            help="second model JSON file")
        sp.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelFormatError as exc:
        print(f"invalid model file: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InstabilityError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_UNSTABLE
    except (DimensionError, WindowError, SingularRegressionError,
            FileNotFoundError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_STATISTICAL
    except GlssError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
