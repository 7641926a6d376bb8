import json

import numpy as np
import pytest

import glss
import glss.cli as cli
from conftest import basis_change, random_model, well_conditioned


def _model_file(tmp_path, model, name="model.json"):
    path = tmp_path / name
    glss.save_model(model, path)
    return str(path)


def _run(*argv):
    return cli.main(list(argv))


def test_simulate_writes_trajectory_and_report(tmp_path):
    mf = _model_file(tmp_path, random_model(seed=70))
    out = tmp_path / "out"
    code = _run("simulate", "--model", mf, "--horizon", "20000",
                "--out", str(out))
    assert code == 0
    assert (out / "trajectory.csv").exists()
    assert (out / "trajectory.bin").exists()
    report = json.loads((out / "simulate_report.json").read_text())
    assert report["command"] == "simulate"
    assert len(report["config_hash"]) == 64
    assert report["seeds"] == {"switching": 0, "input": 1, "noise": 2}
    emp = np.asarray(report["output_second_moment"]["empirical_diagonal"])
    ana = np.asarray(report["output_second_moment"]["analytic_diagonal"])
    assert np.abs(emp - ana).max() < 0.1 * np.abs(ana).max()
    assert report["files"] == ["trajectory.csv", "trajectory.bin"]


def test_decompose_accepts_saved_trajectory(tmp_path):
    mf = _model_file(tmp_path, random_model(seed=71, rho=0.4))
    out = tmp_path / "out"
    assert _run("simulate", "--model", mf, "--horizon", "60000",
                "--out", str(out)) == 0
    code = _run("decompose", "--model", mf, "--trajectory",
                str(out / "trajectory.bin"), "--depth", "3",
                "--out", str(out))
    assert code == 0
    series = (out / "decomposition_series.csv").read_text().splitlines()
    assert "yd_1" in series[0] and "ys_1" in series[0]
    assert (out / "decomposition_projection.csv").exists()
    report = json.loads((out / "decompose_report.json").read_text())
    assert report["verification"]["passed"] is True


def test_decompose_flags_model_data_mismatch(tmp_path):
    model = random_model(seed=72, rho=0.4)
    other = random_model(seed=99, rho=0.4)
    mf = _model_file(tmp_path, model, "a.json")
    of = _model_file(tmp_path, other, "b.json")
    out = tmp_path / "out"
    assert _run("simulate", "--model", of, "--horizon", "60000",
                "--out", str(out)) == 0
    code = _run("decompose", "--model", mf, "--trajectory",
                str(out / "trajectory.bin"), "--depth", "3",
                "--out", str(out))
    assert code == 4


@pytest.mark.parametrize("kind", ["discrete-iid", "markov-embedded"])
def test_innovate_builds_model_and_curve(tmp_path, kind):
    mf = _model_file(tmp_path, random_model(kind=kind, seed=73, rho=0.4))
    out = tmp_path / "out"
    code = _run("innovate", "--model", mf, "--horizon", "40000",
                "--depth", "3", "--out", str(out))
    assert code == 0
    inn = glss.load_model(out / "innovation_model.json")
    assert inn.meta["innovation"] is True
    assert (out / "innovation_depth_curve.svg").exists()
    curve = (out / "innovation_depth_curve.csv").read_text().splitlines()
    assert curve[0] == "depth,residual_variance"
    assert len(curve) == 4
    report = json.loads((out / "innovate_report.json").read_text())
    assert report["whiteness"]["passed"] is True
    assert report["equivalence"]["passed"] is True
    assert report["construction"]["closed_loop_radius"] < 1.0


def test_check_minimal_reports_rank(tmp_path):
    model = random_model(seed=74)
    mf = _model_file(tmp_path, model)
    out = tmp_path / "out"
    assert _run("check-minimal", "--model", mf, "--out", str(out)) == 0
    report = json.loads((out / "minimality_report.json").read_text())
    assert report["rank_report"]["minimal"] is True
    assert report["rank_report"]["observability_rank"] == model.nx
    assert (out / "singular_values.svg").exists()
    assert (out / "singular_values.csv").exists()


def test_match_finds_basis_change(tmp_path):
    model = random_model(seed=75, nx=3, nn=3)
    rng = np.random.default_rng(5)
    other = basis_change(model, well_conditioned(rng, 3))
    mf = _model_file(tmp_path, model, "a.json")
    of = _model_file(tmp_path, other, "b.json")
    out = tmp_path / "out"
    code = _run("match", "--model", mf, "--other", of, "--out", str(out))
    assert code == 0
    report = json.loads((out / "match_report.json").read_text())
    assert report["isomorphism"]["found"] is True
    T = np.asarray(report["isomorphism"]["T"])
    assert T.shape == (3, 3)


def test_match_rejects_different_dynamics(tmp_path):
    model = random_model(seed=76, nx=3, nn=3)
    rng = np.random.default_rng(6)
    other = basis_change(model, well_conditioned(rng, 3))
    bent = glss.GlssModel(other.A + 0.05, other.B, other.K, other.C, other.D,
                          other.F, other.switching, other.Q, other.R)
    mf = _model_file(tmp_path, model, "a.json")
    of = _model_file(tmp_path, bent, "b.json")
    assert _run("match", "--model", mf, "--other", of,
                "--out", str(tmp_path / "out")) == 5


def test_match_reports_hypothesis_violations(tmp_path):
    model = random_model(seed=77)
    other = glss.GlssModel(model.A, model.B, model.K, model.C, model.D + 2.0,
                           model.F, model.switching, model.Q, model.R)
    mf = _model_file(tmp_path, model, "a.json")
    of = _model_file(tmp_path, other, "b.json")
    assert _run("match", "--model", mf, "--other", of,
                "--out", str(tmp_path / "out")) == 5


@pytest.mark.parametrize("kind", glss.KINDS)
def test_validate_switching_passes_own_samples(tmp_path, kind):
    mf = _model_file(tmp_path, random_model(kind=kind, seed=78))
    out = tmp_path / "out"
    code = _run("validate-switching", "--model", mf, "--horizon", "50000",
                "--out", str(out))
    assert code == 0
    report = json.loads((out / "switching_report.json").read_text())
    assert report["validation"]["passed"] is True


def test_unstable_model_exits_3(tmp_path):
    model = random_model(seed=79)
    bad = glss.GlssModel(model.A * 4.0, model.B, model.K, model.C, model.D,
                         model.F, model.switching, model.Q, model.R)
    mf = _model_file(tmp_path, bad)
    assert _run("simulate", "--model", mf,
                "--out", str(tmp_path / "out")) == 3


def test_malformed_model_exits_2(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{ not json")
    assert _run("simulate", "--model", str(path),
                "--out", str(tmp_path / "out")) == 2
    missing = tmp_path / "absent.json"
    assert _run("simulate", "--model", str(missing),
                "--out", str(tmp_path / "out")) == 2


def test_reports_are_deterministic_across_directories(tmp_path):
    mf = _model_file(tmp_path, random_model(seed=80, rho=0.4))
    outs = [tmp_path / "run1", tmp_path / "run2"]
    for out in outs:
        code = _run("innovate", "--model", mf, "--horizon", "30000",
                    "--depth", "2", "--out", str(out))
        assert code == 0
    for name in ("innovation_model.json", "innovate_report.json",
                 "innovation_depth_curve.svg", "innovation_depth_curve.csv"):
        a = (outs[0] / name).read_bytes()
        b = (outs[1] / name).read_bytes()
        assert a == b, name


def test_seed_flags_change_the_draw(tmp_path):
    mf = _model_file(tmp_path, random_model(seed=81))
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert _run("simulate", "--model", mf, "--horizon", "500",
                "--seed-noise", "5", "--out", str(out1)) == 0
    assert _run("simulate", "--model", mf, "--horizon", "500",
                "--seed-noise", "6", "--out", str(out2)) == 0
    a = json.loads((out1 / "simulate_report.json").read_text())
    b = json.loads((out2 / "simulate_report.json").read_text())
    assert a["config_hash"] != b["config_hash"]
    assert a["seeds"]["noise"] == 5 and b["seeds"]["noise"] == 6
