import csv
import hashlib
import json

import pytest

from wsobolev.cli import CONFIG_SCHEMA, ConfigError, config_hash, main, validate_config


def run(tmp_path, command, config=None, *extra, name="out"):
    args = [command, "--out", str(tmp_path / name)]
    if config is not None:
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(config))
        args += ["--config", str(path)]
    return main(args + list(extra)), tmp_path / name


def load(path):
    return json.loads(path.read_text())


SMALL_SOLVE = {"grid": {"N": 2, "R": 12, "M": 65}, "solver": {"max_iter": 500}}


def test_check_potential_harmonic(tmp_path):
    code, out = run(tmp_path, "check-potential", {"grid": {"N": 2, "R": 4, "M": 65}})
    assert code == 0
    rep = load(out / "conditions.json")
    assert rep["verdicts"]["gradV"] == "holds-on-sample"


def test_check_potential_oscillating_grows(tmp_path):
    code, out = run(tmp_path, "check-potential", {"potential": {"kind": "oscillating"},
                                                  "grid": {"N": 2, "R": 5, "M": 101}})
    rep = load(out / "conditions.json")
    assert rep["verdicts"]["gradV"] == "grows-unbounded"
    # growth is evidence of failure on an unbounded domain, not a failing sample
    assert code == 0


@pytest.mark.parametrize("config", [
    {"potential": {"kind": "quartic"}},
    {"potential": {"kind": "power"}},
    {"grid": {"N": 2, "R": 4, "M": 64}},
    {"exponents": {"p": 1.0}},
    {"unexpected": 1},
])
def test_schema_errors_exit_2(tmp_path, config, capsys):
    code, out = run(tmp_path, "solve", config)
    assert code == 2
    assert "config error" in capsys.readouterr().err
    assert not out.exists()


def test_unreadable_config_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_validate_config_fills_defaults():
    cfg = validate_config({"grid": {"M": 129}}, "solve")
    assert cfg["grid"] == {"N": 2, "R": 12, "M": 129}
    assert cfg["exponents"]["p"] == 3 and cfg["seed"] == 0
    with pytest.raises(ConfigError):
        validate_config({"seed": -1}, "solve")


def test_schema_subcommand(capsys):
    assert main(["schema"]) == 0
    assert json.loads(capsys.readouterr().out) == json.loads(json.dumps(CONFIG_SCHEMA))


def test_counterexample_vnon_csv(tmp_path):
    code, out = run(tmp_path, "counterexample")
    assert code == 0
    with open(out / "sequence.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 5
    lw = [float(r["lw_tau"]) for r in rows]
    assert all(b > a for a, b in zip(lw, lw[1:]))
    assert (out / "plot_norms.dat").read_text().count("\n") == 6


@pytest.mark.parametrize("seq", [{"kind": "general", "m": 1}, {"kind": "annular", "n_range": [2, 6]}])
def test_counterexample_other_kinds(tmp_path, seq):
    code, out = run(tmp_path, "counterexample", {"sequence": seq, "exponents": {"tau": 3}})
    assert code == 0
    assert load(out / "weak_null.json")["verdicts"]


def test_counterexample_error_verdict(tmp_path):
    code, out = run(tmp_path, "counterexample", {"potential": {"kind": "constant"}})
    assert code == 1
    status = load(out / "status.json")
    assert status["status"] == "error" and "CenterSearchError" in status["reason"]
    assert (out / "manifest.json").exists()


def test_verify_embedding_2d_and_1d(tmp_path):
    code, out = run(tmp_path, "verify-embedding", {"trials": 10, "grid": {"N": 2, "R": 6, "M": 65}})
    assert code == 0
    assert load(out / "embedding.json")["holder_chain"]["violations"] == 0
    code, out = run(tmp_path, "verify-embedding",
                    {"trials": 10, "grid": {"N": 1, "R": 8, "M": 401}, "exponents": {"alpha": 0.5, "tau": 4}},
                    name="one")
    assert code == 0
    rep = load(out / "embedding.json")
    assert rep["interpolation_1d"]["violations"] == 0
    assert rep["embed_1d"]["ratio_to_gaussian"] <= 2


def test_radial_command(tmp_path):
    code, out = run(tmp_path, "radial", {"trials": 10, "grid": {"N": 3, "R": 12, "M": 801}})
    assert code == 0
    rep = load(out / "radial.json")
    assert rep["thrad_tail"]["negative_slack"] == 0
    assert rep["strauss"]["max_constant"] <= rep["strauss"]["reference"]


def test_radial_rejects_one_dimension(tmp_path):
    code, _ = run(tmp_path, "radial", {"grid": {"N": 1, "R": 12, "M": 801}})
    assert code == 1


def test_solve_outputs_and_manifest(tmp_path):
    code, out = run(tmp_path, "solve", SMALL_SOLVE)
    assert code == 0
    sol = load(out / "solution.json")
    assert sol["lambda"] > 0
    for key in ("mu", "I_final", "J_final", "residual", "iterations", "trace_file"):
        assert key in sol
    assert sol["r_sensitivity"]["R"] == pytest.approx(18.0)
    assert sol["r_sensitivity"]["lambda_rel_change"] < 1e-3
    assert sol["outer_mass_fraction"] < 1e-6
    header = (out / "solution.csv").read_text().splitlines()[0]
    assert header == "x,y,u"
    assert (out / "trace.csv").exists() and (out / "concentration.csv").exists()
    manifest = load(out / "manifest.json")
    listed = {f["path"]: f["sha256"] for f in manifest["files"]}
    for name, digest in listed.items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
    stored = load(out / "config.json")
    assert config_hash(validate_config(stored)) == manifest["config_sha256"]
    assert not list(out.glob(".*"))


def test_reports_are_byte_identical(tmp_path):
    _, a = run(tmp_path, "solve", SMALL_SOLVE, "--seed", "7", name="a")
    _, b = run(tmp_path, "solve", SMALL_SOLVE, "--seed", "7", name="b")
    for name in ("solution.json", "concentration.json", "status.json", "config.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    _, c = run(tmp_path, "verify-embedding", {"trials": 5, "grid": {"N": 2, "R": 4, "M": 33}}, "--seed", "3", name="c")
    _, d = run(tmp_path, "verify-embedding", {"trials": 5, "grid": {"N": 2, "R": 4, "M": 33}}, "--seed", "3", name="d")
    assert (c / "embedding.json").read_bytes() == (d / "embedding.json").read_bytes()


def test_refine_writes_richardson(tmp_path):
    code, out = run(tmp_path, "solve", {"grid": {"N": 2, "R": 12, "M": 33}}, "--refine")
    assert code == 0
    rich = load(out / "richardson.json")
    assert load(out / "refined" / "config.json")["grid"]["M"] == 65
    assert set(rich) >= {"lambda", "mu"}
    assert rich["lambda"]["richardson"] == pytest.approx(
        (4 * rich["lambda"]["refined"] - rich["lambda"]["base"]) / 3)
    assert "richardson.json" in {f["path"] for f in load(out / "manifest.json")["files"]}
