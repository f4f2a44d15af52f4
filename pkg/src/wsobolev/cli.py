"""Command-line experiment runner.

Each subcommand reads a JSON config, validates it, runs one experiment and
writes JSON/CSV reports plus a ``manifest.json`` into the output directory.
Exit codes: 0 success, 1 a ``fails``/``error`` verdict, 2 invalid config.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

import jsonschema
import numpy as np

from . import __version__
from .counterexamples import (CenterSearchError, build_annular, build_general, build_vnon,
                              certify_norms, weak_null_check)
from .discretization import build_grid
from .nehari import SolverOptions, concentration_trace, minimize
from .norms import (NormReport, embedding_ratio, gaussian, holder_chain_check, interpolation_check_1d,
                    norm_report, random_battery)
from .potentials import (FAILS, check_gradV, check_positive, check_V0, check_V1, check_V2,
                         check_VW_alpha, decaying_weight, make_constant, potential_from_spec)
from .radial import (RadialGrid, embed_1d_check, random_radial_battery, strauss_check,
                     thrad_tail)

__all__ = ["main", "CONFIG_SCHEMA", "validate_config", "RunManifest", "COMMANDS"]

_POTENTIAL = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["power", "exponential", "oscillating", "annular_step", "constant"]},
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "scale": {"type": "number", "exclusiveMinimum": 0},
        "c": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["kind"],
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"kind": {"enum": ["power", "exponential"]}}},
         "then": {"required": ["alpha"]}},
    ],
}

_NUMBER_LIST = {"type": "array", "items": {"type": "number"}, "minItems": 1}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "wsobolev experiment config",
    "type": "object",
    "properties": {
        "potential": _POTENTIAL,
        "weight": _POTENTIAL,
        "grid": {
            "type": "object",
            "properties": {
                "N": {"enum": [1, 2, 3]},
                "R": {"type": "number", "exclusiveMinimum": 0},
                "M": {"type": "integer", "minimum": 3, "not": {"multipleOf": 2}},
            },
            "additionalProperties": False,
        },
        "exponents": {
            "type": "object",
            "properties": {
                "tau": {"type": "number", "minimum": 1},
                "tau_bar": {"type": "number", "exclusiveMinimum": 2},
                "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "p": {"type": "number", "exclusiveMinimum": 1},
            },
            "additionalProperties": False,
        },
        "sequence": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["vnon", "general", "annular"]},
                "m": {"type": "number", "exclusiveMinimum": 0},
                "n_max": {"type": "integer", "minimum": 1, "maximum": 12},
                "centers": {"type": "array", "items": _NUMBER_LIST, "minItems": 1},
                "n_range": {"type": "array", "items": {"type": "integer", "minimum": 2},
                            "minItems": 2, "maxItems": 2},
            },
            "additionalProperties": False,
        },
        "conditions": {
            "type": "object",
            "properties": {
                "m": {"type": "number", "exclusiveMinimum": 0},
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "radii": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                          "minItems": 2},
            },
            "additionalProperties": False,
        },
        "radial": {
            "type": "object",
            "properties": {
                "phi_power": {"type": "number", "exclusiveMinimum": 0},
                "R_tilde": {"type": "number", "minimum": 0},
                "R_cut": {"type": "array", "items": {"type": "number", "minimum": 1}, "minItems": 1},
            },
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {
                "max_iter": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "preconditioner": {"enum": ["cg", "lu"]},
                "initial_center": _NUMBER_LIST,
                "initial_width": {"type": "number", "exclusiveMinimum": 0},
                "snapshot_every": {"type": "integer", "minimum": 1},
                "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
                "r_sensitivity": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "trials": {"type": "integer", "minimum": 1, "maximum": 10000},
        "seed": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

DEFAULTS = {
    "check-potential": {"potential": {"kind": "power", "alpha": 2}, "grid": {"N": 2, "R": 8, "M": 129}},
    "verify-embedding": {"potential": {"kind": "power", "alpha": 2}, "weight": {"kind": "constant"},
                         "grid": {"N": 2, "R": 6, "M": 129},
                         "exponents": {"alpha": 0.5, "tau": 3}, "trials": 100},
    "counterexample": {"potential": {"kind": "power", "alpha": 2},
                       "sequence": {"kind": "vnon", "m": 2, "n_max": 5},
                       "exponents": {"tau": 4}},
    "radial": {"potential": {"kind": "power", "alpha": 2}, "weight": {"kind": "power", "alpha": 2},
               "grid": {"N": 2, "R": 12, "M": 2001}, "exponents": {"tau": 4, "tau_bar": 4},
               "radial": {"phi_power": 1, "R_tilde": 1, "R_cut": [1, 2, 4]}, "trials": 100},
    "solve": {"potential": {"kind": "power", "alpha": 2}, "grid": {"N": 2, "R": 12, "M": 257},
              "exponents": {"p": 3}, "solver": {}},
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("potential", "weight"):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate_config(config: dict, command: Optional[str] = None) -> dict:
    """Validate against :data:`CONFIG_SCHEMA` and fill in command defaults."""
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    full = _merge(DEFAULTS.get(command, {}), config) if command else copy.deepcopy(config)
    full.setdefault("seed", 0)
    return full


def config_hash(config: dict) -> str:
    return hashlib.sha256(_dumps(config).encode()).hexdigest()


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _csv_text(rows: list, fields: Optional[list] = None) -> str:
    buf = io.StringIO()
    if rows:
        fields = fields or list(rows[0])
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                             for k, v in row.items()})
    return buf.getvalue()


class RunManifest:
    """Tracks emitted files; every write is atomic (temporary file plus rename)."""

    def __init__(self, out: Path, command: str, config: dict):
        self.out = out
        self.command = command
        self.config = config
        self.files: dict[str, str] = {}
        self.started = datetime.now(timezone.utc).isoformat()
        out.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str) -> str:
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        data = text.encode()
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.files[name] = hashlib.sha256(data).hexdigest()
        return name

    def write_json(self, name: str, obj) -> str:
        return self.write(name, _dumps(obj))

    def finish(self, status: str, exit_code: int) -> dict:
        self.write_json("config.json", self.config)
        manifest = {
            "command": self.command,
            "version": __version__,
            "config_sha256": config_hash(self.config),
            "started": self.started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "status": status,
            "exit_code": exit_code,
            "files": [{"path": k, "sha256": v} for k, v in sorted(self.files.items())],
        }
        self.write("manifest.json", _dumps(manifest))
        return manifest


def _grid(cfg: dict):
    g = cfg["grid"]
    return build_grid(g["N"], g["R"], g["M"])


def _weight(cfg: dict):
    return potential_from_spec(cfg["weight"]) if "weight" in cfg else make_constant(1.0)


def cmd_check_potential(cfg: dict, mf: RunManifest) -> tuple[str, dict]:
    V = potential_from_spec(cfg["potential"])
    g = _grid(cfg)
    N = g.N
    cond = cfg.get("conditions", {})
    m = cond.get("m", 1.0)
    radii = cond.get("radii", [2.0, 4.0, 8.0, 16.0, 32.0])
    reports = {"gradV": check_gradV(V, g).to_dict()}
    centers = [[2.0**k] + [0.0] * (N - 1) for k in range(1, 6)]
    reports["V0"] = check_V0(V, centers, m).to_dict()
    reports["V1"] = check_V1(V, m, radii, N=N).to_dict()
    reports["V2"] = check_V2(V, cond.get("eps", 0.5), radii, N=N).to_dict()
    if "weight" in cfg and "alpha" in cfg.get("exponents", {}):
        reports["VW_alpha"] = check_VW_alpha(V, _weight(cfg), cfg["exponents"]["alpha"], g).to_dict()
    positive = check_positive(V, g)
    verdicts = {k: r["verdict"] for k, r in reports.items()}
    failed = [k for k, v in verdicts.items() if v == FAILS] + ([] if positive else ["positive"])
    mf.write_json("conditions.json", {"potential": V.describe(), "positive": positive,
                                      "reports": reports, "verdicts": verdicts, "failed": failed})
    rows = [{"condition": k, "verdict": v} for k, v in sorted(verdicts.items())]
    mf.write("verdicts.csv", _csv_text(rows))
    status = "fails" if failed else "ok"
    return status, {"gradV_C": reports["gradV"]["constants"]["C"]}


def cmd_verify_embedding(cfg: dict, mf: RunManifest) -> tuple[str, dict]:
    V = potential_from_spec(cfg["potential"])
    W = _weight(cfg)
    g = _grid(cfg)
    ex = cfg.get("exponents", {})
    alpha, tau = ex.get("alpha", 0.5), ex.get("tau", 3.0)
    battery = random_battery(g, cfg.get("trials", 100), cfg["seed"])
    C = check_VW_alpha(V, W, alpha, g).constants["C"]
    chain = [holder_chain_check(u, V, W, alpha, tau, C=C).to_dict() for u, _ in battery]
    violations = sum(r["violated"] for r in chain)
    reports = [norm_report(u, V, [("W_tau", W, tau)]) for u, _ in battery]
    ratio = embedding_ratio(V, W, tau, 0, g, cfg["seed"])
    out = {"holder_chain": {"C": C, "alpha": alpha, "tau": tau, "violations": violations,
                            "checks": chain},
           "embedding_ratio": ratio.to_dict(),
           "descriptions": [d for _, d in battery]}
    headline = {"embedding_ratio": ratio.best}
    failed = violations > 0
    if g.N == 1:
        interp = [interpolation_check_1d(u, V, tau if tau > 2 else 4.0).to_dict() for u, _ in battery]
        emb = [embed_1d_check(u, V).to_dict() for u, _ in battery]
        ref = embed_1d_check(gaussian(g), V).to_dict()
        worst = max(e["empirical"] for e in emb)
        out["interpolation_1d"] = {"violations": sum(r["violated"] for r in interp), "checks": interp}
        out["embed_1d"] = {"gaussian": ref, "max_empirical": worst,
                           "ratio_to_gaussian": worst / ref["empirical"], "checks": emb}
        failed |= out["interpolation_1d"]["violations"] > 0 or not all(e["holds"] for e in emb)
        headline["embed_1d_max"] = worst
    mf.write_json("embedding.json", out)
    mf.write("norms.csv", NormReport.to_csv(reports))
    return ("fails" if failed else "ok"), headline


def _weak_battery(N: int):
    zero = [0.0] * N

    def bump(x):
        r = np.sqrt(np.sum(np.asarray(x) ** 2, axis=-1))
        return np.where(r < 1, np.exp(-1.0 / np.maximum(1 - r**2, 1e-300)), 0.0)

    return [
        ("bump_B1", bump),
        ("gauss_w1", lambda x: np.exp(-np.sum(np.asarray(x) ** 2, axis=-1) / 2)),
        ("gauss_w3", lambda x: np.exp(-np.sum(np.asarray(x) ** 2, axis=-1) / 18)),
        ("gauss_shift", lambda x: np.exp(-np.sum((np.asarray(x) - np.array([3.0] + zero[1:])) ** 2,
                                                 axis=-1) / 2)),
    ]


def cmd_counterexample(cfg: dict, mf: RunManifest) -> tuple[str, dict]:
    V = potential_from_spec(cfg["potential"])
    seq_cfg = cfg["sequence"]
    kind = seq_cfg.get("kind", "vnon")
    tau = cfg.get("exponents", {}).get("tau", 4.0)
    m = seq_cfg.get("m", 1.0)
    N = cfg.get("grid", {}).get("N", 3 if kind == "vnon" else 2)
    if kind == "vnon":
        seq = build_vnon(V, N=N, tau=tau, m=m, n_max=seq_cfg.get("n_max", 5))
    elif kind == "general":
        centers = seq_cfg.get("centers", [[2.0**k] + [0.0] * (N - 1) for k in range(3, 9)])
        seq = build_general(V, m, centers)
    else:
        lo, hi = seq_cfg.get("n_range", [2, 8])
        seq = build_annular(range(lo, hi + 1))
        V = potential_from_spec({"kind": "annular_step"})
    cert = certify_norms(seq, V, tau)
    weak = weak_null_check(seq, V, _weak_battery(seq.profiles[0].N))
    mf.write_json("certification.json", cert.to_dict())
    mf.write_json("weak_null.json", weak.to_dict())
    mf.write("sequence.csv", _csv_text(cert.rows))
    plot = "# n h1v lw_tau\n" + "".join(f"{r['n']} {r['h1v']!r} {r['lw_tau']!r}\n" for r in cert.rows)
    mf.write("plot_norms.dat", plot)
    ok = cert.passed and weak.passed
    return ("ok" if ok else "fails"), {"lw_tau_last": cert.rows[-1]["lw_tau"],
                                       "h1v_last": cert.rows[-1]["h1v"]}


def cmd_radial(cfg: dict, mf: RunManifest) -> tuple[str, dict]:
    V = potential_from_spec(cfg["potential"])
    W = _weight(cfg)
    gc = cfg["grid"]
    if gc["N"] < 2:
        raise ValueError("the radial suite needs N >= 2")
    rg = RadialGrid(gc["N"], gc["R"], gc["M"])
    ex = cfg.get("exponents", {})
    tau, tau_bar = ex.get("tau", 4.0), ex.get("tau_bar", 4.0)
    rc = cfg.get("radial", {})
    phi = decaying_weight(rc.get("phi_power", 1.0))
    cuts = rc.get("R_cut", [1.0, 2.0, 4.0])
    R_tilde = rc.get("R_tilde", 1.0)
    fine = RadialGrid(gc["N"], gc["R"], 2 * gc["M"] - 1)
    battery = random_radial_battery(rg, cfg.get("trials", 100), cfg["seed"])
    fine_battery = random_radial_battery(fine, cfg.get("trials", 100), cfg["seed"], min_width=4 * rg.h)
    rows = []
    strauss = []
    for (u, desc), (uf, _) in zip(battery, fine_battery):
        s = strauss_check(u, uf)
        strauss.append(s.to_dict())
        for cut in cuts:
            t = thrad_tail(u, V, W, phi, tau, tau_bar, max(cut, R_tilde), R_tilde=R_tilde)
            rows.append({"field": desc, "R_cut": max(cut, R_tilde), "lhs": t.lhs, "bound": t.bound,
                         "slack": t.slack, "strauss": s.constant})
    worst_c = max(s["constant"] for s in strauss)
    reference = strauss[0]["reference"]
    negative = sum(r["slack"] < 0 for r in rows)
    out = {"strauss": {"max_constant": worst_c, "reference": reference, "checks": strauss},
           "thrad_tail": {"negative_slack": negative, "tau": tau, "tau_bar": tau_bar,
                          "phi_power": rc.get("phi_power", 1.0), "rows": rows}}
    mf.write_json("radial.json", out)
    mf.write("radial.csv", _csv_text(rows))
    failed = negative > 0 or worst_c > reference
    return ("fails" if failed else "ok"), {"strauss_max": worst_c}


def cmd_solve(cfg: dict, mf: RunManifest) -> tuple[str, dict]:
    V = potential_from_spec(cfg["potential"])
    W = potential_from_spec(cfg["weight"]) if "weight" in cfg else None
    g = _grid(cfg)
    p = cfg.get("exponents", {}).get("p", 3.0)
    sc = cfg.get("solver", {})
    opts = SolverOptions(max_iter=sc.get("max_iter", 5000), tol=sc.get("tol", 1e-6),
                         preconditioner=sc.get("preconditioner", "cg"),
                         snapshot_every=sc.get("snapshot_every", 10))
    center = sc.get("initial_center", [0.0] * g.N)
    if len(center) != g.N:
        raise ValueError("initial_center has the wrong dimension")
    init = gaussian(g, center=center, width=sc.get("initial_width", 1.0))
    run = minimize(init, V, p, opts, W=W)
    trace = concentration_trace(run.trajectory, V, p, alpha=sc.get("alpha"), W=W)
    sol = run.solution
    if sol is None:
        mf.write_json("solution.json", {"status": run.status, "iterations": run.iterations})
        return "error", {}
    r = np.sqrt(np.sum(g.points() ** 2, axis=-1))
    sq = g.weights * sol.ubar.values**2
    outer = float(sq[r > g.R / 2].sum() / sq.sum())
    sensitivity = None
    if sc.get("r_sensitivity", True):
        # same spacing on a box 1.5 times larger
        half = int(round(0.75 * (g.M - 1)))
        big = build_grid(g.N, g.h * half, 2 * half + 1)
        big_run = minimize(gaussian(big, center=center, width=sc.get("initial_width", 1.0)), V, p, opts, W=W)
        if big_run.solution is not None:
            sensitivity = {"R": big.R, "M": big.M, "lambda": big_run.solution.lam,
                           "I_final": big_run.best.I, "status": big_run.status,
                           "lambda_rel_change": abs(big_run.solution.lam - sol.lam) / sol.lam}
    result = {"lambda": sol.lam, "mu": sol.mu, "I_final": run.best.I, "J_final": run.best.J,
              "J_relative": sol.J_relative, "residual": sol.residual,
              "discrete_residual": sol.discrete_residual, "identity_slack": sol.identity_slack,
              "negativity": sol.negativity, "iterations": run.iterations, "status": run.status,
              "concentration_label": trace.label, "trace_file": "trace.csv",
              "outer_mass_fraction": outer, "r_sensitivity": sensitivity,
              "solution_file": "solution.csv", "concentration_file": "concentration.csv",
              "grid": g.describe(), "p": p}
    mf.write_json("solution.json", result)
    pts = g.points().reshape(-1, g.N)
    names = ["x", "y", "z"][: g.N]
    field_rows = [dict(zip(names + ["u"], [*x, val])) for x, val in zip(pts, sol.ubar.values.ravel())]
    mf.write("solution.csv", _csv_text(field_rows))
    mf.write("trace.csv", _csv_text(run.history))
    mf.write("concentration.csv", _csv_text(trace.rows()))
    mf.write_json("concentration.json", trace.to_dict())
    mf.write("plot_energy.dat", "# iteration I grad_norm\n" + "".join(
        f"{h['iteration']} {h['I']!r} {h['grad_norm']!r}\n" for h in run.history))
    mid = g.M // 2
    cut = sol.ubar.values[(slice(None),) + (mid,) * (g.N - 1)]
    mf.write("plot_profile.dat", "# x ubar(x, 0)\n" + "".join(
        f"{x!r} {v!r}\n" for x, v in zip(g.axis.tolist(), cut.tolist())))
    status = "ok" if run.converged and sol.lam > 0 else "fails"
    return status, {"lambda": sol.lam, "mu": sol.mu, "I_final": run.best.I, "residual": sol.residual}


COMMANDS: dict[str, Callable[[dict, RunManifest], tuple[str, dict]]] = {
    "check-potential": cmd_check_potential,
    "verify-embedding": cmd_verify_embedding,
    "counterexample": cmd_counterexample,
    "radial": cmd_radial,
    "solve": cmd_solve,
}


def _refined(cfg: dict) -> dict:
    out = copy.deepcopy(cfg)
    if "grid" in out:
        out["grid"]["M"] = 2 * out["grid"]["M"] - 1
    return out


def _execute(command: str, cfg: dict, out: Path, finish: bool = True):
    mf = RunManifest(out, command, cfg)
    try:
        status, headline = COMMANDS[command](cfg, mf)
        reason = None if status == "ok" else f"{command} reported a failing verdict"
    except (ValueError, CenterSearchError, RuntimeError) as exc:
        status, headline, reason = "error", {}, f"{type(exc).__name__}: {exc}"
    code = 0 if status == "ok" else 1
    mf.write_json("status.json", {"status": status, "reason": reason, "headline": headline})
    if finish:
        mf.finish(status, code)
    return code, status, headline, mf


def _richardson(base: dict, fine: dict) -> dict:
    out = {}
    for k in sorted(set(base) & set(fine)):
        a, b = base[k], fine[k]
        if isinstance(a, (int, float)) and isinstance(b, (int, float)):
            out[k] = {"base": a, "refined": b, "difference": b - a,
                      "richardson": (4 * b - a) / 3}
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsobolev", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "check-potential": "check the growth conditions of a potential",
        "verify-embedding": "measure H_V -> L^tau_W embedding ratios on a random battery",
        "counterexample": "build and certify a non-compactness sequence",
        "radial": "radial decay and tail estimates",
        "solve": "Nehari minimization for the nonlocal problem",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps.get(name))
        sp.add_argument("--config", type=Path, help="JSON config file (defaults are used when omitted)")
        sp.add_argument("--out", type=Path, required=True, help="output directory")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        sp.add_argument("--refine", action="store_true",
                        help="rerun with M -> 2M - 1 and write a Richardson comparison")
    sub.add_parser("schema", help="print the config JSON schema")
    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "schema":
        sys.stdout.write(_dumps(CONFIG_SCHEMA))
        return 0
    try:
        raw = json.loads(args.config.read_text()) if args.config else {}
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be nonnegative")
            raw["seed"] = args.seed
        cfg = validate_config(raw, args.command)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    refine = args.refine and "grid" in cfg
    if args.refine and not refine:
        print("--refine ignored: this experiment has no grid", file=sys.stderr)
    code, status, headline, mf = _execute(args.command, cfg, args.out, finish=not refine)
    if refine:
        code2, _, fine, _ = _execute(args.command, _refined(cfg), args.out / "refined")
        mf.write_json("richardson.json", _richardson(headline, fine))
        mf.write_json("refined_manifest_ref.json", {"path": "refined/manifest.json"})
        code = max(code, code2)
        mf.finish(status if code == 0 else "fails", code)
    print(json.dumps({"command": args.command, "exit": code, **_clean(headline)}, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
