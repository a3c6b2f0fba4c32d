"""Command-line front end.

Exit codes: 0 success or certified, 2 valid computation with a negative
answer (criterion not satisfied, suite failures), 1 error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import jsonschema
import numpy as np

from . import __version__, classical, criteria, expansion, lattice_polymer, quantum_ideal, suites
from .errors import ClusterForgeError

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2
FLOAT_TOL = 1e-12

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_cnum = {"oneOf": [
    {"type": "number"},
    {"type": "string", "enum": ["inf"]},
    {"type": "object", "properties": {"re": _num, "im": _num}, "required": ["re", "im"],
     "additionalProperties": False},
]}


def _params(props: dict, required: list[str]) -> dict:
    return {"type": "object", "properties": props, "required": required, "additionalProperties": False}


PARAMS = {
    "discrete": _params({"weights": {"type": "array", "items": _cnum, "minItems": 1},
                         "u": {"type": "array", "items": {"type": "array", "items": _cnum}}},
                        ["weights", "u"]),
    "hard_rod": _params({"sigma": _pos, "beta": _pos, "z": _nonneg}, ["sigma"]),
    "square_well": _params({"core": _nonneg, "reach": _pos, "depth": _num, "B": _nonneg,
                            "d": {"enum": [1, 2, 3]}, "beta": _pos, "z": _nonneg},
                           ["core", "reach", "depth", "B"]),
    "polymer": _params({"d": {"enum": [1, 2, 3]}, "gamma": _pos, "eta": _nonneg,
                        "box": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                        "max_size": {"type": "integer", "minimum": 1}, "n_cut": {"type": "integer", "minimum": 1}},
                       ["d", "gamma", "eta"]),
    "quantum": _params({"d": {"type": "integer", "minimum": 1}, "beta": _pos, "U_norm": _nonneg, "B": _nonneg,
                        "z": _nonneg, "statistics": {"enum": ["bosons", "fermions"]}},
                       ["d", "beta", "U_norm"]),
}

SCHEMA = {
    "type": "object",
    "properties": {
        "model": _params({"type": {"enum": sorted(PARAMS)}}, ["type"]),
        "params": {"type": "object"},
        "criteria": _params({"a": {"oneOf": [_nonneg, {"type": "array", "items": _nonneg}]},
                             "b": {"oneOf": [{"enum": ["fit"]}, _nonneg, {"type": "array", "items": _nonneg}]}},
                            []),
    },
    "required": ["model", "params"],
    "additionalProperties": False,
}


class ConfigError(ClusterForgeError):
    pass


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    _validate(cfg, SCHEMA, "")
    _validate(cfg["params"], PARAMS[cfg["model"]["type"]], "params")
    return cfg


def _validate(doc, schema, prefix):
    err = jsonschema.exceptions.best_match(jsonschema.Draft7Validator(schema).iter_errors(doc))
    if err is None:
        return
    path = ".".join(str(p) for p in ([prefix] if prefix else []) + list(err.absolute_path)) or "<root>"
    raise ConfigError(f"invalid config at {path}: {err.message}")


# ---------------------------------------------------------------------------
# serialization


def _fmt(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj, indent: int = 0) -> str:
    """JSON with 17 significant digits for every float and ``{re, im}`` for complex values."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return dumps({"re": obj.real, "im": obj.imag}, indent)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def num(value, tol=None, stderr=None) -> dict:
    """A reported number with its tolerance or statistical error."""
    out = {"value": value}
    if stderr is not None:
        out["stderr"] = stderr
    else:
        out["tol"] = FLOAT_TOL if tol is None else tol
    return out


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (_fmt(float(v)).strip('"') if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return buf.getvalue()


# ---------------------------------------------------------------------------
# model construction


def _cvalue(v):
    if v == "inf":
        return math.inf
    if isinstance(v, dict):
        return complex(v["re"], v["im"])
    return v


def build_discrete(cfg: dict) -> expansion.DiscreteModel:
    p = cfg["params"]
    w = np.array([_cvalue(v) for v in p["weights"]], dtype=complex)
    u = np.array([[_cvalue(v) for v in row] for row in p["u"]], dtype=complex)
    if u.shape != (len(w), len(w)):
        raise ConfigError("invalid config at params.u: must be a square matrix matching weights")
    crit = cfg.get("criteria", {})
    model = expansion.DiscreteModel.from_u(w, u)
    b = crit.get("b", "fit")
    rep = criteria.fit_b(model) if b == "fit" else criteria.fit_b(model, b=b)
    a = crit.get("a")
    return expansion.DiscreteModel(w, model.coupling, rep.b if rep.stable else None, a), rep


def build_classical(cfg: dict) -> classical.PairPotential:
    t, p = cfg["model"]["type"], cfg["params"]
    if t == "hard_rod":
        return classical.hard_rod(p["sigma"], p.get("beta", 1.0), p.get("z", 0.0))
    if t == "square_well":
        return classical.square_well(p["core"], p["reach"], p["depth"], p["B"], p.get("d", 3),
                                     p.get("beta", 1.0), p.get("z", 0.0))
    raise ConfigError(f"model type {t} is not a classical potential")


def build_polymer(cfg: dict) -> lattice_polymer.PolymerModel:
    p = cfg["params"]
    return lattice_polymer.PolymerModel(p["d"], p["gamma"], p["eta"])


def build_quantum(cfg: dict) -> quantum_ideal.QuantumParams:
    p = cfg["params"]
    return quantum_ideal.QuantumParams(p["d"], p["beta"], p["U_norm"], p.get("B", 0.0),
                                       p.get("statistics", "bosons"))


def _crit_a(cfg, default=None):
    a = cfg.get("criteria", {}).get("a", default)
    if a is None:
        raise ConfigError("invalid config at criteria.a: required for this subcommand")
    return a


# ---------------------------------------------------------------------------
# subcommands


def cmd_criteria(cfg, args):
    t = cfg["model"]["type"]
    if t == "discrete":
        model, rep = build_discrete(cfg)
        _crit_a(cfg)
        report = {"stability": {"stable": rep.stable, "b": [num(float(v)) for v in rep.b],
                                "detail": rep.detail}}
        ok = rep.stable
        if rep.stable:
            for which in ("kp", "tree"):
                m = criteria.check_assumption(model, which, model.a)
                live = np.abs(model.weights) > 0
                cert = bool(np.all(m[live] >= 0))
                report[which] = {"margins": [num(float(v)) for v in m], "certified": cert}
            ok = report["kp"]["certified"] or report["tree"]["certified"]
        return report, ok
    if t in ("hard_rod", "square_well"):
        p = build_classical(cfg)
        report, ok = {"z": num(p.z, 0.0)}, False
        for mode in ("rue", "brf"):
            try:
                r = classical.criterion_classical(p, mode)
            except ClusterForgeError as exc:
                report[mode] = {"applicable": False, "detail": str(exc)}
                continue
            report[mode] = {"z_max": num(r.z_max, classical.QUAD_TOL), "margin": num(r.margin, classical.QUAD_TOL),
                            "unbounded": r.unbounded}
            ok |= r.margin >= 0
        return report, ok
    if t == "polymer":
        return _polymer_report(cfg, args, box=False)
    if t == "quantum":
        return _quantum_report(cfg)
    raise ConfigError(f"unsupported model type {t}")


def _polymer_report(cfg, args, box=True):
    m = build_polymer(cfg)
    p = cfg["params"]
    a = cfg.get("criteria", {}).get("a", lattice_polymer.optimal_a(m.d))
    c = lattice_polymer.polymer_criterion(m, a, p.get("n_cut", 6))
    report = {
        "gamma_threshold": num(lattice_polymer.gamma_threshold(m.d, m.eta)),
        "criterion": {"a": num(c.a, 0.0), "lhs": num(c.lhs), "exact": num(c.exact), "tail": num(c.tail),
                      "ratio": num(c.ratio), "certifiable": c.certifiable, "ok": c.ok},
    }
    if box and "box" in p:
        r = lattice_polymer.polymer_box_Z(m, p["box"], p.get("max_size", 4), args.nmax or 8)
        report["box"] = {"polymers": r.n_polymers, "Z": num(r.Z), "logZ": num(r.logZ),
                         "partial_sums": [num(float(v)) for v in r.partial_sums],
                         "gap": num(r.gap), "envelope_tail": num(r.envelope_tail), "certified": r.certified}
    return report, c.ok


def _quantum_report(cfg):
    q = build_quantum(cfg)
    p = cfg["params"]
    report = {"statistics": q.statistics, "note": "z < 1 in any case"}
    opt = quantum_ideal.zmax_optimized(q)
    report["optimized"] = {"z_max": num(opt.z_max, 1e-9), "a_opt": num(opt.a_opt, 1e-9)}
    if q.d >= 3:
        c = quantum_ideal.zmax_closed(q)
        report["closed"] = {"z_max": num(c.z_max, quantum_ideal.POLYLOG_TOL), "a_star": num(c.a_star)}
        if c.born is not None:
            report["closed"]["born"] = num(c.born, quantum_ideal.POLYLOG_TOL)
    ok = True
    if "z" in p:
        a = cfg.get("criteria", {}).get("a", opt.a_opt)
        margin = quantum_ideal.criterion_margin(q, p["z"], a)
        report["margin"] = num(margin, quantum_ideal.POLYLOG_TOL)
        ok = margin >= 0
    return report, ok


def cmd_expand(cfg, args):
    t = cfg["model"]["type"]
    if t == "polymer":
        return _polymer_report(cfg, args)
    if t != "discrete":
        raise ConfigError("expand needs a discrete or polymer model")
    model, rep = build_discrete(cfg)
    _crit_a(cfg)
    res = expansion.cluster_logZ(model, N=None, tol=args.tol, max_order=args.nmax or expansion.DEFAULT_MAX_ORDER,
                                 certify=True, oracle=True)
    report = {
        "order": res.order,
        "variant": res.variant,
        "partial_sums": [num(v, res.tail_bound) for v in res.partial_sums],
        "tail_estimate": num(res.tail_estimate, 0.0),
        "tail_bound": num(res.tail_bound, 0.0),
        "oracle_gap": num(res.oracle_gap, FLOAT_TOL),
        "converged": res.converged,
    }
    return report, res.converged


def cmd_mayer(cfg, args):
    p = build_classical(cfg)
    rows = []
    method = "exact1d" if p.d == 1 and p.pure_hard_core else "mc"
    for n in range(1, (args.order or 4) + 1):
        r = classical.mayer_coefficient(p, n, method, seed=args.seed, samples=args.trials or (1 << 15),
                                        threads=args.threads)
        rows.append({"n": n, "b_n": r.value, "method": r.method, "err": r.stderr if method == "mc" else FLOAT_TOL})
    return rows, True


def cmd_polymer(cfg, args):
    if cfg["model"]["type"] != "polymer":
        raise ConfigError("polymer needs a polymer model")
    return _polymer_report(cfg, args)


def cmd_quantum(cfg, args):
    if cfg["model"]["type"] != "quantum":
        raise ConfigError("quantum needs a quantum model")
    return _quantum_report(cfg)


def _suite_report(r: suites.SuiteResult) -> dict:
    return {"trials": r.trials, "passed": r.passed, "failed": r.trials - r.passed,
            "worst": num(r.worst, r.tol), "failures": r.failures}


def cmd_verify(cfg, args):
    names = list(suites.TRIALS) if args.suite == "all" else [args.suite]
    out = {}
    ok = True
    for name in names:
        r = suites.run_suite(name, args.trials or 100, args.seed, args.threads)
        out[name] = _suite_report(r)
        ok &= r.ok
    return {"seed": args.seed, "suites": out}, ok


SELFTEST_TRIALS = {"algebra": 20, "ks": 20, "tree_bound": 20, "logz": 8, "correlations": 6, "decay": 6}


def selftest_report(seed: int, threads: int) -> tuple[dict, bool]:
    out, ok = {}, True
    for name, n in SELFTEST_TRIALS.items():
        r = suites.run_suite(name, n, seed, threads)
        out[name] = _suite_report(r)
        ok &= r.ok
    rod = classical.hard_rod(1.0, z=0.05)
    mc = classical.mayer_coefficient(rod, 3, "mc", seed=seed, samples=1 << 13, threads=threads)
    out["mayer_mc_b3"] = {"estimate": num(mc.value, stderr=mc.stderr), "exact": num(1.5, 0.0),
                          "within_4se": abs(mc.value - 1.5) <= 4 * mc.stderr}
    q = quantum_ideal.zmax_closed(quantum_ideal.QuantumParams(3, 1.0, 8 * math.pi))
    out["quantum_closed"] = num(q.z_max, quantum_ideal.POLYLOG_TOL)
    c = lattice_polymer.polymer_criterion(lattice_polymer.PolymerModel(2, lattice_polymer.gamma_threshold(2, 0) + 0.05, 0))
    out["polymer_criterion"] = {"lhs": num(c.lhs), "ok": c.ok}
    ok &= out["mayer_mc_b3"]["within_4se"] and c.ok
    return {"seed": seed, "version": __version__, "checks": out}, ok


def cmd_selftest(cfg, args):
    return selftest_report(args.seed, args.threads)


COMMANDS = {
    "criteria": cmd_criteria,
    "expand": cmd_expand,
    "mayer": cmd_mayer,
    "polymer": cmd_polymer,
    "quantum": cmd_quantum,
    "verify": cmd_verify,
    "selftest": cmd_selftest,
}
NEEDS_CONFIG = {"criteria", "expand", "mayer", "polymer", "quantum"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cluster-forge", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON model description")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--format", choices=["json", "csv"], default="json")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--nmax", type=int, default=None, help="maximum series order")
        sp.add_argument("--tol", type=float, default=1e-10)
        sp.add_argument("--threads", type=int, default=1)
        if name == "verify":
            sp.add_argument("--suite", choices=["all"] + list(suites.TRIALS) + list(suites.ALIASES), default="all")
        if name in ("verify", "mayer"):
            sp.add_argument("--trials", type=int, default=None, help="trials per suite or MC samples")
        if name == "mayer":
            sp.add_argument("--order", type=int, default=4)
    return ap


def _flatten(report) -> list[dict]:
    if isinstance(report, list):
        return report
    rows = []

    def walk(prefix, v):
        if isinstance(v, dict) and ("value" in v and len(v) == 2):
            err_key = "stderr" if "stderr" in v else "tol"
            val = v["value"]
            if isinstance(val, (complex, np.complexfloating)):
                rows.append({"key": prefix + ".re", "value": float(val.real), "err_kind": err_key, "err": v[err_key]})
                rows.append({"key": prefix + ".im", "value": float(val.imag), "err_kind": err_key, "err": v[err_key]})
            else:
                rows.append({"key": prefix, "value": val, "err_kind": err_key, "err": v[err_key]})
        elif isinstance(v, dict):
            for k, x in v.items():
                walk(f"{prefix}.{k}" if prefix else k, x)
        elif isinstance(v, list):
            for i, x in enumerate(v):
                walk(f"{prefix}[{i}]", x)
        else:
            rows.append({"key": prefix, "value": v, "err_kind": "", "err": ""})

    walk("", report)
    return rows


def render(report, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(_flatten(report))
    return dumps(report) + "\n"


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_ERROR
    try:
        cfg = None
        if args.command in NEEDS_CONFIG:
            if not args.config:
                raise ConfigError(f"{args.command} needs --config")
            cfg = load_config(args.config)
        elif args.config:
            cfg = load_config(args.config)
        report, ok = COMMANDS[args.command](cfg, args)
    except (ClusterForgeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_NEGATIVE


if __name__ == "__main__":
    sys.exit(main())
