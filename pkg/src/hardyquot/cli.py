"""Command-line experiment runner: ``hql run <experiment>`` and ``hql sweep <experiment>``."""
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
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from .boundaryrep import boundary_rep_verdict, eta_spectrum_sample, qeta_vonneumann_check, slice_subdiagonal, homogeneous_model, weighted_shift_model
from .diagnostics import Verdict, doubly_commuting_verdict, lemma25_block_probe, rudin_probe, theorem31_matrix_probe
from .errors import ConfigInvalid, HardyQuotError
from .lattice import TruncationGrid
from .parsing import parse_blaschke, parse_complex, parse_inner, parse_polynomial, split_list
from .quotient import RudinFinite
from .symbols import MPoly
from .variety import VarietyModel, a2n_report, fibre_measure

EXPERIMENTS = ("theorem31", "lemma25", "doubly-commuting", "rudin", "homogeneous-certify", "weighted-shift", "eta-spectrum", "appendix-norm")
CSV_COLUMNS = ("experiment", "param_key", "param_value", "metric_name", "value_re", "value_im", "reference_re", "reference_im", "deviation")

# flag name -> (argparse type, help)
FLAGS = {
    "theorem31": {
        "theta": (str, "inner symbol, e.g. 'z1*z2'"),
        "n": (int, "number of variables (>= 3)"),
        "caps": (str, "degree caps: one integer or a comma list"),
        "trail": (str, "boundary trail, e.g. 'w3:0.5,0.7,0.9'"),
        "w12": (str, "fixed values of w1,w2"),
        "l": (int, "one-based boundary variable (default from --trail)"),
        "tol": (float, "deviation tolerance"),
    },
    "lemma25": {
        "theta": (str, "one-variable Blaschke product in z, e.g. 'z^2' or 'b(0.5)'"),
        "n": (int, "number of variables (>= 3)"),
        "caps": (str, "degree caps (default deg+3,6,6,...)"),
    },
    "doubly-commuting": {
        "dims": (str, "factor dimensions, e.g. '1,inf'"),
        "flags": (str, "per-factor essential normality flags, e.g. 'true,false'"),
    },
    "rudin": {
        "psis": (str, "increasing Blaschke products separated by ';'"),
        "phis": (str, "decreasing Blaschke products separated by ';'"),
        "m": (int, "one-based level index"),
        "beta": (str, "zero of psi_(m+1)/psi_m"),
        "lam": (str, "zero of phi_(m+1)"),
        "caps": (str, "degree caps"),
        "tol": (float, "deviation tolerance"),
    },
    "homogeneous-certify": {
        "p": (str, "homogeneous polynomial in z1, z2"),
        "caps": (int, "degree cap per variable"),
        "resolution": (int, "circle sampling resolution (>= 256)"),
    },
    "weighted-shift": {
        "alpha": (str, "alpha in p = z1 - alpha z2, |alpha| != 1"),
        "N": (int, "number of weights"),
        "caps": (int, "degree cap for the matrix cross-check"),
        "swap": (bool, "treat |alpha| < 1 by swapping variables"),
    },
    "eta-spectrum": {
        "eta": (str, "Blaschke products in z separated by ','"),
        "samples": (int, "number of unimodular lambda samples"),
        "polys": (str, "test polynomials separated by ';'"),
        "caps": (str, "degree caps for the quotient model"),
    },
    "appendix-norm": {
        "eta": (str, "Blaschke products in z separated by ','"),
        "f": (str, "polynomial in z1..zn"),
        "nw": (int, "radial weight exponent"),
        "radial": (int, "Gauss-Legendre nodes (>= 64)"),
        "angular": (int, "trapezoid nodes (>= 128)"),
    },
}

DEFAULTS = {
    "theorem31": {"n": 3, "caps": 12, "trail": "w3:0.5,0.7,0.9,0.95", "w12": "0.5,0.5"},
    "lemma25": {"n": 3},
    "doubly-commuting": {},
    "rudin": {"m": 1, "caps": 10},
    "homogeneous-certify": {"caps": 10, "resolution": 1024},
    "weighted-shift": {"N": 18, "caps": 20, "swap": False},
    "eta-spectrum": {"samples": 64, "polys": "1; z1*z2", "caps": 10},
    "appendix-norm": {"f": "1", "nw": 0, "radial": 64, "angular": 128},
}


@dataclass
class Row:
    param_key: str
    param_value: str
    metric: str
    value: complex
    reference: complex | None = None

    @property
    def deviation(self):
        return None if self.reference is None else float(abs(complex(self.value) - complex(self.reference)))


@dataclass
class Result:
    rows: list
    verdict: str
    details: dict = field(default_factory=dict)
    key: str | None = None  # metric reported by sweeps


# ---------------------------------------------------------------------------
# helpers


def _schema() -> dict:
    return json.loads(resources.files("hardyquot").joinpath("schema/config.schema.json").read_text())


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, _schema())
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigInvalid(f"config invalid at {where}: {e.message}") from None


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _caps(value, n) -> tuple:
    if isinstance(value, str):
        value = [int(x) for x in value.split(",") if x.strip()]
    if isinstance(value, int):
        value = [value]
    value = list(value)
    if len(value) == 1:
        value = value * n
    if len(value) != n:
        raise ConfigInvalid(f"caps {value} do not match {n} variables")
    return tuple(value)


def _list(value, sep=",") -> list:
    if isinstance(value, list):
        return value
    parts = split_list(str(value), sep)
    return parts if len(parts) > 1 or sep == "," else split_list(str(value), ",")


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("true", "1", "yes", "y"):
        return True
    if s in ("false", "0", "no", "n"):
        return False
    raise ConfigInvalid(f"not a boolean: {v!r}")


def _fmt(z) -> str:
    z = complex(z)
    return repr(z.real) if z.imag == 0 else f"{z.real!r}{z.imag:+}j"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(np.real(x)), float(np.imag(x))]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, MPoly):
        return repr(x)
    return x


# ---------------------------------------------------------------------------
# experiments


def run_theorem31(spec) -> Result:
    n = int(spec["n"])
    theta = parse_inner(spec["theta"], n)
    grid = TruncationGrid(_caps(spec["caps"], n))
    trail = spec["trail"]
    l = spec.get("l")
    if isinstance(trail, str):
        if ":" in trail:
            var, trail = trail.split(":", 1)
            if var.strip().lstrip("wz").isdigit():
                l = l or int(var.strip().lstrip("wz"))
        trail = [parse_complex(t) for t in split_list(trail)]
    else:
        trail = [parse_complex(t) for t in trail]
    l = l or 3
    w12 = [parse_complex(t) for t in _list(spec["w12"])]
    if len(w12) != 2:
        raise ConfigInvalid("w12 needs two values")
    w_fixed = w12 + [0j] * (n - 2)
    rep = theorem31_matrix_probe(theta, grid, w_fixed, l, trail, tol=spec.get("tol"))
    rows = [Row(f"w{l}", _fmt(t), "kernel_form", m, c) for t, m, c in zip(trail, rep.measured, rep.closed_form)]
    return Result(rows, rep.verdict.value, rep.to_dict())


def run_lemma25(spec) -> Result:
    n = int(spec["n"])
    B = parse_blaschke(spec["theta"])
    caps = _caps(spec.get("caps", [B.degree + 3] + [6] * (n - 1)), n)
    rep = lemma25_block_probe(B, n, TruncationGrid(caps))
    rows = [
        Row("caps", ",".join(map(str, caps)), "block_residual", rep.extras["residual"], 0.0),
        Row("caps", ",".join(map(str, caps)), "block_size", rep.extras["block_size"]),
    ]
    return Result(rows, rep.verdict.value, rep.to_dict())


def run_doubly_commuting(spec) -> Result:
    dims = []
    for d in _list(spec["dims"]):
        s = str(d).strip().lower()
        dims.append(math.inf if s in ("inf", "infinity", "∞") else int(s))
    flags = spec.get("flags")
    flags = [_bool(f) for f in _list(flags)] if flags is not None else None
    v = doubly_commuting_verdict(dims, flags)
    rows = [Row("dims", ",".join(str(d) for d in dims), "essentially_normal", float(v.value == "EssentiallyNormal"))]
    return Result(rows, v.value, {"dims": [str(d) for d in dims], "flags": flags})


def run_rudin(spec) -> Result:
    psis = [parse_blaschke(s) for s in _list(spec["psis"], ";")]
    phis = [parse_blaschke(s) for s in _list(spec["phis"], ";")]
    m = int(spec["m"])
    rs = RudinFinite(psis, phis)
    if not 1 <= m < len(psis):
        raise ConfigInvalid(f"m={m} needs 1 <= m < {len(psis)}")
    if "beta" in spec:
        beta = parse_complex(spec["beta"])
    else:
        pool = list(psis[m].zeros)
        for a in psis[m - 1].zeros:
            pool.remove(min(pool, key=lambda b: abs(a - b)))
        beta = max(pool, key=abs)
    lam = parse_complex(spec["lam"]) if "lam" in spec else phis[m].zeros[0]
    rep = rudin_probe(rs, m, beta, lam, TruncationGrid(_caps(spec["caps"], 2)), tol=spec.get("tol"))
    rows = [Row("beta,lam", f"{_fmt(beta)},{_fmt(lam)}", "self_commutator_form", rep.measured[0], rep.closed_form[0])]
    return Result(rows, rep.verdict.value, rep.to_dict())


def run_homogeneous(spec) -> Result:
    p = parse_polynomial(spec["p"], 2)
    rep = boundary_rep_verdict(p, int(spec["caps"]), int(spec["resolution"]))
    rows = []
    if rep.sup_norm is not None:
        key, val = "caps", str(spec["caps"])
        rows = [
            Row(key, val, "norm_lower_bound", rep.norm_lower_bound),
            Row(key, val, "sup_norm_on_spectrum", rep.sup_norm),
            Row(key, val, "margin", rep.margin),
        ]
    return Result(rows, rep.verdict_br.value, rep.to_dict(), key="sup_norm_on_spectrum")


def run_weighted_shift(spec) -> Result:
    alpha = parse_complex(spec["alpha"])
    N = int(spec["N"])
    cap = int(spec["caps"])
    swap = _bool(spec["swap"])
    weights = weighted_shift_model(alpha, N, swap=swap)
    z1, z2 = MPoly.variable(2, 0), MPoly.variable(2, 1)
    model = homogeneous_model(z1 - alpha * z2, cap)
    var = 1 if (swap and abs(alpha) < 1) else 0
    sub = np.abs(slice_subdiagonal(model, var))
    k = min(N, cap - 1, len(sub))
    rows = [Row("n", str(i), "weight", weights[i], sub[i]) for i in range(k)]
    rows += [Row("n", str(i), "weight", weights[i]) for i in range(k, N)]
    ok = all(r.deviation <= 1e-10 for r in rows[:k]) and np.all(np.diff(weights) > 0) and np.all(weights < 1)
    verdict = "Consistent" if ok else Verdict.INCONCLUSIVE.value
    return Result(rows, verdict, {"weights": weights, "matrix_subdiagonal": sub[:k]})


def run_eta_spectrum(spec) -> Result:
    etas = [parse_blaschke(s) for s in _list(spec["eta"])]
    n = len(etas)
    samples = int(spec["samples"])
    lams = np.exp(2j * np.pi * np.arange(samples) / samples)
    pts = eta_spectrum_sample(etas, lams)
    expected = samples * int(np.prod([e.degree for e in etas]))
    rows = [Row("samples", str(samples), "point_count", len(pts), expected)]
    polys = [parse_polynomial(s, n) for s in _list(spec["polys"], ";")]
    checks = qeta_vonneumann_check(etas, polys, TruncationGrid(_caps(spec["caps"], n)))
    for src, c in zip(_list(spec["polys"], ";"), checks):
        rows.append(Row("q", str(src), "operator_norm_minus_boundary_sup", c.operator_norm - c.boundary_sup))
    ok = len(pts) == expected and all(c.holds for c in checks)
    details = {"checks": [{"q": str(s), "operator_norm": c.operator_norm, "boundary_sup": c.boundary_sup, "slack": c.slack} for s, c in zip(_list(spec["polys"], ";"), checks)]}
    return Result(rows, "Consistent" if ok else Verdict.INCONCLUSIVE.value, details)


def run_appendix_norm(spec) -> Result:
    etas = [parse_blaschke(s) for s in _list(spec["eta"])]
    model = VarietyModel(tuple(etas))
    f = parse_polynomial(spec["f"], model.n)
    rep = a2n_report(model, f, int(spec["nw"]), int(spec["radial"]), int(spec["angular"]))
    masses = fibre_measure(model, 1.0)
    rows = [
        Row("nw", str(spec["nw"]), "norm", rep.norm),
        Row("nw", str(spec["nw"]), "norm_sq", rep.norm_sq),
        Row("nw", str(spec["nw"]), "quadrature_error_estimate", rep.quadrature_error_estimate),
    ]
    rows += [Row("sheet", str(k), "fibre_mass", w) for k, w in enumerate(masses)]
    verdict = "Consistent" if rep.quadrature_error_estimate < 1e-6 else Verdict.INCONCLUSIVE.value
    return Result(rows, verdict, rep.to_dict(), key="norm")


RUNNERS = {
    "theorem31": run_theorem31,
    "lemma25": run_lemma25,
    "doubly-commuting": run_doubly_commuting,
    "rudin": run_rudin,
    "homogeneous-certify": run_homogeneous,
    "weighted-shift": run_weighted_shift,
    "eta-spectrum": run_eta_spectrum,
    "appendix-norm": run_appendix_norm,
}


def execute(cfg: dict) -> Result:
    """Validate ``cfg`` and run it; parse problems surface as :class:`ConfigInvalid`."""
    validate_config(cfg)
    exp = cfg["experiment"]
    spec = {**DEFAULTS[exp], **cfg.get("spec", {})}
    missing = [k for k in FLAGS[exp] if k not in spec and k in _required(exp)]
    if missing:
        raise ConfigInvalid(f"missing spec fields: {', '.join(missing)}")
    try:
        return RUNNERS[exp](spec)
    except HardyQuotError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigInvalid(str(e)) from e


def _required(exp) -> set:
    branch = next(b for b in _schema()["allOf"] if b["if"]["properties"]["experiment"]["const"] == exp)
    return set(branch["then"]["properties"]["spec"].get("required", []))


# ---------------------------------------------------------------------------
# reports


def result_rows(exp: str, rows) -> list:
    out = []
    for r in rows:
        v = complex(r.value)
        ref = None if r.reference is None else complex(r.reference)
        out.append({
            "experiment": exp,
            "param_key": r.param_key,
            "param_value": r.param_value,
            "metric_name": r.metric,
            "value_re": float(v.real),
            "value_im": float(v.imag),
            "reference_re": None if ref is None else ref.real,
            "reference_im": None if ref is None else ref.imag,
            "deviation": r.deviation,
        })
    return out


def render(cfg: dict, result: Result, fmt: str) -> str:
    exp = cfg["experiment"]
    rows = result_rows(exp, result.rows)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow(["" if r[c] is None else r[c] for c in CSV_COLUMNS])
        return buf.getvalue()
    report = {
        "tool": "hql",
        "version": __version__,
        "config_hash": config_hash(cfg),
        "config": cfg,
        "experiment": exp,
        "verdict": result.verdict,
        "rows": rows,
        "details": _jsonable(result.details),
    }
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# sweeps


def _threads() -> int:
    raw = os.environ.get("HQL_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        raise ConfigInvalid(f"HQL_THREADS must be an integer, got {raw!r}") from None
    if k < 1:
        raise ConfigInvalid("HQL_THREADS must be >= 1")
    return k


def _key_metric(result: Result):
    if result.key is not None:
        for r in result.rows:
            if r.metric == result.key:
                return r.metric, complex(r.value)
    devs = [r for r in result.rows if r.deviation is not None]
    if devs:
        return "max_deviation", max(r.deviation for r in devs)
    if result.rows:
        return result.rows[0].metric, complex(result.rows[0].value)
    return "verdict", float("nan")


def sweep(cfg: dict) -> Result:
    sw = cfg.get("sweep")
    if not sw or not sw.get("values"):
        raise ConfigInvalid("sweep needs a non-empty list of values")
    validate_config(cfg)
    param = sw["param"]
    configs = []
    for v in sw["values"]:
        c = copy.deepcopy(cfg)
        c.pop("sweep")
        c.setdefault("spec", {})[param] = v
        configs.append(c)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(execute, configs))
    rows, prev = [], None
    verdicts = []
    for v, res in zip(sw["values"], results):
        name, val = _key_metric(res)
        rows.append(Row(param, str(v), name, val, prev))
        prev = val
        verdicts.append(res.verdict)
    worst = Verdict.INCONCLUSIVE.value if Verdict.INCONCLUSIVE.value in verdicts else verdicts[-1]
    runs = [{"value": v, "verdict": r.verdict, "details": r.details} for v, r in zip(sw["values"], results)]
    return Result(rows, worst, {"param": param, "runs": runs})


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hql", description="Truncated quotient-module experiments.")
    ap.add_argument("--version", action="version", version=f"hql {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for command in ("run", "sweep"):
        cp = sub.add_parser(command, help=f"{command} an experiment")
        esub = cp.add_subparsers(dest="experiment", required=True)
        for exp in EXPERIMENTS:
            ep = esub.add_parser(exp)
            ep.add_argument("--config", help="JSON config file (flags override its spec)")
            ep.add_argument("--output", help="report path (default: stdout)")
            ep.add_argument("--format", choices=("json", "csv"), help="report format")
            ep.add_argument("--strict", action="store_true", default=None, help="exit 3 on an Inconclusive verdict")
            for name, (typ, hlp) in FLAGS[exp].items():
                if typ is bool:
                    ep.add_argument(f"--{name}", action="store_true", default=None, help=hlp)
                else:
                    ep.add_argument(f"--{name}", type=typ, help=hlp)
            if command == "sweep":
                ep.add_argument("--param", choices=("caps", "resolution"), help="parameter to sweep")
                ep.add_argument("--values", help="comma-separated integer values")
    return ap


def _merge(args) -> dict:
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigInvalid(f"cannot read config {args.config}: {e}") from None
        if not isinstance(cfg, dict):
            raise ConfigInvalid("config must be a JSON object")
        if cfg.get("experiment", args.experiment) != args.experiment:
            raise ConfigInvalid(f"config is for {cfg['experiment']!r}, not {args.experiment!r}")
    cfg["experiment"] = args.experiment
    spec = dict(cfg.get("spec", {}))
    for name, (typ, _) in FLAGS[args.experiment].items():
        v = getattr(args, name, None)
        if v is None:
            continue
        if name == "caps" and isinstance(v, str):
            try:
                parts = [int(x) for x in v.split(",")]
            except ValueError:
                raise ConfigInvalid(f"caps must be integers, got {v!r}") from None
            v = parts[0] if len(parts) == 1 else parts
        spec[name] = v
    if spec or "spec" in cfg:
        cfg["spec"] = spec
    out = dict(cfg.get("output", {}))
    if args.output:
        out["path"] = args.output
    if args.format:
        out["format"] = args.format
    if out:
        cfg["output"] = out
    if args.strict:
        cfg["strict"] = True
    if args.command == "sweep":
        sw = dict(cfg.get("sweep", {}))
        if args.param:
            sw["param"] = args.param
        if args.values is not None:
            try:
                sw["values"] = [int(x) for x in args.values.split(",") if x.strip()]
            except ValueError:
                raise ConfigInvalid(f"sweep values must be integers, got {args.values!r}") from None
        if not sw.get("values"):
            raise ConfigInvalid("sweep needs a non-empty --values list")
        sw.setdefault("param", "caps")
        cfg["sweep"] = sw
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _merge(args)
        result = sweep(cfg) if args.command == "sweep" else execute(cfg)
    except ConfigInvalid as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return 2
    except HardyQuotError as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return 3
    fmt = cfg.get("output", {}).get("format", "json")
    text = render(cfg, result, fmt)
    path = cfg.get("output", {}).get("path")
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.get("strict") and result.verdict == Verdict.INCONCLUSIVE.value:
        print(json.dumps({"error": "Inconclusive", "message": "strict mode: verdict Inconclusive"}), file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
