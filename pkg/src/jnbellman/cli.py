"""Command-line front end.

Subcommands: constants, eval, extremal, verify, sweep.  Exit status is 0 on
success, 1 for invalid input and 2 when a numerical routine fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import bellman, constants, extremal, verify
from .domain import BellmanPoint, ParabolicStrip, Sign, contains, split_interval, vertical_gap
from .errors import BellmanError, NumericalError
from .piecewise import bmo_norm_continuous, bmo_norm_dyadic, moments, sample_table

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2
INFINITE_CONT = "infinite (eps >= 1)"
INFINITE_DYAD = "infinite (eps >= sqrt(2)*log(2))"


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.15g}"


@dataclass
class RunConfig:
    command: str
    setting: str = "continuous"
    sign: Sign = Sign.PLUS
    eps: float | None = None
    x1: float | None = None
    x2: float | None = None
    dim: int = 1
    depth: int = 40
    grid: int = 64
    budget: int = 20_000
    out_path: str | None = None
    format: str | None = None
    seed: int = 0
    suite: str = "all"
    eps_min: float = 0.05
    eps_max: float = 0.95
    steps: int = 19
    samples: int = 1024


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Records and emitters
# ---------------------------------------------------------------------------


def record(name: str, value, units: str = "", conjectural: bool = False, formula: str = "", note: str = ""):
    return {"name": name, "value": value, "units": units, "conjectural": conjectural,
            "paper_eq": formula, "note": note}


def _json_value(v):
    if isinstance(v, float):
        if math.isinf(v) or math.isnan(v):
            return None
        return float(fmt(v))
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    return v


def emit_records(cfg: RunConfig, recs: list, out) -> None:
    if cfg.format == "json":
        doc = {"command": cfg.command, "records": [
            {"name": r["name"], "value": _json_value(r["value"]), "units": r["units"],
             "conjectural": r["conjectural"], "paper_eq": r["paper_eq"],
             **({"note": r["note"]} if r["note"] else {})} for r in recs]}
        json.dump(doc, out, indent=2, ensure_ascii=False)
        out.write("\n")
    elif cfg.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["name", "value", "units", "conjectural", "paper_eq", "note"])
        for r in recs:
            w.writerow([r["name"], _text_value(r), r["units"], str(r["conjectural"]).lower(),
                        r["paper_eq"], r["note"]])
    else:
        for r in recs:
            tag = " [conjectural]" if r["conjectural"] else ""
            out.write(f"{r['name']} = {_text_value(r)}{tag}\n")


def _text_value(r) -> str:
    v = r["value"]
    if isinstance(v, float) and math.isinf(v) and r["note"]:
        return r["note"]
    if isinstance(v, (list, tuple)):
        return " ".join(fmt(x) for x in v)
    if isinstance(v, float):
        return fmt(v)
    return str(v)


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------


def _need(cfg: RunConfig, *names):
    for n in names:
        if getattr(cfg, n) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required for '{cfg.command}'")


def _point(cfg: RunConfig) -> BellmanPoint:
    _need(cfg, "x1", "x2")
    return BellmanPoint(cfg.x1, cfg.x2)


def cmd_constants(cfg: RunConfig) -> list:
    _need(cfg, "eps")
    eps = cfg.eps
    recs = []
    if cfg.setting == "continuous":
        c = constants.c_continuous(eps)
        recs.append(record("C(eps)", c, "dimensionless", False, "exp(-eps)/(1-eps)",
                           INFINITE_CONT if math.isinf(c) else ""))
        recs.append(record("eps0", constants.EPS0_CONTINUOUS, "dimensionless", False, "1"))
    elif cfg.setting == "dyadic":
        c = constants.c_dyadic(eps)
        recs.append(record("C_dyadic(eps)", c, "dimensionless", False,
                           "exp(-eps/sqrt2)/(2-exp(eps/sqrt2))", INFINITE_DYAD if math.isinf(c) else ""))
        recs.append(record("eps0_dyadic", constants.EPS0_DYADIC, "dimensionless", False, "sqrt(2)*log(2)"))
        if eps > 0:
            if eps < constants.EPS0_DYADIC:
                r = constants.delta_root(eps, Sign.PLUS)
                recs.append(record("delta_plus", r.root, "strip width", False, "g(delta, eps) = 0"))
                recs.append(record("residual_plus", r.residual, "", False, "g(delta_plus, eps)"))
            r = constants.delta_root(eps, Sign.MINUS)
            recs.append(record("delta_minus", r.root, "strip width", False, "g-(delta, eps) = 0"))
            recs.append(record("residual_minus", r.residual, "", False, "g-(delta_minus, eps)"))
    else:
        rec = constants.conjectured_nd(eps, cfg.dim)
        conj = cfg.dim >= 2
        recs.append(record("n", float(rec.n), "dimension", conj, "dimension of the dyadic cubes"))
        recs.append(record("C_nd(eps)", rec.c_nd, "dimensionless", conj,
                           "(2^n-1)exp(-eps 2^(-n/2))/(2^n-exp((2^(n/2)-2^(-n/2))eps))",
                           "infinite (eps >= eps0_nd)" if math.isinf(rec.c_nd) else ""))
        recs.append(record("eps0_nd", rec.eps0_nd, "dimensionless", conj, "n log2/(2^(n/2)-2^(-n/2))"))
        for name, v in (("delta_plus_nd", rec.delta_plus_nd), ("delta_minus_nd", rec.delta_minus_nd)):
            recs.append(record(name, math.nan if v is None else v, "strip width", conj,
                               "n-dimensional analogue of g(delta, eps) = 0",
                               "" if v is not None else "not available"))
    return recs


def cmd_eval(cfg: RunConfig) -> list:
    _need(cfg, "eps")
    p = _point(cfg)
    if not contains(ParabolicStrip(cfg.eps), p):
        raise UsageError(f"point ({p.x1}, {p.x2}) is outside the strip of width eps = {cfg.eps}")
    if cfg.setting == "continuous":
        delta, where = cfg.eps, "delta = eps"
    elif cfg.setting == "dyadic":
        if cfg.sign is Sign.PLUS and cfg.eps >= constants.EPS0_DYADIC:
            return [record("B", math.inf if p.spread > 0 else math.exp(p.x1), "", False, "", INFINITE_DYAD)]
        delta, where = constants.delta_root(cfg.eps, cfg.sign).root, "delta = delta(eps)"
    else:
        raise UsageError("eval supports --setting continuous or dyadic")
    b = bellman.bellman_value(p, delta, cfg.sign)
    name = "B+" if cfg.sign is Sign.PLUS else "B-"
    recs = [record("delta", delta, "strip width", False, where),
            record(name, b, "", False, "(1 -+ g)/(1 -+ delta) exp(x1 +- g -+ delta)",
                   INFINITE_CONT if math.isinf(b) else "")]
    if math.isfinite(b) and vertical_gap(p, delta) > bellman.GAP_CUTOFF:
        d = bellman.bellman_derivatives(p, delta, cfg.sign)
        recs.append(record("grad", list(d.grad), "", False, "closed-form first partials"))
        recs.append(record("hess", [d.h11, d.h12, d.h22], "", False, "closed-form second partials (h11 h12 h22)"))
    return recs


def cmd_extremal(cfg: RunConfig, out) -> None:
    _need(cfg, "eps")
    p = _point(cfg)
    if cfg.setting == "continuous":
        phi = extremal.continuous_extremal(p, cfg.eps, cfg.sign)
        norm = bmo_norm_continuous(phi)
        delta = cfg.eps
    elif cfg.setting == "dyadic":
        phi = extremal.dyadic_extremal(p, cfg.eps, cfg.sign, cfg.depth)
        norm = bmo_norm_dyadic(phi)
        delta = constants.delta_root(cfg.eps, cfg.sign).root
    else:
        raise UsageError("extremal supports --setting continuous or dyadic")
    m = moments(phi)
    if cfg.format == "json":
        doc = {"command": "extremal", "setting": cfg.setting, "sign": cfg.sign.name.lower(),
               "function": phi.to_dict(),
               "records": [
                   {"name": "mean", "value": _json_value(m.mean), "units": "", "conjectural": False,
                    "paper_eq": "<phi>"},
                   {"name": "second_moment", "value": _json_value(m.second), "units": "", "conjectural": False,
                    "paper_eq": "<phi^2>"},
                   {"name": "exp_mean", "value": _json_value(m.exp_mean), "units": "", "conjectural": False,
                    "paper_eq": "<e^phi>"},
                   {"name": "bellman_value", "value": _json_value(bellman.bellman_value(p, delta, cfg.sign)),
                    "units": "", "conjectural": False, "paper_eq": "B(x1, x2)"},
                   {"name": "bmo_norm", "value": _json_value(norm), "units": "", "conjectural": False,
                    "paper_eq": "sup_J (<phi^2>_J - <phi>_J^2)^(1/2)"},
               ]}
        if cfg.setting == "dyadic":
            doc["records"].append({"name": "truncation_bound", "value": _json_value(phi.truncation_bound),
                                   "units": "", "conjectural": False, "paper_eq": "tail of the digit expansion"})
        json.dump(doc, out, indent=2)
        out.write("\n")
        return
    t, v = sample_table(phi, cfg.samples)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t", "phi"])
    for ti, vi in zip(t, v):
        w.writerow([fmt(float(ti)), fmt(float(vi))])


def cmd_sweep(cfg: RunConfig, out) -> None:
    if not 0 < cfg.eps_min <= cfg.eps_max:
        raise UsageError("need 0 < --eps-min <= --eps-max")
    if cfg.steps < 1:
        raise UsageError("--steps must be positive")
    grid = np.linspace(cfg.eps_min, cfg.eps_max, cfg.steps) if cfg.steps > 1 else np.array([cfg.eps_min])
    rows = []
    for e in grid:
        e = float(e)
        cc = constants.c_continuous(e)
        cd = constants.c_dyadic(e)
        dp = constants.delta_root(e, Sign.PLUS).root if e < constants.EPS0_DYADIC else None
        dm = constants.delta_root(e, Sign.MINUS).root
        n = cfg.dim if cfg.dim >= 2 else None
        cn = constants.c_nd(e, cfg.dim) if n else None
        rows.append({"eps": e, "C_cont": cc, "C_dyad": cd, "delta_plus": dp, "delta_minus": dm,
                     "conjectural_n": n, "C_conj": cn})
    cols = ["eps", "C_cont", "C_dyad", "delta_plus", "delta_minus", "conjectural_n", "C_conj"]
    if cfg.format == "json":
        doc = {"command": "sweep", "columns": cols, "conjectural_columns": ["C_conj"],
               "rows": [{k: (None if r[k] is None else _json_value(float(r[k])) if k != "conjectural_n"
                             else r[k]) for k in cols} for r in rows]}
        json.dump(doc, out, indent=2)
        out.write("\n")
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow(["" if r[k] is None or (isinstance(r[k], float) and math.isinf(r[k]))
                    else (str(r[k]) if k == "conjectural_n" else fmt(r[k])) for k in cols])


# ---------------------------------------------------------------------------
# Verification suites
# ---------------------------------------------------------------------------


def _suite_roots(cfg, rng):
    worst = 0.0
    for e in np.linspace(0.02, 0.96, 25):
        for s in (Sign.PLUS, Sign.MINUS):
            r = constants.delta_root(float(e), s)
            worst = max(worst, abs(r.residual))
    return worst <= 1e-12, f"max |g(delta(eps), eps)| = {fmt(worst)}"


def _suite_concavity(cfg, rng):
    worst = 0.0
    for _ in range(2000):
        delta = rng.uniform(0.05, 0.95)
        s = Sign.PLUS if rng.random() < 0.5 else Sign.MINUS
        x1 = rng.uniform(-2, 2)
        p = BellmanPoint(x1, x1 * x1 + rng.uniform(0, 0.999) * delta * delta)
        q = bellman.quadratic_form(p, rng.standard_normal(2), delta, s)
        worst = min(worst, q)
    return worst >= -1e-12, f"min quadratic form = {fmt(worst)}"


def _suite_hessian(cfg, rng):
    worst = 0.0
    for _ in range(100):
        delta = rng.uniform(0.3, 0.95)
        s = Sign.PLUS if rng.random() < 0.5 else Sign.MINUS
        p = verify.random_interior_point(rng, delta)
        worst = max(worst, verify.hessian_fd_check(p, delta, s, 1e-4))
    return worst < 1e-5, f"max relative FD discrepancy = {fmt(worst)}"


def _suite_ode(cfg, rng):
    worst = 0.0
    for _ in range(500):
        t, delta, s = verify.random_ode_sample(rng)
        worst = max(worst, abs(bellman.ode_residual(t, delta, s, 1e-4)))
    return worst < 1e-6, f"max |ODE residual| = {fmt(worst)}"


def _suite_scan(cfg, rng):
    eps = cfg.eps
    msgs, ok = [], True
    for s in (Sign.PLUS, Sign.MINUS):
        if s is Sign.PLUS and eps >= constants.EPS0_DYADIC:
            continue
        d = constants.delta_root(eps, s).root
        rep = verify.scan_constraint_set(d, eps, s, cfg.grid)
        ok &= abs(rep.extremum) <= 1e-6
        msgs.append(f"{s.name.lower()} extremum {fmt(rep.extremum)}")
    return ok, "; ".join(msgs)


def _suite_midpoint(cfg, rng):
    eps = cfg.eps
    worst = {Sign.PLUS: math.inf, Sign.MINUS: -math.inf}
    for s in worst:
        if s is Sign.PLUS and eps >= constants.EPS0_DYADIC:
            worst[s] = 0.0
            continue
        d = constants.delta_root(eps, s).root
        for _ in range(2000):
            xm, xp = verify.random_triple(rng, eps)
            g = verify.bellman_midpoint_gap(xm, xp, d, s)
            worst[s] = min(worst[s], g) if s is Sign.PLUS else max(worst[s], g)
    ok = worst[Sign.PLUS] >= -1e-10 and worst[Sign.MINUS] <= 1e-10
    return ok, f"min plus gap {fmt(worst[Sign.PLUS])}, max minus gap {fmt(worst[Sign.MINUS])}"


def _suite_induction(cfg, rng):
    eps = min(cfg.eps, 0.95)
    for _ in range(100):
        phi = verify.random_dyadic_function(rng, eps, 6)
        for s in (Sign.PLUS, Sign.MINUS):
            verify.bellman_induction(phi, eps, s, 6)
    return True, "100 random functions, both signs, monotone chains"


def _suite_oracle(cfg, rng):
    eps = cfg.eps
    if eps >= constants.EPS0_DYADIC:
        return True, "skipped (bound is infinite)"
    d = constants.delta_root(eps, Sign.PLUS).root
    p = BellmanPoint(0.0, eps * eps)
    best = verify.brute_force_oracle(p, eps, 3, cfg.budget, seed=int(rng.integers(2 ** 31)))
    bound = bellman.bellman_value(p, d, Sign.PLUS)
    return best <= bound + 1e-9, f"depth 3 best {fmt(best)} vs bound {fmt(bound)}"


def _suite_splitting(cfg, rng):
    eps = cfg.eps if cfg.eps < 1 else 0.5
    n = 0
    for ratio in (1.01, 1.1, 1.5):
        for _ in range(100):
            phi = verify.random_log_family(rng, eps)
            res = split_interval(phi, eps, ratio * eps)
            if res.rho_value > (ratio * eps) ** 2 + 1e-9:
                return False, f"spread {fmt(res.rho_value)} above eps1^2"
            n += 1
    return True, f"{n} splits within the eps1-strip"


SUITES = {
    "roots": _suite_roots,
    "concavity": _suite_concavity,
    "hessian": _suite_hessian,
    "ode": _suite_ode,
    "scan": _suite_scan,
    "midpoint": _suite_midpoint,
    "induction": _suite_induction,
    "oracle": _suite_oracle,
    "splitting": _suite_splitting,
}


def cmd_verify(cfg: RunConfig, out) -> int:
    if cfg.eps is None:
        cfg.eps = 0.5
    names = list(SUITES) if cfg.suite == "all" else [cfg.suite]
    rng = np.random.default_rng(cfg.seed)
    results = []
    for name in names:
        try:
            ok, detail = SUITES[name](cfg, rng)
        except NumericalError as exc:
            ok, detail = False, f"numerical failure: {exc}"
        results.append((name, ok, detail))
    if cfg.format == "json":
        json.dump({"command": "verify", "seed": cfg.seed, "eps": _json_value(cfg.eps),
                   "results": [{"check": n, "passed": ok, "detail": d} for n, ok, d in results]},
                  out, indent=2)
        out.write("\n")
    elif cfg.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["check", "status", "detail"])
        for n, ok, d in results:
            w.writerow([n, "pass" if ok else "FAIL", d])
    else:
        width = max(len(n) for n, _, _ in results)
        for n, ok, d in results:
            out.write(f"{n:<{width}}  {'pass' if ok else 'FAIL'}  {d}\n")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def validate(cfg: RunConfig) -> None:
    if cfg.eps is not None and not (math.isfinite(cfg.eps) and cfg.eps > 0):
        raise UsageError("--eps must be a positive finite number")
    if cfg.dim < 1:
        raise UsageError("--dim must be at least 1")
    if cfg.setting == "conjectured" and cfg.command not in ("constants", "sweep"):
        raise UsageError("the conjectured setting only provides constants")
    if cfg.depth < 1 or cfg.depth > 60:
        raise UsageError("--depth must be in 1..60")
    if cfg.grid < 2:
        raise UsageError("--grid must be at least 2")
    if cfg.budget < 1:
        raise UsageError("--budget must be positive")
    if cfg.command == "verify" and cfg.suite not in ("all", *SUITES):
        raise UsageError(f"unknown suite {cfg.suite!r}")
    if cfg.command == "extremal" and cfg.format == "csv" and cfg.samples < 1:
        raise UsageError("--samples must be positive")


def run(cfg: RunConfig, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    buf = io.StringIO()
    try:
        validate(cfg)
        code = EXIT_OK
        if cfg.command == "constants":
            emit_records(cfg, cmd_constants(cfg), buf)
        elif cfg.command == "eval":
            emit_records(cfg, cmd_eval(cfg), buf)
        elif cfg.command == "extremal":
            cmd_extremal(cfg, buf)
        elif cfg.command == "sweep":
            cmd_sweep(cfg, buf)
        elif cfg.command == "verify":
            code = cmd_verify(cfg, buf)
        else:
            raise UsageError(f"unknown command {cfg.command!r}")
    except UsageError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INVALID
    except NumericalError as exc:
        err.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (BellmanError, ValueError, TypeError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INVALID
    text = buf.getvalue()
    if cfg.out_path:
        with open(cfg.out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    return code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--setting", choices=["continuous", "dyadic", "conjectured"], default="continuous")
    common.add_argument("--sign", default="plus", help="plus (upper bound) or minus (lower bound)")
    common.add_argument("--eps", type=float, help="BMO norm bound")
    common.add_argument("--x1", type=float, help="first coordinate: average of phi")
    common.add_argument("--x2", type=float, help="second coordinate: average of phi**2")
    common.add_argument("--dim", type=int, default=1, help="dimension for the conjectured setting")
    common.add_argument("--depth", type=int, default=40, help="number of dyadic digits")
    common.add_argument("--grid", type=int, default=64, help="scan grid per axis")
    common.add_argument("--budget", type=int, default=20_000, help="oracle objective evaluations")
    common.add_argument("--out", dest="out_path", help="write output to this file")
    common.add_argument("--format", choices=["csv", "json"], help="machine-readable output")
    common.add_argument("--seed", type=int, default=0)

    parser = _Parser(prog="jnbellman", description="Sharp John-Nirenberg constants via Bellman functions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("constants", parents=[common], help="sharp constants and delta(eps)")
    sub.add_parser("eval", parents=[common], help="evaluate the Bellman function at (x1, x2)")
    p_ext = sub.add_parser("extremal", parents=[common], help="export an extremal function")
    p_ext.add_argument("--samples", type=int, default=1024, help="rows of the sample table")
    p_ver = sub.add_parser("verify", parents=[common], help="run verification suites")
    p_ver.add_argument("--suite", default="all", help="all or one of: " + ", ".join(SUITES))
    p_sw = sub.add_parser("sweep", parents=[common], help="table of constants over an eps grid")
    p_sw.add_argument("--eps-min", type=float, default=0.05)
    p_sw.add_argument("--eps-max", type=float, default=0.95)
    p_sw.add_argument("--steps", type=int, default=19)
    return parser


def parse_config(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    try:
        sign = Sign.parse(ns.sign)
    except BellmanError as exc:
        raise UsageError(str(exc)) from exc
    kw = {k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__}
    kw["sign"] = sign
    return RunConfig(**kw)


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
