"""Command line front end.

Subcommands: ``solve``, ``control``, ``demo``, ``bench``, ``verify``, ``lab``.
Instances, reports and certificates are JSON; traces and solutions are CSV
with shortest round-trip float formatting, so identical runs produce
identical files.  Exit codes: 0 converged/passed, 2 infeasible but
stationary, 3 iteration or penalty limit (or a failed check), 1 errors.
"""

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Optional

import numpy as np

from . import alm as alm_mod
from . import instances, lab, sparse_control, stationarity
from .alm import AlmConfig, run_alm
from .subsolver import PGConfig

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_LIMIT = 3

STATUS_EXIT = {
    alm_mod.CONVERGED: EXIT_OK,
    alm_mod.INFEASIBLE_STATIONARY: EXIT_INFEASIBLE,
    alm_mod.ITER_LIMIT: EXIT_LIMIT,
    alm_mod.PENALTY_LIMIT: EXIT_LIMIT,
}

FAMILIES = ("builtin:example-5-1", "builtin:convex-qp", "sparse-control", "custom-quadratic")

CONFIG_KEYS = ("theta0", "gamma", "tau", "b_max", "tol_feas", "tol_stat", "theta_max", "k_max",
               "subsolver", "eps0", "bf_lower", "bf_upper", "bf_h0", "bf_tol")

FAMILY_PARAMS = {
    "builtin:example-5-1": {},
    "builtin:convex-qp": {"seed": 0, "n": None, "m": None},
    "sparse-control": {"n": 127, "p": 0.5, "sigma": 1e-4, "ua": -1000.0, "ub": 1000.0,
                       "target": "hat", "operator": "laplace1d"},
    "custom-quadratic": {"Q": None, "c": None, "A": None, "b": None, "constraint": "eq",
                         "lower": None, "upper": None, "p": None, "q_weight": 1.0},
}

# The multiplier of this instance grows without bound; a tiny feasibility
# tolerance keeps the run going until the penalty limit.
FAMILY_CONFIG = {"builtin:example-5-1": {"tol_feas": 1e-14}}


def defaults_table():
    """Every default used by the solvers, echoed into each report."""
    cfg = {f.name: getattr(AlmConfig(), f.name) for f in fields(AlmConfig) if f.name != "pg"}
    pg = asdict(PGConfig())
    return {
        "alm": _jsonable(cfg),
        "pg": _jsonable(pg),
        "families": _jsonable(FAMILY_PARAMS),
        "family_config": _jsonable(FAMILY_CONFIG),
        "sparse_control_tol_act": 1e-8,
    }


class InstanceError(ValueError):
    pass


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        return f
    if isinstance(v, np.integer):
        return int(v)
    return v


def fmt(v):
    """Shortest round-trip decimal for floats."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


# ---------------------------------------------------------------------------
# instance documents
# ---------------------------------------------------------------------------

def load_document(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InstanceError(f"cannot read instance file {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    return validate_document(doc, where=str(path))


def validate_document(doc, where="instance"):
    """Strict check of an instance document; returns it with defaults filled in."""
    if not isinstance(doc, dict):
        raise InstanceError(f"{where}: top level must be an object")
    allowed = {"schema_version", "family", "params", "config", "seed", "name"}
    for key in doc:
        if key not in allowed:
            raise InstanceError(f"{where}: unknown field '{key}'")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise InstanceError(f"{where}: field 'schema_version' must be {SCHEMA_VERSION}, "
                            f"got {doc.get('schema_version')!r}")
    family = doc.get("family")
    if family not in FAMILIES:
        raise InstanceError(f"{where}: field 'family' must be one of {FAMILIES}, got {family!r}")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise InstanceError(f"{where}: field 'params' must be an object")
    for key in params:
        if key not in FAMILY_PARAMS[family]:
            raise InstanceError(f"{where}: unknown field 'params.{key}' for family {family}")
    config = doc.get("config", {})
    if not isinstance(config, dict):
        raise InstanceError(f"{where}: field 'config' must be an object")
    for key in config:
        if key not in CONFIG_KEYS:
            raise InstanceError(f"{where}: unknown field 'config.{key}'")
    if doc.get("name") is not None and not isinstance(doc["name"], str):
        raise InstanceError(f"{where}: field 'name' must be a string or null")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise InstanceError(f"{where}: field 'seed' must be an integer")
    out = {
        "schema_version": SCHEMA_VERSION,
        "family": family,
        "params": {**FAMILY_PARAMS[family], **params},
        "config": dict(config),
        "seed": seed,
        "name": doc.get("name"),
    }
    return out


def _arr(v):
    if v is None:
        return None
    def conv(x):
        return [conv(y) for y in x] if isinstance(x, (list, tuple)) else _num(x)
    try:
        return np.asarray(conv(v), dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"malformed numeric array: {exc}") from exc


def _num(x):
    if isinstance(x, bool):
        raise InstanceError(f"not a number: {x!r}")
    if isinstance(x, str):
        if x in ("inf", "+inf"):
            return math.inf
        if x == "-inf":
            return -math.inf
        raise InstanceError(f"not a number: {x!r}")
    return float(x)


def build_problem(doc):
    """``(ProblemSpec, x0, extra)`` for a validated document."""
    fam, prm = doc["family"], doc["params"]
    if fam == "builtin:example-5-1":
        return instances.example_5_1(), None, {}
    if fam == "builtin:convex-qp":
        seed = prm["seed"] if prm["seed"] is not None else doc["seed"]
        return instances.convex_qp(seed, prm["n"], prm["m"]), None, {}
    if fam == "sparse-control":
        inst = sparse_control.build_instance(prm["n"], prm["p"], prm["sigma"], (prm["ua"], prm["ub"]),
                                             prm["target"], prm["operator"])
        return inst.problem(), sparse_control.smooth_start(inst), {"control": inst}
    if fam == "custom-quadratic":
        if prm["Q"] is None or prm["c"] is None:
            raise InstanceError("custom-quadratic needs params.Q and params.c")
        P = instances.quadratic(_arr(prm["Q"]), _arr(prm["c"]), _arr(prm["A"]), _arr(prm["b"]),
                                prm["constraint"], _arr(prm["lower"]), _arr(prm["upper"]),
                                prm["p"], prm["q_weight"], name=doc["name"] or fam)
        return P, None, {}
    raise InstanceError(f"unknown family {fam!r}")


def resolve_config(doc, args=None):
    """Family defaults, then document overrides, then command-line flags."""
    values = dict(FAMILY_CONFIG.get(doc["family"], {}))
    for k, v in doc["config"].items():
        values[k] = _arr(v) if k in ("bf_lower", "bf_upper") else v
    if args is not None:
        for k in ("theta0", "gamma", "tau", "tol_feas", "tol_stat", "theta_max", "k_max"):
            v = getattr(args, k, None)
            if v is not None:
                values[k] = v
    try:
        return AlmConfig(**values)
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"invalid config: {exc}") from exc


def config_dict(cfg):
    d = {f.name: getattr(cfg, f.name) for f in fields(cfg) if f.name != "pg"}
    d["pg"] = asdict(cfg.pg)
    return _jsonable(d)


# ---------------------------------------------------------------------------
# trace output
# ---------------------------------------------------------------------------

class CsvTraceSink:
    """Append-only trace rows; one sink per run."""

    def __init__(self, fh):
        self._w = csv.writer(fh, lineterminator="\n")
        self._w.writerow(alm_mod.TRACE_COLUMNS)

    def __call__(self, row):
        self._w.writerow([fmt(v) for v in row.as_tuple()])


def trace_csv_text(trace):
    buf = io.StringIO()
    sink = CsvTraceSink(buf)
    for row in trace:
        sink(row)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _certificate(P, res):
    last = res.steps[-1]
    g = np.asarray(P.f.grad(res.x), dtype=float)
    if P.G is not None:
        g = g + np.asarray(P.G.adjoint(res.x, last.lam), dtype=float)
    xi, mu = stationarity._best_split(P, res.x, g)
    cert = stationarity.m_stat_residual(P, res.x, last.lam, mu, xi)
    approx = stationarity.approx_stat_check(P, stationarity.alm_sequence(P, [last]), res.x).rows[0]
    return cert, approx


def solve_document(doc, args=None, out_dir=None):
    """Run one instance; returns the report dict and trace text."""
    t0 = time.perf_counter()
    P, x0, extra = build_problem(doc)
    cfg = resolve_config(doc, args)
    t1 = time.perf_counter()
    buf = io.StringIO()
    res = run_alm(P, cfg, x0=x0, sink=CsvTraceSink(buf))
    t2 = time.perf_counter()
    cert, approx = _certificate(P, res)
    t3 = time.perf_counter()
    last = res.trace[-1]
    report = {
        "schema_version": SCHEMA_VERSION,
        "instance": doc,
        "config": config_dict(cfg),
        "defaults": defaults_table(),
        "result": {
            "status": res.status,
            "outer_iterations": res.iterations,
            "x": _jsonable(res.x),
            "lambda": _jsonable(res.lam),
            "theta_final": last.theta,
            "feasibility": last.feasibility,
            "inner_residual": last.inner_residual,
            "objective": last.objective,
            "lambda_inf": last.lambda_inf,
        },
        "certificate": _jsonable(cert.to_dict()),
        "approximate_stationarity": {
            "eps": approx.eps, "eta_norm": approx.eta_norm,
            "memberships": "ok" if approx.ok else "fail",
        },
        "timings": {"build": t1 - t0, "solve": t2 - t1, "certify": t3 - t2},
    }
    return report, buf.getvalue(), res


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def cmd_solve(args):
    doc = load_document(args.instance)
    if args.seed is not None:
        doc["seed"] = args.seed
    report, trace_text, res = solve_document(doc, args)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "report.json"), json.dumps(report, indent=2, sort_keys=True) + "\n")
    _write(os.path.join(args.out, "trace.csv"), trace_text)
    cert_doc = {"schema_version": SCHEMA_VERSION, "instance": doc, "certificate": report["certificate"]}
    _write(os.path.join(args.out, "certificate.json"), json.dumps(cert_doc, indent=2, sort_keys=True) + "\n")
    r = report["result"]
    print(f"status={r['status']} outer_iterations={r['outer_iterations']} "
          f"feasibility={fmt(r['feasibility'])} residual={fmt(r['inner_residual'])} "
          f"lambda_inf={fmt(r['lambda_inf'])}")
    return STATUS_EXIT[res.status]


# ---------------------------------------------------------------------------
# control
# ---------------------------------------------------------------------------

def cmd_control(args):
    if args.n < 1:
        raise InstanceError("--n must be positive")
    if not 0 < args.p < 1:
        raise InstanceError("--p must lie in (0, 1)")
    if args.sigma < 0:
        raise InstanceError("--sigma must be nonnegative")
    if not (args.ua < 0 < args.ub):
        raise InstanceError("--ua < 0 < --ub required")
    inst = sparse_control.build_instance(args.n, args.p, args.sigma, (args.ua, args.ub), args.target, args.operator)
    sol = sparse_control.solve_oc(inst, tol=args.tol)
    rep = sparse_control.verify_sparse_control(inst, sol.u, sol.eta, args.tol_res, args.tol_act)
    size, frac = sparse_control.sparsity_stats(sol.u, args.tol_act)
    os.makedirs(args.out, exist_ok=True)
    sparse_control.write_solution_csv(os.path.join(args.out, "solution.csv"), inst, sol, args.tol_act)
    lines = [f"instance n={args.n} p={fmt(args.p)} sigma={fmt(args.sigma)} target={args.target} "
             f"operator={args.operator}",
             f"objective={fmt(sol.objective)} residual={fmt(sol.residual)} iterations={sol.iterations}",
             f"support={size} support_fraction={fmt(frac)}"]
    lines += rep.lines()
    lines.append("verifier " + ("PASS" if rep.passed else "FAIL"))
    text = "\n".join(lines) + "\n"
    _write(os.path.join(args.out, "verify.txt"), text)
    sys.stdout.write(text)
    return EXIT_OK if rep.passed else EXIT_LIMIT


# ---------------------------------------------------------------------------
# demos
# ---------------------------------------------------------------------------

def _verdict(ok):
    return "PASS" if ok else "FAIL"


def demo_3_1(out):
    r = lab.lsc_relative_estimate(lab.ex31_function(), [lab.closed(0.0, 1.0)], lab.closed(0.0, 1.0))
    ok = r.lhs == 0.0 and r.rhs == 1.0 and r.holds
    out(f"lhs={fmt(r.lhs)} rhs={fmt(r.rhs)} slack={fmt(r.slack)} inequality={'holds' if r.holds else 'fails'}")
    out(_verdict(ok))
    return ok


def demo_3_2(out):
    omega = [lab.point(0.0), lab.point(1.0)]
    r1 = lab.lsc_relative_estimate(lab.ex32_function(), omega, lab.closed(-1.0, 1.0))
    r2 = lab.lsc_relative_estimate(lab.ex32_function(), omega, lab.open_(-1.0, 1.0))
    ok1 = r1.lhs == -1.0 and r1.holds
    ok2 = r2.lhs == 0.0 and r2.rhs == -1.0 and not r2.holds
    out(f"U1=[-1,1]: lhs={fmt(r1.lhs)} rhs={fmt(r1.rhs)} inequality={'holds' if r1.holds else 'fails'} "
        f"{_verdict(ok1)}")
    out(f"U2=(-1,1): lhs={fmt(r2.lhs)} rhs={fmt(r2.rhs)} inequality={'holds' if r2.holds else 'fails'} "
        f"{'FAIL-as-expected' if ok2 else 'UNEXPECTED'}")
    out(_verdict(ok1 and ok2))
    return ok1 and ok2


def demo_4_1(out, n_samples=20, budget=10_000, seed=0):
    s1, s2 = lab.Ray41(), lab.ExpRegion41()
    rng = np.random.default_rng(seed)
    found = 0
    for _ in range(n_samples):
        r = 0.5 * math.sqrt(rng.random())
        phi = 2 * math.pi * rng.random()
        a = np.array([r * math.cos(phi), r * math.sin(phi)])
        rho = 10.0 ** rng.uniform(-3, -1)
        g = lab.enlargement_gap(s1, s2, a, rho)
        found += g.witness is not None
        out(f"a=({fmt(a[0])}, {fmt(a[1])}) rho={fmt(rho)} gap={fmt(g.gap)} "
            f"witness={'yes' if g.witness is not None else 'no'}")
    probe = lab.fa_extremality_probe(s1, s2, 0.5, budget=budget)
    out(f"enlargement witnesses: {found}/{n_samples}")
    out(f"extremality probe: trials={probe.trials} separating pair "
        f"{'found' if probe.found else 'not found'} ({probe.note})")
    ok = found == n_samples and not probe.found
    out(_verdict(ok))
    return ok


def demo_4_2(out):
    ok = True
    for t, rho in ((0.05, 0.01), (0.3, 0.05)):
        c = lab.ex42_family_check(t, rho)
        out(f"family t={fmt(t)} rho={fmt(rho)}: min={fmt(c.min_value)} (positive: {c.positive}) "
            f"slice x=u min={fmt(c.slice_min)} >= t-3rho={fmt(c.bound)}: {c.slice_ok} {_verdict(c.ok)}")
        ok &= c.ok
    for eps in (0.1, 0.01):
        for i, c in enumerate(lab.ex42_dual_vectors(eps), 1):
            out(f"eps={fmt(eps)} configuration {i}: (x,y)={_pt(c.point1)} (x*,y*)={_pt(c.dual1)} "
                f"(u,v)={_pt(c.point2)} (u*,v*)={_pt(c.dual2)} cone_dist=({fmt(c.cone_dist1)}, "
                f"{fmt(c.cone_dist2)}) x*+u*={fmt(c.sum_x)} y*+v*={fmt(c.sum_y)} {_verdict(c.passed())}")
            ok &= c.passed()
    out(_verdict(ok))
    return ok


def _pt(v):
    return f"({fmt(v[0])}, {fmt(v[1])})"


def demo_5_1(out):
    P = instances.example_5_1()
    ks = [1, 10, 100]
    rep = stationarity.approx_stat_check(P, stationarity.example_5_1_sequence, np.zeros(1), ks)
    out("k      eps_k                 eta_k   memberships")
    ok = True
    for row in rep.rows:
        good = row.ok and row.eta_norm == 0.0 and row.eps == 1.0 / (2 * row.k)
        ok &= good
        out(f"{row.k:<6d} {fmt(row.eps):<21s} {fmt(row.eta_norm):<7s} {_verdict(row.ok)}")
    r = stationarity.m_stat_min_residual(P, np.zeros(1))
    q = stationarity.gmfcq_check(P, np.zeros(1))
    out(f"min multiplier-rule residual at 0: {fmt(r)}")
    out(f"GMFCQ at 0: {q.verdict} witness={_jsonable(q.witness)} ({q.notes})")
    ok &= abs(r - 1.0) <= 1e-12 and q.verdict == stationarity.FAILS
    out(_verdict(ok))
    return ok


DEMOS = {"3.1": demo_3_1, "3.2": demo_3_2, "4.1": demo_4_1, "4.2": demo_4_2, "5.1": demo_5_1}


def cmd_demo(args):
    if args.example not in DEMOS:
        raise InstanceError(f"unknown example {args.example!r}; choose from {sorted(DEMOS)}")
    ok = DEMOS[args.example](print)
    return EXIT_OK if ok else EXIT_LIMIT


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

BENCH_COLUMNS = ("name", "family", "status", "outer_iterations", "theta_final", "feasibility",
                 "residual", "time")


def _bench_one(item, base_dir):
    start = time.perf_counter()
    name = "?"
    try:
        if isinstance(item, str):
            doc = load_document(os.path.join(base_dir, item))
        else:
            doc = validate_document(item, where="suite entry")
        name = doc["name"] or (item if isinstance(item, str) else doc["family"])
        report, _, _ = solve_document(doc)
        r = report["result"]
        return [name, doc["family"], r["status"], r["outer_iterations"], fmt(r["theta_final"]),
                fmt(r["feasibility"]), fmt(r["inner_residual"]), fmt(time.perf_counter() - start)]
    except Exception as exc:  # isolation: one bad instance must not stop the suite
        return [name, "", f"Error: {exc}", "", "", "", "", fmt(time.perf_counter() - start)]


def cmd_bench(args):
    try:
        with open(args.suite) as fh:
            suite = json.load(fh)
    except OSError as exc:
        raise InstanceError(f"cannot read suite file {args.suite}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{args.suite}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if isinstance(suite, dict):
        extra = set(suite) - {"schema_version", "instances"}
        if extra:
            raise InstanceError(f"{args.suite}: unknown field '{sorted(extra)[0]}'")
        items = suite.get("instances", [])
    else:
        items = suite
    base = os.path.dirname(os.path.abspath(args.suite))
    jobs = max(1, args.jobs or 1)
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        rows = list(ex.map(lambda it: _bench_one(it, base), items))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    w.writerows(rows)
    text = buf.getvalue()
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write(os.path.join(args.out, "bench.csv"), text)
    sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify / lab
# ---------------------------------------------------------------------------

def cmd_verify(args):
    try:
        with open(args.certificate) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InstanceError(f"cannot read certificate {args.certificate}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{args.certificate}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    for key in doc:
        if key not in ("schema_version", "instance", "certificate"):
            raise InstanceError(f"{args.certificate}: unknown field '{key}'")
    inst = validate_document(doc.get("instance"), where=f"{args.certificate}: instance")
    P, _, _ = build_problem(inst)
    stored = doc.get("certificate") or {}
    cert = stationarity.certificate_from_dict(P, stored)
    same = (
        stored.get("lambda_verdict") == cert.lam_verdict
        and stored.get("mu_verdict") == cert.mu_verdict
        and stored.get("xi_verdict") == cert.xi_verdict
        and abs(float(stored.get("residual", math.nan)) - cert.residual) <= 1e-14 * max(1.0, cert.residual)
    )
    print(f"residual={fmt(cert.residual)} lambda={cert.lam_verdict} mu={cert.mu_verdict} xi={cert.xi_verdict}")
    print(f"stored fields {'match' if same else 'DO NOT match'} the recomputation")
    stat = cert.is_m_stationary(args.tol)
    print(f"M-stationary at tolerance {fmt(args.tol)}: {'yes' if stat else 'no'}")
    if not same:
        return EXIT_ERROR
    return EXIT_OK if stat else EXIT_LIMIT


def cmd_lab(args):
    s1, s2 = lab.Ray41(), lab.ExpRegion41()
    a = np.array(args.a, dtype=float)
    g = lab.enlargement_gap(s1, s2, a, args.rho)
    print(f"a=({fmt(a[0])}, {fmt(a[1])}) rho={fmt(args.rho)} min max-distance={fmt(g.value)} gap={fmt(g.gap)}")
    print(f"witness={None if g.witness is None else _pt(g.witness)} coarse={fmt(g.coarse_value)} "
          f"margin={fmt(g.margin)} certified_empty={bool(g.certified_empty)} "
          f"window_edge_warning={g.at_window_edge}")
    if args.csv:
        w = lab.EX41_WINDOW
        lab.write_point_cloud(args.csv, s1, s2, w, args.h, a)
        print(f"point cloud written to {args.csv}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _setup_logging():
    level = os.environ.get("NONLIP_LOG", "quiet").strip().lower()
    levels = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        print(f"warning: NONLIP_LOG={level!r} not in {sorted(levels)}; using quiet", file=sys.stderr)
    logging.basicConfig(level=levels.get(level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def build_parser():
    ap = argparse.ArgumentParser(prog="nonlip", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the augmented Lagrangian method on an instance file")
    s.add_argument("--instance", required=True)
    s.add_argument("--out", default="out")
    s.add_argument("--theta0", type=float)
    s.add_argument("--gamma", type=float)
    s.add_argument("--tau", type=float)
    s.add_argument("--tol-feas", dest="tol_feas", type=float)
    s.add_argument("--tol-stat", dest="tol_stat", type=float)
    s.add_argument("--theta-max", dest="theta_max", type=float)
    s.add_argument("--k-max", dest="k_max", type=int)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("control", help="solve and verify a sparse control instance")
    c.add_argument("--n", type=int, default=127)
    c.add_argument("--p", type=float, default=0.5)
    c.add_argument("--sigma", type=float, default=1e-4)
    c.add_argument("--ua", type=float, default=-1000.0)
    c.add_argument("--ub", type=float, default=1000.0)
    c.add_argument("--target", choices=sparse_control.TARGETS, default="hat")
    c.add_argument("--operator", choices=sparse_control.OPERATORS, default="laplace1d")
    c.add_argument("--tol", type=float, default=1e-8)
    c.add_argument("--tol-res", dest="tol_res", type=float, default=1e-6)
    c.add_argument("--tol-act", dest="tol_act", type=float, default=1e-8)
    c.add_argument("--out", default="out")
    c.set_defaults(func=cmd_control)

    d = sub.add_parser("demo", help="reproduce a worked example")
    d.add_argument("example", help="one of " + ", ".join(sorted(DEMOS)))
    d.set_defaults(func=cmd_demo)

    b = sub.add_parser("bench", help="run a suite of instance documents")
    b.add_argument("suite")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="re-check a stationarity certificate")
    v.add_argument("certificate")
    v.add_argument("--tol", type=float, default=1e-6)
    v.set_defaults(func=cmd_verify)

    lb = sub.add_parser("lab", help="enlargement gap for the ray / exponential region pair")
    lb.add_argument("--a", nargs=2, type=float, default=[-0.1, 0.05])
    lb.add_argument("--rho", type=float, default=0.01)
    lb.add_argument("--csv")
    lb.add_argument("--h", type=float, default=0.1)
    lb.set_defaults(func=cmd_lab)
    return ap


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (alm_mod.SubproblemError, ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
