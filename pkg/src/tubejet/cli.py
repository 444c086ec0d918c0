"""Batch front-end: ingest metric/connection specs, run verification
suites, emit machine-readable reports.

Spec files are line-oriented with explicit keys::

    # comment
    kind metric            # metric | connection | jets
    dim 2
    option mode exact      # exact | float
    option K 3
    entry g 1 1 exp 0 0 re 1
    entry g 1 2 exp 1 1 re 3/2 im 0

`entry g i j ...` adds a monomial to the metric component g_ij (1-based
indices, exponents one per variable, rational or decimal coefficients);
`entry gamma a i j ...` does the same for a connection's Gamma^a_ij.  The
built-in targets `euclidean` and `counterexample` (with --dim) need no
file.  Reports are structured text, one record per check plus a summary
line, byte-stable for a fixed spec/seed/mode (timings print as "-" unless
--timings is given).  Exit code 0 iff every executed check passed.
"""

from __future__ import annotations

import argparse
import math
import os
import random
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import jets as jets_mod
from . import metric as metric_mod
from . import structure as structure_mod
from .connection import (Connection, covariant_derivative, curvature, d1,
                         deform, holonomy_curvature, verify_curv_operator)
from .metric import (Metric, TangentPoint, euclidean_metric, geodesic_flow,
                     levi_civita, quadratic_example_metric, reeb_check,
                     rho_theta_obstruction, symplectic_form,
                     verify_symplectic_connector)
from .polyfield import PolyScalar, QQi
from .tensors import (TensorField, alt, alt2_preimage, circ, perm2, sym,
                      sym_tail, wedge1)

CURVATURE_SIGN = metric_mod.CURVATURE_SIGN

# every check name maps to exactly one identity anchor string
CHECK_ANCHORS: Dict[str, str] = {
    "rho-value": "rho^1_{2,1,1,2,1} = 4 sum_{s=2..n} (s-1)^2",
    "theta-value": "theta^1_{1,2,2,1,1} = 4 rho^1_{2,1,1,2,1}",
    "theta-flag": "theta^p_{l1..l5} = 0 for all components",
    "pair-sum-consistency": "sum_{j<=3<p} 6 R^(j,p) = 6 theta at the origin",
    "bracket-circ-sym": "Circ Sym_{3,4,5}[3 d1(nabla R)_2 - 2 Rt w1 Rt] = 0",
    "metric-equation": "sum_{j<=3<p} R^(j,p) = 0",
    "obstruction-order": "Circ beta_{k+1}(sigma_k) = 0",
    "sym-composition": "Sym_{2..k+1} Sym_{3..k+1} = (k-1)! Sym_{2..k+1}",
    "circ-sym23-commute": "Circ Sym_{2,3} = Sym_{2,3} Circ",
    "exact-sequence": "beta = (p/(p+1)!) Alt2 Sym_{2..p+1} beta when Circ beta = 0",
    "alt3-alt2": "Alt3 Alt2 = 0 on V* x S^p V*",
    "bianchi-algebraic": "Circ R = 0 for torsion-free connections",
    "bianchi-differential": "Circ nabla R = 0 for torsion-free connections",
    "curvature-operator": "Alt2 nabla^2 theta = R . theta",
    "deform-curvature": "R^{nabla+S} = R + d1 S + S w1 S",
    "d1-intermediate": "Circ Sym_{3,4,5} d1(nabla R)_2 = 2 * (12 rho-patterns)",
    "beta-cross-validation": "closed-form beta_k = recursive beta_k",
    "metric-compatibility": "nabla g = 0 through the truncation degree",
    "per-degree-residual": "d1' S_k + sum p S_p w1 S_{k-p+1} + i(k+1) Alt2 S_{k+1} = 0",
    "holomorphy-leaves": "S_k(eta^{k+1}) = 0",
    "structure-square": "J^2 = -Identity",
    "structure-alpha": "J alpha v = T B v",
    "energy-drift": "d/dt g(c', c') = 0 along geodesics",
    "symplectic-connector": "Omega(xi1, xi2) = g(dpi xi1, K xi2) - g(dpi xi2, K xi1)",
    "reeb-residual": "Xi = -T eta solves Omega(Xi, .) = theta(.)",
    "holonomy-ratio": "transport-loop error is O(h^2): halving ratio in [3.2, 4.8]",
    "cr-residual": "J dpsi(dt) = dpsi(ds) on the leaf s Phi_t(eta)",
    "omega-closed": "d Omega = 0",
    "flow-straight": "Euclidean geodesics are affine",
}


@dataclass
class CheckRecord:
    name: str
    status: str                   # pass | fail | not-evaluated
    residual: float
    runtime: float
    at: Optional[tuple] = None    # offending component indices on failure

    @property
    def anchor(self) -> str:
        return CHECK_ANCHORS[self.name]


@dataclass
class Report:
    command: str
    target: str
    env: Dict[str, str]
    checks: List[CheckRecord] = field(default_factory=list)
    statuses: Dict[str, str] = field(default_factory=dict)
    show_timings: bool = False

    def add(self, record: CheckRecord):
        if any(c.name == record.name for c in self.checks):
            raise ValueError(f"duplicate check name {record.name}")
        self.checks.append(record)

    @property
    def all_pass(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def render(self) -> str:
        lines = [f"report tubejet {self.command}", f"target {self.target}"]
        env = " ".join(f"{k}={v}" for k, v in sorted(self.env.items()))
        lines.append(f"env {env}")
        for c in sorted(self.checks, key=lambda c: c.name):
            t = f"{c.runtime:.3f}" if self.show_timings else "-"
            extra = f" at={c.at}" if c.at is not None else ""
            lines.append(
                f'check {c.name} anchor "{c.anchor}" status={c.status} '
                f"residual={c.residual:.3e} time={t}{extra}")
        for k, v in sorted(self.statuses.items()):
            lines.append(f"status {k} {v}")
        passed = sum(1 for c in self.checks if c.status == "pass")
        failed = sum(1 for c in self.checks if c.status == "fail")
        skipped = sum(1 for c in self.checks if c.status == "not-evaluated")
        overall = "pass" if failed == 0 else "fail"
        lines.append(f"summary checks={len(self.checks)} passed={passed} "
                     f"failed={failed} not_evaluated={skipped} status={overall}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# spec documents
# ---------------------------------------------------------------------------

@dataclass
class SpecDocument:
    kind: str
    dim: int
    entries: List[dict]
    options: Dict[str, str]
    source: str

    def option(self, key: str, default=None):
        return self.options.get(key, default)


class SpecError(ValueError):
    pass


def _parse_number(token: str, line_no: int) -> Fraction:
    try:
        if "/" in token:
            num, den = token.split("/")
            return Fraction(int(num), int(den))
        return Fraction(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"line {line_no}: bad number {token!r}: {exc}") from exc


def load_spec(path: str) -> SpecDocument:
    """Parse and validate a spec file; errors carry line and field names."""
    kind = None
    dim = None
    entries: List[dict] = []
    options: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            key = tokens[0]
            if key == "kind":
                if len(tokens) != 2 or tokens[1] not in ("metric", "connection", "jets"):
                    raise SpecError(f"line {line_no}: kind must be metric|connection|jets")
                kind = tokens[1]
            elif key == "dim":
                dim = int(tokens[1])
                if dim < 1:
                    raise SpecError(f"line {line_no}: dim must be positive")
            elif key == "option":
                if len(tokens) < 3:
                    raise SpecError(f"line {line_no}: option needs a key and value")
                options[tokens[1]] = tokens[2]
            elif key == "entry":
                if dim is None:
                    raise SpecError(f"line {line_no}: dim must precede entries")
                entries.append(_parse_entry(tokens[1:], dim, line_no))
            else:
                raise SpecError(f"line {line_no}: unknown key {key!r}")
    if kind is None or dim is None:
        raise SpecError(f"{path}: spec must declare kind and dim")
    field_name = {"metric": "g", "jets": "g", "connection": "gamma"}[kind]
    for e in entries:
        if e["field"] != field_name:
            raise SpecError(f"{path}: entry field {e['field']!r} not valid for kind {kind}")
    return SpecDocument(kind=kind, dim=dim, entries=entries, options=options,
                        source=path)


def _parse_entry(tokens: Sequence[str], dim: int, line_no: int) -> dict:
    if not tokens:
        raise SpecError(f"line {line_no}: empty entry")
    fname = tokens[0]
    n_idx = {"g": 2, "gamma": 3}.get(fname)
    if n_idx is None:
        raise SpecError(f"line {line_no}: unknown field {fname!r}")
    pos = 1
    try:
        indices = tuple(int(t) for t in tokens[pos:pos + n_idx])
    except ValueError as exc:
        raise SpecError(f"line {line_no}: bad component indices: {exc}") from exc
    if len(indices) != n_idx or any(not 1 <= i <= dim for i in indices):
        raise SpecError(f"line {line_no}: component indices must lie in 1..{dim}")
    pos += n_idx
    if pos >= len(tokens) or tokens[pos] != "exp":
        raise SpecError(f"line {line_no}: expected 'exp' after component indices")
    pos += 1
    try:
        exps = tuple(int(t) for t in tokens[pos:pos + dim])
    except ValueError as exc:
        raise SpecError(f"line {line_no}: bad exponent tuple: {exc}") from exc
    if len(exps) != dim:
        raise SpecError(f"line {line_no}: exponent tuple must have length dim={dim}")
    if any(e < 0 for e in exps):
        raise SpecError(f"line {line_no}: exponents must be non-negative")
    pos += dim
    re_val = Fraction(0)
    im_val = Fraction(0)
    while pos < len(tokens):
        tag = tokens[pos]
        if tag not in ("re", "im") or pos + 1 >= len(tokens):
            raise SpecError(f"line {line_no}: expected 're <num>' or 'im <num>'")
        value = _parse_number(tokens[pos + 1], line_no)
        if tag == "re":
            re_val = value
        else:
            im_val = value
        pos += 2
    return {"field": fname, "indices": indices, "exp": exps,
            "re": re_val, "im": im_val, "line": line_no}


def build_metric(doc: SpecDocument, exact: bool) -> Metric:
    n = doc.dim
    g = TensorField.zeros(n, 2, False)
    for i in range(n):
        for j in range(n):
            g.comps[i, j] = PolyScalar.zero(n)
    for e in doc.entries:
        i, j = (k - 1 for k in e["indices"])
        coeff = QQi(e["re"], e["im"]) if exact else complex(e["re"], e["im"])
        mono = PolyScalar(n, {e["exp"]: coeff})
        g.comps[i, j] = g.comps[i, j] + mono
        if i != j:
            g.comps[j, i] = g.comps[j, i] + mono
    return Metric(n, g)


def build_connection(doc: SpecDocument, exact: bool) -> Connection:
    n = doc.dim
    gamma = TensorField.zeros(n, 2, True)
    for idx in np.ndindex(gamma.comps.shape):
        gamma.comps[idx] = PolyScalar.zero(n)
    for e in doc.entries:
        a, i, j = (k - 1 for k in e["indices"])
        coeff = QQi(e["re"], e["im"]) if exact else complex(e["re"], e["im"])
        gamma.comps[i, j, a] = gamma.comps[i, j, a] + PolyScalar(n, {e["exp"]: coeff})
    return Connection(n, gamma)


def resolve_target(args) -> tuple:
    """(label, kind, metric-or-connection) from the CLI target/--spec."""
    exact = args.mode == "exact"
    if args.spec:
        doc = load_spec(args.spec)
        for key in ("mode", "K", "tol", "seed", "step", "lattice"):
            if doc.option(key) is not None and getattr(args, _ARG_OF[key]) is None:
                setattr(args, _ARG_OF[key], type(_DEFAULTS[key])(doc.option(key)))
        exact = (doc.option("mode", args.mode) == "exact")
        if doc.kind == "connection":
            return (doc.source, "connection", build_connection(doc, exact))
        return (doc.source, "metric", build_metric(doc, exact))
    name = args.target
    if name == "euclidean":
        return (f"euclidean dim={args.dim}", "metric",
                euclidean_metric(args.dim, exact=exact))
    if name == "counterexample":
        return (f"counterexample dim={args.dim}", "metric",
                quadratic_example_metric(args.dim, exact=exact))
    raise SpecError(f"unknown target {name!r}: use euclidean, counterexample or --spec PATH")


_ARG_OF = {"mode": "mode", "K": "order", "tol": "tol", "seed": "seed",
           "step": "step", "lattice": "lattice"}
_DEFAULTS = {"mode": "", "K": 0, "tol": 0.0, "seed": 0, "step": 0.0, "lattice": 0}


# ---------------------------------------------------------------------------
# check runner
# ---------------------------------------------------------------------------

class Runner:
    def __init__(self, report: Report, tol: float):
        self.report = report
        self.tol = tol

    def check(self, name: str, residual: float, tol: Optional[float] = None,
              at: Optional[tuple] = None, runtime: float = 0.0):
        bound = self.tol if tol is None else tol
        status = "pass" if residual <= bound else "fail"
        self.report.add(CheckRecord(name=name, status=status,
                                    residual=float(residual), runtime=runtime,
                                    at=at if status == "fail" else None))

    def timed(self, name: str, fn, tol: Optional[float] = None):
        t0 = time.perf_counter()
        residual, at = fn()
        self.check(name, residual, tol=tol, at=at, runtime=time.perf_counter() - t0)


def _env_block(args, exact: bool, extra: Optional[Dict[str, str]] = None) -> Dict[str, str]:
    env = {
        "mode": "exact" if exact else "float",
        "order": str(args.order),
        "tol": f"{args.tol:.1e}",
        "seed": str(args.seed),
        "step": f"{args.step:.1e}",
        "lattice": str(args.lattice),
        "sign_calibration": f"{CURVATURE_SIGN:+d}",
        "threads": os.environ.get("TUBEJET_THREADS", "1"),
        "version": "0.1.0",
    }
    if extra:
        env.update(extra)
    return env


def _field_worst(tensor, dim: int) -> tuple:
    """(max |component value| at origin, offending index tuple)."""
    at0 = tensor.evaluate([0.0] * dim)
    arr = np.vectorize(abs, otypes=[float])(at0.comps) if at0.comps.size else np.zeros(at0.comps.shape)
    if arr.size == 0 or arr.max() == 0.0:
        return 0.0, None
    idx = np.unravel_index(int(arr.argmax()), arr.shape)
    return float(arr.max()), tuple(i + 1 for i in idx)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_counterexample(args, report: Report):
    args.mode = "exact"   # exact mode forced
    n = args.dim
    runner = Runner(report, 0.0)
    g = quadratic_example_metric(n)
    q = rho_theta_obstruction(g)
    want_rho = 4 * sum((s - 1) ** 2 for s in range(2, n + 1))

    def rho_check():
        got = q.rho[0, 1, 0, 0, 1, 0]
        return (0.0 if got == QQi(want_rho) else abs(complex(got) - want_rho)), (1, 2, 1, 1, 2, 1)

    def theta_check():
        got = q.theta[0, 0, 1, 1, 0, 0]
        return (0.0 if got == QQi(4 * want_rho) else abs(complex(got) - 4 * want_rho)), (1, 1, 2, 2, 1, 1)

    runner.timed("rho-value", rho_check)
    runner.timed("theta-value", theta_check)

    def pair_sum():
        fo = jets_mod.first_riemann_obstruction(g, degree=4)
        d0 = np.frompyfunc(lambda p: p.constant_term(), 1, 1)(fo.direct.comps)
        worst = 0.0
        at = None
        for idx in np.ndindex((n,) * 6):
            p, l = idx[0], idx[1:]
            diff = abs(complex(d0[l + (p,)] - q.theta[(p,) + l] * 6))
            if diff > worst:
                worst, at = diff, tuple(i + 1 for i in idx)
        return worst, at

    runner.timed("pair-sum-consistency", pair_sum)
    report.statuses["metric-equation"] = (
        "obstructed" if not q.theta_all_zero else "unobstructed")
    report.statuses["rho-1-2-1-1-2-1"] = str(q.rho[0, 1, 0, 0, 1, 0].re)
    report.statuses["theta-1-1-2-2-1-1"] = str(q.theta[0, 0, 1, 1, 0, 0].re)


def cmd_obstruct(args, report: Report, target):
    label, kind, obj = target
    exact = args.mode == "exact"
    runner = Runner(report, 0.0 if exact else args.tol)
    if kind == "metric":
        g = obj
        q = rho_theta_obstruction(g)
        theta_norm = max((abs(complex(t)) for t in q.theta.flat), default=0.0)
        report.statuses["metric-equation"] = (
            "obstructed" if not q.theta_all_zero else "unobstructed")
        report.statuses["theta-max-abs"] = f"{theta_norm:.3e}"

        def bracket():
            fo = jets_mod.first_riemann_obstruction(g, degree=max(6, args.order + 3))
            return _field_worst(fo.tensor, g.dim)

        runner.timed("bracket-circ-sym", bracket)
        jets = jets_mod.riemannian_jets(g, K=args.order, tolerance=args.tol)
        report.env["inverse_truncation_degree"] = str(jets.base.inverse_truncation_degree)
    else:
        conn = obj
        if not conn.torsion_free:
            raise SpecError("obstruct needs a torsion-free connection")
        jets = jets_mod.build_jets(conn, K=args.order, tolerance=args.tol)
    lattice = jets_mod._lattice(jets.dim, size=args.lattice)
    for entry in jets.obstructions.entries:
        worst, at = _field_worst(entry.tensor, jets.dim)
        lattice_norm = entry.tensor.max_abs_at(lattice)
        name = f"obstruction-order-{entry.order}"
        CHECK_ANCHORS.setdefault(name, CHECK_ANCHORS["obstruction-order"])
        runner.check(name, max(worst, lattice_norm), at=at)
    report.statuses["jet-obstructions"] = (
        "unobstructed" if jets.obstructions.all_pass else "obstructed")
    report.statuses["sigma-provenance"] = jets.obstructions.sigma_provenance


def cmd_verify(args, report: Report, target):
    label, kind, obj = target
    exact = args.mode == "exact"
    rng = random.Random(args.seed)
    n = args.dim if kind != "metric" else obj.dim
    runner = Runner(report, 0.0 if exact else args.tol)

    def rand_poly(max_degree=1):
        terms = {}
        for _ in range(2):
            exp = [0] * n
            for _ in range(rng.randint(0, max_degree)):
                exp[rng.randrange(n)] += 1
            c = (QQi(Fraction(rng.randint(-2, 2), rng.randint(1, 3)),
                     Fraction(rng.randint(-2, 2), rng.randint(1, 3)))
                 if exact else complex(rng.uniform(-1, 1), rng.uniform(-1, 1)))
            exp = tuple(exp)
            terms[exp] = terms.get(exp, QQi(0) if exact else 0j) + c
        return PolyScalar(n, terms)

    def rand_field(arity, vector=True):
        t = TensorField.zeros(n, arity, vector)
        for idx in np.ndindex(t.comps.shape):
            t.comps[idx] = rand_poly()
        return t

    def rand_tf_connection():
        return Connection(n, sym(rand_field(2), (0, 1)))

    conn = (levi_civita(obj, degree=6) if kind == "metric"
            else (obj if obj.torsion_free else rand_tf_connection()))
    t4 = rand_field(4)
    runner.check("sym-composition",
                 _diff_norm(sym_tail(sym_tail(t4, 2), 1),
                            sym_tail(t4, 1).scale(math.factorial(2))))
    t3 = rand_field(3)
    runner.check("circ-sym23-commute",
                 _diff_norm(circ(sym(t3, (1, 2))), sym(circ(t3), (1, 2))))
    alpha = sym_tail(rand_field(3, vector=False), 1)
    beta = alt(alpha, (0, 1))
    runner.check("exact-sequence",
                 _diff_norm(alt(alt2_preimage(beta, tol=0 if exact else 1e-9), (0, 1)), beta))
    runner.check("alt3-alt2", alt(alt(alpha, (0, 1)), (0, 1, 2)).max_coeff_abs())
    R = curvature(conn)
    runner.check("bianchi-algebraic", circ(R).max_coeff_abs())
    runner.check("bianchi-differential",
                 circ(covariant_derivative(conn, R)).max_coeff_abs())
    _, curv_norm = verify_curv_operator(conn, rand_field(1))
    runner.check("curvature-operator", curv_norm)
    s1 = sym(rand_field(2), (0, 1))
    runner.check("deform-curvature",
                 _diff_norm(curvature(deform(conn, s1)),
                            curvature(conn) + d1(conn, s1) + wedge1(s1, s1)))
    dr2 = perm2(covariant_derivative(conn, R))
    rt = sym_tail(R, 1)
    runner.check("bracket-circ-sym",
                 _diff_norm(circ(sym_tail(d1(conn, dr2).scale(3), 2)),
                            circ(sym_tail(wedge1(rt, rt).scale(2), 2))))
    jets = jets_mod.build_jets(conn, K=3)
    runner.check("beta-cross-validation",
                 _diff_norm(jets_mod.beta_closed(jets, 3),
                            jets_mod.beta_recursive(jets, 3)))
    if kind == "metric":
        resid = metric_mod.metric_compatibility_residual(obj, conn)
        low = resid.truncate(conn.inverse_truncation_degree - 2)
        runner.check("metric-compatibility", low.max_coeff_abs())


def _diff_norm(a, b) -> float:
    return (a - b).max_coeff_abs()


def cmd_jets(args, report: Report, target):
    label, kind, obj = target
    exact = args.mode == "exact"
    runner = Runner(report, 0.0 if exact else args.tol)
    if kind == "metric":
        st = structure_mod.TotallyRealStructure.riemannian(obj, K=args.order)
    else:
        if not obj.torsion_free:
            raise SpecError("jets needs a torsion-free connection")
        st = structure_mod.TotallyRealStructure(
            jets_mod.build_jets(obj, K=args.order, tolerance=args.tol))
    report.env["inverse_truncation_degree"] = str(
        getattr(st.jets.base, "inverse_truncation_degree", None))
    for d, resid in enumerate(structure_mod.per_degree_system(st)):
        name = f"per-degree-residual-{d}"
        CHECK_ANCHORS.setdefault(name, CHECK_ANCHORS["per-degree-residual"])
        worst, at = _field_worst(resid, st.dim)
        runner.check(name, max(worst, resid.max_coeff_abs() if exact else worst), at=at)
    rng = random.Random(args.seed)
    worst = 0.0
    for _ in range(20):
        pt = TangentPoint([rng.uniform(-0.25, 0.25) for _ in range(st.dim)],
                          [rng.uniform(-1, 1) for _ in range(st.dim)])
        b_res, g_res, _ = structure_mod.holomorphy_check(st, pt)
        worst = max(worst, float(np.max(np.abs(b_res))), float(np.max(np.abs(g_res))))
    runner.check("holomorphy-leaves", worst, tol=max(args.tol, 1e-9))
    worst_j = 0.0
    worst_a = 0.0
    for _ in range(10):
        pt = TangentPoint([rng.uniform(-0.2, 0.2) for _ in range(st.dim)],
                          [rng.uniform(-0.5, 0.5) for _ in range(st.dim)])
        j = st.eval_J(pt)
        worst_j = max(worst_j, float(np.max(np.abs(j @ j + np.eye(2 * st.dim)))))
        gam_s, b = st.gamma_b(pt)
        base_gam = st.jets.base.gamma_at(pt.x).real
        drop = np.einsum("ija,j->ai", base_gam, pt.v) + gam_s.real
        v = np.array([rng.uniform(-1, 1) for _ in range(st.dim)])
        alpha_v = np.concatenate([v, -drop @ v])
        want = np.concatenate([np.zeros(st.dim), b.real @ v])
        worst_a = max(worst_a, float(np.max(np.abs(j @ alpha_v - want))))
    runner.check("structure-square", worst_j, tol=1e-10)
    runner.check("structure-alpha", worst_a, tol=1e-10)


def cmd_flow(args, report: Report, target):
    label, kind, obj = target
    if kind != "metric":
        raise SpecError("flow needs a metric target")
    g = obj if not obj.exact else _to_float_metric(obj)
    runner = Runner(report, args.tol)
    rng = random.Random(args.seed)
    n = g.dim

    pt0 = TangentPoint([0.0] * n, [0.3] + [-0.2] * (n - 1))
    e0 = g.energy(pt0)
    _, states = geodesic_flow(g, pt0, args.horizon, h=args.step)
    drift = max(abs(g.energy(s) - e0) for s in states)
    runner.check("energy-drift", drift, tol=1e-8)

    omega = symplectic_form(g)
    runner.check("omega-closed", omega.exterior_derivative_max_norm(), tol=0.0)
    worst = 0.0
    for _ in range(100):
        pt = TangentPoint([rng.uniform(-0.25, 0.25) for _ in range(n)],
                          [rng.uniform(-1, 1) for _ in range(n)])
        xi1 = np.array([rng.uniform(-1, 1) for _ in range(2 * n)])
        xi2 = np.array([rng.uniform(-1, 1) for _ in range(2 * n)])
        worst = max(worst, verify_symplectic_connector(g, pt, xi1, xi2, omega))
    runner.check("symplectic-connector", worst, tol=1e-10)
    worst = 0.0
    for _ in range(10):
        pt = TangentPoint([rng.uniform(-0.25, 0.25) for _ in range(n)],
                          [rng.uniform(-1, 1) for _ in range(n)])
        worst = max(worst, reeb_check(g, pt, omega))
    runner.check("reeb-residual", worst, tol=1e-10)

    conn = levi_civita(g, degree=8)
    eta = np.array([0.7] + [-0.4] * (n - 1))
    r0 = curvature(conn).evaluate([0.0] * n).to_numpy()
    want = np.einsum("ba,b->a", r0[0, 1], eta)
    errs = []
    for h in (1e-2, 5e-3):
        got = holonomy_curvature(conn, 0, 1, [0.0] * n, eta, h)
        errs.append(float(np.max(np.abs(got - want))))
    ratio = errs[0] / errs[1] if errs[1] > 1e-14 else 4.0
    runner.check("holonomy-ratio", abs(ratio - 4.0), tol=0.8)

    st = structure_mod.TotallyRealStructure.riemannian(
        obj if obj.exact else g, K=args.order)
    worst = 0.0
    eta_pt = TangentPoint([0.0] * n, [0.5] + [-0.3] * (n - 1))
    for (t0, s0) in [(0.06, 0.08), (0.1, 0.0), (0.0, 0.1)]:
        worst = max(worst, structure_mod.psi_CR_residual(st, g, eta_pt, t0, s0,
                                                         h=args.step))
    runner.check("cr-residual", worst, tol=1e-5)

    if (g.g - euclidean_metric(n, exact=False).g).is_zero():
        end = states[-1]
        straight = float(np.max(np.abs(end.x - (pt0.x + args.horizon * pt0.v))))
        runner.check("flow-straight", straight, tol=1e-12)


def _to_float_metric(g: Metric) -> Metric:
    return Metric(g.dim, g.g.to_float())


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tubejet",
        description="verification engine for tangent-bundle complex-structure jets")
    p.add_argument("command",
                   choices=["verify", "jets", "obstruct", "flow", "counterexample"])
    p.add_argument("target", nargs="?", default="euclidean",
                   help="euclidean | counterexample (or use --spec)")
    p.add_argument("--spec", help="path to a spec file")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--mode", choices=["exact", "float"], default=None)
    p.add_argument("--order", "-K", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--lattice", type=int, default=None)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--out", help="write the report to this path")
    p.add_argument("--timings", action="store_true",
                   help="include wall-clock times (breaks byte-stability)")
    return p


def _apply_defaults(args):
    if args.mode is None:
        args.mode = "exact" if args.command in ("counterexample", "verify") else "float"
    if args.order is None:
        args.order = 3
    if args.tol is None:
        args.tol = 1e-9
    if args.seed is None:
        args.seed = 1
    if args.lattice is None:
        args.lattice = 3
    if args.step is None:
        args.step = 1e-3


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        _apply_defaults(args)
        if args.command == "counterexample":
            args.mode = "exact"
            report = Report(command=args.command,
                            target=f"counterexample dim={args.dim}",
                            env=_env_block(args, exact=True),
                            show_timings=args.timings)
            cmd_counterexample(args, report)
        else:
            target = resolve_target(args)
            _apply_defaults(args)
            exact = args.mode == "exact"
            report = Report(command=args.command, target=target[0],
                            env=_env_block(args, exact=exact),
                            show_timings=args.timings)
            if args.command == "obstruct":
                cmd_obstruct(args, report, target)
            elif args.command == "verify":
                cmd_verify(args, report, target)
            elif args.command == "jets":
                cmd_jets(args, report, target)
            elif args.command == "flow":
                cmd_flow(args, report, target)
    except (SpecError, OSError, ValueError) as exc:
        print(f"tubejet: error: {exc}", file=sys.stderr)
        return 2
    text = report.render()
    out_dir = os.environ.get("TUBEJET_OUT")
    out_path = args.out
    if out_path is None and out_dir:
        os.makedirs(out_dir, exist_ok=True)
        out_path = os.path.join(out_dir, f"tubejet-{args.command}.report.txt")
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text)
    sys.stdout.write(text)
    return 0 if report.all_pass else 1


if __name__ == "__main__":
    raise SystemExit(main())
