"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line (printed and also repeated in the
terminal summary) before asserting, so a failing criterion still reports.
"""

import dataclasses
import math

import numpy as np
import pytest

from conftest import CRITERIA
from dualfpc import syntax as S
from dualfpc.admacro import ad_type
from dualfpc.corpus import corpus_names, corpus_program, differentiable_programs
from dualfpc.ops import DEFAULT_OPS
from dualfpc.runtime import Converged, DomainError, PairV, RealV, TanV, evaluate, same_outcome
from dualfpc.tangent import Backend, SparseVec, tan_add, tan_proj, tan_scale, tan_zero
from dualfpc.typecheck import Context, typecheck
from dualfpc.verify import (
    FAIL, HOLE, INCONCLUSIVE, PASS, FlatValue, chain_rule_check, flatten_value, forward_check,
    random_value, unflatten_value, verify_program,
)
from generators import LIST, beta_instances, taylor_exp_oracle

def record(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n}: {detail}"
    print(line)
    CRITERIA.append(line)
    assert ok, line

@pytest.fixture(scope="session")
def verified():
    """One clean-sampling run of the harness per differentiable corpus program."""
    return {p.name: verify_program(p, trials=100, require_clean=True) for p in differentiable_programs()}

def _subterms(t):
    yield t
    for f in dataclasses.fields(t):
        v = getattr(t, f.name)
        for x in v if isinstance(v, tuple) else (v,):
            if isinstance(x, S.Term):
                yield from _subterms(x)

def test_1_type_preservation():
    names = corpus_names()
    bad, seen, ops_used = [], set(), set()
    for name in names:
        prog = corpus_program(name)
        for t in _subterms(prog.term):
            seen.add(type(t).__name__)
            if isinstance(t, S.PrimOp):
                ops_used.add(t.op)
        try:
            got = typecheck(Context(), prog.dual_term, "target", expected=ad_type(prog.ty))
            if got != ad_type(prog.ty):
                bad.append(name)
        except Exception as exc:  # any checker failure is a criterion failure
            bad.append(f"{name} ({exc})")
    source_ctors = {
        c.__name__ for c in vars(S).values()
        if isinstance(c, type) and issubclass(c, S.Term) and c is not S.Term and c not in S.TARGET_ONLY
    }
    missing = (source_ctors - seen) | (set(DEFAULT_OPS.names()) - ops_used)
    ok = len(names) >= 25 and not bad and not missing and {"relu", "taylor_exp"} <= set(names)
    record(1, ok, f"{len(names) - len(bad)}/{len(names)} corpus programs preserve types; uncovered {sorted(missing)}")
def test_2_primitive_soundness():
    reports = [chain_rule_check(op, trials=1000, tol=1e-6) for op in DEFAULT_OPS.names()]
    failed = [r.op for r in reports if r.verdict != PASS]
    worst = max(r.max_rel_err_fd for r in reports)
    record(2, not failed, f"{len(reports)} ops x 1000 samples, worst rel err vs FD {worst:.2e}, failed {failed}")

def test_3_forward_correctness(verified):
    bad, fewest = [], math.inf
    for name, res in verified.items():
        fwd = [r for r in res.reports if r.mode == "fwd"]
        clean = sum(r.verdict == PASS and not r.kinks for r in fwd)
        fewest = min(fewest, clean)
        if clean < 100 or any(r.verdict == FAIL for r in fwd):
            bad.append(name)
    record(3, not bad, f"{len(verified)} programs, >= {fewest} clean forward points each, tol 1e-5, primal bitwise; failed {bad}")

def test_4_reverse_correctness(verified):
    bad, worst_fwd, worst_fd = [], 0.0, 0.0
    for name, res in verified.items():
        for r in res.reports:
            if r.mode != "rev" or r.verdict != PASS:
                if r.mode == "rev" and r.verdict == FAIL:
                    bad.append(name)
                continue
            worst_fwd = max(worst_fwd, r.fwd_max_rel_err or 0.0)
            worst_fd = max(worst_fd, r.max_rel_err)
    ok = not bad and worst_fwd <= 1e-9 and worst_fd <= 1e-5 and {"sum_list", "map_square_sum"} <= set(verified)
    record(4, ok, f"reverse vs forward {worst_fwd:.2e} (<=1e-9), vs FD {worst_fd:.2e} (<=1e-5); failed {sorted(set(bad))}")

def test_5_partiality(verified):
    checks = {}
    relu = corpus_program("relu")
    zero = RealV(0.0)
    checks["relu primal"] = isinstance(relu.run(zero), DomainError)
    checks["relu fwd"] = isinstance(relu.run_dual(PairV(zero, TanV(tan_zero(Backend.K1))), Backend.K1), DomainError)
    checks["relu rev"] = isinstance(relu.run_dual(PairV(zero, TanV(tan_zero(Backend.KINF))), Backend.KINF), DomainError)
    quotient = corpus_program("quotient")
    checks["x/0"] = isinstance(quotient.run(PairV(RealV(1.0), RealV(0.0))), DomainError)
    log_prog = corpus_program("log_prog")
    checks["log(0), log(-1)"] = all(isinstance(log_prog.run(RealV(x)), DomainError) for x in (0.0, -1.0))
    total = sum(len(r.reports) for r in verified.values())
    fuel = sum(r.count(INCONCLUSIVE) for r in verified.values())
    # a definedness mismatch between primal and dual is reported as FAIL
    inconsistent = [n for n, r in verified.items() if any(x.verdict == FAIL and "definedness" in x.detail for x in r.reports)]
    checks["bottom-consistent"] = not inconsistent
    checks["fuel <= 5%"] = fuel <= 0.05 * total
    failed = [k for k, v in checks.items() if not v]
    record(5, not failed, f"{len(checks)} checks, {fuel}/{total} trials inconclusive; failed {failed}")

def test_6_beta_soundness():
    rng = np.random.default_rng(6)
    instances = beta_instances(rng, 60)
    bad = [c for c, lhs, rhs in instances if not same_outcome(evaluate(lhs), evaluate(rhs))]
    clauses = {c for c, _, _ in instances}
    record(6, not bad, f"{len(instances)} instances over clauses {sorted(clauses)}; mismatched {bad}")

def test_7_flatten_round_trip():
    tree = S.Mu("t", S.Sum(S.REAL, S.Prod(S.TyVar("t"), S.TyVar("t"))))
    rose = S.Mu("r", S.Prod(S.REAL, S.Mu("l", S.Sum(S.UNIT, S.Prod(S.TyVar("r"), S.TyVar("l"))))))
    types = [
        S.REAL, S.UNIT, S.Prod(S.REAL, S.REAL), S.Sum(S.REAL, S.UNIT),
        S.Sum(S.Prod(S.REAL, S.REAL), S.Sum(S.UNIT, S.REAL)), S.Sum(S.REAL, S.VOID),
        LIST, tree, rose, S.Prod(LIST, tree), S.Mu("a", S.Sum(S.UNIT, S.Prod(LIST, S.TyVar("a")))),
    ]
    rng = np.random.default_rng(7)
    n = bad = 0
    for ty in types:
        for _ in range(50):
            v = random_value(ty, rng, depth=4)
            f = flatten_value(v, ty)
            n += 1
            if unflatten_value(f) != v or flatten_value(unflatten_value(f), ty) != f:
                bad += 1
    record(7, bad == 0 and n >= 500, f"{n} values over {len(types)} types, {bad} mismatches")

def _vec(rng, integer):
    k = rng.integers(0, 6)
    idx = rng.choice(np.arange(1, 11), size=k, replace=False).tolist()
    vals = rng.integers(-20, 21, size=k).astype(float) if integer else rng.uniform(-1.0, 1.0, size=k)
    return SparseVec.from_dict(dict(zip(idx, vals.tolist())))

def test_8_vector_space_laws():
    rng = np.random.default_rng(8)
    dense = lambda v: np.array(tan_proj(10, v))
    worst = {True: 0.0, False: 0.0}
    n = 0
    for integer in (True, False):
        for _ in range(600):
            a, b, c = (_vec(rng, integer) for _ in range(3))
            s, t = (float(rng.integers(-5, 6)) if integer else float(rng.uniform(-1.0, 1.0)) for _ in range(2))
            pairs = [
                (tan_add(a, b), tan_add(b, a)),
                (tan_add(tan_add(a, b), c), tan_add(a, tan_add(b, c))),
                (tan_add(a, tan_zero(Backend.KINF)), a),
                (tan_scale(tan_add(a, b), s), tan_add(tan_scale(a, s), tan_scale(b, s))),
                (tan_scale(a, s + t), tan_add(tan_scale(a, s), tan_scale(a, t))),
                (tan_scale(tan_scale(a, s), t), tan_scale(a, s * t)),
                (tan_scale(a, 1.0), a),
            ]
            for lhs, rhs in pairs:
                worst[integer] = max(worst[integer], float(np.max(np.abs(dense(lhs) - dense(rhs)))))
            n += 1
    ok = worst[True] == 0.0 and worst[False] <= 1e-15 and n >= 1000
    record(8, ok, f"{n} triples, integer max err {worst[True]:.1e}, float max err {worst[False]:.1e}")

def test_9_taylor_exp():
    prog = corpus_program("taylor_exp")
    xs = np.linspace(-3.0, 3.0, 20)
    val_err = der_err = 0.0
    for x in xs:
        o = prog.run(RealV(float(x)))
        val_err = max(val_err, abs(o.value.value - taylor_exp_oracle(float(x))) if isinstance(o, Converged) else math.inf)
        f = forward_check(prog, FlatValue(HOLE, (float(x),)), np.ones(1))
        d = f.jacobian[0][0] if f.jacobian else math.nan
        der_err = max(der_err, abs(d - math.exp(x)) / max(1.0, math.exp(x)))
    ok = val_err <= 1e-7 and der_err <= 1e-5
    record(9, ok, f"20 points in [-3, 3]: value err {val_err:.2e} (<=1e-7), derivative rel err {der_err:.2e} (<=1e-5)")
