"""Random test-case generators shared by unit and acceptance tests."""

import math

import numpy as np

from dualfpc import syntax as S
from dualfpc.syntax import Const, Var

_UNARY = ("sin", "cos", "tanh", "sigmoid", "neg", "exp", "log", "sqrt")
_BINARY = ("+", "-", "*", "/")
LIST = S.Mu("a", S.Sum(S.UNIT, S.Prod(S.REAL, S.TyVar("a"))))


def real_expr(rng: np.random.Generator, names, depth: int = 3) -> S.Term:
    """A real-typed term over real-typed variables ``names``.

    Includes partial ops (log, sqrt, /) and sign-cases, so some instances
    evaluate to a domain error.
    """
    if depth == 0 or rng.random() < 0.25:
        if names and rng.random() < 0.6:
            return Var(str(rng.choice(names)))
        return Const(float(np.round(rng.uniform(-2, 2), 2)))
    k = rng.integers(4)
    if k == 0:
        op = str(rng.choice(_UNARY))
        arg = real_expr(rng, names, depth - 1)
        if op == "exp":
            arg = S.PrimOp("tanh", (arg,))
        return S.PrimOp(op, (arg,))
    if k == 1:
        op = str(rng.choice(_BINARY))
        return S.PrimOp(op, (real_expr(rng, names, depth - 1), real_expr(rng, names, depth - 1)))
    if k == 2:
        return S.Case(
            S.Sign(real_expr(rng, names, depth - 1)),
            "_", real_expr(rng, names, depth - 1),
            "_", real_expr(rng, names, depth - 1),
        )
    x = S.fresh_name(set(names), "t")
    return S.Let(x, real_expr(rng, names, depth - 1), real_expr(rng, list(names) + [x], depth - 1))


def real_value(rng) -> S.Term:
    return Const(float(np.round(rng.uniform(-3, 3), 3)))


def beta_instances(rng: np.random.Generator, n: int):
    """``n`` (clause, redex, contractum) triples, cycling through the beta clauses.

    Clauses: let-of-value, case-of-inl, case-of-inr, pair-match-of-pair,
    app-of-lambda, unroll-of-roll.
    """
    clauses = ("let", "inl", "inr", "pair", "app", "roll")
    out = []
    for i in range(n):
        clause = clauses[i % len(clauses)]
        v, w = real_value(rng), real_value(rng)
        body = real_expr(rng, ["x"], 3)
        if clause == "let":
            redex = S.Let("x", v, body)
            contractum = S.subst_term(body, "x", v)
        elif clause in ("inl", "inr"):
            other = real_expr(rng, ["y"], 2)
            if clause == "inl":
                redex = S.Case(S.Inl(v, S.Sum(S.REAL, S.REAL)), "x", body, "y", other)
                contractum = S.subst_term(body, "x", v)
            else:
                redex = S.Case(S.Inr(v, S.Sum(S.REAL, S.REAL)), "y", other, "x", body)
                contractum = S.subst_term(body, "x", v)
        elif clause == "pair":
            body = real_expr(rng, ["x", "y"], 3)
            redex = S.PairMatch(S.Pair(v, w), "x", "y", body)
            contractum = S.subst_term(S.subst_term(body, "x", v), "y", w)
        elif clause == "app":
            redex = S.App(S.Lam("x", body, S.REAL), v)
            contractum = S.subst_term(body, "x", v)
        else:
            cell = S.Roll(S.Inr(S.Pair(v, S.Roll(S.Inl(S.UnitVal()), LIST))), LIST)
            head = S.PairMatch(Var("c"), "x", "rest", body)
            case = S.Case(S.Var("u"), "_", Const(0.0), "c", head)
            redex = S.Unroll(cell, "u", case)
            contractum = S.subst_term(case, "u", S.Inr(S.Pair(v, S.Roll(S.Inl(S.UnitVal()), LIST))))
        out.append((clause, redex, contractum))
    return out


def taylor_exp_oracle(x: float, cutoff: float = 1e-12) -> float:
    """Partial sums of x^i / i!, stopping at the first term inside (-cutoff, cutoff)."""
    acc, i = 0.0, 0
    while True:
        term = x**i / math.factorial(i)
        if -cutoff < term < cutoff:
            return acc
        acc += term
        i += 1
