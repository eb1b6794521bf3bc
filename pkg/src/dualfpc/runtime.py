"""Call-by-value evaluator with explicit partiality.

The evaluator is a CEK-style machine with an explicit continuation stack, so
deep recursion in object programs never touches Python's recursion limit.
Every term visited costs one unit of fuel.  Domain errors and fuel exhaustion
both denote the undefined result; they are kept apart only for diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

from . import syntax as S
from .ops import DEFAULT_OPS, OpRegistry, OutOfDomain
from .tangent import (
    Backend,
    NonFiniteTangent,
    Scalar,
    SparseVec,
    TangentValue,
    tan_add,
    tan_basis,
    tan_proj,
    tan_scale,
    tan_zero,
)

DEFAULT_FUEL = 1_000_000


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


class Value:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class RealV(Value):
    value: float


@dataclass(frozen=True, slots=True)
class TanV(Value):
    tangent: TangentValue


@dataclass(frozen=True, slots=True)
class UnitV(Value):
    pass


@dataclass(frozen=True, slots=True)
class InlV(Value):
    value: Value


@dataclass(frozen=True, slots=True)
class InrV(Value):
    value: Value


@dataclass(frozen=True, slots=True)
class PairV(Value):
    left: Value
    right: Value


@dataclass(frozen=True, slots=True, eq=False)
class ClosureV(Value):
    env: Mapping[str, Value]
    name: str
    body: S.Term

    def __eq__(self, other):
        return (
            isinstance(other, ClosureV)
            and self.name == other.name
            and self.body == other.body
            and dict(self.env) == dict(other.env)
        )

    __hash__ = None


@dataclass(frozen=True, slots=True)
class RollV(Value):
    value: Value


UNIT_V = UnitV()


# ---------------------------------------------------------------------------
# Outcomes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Converged:
    value: Value


@dataclass(frozen=True)
class DomainError:
    op: str
    args: tuple[float, ...]
    position: Optional[S.Term] = None

    def __str__(self):
        return f"domain error: {self.op} undefined at {list(self.args)}"


@dataclass(frozen=True)
class FuelExhausted:
    steps: int

    def __str__(self):
        return f"fuel exhausted after {self.steps} steps"


Outcome = Union[Converged, DomainError, FuelExhausted]


def is_bottom(o: Outcome) -> bool:
    return not isinstance(o, Converged)


def same_outcome(a: Outcome, b: Outcome) -> bool:
    """Semantic equality: equal values, or the same kind of undefinedness.

    Domain errors compare by op and arguments only; their source position is
    diagnostic.
    """
    if isinstance(a, Converged) and isinstance(b, Converged):
        return a.value == b.value
    if isinstance(a, DomainError) and isinstance(b, DomainError):
        return a.op == b.op and a.args == b.args
    return isinstance(a, FuelExhausted) and isinstance(b, FuelExhausted)


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------


def sign_sem(x: float) -> Value:
    """``inl ()`` on negatives, ``inr ()`` on positives, undefined at zero."""
    if x < 0.0:
        return InlV(UNIT_V)
    if x > 0.0:
        return InrV(UNIT_V)
    raise OutOfDomain("sign", (x,))


def real_tuple(xs: Sequence[float]) -> Value:
    """Left-nested tuple value of type real^len(xs)."""
    v: Value = RealV(xs[0])
    for x in xs[1:]:
        v = PairV(v, RealV(x))
    return v


def tuple_reals(v: Value, n: int) -> list[float]:
    out = []
    for _ in range(n - 1):
        out.append(v.right.value)
        v = v.left
    out.append(v.value)
    return out[::-1]


# ---------------------------------------------------------------------------
# Machine
# ---------------------------------------------------------------------------

# continuation frame tags
_LET, _PRIM, _SIGN, _INL, _INR, _CASE, _PAIR_L, _PAIR_R, _PMATCH = range(9)
_APP_FN, _APP_ARG, _ROLL, _UNROLL, _VOID, _ADD_L, _ADD_R, _SCALE_L, _SCALE_R, _PROJ = range(9, 19)


class _Stuck(RuntimeError):
    """Ill-typed program reached the machine."""


def evaluate(
    term: S.Term,
    env: Optional[Mapping[str, Value]] = None,
    backend: Backend = Backend.K1,
    fuel: int = DEFAULT_FUEL,
    ops: Optional[OpRegistry] = None,
    trace: Optional[list] = None,
) -> Outcome:
    """Evaluate ``term`` under ``env``; the term must be well typed.

    If ``trace`` is a list, the outcome of every ``sign`` (False for negative,
    True for positive) is appended to it in evaluation order.
    """
    return _run(term, dict(env or {}), backend, fuel, ops or DEFAULT_OPS, trace)


def apply_value(
    fn: Value,
    arg: Value,
    backend: Backend = Backend.K1,
    fuel: int = DEFAULT_FUEL,
    ops: Optional[OpRegistry] = None,
    trace: Optional[list] = None,
) -> Outcome:
    if not isinstance(fn, ClosureV):
        raise TypeError(f"cannot apply non-function value {fn!r}")
    env = dict(fn.env)
    env[fn.name] = arg
    return _run(fn.body, env, backend, fuel, ops or DEFAULT_OPS, trace)


def _run(term, env, backend, fuel, ops, trace=None) -> Outcome:
    stack: list = []
    budget = fuel
    t = term
    v = None
    evaluating = True
    try:
        while True:
            if evaluating:
                if budget <= 0:
                    return FuelExhausted(fuel)
                budget -= 1
                c = type(t)
                if c is S.Var:
                    v = env[t.name]
                elif c is S.Const:
                    v = RealV(t.value)
                elif c is S.App:
                    stack.append((_APP_FN, t.arg, env))
                    t = t.fn
                    continue
                elif c is S.Let:
                    stack.append((_LET, t.name, t.body, env))
                    t = t.bound
                    continue
                elif c is S.Lam:
                    v = ClosureV(env, t.name, t.body)
                elif c is S.PrimOp:
                    if not t.args:
                        v = RealV(ops.apply(t.op, ()))
                    else:
                        stack.append((_PRIM, t, [], env))
                        t = t.args[0]
                        continue
                elif c is S.Case:
                    stack.append((_CASE, t, env))
                    t = t.scrut
                    continue
                elif c is S.PairMatch:
                    stack.append((_PMATCH, t, env))
                    t = t.scrut
                    continue
                elif c is S.Pair:
                    stack.append((_PAIR_L, t.right, env))
                    t = t.left
                    continue
                elif c is S.Sign:
                    stack.append((_SIGN, t))
                    t = t.arg
                    continue
                elif c is S.Inl:
                    stack.append((_INL,))
                    t = t.arg
                    continue
                elif c is S.Inr:
                    stack.append((_INR,))
                    t = t.arg
                    continue
                elif c is S.UnitVal:
                    v = UNIT_V
                elif c is S.Roll:
                    stack.append((_ROLL,))
                    t = t.arg
                    continue
                elif c is S.Unroll:
                    stack.append((_UNROLL, t, env))
                    t = t.scrut
                    continue
                elif c is S.VoidMatch:
                    stack.append((_VOID,))
                    t = t.arg
                    continue
                elif c is S.ZeroTan:
                    v = TanV(tan_zero(backend))
                elif c is S.Basis:
                    v = TanV(tan_basis(t.index, backend))
                elif c is S.AddTan:
                    stack.append((_ADD_L, t.right, env))
                    t = t.left
                    continue
                elif c is S.ScaleTan:
                    stack.append((_SCALE_L, t.scalar, env))
                    t = t.tan
                    continue
                elif c is S.ProjHandler:
                    stack.append((_PROJ, t.index))
                    t = t.arg
                    continue
                else:
                    raise _Stuck(f"unknown term {t!r}")
                evaluating = False

            # return mode: feed v to the top frame
            if not stack:
                return Converged(v)
            f = stack.pop()
            tag = f[0]
            if tag == _LET:
                env = dict(f[3])
                env[f[1]] = v
                t = f[2]
                evaluating = True
            elif tag == _APP_FN:
                stack.append((_APP_ARG, v))
                t, env = f[1], f[2]
                evaluating = True
            elif tag == _APP_ARG:
                clo = f[1]
                if type(clo) is not ClosureV:
                    raise _Stuck("application of a non-function")
                env = dict(clo.env)
                env[clo.name] = v
                t = clo.body
                evaluating = True
            elif tag == _PRIM:
                term_, done, penv = f[1], f[2], f[3]
                done = done + [v.value]
                if len(done) == len(term_.args):
                    try:
                        v = RealV(ops.apply(term_.op, done))
                    except OutOfDomain as e:
                        return DomainError(e.op, e.args, term_)
                else:
                    stack.append((_PRIM, term_, done, penv))
                    t, env = term_.args[len(done)], penv
                    evaluating = True
            elif tag == _CASE:
                ct, cenv = f[1], f[2]
                env = dict(cenv)
                if type(v) is InlV:
                    env[ct.lname] = v.value
                    t = ct.lbody
                elif type(v) is InrV:
                    env[ct.rname] = v.value
                    t = ct.rbody
                else:
                    raise _Stuck("case on a non-injection")
                evaluating = True
            elif tag == _PMATCH:
                pt, penv = f[1], f[2]
                env = dict(penv)
                env[pt.lname] = v.left
                env[pt.rname] = v.right
                t = pt.body
                evaluating = True
            elif tag == _PAIR_L:
                stack.append((_PAIR_R, v))
                t, env = f[1], f[2]
                evaluating = True
            elif tag == _PAIR_R:
                v = PairV(f[1], v)
            elif tag == _SIGN:
                try:
                    v = sign_sem(v.value)
                except OutOfDomain as e:
                    return DomainError(e.op, e.args, f[1])
                if trace is not None:
                    trace.append(type(v) is InrV)
            elif tag == _INL:
                v = InlV(v)
            elif tag == _INR:
                v = InrV(v)
            elif tag == _ROLL:
                v = RollV(v)
            elif tag == _UNROLL:
                ut, uenv = f[1], f[2]
                env = dict(uenv)
                env[ut.name] = v.value
                t = ut.body
                evaluating = True
            elif tag == _VOID:
                raise _Stuck("value of the empty type")
            elif tag == _ADD_L:
                stack.append((_ADD_R, v))
                t, env = f[1], f[2]
                evaluating = True
            elif tag == _ADD_R:
                v = TanV(tan_add(f[1].tangent, v.tangent))
            elif tag == _SCALE_L:
                stack.append((_SCALE_R, v))
                t, env = f[1], f[2]
                evaluating = True
            elif tag == _SCALE_R:
                v = TanV(tan_scale(f[1].tangent, v.value))
            elif tag == _PROJ:
                v = real_tuple(tan_proj(f[1], v.tangent))
            else:  # pragma: no cover
                raise _Stuck(f"bad frame {f!r}")
    except NonFiniteTangent as e:
        return DomainError("tangent", (e.args[0],), None)


def value_is_finite(v: Value) -> bool:
    stack = [v]
    while stack:
        x = stack.pop()
        if isinstance(x, RealV):
            if not math.isfinite(x.value):
                return False
        elif isinstance(x, TanV):
            tv = x.tangent
            vals = [tv.value] if isinstance(tv, Scalar) else [c for _, c in tv.items]
            if not all(math.isfinite(c) for c in vals):
                return False
        elif isinstance(x, (InlV, InrV, RollV)):
            stack.append(x.value)
        elif isinstance(x, PairV):
            stack.extend((x.left, x.right))
        elif isinstance(x, ClosureV):
            stack.extend(x.env.values())
    return True


def format_value(v: Value) -> str:
    """Human-readable rendering; reals use ``repr`` so they round-trip."""
    if isinstance(v, RealV):
        return repr(v.value)
    if isinstance(v, TanV):
        tv = v.tangent
        if isinstance(tv, Scalar):
            return f"<{tv.value!r}>"
        return "<" + ", ".join(f"{i}: {c!r}" for i, c in tv.items) + ">"
    if isinstance(v, UnitV):
        return "()"
    if isinstance(v, InlV):
        return f"inl {_fmt_arg(v.value)}"
    if isinstance(v, InrV):
        return f"inr {_fmt_arg(v.value)}"
    if isinstance(v, RollV):
        return f"roll {_fmt_arg(v.value)}"
    if isinstance(v, PairV):
        return f"({format_value(v.left)}, {format_value(v.right)})"
    if isinstance(v, ClosureV):
        return "<fun>"
    return str(v)


def _fmt_arg(v: Value) -> str:
    s = format_value(v)
    if isinstance(v, (InlV, InrV, RollV)) or (isinstance(v, RealV) and v.value < 0):
        return f"({s})"
    return s
