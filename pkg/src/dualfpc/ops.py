"""Primitive operations on reals, their domains, and their partial derivatives.

Every op is a partial function R^n -> R defined on an open set.  Outside that
set (or when the float result is not finite) applying it is a domain error.
Each op carries two independent descriptions of its partial derivatives: float
evaluators used as a numeric oracle, and source-language term builders used by
the AD macro.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .syntax import Const, PrimOp, Term

FloatFn = Callable[..., float]
TermBuilder = Callable[[Sequence[Term]], Term]


class OutOfDomain(ArithmeticError):
    """A primitive (or ``sign``) was applied outside its domain of definition."""

    def __init__(self, op: str, args: Sequence[float]):
        super().__init__(f"{op} undefined at {list(args)}")
        self.op = op
        self.args = tuple(args)


@dataclass(frozen=True)
class OpSignature:
    symbol: str
    arity: int
    fn: FloatFn
    domain: Callable[..., bool] = lambda *xs: True
    domain_desc: str = "total"
    partials: tuple[FloatFn, ...] = ()

    def __post_init__(self):
        if self.arity < 0:
            raise ValueError("arity must be non-negative")
        if len(self.partials) != self.arity:
            raise ValueError(
                f"{self.symbol}: {self.arity} partial evaluators expected, "
                f"got {len(self.partials)}"
            )


@dataclass
class OpRegistry:
    """Op signatures plus the table of partial-derivative term builders."""

    sigs: dict[str, OpSignature] = field(default_factory=dict)
    derivs: dict[str, tuple[TermBuilder, ...]] = field(default_factory=dict)

    def register(self, sig: OpSignature, derivs: Sequence[TermBuilder]) -> None:
        if sig.symbol in self.sigs:
            raise ValueError(f"duplicate op symbol {sig.symbol!r}")
        if len(derivs) != sig.arity:
            raise ValueError(
                f"{sig.symbol}: arity {sig.arity} but {len(derivs)} derivative builders"
            )
        self.sigs[sig.symbol] = sig
        self.derivs[sig.symbol] = tuple(derivs)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self.sigs

    def __getitem__(self, symbol: str) -> OpSignature:
        return self.sigs[symbol]

    def names(self) -> list[str]:
        return list(self.sigs)

    def copy(self) -> "OpRegistry":
        return OpRegistry(dict(self.sigs), dict(self.derivs))

    def apply(self, op: str, args: Sequence[float]) -> float:
        sig = self.sigs[op]
        if len(args) != sig.arity:
            raise TypeError(f"{op} expects {sig.arity} arguments, got {len(args)}")
        if not sig.domain(*args):
            raise OutOfDomain(op, args)
        try:
            out = sig.fn(*args)
        except (OverflowError, ValueError, ZeroDivisionError):
            raise OutOfDomain(op, args) from None
        if not math.isfinite(out):
            raise OutOfDomain(op, args)
        return out

    def partial_terms(self, op: str, args: Sequence[Term]) -> list[Term]:
        return [b(args) for b in self.derivs[op]]


# -- default ops ------------------------------------------------------------


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def _c(v: float) -> Term:
    return Const(v)


def _op(name: str, *args: Term) -> Term:
    return PrimOp(name, tuple(args))


def register_op(sig: OpSignature, derivs: Sequence[TermBuilder], registry: "OpRegistry | None" = None) -> None:
    """Make an op available to the parser, checker, evaluator and AD macro."""
    (DEFAULT_OPS if registry is None else registry).register(sig, derivs)


def default_registry() -> OpRegistry:
    r = OpRegistry()
    r.register(
        OpSignature("+", 2, lambda x, y: x + y, partials=(lambda x, y: 1.0, lambda x, y: 1.0)),
        [lambda a: _c(1.0), lambda a: _c(1.0)],
    )
    r.register(
        OpSignature("-", 2, lambda x, y: x - y, partials=(lambda x, y: 1.0, lambda x, y: -1.0)),
        [lambda a: _c(1.0), lambda a: _c(-1.0)],
    )
    r.register(
        OpSignature("*", 2, lambda x, y: x * y, partials=(lambda x, y: y, lambda x, y: x)),
        [lambda a: a[1], lambda a: a[0]],
    )
    # d/dy (x/y) is built as -((x/y)/y) rather than -x/(y*y): y*y can underflow
    # to zero while y itself is a valid divisor.
    r.register(
        OpSignature(
            "/", 2, lambda x, y: x / y,
            domain=lambda x, y: y != 0.0, domain_desc="y != 0",
            partials=(lambda x, y: 1.0 / y, lambda x, y: -x / (y * y)),
        ),
        [
            lambda a: _op("/", _c(1.0), a[1]),
            lambda a: _op("neg", _op("/", _op("/", a[0], a[1]), a[1])),
        ],
    )
    r.register(
        OpSignature("neg", 1, lambda x: -x, partials=(lambda x: -1.0,)),
        [lambda a: _c(-1.0)],
    )
    r.register(
        OpSignature("exp", 1, math.exp, partials=(math.exp,)),
        [lambda a: _op("exp", a[0])],
    )
    r.register(
        OpSignature(
            "log", 1, math.log,
            domain=lambda x: x > 0.0, domain_desc="x > 0",
            partials=(lambda x: 1.0 / x,),
        ),
        [lambda a: _op("/", _c(1.0), a[0])],
    )
    r.register(
        OpSignature(
            "sqrt", 1, math.sqrt,
            domain=lambda x: x > 0.0, domain_desc="x > 0",
            partials=(lambda x: 0.5 / math.sqrt(x),),
        ),
        [lambda a: _op("/", _c(0.5), _op("sqrt", a[0]))],
    )
    r.register(
        OpSignature("sin", 1, math.sin, partials=(math.cos,)),
        [lambda a: _op("cos", a[0])],
    )
    r.register(
        OpSignature("cos", 1, math.cos, partials=(lambda x: -math.sin(x),)),
        [lambda a: _op("neg", _op("sin", a[0]))],
    )
    r.register(
        OpSignature("tanh", 1, math.tanh, partials=(lambda x: 1.0 - math.tanh(x) ** 2,)),
        [lambda a: _op("-", _c(1.0), _op("*", _op("tanh", a[0]), _op("tanh", a[0])))],
    )
    r.register(
        OpSignature(
            "sigmoid", 1, _sigmoid,
            partials=(lambda x: _sigmoid(x) * (1.0 - _sigmoid(x)),),
        ),
        [lambda a: _op("*", _op("sigmoid", a[0]), _op("-", _c(1.0), _op("sigmoid", a[0])))],
    )
    r.register(OpSignature("pi", 0, lambda: math.pi), [])
    return r


DEFAULT_OPS = default_registry()

INFIX = ("+", "-", "*", "/")


def apply_prim(op: str, args: Sequence[float], registry: OpRegistry | None = None) -> float:
    """Apply a primitive; raises :class:`OutOfDomain` off its open domain."""
    return (DEFAULT_OPS if registry is None else registry).apply(op, args)
