"""Abstract syntax shared by the source and target languages.

Types and terms are immutable dataclasses.  Names are plain strings; binders
are renamed with :func:`fresh_name` when substitution would capture.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional, Union


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


class Type:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Real(Type):
    pass


@dataclass(frozen=True, slots=True)
class Tangent(Type):
    pass


@dataclass(frozen=True, slots=True)
class Unit(Type):
    pass


@dataclass(frozen=True, slots=True)
class Void(Type):
    pass


@dataclass(frozen=True, slots=True)
class Sum(Type):
    left: Type
    right: Type


@dataclass(frozen=True, slots=True)
class Prod(Type):
    left: Type
    right: Type


@dataclass(frozen=True, slots=True)
class Arrow(Type):
    dom: Type
    cod: Type


@dataclass(frozen=True, slots=True)
class TyVar(Type):
    name: str


@dataclass(frozen=True, slots=True)
class Mu(Type):
    var: str
    body: Type


REAL = Real()
TANGENT = Tangent()
UNIT = Unit()
VOID = Void()


def real_power(i: int) -> Type:
    """``real^i`` as a left-nested product: real^(i+1) = real^i * real."""
    if i < 1:
        raise ValueError(f"real^{i} is undefined; exponent must be >= 1")
    ty: Type = REAL
    for _ in range(i - 1):
        ty = Prod(ty, REAL)
    return ty


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


class Term:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Var(Term):
    name: str


@dataclass(frozen=True, slots=True)
class Let(Term):
    name: str
    bound: Term
    body: Term


@dataclass(frozen=True, slots=True)
class Const(Term):
    value: float


@dataclass(frozen=True, slots=True)
class PrimOp(Term):
    op: str
    args: tuple[Term, ...]


@dataclass(frozen=True, slots=True)
class Sign(Term):
    arg: Term


@dataclass(frozen=True, slots=True)
class Inl(Term):
    arg: Term
    ann: Optional[Type] = None  # the full sum type, when given


@dataclass(frozen=True, slots=True)
class Inr(Term):
    arg: Term
    ann: Optional[Type] = None


@dataclass(frozen=True, slots=True)
class Case(Term):
    scrut: Term
    lname: str
    lbody: Term
    rname: str
    rbody: Term


@dataclass(frozen=True, slots=True)
class UnitVal(Term):
    pass


@dataclass(frozen=True, slots=True)
class Pair(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class PairMatch(Term):
    scrut: Term
    lname: str
    rname: str
    body: Term


@dataclass(frozen=True, slots=True)
class Lam(Term):
    name: str
    body: Term
    ann: Optional[Type] = None  # parameter type, when given


@dataclass(frozen=True, slots=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True, slots=True)
class Roll(Term):
    arg: Term
    ann: Type  # always a Mu type


@dataclass(frozen=True, slots=True)
class Unroll(Term):
    scrut: Term
    name: str
    body: Term


@dataclass(frozen=True, slots=True)
class VoidMatch(Term):
    arg: Term
    ann: Optional[Type] = None  # result type, when given


# target-only


@dataclass(frozen=True, slots=True)
class Basis(Term):
    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"basis index must be >= 1, got {self.index}")


@dataclass(frozen=True, slots=True)
class ZeroTan(Term):
    pass


@dataclass(frozen=True, slots=True)
class AddTan(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class ScaleTan(Term):
    tan: Term
    scalar: Term


@dataclass(frozen=True, slots=True)
class ProjHandler(Term):
    index: int
    arg: Term

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"projection index must be >= 1, got {self.index}")


TARGET_ONLY = (Basis, ZeroTan, AddTan, ScaleTan, ProjHandler)

Syntax = Union[Type, Term]


# ---------------------------------------------------------------------------
# Names
# ---------------------------------------------------------------------------

_TRAILING_DIGITS = re.compile(r"\d+$")


def fresh_name(avoid: Iterable[str], hint: str) -> str:
    """Return ``hint`` if unused, else ``hint`` with the smallest free suffix.

    >>> fresh_name({"x", "x1"}, "x")
    'x2'
    """
    avoid = avoid if isinstance(avoid, (set, frozenset, dict)) else set(avoid)
    if hint not in avoid:
        return hint
    base = _TRAILING_DIGITS.sub("", hint) or hint
    i = 1
    while f"{base}{i}" in avoid:
        i += 1
    return f"{base}{i}"


def children(t: Term) -> tuple[Term, ...]:
    """Immediate subterms, left to right."""
    if isinstance(t, (Var, Const, UnitVal, Basis, ZeroTan)):
        return ()
    if isinstance(t, Let):
        return (t.bound, t.body)
    if isinstance(t, PrimOp):
        return t.args
    if isinstance(t, (Sign, Inl, Inr, Roll, VoidMatch)):
        return (t.arg,)
    if isinstance(t, Case):
        return (t.scrut, t.lbody, t.rbody)
    if isinstance(t, (Pair, AddTan)):
        return (t.left, t.right)
    if isinstance(t, PairMatch):
        return (t.scrut, t.body)
    if isinstance(t, Lam):
        return (t.body,)
    if isinstance(t, App):
        return (t.fn, t.arg)
    if isinstance(t, Unroll):
        return (t.scrut, t.body)
    if isinstance(t, ScaleTan):
        return (t.tan, t.scalar)
    if isinstance(t, ProjHandler):
        return (t.arg,)
    raise TypeError(f"not a term: {t!r}")


def free_vars(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, Let):
        return free_vars(t.bound) | (free_vars(t.body) - {t.name})
    if isinstance(t, Case):
        return (
            free_vars(t.scrut)
            | (free_vars(t.lbody) - {t.lname})
            | (free_vars(t.rbody) - {t.rname})
        )
    if isinstance(t, PairMatch):
        return free_vars(t.scrut) | (free_vars(t.body) - {t.lname, t.rname})
    if isinstance(t, Lam):
        return free_vars(t.body) - {t.name}
    if isinstance(t, Unroll):
        return free_vars(t.scrut) | (free_vars(t.body) - {t.name})
    out: frozenset[str] = frozenset()
    for c in children(t):
        out |= free_vars(c)
    return out


def binders(t: Term) -> tuple[str, ...]:
    if isinstance(t, (Let, Lam, Unroll)):
        return (t.name,)
    if isinstance(t, (Case,)):
        return (t.lname, t.rname)
    if isinstance(t, PairMatch):
        return (t.lname, t.rname)
    return ()


def all_names(t: Term) -> set[str]:
    """Every variable name occurring in ``t``, bound or free."""
    out: set[str] = set()
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Var):
            out.add(s.name)
        out.update(binders(s))
        stack.extend(children(s))
    return out


def free_tyvars(ty: Type) -> frozenset[str]:
    if isinstance(ty, TyVar):
        return frozenset((ty.name,))
    if isinstance(ty, Mu):
        return free_tyvars(ty.body) - {ty.var}
    if isinstance(ty, (Sum, Prod)):
        return free_tyvars(ty.left) | free_tyvars(ty.right)
    if isinstance(ty, Arrow):
        return free_tyvars(ty.dom) | free_tyvars(ty.cod)
    return frozenset()


def _type_names(ty: Type) -> set[str]:
    if isinstance(ty, TyVar):
        return {ty.name}
    if isinstance(ty, Mu):
        return {ty.var} | _type_names(ty.body)
    if isinstance(ty, (Sum, Prod)):
        return _type_names(ty.left) | _type_names(ty.right)
    if isinstance(ty, Arrow):
        return _type_names(ty.dom) | _type_names(ty.cod)
    return set()


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------


def subst_type(ty: Type, name: str, by: Type) -> Type:
    """Capture-avoiding ``ty[by/name]``."""
    if isinstance(ty, TyVar):
        return by if ty.name == name else ty
    if isinstance(ty, Mu):
        if ty.var == name:
            return ty
        body, var = ty.body, ty.var
        fv = free_tyvars(by)
        if var in fv and name in free_tyvars(body):
            new = fresh_name(fv | _type_names(body) | {name}, var)
            body = subst_type(body, var, TyVar(new))
            var = new
        return Mu(var, subst_type(body, name, by))
    if isinstance(ty, Sum):
        return Sum(subst_type(ty.left, name, by), subst_type(ty.right, name, by))
    if isinstance(ty, Prod):
        return Prod(subst_type(ty.left, name, by), subst_type(ty.right, name, by))
    if isinstance(ty, Arrow):
        return Arrow(subst_type(ty.dom, name, by), subst_type(ty.cod, name, by))
    return ty


def unfold(mu: Mu) -> Type:
    """One-step unfolding ``body[mu/var]``."""
    return subst_type(mu.body, mu.var, mu)


def subst_term(t: Term, name: str, by: Term) -> Term:
    """Capture-avoiding ``t[by/name]``; bound names are freshened on clash."""
    fv = free_vars(by)
    return _subst(t, name, by, fv)


def _under(binder: str, body: Term, name: str, by: Term, fv) -> tuple[str, Term]:
    """Substitute inside a single-binder scope, renaming the binder if needed."""
    if binder == name:
        return binder, body
    if binder in fv and name in free_vars(body):
        new = fresh_name(fv | all_names(body) | {name}, binder)
        body = _subst(body, binder, Var(new), frozenset((new,)))
        binder = new
    return binder, _subst(body, name, by, fv)


def _subst(t: Term, name: str, by: Term, fv) -> Term:
    if isinstance(t, Var):
        return by if t.name == name else t
    if isinstance(t, (Const, UnitVal, Basis, ZeroTan)):
        return t
    if isinstance(t, Let):
        x, body = _under(t.name, t.body, name, by, fv)
        return Let(x, _subst(t.bound, name, by, fv), body)
    if isinstance(t, Lam):
        x, body = _under(t.name, t.body, name, by, fv)
        return Lam(x, body, t.ann)
    if isinstance(t, Unroll):
        x, body = _under(t.name, t.body, name, by, fv)
        return Unroll(_subst(t.scrut, name, by, fv), x, body)
    if isinstance(t, Case):
        lx, lb = _under(t.lname, t.lbody, name, by, fv)
        rx, rb = _under(t.rname, t.rbody, name, by, fv)
        return Case(_subst(t.scrut, name, by, fv), lx, lb, rx, rb)
    if isinstance(t, PairMatch):
        scrut = _subst(t.scrut, name, by, fv)
        if name in (t.lname, t.rname):
            return PairMatch(scrut, t.lname, t.rname, t.body)
        a, b, body = t.lname, t.rname, t.body
        if (a in fv or b in fv) and name in free_vars(body):
            avoid = set(fv) | all_names(body) | {name, a, b}
            if a in fv:
                na = fresh_name(avoid, a)
                avoid.add(na)
                body = _subst(body, a, Var(na), frozenset((na,)))
                a = na
            if b in fv:
                nb = fresh_name(avoid, b)
                body = _subst(body, b, Var(nb), frozenset((nb,)))
                b = nb
        return PairMatch(scrut, a, b, _subst(body, name, by, fv))
    if isinstance(t, PrimOp):
        return PrimOp(t.op, tuple(_subst(a, name, by, fv) for a in t.args))
    if isinstance(t, Sign):
        return Sign(_subst(t.arg, name, by, fv))
    if isinstance(t, Inl):
        return Inl(_subst(t.arg, name, by, fv), t.ann)
    if isinstance(t, Inr):
        return Inr(_subst(t.arg, name, by, fv), t.ann)
    if isinstance(t, Roll):
        return Roll(_subst(t.arg, name, by, fv), t.ann)
    if isinstance(t, VoidMatch):
        return VoidMatch(_subst(t.arg, name, by, fv), t.ann)
    if isinstance(t, Pair):
        return Pair(_subst(t.left, name, by, fv), _subst(t.right, name, by, fv))
    if isinstance(t, App):
        return App(_subst(t.fn, name, by, fv), _subst(t.arg, name, by, fv))
    if isinstance(t, AddTan):
        return AddTan(_subst(t.left, name, by, fv), _subst(t.right, name, by, fv))
    if isinstance(t, ScaleTan):
        return ScaleTan(_subst(t.tan, name, by, fv), _subst(t.scalar, name, by, fv))
    if isinstance(t, ProjHandler):
        return ProjHandler(t.index, _subst(t.arg, name, by, fv))
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Alpha-equivalence
# ---------------------------------------------------------------------------


class _Scope:
    """Pairs of simultaneously bound names, innermost first."""

    __slots__ = ("pairs",)

    def __init__(self, pairs=()):
        self.pairs = pairs

    def bind(self, a: str, b: str) -> "_Scope":
        return _Scope(((a, b),) + self.pairs)

    def same(self, a: str, b: str) -> bool:
        for x, y in self.pairs:
            if x == a or y == b:
                return x == a and y == b
        return a == b


def alpha_eq(a: Syntax, b: Syntax) -> bool:
    """Equality up to consistent renaming of bound term and type variables."""
    if isinstance(a, Type) and isinstance(b, Type):
        return _ty_eq(a, b, _Scope())
    if isinstance(a, Term) and isinstance(b, Term):
        return _tm_eq(a, b, _Scope())
    return False


def _ty_eq(a: Type, b: Type, s: _Scope) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, TyVar):
        return s.same(a.name, b.name)
    if isinstance(a, Mu):
        return _ty_eq(a.body, b.body, s.bind(a.var, b.var))
    if isinstance(a, (Sum, Prod)):
        return _ty_eq(a.left, b.left, s) and _ty_eq(a.right, b.right, s)
    if isinstance(a, Arrow):
        return _ty_eq(a.dom, b.dom, s) and _ty_eq(a.cod, b.cod, s)
    return True


def _ann_eq(a: Optional[Type], b: Optional[Type]) -> bool:
    if a is None or b is None:
        return a is b
    return _ty_eq(a, b, _Scope())


def _tm_eq(a: Term, b: Term, s: _Scope) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        return s.same(a.name, b.name)
    if isinstance(a, Const):
        return a.value == b.value and (a.value != 0.0 or str(a.value) == str(b.value))
    if isinstance(a, (UnitVal, ZeroTan)):
        return True
    if isinstance(a, Basis):
        return a.index == b.index
    if isinstance(a, Let):
        return _tm_eq(a.bound, b.bound, s) and _tm_eq(a.body, b.body, s.bind(a.name, b.name))
    if isinstance(a, Lam):
        return _ann_eq(a.ann, b.ann) and _tm_eq(a.body, b.body, s.bind(a.name, b.name))
    if isinstance(a, Unroll):
        return _tm_eq(a.scrut, b.scrut, s) and _tm_eq(a.body, b.body, s.bind(a.name, b.name))
    if isinstance(a, Case):
        return (
            _tm_eq(a.scrut, b.scrut, s)
            and _tm_eq(a.lbody, b.lbody, s.bind(a.lname, b.lname))
            and _tm_eq(a.rbody, b.rbody, s.bind(a.rname, b.rname))
        )
    if isinstance(a, PairMatch):
        if (a.lname == a.rname) != (b.lname == b.rname):
            return False
        inner = s.bind(a.lname, b.lname).bind(a.rname, b.rname)
        return _tm_eq(a.scrut, b.scrut, s) and _tm_eq(a.body, b.body, inner)
    if isinstance(a, PrimOp):
        return (
            a.op == b.op
            and len(a.args) == len(b.args)
            and all(_tm_eq(x, y, s) for x, y in zip(a.args, b.args))
        )
    if isinstance(a, (Inl, Inr, VoidMatch)):
        return _ann_eq(a.ann, b.ann) and _tm_eq(a.arg, b.arg, s)
    if isinstance(a, Roll):
        return _ann_eq(a.ann, b.ann) and _tm_eq(a.arg, b.arg, s)
    if isinstance(a, ProjHandler):
        return a.index == b.index and _tm_eq(a.arg, b.arg, s)
    if isinstance(a, Sign):
        return _tm_eq(a.arg, b.arg, s)
    return all(_tm_eq(x, y, s) for x, y in zip(children(a), children(b)))


def is_source_type(ty: Type) -> bool:
    if isinstance(ty, Tangent):
        return False
    if isinstance(ty, Mu):
        return is_source_type(ty.body)
    if isinstance(ty, (Sum, Prod)):
        return is_source_type(ty.left) and is_source_type(ty.right)
    if isinstance(ty, Arrow):
        return is_source_type(ty.dom) and is_source_type(ty.cod)
    return True


def is_source_term(t: Term) -> bool:
    """True iff ``t`` uses no target-only constructor or tangent annotation."""
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, TARGET_ONLY):
            return False
        ann = getattr(s, "ann", None)
        if ann is not None and not is_source_type(ann):
            return False
        stack.extend(children(s))
    return True
