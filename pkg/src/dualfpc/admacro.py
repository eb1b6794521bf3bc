"""Dual-numbers AD as a source-to-source transformation.

Reals become ``real * tangent`` pairs and every other type former is mapped
homomorphically.  A primitive application destructures the dual arguments,
recomputes the op on the primal parts, and combines the argument tangents
with the op's partial derivatives.
"""

from __future__ import annotations

from typing import Optional

from . import syntax as S
from .ops import DEFAULT_OPS, OpRegistry, OpSignature, TermBuilder, register_op
from .syntax import Term, Type
from .typecheck import Context

__all__ = [
    "ad_type",
    "ad_term",
    "ad_context",
    "gradient_term",
    "real_arity",
    "register_op",
    "OpSignature",
    "TermBuilder",
    "dual_real",
]

DUAL_REAL = S.Prod(S.REAL, S.TANGENT)


def dual_real() -> Type:
    return DUAL_REAL


def ad_type(ty: Type) -> Type:
    if isinstance(ty, S.Real):
        return DUAL_REAL
    if isinstance(ty, S.Tangent):
        raise ValueError("ad_type is only defined on source types (found tangent)")
    if isinstance(ty, (S.Unit, S.Void, S.TyVar)):
        return ty
    if isinstance(ty, S.Sum):
        return S.Sum(ad_type(ty.left), ad_type(ty.right))
    if isinstance(ty, S.Prod):
        return S.Prod(ad_type(ty.left), ad_type(ty.right))
    if isinstance(ty, S.Arrow):
        return S.Arrow(ad_type(ty.dom), ad_type(ty.cod))
    if isinstance(ty, S.Mu):
        return S.Mu(ty.var, ad_type(ty.body))
    raise TypeError(f"not a type: {ty!r}")


def _ad_ann(ann: Optional[Type]) -> Optional[Type]:
    return None if ann is None else ad_type(ann)


def ad_context(ctx: Context) -> Context:
    return Context(ctx.tyvars, {x: ad_type(ty) for x, ty in ctx.terms.items()})


class _Macro:
    def __init__(self, t: Term, ops: OpRegistry):
        self.ops = ops
        self.used = S.all_names(t)

    def fresh(self, hint: str) -> str:
        x = S.fresh_name(self.used, hint)
        self.used.add(x)
        return x

    def __call__(self, t: Term) -> Term:
        D = self
        if isinstance(t, S.Var):
            return t
        if isinstance(t, S.Const):
            return S.Pair(t, S.ZeroTan())
        if isinstance(t, S.PrimOp):
            return self.prim(t)
        if isinstance(t, S.Sign):
            a, b = self.fresh("p"), self.fresh("dp")
            return S.Sign(S.PairMatch(D(t.arg), a, b, S.Var(a)))
        if isinstance(t, S.Let):
            return S.Let(t.name, D(t.bound), D(t.body))
        if isinstance(t, S.Inl):
            return S.Inl(D(t.arg), _ad_ann(t.ann))
        if isinstance(t, S.Inr):
            return S.Inr(D(t.arg), _ad_ann(t.ann))
        if isinstance(t, S.Case):
            return S.Case(D(t.scrut), t.lname, D(t.lbody), t.rname, D(t.rbody))
        if isinstance(t, S.UnitVal):
            return t
        if isinstance(t, S.Pair):
            return S.Pair(D(t.left), D(t.right))
        if isinstance(t, S.PairMatch):
            return S.PairMatch(D(t.scrut), t.lname, t.rname, D(t.body))
        if isinstance(t, S.Lam):
            return S.Lam(t.name, D(t.body), _ad_ann(t.ann))
        if isinstance(t, S.App):
            return S.App(D(t.fn), D(t.arg))
        if isinstance(t, S.Roll):
            return S.Roll(D(t.arg), ad_type(t.ann))
        if isinstance(t, S.Unroll):
            return S.Unroll(D(t.scrut), t.name, D(t.body))
        if isinstance(t, S.VoidMatch):
            return S.VoidMatch(D(t.arg), _ad_ann(t.ann))
        if isinstance(t, S.TARGET_ONLY):
            raise ValueError(f"ad_term is only defined on source terms (found {type(t).__name__})")
        raise TypeError(f"not a term: {t!r}")

    def prim(self, t: S.PrimOp) -> Term:
        if t.op not in self.ops:
            raise KeyError(f"no derivative entry for primitive {t.op!r}")
        n = len(t.args)
        xs = [self.fresh("x") for _ in range(n)]
        dxs = [self.fresh("dx") for _ in range(n)]
        v = self.fresh("v")
        zs = [self.fresh("z") for _ in range(n)]
        primal_args = tuple(S.Var(x) for x in xs)

        tangent: Term
        if n == 0:
            tangent = S.ZeroTan()
        else:
            tangent = S.ScaleTan(S.Var(dxs[0]), S.Var(zs[0]))
            for dx, z in zip(dxs[1:], zs[1:]):
                tangent = S.AddTan(tangent, S.ScaleTan(S.Var(dx), S.Var(z)))

        body: Term = S.Pair(S.Var(v), tangent)
        partials = self.ops.partial_terms(t.op, primal_args)
        for z, dz in reversed(list(zip(zs, partials))):
            body = S.Let(z, dz, body)
        body = S.Let(v, S.PrimOp(t.op, primal_args), body)
        for arg, x, dx in reversed(list(zip(t.args, xs, dxs))):
            body = S.PairMatch(self(arg), x, dx, body)
        return body


def ad_term(t: Term, ops: Optional[OpRegistry] = None) -> Term:
    """Apply the AD macro to a source term; new binders are fresh for ``t``."""
    return _Macro(t, ops or DEFAULT_OPS)(t)


def real_arity(ty: Type) -> Optional[int]:
    """``n`` if ``ty`` is ``real^n`` (left-nested products of reals), else None."""
    if isinstance(ty, S.Real):
        return 1
    if isinstance(ty, S.Prod) and isinstance(ty.right, S.Real):
        n = real_arity(ty.left)
        return None if n is None else n + 1
    return None


def gradient_term(fn: Term, n: int, used: frozenset[str] = frozenset()) -> Term:
    """Reverse mode for ``fn : D(real^n -> real)`` as a target term of type ``real^n -> real^n``.

    Input j is paired with basis vector j, ``fn`` is applied, and the output
    tangent is projected onto its first n coordinates.
    """
    avoid = set(used) | S.free_vars(fn)

    def fresh(hint):
        x = S.fresh_name(avoid, hint)
        avoid.add(x)
        return x

    y = fresh("y")
    ys = [fresh("y") for _ in range(n)]
    v, dv = fresh("v"), fresh("dv")

    wrapped: Term = S.Pair(S.Var(ys[0]), S.Basis(1))
    for j in range(1, n):
        wrapped = S.Pair(wrapped, S.Pair(S.Var(ys[j]), S.Basis(j + 1)))
    body: Term = S.PairMatch(S.App(fn, wrapped), v, dv, S.ProjHandler(n, S.Var(dv)))

    # y : real^n is ((y1, y2), y3)...; match from the outside in
    if n == 1:
        body = S.Let(ys[0], S.Var(y), body)
    else:
        matches = []
        scrut = y
        for j in range(n - 1, 0, -1):
            left = fresh("yl") if j > 1 else ys[0]
            matches.append((scrut, left, ys[j]))
            scrut = left
        for scrut, left, right in reversed(matches):
            body = S.PairMatch(S.Var(scrut), left, right, body)
    return S.Lam(y, body, S.real_power(n))
