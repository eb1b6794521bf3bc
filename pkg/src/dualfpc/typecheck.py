"""Kinding and typing for the source and target languages.

Checking is bidirectional.  Most forms synthesize their type; unannotated
lambdas, injections and void-eliminations need an expected type, which flows
in from definition signatures, lambda annotations and roll annotations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Mapping, Optional

from . import syntax as S
from .ops import DEFAULT_OPS, OpRegistry
from .syntax import Type

Lang = Literal["source", "target"]


class TypeCheckError(Exception):
    def __init__(self, message: str, path: tuple[str, ...] = ()):
        self.message = message
        self.path = path
        where = "/".join(path) if path else "<root>"
        super().__init__(f"{message} (at {where})")


@dataclass(frozen=True)
class Context:
    tyvars: frozenset[str] = frozenset()
    terms: Mapping[str, Type] = field(default_factory=dict)

    def extend(self, name: str, ty: Type) -> "Context":
        d = dict(self.terms)
        d[name] = ty
        return Context(self.tyvars, d)


def kind_check(tyvars, ty: Type) -> bool:
    """Every type variable in ``ty`` is bound by a mu or listed in ``tyvars``."""
    return S.free_tyvars(ty) <= frozenset(tyvars)


def is_positive_type(ty: Type) -> bool:
    """Data types: built from real, unit, void, sums, products and mu."""
    if isinstance(ty, (S.Real, S.Unit, S.Void, S.TyVar)):
        return True
    if isinstance(ty, (S.Sum, S.Prod)):
        return is_positive_type(ty.left) and is_positive_type(ty.right)
    if isinstance(ty, S.Mu):
        return is_positive_type(ty.body)
    return False


def pretty_type(ty: Type) -> str:
    from .surface import pretty

    return pretty(ty)


class _Checker:
    def __init__(self, lang: Lang, ops: OpRegistry):
        self.lang = lang
        self.ops = ops

    def fail(self, msg, path):
        raise TypeCheckError(msg, tuple(path))

    def wf(self, ctx: Context, ty: Type, path):
        if not kind_check(ctx.tyvars, ty):
            self.fail(f"ill-kinded type {pretty_type(ty)}", path)
        if self.lang == "source" and not S.is_source_type(ty):
            self.fail("target-only construct: tangent type in source program", path)

    def expect(self, want: Type, got: Type, path):
        if not S.alpha_eq(want, got):
            self.fail(
                f"type mismatch: expected {pretty_type(want)}, found {pretty_type(got)}",
                path,
            )

    # -- checking mode -------------------------------------------------------

    def check(self, ctx: Context, t: S.Term, want: Type, path) -> Type:
        if isinstance(t, S.Lam) and isinstance(want, S.Arrow):
            if t.ann is not None:
                self.wf(ctx, t.ann, path)
                self.expect(want.dom, t.ann, path)
            self.check(ctx.extend(t.name, want.dom), t.body, want.cod, path + ["fun"])
            return want
        if isinstance(t, S.Lam) and t.ann is None:
            self.fail(f"function where {pretty_type(want)} was expected", path)
        if isinstance(t, (S.Inl, S.Inr)) and t.ann is None:
            if not isinstance(want, S.Sum):
                kw = "inl" if isinstance(t, S.Inl) else "inr"
                self.fail(f"{kw} where {pretty_type(want)} was expected", path)
            side = want.left if isinstance(t, S.Inl) else want.right
            self.check(ctx, t.arg, side, path + [type(t).__name__.lower()])
            return want
        if isinstance(t, S.VoidMatch) and t.ann is None:
            self.check(ctx, t.arg, S.VOID, path + ["absurd"])
            self.wf(ctx, want, path)
            return want
        if isinstance(t, S.Pair) and isinstance(want, S.Prod):
            self.check(ctx, t.left, want.left, path + ["fst"])
            self.check(ctx, t.right, want.right, path + ["snd"])
            return want
        if isinstance(t, S.Let):
            bty = self.synth(ctx, t.bound, path + ["let " + t.name])
            return self.check(ctx.extend(t.name, bty), t.body, want, path + ["in"])
        if isinstance(t, S.Case):
            sty = self._sum_scrut(ctx, t.scrut, path)
            self.check(ctx.extend(t.lname, sty.left), t.lbody, want, path + ["inl-branch"])
            self.check(ctx.extend(t.rname, sty.right), t.rbody, want, path + ["inr-branch"])
            return want
        if isinstance(t, S.PairMatch):
            pty = self._prod_scrut(ctx, t.scrut, path)
            inner = ctx.extend(t.lname, pty.left).extend(t.rname, pty.right)
            return self.check(inner, t.body, want, path + ["pair-branch"])
        if isinstance(t, S.Unroll):
            body_ctx = ctx.extend(t.name, self._unroll_scrut(ctx, t.scrut, path))
            return self.check(body_ctx, t.body, want, path + ["roll-branch"])
        got = self.synth(ctx, t, path)
        self.expect(want, got, path)
        return want

    # -- synthesis mode -------------------------------------------------------

    def synth(self, ctx: Context, t: S.Term, path) -> Type:
        if self.lang == "source" and isinstance(t, S.TARGET_ONLY):
            self.fail(f"target-only construct {type(t).__name__} in source program", path)
        if isinstance(t, S.Var):
            if t.name not in ctx.terms:
                self.fail(f"unbound variable {t.name}", path)
            return ctx.terms[t.name]
        if isinstance(t, S.Const):
            return S.REAL
        if isinstance(t, S.PrimOp):
            if t.op not in self.ops:
                self.fail(f"unknown primitive {t.op}", path)
            arity = self.ops[t.op].arity
            if len(t.args) != arity:
                self.fail(f"{t.op} expects {arity} arguments, got {len(t.args)}", path)
            for i, a in enumerate(t.args):
                self.check(ctx, a, S.REAL, path + [f"{t.op}[{i}]"])
            return S.REAL
        if isinstance(t, S.Sign):
            self.check(ctx, t.arg, S.REAL, path + ["sign"])
            return S.Sum(S.UNIT, S.UNIT)
        if isinstance(t, S.UnitVal):
            return S.UNIT
        if isinstance(t, S.Pair):
            return S.Prod(
                self.synth(ctx, t.left, path + ["fst"]),
                self.synth(ctx, t.right, path + ["snd"]),
            )
        if isinstance(t, (S.Inl, S.Inr, S.VoidMatch)):
            if t.ann is None:
                self.fail(f"cannot infer the type of {type(t).__name__.lower()}; add an annotation", path)
            self.wf(ctx, t.ann, path)
            if isinstance(t, S.VoidMatch):
                self.check(ctx, t.arg, S.VOID, path + ["absurd"])
                return t.ann
            if not isinstance(t.ann, S.Sum):
                self.fail(f"injection annotated with non-sum {pretty_type(t.ann)}", path)
            return self.check(ctx, S.Inl(t.arg) if isinstance(t, S.Inl) else S.Inr(t.arg), t.ann, path)
        if isinstance(t, S.Lam):
            if t.ann is None:
                self.fail("cannot infer the parameter type of an unannotated function", path)
            self.wf(ctx, t.ann, path)
            cod = self.synth(ctx.extend(t.name, t.ann), t.body, path + ["fun"])
            return S.Arrow(t.ann, cod)
        if isinstance(t, S.App):
            fty = self.synth(ctx, t.fn, path + ["fn"])
            if not isinstance(fty, S.Arrow):
                self.fail(f"applying a non-function of type {pretty_type(fty)}", path)
            self.check(ctx, t.arg, fty.dom, path + ["arg"])
            return fty.cod
        if isinstance(t, S.Let):
            bty = self.synth(ctx, t.bound, path + ["let " + t.name])
            return self.synth(ctx.extend(t.name, bty), t.body, path + ["in"])
        if isinstance(t, S.Case):
            sty = self._sum_scrut(ctx, t.scrut, path)
            lctx, rctx = ctx.extend(t.lname, sty.left), ctx.extend(t.rname, sty.right)
            try:
                ty = self.synth(lctx, t.lbody, path + ["inl-branch"])
            except TypeCheckError:
                ty = self.synth(rctx, t.rbody, path + ["inr-branch"])
                self.check(lctx, t.lbody, ty, path + ["inl-branch"])
                return ty
            self.check(rctx, t.rbody, ty, path + ["inr-branch"])
            return ty
        if isinstance(t, S.PairMatch):
            pty = self._prod_scrut(ctx, t.scrut, path)
            inner = ctx.extend(t.lname, pty.left).extend(t.rname, pty.right)
            return self.synth(inner, t.body, path + ["pair-branch"])
        if isinstance(t, S.Roll):
            mu = t.ann
            if not isinstance(mu, S.Mu):
                self.fail("roll annotation must be a mu type", path)
            self.wf(ctx, mu, path)
            self.check(ctx, t.arg, S.unfold(mu), path + ["roll"])
            return mu
        if isinstance(t, S.Unroll):
            body_ctx = ctx.extend(t.name, self._unroll_scrut(ctx, t.scrut, path))
            return self.synth(body_ctx, t.body, path + ["roll-branch"])
        # target-only forms
        if isinstance(t, (S.Basis, S.ZeroTan)):
            return S.TANGENT
        if isinstance(t, S.AddTan):
            self.check(ctx, t.left, S.TANGENT, path + ["add-left"])
            self.check(ctx, t.right, S.TANGENT, path + ["add-right"])
            return S.TANGENT
        if isinstance(t, S.ScaleTan):
            self.check(ctx, t.tan, S.TANGENT, path + ["scale-tangent"])
            self.check(ctx, t.scalar, S.REAL, path + ["scale-factor"])
            return S.TANGENT
        if isinstance(t, S.ProjHandler):
            self.check(ctx, t.arg, S.TANGENT, path + [f"proj[{t.index}]"])
            return S.real_power(t.index)
        raise TypeError(f"not a term: {t!r}")

    def _sum_scrut(self, ctx, scrut, path) -> S.Sum:
        ty = self.synth(ctx, scrut, path + ["scrutinee"])
        if not isinstance(ty, S.Sum):
            self.fail(f"case on non-sum type {pretty_type(ty)}", path + ["scrutinee"])
        return ty

    def _prod_scrut(self, ctx, scrut, path) -> S.Prod:
        ty = self.synth(ctx, scrut, path + ["scrutinee"])
        if not isinstance(ty, S.Prod):
            self.fail(f"pair match on non-product type {pretty_type(ty)}", path + ["scrutinee"])
        return ty

    def _unroll_scrut(self, ctx, scrut, path) -> Type:
        ty = self.synth(ctx, scrut, path + ["scrutinee"])
        if not isinstance(ty, S.Mu):
            self.fail(f"unroll of non-recursive type {pretty_type(ty)}", path + ["scrutinee"])
        return S.unfold(ty)


def typecheck(
    ctx: Context,
    t: S.Term,
    lang: Lang = "source",
    expected: Optional[Type] = None,
    ops: Optional[OpRegistry] = None,
) -> Type:
    """Return the type of ``t``; raises :class:`TypeCheckError` otherwise.

    With ``expected`` the term is checked against it (needed for bare lambdas
    and injections); without it the type is synthesized.
    """
    c = _Checker(lang, ops or DEFAULT_OPS)
    for name, ty in ctx.terms.items():
        c.wf(ctx, ty, [f"context {name}"])
    if lang == "source" and not S.is_source_term(t):
        c.fail("target-only construct in source program", [])
    if expected is not None:
        c.wf(ctx, expected, ["expected type"])
        return c.check(ctx, t, expected, [])
    return c.synth(ctx, t, [])
