"""Checked programs: definitions closed over their predecessors, plus AD images."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

from . import syntax as S
from .admacro import ad_term, ad_type
from .ops import DEFAULT_OPS, OpRegistry
from .runtime import DEFAULT_FUEL, Converged, Outcome, Value, apply_value, evaluate
from .surface import Definition, SourceFile, annotate, parse
from .syntax import Term, Type
from .tangent import Backend
from .typecheck import Context, Lang, is_positive_type, typecheck


def check_file(f: SourceFile, lang: Lang = "source", ops: Optional[OpRegistry] = None) -> dict[str, Type]:
    """Typecheck every definition against its declared type, in order."""
    ctx = Context()
    out = {}
    for d in f.defs:
        typecheck(ctx, d.term, lang, expected=d.ty, ops=ops)
        ctx = ctx.extend(d.name, d.ty)
        out[d.name] = d.ty
    return out


def closed_term(f: SourceFile, name: str) -> Term:
    """``let d1 = t1 in ... let name = t in name`` over the defs up to ``name``."""
    idx = f.names().index(name)
    body: Term = S.Var(name)
    for d in reversed(f.defs[: idx + 1]):
        body = S.Let(d.name, annotate(d.term, d.ty), body)
    return body


@dataclass
class Program:
    """A closed source term of type ``dom -> cod``, ready to run and differentiate."""

    name: str
    term: Term
    ty: Type
    pragmas: dict = field(default_factory=dict)
    ops: OpRegistry = field(default=DEFAULT_OPS, repr=False)

    @classmethod
    def from_file(cls, f: SourceFile, name: str, ops: Optional[OpRegistry] = None) -> "Program":
        ops = ops or DEFAULT_OPS
        d: Definition = f[name]
        term = closed_term(f, name)
        typecheck(Context(), term, "source", expected=d.ty, ops=ops)
        return cls(name, term, d.ty, dict(d.pragmas), ops)

    @property
    def dom(self) -> Type:
        return self.ty.dom

    @property
    def cod(self) -> Type:
        return self.ty.cod

    @property
    def is_function(self) -> bool:
        return isinstance(self.ty, S.Arrow)

    @property
    def is_differentiable_shape(self) -> bool:
        """Input and output are data types, so derivatives are well defined."""
        return self.is_function and is_positive_type(self.dom) and is_positive_type(self.cod)

    @cached_property
    def dual_term(self) -> Term:
        return ad_term(self.term, self.ops)

    @cached_property
    def dual_ty(self) -> Type:
        return ad_type(self.ty)

    def _apply(self, term: Term, arg: Value, backend: Backend, fuel: int, trace=None) -> Outcome:
        fn = evaluate(term, backend=backend, fuel=fuel, ops=self.ops, trace=trace)
        if not isinstance(fn, Converged):
            return fn
        return apply_value(fn.value, arg, backend, fuel, self.ops, trace)

    def run(
        self,
        arg: Value,
        backend: Backend = Backend.K1,
        fuel: int = DEFAULT_FUEL,
        trace: Optional[list] = None,
    ) -> Outcome:
        """Apply the program to ``arg``; ``trace`` collects its sign decisions."""
        return self._apply(self.term, arg, backend, fuel, trace)

    def run_dual(self, arg: Value, backend: Backend, fuel: int = DEFAULT_FUEL) -> Outcome:
        return self._apply(self.dual_term, arg, backend, fuel)


def load_file(path, ops: Optional[OpRegistry] = None) -> SourceFile:
    return parse(Path(path).read_text(encoding="utf-8"), ops)
