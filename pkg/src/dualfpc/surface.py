"""Concrete syntax for ``.dfpc`` programs.

A file is a sequence of ``def name : type = term ;;`` definitions.  Comments
start with ``--``; a comment of the form ``-- @key value...`` directly above a
definition is kept as a pragma on it (the verification harness reads
``@range`` and ``@depth``).

Sugar handled here and removed by :func:`desugar`:

* ``if t then a else b``   ->  ``case sign t of inl _ -> a | inr _ -> b``
  (the ``then`` branch runs when ``t`` is negative)
* ``a < b``                ->  ``sign (a - b)``; ``inl`` means the comparison
  holds.  Chains ``a < b < c`` are conjunctions.
* ``fix (f : A -> B) t``   ->  a self-applied rolled value of type
  ``mu r. r -> (A -> B)``
* ``iterate t from (x : A) = v : B`` -> loop ``t : A + B`` from ``v`` until
  it returns ``inr``
* ``unroll t``             ->  ``case t of roll x -> x``
* ``-t``                   ->  ``neg(t)`` (``-`` before a literal folds into it)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from . import syntax as S
from .ops import DEFAULT_OPS, INFIX, OpRegistry
from .syntax import Term, Type

KEYWORDS = frozenset(
    """def fun let in case of inl inr roll unroll sign if then else fix iterate
    from mu real tangent unit void absurd basis proj""".split()
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


# ---------------------------------------------------------------------------
# Surface-only nodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class If(Term):
    cond: Term
    then: Term
    orelse: Term


@dataclass(frozen=True)
class Less(Term):
    operands: tuple[Term, ...]


@dataclass(frozen=True)
class Fix(Term):
    name: str
    ty: Type
    body: Term


@dataclass(frozen=True)
class Iterate(Term):
    body: Term
    name: str
    state_ty: Type
    init: Term
    out_ty: Type


@dataclass(frozen=True)
class UnrollSugar(Term):
    arg: Term


SurfaceTerm = Term
_SUGAR = (If, Less, Fix, Iterate, UnrollSugar)


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>--[^\n]*)
  | (?P<zerot>0t(?![A-Za-z0-9_']))
  | (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>;;|->|<\+>|<\*>|[()\[\],|:=+\-*/<.])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Tok:
    kind: str  # num ident kw sym zerot eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> tuple[list[Tok], list[tuple[int, str]]]:
    """Tokens plus ``(line, pragma text)`` for every ``-- @...`` comment."""
    toks: list[Tok] = []
    pragmas: list[tuple[int, str]] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "comment":
            body = s[2:].strip()
            if body.startswith("@"):
                pragmas.append((line, body[1:]))
        elif kind != "ws":
            if kind == "ident" and s in KEYWORDS:
                kind = "kw"
            toks.append(Tok(kind, s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rfind("\n") + 1
        pos = m.end()
    col = pos - line_start + 1
    toks.append(Tok("eof", "", line, col))
    return toks, pragmas


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_PREFIX_KW = ("inl", "inr", "sign", "roll", "absurd", "proj", "unroll")


@dataclass
class Definition:
    name: str
    ty: Type
    term: Term
    pragmas: dict[str, list[str]] = field(default_factory=dict)


@dataclass
class SourceFile:
    defs: list[Definition]

    def __getitem__(self, name: str) -> Definition:
        for d in self.defs:
            if d.name == name:
                return d
        raise KeyError(name)

    def names(self) -> list[str]:
        return [d.name for d in self.defs]

    @property
    def main(self) -> Optional[Definition]:
        return next((d for d in self.defs if d.name == "main"), None)


class _Parser:
    def __init__(self, text: str, ops: OpRegistry):
        self.toks, self.pragmas = tokenize(text)
        self.i = 0
        self.ops = ops

    # -- helpers --

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Tok] = None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("kw", "sym")

    def eat(self, text: str) -> Tok:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self, what="identifier", allow_wild=False) -> str:
        t = self.tok
        if t.kind == "kw":
            self.error(f"reserved word {t.text!r} cannot be used as {what}")
        if t.kind != "ident":
            self.error(f"expected {what}, found {t.text or 'end of input'!r}")
        if t.text == "_" and not allow_wild:
            self.error(f"wildcard cannot be used as {what}")
        if t.text in self.ops:
            self.error(f"primitive {t.text!r} is reserved and cannot be used as {what}")
        self.i += 1
        return t.text

    def binder(self) -> str:
        return self.ident("a binder", allow_wild=True)

    def integer(self) -> int:
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            self.error("expected a positive integer index")
        self.i += 1
        n = int(t.text)
        if n < 1:
            self.error("index must be >= 1", t)
        return n

    # -- files --

    def file(self) -> SourceFile:
        defs: list[Definition] = []
        seen: set[str] = set()
        prev_line = 0
        while self.tok.kind != "eof":
            start = self.eat("def")
            name_tok = self.tok
            name = self.ident("a definition name")
            if name in seen:
                self.error(f"duplicate definition {name!r}", name_tok)
            seen.add(name)
            self.eat(":")
            ty = self.type_()
            self.eat("=")
            body = self.expr()
            end = self.eat(";;")
            pragmas: dict[str, list[str]] = {}
            for line, text in self.pragmas:
                if prev_line < line < start.line:
                    key, *vals = text.split()
                    pragmas[key] = vals
            prev_line = end.line
            defs.append(Definition(name, ty, desugar(body), pragmas))
        return SourceFile(defs)

    # -- types --

    def type_(self) -> Type:
        left = self.sum_type()
        if self.at("->"):
            self.i += 1
            return S.Arrow(left, self.type_())
        return left

    def sum_type(self) -> Type:
        left = self.prod_type()
        if self.at("+"):
            self.i += 1
            return S.Sum(left, self.sum_type())
        return left

    def prod_type(self) -> Type:
        # left-nested, so real * real * real is real^3
        left = self.atom_type()
        while self.at("*"):
            self.i += 1
            left = S.Prod(left, self.atom_type())
        return left

    def atom_type(self) -> Type:
        t = self.tok
        if t.kind == "kw":
            simple = {"real": S.REAL, "tangent": S.TANGENT, "unit": S.UNIT, "void": S.VOID}
            if t.text in simple:
                self.i += 1
                return simple[t.text]
            if t.text == "mu":
                self.i += 1
                var = self.ident("a type variable")
                self.eat(".")
                return S.Mu(var, self.type_())
        if t.kind == "ident" and t.text != "_":
            self.i += 1
            return S.TyVar(t.text)
        if self.at("("):
            self.i += 1
            ty = self.type_()
            self.eat(")")
            return ty
        self.error(f"expected a type, found {t.text or 'end of input'!r}")

    def bracket_type(self) -> Type:
        self.eat("[")
        ty = self.type_()
        self.eat("]")
        return ty

    def typed_binder(self) -> tuple[str, Type]:
        self.eat("(")
        name = self.ident()
        self.eat(":")
        ty = self.type_()
        self.eat(")")
        return name, ty

    # -- terms --

    def expr(self) -> Term:
        t = self.tok
        if t.kind == "kw":
            if t.text == "fun":
                self.i += 1
                if self.at("("):
                    name, ann = self.typed_binder()
                else:
                    name, ann = self.binder(), None
                self.eat("->")
                return S.Lam(name, self.expr(), ann)
            if t.text == "let":
                self.i += 1
                name = self.binder()
                self.eat("=")
                bound = self.expr()
                self.eat("in")
                return S.Let(name, bound, self.expr())
            if t.text == "case":
                return self.case()
            if t.text == "if":
                self.i += 1
                c = self.expr()
                self.eat("then")
                a = self.expr()
                self.eat("else")
                return If(c, a, self.expr())
            if t.text == "fix":
                self.i += 1
                name, ty = self.typed_binder()
                return Fix(name, ty, self.expr())
            if t.text == "iterate":
                self.i += 1
                body = self.expr()
                self.eat("from")
                name, sty = self.typed_binder()
                self.eat("=")
                init = self.expr()
                self.eat(":")
                return Iterate(body, name, sty, init, self.type_())
        return self.comparison()

    def case(self) -> Term:
        self.eat("case")
        scrut = self.expr()
        self.eat("of")
        if self.at("inl"):
            self.i += 1
            lx = self.binder()
            self.eat("->")
            lb = self.expr()
            self.eat("|")
            self.eat("inr")
            rx = self.binder()
            self.eat("->")
            return S.Case(scrut, lx, lb, rx, self.expr())
        if self.at("("):
            self.i += 1
            a = self.binder()
            self.eat(",")
            b = self.binder()
            self.eat(")")
            self.eat("->")
            return S.PairMatch(scrut, a, b, self.expr())
        if self.at("roll"):
            self.i += 1
            x = self.binder()
            self.eat("->")
            return S.Unroll(scrut, x, self.expr())
        self.error("expected 'inl', '(' or 'roll' pattern after 'of'")

    def comparison(self) -> Term:
        first = self.additive()
        operands = [first]
        while self.at("<"):
            self.i += 1
            operands.append(self.additive())
        return first if len(operands) == 1 else Less(tuple(operands))

    def additive(self) -> Term:
        left = self.multiplicative()
        while True:
            if self.at("+") or self.at("-"):
                op = self.tok.text
                self.i += 1
                left = S.PrimOp(op, (left, self.multiplicative()))
            elif self.at("<+>"):
                self.i += 1
                left = S.AddTan(left, self.multiplicative())
            else:
                return left

    def multiplicative(self) -> Term:
        left = self.unary()
        while True:
            if self.at("*") or self.at("/"):
                op = self.tok.text
                self.i += 1
                left = S.PrimOp(op, (left, self.unary()))
            elif self.at("<*>"):
                self.i += 1
                left = S.ScaleTan(left, self.unary())
            else:
                return left

    def unary(self) -> Term:
        if self.at("-"):
            self.i += 1
            if self.tok.kind == "num":
                v = float(self.tok.text)
                self.i += 1
                return S.Const(-v)
            return S.PrimOp("neg", (self.unary(),))
        return self.application()

    def application(self) -> Term:
        fn = self.prefixed()
        while self.starts_prefixed():
            fn = S.App(fn, self.prefixed())
        return fn

    def starts_prefixed(self) -> bool:
        t = self.tok
        if t.kind in ("num", "zerot"):
            return True
        if t.kind == "ident":
            return t.text != "_"
        if t.kind == "kw":
            return t.text in _PREFIX_KW or t.text == "basis"
        return self.at("(")

    def prefixed(self) -> Term:
        t = self.tok
        if t.kind == "kw" and t.text in _PREFIX_KW:
            self.i += 1
            if t.text in ("inl", "inr", "absurd"):
                ann = self.bracket_type() if self.at("[") else None
                arg = self.prefixed()
                cls = {"inl": S.Inl, "inr": S.Inr, "absurd": S.VoidMatch}[t.text]
                return cls(arg, ann)
            if t.text == "roll":
                ann = self.bracket_type()
                if not isinstance(ann, S.Mu):
                    self.error("roll annotation must be a mu type", t)
                return S.Roll(self.prefixed(), ann)
            if t.text == "proj":
                self.eat("[")
                i = self.integer()
                self.eat("]")
                return S.ProjHandler(i, self.prefixed())
            if t.text == "sign":
                return S.Sign(self.prefixed())
            return UnrollSugar(self.prefixed())
        return self.atom()

    def atom(self) -> Term:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return S.Const(float(t.text))
        if t.kind == "zerot":
            self.i += 1
            return S.ZeroTan()
        if t.kind == "kw" and t.text == "basis":
            self.i += 1
            self.eat("[")
            i = self.integer()
            self.eat("]")
            return S.Basis(i)
        if t.kind == "ident" and t.text in self.ops:
            self.i += 1
            self.eat("(")
            args: list[Term] = []
            if not self.at(")"):
                args.append(self.expr())
                while self.at(","):
                    self.i += 1
                    args.append(self.expr())
            self.eat(")")
            arity = self.ops[t.text].arity
            if len(args) != arity:
                self.error(f"{t.text} expects {arity} arguments, got {len(args)}", t)
            return S.PrimOp(t.text, tuple(args))
        if t.kind == "ident":
            return S.Var(self.ident("a variable"))
        if self.at("("):
            self.i += 1
            if self.at(")"):
                self.i += 1
                return S.UnitVal()
            first = self.expr()
            # (a, b, c) is ((a, b), c), matching real * real * real
            while self.at(","):
                self.i += 1
                first = S.Pair(first, self.expr())
            self.eat(")")
            return first
        if t.kind == "kw":
            self.error(f"reserved word {t.text!r} cannot start an expression here")
        self.error(f"unexpected {t.text or 'end of input'!r}")

    def finish(self):
        if self.tok.kind != "eof":
            self.error(f"unexpected trailing {self.tok.text!r}")


def parse(text: str, ops: Optional[OpRegistry] = None) -> SourceFile:
    """Parse a whole program file; sugar is elaborated away."""
    p = _Parser(text, ops or DEFAULT_OPS)
    return p.file()


def parse_surface_term(text: str, ops: Optional[OpRegistry] = None) -> Term:
    """Parse a single term, keeping sugar nodes."""
    p = _Parser(text, ops or DEFAULT_OPS)
    t = p.expr()
    p.finish()
    return t


def parse_term(text: str, ops: Optional[OpRegistry] = None) -> Term:
    return desugar(parse_surface_term(text, ops))


def parse_type(text: str) -> Type:
    p = _Parser(text, DEFAULT_OPS)
    ty = p.type_()
    p.finish()
    return ty


# ---------------------------------------------------------------------------
# Desugaring
# ---------------------------------------------------------------------------


def _rebuild(t: Term, f) -> Term:
    """Apply ``f`` to each immediate subterm of a core node."""
    if isinstance(t, (S.Var, S.Const, S.UnitVal, S.Basis, S.ZeroTan)):
        return t
    if isinstance(t, S.Let):
        return S.Let(t.name, f(t.bound), f(t.body))
    if isinstance(t, S.PrimOp):
        return S.PrimOp(t.op, tuple(f(a) for a in t.args))
    if isinstance(t, S.Sign):
        return S.Sign(f(t.arg))
    if isinstance(t, S.Inl):
        return S.Inl(f(t.arg), t.ann)
    if isinstance(t, S.Inr):
        return S.Inr(f(t.arg), t.ann)
    if isinstance(t, S.Case):
        return S.Case(f(t.scrut), t.lname, f(t.lbody), t.rname, f(t.rbody))
    if isinstance(t, S.Pair):
        return S.Pair(f(t.left), f(t.right))
    if isinstance(t, S.PairMatch):
        return S.PairMatch(f(t.scrut), t.lname, t.rname, f(t.body))
    if isinstance(t, S.Lam):
        return S.Lam(t.name, f(t.body), t.ann)
    if isinstance(t, S.App):
        return S.App(f(t.fn), f(t.arg))
    if isinstance(t, S.Roll):
        return S.Roll(f(t.arg), t.ann)
    if isinstance(t, S.Unroll):
        return S.Unroll(f(t.scrut), t.name, f(t.body))
    if isinstance(t, S.VoidMatch):
        return S.VoidMatch(f(t.arg), t.ann)
    if isinstance(t, S.AddTan):
        return S.AddTan(f(t.left), f(t.right))
    if isinstance(t, S.ScaleTan):
        return S.ScaleTan(f(t.tan), f(t.scalar))
    if isinstance(t, S.ProjHandler):
        return S.ProjHandler(t.index, f(t.arg))
    raise TypeError(f"not a term: {t!r}")


BOOL = S.Sum(S.UNIT, S.UNIT)


def fix_term(name: str, ty: S.Arrow, body: Term) -> Term:
    """CBV fixpoint of ``fun name -> body`` at function type ``ty``.

    Uses ``r = mu a. a -> ty``: a rolled self-applicable functional ``g`` is
    unrolled and applied to itself.  The recursive reference is eta-expanded so
    that binding it never loops.
    """
    if not isinstance(ty, S.Arrow):
        raise TypeError("fix needs a function type")
    avoid = S.all_names(body) | {name}
    g = S.fresh_name(avoid, "g")
    avoid.add(g)
    s = S.fresh_name(avoid, "s")
    avoid.add(s)
    u = S.fresh_name(avoid, "u")
    avoid.add(u)
    y = S.fresh_name(avoid, "y")
    a = S.fresh_name(S.free_tyvars(ty), "r")
    rec = S.Mu(a, S.Arrow(S.TyVar(a), ty))
    self_apply = lambda v: S.Unroll(S.Var(v), u, S.App(S.Var(u), S.Var(v)))  # noqa: E731
    step = S.Lam(
        s,
        S.Let(name, S.Lam(y, S.App(self_apply(s), S.Var(y)), ty.dom), body),
        rec,
    )
    return S.Let(g, S.Roll(step, rec), self_apply(g))


def annotate(t: Term, ty: Type) -> Term:
    """Push an expected type into ``t`` as annotations so that it synthesizes."""
    if isinstance(t, S.Lam) and isinstance(ty, S.Arrow):
        return S.Lam(t.name, annotate(t.body, ty.cod), t.ann or ty.dom)
    if isinstance(t, S.Inl) and isinstance(ty, S.Sum):
        return S.Inl(annotate(t.arg, ty.left), t.ann or ty)
    if isinstance(t, S.Inr) and isinstance(ty, S.Sum):
        return S.Inr(annotate(t.arg, ty.right), t.ann or ty)
    if isinstance(t, S.VoidMatch):
        return S.VoidMatch(t.arg, t.ann or ty)
    if isinstance(t, S.Pair) and isinstance(ty, S.Prod):
        return S.Pair(annotate(t.left, ty.left), annotate(t.right, ty.right))
    if isinstance(t, S.Let):
        return S.Let(t.name, t.bound, annotate(t.body, ty))
    if isinstance(t, S.Case):
        return S.Case(t.scrut, t.lname, annotate(t.lbody, ty), t.rname, annotate(t.rbody, ty))
    if isinstance(t, S.PairMatch):
        return S.PairMatch(t.scrut, t.lname, t.rname, annotate(t.body, ty))
    if isinstance(t, S.Unroll):
        return S.Unroll(t.scrut, t.name, annotate(t.body, ty))
    return t


def iterate_term(body: Term, name: str, state_ty: Type, init: Term, out_ty: Type) -> Term:
    """Loop ``fun name -> body : state -> state + out`` from ``init``."""
    avoid = S.all_names(body) | S.all_names(init) | {name}
    step = S.fresh_name(avoid, "step")
    avoid.add(step)
    loop = S.fresh_name(avoid, "loop")
    avoid.add(loop)
    st = S.fresh_name(avoid, "st")
    avoid.add(st)
    k = S.fresh_name(avoid, "k")
    avoid.add(k)
    r = S.fresh_name(avoid, "res")
    loop_body = S.Lam(
        st,
        S.Case(S.App(S.Var(step), S.Var(st)), k, S.App(S.Var(loop), S.Var(k)), r, S.Var(r)),
    )
    run = fix_term(loop, S.Arrow(state_ty, out_ty), loop_body)
    step_body = annotate(body, S.Sum(state_ty, out_ty))
    return S.Let(step, S.Lam(name, step_body, state_ty), S.App(run, init))


def _less(operands: tuple[Term, ...]) -> Term:
    a, b = operands[0], operands[1]
    if len(operands) == 2:
        return S.Sign(S.PrimOp("-", (a, b)))
    # a < b < ...: bind b once, then conjoin
    if isinstance(b, (S.Var, S.Const)):
        shared, wrap = b, (lambda t: t)
    else:
        avoid = set()
        for o in operands:
            avoid |= S.all_names(o)
        x = S.fresh_name(avoid, "cmp")
        shared, wrap = S.Var(x), (lambda t, x=x, b=b: S.Let(x, b, t))
    rest = _less((shared,) + operands[2:])
    return wrap(S.Case(S.Sign(S.PrimOp("-", (a, shared))), "_", rest, "_", S.Inr(S.UnitVal(), BOOL)))


def desugar(t: Term) -> Term:
    """Eliminate every surface-only node, innermost first."""
    if isinstance(t, If):
        return S.Case(S.Sign(desugar(t.cond)), "_", desugar(t.then), "_", desugar(t.orelse))
    if isinstance(t, Less):
        return _less(tuple(desugar(o) for o in t.operands))
    if isinstance(t, Fix):
        return fix_term(t.name, t.ty, desugar(t.body))
    if isinstance(t, Iterate):
        return iterate_term(desugar(t.body), t.name, t.state_ty, desugar(t.init), t.out_ty)
    if isinstance(t, UnrollSugar):
        inner = desugar(t.arg)
        x = S.fresh_name(S.all_names(inner), "x")
        return S.Unroll(inner, x, S.Var(x))
    return _rebuild(t, desugar)


# ---------------------------------------------------------------------------
# Pretty-printing
# ---------------------------------------------------------------------------

_EXPR, _ADD, _MUL, _UNARY, _APP, _PREFIX, _ATOM = range(7)


def _ty(ty: Type, top: bool) -> str:
    if isinstance(ty, S.Real):
        return "real"
    if isinstance(ty, S.Tangent):
        return "tangent"
    if isinstance(ty, S.Unit):
        return "unit"
    if isinstance(ty, S.Void):
        return "void"
    if isinstance(ty, S.TyVar):
        return ty.name
    if isinstance(ty, S.Mu):
        s = f"mu {ty.var}. {_ty(ty.body, True)}"
    elif isinstance(ty, S.Sum):
        s = f"{_ty(ty.left, False)} + {_ty(ty.right, False)}"
    elif isinstance(ty, S.Prod):
        s = f"{_ty(ty.left, False)} * {_ty(ty.right, False)}"
    elif isinstance(ty, S.Arrow):
        s = f"{_ty(ty.dom, False)} -> {_ty(ty.cod, False)}"
    else:
        raise TypeError(f"not a type: {ty!r}")
    return s if top else f"({s})"


def _const(v: float) -> str:
    s = repr(float(v))
    if s in ("inf", "-inf", "nan"):
        raise ValueError(f"non-finite constant {v}")
    return s


def _tm(t: Term, prec: int) -> str:
    level, s = _tm_level(t)
    return s if level >= prec else f"({s})"


def _binder(name: str, ann: Optional[Type]) -> str:
    return name if ann is None else f"({name} : {_ty(ann, True)})"


def _ann(ann: Optional[Type]) -> str:
    return "" if ann is None else f"[{_ty(ann, True)}]"


def _tm_level(t: Term) -> tuple[int, str]:
    if isinstance(t, S.Var):
        return _ATOM, t.name
    if isinstance(t, S.Const):
        s = _const(t.value)
        return (_UNARY if s.startswith("-") else _ATOM), s
    if isinstance(t, S.UnitVal):
        return _ATOM, "()"
    if isinstance(t, S.ZeroTan):
        return _ATOM, "0t"
    if isinstance(t, S.Basis):
        return _ATOM, f"basis[{t.index}]"
    if isinstance(t, S.Pair):
        return _ATOM, f"({_tm(t.left, _EXPR)}, {_tm(t.right, _EXPR)})"
    if isinstance(t, S.PrimOp):
        if t.op in INFIX and len(t.args) == 2:
            level = _ADD if t.op in "+-" else _MUL
            return level, f"{_tm(t.args[0], level)} {t.op} {_tm(t.args[1], level + 1)}"
        return _ATOM, f"{t.op}({', '.join(_tm(a, _EXPR) for a in t.args)})"
    if isinstance(t, S.AddTan):
        return _ADD, f"{_tm(t.left, _ADD)} <+> {_tm(t.right, _MUL)}"
    if isinstance(t, S.ScaleTan):
        return _MUL, f"{_tm(t.tan, _MUL)} <*> {_tm(t.scalar, _UNARY)}"
    if isinstance(t, S.App):
        return _APP, f"{_tm(t.fn, _APP)} {_tm(t.arg, _PREFIX)}"
    if isinstance(t, S.Sign):
        return _PREFIX, f"sign {_tm(t.arg, _PREFIX)}"
    if isinstance(t, S.Inl):
        return _PREFIX, f"inl{_ann(t.ann)} {_tm(t.arg, _PREFIX)}"
    if isinstance(t, S.Inr):
        return _PREFIX, f"inr{_ann(t.ann)} {_tm(t.arg, _PREFIX)}"
    if isinstance(t, S.VoidMatch):
        return _PREFIX, f"absurd{_ann(t.ann)} {_tm(t.arg, _PREFIX)}"
    if isinstance(t, S.Roll):
        return _PREFIX, f"roll{_ann(t.ann)} {_tm(t.arg, _PREFIX)}"
    if isinstance(t, S.ProjHandler):
        return _PREFIX, f"proj[{t.index}] {_tm(t.arg, _PREFIX)}"
    if isinstance(t, S.Lam):
        return _EXPR, f"fun {_binder(t.name, t.ann)} -> {_tm(t.body, _EXPR)}"
    if isinstance(t, S.Let):
        return _EXPR, f"let {t.name} = {_tm(t.bound, _EXPR)} in {_tm(t.body, _EXPR)}"
    if isinstance(t, S.Case):
        return _EXPR, (
            f"case {_tm(t.scrut, _EXPR)} of inl {t.lname} -> {_tm(t.lbody, _EXPR)}"
            f" | inr {t.rname} -> {_tm(t.rbody, _EXPR)}"
        )
    if isinstance(t, S.PairMatch):
        return _EXPR, f"case {_tm(t.scrut, _EXPR)} of ({t.lname}, {t.rname}) -> {_tm(t.body, _EXPR)}"
    if isinstance(t, S.Unroll):
        return _EXPR, f"case {_tm(t.scrut, _EXPR)} of roll {t.name} -> {_tm(t.body, _EXPR)}"
    if isinstance(t, _SUGAR):
        raise TypeError("desugar before printing")
    raise TypeError(f"not a term: {t!r}")


def pretty(x: Union[Term, Type]) -> str:
    """Render a core term or type as parseable text."""
    if isinstance(x, Type):
        return _ty(x, True)
    return _tm(x, _EXPR)


def pretty_definition(d: Definition) -> str:
    return f"def {d.name} : {pretty(d.ty)} =\n  {pretty(d.term)}\n;;"


def pretty_file(f: SourceFile) -> str:
    return "\n\n".join(pretty_definition(d) for d in f.defs) + "\n"


def iter_defs(f: SourceFile) -> Iterator[Definition]:
    return iter(f.defs)
