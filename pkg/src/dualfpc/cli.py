"""``dualfpc``: check, run, differentiate and verify ``.dfpc`` programs.

Exit codes: 0 success, 1 parse error, 2 type error, 3 the program is
undefined (domain error or fuel exhausted), 4 a verification check failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

from . import syntax as S
from .admacro import ad_term, ad_type, gradient_term, real_arity
from .program import Program, check_file
from .runtime import DEFAULT_FUEL, Converged, DomainError, Outcome, evaluate, format_value
from .surface import Definition, ParseError, SourceFile, annotate, parse, parse_term, pretty, pretty_definition
from .tangent import Backend, Scalar, tan_basis, tan_proj
from .typecheck import Context, TypeCheckError, is_positive_type, typecheck
from .verify import (
    DEFAULT_EPS,
    NotPositive,
    dual_embed,
    flatten_value,
    reports_json,
    split_dual,
    verify_program,
)

EXIT_OK, EXIT_PARSE, EXIT_TYPE, EXIT_BOTTOM, EXIT_VERIFY = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    command: str
    file: str
    definition: Optional[str] = None
    mode: str = "fwd"
    fuel: int = DEFAULT_FUEL
    eps: float = DEFAULT_EPS
    tol: float = 1e-5
    trials: int = 100
    seed: int = 0
    json: bool = False

    def __post_init__(self):
        if self.fuel <= 0 or self.trials <= 0:
            raise CliError("--fuel and --trials must be positive", 64)
        if self.eps <= 0 or self.tol <= 0:
            raise CliError("--eps and --tol must be positive", 64)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _load(path: str, lang: str = "source") -> SourceFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise CliError(f"{path}: {e.strerror}", EXIT_PARSE) from e
    try:
        f = parse(text)
    except ParseError as e:
        raise CliError(f"{path}: {e}", EXIT_PARSE) from e
    try:
        check_file(f, lang)
    except TypeCheckError as e:
        raise CliError(f"{path}: type error: {e}", EXIT_TYPE) from e
    return f


def _pick(f: SourceFile, name: Optional[str]) -> Definition:
    if name:
        try:
            return f[name]
        except KeyError:
            raise CliError(f"no definition named {name!r}", EXIT_TYPE) from None
    if not f.defs:
        raise CliError("file has no definitions", EXIT_TYPE)
    return f.main or f.defs[-1]


def _program(cfg: RunConfig) -> Program:
    f = _load(cfg.file)
    return Program.from_file(f, _pick(f, cfg.definition).name)


def _value_of(text: str, ty: S.Type):
    try:
        t = parse_term(text)
    except ParseError as e:
        raise CliError(f"argument {text!r}: {e}", EXIT_PARSE) from e
    try:
        typecheck(Context(), t, "source", expected=ty)
    except TypeCheckError as e:
        raise CliError(f"argument {text!r}: type error: {e}", EXIT_TYPE) from e
    o = evaluate(annotate(t, ty))
    if not isinstance(o, Converged):
        raise CliError(f"argument {text!r} is undefined: {_outcome_text(o)}", EXIT_BOTTOM)
    return o.value


def _arg_value(args: Sequence[str], ty: S.Type):
    text = args[0] if len(args) == 1 else "(" + ", ".join(args) + ")"
    return _value_of(text, ty)


def _outcome_text(o: Outcome) -> str:
    if isinstance(o, Converged):
        return format_value(o.value)
    if isinstance(o, DomainError):
        args = ", ".join(repr(a) for a in o.args)
        return f"domain error at {o.op}({args})"
    return f"fuel exhausted after {o.steps} steps"


def _need_data(prog: Program):
    if not prog.is_differentiable_shape:
        raise CliError(f"{prog.name} must be a function between data types", EXIT_TYPE)


def _floats(xs: Sequence[str]) -> list[float]:
    try:
        return [float(x) for x in xs]
    except ValueError as e:
        raise CliError(str(e), EXIT_PARSE) from e


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_check(cfg: RunConfig, target: bool = False) -> int:
    f = _load(cfg.file, "target" if target else "source")
    for d in f.defs:
        print(f"{d.name} : {pretty(d.ty)}")
    return EXIT_OK


def transform_file(f: SourceFile, mode: str = "fwd") -> str:
    """Target program text: every definition under the AD macro.

    In ``rev`` mode each ``real^n -> real`` definition also gets a
    ``<name>_grad : real^n -> real^n`` built from basis seeds and projection.
    """
    out = []
    names = set(f.names())
    for d in f.defs:
        dd = Definition(d.name, ad_type(d.ty), ad_term(annotate(d.term, d.ty)), {})
        out.append(pretty_definition(dd))
    if mode == "rev":
        for d in f.defs:
            if not isinstance(d.ty, S.Arrow) or not isinstance(d.ty.cod, S.Real):
                continue
            n = real_arity(d.ty.dom)
            if n is None:
                continue
            gname = S.fresh_name(names, d.name + "_grad") if d.name + "_grad" in names else d.name + "_grad"
            names.add(gname)
            g = gradient_term(S.Var(d.name), n)
            out.append(pretty_definition(Definition(gname, S.Arrow(S.real_power(n), S.real_power(n)), g, {})))
    return "\n\n".join(out) + "\n"


def cmd_ad(cfg: RunConfig) -> int:
    f = _load(cfg.file)
    print(transform_file(f, cfg.mode), end="")
    return EXIT_OK


def cmd_run(cfg: RunConfig, args: Sequence[str]) -> int:
    f = _load(cfg.file)
    d = _pick(f, cfg.definition)
    prog = Program.from_file(f, d.name)
    if prog.is_function:
        if not args:
            raise CliError(f"{d.name} expects an argument of type {pretty(prog.dom)}", EXIT_TYPE)
        o = prog.run(_arg_value(args, prog.dom), fuel=cfg.fuel)
    else:
        if args:
            raise CliError(f"{d.name} is not a function", EXIT_TYPE)
        o = evaluate(prog.term, fuel=cfg.fuel)
    print(_outcome_text(o))
    return EXIT_OK if isinstance(o, Converged) else EXIT_BOTTOM


def _dual_run(prog: Program, at: Sequence[str], seeds_for, backend: Backend, fuel: int):
    _need_data(prog)
    arg = _arg_value(at, prog.dom)
    x = flatten_value(arg, prog.dom)
    primal = prog.run(arg, fuel=fuel)
    dual = prog.run_dual(dual_embed(x, seeds_for(x.size), prog.dom), backend, fuel)
    for o in (primal, dual):
        if not isinstance(o, Converged):
            print(_outcome_text(o))
            return None, x
    return split_dual(dual.value, prog.cod), x


def cmd_jvp(cfg: RunConfig, at: Sequence[str], direction: Sequence[str]) -> int:
    prog = _program(cfg)
    w = _floats(direction)

    def seeds(n):
        if len(w) != n:
            raise CliError(f"--dir needs {n} numbers, got {len(w)}", EXIT_TYPE)
        return [Scalar(v) for v in w]

    res, _ = _dual_run(prog, at, seeds, Backend.K1, cfg.fuel)
    if res is None:
        return EXIT_BOTTOM
    out, tangents = res
    tan = [t.value for t in tangents]
    if cfg.json:
        print(json.dumps({"value": list(out.vector), "tangent": tan}))
    else:
        print(f"value:   {list(out.vector)}")
        print(f"tangent: {tan}")
    return EXIT_OK


def cmd_grad(cfg: RunConfig, at: Sequence[str]) -> int:
    prog = _program(cfg)
    res, x = _dual_run(prog, at, lambda n: [tan_basis(j + 1, Backend.KINF) for j in range(n)], Backend.KINF, cfg.fuel)
    if res is None:
        return EXIT_BOTTOM
    out, tangents = res
    rows = [tan_proj(x.size, t) for t in tangents]
    if cfg.json:
        print(json.dumps({"value": list(out.vector), "jacobian": rows}))
    elif len(rows) == 1:
        print(f"value:    {out.vector[0]!r}")
        print(f"gradient: {rows[0]}")
    else:
        print(f"value:    {list(out.vector)}")
        for i, r in enumerate(rows):
            print(f"row {i}:    {r}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    f = _load(cfg.file)
    if cfg.definition:
        names = [_pick(f, cfg.definition).name]
    else:
        names = [d.name for d in f.defs if _is_data_fn(d.ty)]
    if not names:
        raise CliError("no definition between data types to verify", EXIT_TYPE)
    results = []
    for name in names:
        prog = Program.from_file(f, name)
        try:
            results.append(verify_program(prog, cfg.trials, cfg.seed, cfg.eps, cfg.tol, cfg.fuel))
        except NotPositive as e:
            raise CliError(str(e), EXIT_TYPE) from e
    if cfg.json:
        print(reports_json(results))
    else:
        for res in results:
            s = res.summary()
            errs = [r.max_rel_err for r in res.reports if r.verdict == "pass"]
            worst = max(errs, default=0.0)
            print(
                f"{s['program']}: {s['verdict']}  trials={s['trials']} pass={s['pass']} fail={s['fail']} "
                f"kink={s['kink']} bottom={s['bottom']} inconclusive={s['inconclusive']} max_rel_err={worst:.3e}"
            )
            for r in res.reports:
                if r.verdict == "fail":
                    print(f"  FAIL {r.mode} at {r.point.to_json()['vector']}: {r.detail}")
                elif r.verdict == "kink":
                    print(f"  kink {r.mode} at {r.point.to_json()['vector']}")
    return EXIT_OK if all(r.ok for r in results) else EXIT_VERIFY


def _is_data_fn(ty: S.Type) -> bool:
    return isinstance(ty, S.Arrow) and is_positive_type(ty.dom) and is_positive_type(ty.cod)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dualfpc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, fuel=True):
        sp.add_argument("file")
        sp.add_argument("--def", dest="definition", help="definition to use (default: main, else the last)")
        if fuel:
            sp.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
        sp.add_argument("--json", action="store_true")

    sp = sub.add_parser("check", help="typecheck every definition")
    common(sp, fuel=False)
    sp.add_argument("--target", action="store_true", help="check as a target-language program")

    sp = sub.add_parser("run", help="evaluate a definition on an argument")
    common(sp)
    sp.add_argument("args", nargs="*", help="argument term(s); several are tupled")

    sp = sub.add_parser("ad", help="print the AD-transformed program")
    common(sp, fuel=False)
    sp.add_argument("--mode", choices=("fwd", "rev"), default="fwd")

    sp = sub.add_parser("jvp", help="forward-mode derivative along a direction")
    common(sp)
    sp.add_argument("--at", nargs="+", required=True)
    sp.add_argument("--dir", nargs="+", required=True)

    sp = sub.add_parser("grad", help="reverse-mode gradient / Jacobian rows")
    common(sp)
    sp.add_argument("--at", nargs="+", required=True)

    sp = sub.add_parser("verify", help="check derivatives against finite differences")
    common(sp)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--eps", type=float, default=DEFAULT_EPS)
    sp.add_argument("--tol", type=float, default=1e-5)
    sp.add_argument("--seed", type=int, default=None)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    seed = getattr(ns, "seed", None)
    if seed is None:
        seed = int(os.environ.get("DUALFPC_SEED", "0"))
    try:
        cfg = RunConfig(
            command=ns.command,
            file=ns.file,
            definition=ns.definition,
            mode=getattr(ns, "mode", "fwd"),
            fuel=getattr(ns, "fuel", DEFAULT_FUEL),
            eps=getattr(ns, "eps", DEFAULT_EPS),
            tol=getattr(ns, "tol", 1e-5),
            trials=getattr(ns, "trials", 100),
            seed=seed,
            json=ns.json,
        )
        if ns.command == "check":
            return cmd_check(cfg, ns.target)
        if ns.command == "run":
            return cmd_run(cfg, ns.args)
        if ns.command == "ad":
            return cmd_ad(cfg)
        if ns.command == "jvp":
            return cmd_jvp(cfg, ns.at, ns.dir)
        if ns.command == "grad":
            return cmd_grad(cfg, ns.at)
        return cmd_verify(cfg)
    except CliError as e:
        print(f"dualfpc: {e}", file=sys.stderr)
        return e.code
