"""Numerical checks that AD-transformed programs compute derivatives.

Values of data types are flattened into a shape (which summand of the
coproduct they live in) and a vector of reals.  Derivatives are then ordinary
Jacobians on each shape, which we compare against central finite differences
and between the two tangent backends.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import syntax as S
from .admacro import ad_term
from .ops import DEFAULT_OPS, OpRegistry, OutOfDomain
from .program import Program
from .runtime import (
    DEFAULT_FUEL,
    Converged,
    FuelExhausted,
    InlV,
    InrV,
    Outcome,
    PairV,
    RealV,
    RollV,
    TanV,
    UnitV,
    UNIT_V,
    Value,
    evaluate,
    format_value,
)
from .tangent import Backend, Scalar, TangentValue, tan_basis, tan_proj, tan_zero
from .typecheck import is_positive_type
from .syntax import Type

DEFAULT_EPS = 1e-6


def rel_err(got: float, want: float) -> float:
    """``|got - want| / max(1, |want|)``: relative for large values, absolute near 0."""
    return abs(got - want) / max(1.0, abs(want))


# ---------------------------------------------------------------------------
# Interleaving
# ---------------------------------------------------------------------------


def interleave(xs: Sequence[float], ws: Sequence[TangentValue]) -> list[tuple[float, TangentValue]]:
    if len(xs) != len(ws):
        raise ValueError(f"interleave: {len(xs)} points but {len(ws)} tangents")
    return list(zip(xs, ws))


def deinterleave(duals: Sequence[tuple[float, TangentValue]]) -> tuple[list[float], list[TangentValue]]:
    return [x for x, _ in duals], [w for _, w in duals]


# ---------------------------------------------------------------------------
# Flattening data values
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True, repr=False)
class Hole(Value):
    """Placeholder for a real slot in a shape skeleton."""

    def __repr__(self) -> str:
        return "_"


HOLE = Hole()


class NotPositive(TypeError):
    pass


@dataclass(frozen=True)
class FlatValue:
    shape: Value
    vector: tuple[float, ...]

    @property
    def size(self) -> int:
        return len(self.vector)

    def to_json(self) -> dict:
        return {"shape": format_value(self.shape), "vector": list(self.vector)}


_UNFOLD_CACHE: dict[S.Mu, Type] = {}


def _unfold(mu: S.Mu) -> Type:
    ty = _UNFOLD_CACHE.get(mu)
    if ty is None:
        ty = _UNFOLD_CACHE[mu] = S.unfold(mu)
    return ty


def _walk(v: Value, ty: Type, leaf: Callable[[Value], Value]) -> Value:
    """Rebuild ``v`` following ``ty``, replacing each real slot by ``leaf(slot)``."""
    while isinstance(ty, S.Mu):
        if not isinstance(v, RollV):
            raise TypeError(f"expected a rolled value, found {format_value(v)}")
        return RollV(_walk(v.value, _unfold(ty), leaf))
    if isinstance(ty, S.Real):
        return leaf(v)
    if isinstance(ty, S.Unit):
        if not isinstance(v, UnitV):
            raise TypeError(f"expected (), found {format_value(v)}")
        return v
    if isinstance(ty, S.Sum):
        if isinstance(v, InlV):
            return InlV(_walk(v.value, ty.left, leaf))
        if isinstance(v, InrV):
            return InrV(_walk(v.value, ty.right, leaf))
        raise TypeError(f"expected an injection, found {format_value(v)}")
    if isinstance(ty, S.Prod):
        if not isinstance(v, PairV):
            raise TypeError(f"expected a pair, found {format_value(v)}")
        return PairV(_walk(v.left, ty.left, leaf), _walk(v.right, ty.right, leaf))
    if isinstance(ty, S.Void):
        raise TypeError("no value has type void")
    raise NotPositive(f"not a data type: {ty!r}")


def flatten_value(v: Value, ty: Type) -> FlatValue:
    """Split a data value into its shape and its reals, left to right."""
    if not is_positive_type(ty):
        raise NotPositive("flatten_value needs a data type (no functions, no tangents)")
    out: list[float] = []

    def leaf(x: Value) -> Value:
        if not isinstance(x, RealV):
            raise TypeError(f"expected a real, found {format_value(x)}")
        out.append(x.value)
        return HOLE

    return FlatValue(_walk(v, ty, leaf), tuple(out))


def _fill(shape: Value, slot: Callable[[], Value]) -> Value:
    if isinstance(shape, Hole):
        return slot()
    if isinstance(shape, InlV):
        return InlV(_fill(shape.value, slot))
    if isinstance(shape, InrV):
        return InrV(_fill(shape.value, slot))
    if isinstance(shape, RollV):
        return RollV(_fill(shape.value, slot))
    if isinstance(shape, PairV):
        left = _fill(shape.left, slot)
        return PairV(left, _fill(shape.right, slot))
    if isinstance(shape, UnitV):
        return shape
    raise TypeError(f"not a shape: {shape!r}")


def hole_count(shape: Value) -> int:
    n = 0
    stack = [shape]
    while stack:
        s = stack.pop()
        if isinstance(s, Hole):
            n += 1
        elif isinstance(s, (InlV, InrV, RollV)):
            stack.append(s.value)
        elif isinstance(s, PairV):
            stack.extend((s.left, s.right))
    return n


def _filler(items: Sequence, make: Callable) -> Callable[[], Value]:
    it = iter(items)
    return lambda: make(next(it))


def unflatten_value(f: FlatValue) -> Value:
    n = hole_count(f.shape)
    if n != len(f.vector):
        raise ValueError(f"shape has {n} real slots but vector has {len(f.vector)} entries")
    return _fill(f.shape, _filler(f.vector, RealV))


def dual_embed(f: FlatValue, seeds: Sequence[TangentValue], ty: Optional[Type] = None) -> Value:
    """Pair the j-th real slot with ``seeds[j]``; result has type ``ad_type(ty)``."""
    if ty is not None and not is_positive_type(ty):
        raise NotPositive("dual_embed needs a data type")
    if len(seeds) != len(f.vector):
        raise ValueError(f"{len(f.vector)} real slots but {len(seeds)} seeds")
    return _fill(f.shape, _filler(list(zip(f.vector, seeds)), lambda p: PairV(RealV(p[0]), TanV(p[1]))))


def split_dual(v: Value, ty: Type) -> tuple[FlatValue, list[TangentValue]]:
    """Inverse of :func:`dual_embed`: primal flat value plus slot tangents."""
    xs: list[float] = []
    ws: list[TangentValue] = []

    def leaf(x: Value) -> Value:
        if not (isinstance(x, PairV) and isinstance(x.left, RealV) and isinstance(x.right, TanV)):
            raise TypeError(f"expected a dual number, found {format_value(x)}")
        xs.append(x.left.value)
        ws.append(x.right.tangent)
        return HOLE

    return FlatValue(_walk(v, ty, leaf), tuple(xs)), ws


def value_term(v: Value, ty: Type) -> S.Term:
    """Read a data value back as a closed, fully annotated term of type ``ty``."""
    if isinstance(ty, S.Mu):
        return S.Roll(value_term(v.value, _unfold(ty)), ty)
    if isinstance(ty, S.Real):
        return S.Const(v.value)
    if isinstance(ty, S.Unit):
        return S.UnitVal()
    if isinstance(ty, S.Sum):
        if isinstance(v, InlV):
            return S.Inl(value_term(v.value, ty.left), ty)
        return S.Inr(value_term(v.value, ty.right), ty)
    if isinstance(ty, S.Prod):
        return S.Pair(value_term(v.left, ty.left), value_term(v.right, ty.right))
    raise NotPositive(f"cannot read back a value of {ty!r}")


def random_value(
    ty: Type,
    rng: np.random.Generator,
    depth: int = 6,
    lo: float = -3.0,
    hi: float = 3.0,
) -> Value:
    """Random inhabitant of a data type; recursion is cut off after ``depth`` rolls."""
    if isinstance(ty, S.Real):
        return RealV(float(rng.uniform(lo, hi)))
    if isinstance(ty, S.Unit):
        return UNIT_V
    if isinstance(ty, S.Prod):
        left = random_value(ty.left, rng, depth, lo, hi)
        return PairV(left, random_value(ty.right, rng, depth, lo, hi))
    if isinstance(ty, S.Mu):
        return RollV(random_value(_unfold(ty), rng, depth - 1, lo, hi))
    if isinstance(ty, S.Sum):
        options = [side for side in (0, 1) if _inhabited((ty.left, ty.right)[side])]
        if not options:
            raise ValueError("uninhabited sum")
        if depth <= 0:
            shallow = [s for s in options if not _mentions_mu((ty.left, ty.right)[s])]
            options = shallow or options
        side = options[int(rng.integers(len(options)))]
        if side == 0:
            return InlV(random_value(ty.left, rng, depth, lo, hi))
        return InrV(random_value(ty.right, rng, depth, lo, hi))
    if isinstance(ty, S.Void):
        raise ValueError("void is uninhabited")
    raise NotPositive(f"cannot generate values of {ty!r}")


def _inhabited(ty: Type) -> bool:
    if isinstance(ty, S.Void):
        return False
    if isinstance(ty, S.Prod):
        return _inhabited(ty.left) and _inhabited(ty.right)
    if isinstance(ty, S.Sum):
        return _inhabited(ty.left) or _inhabited(ty.right)
    return True


def _mentions_mu(ty: Type) -> bool:
    if isinstance(ty, S.Mu):
        return True
    if isinstance(ty, (S.Sum, S.Prod)):
        return _mentions_mu(ty.left) or _mentions_mu(ty.right)
    return False


# ---------------------------------------------------------------------------
# Finite differences
# ---------------------------------------------------------------------------


class KinkDetected(Exception):
    """A probe left the region where the program is smooth on one shape."""


def _bits(xs: Sequence[float]) -> tuple[str, ...]:
    return tuple(float(x).hex() for x in xs)


def finite_diff_jacobian(
    prog: Program,
    point: FlatValue,
    eps: float = DEFAULT_EPS,
    fuel: int = DEFAULT_FUEL,
    centre: Optional[tuple[Outcome, list]] = None,
) -> np.ndarray:
    """Central-difference Jacobian (m x n) of ``prog`` on the shape of ``point``.

    The step for slot j is ``eps * max(1, |x_j|)``.  Raises :class:`KinkDetected`
    if the centre or a probe is undefined, lands on a different output shape,
    or takes a different sequence of ``sign`` branches than the centre (it
    crossed a boundary between pieces).  ``centre`` may pass in an already
    computed ``(outcome, trace)`` at ``point``.
    """
    if centre is None:
        trace: list = []
        centre = (prog.run(unflatten_value(point), Backend.K1, fuel, trace), trace)
    outcome, branches = centre
    if not isinstance(outcome, Converged):
        raise KinkDetected(f"undefined at the point itself: {outcome}")
    out = flatten_value(outcome.value, prog.cod)
    x = np.array(point.vector, dtype=float)
    jac = np.zeros((out.size, x.size))
    for j in range(x.size):
        h = eps * max(1.0, abs(x[j]))
        probes = []
        for sgn in (1.0, -1.0):
            xp = x.copy()
            xp[j] += sgn * h
            tr: list = []
            o = prog.run(unflatten_value(FlatValue(point.shape, tuple(xp))), Backend.K1, fuel, tr)
            if not isinstance(o, Converged):
                raise KinkDetected(f"probe {sgn * h:+g} on slot {j} is undefined: {o}")
            if tr != branches:
                raise KinkDetected(f"probe {sgn * h:+g} on slot {j} takes a different branch")
            f = flatten_value(o.value, prog.cod)
            if f.shape != out.shape:
                raise KinkDetected(f"probe {sgn * h:+g} on slot {j} changes the output shape")
            probes.append(np.array(f.vector))
        # divide by the realised step so rounding in x +- h does not bias the quotient
        step = (x[j] + h) - (x[j] - h)
        jac[:, j] = (probes[0] - probes[1]) / step
    return jac


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


class PointCache:
    """Primal run and finite-difference Jacobian at one point, computed once."""

    def __init__(self, prog: Program, point: FlatValue, eps: float, fuel: int):
        self.prog, self.point, self.eps, self.fuel = prog, point, eps, fuel
        self._primal: Optional[Outcome] = None
        self._trace: list = []
        self._fd: Optional[np.ndarray] = None
        self._kink: Optional[KinkDetected] = None

    @property
    def primal(self) -> Outcome:
        if self._primal is None:
            self._primal = self.prog.run(unflatten_value(self.point), Backend.K1, self.fuel, self._trace)
        return self._primal

    def fd(self) -> np.ndarray:
        if self._fd is None and self._kink is None:
            try:
                self._fd = finite_diff_jacobian(
                    self.prog, self.point, self.eps, self.fuel, (self.primal, self._trace)
                )
            except KinkDetected as e:
                self._kink = e
        if self._kink is not None:
            raise self._kink
        return self._fd


PASS, FAIL, KINK, BOTTOM, INCONCLUSIVE = "pass", "fail", "kink", "bottom", "inconclusive"


@dataclass
class JacobianReport:
    program: str
    mode: str
    point: FlatValue
    output_shape: Optional[Value] = None
    jacobian: list[list[float]] = field(default_factory=list)
    oracle: Optional[list[list[float]]] = None
    max_abs_err: float = 0.0
    max_rel_err: float = 0.0
    kinks: list[str] = field(default_factory=list)
    verdict: str = PASS
    detail: str = ""
    fwd_max_rel_err: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.verdict != FAIL

    def to_json(self) -> dict:
        d = {
            "program": self.program,
            "mode": self.mode,
            "point": self.point.to_json(),
            "jacobian": self.jacobian,
            "oracle": self.oracle,
            "max_abs_err": self.max_abs_err,
            "max_rel_err": self.max_rel_err,
            "kinks": self.kinks,
            "verdict": self.verdict,
        }
        if self.output_shape is not None:
            d["output_shape"] = format_value(self.output_shape)
        if self.fwd_max_rel_err is not None:
            d["fwd_max_rel_err"] = self.fwd_max_rel_err
        if self.detail:
            d["detail"] = self.detail
        return d


def _bottom_verdict(primal: Outcome, dual: Outcome, report: JacobianReport) -> Optional[JacobianReport]:
    """Handle the undefined cases; ``None`` means both runs converged."""
    pb, db = not isinstance(primal, Converged), not isinstance(dual, Converged)
    if not pb and not db:
        return None
    if isinstance(primal, FuelExhausted) or isinstance(dual, FuelExhausted):
        report.verdict = INCONCLUSIVE
        report.detail = f"primal: {primal}; dual: {dual}"
    elif pb and db:
        report.verdict = BOTTOM
        report.detail = str(primal)
    else:
        report.verdict = FAIL
        report.detail = f"definedness differs: primal {primal}, dual {dual}"
    return report


def _compare(report: JacobianReport, got: np.ndarray, want: np.ndarray, tol: float) -> None:
    if got.size:
        diff = np.abs(got - want)
        report.max_abs_err = float(diff.max())
        report.max_rel_err = float((diff / np.maximum(1.0, np.abs(want))).max())
    if report.max_rel_err > tol:
        report.verdict = FAIL
        report.detail = f"max relative error {report.max_rel_err:.3e} exceeds {tol:g}"


def _primal_matches(report: JacobianReport, primal: FlatValue, dual_primal: FlatValue) -> bool:
    if primal.shape != dual_primal.shape:
        report.verdict = FAIL
        report.detail = "dual run produced a different output shape"
        return False
    if _bits(primal.vector) != _bits(dual_primal.vector):
        report.verdict = FAIL
        report.detail = "primal part of the dual run differs from direct evaluation"
        return False
    return True


def forward_check(
    prog: Program,
    point: FlatValue,
    direction: Sequence[float],
    eps: float = DEFAULT_EPS,
    tol: float = 1e-5,
    fuel: int = DEFAULT_FUEL,
    cache: Optional[PointCache] = None,
) -> JacobianReport:
    """Forward mode: one R^1 dual run against the FD directional derivative."""
    report = JacobianReport(prog.name, "fwd", point)
    cache = cache or PointCache(prog, point, eps, fuel)
    primal = cache.primal
    seeds = [Scalar(float(w)) for w in direction]
    dual = prog.run_dual(dual_embed(point, seeds, prog.dom), Backend.K1, fuel)
    if _bottom_verdict(primal, dual, report):
        return report
    out = flatten_value(primal.value, prog.cod)
    dual_out, tangents = split_dual(dual.value, prog.cod)
    report.output_shape = out.shape
    if not _primal_matches(report, out, dual_out):
        return report
    got = np.array([w.value for w in tangents], dtype=float)
    report.jacobian = [[float(g)] for g in got]
    try:
        jac = cache.fd()
    except KinkDetected as e:
        report.verdict = KINK
        report.kinks.append(str(e))
        return report
    want = jac @ np.asarray(direction, dtype=float) if jac.size else np.zeros(out.size)
    report.oracle = [[float(w)] for w in want]
    _compare(report, got, want, tol)
    return report


def forward_jacobian(prog: Program, point: FlatValue, fuel: int = DEFAULT_FUEL) -> Optional[np.ndarray]:
    """Full Jacobian from n forward runs with basis directions (None if undefined)."""
    n = point.size
    cols = []
    for j in range(n):
        seeds = [Scalar(1.0 if i == j else 0.0) for i in range(n)]
        o = prog.run_dual(dual_embed(point, seeds, prog.dom), Backend.K1, fuel)
        if not isinstance(o, Converged):
            return None
        _, tangents = split_dual(o.value, prog.cod)
        cols.append([w.value for w in tangents])
    if not cols:
        return None
    return np.array(cols, dtype=float).T


def reverse_jacobian(
    prog: Program,
    point: FlatValue,
    eps: float = DEFAULT_EPS,
    tol: float = 1e-5,
    fwd_tol: float = 1e-9,
    fuel: int = DEFAULT_FUEL,
    cache: Optional[PointCache] = None,
) -> JacobianReport:
    """Reverse mode: seed slot j with basis vector j over R^inf, project rows."""
    report = JacobianReport(prog.name, "rev", point)
    cache = cache or PointCache(prog, point, eps, fuel)
    n = point.size
    primal = cache.primal
    seeds = [tan_basis(j + 1, Backend.KINF) for j in range(n)]
    dual = prog.run_dual(dual_embed(point, seeds, prog.dom), Backend.KINF, fuel)
    if _bottom_verdict(primal, dual, report):
        return report
    out = flatten_value(primal.value, prog.cod)
    dual_out, tangents = split_dual(dual.value, prog.cod)
    report.output_shape = out.shape
    if not _primal_matches(report, out, dual_out):
        return report
    rows = [tan_proj(n, w) if n else [] for w in tangents]
    got = np.array(rows, dtype=float).reshape(out.size, n)
    report.jacobian = got.tolist()

    fwd = forward_jacobian(prog, point, fuel)
    if fwd is not None:
        diff = np.abs(got - fwd) / np.maximum(1.0, np.abs(fwd))
        report.fwd_max_rel_err = float(diff.max()) if diff.size else 0.0
        if report.fwd_max_rel_err > fwd_tol:
            report.verdict = FAIL
            report.detail = f"reverse rows disagree with forward columns ({report.fwd_max_rel_err:.3e})"
            return report
    elif n:
        report.verdict = FAIL
        report.detail = "forward runs undefined where the reverse run is defined"
        return report

    try:
        jac = cache.fd()
    except KinkDetected as e:
        report.verdict = KINK
        report.kinks.append(str(e))
        return report
    report.oracle = jac.tolist()
    _compare(report, got, jac, tol)
    return report


# ---------------------------------------------------------------------------
# Per-primitive chain rule
# ---------------------------------------------------------------------------


def _box(lo: float, hi: float, n: int):
    return lambda rng: tuple(float(v) for v in rng.uniform(lo, hi, n))


def _div_sampler(rng):
    x = float(rng.uniform(-10, 10))
    y = float(rng.uniform(0.1, 10)) * (1.0 if rng.random() < 0.5 else -1.0)
    return (x, y)


OP_SAMPLERS: dict[str, Callable[[np.random.Generator], tuple[float, ...]]] = {
    "/": _div_sampler,
    "log": _box(0.1, 100.0, 1),
    "sqrt": _box(0.1, 100.0, 1),
    "exp": _box(-10.0, 10.0, 1),
}


@dataclass
class ChainRuleReport:
    op: str
    trials: int
    max_rel_err_fd: float = 0.0
    max_rel_err_analytic: float = 0.0
    max_rel_err_fwd: float = 0.0
    worst_point: tuple[float, ...] = ()
    verdict: str = PASS
    detail: str = ""

    def to_json(self) -> dict:
        return asdict(self)


def chain_rule_check(
    op: str,
    trials: int = 1000,
    seed: int = 0,
    eps: float = DEFAULT_EPS,
    tol: float = 1e-6,
    ops: Optional[OpRegistry] = None,
) -> ChainRuleReport:
    """Evaluate the AD image of ``op(a1..an)`` at random in-domain dual points.

    The R^inf run seeded with basis vectors yields the gradient, compared with
    the op's analytic partials and with central finite differences.  An R^1
    run along a random direction must give the matching directional derivative.
    """
    ops = ops or DEFAULT_OPS
    sig = ops[op]
    n = sig.arity
    names = [f"a{i + 1}" for i in range(n)]
    dual_term = ad_term(S.PrimOp(op, tuple(S.Var(x) for x in names)), ops)
    sampler = OP_SAMPLERS.get(op, _box(-10.0, 10.0, n))
    rng = np.random.default_rng([seed, zlib.crc32(op.encode())])
    report = ChainRuleReport(op, trials)

    def in_domain(x) -> bool:
        if not sig.domain(*x):
            return False
        for j in range(n):
            h = eps * max(1.0, abs(x[j]))
            for s in (h, -h):
                xp = list(x)
                xp[j] += s
                if not sig.domain(*xp):
                    return False
        try:
            ops.apply(op, x)
        except OutOfDomain:
            return False
        return True

    done = 0
    while done < trials:
        x = sampler(rng)
        if not in_domain(x):
            continue
        done += 1
        env = {a: PairV(RealV(v), TanV(tan_basis(i + 1, Backend.KINF))) for i, (a, v) in enumerate(zip(names, x))}
        o = evaluate(dual_term, env, Backend.KINF, ops=ops)
        if not isinstance(o, Converged):
            report.verdict = FAIL
            report.detail = f"dual evaluation undefined at {x}: {o}"
            report.worst_point = tuple(x)
            return report
        v, w = o.value.left.value, o.value.right.tangent
        if _bits([v]) != _bits([ops.apply(op, x)]):
            report.verdict = FAIL
            report.detail = f"primal mismatch at {x}"
            report.worst_point = tuple(x)
            return report
        grad = tan_proj(n, w) if n else []
        if not n and w != tan_zero(Backend.KINF):
            report.verdict = FAIL
            report.detail = "nullary op produced a non-zero tangent"
            return report
        analytic = [p(*x) for p in sig.partials]
        fd = []
        for j in range(n):
            h = eps * max(1.0, abs(x[j]))
            xp, xm = list(x), list(x)
            xp[j] += h
            xm[j] -= h
            fd.append((ops.apply(op, xp) - ops.apply(op, xm)) / (xp[j] - xm[j]))
        e_fd = max((rel_err(g, f) for g, f in zip(grad, fd)), default=0.0)
        e_an = max((rel_err(g, a) for g, a in zip(grad, analytic)), default=0.0)

        direction = rng.standard_normal(n)
        env1 = {a: PairV(RealV(v_), TanV(Scalar(float(d)))) for a, v_, d in zip(names, x, direction)}
        o1 = evaluate(dual_term, env1, Backend.K1, ops=ops)
        want1 = float(np.dot(grad, direction)) if n else 0.0
        e_fwd = rel_err(o1.value.right.tangent.value, want1) if isinstance(o1, Converged) else math.inf

        if max(e_fd, e_an) > max(report.max_rel_err_fd, report.max_rel_err_analytic):
            report.worst_point = tuple(x)
        report.max_rel_err_fd = max(report.max_rel_err_fd, e_fd)
        report.max_rel_err_analytic = max(report.max_rel_err_analytic, e_an)
        report.max_rel_err_fwd = max(report.max_rel_err_fwd, e_fwd)

    worst = max(report.max_rel_err_fd, report.max_rel_err_analytic)
    if worst > tol or report.max_rel_err_fwd > 1e-12:
        report.verdict = FAIL
        report.detail = (
            f"fd {report.max_rel_err_fd:.3e}, analytic {report.max_rel_err_analytic:.3e}, "
            f"fwd {report.max_rel_err_fwd:.3e} at {report.worst_point}"
        )
    return report


# ---------------------------------------------------------------------------
# Whole-program harness
# ---------------------------------------------------------------------------


def _pragma_float(prog: Program, key: str, idx: int, default: float) -> float:
    vals = prog.pragmas.get(key)
    return float(vals[idx]) if vals and len(vals) > idx else default


def sample_point(prog: Program, rng: np.random.Generator) -> FlatValue:
    lo = _pragma_float(prog, "range", 0, -3.0)
    hi = _pragma_float(prog, "range", 1, 3.0)
    depth = int(_pragma_float(prog, "depth", 0, 6))
    return flatten_value(random_value(prog.dom, rng, depth, lo, hi), prog.dom)


@dataclass
class VerifyResult:
    program: str
    reports: list[JacobianReport]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.reports)

    def count(self, verdict: str, mode: Optional[str] = None) -> int:
        return sum(1 for r in self.reports if r.verdict == verdict and (mode is None or r.mode == mode))

    def summary(self) -> dict:
        return {
            "program": self.program,
            "trials": len(self.reports) // 2,
            **{v: self.count(v) for v in (PASS, FAIL, KINK, BOTTOM, INCONCLUSIVE)},
            "verdict": PASS if self.ok else FAIL,
        }


def verify_program(
    prog: Program,
    trials: int = 100,
    seed: int = 0,
    eps: float = DEFAULT_EPS,
    tol: float = 1e-5,
    fuel: int = DEFAULT_FUEL,
    require_clean: bool = False,
    max_attempts: Optional[int] = None,
) -> VerifyResult:
    """Forward and reverse checks at random points of the program's input type.

    With ``require_clean`` the harness keeps sampling until ``trials`` points
    pass both checks without kinks or undefinedness (or an attempt cap hits).
    """
    if not prog.is_differentiable_shape:
        raise NotPositive(f"{prog.name}: input and output must be data types")
    rng = np.random.default_rng([seed, zlib.crc32(prog.name.encode())])
    reports: list[JacobianReport] = []
    clean = attempts = 0
    cap = max_attempts or (5 * trials if require_clean else trials)
    while attempts < cap and (clean < trials if require_clean else attempts < trials):
        attempts += 1
        point = sample_point(prog, rng)
        direction = rng.standard_normal(point.size)
        cache = PointCache(prog, point, eps, fuel)
        f = forward_check(prog, point, direction, eps, tol, fuel, cache)
        r = reverse_jacobian(prog, point, eps, tol, fuel=fuel, cache=cache)
        reports += [f, r]
        if f.verdict == PASS and r.verdict == PASS:
            clean += 1
    return VerifyResult(prog.name, reports)


def reports_json(results: Sequence[VerifyResult]) -> str:
    payload = [
        {"summary": res.summary(), "reports": [r.to_json() for r in res.reports]}
        for res in results
    ]
    return json.dumps(payload, sort_keys=True, indent=2)
