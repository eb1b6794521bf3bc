"""Runtime tangent vectors: R^1 for forward mode, sparse R^inf for reverse mode."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union


class Backend(enum.Enum):
    K1 = "k1"
    KINF = "kinf"


class NonFiniteTangent(ArithmeticError):
    pass


@dataclass(frozen=True, slots=True)
class Scalar:
    value: float


@dataclass(frozen=True, slots=True)
class SparseVec:
    """Finitely supported vector over indices 1, 2, ...

    ``items`` is sorted by index and never holds an explicit zero.
    """

    items: tuple[tuple[int, float], ...] = ()

    @classmethod
    def from_dict(cls, d: dict[int, float]) -> "SparseVec":
        return cls(tuple(sorted((i, v) for i, v in d.items() if v != 0.0)))

    def to_dict(self) -> dict[int, float]:
        return dict(self.items)

    def get(self, i: int) -> float:
        for j, v in self.items:
            if j == i:
                return v
            if j > i:
                break
        return 0.0


TangentValue = Union[Scalar, SparseVec]


def backend_of(a: TangentValue) -> Backend:
    return Backend.K1 if isinstance(a, Scalar) else Backend.KINF


def _finite(x: float) -> float:
    if not math.isfinite(x):
        raise NonFiniteTangent(x)
    return x


def tan_zero(backend: Backend) -> TangentValue:
    return Scalar(0.0) if backend is Backend.K1 else SparseVec()


def tan_basis(i: int, backend: Backend) -> TangentValue:
    """The i-th canonical basis vector; zero in R^1 whenever i > 1."""
    if i < 1:
        raise ValueError(f"basis index must be >= 1, got {i}")
    if backend is Backend.K1:
        return Scalar(1.0 if i == 1 else 0.0)
    return SparseVec(((i, 1.0),))


def tan_add(a: TangentValue, b: TangentValue) -> TangentValue:
    if isinstance(a, Scalar):
        assert isinstance(b, Scalar), "mixed tangent backends"
        return Scalar(_finite(a.value + b.value))
    assert isinstance(b, SparseVec), "mixed tangent backends"
    if not a.items:
        return b
    if not b.items:
        return a
    out = dict(a.items)
    for i, v in b.items:
        out[i] = _finite(out.get(i, 0.0) + v)
    return SparseVec.from_dict(out)


def tan_scale(a: TangentValue, s: float) -> TangentValue:
    if isinstance(a, Scalar):
        return Scalar(_finite(a.value * s))
    if s == 0.0:
        return SparseVec()
    return SparseVec.from_dict({i: _finite(v * s) for i, v in a.items})


def tan_proj(i: int, a: TangentValue) -> list[float]:
    """First ``i`` coordinates of ``a``, zero-padded when ``a`` lives in R^1."""
    if i < 1:
        raise ValueError(f"projection index must be >= 1, got {i}")
    if isinstance(a, Scalar):
        return [a.value] + [0.0] * (i - 1)
    return [a.get(j) for j in range(1, i + 1)]
