"""Prime-field scalars, matrices and interpolation.

Matrices are backed by numpy integer arrays that are always reduced mod p.
``int64`` is used while every intermediate dot product fits in 63 bits;
larger moduli fall back to Python-int object arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimMismatch,
    DivideByZero,
    FieldMismatch,
    NotPrime,
    SingularSystem,
)

_INT64_LIMIT = 2**63 - 1


def is_prime(n: int) -> bool:
    """Deterministic trial division. Fine for the moduli used here (< 2**31)."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    i = 3
    while i * i <= n:
        if n % i == 0:
            return False
        i += 2
    return True


@dataclass(frozen=True)
class PrimeField:
    p: int

    def __post_init__(self):
        if not isinstance(self.p, (int, np.integer)) or not is_prime(int(self.p)):
            raise NotPrime(f"{self.p} is not prime")
        object.__setattr__(self, "p", int(self.p))

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(int(value) % self.p, self)

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise DivideByZero(f"0 has no inverse mod {self.p}")
        return pow(a, self.p - 2, self.p)

    def dtype_for(self, inner: int = 1):
        # worst case for a dot product of length `inner`
        if (self.p - 1) ** 2 * max(inner, 1) + self.p <= _INT64_LIMIT:
            return np.int64
        return object

    def matrix(self, rows) -> "FMatrix":
        return FMatrix.from_rows(self, rows)

    def zeros(self, rows: int, cols: int) -> "FMatrix":
        return FMatrix(self, np.zeros((rows, cols), dtype=np.int64))

    def identity(self, n: int) -> "FMatrix":
        return FMatrix(self, np.eye(n, dtype=np.int64))

    def random_matrix(self, rows: int, cols: int, rng: np.random.Generator) -> "FMatrix":
        return FMatrix(self, rng.integers(0, self.p, size=(rows, cols), dtype=np.int64))


def field_new(p: int) -> PrimeField:
    return PrimeField(p)


@dataclass(frozen=True)
class FieldElement:
    value: int
    field: PrimeField

    def __post_init__(self):
        object.__setattr__(self, "value", int(self.value) % self.field.p)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldMismatch(f"mod {self.field.p} vs mod {other.field.p}")
            return other.value
        if isinstance(other, (int, np.integer)):
            return int(other)
        return NotImplemented

    def __add__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return FieldElement(self.value + v, self.field)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return FieldElement(self.value - v, self.field)

    def __rsub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return FieldElement(v - self.value, self.field)

    def __mul__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return FieldElement(self.value * v, self.field)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value, self.field)

    def inv(self) -> "FieldElement":
        return FieldElement(self.field.inv(self.value), self.field)

    def __truediv__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return self * self.field.inv(v)

    def __pow__(self, e: int):
        if e < 0:
            return self.inv() ** (-e)
        return FieldElement(pow(self.value, e, self.field.p), self.field)

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value} (mod {self.field.p})"


def field_arith(a: FieldElement, b: FieldElement | None, op: str) -> FieldElement:
    """Dispatch one of ``add``, ``sub``, ``mul``, ``inv_of_a``."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "inv_of_a":
        return a.inv()
    raise ValueError(f"unknown op {op!r}")


class FMatrix:
    """Immutable dense matrix over a prime field."""

    __slots__ = ("field", "array")

    def __init__(self, field: PrimeField, array: np.ndarray):
        arr = np.asarray(array)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimMismatch(f"expected a non-empty 2-D array, got shape {arr.shape}")
        if arr.dtype != object and arr.dtype != np.int64:
            arr = arr.astype(np.int64)
        arr = arr % field.p
        arr.flags.writeable = False
        self.field = field
        self.array = arr

    @classmethod
    def from_rows(cls, field: PrimeField, rows: Iterable[Iterable[int]]) -> "FMatrix":
        rows = [[int(v) for v in r] for r in rows]
        if not rows or len({len(r) for r in rows}) != 1:
            raise DimMismatch("ragged or empty row list")
        dtype = np.int64 if max(abs(v) for r in rows for v in r) < 2**62 else object
        return cls(field, np.array(rows, dtype=dtype))

    @property
    def rows(self) -> int:
        return self.array.shape[0]

    @property
    def cols(self) -> int:
        return self.array.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.array.shape

    def tolist(self) -> list[list[int]]:
        return [[int(v) for v in r] for r in self.array.tolist()]

    def size(self) -> int:
        return self.rows * self.cols

    def _check(self, other: "FMatrix"):
        if not isinstance(other, FMatrix):
            raise TypeError(f"expected FMatrix, got {type(other).__name__}")
        if other.field != self.field:
            raise FieldMismatch(f"mod {self.field.p} vs mod {other.field.p}")

    def __add__(self, other: "FMatrix") -> "FMatrix":
        self._check(other)
        if self.shape != other.shape:
            raise DimMismatch(f"{self.shape} + {other.shape}")
        return FMatrix(self.field, self.array + other.array)

    def __sub__(self, other: "FMatrix") -> "FMatrix":
        self._check(other)
        if self.shape != other.shape:
            raise DimMismatch(f"{self.shape} - {other.shape}")
        return FMatrix(self.field, self.array - other.array)

    def __neg__(self) -> "FMatrix":
        return FMatrix(self.field, -self.array)

    def scale(self, c: int) -> "FMatrix":
        c = int(c) % self.field.p
        if self.field.dtype_for() is np.int64:
            return FMatrix(self.field, self.array * c)
        return FMatrix(self.field, self.array.astype(object) * c)

    def __matmul__(self, other: "FMatrix") -> "FMatrix":
        return mat_mul(self, other)

    def __eq__(self, other):
        if not isinstance(other, FMatrix):
            return NotImplemented
        return (
            self.field == other.field
            and self.shape == other.shape
            and bool(np.array_equal(self.array, other.array))
        )

    __hash__ = None

    def row_slice(self, start: int, stop: int) -> "FMatrix":
        return FMatrix(self.field, self.array[start:stop])

    def is_zero(self) -> bool:
        return not self.array.any()

    def __repr__(self):
        return f"FMatrix(p={self.field.p}, {self.tolist()})"


def vstack(mats: Sequence[FMatrix]) -> FMatrix:
    if not mats:
        raise DimMismatch("nothing to stack")
    field = mats[0].field
    for m in mats[1:]:
        mats[0]._check(m)
    if len({m.cols for m in mats}) != 1:
        raise DimMismatch("column counts differ")
    return FMatrix(field, np.vstack([m.array for m in mats]))


def mat_mul(X: FMatrix, Y: FMatrix) -> FMatrix:
    X._check(Y)
    if X.cols != Y.rows:
        raise DimMismatch(f"{X.shape} @ {Y.shape}")
    dtype = X.field.dtype_for(X.cols)
    if dtype is np.int64:
        return FMatrix(X.field, X.array @ Y.array)
    return FMatrix(X.field, X.array.astype(object).dot(Y.array.astype(object)))


def linear_combination(coeffs: Sequence[int], mats: Sequence[FMatrix]) -> FMatrix:
    """Return sum_k coeffs[k] * mats[k], reducing after every term."""
    if len(coeffs) != len(mats) or not mats:
        raise DimMismatch("coefficient/matrix count mismatch")
    field = mats[0].field
    shape = mats[0].shape
    for m in mats:
        mats[0]._check(m)
        if m.shape != shape:
            raise DimMismatch("matrices differ in shape")
    p = field.p
    if field.dtype_for() is np.int64:
        acc = np.zeros(shape, dtype=np.int64)
        for c, m in zip(coeffs, mats):
            acc = (acc + (int(c) % p) * m.array) % p
    else:
        acc = np.zeros(shape, dtype=object)
        for c, m in zip(coeffs, mats):
            acc = (acc + (int(c) % p) * m.array.astype(object)) % p
    return FMatrix(field, acc)


def evaluate_poly(coeffs: Sequence[FMatrix], x: int) -> FMatrix:
    """Evaluate sum_i coeffs[i] * x**i."""
    p = coeffs[0].field.p
    powers = [pow(int(x), i, p) for i in range(len(coeffs))]
    return linear_combination(powers, coeffs)


def _poly_mul_linear(poly: list[int], root: int, p: int) -> list[int]:
    # poly * (x - root)
    out = [0] * (len(poly) + 1)
    for i, c in enumerate(poly):
        out[i + 1] = (out[i + 1] + c) % p
        out[i] = (out[i] - c * root) % p
    return out


@lru_cache(maxsize=4096)
def inverse_vandermonde(points: tuple[int, ...], p: int) -> tuple[tuple[int, ...], ...]:
    """Rows i, columns n: coefficient of x**i in the n-th Lagrange basis polynomial.

    Coefficient vector = inverse_vandermonde @ evaluations.
    """
    k = len(points)
    pts = [x % p for x in points]
    if len(set(pts)) != k:
        raise SingularSystem(f"evaluation points not distinct mod {p}: {points}")
    cols = []
    for n, xn in enumerate(pts):
        basis = [1]
        denom = 1
        for m, xm in enumerate(pts):
            if m == n:
                continue
            basis = _poly_mul_linear(basis, xm, p)
            denom = denom * (xn - xm) % p
        scale = pow(denom, p - 2, p)
        cols.append([c * scale % p for c in basis])
    return tuple(tuple(cols[n][i] for n in range(k)) for i in range(k))


def vandermonde_solve(points: Sequence, evals: Sequence[FMatrix]) -> list[FMatrix]:
    """Recover C_0..C_{K-1} from evals[n] = sum_i C_i * points[n]**i."""
    if len(points) != len(evals) or not evals:
        raise DimMismatch(f"{len(points)} points for {len(evals)} evaluations")
    field = evals[0].field
    shape = evals[0].shape
    for e in evals:
        evals[0]._check(e)
        if e.shape != shape:
            raise DimMismatch("evaluations differ in shape")
    xs = tuple(int(x) % field.p for x in points)
    vinv = inverse_vandermonde(xs, field.p)
    return [linear_combination(row, evals) for row in vinv]
