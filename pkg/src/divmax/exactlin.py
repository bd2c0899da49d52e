"""Exact rational linear algebra backing the polytope and chamber machinery.

Everything in this module is tolerance-free: matrices carry
``fractions.Fraction`` entries, kernels come back as primitive integer
vectors, and square solves either succeed exactly or raise.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

Rational = Fraction

__all__ = [
    "Rational",
    "RationalMatrix",
    "SingularMatrix",
    "as_fraction",
    "rref",
    "kernel_basis",
    "solve_square",
    "inverse",
    "rank",
    "primitive_integer_vector",
]


class SingularMatrix(ValueError):
    """A square solve met a non-invertible matrix."""


def as_fraction(value) -> Fraction:
    """Coerce ints, strings like ``"3/4"``, and Fractions to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


@dataclass(frozen=True)
class RationalMatrix:
    """Dense rational matrix, row-major, immutable."""

    rows: int
    cols: int
    entries: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise ValueError("entry count does not match shape")

    @staticmethod
    def from_rows(rows: Iterable[Iterable]) -> "RationalMatrix":
        data = [[as_fraction(x) for x in row] for row in rows]
        nrows = len(data)
        ncols = len(data[0]) if data else 0
        if any(len(row) != ncols for row in data):
            raise ValueError("ragged rows")
        flat = tuple(x for row in data for x in row)
        return RationalMatrix(nrows, ncols, flat)

    @staticmethod
    def identity(k: int) -> "RationalMatrix":
        return RationalMatrix.from_rows(
            [[1 if i == j else 0 for j in range(k)] for i in range(k)]
        )

    def entry(self, i: int, j: int) -> Fraction:
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self.entries[i * self.cols : (i + 1) * self.cols]

    def column(self, j: int) -> tuple[Fraction, ...]:
        return tuple(self.entries[i * self.cols + j] for i in range(self.rows))

    def row_list(self) -> list[list[Fraction]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix.from_rows(
            [self.column(j) for j in range(self.cols)]
        )

    def submatrix_columns(self, cols: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix.from_rows(
            [[self.entry(i, j) for j in cols] for i in range(self.rows)]
        )

    def mul_vec(self, v: Sequence) -> tuple[Fraction, ...]:
        if len(v) != self.cols:
            raise ValueError("dimension mismatch")
        vf = [as_fraction(x) for x in v]
        return tuple(
            sum((self.entry(i, j) * vf[j] for j in range(self.cols)), Fraction(0))
            for i in range(self.rows)
        )

    def float_rows(self) -> list[list[float]]:
        return [[float(x) for x in self.row(i)] for i in range(self.rows)]

    def __str__(self) -> str:
        return "\n".join(" ".join(str(x) for x in self.row(i)) for i in range(self.rows))


def rref(matrix: RationalMatrix) -> tuple[RationalMatrix, tuple[int, ...], int]:
    """Reduced row echelon form; returns (R, pivot columns, rank)."""
    data = matrix.row_list()
    nrows, ncols = matrix.rows, matrix.cols
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot_row = next((i for i in range(r, nrows) if data[i][c] != 0), None)
        if pivot_row is None:
            continue
        data[r], data[pivot_row] = data[pivot_row], data[r]
        pv = data[r][c]
        data[r] = [x / pv for x in data[r]]
        for i in range(nrows):
            if i != r and data[i][c] != 0:
                f = data[i][c]
                data[i] = [a - f * b for a, b in zip(data[i], data[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return RationalMatrix.from_rows(data), tuple(pivots), r


def rank(matrix: RationalMatrix) -> int:
    return rref(matrix)[2]


def primitive_integer_vector(v: Sequence[Fraction]) -> tuple[int, ...]:
    """Scale a rational vector to a primitive integer vector, first nonzero > 0."""
    fv = [as_fraction(x) for x in v]
    if all(x == 0 for x in fv):
        return tuple(0 for _ in fv)
    denom_lcm = 1
    for x in fv:
        denom_lcm = denom_lcm * x.denominator // gcd(denom_lcm, x.denominator)
    ints = [int(x * denom_lcm) for x in fv]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    ints = [x // g for x in ints]
    lead = next(x for x in ints if x != 0)
    if lead < 0:
        ints = [-x for x in ints]
    return tuple(ints)


def kernel_basis(matrix: RationalMatrix) -> list[tuple[int, ...]]:
    """Primitive integer vectors spanning the rational null space of ``matrix``.

    One vector per free column of the RREF; count equals cols - rank.
    """
    R, pivots, rk = rref(matrix)
    free = [c for c in range(matrix.cols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * matrix.cols
        v[f] = Fraction(1)
        for row_idx, pc in enumerate(pivots):
            v[pc] = -R.entry(row_idx, f)
        basis.append(primitive_integer_vector(v))
    return basis


def solve_square(matrix: RationalMatrix, b: Sequence) -> tuple[Fraction, ...]:
    """Solve ``matrix @ x = b`` exactly for square ``matrix``.

    Raises SingularMatrix when no unique solution exists.
    """
    if matrix.rows != matrix.cols:
        raise SingularMatrix("matrix is not square")
    n = matrix.rows
    data = [list(matrix.row(i)) + [as_fraction(b[i])] for i in range(n)]
    for c in range(n):
        pivot_row = next((i for i in range(c, n) if data[i][c] != 0), None)
        if pivot_row is None:
            raise SingularMatrix("matrix is singular")
        data[c], data[pivot_row] = data[pivot_row], data[c]
        pv = data[c][c]
        data[c] = [x / pv for x in data[c]]
        for i in range(n):
            if i != c and data[i][c] != 0:
                f = data[i][c]
                data[i] = [a - f * bb for a, bb in zip(data[i], data[c])]
    return tuple(data[i][n] for i in range(n))


def inverse(matrix: RationalMatrix) -> RationalMatrix:
    """Exact inverse of a square rational matrix."""
    n = matrix.rows
    cols = [
        solve_square(matrix, [1 if i == j else 0 for i in range(n)])
        for j in range(n)
    ]
    return RationalMatrix.from_rows(
        [[cols[j][i] for j in range(n)] for i in range(n)]
    )
