"""Tests for the exact rational linear algebra layer."""
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from divmax.exactlin import (
    RationalMatrix,
    SingularMatrix,
    inverse,
    kernel_basis,
    rank,
    rref,
    solve_square,
)

BINOMIAL_A = [[1, 1, 1, 1], [0, 1, 2, 3]]
INDEP_2X2_A = [[1, 1, 1, 1], [0, 0, 1, 1], [0, 1, 0, 1]]


def frac_rows(rows):
    return RationalMatrix.from_rows(rows)


class TestRref:
    def test_identity(self):
        M = RationalMatrix.identity(3)
        R, pivots, rk = rref(M)
        assert R == M
        assert pivots == (0, 1, 2)
        assert rk == 3

    def test_zero(self):
        M = frac_rows([[0, 0, 0, 0], [0, 0, 0, 0]])
        R, pivots, rk = rref(M)
        assert R == M
        assert pivots == ()
        assert rk == 0

    def test_binomial_matrix_rank(self):
        # Hand RREF: two independent rows, pivots in the first two columns.
        M = frac_rows(BINOMIAL_A)
        R, pivots, rk = rref(M)
        assert rk == 2
        assert pivots == (0, 1)
        assert R.row(0) == (1, 0, -1, -2)
        assert R.row(1) == (0, 1, 2, 3)

    def test_idempotent_on_fixed_case(self):
        M = frac_rows([[2, 4, 1], [1, 2, 3], [3, 6, 4]])
        R1 = rref(M)[0]
        R2 = rref(R1)[0]
        assert R1 == R2


class TestKernelBasis:
    def test_binomial_kernel(self):
        # Rational null space cleared to primitive integer vectors.
        M = frac_rows(BINOMIAL_A)
        basis = kernel_basis(M)
        assert len(basis) == 2
        for v in basis:
            assert M.mul_vec(v) == (0, 0)
        # The stated span: {(1,-2,1,0), (0,1,-2,1)}.  Check both lie in the
        # computed span by solving exactly.
        span = frac_rows(basis).transpose()
        for target in [(1, -2, 1, 0), (0, 1, -2, 1)]:
            aug = RationalMatrix.from_rows(
                [list(span.row(i)) + [target[i]] for i in range(4)]
            )
            assert rank(aug) == rank(span) == 2

    def test_2x2_independence_kernel(self):
        M = frac_rows(INDEP_2X2_A)
        basis = kernel_basis(M)
        assert basis == [(1, -1, -1, 1)]

    def test_full_rank_square(self):
        assert kernel_basis(RationalMatrix.identity(4)) == []

    def test_primitive_and_sign_normalized(self):
        M = frac_rows([[2, 4]])
        basis = kernel_basis(M)
        assert basis == [(2, -1)] or basis == [(-2, 1)]
        assert basis[0][0] > 0


class TestSolveSquare:
    def test_identity(self):
        M = RationalMatrix.identity(3)
        b = (Fraction(1, 3), Fraction(2), Fraction(-5, 7))
        assert solve_square(M, b) == b

    def test_back_substitution_case(self):
        M = frac_rows([[1, 1], [0, 1]])
        assert solve_square(M, (1, Fraction(1, 2))) == (
            Fraction(1, 2),
            Fraction(1, 2),
        )

    def test_binomial_basic_solution(self):
        # Columns {0,3} of the binomial matrix against b=(1, 3/2); this is the
        # basic solve behind the fiber vertex (1/2, 0, 0, 1/2).
        M = frac_rows([[1, 1], [0, 3]])
        x = solve_square(M, (1, Fraction(3, 2)))
        assert x == (Fraction(1, 2), Fraction(1, 2))

    def test_singular_raises(self):
        M = frac_rows([[1, 2], [2, 4]])
        with pytest.raises(SingularMatrix):
            solve_square(M, (1, 1))

    def test_inverse(self):
        M = frac_rows([[1, 2], [3, 5]])
        Minv = inverse(M)
        assert Minv == frac_rows([[-5, 2], [3, -1]])


small_fractions = st.fractions(
    min_value=-5, max_value=5, max_denominator=6
)


@st.composite
def rational_matrices(draw):
    nrows = draw(st.integers(min_value=1, max_value=4))
    ncols = draw(st.integers(min_value=1, max_value=5))
    rows = [
        [draw(small_fractions) for _ in range(ncols)] for _ in range(nrows)
    ]
    return RationalMatrix.from_rows(rows)


@settings(max_examples=60, deadline=None)
@given(rational_matrices())
def test_rref_idempotent(M):
    R = rref(M)[0]
    assert rref(R)[0] == R


@settings(max_examples=60, deadline=None)
@given(rational_matrices())
def test_kernel_vectors_exact_and_rank_identity(M):
    basis = kernel_basis(M)
    for v in basis:
        assert all(x == 0 for x in M.mul_vec(v))
    assert rank(M) + len(basis) == M.cols


@settings(max_examples=40, deadline=None)
@given(rational_matrices())
def test_solve_square_exact(M):
    if M.rows != M.cols:
        return
    b = tuple(Fraction(i + 1, 3) for i in range(M.rows))
    try:
        x = solve_square(M, b)
    except SingularMatrix:
        assert rank(M) < M.rows
        return
    assert M.mul_vec(x) == b
