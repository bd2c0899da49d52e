"""Toric (discrete exponential) models: parametrization, MLE, divergence.

A model is given by an integer matrix A whose first row is all ones plus a
positive weight vector; its positive part is the image of the monomial map
z -> (w_1 z^{a_1}, ..., w_n z^{a_n}) normalized to the simplex.  The MLE of
a data vector u is the unique model point q with A q = A u; it is computed
by multiplicative scaling warmed into a Newton polish on the moment map.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exactlin import RationalMatrix, as_fraction, kernel_basis, rank, rref
from .polytope import enumerate_vertices

__all__ = [
    "ToricModel",
    "Binomial",
    "BinomialSystem",
    "DimensionMismatch",
    "NoConvergence",
    "kl_divergence",
    "binomial_system",
    "mle",
    "model_point",
    "block_divergence",
]


class DimensionMismatch(ValueError):
    pass


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return as_fraction(x)


class NoConvergence(RuntimeError):
    def __init__(self, residual: float):
        super().__init__(f"MLE iteration did not converge, residual={residual:.3e}")
        self.residual = residual


@dataclass(frozen=True)
class Binomial:
    """Weighted binomial c_plus * p^{e_plus} - c_minus * p^{e_minus}."""

    plus_exponents: tuple[int, ...]
    minus_exponents: tuple[int, ...]
    plus_coefficient: Fraction
    minus_coefficient: Fraction

    def evaluate(self, p: Sequence[float]) -> float:
        plus = float(self.plus_coefficient)
        minus = float(self.minus_coefficient)
        for x, e in zip(p, self.plus_exponents):
            if e:
                plus *= float(x) ** e
        for x, e in zip(p, self.minus_exponents):
            if e:
                minus *= float(x) ** e
        return plus - minus

    def evaluate_exact(self, p: Sequence[Fraction]) -> Fraction:
        plus = self.plus_coefficient
        minus = self.minus_coefficient
        for x, e in zip(p, self.plus_exponents):
            if e:
                plus *= as_fraction(x) ** e
        for x, e in zip(p, self.minus_exponents):
            if e:
                minus *= as_fraction(x) ** e
        return plus - minus


@dataclass(frozen=True)
class BinomialSystem:
    binomials: tuple[Binomial, ...]

    def max_residual(self, p: Sequence[float]) -> float:
        return max((abs(b.evaluate(p)) for b in self.binomials), default=0.0)


class ToricModel:
    """Integer matrix A (first row all ones, full row rank) plus weights."""

    def __init__(self, A, weights=None, name: str = ""):
        if not isinstance(A, RationalMatrix):
            A = RationalMatrix.from_rows(A)
        if any(x != 1 for x in A.row(0)):
            raise ValueError("first row of A must be all ones")
        if any(x.denominator != 1 for x in A.entries):
            raise ValueError("A must have integer entries")
        if rank(A) != A.rows:
            raise ValueError("A must have full row rank")
        self.A = A
        self.name = name
        if weights is None:
            weights = [1] * A.cols
        self.weights = tuple(as_fraction(w) for w in weights)
        if len(self.weights) != A.cols or any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive, one per column")
        self.kernel: tuple[tuple[int, ...], ...] = tuple(kernel_basis(A))
        self.A_np = np.array(A.float_rows())
        self.weights_np = np.array([float(w) for w in self.weights])

    @property
    def d(self) -> int:
        return self.A.rows

    @property
    def n(self) -> int:
        return self.A.cols

    def __repr__(self):
        label = self.name or "toric"
        return f"ToricModel({label}, d={self.d}, n={self.n})"


def kl_divergence(p: Sequence, q: Sequence, check: bool = True) -> float:
    """Information divergence sum p_i log(p_i/q_i) in nats.

    Follows the conventions 0 log 0 = 0 and D = +inf when the support of p
    is not contained in the support of q.
    """
    if len(p) != len(q):
        raise DimensionMismatch("p and q have different lengths")
    pf = np.array([float(x) for x in p])
    qf = np.array([float(x) for x in q])
    if check:
        for name, v in (("p", pf), ("q", qf)):
            if abs(v.sum() - 1.0) > 1e-9 or v.min() < -1e-12:
                raise ValueError(f"{name} is not a probability vector")
    total = 0.0
    for pi, qi in zip(pf, qf):
        if pi <= 0.0:
            continue
        if qi <= 0.0:
            return math.inf
        total += pi * math.log(pi / qi)
    return total


def binomial_system(model: ToricModel) -> BinomialSystem:
    """Lattice-basis binomials cut out the model inside the open simplex.

    For a kernel row b = b+ - b-, model points satisfy
    (prod w^{b-}) p^{b+} = (prod w^{b+}) p^{b-}: the plain lattice binomial
    with the weight correction attached as coefficients.
    """
    out = []
    for row in model.kernel:
        plus = tuple(max(x, 0) for x in row)
        minus = tuple(max(-x, 0) for x in row)
        cplus = Fraction(1)
        cminus = Fraction(1)
        for w, e in zip(model.weights, minus):
            cplus *= w**e
        for w, e in zip(model.weights, plus):
            cminus *= w**e
        g = math.gcd(cplus.numerator * cminus.denominator,
                     cminus.numerator * cplus.denominator)
        common = Fraction(g, cplus.denominator * cminus.denominator)
        if common:
            cplus /= common
            cminus /= common
        out.append(Binomial(plus, minus, cplus, cminus))
    return BinomialSystem(tuple(out))


def model_point(model: ToricModel, z: Sequence) -> tuple[Fraction, ...]:
    """Normalized monomial image of a positive parameter vector, exact."""
    zf = [as_fraction(x) for x in z]
    if len(zf) != model.d:
        raise DimensionMismatch("parameter vector has wrong length")
    if any(x <= 0 for x in zf):
        raise ValueError("parameters must be positive")
    raw = []
    for j in range(model.n):
        term = model.weights[j]
        for i in range(model.d):
            e = int(model.A.entry(i, j))
            if e:
                term *= zf[i] ** e
        raw.append(term)
    Z = sum(raw)
    return tuple(x / Z for x in raw)


def _face_columns(model: ToricModel, u_exact: Sequence[Fraction]) -> list[int]:
    """Columns on the smallest face of conv(A) whose relative interior holds Au.

    Equal to the union of vertex supports of the fiber over Au; computed
    exactly so that boundary MLE support detection carries no tolerance.
    """
    b = model.A.mul_vec(u_exact)
    verts = enumerate_vertices(model.A, b)
    cols: set[int] = set()
    for v in verts:
        cols.update(v.support)
    return sorted(cols)


def _solve_interior(A: np.ndarray, logw: np.ndarray, target: np.ndarray,
                    tol: float, max_iter: int) -> tuple[np.ndarray, float]:
    """Match moments A q = target over q = softmax(logw + A^T theta).

    Multiplicative (generalized iterative scaling) warm start, then damped
    Newton on an independent row subset.  Returns (q, residual).
    """
    d, n = A.shape
    theta = np.zeros(d)

    def point(th):
        logits = logw + A.T @ th
        logits -= logits.max()
        q = np.exp(logits)
        return q / q.sum()

    def residual(q):
        return np.abs(A @ q - target).max()

    col_sum = A.sum(axis=0).max()
    scale = max(col_sum, 1.0)
    nonzero_rows = np.where(target > 0)[0]
    q = point(theta)
    res = residual(q)
    iters = 0
    # Scaling phase: cheap, globally stable.
    while res > 1e-3 and iters < min(2000, max_iter):
        m = A @ q
        upd = np.zeros(d)
        upd[nonzero_rows] = np.log(target[nonzero_rows] / m[nonzero_rows]) / scale
        theta += upd
        q = point(theta)
        res = residual(q)
        iters += 1
    # Newton phase on independent rows (the ones row is redundant given
    # normalization, so it is dropped from the linear system).
    At = RationalMatrix.from_rows(
        [[int(round(A[i, j])) for i in range(d)] for j in range(n)]
    )
    _, pivot_rows, _ = rref(At)
    rows = [r for r in pivot_rows if r != 0]
    An = A[rows]
    tn = target[rows]
    newton_left = max_iter - iters
    for _ in range(200):
        if res < tol or newton_left <= 0:
            break
        m = An @ q
        g = m - tn
        cov = An @ (np.diag(q) - np.outer(q, q)) @ An.T
        try:
            step = np.linalg.solve(cov + 1e-300 * np.eye(len(rows)), -g)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(cov, -g, rcond=None)
        alpha = 1.0
        improved = False
        for _ in range(50):
            trial = theta.copy()
            trial[rows] += alpha * step
            qt = point(trial)
            if residual(qt) < res:
                theta, q, res = trial, qt, residual(qt)
                improved = True
                break
            alpha /= 2
        newton_left -= 1
        if not improved:
            break
    # Final scaling mop-up if Newton stalled short of tolerance.
    while res > tol and iters < max_iter:
        m = A @ q
        upd = np.zeros(d)
        upd[nonzero_rows] = np.log(target[nonzero_rows] / m[nonzero_rows]) / scale
        theta += upd
        q = point(theta)
        res = residual(q)
        iters += 1
    return q, res


def mle(model: ToricModel, u: Sequence, tol: float = 1e-12,
        max_iter: int = 100_000, assume_interior: bool = False) -> np.ndarray:
    """Maximum likelihood estimate of u: the model point q with A q = A u.

    Data whose moment vector lies on the boundary of conv(A) is delegated to
    the face submodel: the solver restricts to the columns on the smallest
    face holding A u and recurses, filling zeros elsewhere.
    """
    uf = np.array([float(x) for x in u], dtype=float)
    if len(uf) != model.n:
        raise DimensionMismatch("data vector has wrong length")
    if abs(uf.sum() - 1.0) > 1e-9 or uf.min() < -1e-12:
        raise ValueError("u is not a probability vector")
    cols = list(range(model.n))
    if not assume_interior and (uf <= 0).any():
        cols = _face_columns(model, [_exact(x) for x in u])
    A = model.A_np[:, cols]
    logw = np.log(model.weights_np[cols])
    target = A @ uf[cols]
    # Drop rows that vanish identically on the face (their targets are 0 too).
    keep = [i for i in range(model.d) if i == 0 or np.abs(A[i]).max() > 0]
    q_face, res = _solve_interior(A[keep], logw, target[keep], tol, max_iter)
    if res > tol:
        raise NoConvergence(res)
    q = np.zeros(model.n)
    q[cols] = q_face
    return q


def block_divergence(blocks: Sequence[ToricModel],
                     values: Sequence[float] | None = None) -> tuple[float, int]:
    """Maximum divergence of a block-diagonal model: max over the blocks.

    ``values`` supplies per-block divergences when known in closed form;
    otherwise each block is maximized with the chamber pipeline.
    """
    if not blocks:
        raise ValueError("no blocks")
    if values is None:
        from .maximize import maximize_model

        values = [maximize_model(b).value for b in blocks]
    if len(values) != len(blocks):
        raise ValueError("one value per block required")
    best = max(range(len(blocks)), key=lambda i: values[i])
    return float(values[best]), best
