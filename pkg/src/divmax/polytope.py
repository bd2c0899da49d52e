"""Fiber polytopes of toric models and co-circuit machinery for linear models.

The central object is the fiber Q_b = {p in the simplex : A p = b}, whose
points all share one maximum likelihood estimate.  Vertices are basic
feasible solutions over exact rationals; faces are recovered purely
combinatorially from vertex supports, since every face of Q_b is cut out by
coordinate hyperplanes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .exactlin import (
    RationalMatrix,
    SingularMatrix,
    as_fraction,
    kernel_basis,
    rank,
    solve_square,
)

__all__ = [
    "Vertex",
    "Face",
    "VoronoiPolytope",
    "ComplementaryPair",
    "Cocircuit",
    "InfeasibleFiber",
    "EmptyModel",
    "enumerate_vertices",
    "enumerate_vertices_bruteforce",
    "fiber_supports_batch",
    "voronoi_polytope",
    "face_closure",
    "complementary_face",
    "complementary_pairs",
    "cocircuits",
    "linear_model_vertices",
]


class InfeasibleFiber(ValueError):
    """No nonnegative point satisfies A p = b."""


class EmptyModel(ValueError):
    """The linear model polytope has no points."""


@dataclass(frozen=True)
class Vertex:
    """Fiber vertex with exact coordinates and its support."""

    coords: tuple[Fraction, ...]
    support: tuple[int, ...]

    def float_coords(self) -> np.ndarray:
        return np.array([float(x) for x in self.coords])


@dataclass(frozen=True)
class Face:
    """A face of a fiber polytope, identified by support and vertex set."""

    support: tuple[int, ...]
    vertex_indices: tuple[int, ...]


@dataclass(frozen=True)
class ComplementaryPair:
    vertex_index: int
    face: Face


@dataclass(frozen=True)
class Cocircuit:
    """Minimal-support left-kernel vector of B, normalized so <z, c> = 1."""

    z: tuple[Fraction, ...]


@dataclass
class VoronoiPolytope:
    A: RationalMatrix
    b: tuple[Fraction, ...]
    vertices: list[Vertex]
    faces: list[Face] = field(default_factory=list)
    closure_capped: bool = False


def _as_fraction_vector(v: Sequence) -> tuple[Fraction, ...]:
    return tuple(as_fraction(x) for x in v)


def _solve_feasible_exact(A: RationalMatrix, sigma, b):
    """Exact basic solution for column set sigma, or None if infeasible."""
    sub = A.submatrix_columns(sigma)
    try:
        x = solve_square(sub, b)
    except SingularMatrix:
        return None
    if any(xi < 0 for xi in x):
        return None
    coords = [Fraction(0)] * A.cols
    for j, col in enumerate(sigma):
        coords[col] = x[j]
    return tuple(coords)


def enumerate_vertices_bruteforce(A: RationalMatrix, b) -> list[Vertex]:
    """Reference oracle: try every d-subset of columns, exact arithmetic only."""
    b = _as_fraction_vector(b)
    d, n = A.rows, A.cols
    seen: dict[tuple, Vertex] = {}
    for sigma in combinations(range(n), d):
        coords = _solve_feasible_exact(A, sigma, b)
        if coords is None:
            continue
        support = tuple(i for i, x in enumerate(coords) if x != 0)
        seen.setdefault(coords, Vertex(coords, support))
    return sorted(seen.values(), key=lambda v: v.coords)


def enumerate_vertices(A: RationalMatrix, b, strict: bool = True) -> list[Vertex]:
    """All vertices of the fiber Q_b = {p >= 0 : A p = b}, exactly.

    Vertices are basic feasible solutions; every invertible d-subset of
    columns is tried, with a float prescreen that only ever rejects subsets
    whose solution is clearly negative.  Accepted subsets are re-solved
    exactly, so returned coordinates satisfy A v = b with no tolerance.

    Raises InfeasibleFiber when the fiber is empty and ``strict`` is set.
    """
    b = _as_fraction_vector(b)
    d, n = A.rows, A.cols
    if len(b) != d:
        raise ValueError("b has wrong length")
    Af = np.array(A.float_rows())
    bf = np.array([float(x) for x in b])
    seen: dict[tuple, Vertex] = {}
    for sigma in combinations(range(n), d):
        M = Af[:, sigma]
        exact_needed = True
        try:
            x = np.linalg.solve(M, bf)
            condition = np.linalg.cond(M)
            if np.isfinite(condition) and condition < 1e8:
                margin = max(1e-10, condition * 1e-13 * (1.0 + np.abs(bf).max()))
                if x.min() < -margin:
                    exact_needed = False  # clearly infeasible
        except np.linalg.LinAlgError:
            pass
        if not exact_needed:
            continue
        coords = _solve_feasible_exact(A, sigma, b)
        if coords is None:
            continue
        support = tuple(i for i, xx in enumerate(coords) if xx != 0)
        seen.setdefault(coords, Vertex(coords, support))
    out = sorted(seen.values(), key=lambda v: v.coords)
    if strict and not out:
        raise InfeasibleFiber(f"fiber over b={tuple(map(str, b))} is empty")
    return out


def fiber_supports_batch(
    A: RationalMatrix, b_list: Sequence[Sequence[Fraction]]
) -> list[tuple[tuple[int, ...], ...]]:
    """Vertex supports of Q_b for many b at once.

    Shares the per-column-set inverses across all fibers: each invertible
    d-subset is inverted exactly once, candidate solutions are screened in
    floating point, and every accepted or borderline column is confirmed by
    an exact rational solve.  Only clear infeasibility is trusted to floats.
    """
    from .exactlin import inverse

    d, n = A.rows, A.cols
    m = len(b_list)
    B_exact = [_as_fraction_vector(b) for b in b_list]
    Bf = np.array([[float(x) for x in b] for b in B_exact]).T  # d x m
    out: list[set[tuple[int, ...]]] = [set() for _ in range(m)]
    for sigma in combinations(range(n), d):
        sub = A.submatrix_columns(sigma)
        try:
            inv = inverse(sub)
        except SingularMatrix:
            continue
        inv_rows = inv.row_list()
        inv_f = np.array([[float(x) for x in row] for row in inv_rows])
        X = inv_f @ Bf
        margin = max(np.abs(inv_f).max(), 1.0) * 1e-11 + 1e-12
        scale = np.abs(Bf).max(axis=0) + 1.0
        mins = X.min(axis=0)
        for k in range(m):
            if mins[k] < -margin * scale[k]:
                continue
            x = tuple(
                sum((inv_rows[i][j] * B_exact[k][j] for j in range(d)), Fraction(0))
                for i in range(d)
            )
            if any(xi < 0 for xi in x):
                continue
            support = tuple(
                sorted(sigma[i] for i in range(d) if x[i] != 0)
            )
            out[k].add(support)
    return [tuple(sorted(s)) for s in out]


def face_closure(
    P: VoronoiPolytope, max_faces: int = 4096, seed_size: int = 3
) -> list[Face]:
    """All faces of Q_b as support-closed vertex subsets.

    Every face is Q_b intersected with coordinate hyperplanes, so its vertex
    set is { w : supp(w) inside S } for S the face support.  Closures of all
    small vertex subsets are generated, then closed under pairwise unions to
    a fixed point.  If ``max_faces`` is hit the list is truncated and the
    polytope is flagged (``closure_capped``).
    """
    verts = P.vertices
    supports = [frozenset(v.support) for v in verts]

    def close(support_union: frozenset) -> tuple[tuple[int, ...], tuple[int, ...]]:
        members = tuple(
            i for i, s in enumerate(supports) if s <= support_union
        )
        supp = frozenset().union(*(supports[i] for i in members)) if members else frozenset()
        return tuple(sorted(supp)), members

    found: dict[tuple[int, ...], Face] = {}
    capped = False

    def add(support_union: frozenset) -> None:
        nonlocal capped
        if len(found) >= max_faces:
            capped = True
            return
        supp, members = close(support_union)
        if members and members not in found:
            found[members] = Face(supp, members)

    k = min(seed_size, len(verts))
    for size in range(1, k + 1):
        for subset in combinations(range(len(verts)), size):
            add(frozenset().union(*(supports[i] for i in subset)))
            if capped:
                break
    # Close under pairwise unions.
    changed = True
    while changed and not capped:
        changed = False
        current = list(found.values())
        for f1, f2 in combinations(current, 2):
            before = len(found)
            add(frozenset(f1.support) | frozenset(f2.support))
            if len(found) != before:
                changed = True
            if capped:
                break
    faces = sorted(found.values(), key=lambda f: (len(f.vertex_indices), f.vertex_indices))
    P.faces = faces
    P.closure_capped = capped
    return faces


def complementary_face(P: VoronoiPolytope, vertex_index: int) -> Face | None:
    """The unique face with support complementary to the given vertex, if any."""
    n = P.A.cols
    supports = [frozenset(v.support) for v in P.vertices]
    target = frozenset(range(n)) - supports[vertex_index]
    members = tuple(i for i, s in enumerate(supports) if s <= target)
    if not members:
        return None
    covered = frozenset().union(*(supports[i] for i in members))
    if covered != target:
        return None
    return Face(tuple(sorted(target)), members)


def complementary_pairs(P: VoronoiPolytope) -> list[ComplementaryPair]:
    """All (vertex, face) pairs with supp(F) the complement of supp(v).

    Vertex-vertex pairs appear in both orientations here; callers that solve
    the associated systems deduplicate to a single orientation.
    """
    pairs = []
    for i in range(len(P.vertices)):
        face = complementary_face(P, i)
        if face is not None:
            pairs.append(ComplementaryPair(i, face))
    return pairs


def voronoi_polytope(A: RationalMatrix, b, with_faces: bool = True) -> VoronoiPolytope:
    b = _as_fraction_vector(b)
    P = VoronoiPolytope(A, b, enumerate_vertices(A, b))
    if with_faces:
        face_closure(P)
    return P


# ---------------------------------------------------------------------------
# Linear models: co-circuits and model polytope vertices.
# ---------------------------------------------------------------------------


def _circuit_vector(Bt: RationalMatrix, subset) -> tuple[Fraction, ...] | None:
    """Dependency with full support on ``subset`` among the rows of B, or None.

    Bt is B transposed (d x n); a circuit on ``subset`` exists when those rows
    have a one-dimensional kernel whose vector has no zero entries.
    """
    sub = Bt.submatrix_columns(subset)
    ker = kernel_basis(sub)
    if len(ker) != 1:
        return None
    dep = ker[0]
    if any(x == 0 for x in dep):
        return None
    z = [Fraction(0)] * Bt.cols
    for j, idx in enumerate(subset):
        z[idx] = Fraction(dep[j])
    return tuple(z)


def cocircuits(
    B: RationalMatrix, c
) -> tuple[list[Cocircuit], list[tuple[Fraction, ...]]]:
    """Co-circuits of B normalized against c, plus unnormalizable ones.

    A co-circuit is a nonzero z of minimal support with z^T B = 0; for the
    model f(x) = c - Bx it satisfies <z, q> = <z, c> for every model point q,
    so dividing by <z, c> pins <z, q> = 1 once and for all.  Co-circuits with
    <z, c> = 0 never define simplex vertices and are returned separately.
    """
    c = _as_fraction_vector(c)
    n, d = B.rows, B.cols
    Bt = B.transpose()
    r = rank(B)
    normalized: list[Cocircuit] = []
    unnormalizable: list[tuple[Fraction, ...]] = []
    found_supports: list[frozenset] = []
    for size in range(1, r + 2):
        for subset in combinations(range(n), size):
            s = frozenset(subset)
            if any(prev <= s for prev in found_supports):
                continue
            z = _circuit_vector(Bt, subset)
            if z is None:
                continue
            found_supports.append(s)
            scale = sum(zi * ci for zi, ci in zip(z, c))
            if scale == 0:
                lead = next(x for x in z if x != 0)
                if lead < 0:
                    z = tuple(-x for x in z)
                unnormalizable.append(z)
            else:
                normalized.append(Cocircuit(tuple(zi / scale for zi in z)))
    normalized.sort(key=lambda cc: cc.z)
    return normalized, unnormalizable


def linear_model_vertices(B: RationalMatrix, c) -> list[Vertex]:
    """Vertices of the model polytope {c - Bx : c - Bx >= 0} inside the simplex."""
    c = _as_fraction_vector(c)
    n, d = B.rows, B.cols
    if d == 0:
        if any(x < 0 for x in c):
            raise EmptyModel("c has negative coordinates")
        support = tuple(i for i, x in enumerate(c) if x != 0)
        return [Vertex(c, support)]
    seen: dict[tuple, Vertex] = {}
    for subset in combinations(range(n), d):
        sub = RationalMatrix.from_rows([B.row(i) for i in subset])
        try:
            x = solve_square(sub, [c[i] for i in subset])
        except SingularMatrix:
            continue
        fx = tuple(
            c[i] - sum(B.entry(i, j) * x[j] for j in range(d)) for i in range(n)
        )
        if any(v < 0 for v in fx):
            continue
        support = tuple(i for i, v in enumerate(fx) if v != 0)
        seen.setdefault(fx, Vertex(fx, support))
    if not seen:
        raise EmptyModel("model polytope is empty")
    return sorted(seen.values(), key=lambda v: v.coords)
