"""Chamber complex of a point configuration via exact hyperplane arrangements.

The chamber complex stratifies conv(A) so that the combinatorial type of the
fiber Q_b is constant on the relative interior of each chamber.  It is built
as the cell complex, inside conv(A), of the arrangement of all hyperplanes
spanned by (d-1)-subsets of columns: facet hyperplanes of every candidate
simplex conv(A_sigma) live in this family, so the arrangement refines all
simplices at once.  Everything is exact: cells are identified by sign
vectors, samples are vertex barycenters, and cell walks use rational
perturbations bounded by the first hyperplane crossing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cmp_to_key
from itertools import combinations
from typing import Iterable, Sequence

from .exactlin import (
    RationalMatrix,
    as_fraction,
    kernel_basis,
    rank,
    rref,
)
from .polytope import (
    ComplementaryPair,
    VoronoiPolytope,
    fiber_supports_batch,
)

__all__ = [
    "Chamber",
    "ChamberComplex",
    "DimensionTooLarge",
    "enumerate_chambers",
    "prune_boundary",
    "prune_dimension",
    "prune_facet_pair",
    "prune_monotone",
    "cell_volume",
    "hull_volume",
]


class DimensionTooLarge(ValueError):
    """conv(A) has higher dimension than the arrangement builder supports."""


Hyperplane = tuple[tuple[int, ...], int]  # (integer normal, integer offset)


@dataclass
class Chamber:
    id: int
    dim: int
    vertices: tuple[tuple[Fraction, ...], ...]  # full b-vectors (leading 1)
    sample: tuple[Fraction, ...]  # full b-vector, relative-interior point
    sign_vector: tuple[int, ...]
    sigma_list: tuple[tuple[int, ...], ...] = ()
    has_disjoint_pair: bool = False
    on_hull_boundary: bool = False


@dataclass
class ChamberComplex:
    A: RationalMatrix
    chambers: list[Chamber]
    f_vector: tuple[int, ...]
    hyperplanes: list[Hyperplane]
    facet_orientations: dict[int, int]  # hyperplane index -> sign of inside
    is_simplicial_all_vertices: bool = False

    def chambers_of_dim(self, k: int) -> list[Chamber]:
        return [c for c in self.chambers if c.dim == k]

    def faces_of(self, chamber: Chamber) -> list[Chamber]:
        """Strictly lower-dimensional chambers in the closure of ``chamber``."""
        out = []
        for c in self.chambers:
            if c.dim >= chamber.dim:
                continue
            if all(
                s in (0, t)
                for s, t in zip(c.sign_vector, chamber.sign_vector)
            ):
                out.append(c)
        return out

    def locate(self, b: Sequence) -> Chamber:
        """The chamber whose relative interior contains the point b."""
        bfull = tuple(as_fraction(x) for x in b)
        z = bfull[1:]
        sig = tuple(_sign_at(h, z) for h in self.hyperplanes)
        for idx, orient in self.facet_orientations.items():
            if sig[idx] not in (0, orient):
                raise ValueError("point lies outside conv(A)")
        for c in self.chambers:
            if c.sign_vector == sig:
                return c
        raise ValueError("point not matched to any chamber")


def _dot(a: Sequence[int], z: Sequence[Fraction]) -> Fraction:
    return sum((Fraction(ai) * zi for ai, zi in zip(a, z)), Fraction(0))


def _sign_at(h: Hyperplane, z: Sequence[Fraction]) -> int:
    v = _dot(h[0], z) - h[1]
    return (v > 0) - (v < 0)


def _canonical_hyperplane(a: Sequence[Fraction], c: Fraction) -> Hyperplane:
    from math import gcd

    denom = c.denominator
    for x in a:
        denom = denom * x.denominator // gcd(denom, x.denominator)
    ints = [int(x * denom) for x in a]
    c_int = int(c * denom)
    g = abs(c_int)
    for x in ints:
        g = gcd(g, abs(x))
    if g:
        ints = [x // g for x in ints]
        c_int //= g
    lead = next(x for x in ints if x != 0)
    if lead < 0:
        ints = [-x for x in ints]
        c_int = -c_int
    return tuple(ints), c_int


def _hyperplane_through(points: Sequence[tuple[Fraction, ...]]) -> Hyperplane | None:
    """Hyperplane spanned by D affinely independent points, or None."""
    D = len(points[0])
    if D == 1:
        return _canonical_hyperplane((Fraction(1),), points[0][0])
    diffs = [
        [p[j] - points[0][j] for j in range(D)] for p in points[1:]
    ]
    ker = kernel_basis(RationalMatrix.from_rows(diffs))
    if len(ker) != 1:
        return None  # affinely dependent
    a = [Fraction(x) for x in ker[0]]
    return _canonical_hyperplane(a, _dot(ker[0], points[0]))


def _solve_intersection(
    hs: Sequence[Hyperplane],
) -> tuple[Fraction, ...] | None:
    """Unique common point of D hyperplanes in dimension D, if it exists."""
    from .exactlin import SingularMatrix, solve_square

    M = RationalMatrix.from_rows([h[0] for h in hs])
    try:
        return solve_square(M, [h[1] for h in hs])
    except SingularMatrix:
        return None


def _perturbation_eps(
    p: Sequence[Fraction], u: Sequence[Fraction], hyperplanes: Sequence[Hyperplane]
) -> Fraction:
    """Half the parameter of the first hyperplane crossing from p along u."""
    best: Fraction | None = None
    for a, c in hyperplanes:
        den = _dot(a, u)
        if den == 0:
            continue
        t = (Fraction(c) - _dot(a, p)) / den
        if t != 0:
            t = abs(t)
            if best is None or t < best:
                best = t
    return best / 2 if best is not None else Fraction(1)


def enumerate_chambers(
    A: RationalMatrix | Iterable, max_ambient_dim: int = 3,
    with_sigma: bool = True,
) -> ChamberComplex:
    """Build the full chamber complex of the configuration of columns of A.

    Requires the first row of A to be all ones and rank(A) = d; the ambient
    dimension d-1 is capped (chamber counts explode beyond desk scale).
    """
    if not isinstance(A, RationalMatrix):
        A = RationalMatrix.from_rows(A)
    d, n = A.rows, A.cols
    if any(x != 1 for x in A.row(0)):
        raise ValueError("first row of A must be all ones")
    if rank(A) != d:
        raise ValueError("A must have full row rank")
    D = d - 1
    if D > max_ambient_dim:
        raise DimensionTooLarge(
            f"conv(A) has dimension {D} > cap {max_ambient_dim}"
        )
    points = [
        tuple(A.entry(i, j) for i in range(1, d)) for j in range(n)
    ]
    if D == 0:
        sample = (Fraction(1),)
        ch = Chamber(0, 0, (sample,), sample, (), on_hull_boundary=False)
        cc = ChamberComplex(A, [ch], (1,), [], {})
        if with_sigma:
            _attach_sigma_data(cc)
        return cc

    unique_points = sorted(set(points))

    # All hyperplanes spanned by affinely independent (d-1)-subsets.
    hset: set[Hyperplane] = set()
    for subset in combinations(unique_points, D):
        h = _hyperplane_through(subset)
        if h is not None:
            hset.add(h)
    hyperplanes = sorted(hset)
    hindex = {h: i for i, h in enumerate(hyperplanes)}

    # Hull facets: spanned hyperplanes with every column on one side.
    facet_orientations: dict[int, int] = {}
    for h, idx in hindex.items():
        vals = [_dot(h[0], p) - h[1] for p in points]
        if all(v >= 0 for v in vals) and any(v > 0 for v in vals):
            facet_orientations[idx] = 1
        elif all(v <= 0 for v in vals) and any(v < 0 for v in vals):
            facet_orientations[idx] = -1

    def inside_hull(sig: Sequence[int]) -> bool:
        return all(
            sig[idx] in (0, orient)
            for idx, orient in facet_orientations.items()
        )

    def signature(z: Sequence[Fraction]) -> tuple[int, ...]:
        return tuple(_sign_at(h, z) for h in hyperplanes)

    # 0-cells: D-wise hyperplane intersections inside the hull.
    vertex_set: set[tuple[Fraction, ...]] = set()
    if D == 1:
        candidates = [(Fraction(h[1], h[0][0]),) for h in hyperplanes]
        for z in candidates:
            if inside_hull(signature(z)):
                vertex_set.add(z)
    else:
        for subset in combinations(hyperplanes, D):
            z = _solve_intersection(subset)
            if z is not None and inside_hull(signature(z)):
                vertex_set.add(z)
    vertices = sorted(vertex_set)
    vertex_sigs = {z: signature(z) for z in vertices}

    cells: dict[tuple[int, ...], dict] = {}
    for z in vertices:
        cells[vertex_sigs[z]] = {"dim": 0, "sample": z}

    # Flats of each intermediate dimension, canonically deduplicated.
    flats_by_dim: dict[int, list[dict]] = {}
    for k in range(1, D):
        found: dict[tuple, dict] = {}
        for subset in combinations(hyperplanes, D - k):
            M = RationalMatrix.from_rows(
                [list(h[0]) + [h[1]] for h in subset]
            )
            R, pivots, rk = rref(M)
            if rk != D - k or (D in pivots):
                continue  # wrong rank or inconsistent
            key = tuple(R.row(i) for i in range(rk))
            if key in found:
                continue
            normals = RationalMatrix.from_rows([h[0] for h in subset])
            found[key] = {
                "rows": [R.row(i) for i in range(rk)],
                "dirs": kernel_basis(normals),
            }
        flats_by_dim[k] = list(found.values())

    def flat_contains(flat: dict, z: Sequence[Fraction]) -> bool:
        return all(
            _dot(row[:-1], z) == row[-1] for row in flat["rows"]
        )

    identity_dirs = [
        tuple(1 if i == j else 0 for j in range(D)) for i in range(D)
    ]
    whole_space = {"rows": [], "dirs": identity_dirs}

    for k in range(1, D + 1):
        flats = flats_by_dim.get(k, []) if k < D else [whole_space]
        lower = [rec for rec in cells.values() if rec["dim"] == k - 1]
        for rec in lower:
            p = rec["sample"]
            psig = cells_key = None
            psig = signature(p)
            zero_normals = [
                hyperplanes[i][0] for i, s in enumerate(psig) if s == 0
            ]
            for flat in flats:
                if flat["rows"] and not flat_contains(flat, p):
                    continue
                u = None
                for cand in flat["dirs"]:
                    if any(_dot(a, cand) != 0 for a in zero_normals):
                        u = cand
                        break
                if u is None:
                    continue
                eps = _perturbation_eps(p, u, hyperplanes)
                for sgn in (1, -1):
                    q = tuple(
                        pi + sgn * eps * Fraction(ui) for pi, ui in zip(p, u)
                    )
                    qsig = signature(q)
                    if qsig in cells or not inside_hull(qsig):
                        continue
                    zeros = [
                        hyperplanes[i][0]
                        for i, s in enumerate(qsig)
                        if s == 0
                    ]
                    dim = D - (rank(RationalMatrix.from_rows(zeros)) if zeros else 0)
                    cells[qsig] = {"dim": dim, "sample": q}

    # Assemble chambers: vertices by weak sign conformance, barycenter sample.
    chamber_list: list[Chamber] = []
    records = sorted(cells.items(), key=lambda kv: (kv[1]["dim"], kv[0]))
    for cid, (sig, rec) in enumerate(records):
        cell_vertices = [
            z
            for z in vertices
            if all(s in (0, t) for s, t in zip(vertex_sigs[z], sig))
        ]
        count = len(cell_vertices)
        bary = tuple(
            sum((z[j] for z in cell_vertices), Fraction(0)) / count
            for j in range(D)
        )
        assert signature(bary) == sig, "barycenter left its cell"
        on_boundary = any(
            sig[idx] == 0 for idx in facet_orientations
        )
        chamber_list.append(
            Chamber(
                id=cid,
                dim=rec["dim"],
                vertices=tuple((Fraction(1),) + z for z in cell_vertices),
                sample=(Fraction(1),) + bary,
                sign_vector=sig,
                on_hull_boundary=on_boundary,
            )
        )

    max_dim = max(c.dim for c in chamber_list)
    f_vector = tuple(
        sum(1 for c in chamber_list if c.dim == k) for k in range(max_dim + 1)
    )

    # Simpliciality of conv(A) with every column a hull vertex (Prop-style
    # boundary pruning needs this hypothesis).
    simplicial = True
    for idx, orient in facet_orientations.items():
        h = hyperplanes[idx]
        on_facet = [p for p in unique_points if _dot(h[0], p) == h[1]]
        if len(on_facet) != D:
            simplicial = False
            break
    if simplicial:
        for p in unique_points:
            through = [
                hyperplanes[idx][0]
                for idx in facet_orientations
                if _dot(hyperplanes[idx][0], p) == hyperplanes[idx][1]
            ]
            if not through or rank(RationalMatrix.from_rows(through)) < D:
                simplicial = False  # a column interior to the hull or a facet
                break

    cc = ChamberComplex(
        A, chamber_list, f_vector, hyperplanes, facet_orientations,
        is_simplicial_all_vertices=simplicial,
    )
    if with_sigma:
        _attach_sigma_data(cc)
    return cc


def _attach_sigma_data(cc: ChamberComplex) -> None:
    """Fill each chamber's fiber vertex supports and disjoint-pair flag."""
    samples = [c.sample for c in cc.chambers]
    supports = fiber_supports_batch(cc.A, samples)
    for c, supp in zip(cc.chambers, supports):
        c.sigma_list = supp
        sets = [frozenset(s) for s in supp]
        c.has_disjoint_pair = any(
            not (s & t)
            for i, s in enumerate(sets)
            for t in sets[i + 1 :]
        )


# ---------------------------------------------------------------------------
# Pruning predicates.
# ---------------------------------------------------------------------------


def prune_boundary(chamber: Chamber, cc: ChamberComplex) -> bool:
    """Skip chambers whose fibers live in the simplex boundary.

    Chambers inside the boundary of conv(A) never contribute maximizers.
    When conv(A) is simplicial with all columns vertices, chambers whose
    closure touches the boundary are also out: their fiber vertex supports
    share the boundary columns.
    """
    if chamber.on_hull_boundary:
        return True
    if cc.is_simplicial_all_vertices:
        for idx in cc.facet_orientations:
            for v in chamber.vertices:
                z = v[1:]
                h = cc.hyperplanes[idx]
                if _dot(h[0], z) == h[1]:
                    return True
    return False


def prune_dimension(chamber: Chamber, n: int) -> bool:
    """Fibers over chambers of dimension k need 2(k+1) <= n for disjoint supports."""
    return 2 * (chamber.dim + 1) > n


def prune_facet_pair(pair: ComplementaryPair, P: VoronoiPolytope) -> bool:
    """True when the vertex and its complementary face share a proper face.

    Implemented as the support closure of their union being a proper face of
    Q_b; with complementary supports the union covers every coordinate, so
    this can only fire on degenerate fibers.
    """
    union = set(P.vertices[pair.vertex_index].support) | set(pair.face.support)
    members = [
        i
        for i, v in enumerate(P.vertices)
        if set(v.support) <= union
    ]
    return len(members) < len(P.vertices)


def prune_monotone(chamber: Chamber, cc: ChamberComplex) -> bool:
    """Skip chambers one of whose faces already has no disjoint-support pair.

    Valid because every fiber vertex support over the big chamber contains a
    support from each face chamber; requires face flags to be available,
    which ``enumerate_chambers`` guarantees.
    """
    for face in cc.faces_of(chamber):
        if not face.has_disjoint_pair:
            return True
    return False


# ---------------------------------------------------------------------------
# Exact volumes (used by consistency checks).
# ---------------------------------------------------------------------------


def _sort_cyclic_2d(points: list[tuple[Fraction, Fraction]]):
    n = len(points)
    cx = sum((p[0] for p in points), Fraction(0)) / n
    cy = sum((p[1] for p in points), Fraction(0)) / n

    def half(v):
        return 0 if (v[1] > 0 or (v[1] == 0 and v[0] > 0)) else 1

    def compare(p, q):
        vp = (p[0] - cx, p[1] - cy)
        vq = (q[0] - cx, q[1] - cy)
        hp, hq = half(vp), half(vq)
        if hp != hq:
            return -1 if hp < hq else 1
        cross = vp[0] * vq[1] - vp[1] * vq[0]
        return 0 if cross == 0 else (-1 if cross > 0 else 1)

    return sorted(points, key=cmp_to_key(compare))


def _polygon_area(points: list[tuple[Fraction, Fraction]]) -> Fraction:
    ordered = _sort_cyclic_2d(points)
    total = Fraction(0)
    for i in range(len(ordered)):
        x1, y1 = ordered[i]
        x2, y2 = ordered[(i + 1) % len(ordered)]
        total += x1 * y2 - x2 * y1
    return abs(total) / 2


def _project_to_plane(points, normal):
    """2D coordinates of coplanar 3D points in an exact basis of their plane."""
    ker = kernel_basis(RationalMatrix.from_rows([list(normal)]))
    u, v = ker[0], ker[1]
    return [
        (_dot(u, p), _dot(v, p))
        for p in points
    ], (u, v)


def cell_volume(cc: ChamberComplex, chamber: Chamber) -> Fraction:
    """Exact Euclidean volume of a top-dimensional chamber."""
    D = cc.A.rows - 1
    zs = [v[1:] for v in chamber.vertices]
    if chamber.dim != D:
        raise ValueError("volume only defined for top-dimensional chambers")
    if D == 1:
        vals = [z[0] for z in zs]
        return max(vals) - min(vals)
    if D == 2:
        return _polygon_area(zs)
    if D == 3:
        bary = tuple(
            sum((z[j] for z in zs), Fraction(0)) / len(zs) for j in range(3)
        )
        total = Fraction(0)
        for face in cc.faces_of(chamber):
            if face.dim != 2:
                continue
            zero_idx = next(
                i
                for i, s in enumerate(face.sign_vector)
                if s == 0 and chamber.sign_vector[i] != 0
            )
            normal = cc.hyperplanes[zero_idx][0]
            pts3 = [v[1:] for v in face.vertices]
            pts2, (u, v) = _project_to_plane(pts3, normal)
            ordered2 = _sort_cyclic_2d(pts2)
            order = {p: i for i, p in enumerate(ordered2)}
            pts3_sorted = sorted(
                pts3, key=lambda p: order[(_dot(u, p), _dot(v, p))]
            )
            p0 = pts3_sorted[0]
            for i in range(1, len(pts3_sorted) - 1):
                m = RationalMatrix.from_rows(
                    [
                        [a - b for a, b in zip(pt, bary)]
                        for pt in (p0, pts3_sorted[i], pts3_sorted[i + 1])
                    ]
                )
                det = (
                    m.entry(0, 0) * (m.entry(1, 1) * m.entry(2, 2) - m.entry(1, 2) * m.entry(2, 1))
                    - m.entry(0, 1) * (m.entry(1, 0) * m.entry(2, 2) - m.entry(1, 2) * m.entry(2, 0))
                    + m.entry(0, 2) * (m.entry(1, 0) * m.entry(2, 1) - m.entry(1, 1) * m.entry(2, 0))
                )
                total += abs(det)
        return total / 6
    raise DimensionTooLarge(f"no exact volume in dimension {D}")


def hull_volume(cc: ChamberComplex) -> Fraction:
    """Exact volume of conv(A): the sum over top-dimensional chambers."""
    D = cc.A.rows - 1
    return sum(
        (cell_volume(cc, c) for c in cc.chambers_of_dim(D)), Fraction(0)
    )
