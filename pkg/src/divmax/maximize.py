"""Divergence maximization over toric and linear models.

Chamber pipeline: each unpruned chamber contributes complementary
vertex/face pairs; the segment family joining them is parametrized exactly
(coordinates are products of s or 1-s with affine forms in the chamber
coordinates), substituted into the lattice binomials, and the resulting
systems are solved numerically.  Both sides of every substituted binomial
share known factors (powers of s, 1-s and coordinate forms); cancelling
them exactly saturates away the coordinate-subspace junk of the lattice
ideal, leaving the finite core systems the solver expects.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import gcd
from typing import Iterable, Sequence

import numpy as np

from .chamber import (
    Chamber,
    ChamberComplex,
    enumerate_chambers,
    prune_boundary,
    prune_dimension,
    prune_facet_pair,
    prune_monotone,
)
from .exactlin import RationalMatrix, as_fraction, rank, solve_square, inverse
from .polytope import (
    ComplementaryPair,
    EmptyModel,
    Vertex,
    VoronoiPolytope,
    cocircuits,
    complementary_pairs,
    enumerate_vertices,
    face_closure,
    linear_model_vertices,
    voronoi_polytope,
)
from .polysolve import (
    AllPathsFailed,
    PathBudgetExceeded,
    Polynomial,
    filter_real_positive,
    solve_polynomial_system,
    solve_total_degree,
)
from .toricmodel import Binomial, ToricModel, binomial_system, kl_divergence, mle

__all__ = [
    "PsiMap",
    "CandidateMaximizer",
    "MaximizationReport",
    "NotCodimensionOne",
    "build_psi",
    "is_projection_point",
    "maximize_chamber",
    "maximize_model",
    "maximize_linear",
    "codim1_divergence",
]


class NotCodimensionOne(ValueError):
    pass


# ---------------------------------------------------------------------------
# Exact multivariate polynomials as {exponent tuple: Fraction} dictionaries.
# ---------------------------------------------------------------------------

RatPoly = dict


def _p_const(c, nv: int) -> RatPoly:
    c = as_fraction(c)
    return {(0,) * nv: c} if c else {}


def _p_var(i: int, nv: int) -> RatPoly:
    e = [0] * nv
    e[i] = 1
    return {tuple(e): Fraction(1)}


def _p_add(a: RatPoly, b: RatPoly) -> RatPoly:
    out = dict(a)
    for e, c in b.items():
        s = out.get(e, Fraction(0)) + c
        if s:
            out[e] = s
        else:
            out.pop(e, None)
    return out


def _p_scale(a: RatPoly, c) -> RatPoly:
    c = as_fraction(c)
    if not c:
        return {}
    return {e: v * c for e, v in a.items()}


def _p_mul(a: RatPoly, b: RatPoly) -> RatPoly:
    out: RatPoly = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            s = out.get(e, Fraction(0)) + ca * cb
            if s:
                out[e] = s
            else:
                out.pop(e, None)
    return out


def _p_pow(a: RatPoly, k: int) -> RatPoly:
    if k == 0:
        raise ValueError("use explicit constants for zeroth powers")
    out = a
    for _ in range(k - 1):
        out = _p_mul(out, a)
    return out


def _p_eval(a: RatPoly, xs: Sequence) -> complex | float:
    total = 0.0
    for e, c in a.items():
        term = float(c)
        for x, ei in zip(xs, e):
            if ei:
                term *= x**ei
        total += term
    return total


def _p_substitute(a: RatPoly, fixed: dict[int, Fraction], nv_new: int,
                  var_map: dict[int, int]) -> RatPoly:
    """Partially evaluate variables ``fixed``; remaining ones re-indexed."""
    out: RatPoly = {}
    for e, c in a.items():
        coeff = c
        new_e = [0] * nv_new
        for i, ei in enumerate(e):
            if not ei:
                continue
            if i in fixed:
                coeff *= fixed[i] ** ei
            else:
                new_e[var_map[i]] = ei
        if coeff:
            key = tuple(new_e)
            s = out.get(key, Fraction(0)) + coeff
            if s:
                out[key] = s
            else:
                out.pop(key, None)
    return out


def _p_canonical(a: RatPoly) -> tuple:
    """Content-free, sign-normalized key for deduplicating equations."""
    if not a:
        return ()
    items = sorted(a.items())
    lead = items[0][1]
    return tuple((e, c / lead) for e, c in items)


def _p_to_polynomial(a: RatPoly, nv: int) -> Polynomial:
    return Polynomial.from_dict(nv, {e: float(c) for e, c in a.items()})


# ---------------------------------------------------------------------------
# Factored coordinates of the segment-family parametrization.
# ---------------------------------------------------------------------------


@dataclass
class _FactoredCoord:
    """constant * prod(factor^power); factors are canonical RatPoly keys."""

    constant: Fraction
    factors: tuple[tuple[tuple, int], ...]


@dataclass
class PsiMap:
    """Parametrization of segments from a vertex across its complementary face.

    Variables are laid out as (r_1..r_{m-1}, t_1..t_k, s): chamber barycentric
    coordinates with the last one eliminated, face coordinates over an
    affinely independent vertex subset, and the segment parameter.
    """

    chamber: Chamber
    pair: ComplementaryPair
    nvars: int
    n_r: int
    n_t: int
    v_polys: list[RatPoly]  # length n; the moving vertex v(b)
    w_polys: list[RatPoly]  # length n; the moving face point w(b)
    coords: list[RatPoly]  # length n; s*v + (1-s)*w
    coord_factors: list[_FactoredCoord | None]
    face_support: tuple[int, ...]
    vertex_support: tuple[int, ...]


def _affine_vertex_polys(
    A: RationalMatrix, support: Sequence[int], b_polys: list[RatPoly], nv: int
) -> list[RatPoly]:
    """Solve A_sigma x = b(r) symbolically; returns n coordinate polynomials.

    The support is extended to an invertible column basis; coordinates added
    by the extension cancel identically on the chamber's affine hull.
    """
    d, n = A.rows, A.cols
    basis = list(support)
    if len(basis) < d:
        for j in range(n):
            if j in basis:
                continue
            trial = A.submatrix_columns(basis + [j])
            if rank(trial) == len(basis) + 1:
                basis.append(j)
            if len(basis) == d:
                break
    basis.sort()
    inv = inverse(A.submatrix_columns(basis))
    coords: list[RatPoly] = [{} for _ in range(n)]
    for row_idx, col in enumerate(basis):
        poly: RatPoly = {}
        for j in range(d):
            poly = _p_add(poly, _p_scale(b_polys[j], inv.entry(row_idx, j)))
        coords[col] = poly
    for j in range(n):
        if j not in support and coords[j]:
            raise AssertionError(
                "basis-extension coordinate did not vanish on the chamber"
            )
    return coords


def _extract_factor(poly: RatPoly) -> tuple[Fraction, tuple]:
    items = sorted(poly.items())
    lead = items[0][1]
    return lead, tuple((e, c / lead) for e, c in items)


def build_psi(chamber: Chamber, pair: ComplementaryPair, model: ToricModel,
              fiber: VoronoiPolytope) -> PsiMap:
    """Exact coordinates of the family s v(b) + (1-s) w(b) over the chamber."""
    A = model.A
    d, n = A.rows, A.cols
    m = len(chamber.vertices)
    v = fiber.vertices[pair.vertex_index]
    face_members = [fiber.vertices[i] for i in pair.face.vertex_indices]

    # Affinely independent subset of the face vertices (at the sample).
    selected = [face_members[0]]
    for cand in face_members[1:]:
        diffs = [
            [c - s0 for c, s0 in zip(w.coords, selected[0].coords)]
            for w in selected[1:] + [cand]
        ]
        if not diffs or rank(RationalMatrix.from_rows(diffs)) == len(diffs):
            selected.append(cand)
    k = len(selected) - 1  # free t variables

    n_r = m - 1
    nv = n_r + k + 1
    s_index = nv - 1

    # b(r) over the chamber, with r_m eliminated.
    b_polys: list[RatPoly] = []
    for j in range(d):
        poly = _p_const(chamber.vertices[m - 1][j], nv)
        for i in range(n_r):
            delta = chamber.vertices[i][j] - chamber.vertices[m - 1][j]
            poly = _p_add(poly, _p_scale(_p_var(i, nv), delta))
        b_polys.append(poly)

    v_polys = _affine_vertex_polys(A, v.support, b_polys, nv)
    face_vertex_polys = [
        _affine_vertex_polys(A, w.support, b_polys, nv) for w in selected
    ]
    w_polys: list[RatPoly] = [{} for _ in range(n)]
    for j in range(n):
        poly: RatPoly = {}
        last = face_vertex_polys[k][j]
        poly = _p_add(poly, last)
        for i in range(k):
            t_i = _p_var(n_r + i, nv)
            diff = _p_add(face_vertex_polys[i][j], _p_scale(last, -1))
            poly = _p_add(poly, _p_mul(t_i, diff))
        w_polys[j] = poly

    s_poly = _p_var(s_index, nv)
    one_minus_s = _p_add(_p_const(1, nv), _p_scale(s_poly, -1))
    coords: list[RatPoly] = []
    coord_factors: list[_FactoredCoord | None] = []
    s_key = _extract_factor(s_poly)[1]
    oms_key = _extract_factor(one_minus_s)[1]
    for j in range(n):
        if v_polys[j]:
            coords.append(_p_mul(s_poly, v_polys[j]))
            c, key = _extract_factor(v_polys[j])
            coord_factors.append(
                _FactoredCoord(c, ((s_key, 1), (key, 1)))
            )
        elif w_polys[j]:
            coords.append(_p_mul(one_minus_s, w_polys[j]))
            c, key = _extract_factor(w_polys[j])
            coord_factors.append(
                _FactoredCoord(c, ((oms_key, 1), (key, 1)))
            )
        else:
            coords.append({})
            coord_factors.append(None)
    return PsiMap(
        chamber=chamber,
        pair=pair,
        nvars=nv,
        n_r=n_r,
        n_t=k,
        v_polys=v_polys,
        w_polys=w_polys,
        coords=coords,
        coord_factors=coord_factors,
        face_support=pair.face.support,
        vertex_support=v.support,
    )


def _substituted_core_system(
    psi: PsiMap, binomials: Sequence[Binomial]
) -> tuple[list[RatPoly], dict]:
    """Substitute the parametrization into the binomials and cancel the
    factors shared by both monomials (exact saturation against the junk
    components supported on coordinate subspaces)."""
    key_to_poly: dict[tuple, RatPoly] = {}

    def side(coef: Fraction, exps: Sequence[int]):
        constant = coef
        factor_count: dict[tuple, int] = {}
        for j, e in enumerate(exps):
            if not e:
                continue
            fc = psi.coord_factors[j]
            if fc is None:
                return None  # a coordinate is identically zero: side vanishes
            constant *= fc.constant**e
            for key, power in fc.factors:
                factor_count[key] = factor_count.get(key, 0) + power * e
                key_to_poly.setdefault(
                    key, {e2: c for e2, c in key}
                )
        return constant, factor_count

    cores: list[RatPoly] = []
    info = {"identically_zero": 0}
    for b in binomials:
        plus = side(b.plus_coefficient, b.plus_exponents)
        minus = side(b.minus_coefficient, b.minus_exponents)
        nv = psi.nvars
        if plus is None and minus is None:
            continue
        if plus is None or minus is None:
            c, fc = plus if plus is not None else minus
            poly = _p_const(c, nv)
            for key, power in fc.items():
                poly = _p_mul(poly, _p_pow(key_to_poly[key], power))
            cores.append(poly)
            continue
        (cp, fp), (cm, fm) = plus, minus
        common = {
            key: min(fp.get(key, 0), fm.get(key, 0))
            for key in set(fp) | set(fm)
        }
        poly_p = _p_const(cp, nv)
        for key, power in fp.items():
            rem = power - common.get(key, 0)
            if rem:
                poly_p = _p_mul(poly_p, _p_pow(key_to_poly[key], rem))
        poly_m = _p_const(cm, nv)
        for key, power in fm.items():
            rem = power - common.get(key, 0)
            if rem:
                poly_m = _p_mul(poly_m, _p_pow(key_to_poly[key], rem))
        core = _p_add(poly_p, _p_scale(poly_m, -1))
        if not core:
            info["identically_zero"] += 1
            continue
        cores.append(core)
    # Deduplicate equations agreeing up to scale.
    seen = {}
    for core in cores:
        seen.setdefault(_p_canonical(core), core)
    return list(seen.values()), info


@dataclass
class CandidateMaximizer:
    p: np.ndarray
    q: np.ndarray
    divergence: float
    chamber_id: int
    pair_index: int
    kind: str  # "isolated" | "curve-sampled"
    support: tuple[int, ...]
    params: dict = field(default_factory=dict)


@dataclass
class MaximizationReport:
    value: float
    maximizers: list[CandidateMaximizer]
    candidates: list[CandidateMaximizer]
    log: list[dict]
    warnings: list[str]
    model_name: str = ""
    seed: int = 0


@dataclass
class _PairConfig:
    seed: int = 0
    r_samples: int = 33
    max_samples: int = 1500
    max_paths: int = 4000
    boundary_tol: float = 1e-9


def _candidates_from_solution(
    model: ToricModel,
    psi: PsiMap,
    x: np.ndarray,
    chamber_id: int,
    pair_index: int,
    kind: str,
    warnings: list[str],
    fixed_note: dict | None = None,
) -> list[CandidateMaximizer]:
    tol = 1e-9
    n_r, n_t = psi.n_r, psi.n_t
    rvals = x[:n_r]
    sval = x[-1]
    if n_r and 1.0 - rvals.sum() <= tol:
        return []
    if not (tol < sval < 1.0 - tol):
        return []
    coords = np.array([_p_eval(c, x) for c in psi.coords], dtype=float)
    if coords.min() < -1e-10:
        return []
    # The face point must sit in the relative interior of the face.
    w_coords = np.array([_p_eval(w, x) for w in psi.w_polys], dtype=float)
    if any(w_coords[j] <= tol for j in psi.face_support):
        return []
    q = coords / coords.sum()
    v_coords = np.array([_p_eval(v, x) for v in psi.v_polys], dtype=float)
    out = []
    p_v = np.maximum(v_coords, 0.0)
    p_v /= p_v.sum()
    params = {"r": [float(v) for v in rvals], "s": float(sval)}
    if fixed_note:
        params.update(fixed_note)
    q_birch = None
    try:
        q_birch = mle(model, p_v, assume_interior=True)
    except Exception:
        warnings.append(
            f"chamber {chamber_id} pair {pair_index}: Birch cross-check solve failed"
        )
    if q_birch is not None and np.abs(q - q_birch).max() > 1e-8:
        warnings.append(
            f"chamber {chamber_id} pair {pair_index}: MLE witnesses disagree "
            f"by {np.abs(q - q_birch).max():.2e}"
        )
    out.append(
        CandidateMaximizer(
            p=p_v, q=q, divergence=kl_divergence(p_v, q, check=False),
            chamber_id=chamber_id, pair_index=pair_index, kind=kind,
            support=psi.vertex_support, params=params,
        )
    )
    if len(psi.pair.face.vertex_indices) == 1:
        # Vertex-vertex pair: the other endpoint is a projection point too.
        p_w = np.maximum(w_coords, 0.0)
        p_w /= p_w.sum()
        out.append(
            CandidateMaximizer(
                p=p_w, q=q, divergence=kl_divergence(p_w, q, check=False),
                chamber_id=chamber_id, pair_index=pair_index, kind=kind,
                support=psi.face_support, params=params,
            )
        )
    return out


def _solve_pair_isolated(
    model: ToricModel,
    psi: PsiMap,
    eqs: list[RatPoly],
    chamber_id: int,
    pair_index: int,
    cfg: _PairConfig,
    warnings: list[str],
) -> tuple[list[CandidateMaximizer], bool]:
    """Returns (candidates, needs_sampling)."""
    system = [_p_to_polynomial(e, psi.nvars) for e in eqs]
    try:
        if len(system) == psi.nvars:
            sol = solve_total_degree(system, seed=cfg.seed, max_paths=cfg.max_paths)
        else:
            sol = solve_polynomial_system(system, seed=cfg.seed, max_paths=cfg.max_paths)
    except PathBudgetExceeded:
        warnings.append(
            f"chamber {chamber_id} pair {pair_index}: path budget exceeded, skipped"
        )
        return [], False
    except AllPathsFailed:
        warnings.append(
            f"chamber {chamber_id} pair {pair_index}: all continuation paths failed"
        )
        return [], False
    if sol.positive_dim_suspected:
        return [], True
    box = (
        [(0.0, 1.0)] * psi.n_r
        + [(-1e9, 1e9)] * psi.n_t
        + [(0.0, 1.0)]
    )
    candidates = []
    for x in filter_real_positive(sol, box):
        candidates.extend(
            _candidates_from_solution(
                model, psi, x, chamber_id, pair_index, "isolated", warnings
            )
        )
    return candidates, False


def _solve_pair_sampled(
    model: ToricModel,
    psi: PsiMap,
    eqs: list[RatPoly],
    chamber_id: int,
    pair_index: int,
    cfg: _PairConfig,
    warnings: list[str],
    notes: list[str],
) -> list[CandidateMaximizer]:
    """Grid-sample the chamber coordinates and solve the residual systems."""
    n_fix = max(psi.n_r, psi.nvars - len(eqs)) if eqs else psi.nvars - 1
    n_fix = min(n_fix, psi.nvars - 1)
    if not eqs:
        warnings.append(
            f"chamber {chamber_id} pair {pair_index}: no equations after "
            "cancellation; family lies on the model"
        )
    remaining = psi.nvars - n_fix
    if eqs and remaining > len(eqs):
        warnings.append(
            f"chamber {chamber_id} pair {pair_index}: still underdetermined "
            "after fixing chamber coordinates, skipped"
        )
        return []

    N = cfg.r_samples
    base_grid = [Fraction(i, N + 1) for i in range(1, N + 1)]

    def solve_at(fixed_values: tuple[Fraction, ...]) -> list[CandidateMaximizer]:
        fixed = {i: fixed_values[i] for i in range(n_fix)}
        var_map = {i: i - n_fix for i in range(n_fix, psi.nvars)}
        subbed = []
        for e in eqs:
            pe = _p_substitute(e, fixed, remaining, var_map)
            if pe:
                subbed.append(pe)
        dedup = {}
        for e in subbed:
            dedup.setdefault(_p_canonical(e), e)
        sub_eqs = list(dedup.values())
        if len(sub_eqs) < remaining:
            return []
        system = [_p_to_polynomial(e, remaining) for e in sub_eqs]
        try:
            if len(system) == remaining:
                sol = solve_total_degree(system, seed=cfg.seed, max_paths=cfg.max_paths)
            else:
                sol = solve_polynomial_system(system, seed=cfg.seed, max_paths=cfg.max_paths)
        except (PathBudgetExceeded, AllPathsFailed):
            return []
        box = [(-1e9, 1e9)] * (remaining - 1) + [(0.0, 1.0)]
        found = []
        for x_tail in filter_real_positive(sol, box):
            x = np.concatenate([np.array([float(v) for v in fixed_values]), x_tail])
            found.extend(
                _candidates_from_solution(
                    model, psi, x, chamber_id, pair_index, "curve-sampled",
                    warnings,
                    fixed_note={"grid": [str(v) for v in fixed_values]},
                )
            )
        return found

    grids = [base_grid] * n_fix
    combos = list(product(*grids))
    if len(combos) > cfg.max_samples:
        warnings.append(
            f"chamber {chamber_id} pair {pair_index}: sampling grid capped at "
            f"{cfg.max_samples} of {len(combos)} points"
        )
        combos = combos[: cfg.max_samples]
    candidates: list[CandidateMaximizer] = []
    best: tuple[float, tuple[Fraction, ...]] | None = None
    for combo in combos:
        found = solve_at(combo)
        candidates.extend(found)
        for c in found:
            if best is None or c.divergence > best[0]:
                best = (c.divergence, combo)
    # One local refinement pass around the best sample.
    if best is not None and n_fix:
        step = Fraction(1, (N + 1) * 5)
        offsets = [Fraction(i - 4) * step for i in range(9)]
        refine_grids = []
        for i in range(n_fix):
            center = best[1][i]
            refine_grids.append(
                [c for c in (center + o for o in offsets) if 0 < c < 1]
            )
        for combo in product(*refine_grids):
            candidates.extend(solve_at(tuple(combo)))
    if candidates:
        vals = [c.divergence for c in candidates]
        if max(vals) - min(vals) < 1e-9:
            notes.append(
                f"chamber {chamber_id} pair {pair_index}: divergence constant "
                "along chamber"
            )
    return candidates


def maximize_chamber(
    model: ToricModel,
    chamber: Chamber,
    fiber: VoronoiPolytope | None = None,
    seed: int = 0,
    r_samples: int = 33,
    max_samples: int = 1500,
    max_paths: int = 4000,
) -> tuple[list[CandidateMaximizer], list[dict], list[str]]:
    """Process one chamber: all complementary pairs, solved or sampled."""
    cfg = _PairConfig(seed=seed, r_samples=r_samples,
                      max_samples=max_samples, max_paths=max_paths)
    warnings: list[str] = []
    notes: list[str] = []
    log: list[dict] = []
    if fiber is None:
        fiber = voronoi_polytope(model.A, chamber.sample, with_faces=False)
    face_closure(fiber)
    if fiber.closure_capped:
        warnings.append(f"chamber {chamber.id}: face closure hit its cap")
    pairs = complementary_pairs(fiber)
    # Keep one orientation of vertex-vertex pairs.
    deduped: list[ComplementaryPair] = []
    seen_vv = set()
    for pair in pairs:
        fv = pair.face.vertex_indices
        if len(fv) == 1:
            key = frozenset((pair.vertex_index, fv[0]))
            if key in seen_vv:
                continue
            seen_vv.add(key)
        deduped.append(pair)
    binomials = binomial_system(model).binomials
    candidates: list[CandidateMaximizer] = []
    for idx, pair in enumerate(deduped):
        if prune_facet_pair(pair, fiber):
            log.append(
                {"chamber": chamber.id, "pair": idx, "status": "facet-pruned"}
            )
            continue
        psi = build_psi(chamber, pair, model, fiber)
        eqs, _ = _substituted_core_system(psi, binomials)
        sampled = False
        found: list[CandidateMaximizer] = []
        if eqs and len(eqs) >= psi.nvars:
            found, sampled = _solve_pair_isolated(
                model, psi, eqs, chamber.id, idx, cfg, warnings
            )
        else:
            sampled = True
        if sampled:
            found = _solve_pair_sampled(
                model, psi, eqs, chamber.id, idx, cfg, warnings, notes
            )
        log.append(
            {
                "chamber": chamber.id,
                "pair": idx,
                "status": "sampled" if sampled else "solved",
                "candidates": len(found),
            }
        )
        candidates.extend(found)
    for note in notes:
        log.append({"note": note})
    return candidates, log, warnings


def is_projection_point(
    model: ToricModel,
    v: Vertex,
    face_vertices: Sequence[Vertex],
    b: Sequence,
    seed: int = 0,
) -> tuple[bool, np.ndarray | None]:
    """Fixed-fiber projection-point test for a complementary pair.

    True when some segment from v across the relative interior of the face
    meets the model; the witness is the intersection point, which by Birch's
    theorem is the MLE of every point in the fiber.
    """
    b = tuple(as_fraction(x) for x in b)
    fiber = VoronoiPolytope(model.A, b, enumerate_vertices(model.A, b))
    vi = next(
        i for i, w in enumerate(fiber.vertices) if w.coords == v.coords
    )
    member_idx = tuple(
        next(i for i, w in enumerate(fiber.vertices) if w.coords == f.coords)
        for f in face_vertices
    )
    supp = tuple(
        sorted(set().union(*(set(f.support) for f in face_vertices)))
    )
    from .polytope import Face

    pair = ComplementaryPair(vi, Face(supp, member_idx))
    pseudo = Chamber(
        id=-1, dim=0, vertices=(b,), sample=b, sign_vector=(),
    )
    psi = build_psi(pseudo, pair, model, fiber)
    eqs, _ = _substituted_core_system(psi, binomial_system(model).binomials)
    warnings: list[str] = []
    cfg = _PairConfig(seed=seed)
    if eqs and len(eqs) >= psi.nvars:
        found, sampled = _solve_pair_isolated(
            model, psi, eqs, -1, 0, cfg, warnings
        )
        if sampled:
            found = _solve_pair_sampled(
                model, psi, eqs, -1, 0, cfg, warnings, []
            )
    else:
        found = _solve_pair_sampled(
            model, psi, eqs, -1, 0, cfg, warnings, []
        )
    for cand in found:
        if cand.support == v.support:
            return True, cand.q
    return False, None


def _worker_count() -> int:
    raw = os.environ.get("DIVMAX_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def maximize_model(
    model: ToricModel,
    seed: int = 0,
    include_boundary: bool = False,
    r_samples: int = 33,
    max_samples: int = 1500,
    max_paths: int = 4000,
    tie_tol: float = 1e-9,
    max_ambient_dim: int = 3,
) -> MaximizationReport:
    """Global divergence maximization via the chamber pipeline."""
    log: list[dict] = []
    warnings: list[str] = []
    if not model.kernel:
        return MaximizationReport(
            value=0.0, maximizers=[], candidates=[], log=log,
            warnings=["model is the full simplex; divergence is zero"],
            model_name=model.name, seed=seed,
        )
    cc = enumerate_chambers(model.A, max_ambient_dim=max_ambient_dim)
    n = model.n
    tasks: list[Chamber] = []
    for chamber in cc.chambers:
        if not include_boundary and prune_boundary(chamber, cc):
            log.append({"chamber": chamber.id, "dim": chamber.dim,
                        "status": "boundary-pruned"})
            continue
        if prune_dimension(chamber, n):
            log.append({"chamber": chamber.id, "dim": chamber.dim,
                        "status": "dimension-pruned"})
            continue
        if prune_monotone(chamber, cc):
            log.append({"chamber": chamber.id, "dim": chamber.dim,
                        "status": "monotone-pruned"})
            continue
        if not chamber.has_disjoint_pair:
            log.append({"chamber": chamber.id, "dim": chamber.dim,
                        "status": "no-disjoint-supports"})
            continue
        tasks.append(chamber)

    def run(chamber: Chamber):
        return maximize_chamber(
            model, chamber, seed=seed, r_samples=r_samples,
            max_samples=max_samples, max_paths=max_paths,
        )

    workers = _worker_count()
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(c) for c in tasks]

    candidates: list[CandidateMaximizer] = []
    for chamber, (found, sub_log, sub_warn) in zip(tasks, results):
        log.append({"chamber": chamber.id, "dim": chamber.dim,
                    "status": "processed", "pairs": len(sub_log),
                    "candidates": len(found)})
        log.extend(sub_log)
        warnings.extend(sub_warn)
        candidates.extend(found)

    if not candidates:
        return MaximizationReport(
            value=0.0, maximizers=[], candidates=[], log=log,
            warnings=warnings + ["no projection points found"],
            model_name=model.name, seed=seed,
        )
    value = max(c.divergence for c in candidates)
    maximizers = []
    seen_points = []
    for c in sorted(candidates, key=lambda c: (c.chamber_id, c.pair_index)):
        if c.divergence < value - tie_tol:
            continue
        if any(np.abs(c.p - p).max() < 1e-9 for p in seen_points):
            continue
        seen_points.append(c.p)
        maximizers.append(c)
    return MaximizationReport(
        value=value, maximizers=maximizers, candidates=candidates,
        log=log, warnings=warnings, model_name=model.name, seed=seed,
    )


def maximize_linear(B: RationalMatrix | Iterable, c) -> MaximizationReport:
    """Maximum divergence from a linear model via co-circuits.

    For each co-circuit z feasible on the relative interior, the divergence
    of the mapped fiber vertex is linear in the model point, hence maximized
    at model polytope vertices; the global value is the best over circuits.
    """
    import math

    if not isinstance(B, RationalMatrix):
        B = RationalMatrix.from_rows(B)
    cf = tuple(as_fraction(x) for x in c)
    verts = linear_model_vertices(B, cf)
    normalized, unnormalizable = cocircuits(B, cf)
    warnings = []
    if unnormalizable:
        warnings.append(
            f"{len(unnormalizable)} co-circuits have <z, c> = 0 and define no "
            "simplex vertices; excluded"
        )
    interior = tuple(
        sum((v.coords[i] for v in verts), Fraction(0)) / len(verts)
        for i in range(B.rows)
    )
    feasible = [
        cc
        for cc in normalized
        if all(z * q >= 0 for z, q in zip(cc.z, interior))
    ]
    log = [{"cocircuits": len(normalized), "feasible": len(feasible),
            "model_vertices": len(verts)}]
    candidates = []
    for ci, cc in enumerate(feasible):
        # D(V_z(q) || q) = sum_i z_i log(z_i) q_i, linear in q.
        weights = [
            float(z) * math.log(float(z)) if z > 0 else 0.0 for z in cc.z
        ]
        for vi, vert in enumerate(verts):
            if any(z < 0 and q > 0 for z, q in zip(cc.z, vert.coords)):
                continue
            value = sum(w * float(q) for w, q in zip(weights, vert.coords))
            p = np.array(
                [max(float(z * q), 0.0) for z, q in zip(cc.z, vert.coords)]
            )
            candidates.append(
                CandidateMaximizer(
                    p=p, q=np.array([float(x) for x in vert.coords]),
                    divergence=value, chamber_id=-1, pair_index=ci,
                    kind="isolated",
                    support=tuple(i for i, x in enumerate(p) if x > 0),
                    params={"model_vertex": vi},
                )
            )
    if not candidates:
        return MaximizationReport(
            value=0.0, maximizers=[], candidates=[], log=log,
            warnings=warnings + ["no feasible co-circuits"], model_name="linear",
        )
    value = max(c2.divergence for c2 in candidates)
    maximizers = []
    seen = []
    for c2 in candidates:
        if c2.divergence < value - 1e-9:
            continue
        if any(np.abs(c2.p - p).max() < 1e-9 for p in seen):
            continue
        seen.append(c2.p)
        maximizers.append(c2)
    return MaximizationReport(
        value=value, maximizers=maximizers, candidates=candidates,
        log=log, warnings=warnings, model_name="linear",
    )


def codim1_divergence(model: ToricModel) -> MaximizationReport:
    """Closed-form maximization for rank(A) = n - 1 toric models.

    The kernel generator u splits into positive and negative parts; the two
    renormalized parts are the only projection points, and the maximum is
    the larger of their divergences.
    """
    if len(model.kernel) != 1:
        raise NotCodimensionOne(
            f"kernel has dimension {len(model.kernel)}, expected 1"
        )
    u = model.kernel[0]
    pos = [max(x, 0) for x in u]
    neg = [max(-x, 0) for x in u]
    ps = sum(pos)
    ns = sum(neg)
    p1 = np.array([x / ps for x in pos], dtype=float)
    p2 = np.array([x / ns for x in neg], dtype=float)
    q = mle(model, p1)
    d1 = kl_divergence(p1, q, check=False)
    d2 = kl_divergence(p2, q, check=False)
    candidates = [
        CandidateMaximizer(
            p=p1, q=q, divergence=d1, chamber_id=-1, pair_index=0,
            kind="isolated",
            support=tuple(i for i, x in enumerate(pos) if x > 0),
        ),
        CandidateMaximizer(
            p=p2, q=q, divergence=d2, chamber_id=-1, pair_index=0,
            kind="isolated",
            support=tuple(i for i, x in enumerate(neg) if x > 0),
        ),
    ]
    value = max(d1, d2)
    maximizers = [c for c in candidates if c.divergence >= value - 1e-9]
    return MaximizationReport(
        value=value, maximizers=maximizers, candidates=candidates,
        log=[{"kernel": list(u)}], warnings=[], model_name=model.name,
    )
