"""Fiber polytope vertex/face/pair machinery and linear-model co-circuits."""
import random
from fractions import Fraction

import numpy as np
import pytest

from divmax.exactlin import RationalMatrix
from divmax.polytope import (
    EmptyModel,
    InfeasibleFiber,
    cocircuits,
    complementary_pairs,
    enumerate_vertices,
    enumerate_vertices_bruteforce,
    face_closure,
    linear_model_vertices,
    voronoi_polytope,
)
from divmax.toricmodel import kl_divergence

from conftest import BINOMIAL_A, INDEP23_A, PENTAGON_A, matrix

F = Fraction


class TestEnumerateVertices:
    def test_binomial_quadrangle(self):
        A = matrix(BINOMIAL_A)
        verts = enumerate_vertices(A, (1, F(3, 2)))
        coords = {v.coords for v in verts}
        assert coords == {
            (F(1, 4), 0, F(3, 4), 0),
            (F(1, 2), 0, 0, F(1, 2)),
            (0, F(1, 2), F(1, 2), 0),
            (0, F(3, 4), 0, F(1, 4)),
        }

    def test_pentagon_fiber_contains_paper_vertices(self):
        A = matrix(PENTAGON_A)
        verts = enumerate_vertices(A, (1, F(7, 4), 1))
        coords = {v.coords for v in verts}
        assert (F(5, 12), 0, 0, F(7, 12), 0) in coords
        assert (0, F(1, 4), F(1, 4), 0, F(1, 2)) in coords

    def test_point_fiber_at_column(self):
        A = matrix(BINOMIAL_A)
        verts = enumerate_vertices(A, (1, 2))  # b equals the third column
        assert any(v.coords == (0, 0, 1, 0) for v in verts)
        fiber_at_vertex = enumerate_vertices(A, (1, 0))
        assert [v.coords for v in fiber_at_vertex] == [(1, 0, 0, 0)]

    def test_exactness_and_support_bound(self):
        A = matrix(PENTAGON_A)
        b = (1, F(7, 4), 1)
        for v in enumerate_vertices(A, b):
            assert A.mul_vec(v.coords) == b
            assert min(v.coords) >= 0
            assert len(v.support) <= A.rows

    def test_infeasible_raises(self):
        A = matrix(BINOMIAL_A)
        with pytest.raises(InfeasibleFiber):
            enumerate_vertices(A, (1, 7))

    def test_oracle_equivalence_small(self):
        rng = random.Random(7)
        cases = [matrix(BINOMIAL_A), matrix(PENTAGON_A), matrix(INDEP23_A)]
        for _ in range(6):
            d = rng.randint(2, 3)
            n = rng.randint(d + 1, 7)
            rows = [[1] * n] + [
                [rng.randint(0, 3) for _ in range(n)] for _ in range(d - 1)
            ]
            M = matrix(rows)
            from divmax.exactlin import rank

            if rank(M) == d:
                cases.append(M)
        for A in cases:
            weights = [F(1, A.cols)] * A.cols
            b = A.mul_vec(weights)
            assert enumerate_vertices(A, b) == enumerate_vertices_bruteforce(A, b)


class TestFaceClosure:
    def test_binomial_singleton_faces(self):
        A = matrix(BINOMIAL_A)
        P = voronoi_polytope(A, (1, F(3, 2)))
        singletons = [f for f in P.faces if len(f.vertex_indices) == 1]
        assert len(singletons) == 4  # each vertex is its own closed face

    def test_disjoint_support_simplex_fiber(self):
        # Vertices with pairwise disjoint supports: every subset is closed.
        A = matrix([[1, 1, 1, 1, 1, 1], [0, 0, 1, 1, 2, 2], [1, 0, 0, 1, 0, 1]])
        P = voronoi_polytope(A, (1, 1, F(2, 3)))
        supports = [frozenset(v.support) for v in P.vertices]
        if all(
            not (s & t) for i, s in enumerate(supports) for t in supports[i + 1 :]
        ):
            assert len(P.faces) == 2 ** len(P.vertices) - 1

    def test_closure_operator_property(self):
        A = matrix(PENTAGON_A)
        P = voronoi_polytope(A, (1, F(7, 4), 1))
        for f in P.faces:
            union = set()
            for i in f.vertex_indices:
                union.update(P.vertices[i].support)
            assert tuple(sorted(union)) == f.support
            # No vertex outside the face has support inside the face support.
            for j, v in enumerate(P.vertices):
                if j not in f.vertex_indices:
                    assert not set(v.support) <= union


class TestComplementaryPairs:
    def test_binomial_midfiber_four_pairs(self):
        A = matrix(BINOMIAL_A)
        P = voronoi_polytope(A, (1, F(3, 2)))
        pairs = complementary_pairs(P)
        assert len(pairs) == 4
        n = A.cols
        for pair in pairs:
            v = P.vertices[pair.vertex_index]
            assert set(v.support) & set(pair.face.support) == set()
            assert set(v.support) | set(pair.face.support) == set(range(n))

    def test_binomial_low_fiber_empty(self):
        A = matrix(BINOMIAL_A)
        P = voronoi_polytope(A, (1, F(1, 2)))
        assert complementary_pairs(P) == []

    def test_single_vertex_full_support_empty(self):
        A = matrix([[1, 1], [0, 1]])
        P = voronoi_polytope(A, (1, F(1, 2)))
        assert len(P.vertices) == 1
        assert complementary_pairs(P) == []


EX25_B = [[-2], [-1], [1], [2]]
UNIFORM4 = (F(1, 4),) * 4


def model_point_25(x):
    return tuple(c - coef[0] * x for c, coef in zip(UNIFORM4, map(tuple, EX25_B)))


class TestCocircuits:
    def test_example_25_cocircuits(self):
        B = matrix(EX25_B)
        normalized, bad = cocircuits(B, UNIFORM4)
        assert len(normalized) == 6 and not bad
        # Normalization: <z, q> = 1 at rational model points.
        for x in [F(0), F(1, 16), F(-1, 10), F(1, 8), F(-1, 8)]:
            q = model_point_25(x)
            for cc in normalized:
                assert sum(z * qi for z, qi in zip(cc.z, q)) == 1
        # At an interior point exactly four co-circuits give simplex vertices.
        q_mid = model_point_25(F(1, 16))
        feasible = [
            cc
            for cc in normalized
            if all(z * qi >= 0 for z, qi in zip(cc.z, q_mid))
        ]
        assert len(feasible) == 4
        # The co-circuit on coordinates {2,4} maps x=1/8 to the vertex e_2.
        q = model_point_25(F(1, 8))
        vertex_maps = {
            tuple(z * qi for z, qi in zip(cc.z, q)) for cc in normalized
        }
        assert (0, 1, 0, 0) in vertex_maps

    def test_quadrangle_cocircuit_count(self):
        for a, b in [(2, 1), (3, 1)]:
            B = matrix([[-a], [-b], [b], [a]])
            normalized, _ = cocircuits(B, UNIFORM4)
            centroid = UNIFORM4
            feasible = [
                cc
                for cc in normalized
                if all(z * c >= 0 for z, c in zip(cc.z, centroid))
            ]
            assert len(feasible) == 4

    def test_identical_rows_minimal_dependency(self):
        B = matrix([[1], [1], [-2]])
        normalized, unnormalizable = cocircuits(B, (F(1, 3), F(1, 3), F(1, 3)))
        supports = {
            tuple(i for i, z in enumerate(cc.z) if z != 0) for cc in normalized
        }
        supports |= {
            tuple(i for i, z in enumerate(z_vec) if z != 0)
            for z_vec in unnormalizable
        }
        # The two identical rows carry a minimal dependency; against the
        # uniform c it has <z, c> = 0 and lands in the unnormalizable bucket.
        assert (0, 1) in supports

    def test_divergence_linearity(self):
        # For fixed z the divergence D(V_z(q) || q) is linear along the model.
        B = matrix(EX25_B)
        normalized, _ = cocircuits(B, UNIFORM4)
        q1 = model_point_25(F(1, 16))
        q2 = model_point_25(F(-1, 20))
        qm = tuple((a + b) / 2 for a, b in zip(q1, q2))
        for cc in normalized:
            if not all(
                z * qi >= 0 for q in (q1, q2) for z, qi in zip(cc.z, q)
            ):
                continue
            def dv(q):
                v = tuple(z * qi for z, qi in zip(cc.z, q))
                return kl_divergence(v, q)
            assert abs(dv(qm) - (dv(q1) + dv(q2)) / 2) < 1e-12


class TestLinearModelVertices:
    def test_example_25_vertices(self):
        B = matrix(EX25_B)
        verts = linear_model_vertices(B, UNIFORM4)
        coords = {v.coords for v in verts}
        assert coords == {
            (0, F(1, 8), F(3, 8), F(1, 2)),
            (F(1, 2), F(3, 8), F(1, 8), 0),
        }

    def test_zero_dimensional_model(self):
        B = RationalMatrix(4, 0, ())
        verts = linear_model_vertices(B, UNIFORM4)
        assert [v.coords for v in verts] == [UNIFORM4]

    def test_quadrangle_endpoints(self):
        B = matrix([[-2], [-1], [1], [2]])
        verts = linear_model_vertices(B, UNIFORM4)
        expected = {model_point_25(F(1, 8)), model_point_25(F(-1, 8))}
        assert {v.coords for v in verts} == expected

    def test_empty_model(self):
        B = matrix([[1], [-1], [0], [0]])
        with pytest.raises(EmptyModel):
            linear_model_vertices(B, (F(-1), F(-1), F(3), F(0)))
