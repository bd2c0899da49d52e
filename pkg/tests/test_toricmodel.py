"""KL divergence, lattice binomials, monomial parametrization, MLE solver."""
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from divmax.exactlin import RationalMatrix, rank
from divmax.toricmodel import (
    DimensionMismatch,
    ToricModel,
    binomial_system,
    block_divergence,
    kl_divergence,
    mle,
    model_point,
)

F = Fraction
LOG2 = math.log(2.0)


class TestKLDivergence:
    def test_equal_points(self):
        p = (0.1, 0.2, 0.3, 0.4)
        assert kl_divergence(p, p) == 0.0

    def test_uniform_reference(self):
        assert abs(kl_divergence((0.5, 0, 0, 0.5), (0.25,) * 4) - LOG2) < 1e-15

    def test_binomial_global_maximum_value(self):
        q = (F(1, 8), F(3, 8), F(3, 8), F(1, 8))
        p = (F(1, 2), 0, 0, F(1, 2))
        assert abs(kl_divergence(p, q) - 2 * LOG2) < 1e-15

    def test_support_violation_infinite(self):
        assert kl_divergence((0.5, 0.5, 0.0), (1.0, 0.0, 0.0)) == math.inf

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            kl_divergence((1.0,), (0.5, 0.5))

    def test_nonnegativity_random(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            p = rng.dirichlet(np.ones(5))
            q = rng.dirichlet(np.ones(5))
            assert kl_divergence(p, q) >= 0.0

    def test_strict_convexity_in_first_argument(self):
        rng = np.random.default_rng(4)
        q = rng.dirichlet(np.ones(4))
        for _ in range(20):
            p1 = rng.dirichlet(np.ones(4))
            p2 = rng.dirichlet(np.ones(4))
            mid = (p1 + p2) / 2
            lhs = kl_divergence(mid, q)
            rhs = (kl_divergence(p1, q) + kl_divergence(p2, q)) / 2
            assert lhs < rhs + 1e-15


class TestBinomialSystem:
    def test_2x2_independence(self, indep22_model):
        system = binomial_system(indep22_model)
        assert len(system.binomials) == 1
        b = system.binomials[0]
        exps = {b.plus_exponents, b.minus_exponents}
        assert exps == {(1, 0, 0, 1), (0, 1, 1, 0)}
        assert b.plus_coefficient == b.minus_coefficient == 1

    def test_binomial_model_weighted(self, binomial_model):
        # Kernel rows (1,-2,1,0) and (0,1,-2,1) with weights (1,3,3,1) give
        # 3 p0 p2 - p1^2 and 3 p1 p3 - p2^2 up to scaling; the parametrized
        # point q_j = C(3,j) t^j (1-t)^(3-j) must satisfy both exactly.
        system = binomial_system(binomial_model)
        assert len(system.binomials) == 2
        for t in (F(1, 3), F(2, 5), F(9, 10)):
            q = [
                F(math.comb(3, j)) * t**j * (1 - t) ** (3 - j)
                for j in range(4)
            ]
            for b in system.binomials:
                assert b.evaluate_exact(q) == 0

    def test_full_rank_empty_system(self):
        m = ToricModel([[1, 1], [0, 1]])
        assert binomial_system(m).binomials == ()


class TestModelPoint:
    def test_binomial_center(self, binomial_model):
        # z = (anything, 1) encodes bias 1/2.
        q = model_point(binomial_model, (1, 1))
        assert q == (F(1, 8), F(3, 8), F(3, 8), F(1, 8))

    def test_independence_uniform(self, indep22_model):
        assert model_point(indep22_model, (1, 1, 1)) == (F(1, 4),) * 4

    def test_equal_exponent_columns_give_uniform(self):
        m = ToricModel([[1, 1, 1]])
        assert model_point(m, (F(5, 7),)) == (F(1, 3),) * 3

    def test_exact_binomial_vanishing(self, pentagon_model):
        system = binomial_system(pentagon_model)
        q = model_point(pentagon_model, (1, F(2, 3), F(5, 4)))
        for b in system.binomials:
            assert b.evaluate_exact(q) == 0


class TestMLE:
    def test_binomial_half_half(self, binomial_model):
        q = mle(binomial_model, (0.5, 0.0, 0.0, 0.5))
        assert np.abs(q - np.array([1 / 8, 3 / 8, 3 / 8, 1 / 8])).max() < 1e-12

    def test_binomial_closed_form_cubics(self, binomial_model):
        # q0 = (3p0+2p1+p2)^3/27 etc.
        def closed_form(p):
            s = (3 * p[0] + 2 * p[1] + p[2]) / 3
            t = (p[1] + 2 * p[2] + 3 * p[3]) / 3
            return np.array(
                [s**3, 3 * s**2 * t, 3 * s * t**2, t**3]
            )

        for u in [(0.25, 0.25, 0.25, 0.25), (0.1, 0.4, 0.3, 0.2)]:
            q = mle(binomial_model, u)
            assert np.abs(q - closed_form(u)).max() < 1e-11

    def test_model_point_is_fixed(self, binomial_model):
        u = np.array([float(x) for x in model_point(binomial_model, (1, F(3, 2)))])
        q = mle(binomial_model, u)
        assert np.abs(q - u).max() < 1e-11

    def test_boundary_data_delegates_to_face(self, binomial_model):
        q = mle(binomial_model, (1, 0, 0, 0))
        assert np.abs(q - np.array([1.0, 0, 0, 0])).max() < 1e-12
        # Mixed boundary case: marginal pinned to the edge b=3 of conv(A).
        q = mle(binomial_model, (0, 0, 0, 1))
        assert np.abs(q - np.array([0, 0, 0, 1.0])).max() < 1e-12

    def test_birch_consistency_random_models(self):
        rng = random.Random(23)
        nprng = np.random.default_rng(23)
        checked = 0
        while checked < 60:
            d = rng.randint(2, 4)
            n = rng.randint(d + 1, 8)
            rows = [[1] * n] + [
                [rng.randint(0, 3) for _ in range(n)] for _ in range(d - 1)
            ]
            M = RationalMatrix.from_rows(rows)
            if rank(M) != d:
                continue
            weights = [rng.randint(1, 4) for _ in range(n)]
            model = ToricModel(M, weights=weights)
            u = nprng.dirichlet(np.ones(n))
            q = mle(model, u)
            assert np.abs(model.A_np @ (q - u)).max() < 1e-10
            assert binomial_system(model).max_residual(q) < 1e-8
            checked += 1

    def test_mle_minimizes_divergence(self, binomial_model):
        rng = np.random.default_rng(9)
        u = rng.dirichlet(np.ones(4))
        q = mle(binomial_model, u)
        base = kl_divergence(u, q)
        for _ in range(20):
            z = np.abs(1.0 + 0.3 * rng.standard_normal(2))
            qp = model_point(
                binomial_model, [F(x).limit_denominator(10**6) for x in z]
            )
            qp = np.array([float(x) for x in qp])
            assert kl_divergence(u, qp) >= base - 1e-12


class TestBlockDivergence:
    def test_two_identical_blocks(self, indep22_model):
        value, idx = block_divergence(
            [indep22_model, indep22_model], values=[LOG2, LOG2]
        )
        assert value == LOG2 and idx == 0

    def test_single_block(self, indep22_model):
        value, idx = block_divergence([indep22_model], values=[0.31])
        assert value == 0.31 and idx == 0

    def test_argmax_selection(self, indep22_model, binomial_model):
        value, idx = block_divergence(
            [indep22_model, binomial_model], values=[LOG2, 2 * LOG2]
        )
        assert value == 2 * LOG2 and idx == 1
