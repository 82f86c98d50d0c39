import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bloch_grid_h2
from renyipa.entropy import (
    NEG_INFINITY,
    check_order,
    min_entropy_cc,
    relative_entropy_cond,
    renyi_cond_entropy_fixed,
    renyi_cond_entropy_opt,
    sandwiched_norm,
    von_neumann_cond,
)
from renyipa.qops import (
    DensityOperator,
    haar_unitary,
    make_rng,
    maximally_entangled,
    maximally_mixed,
    partial_trace,
    random_density,
    schatten_norm,
)

ALPHAS = [round(1 + 0.1 * k, 10) for k in range(1, 11)]
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def product_state(dA, dB, rng):
    omega = random_density(dB, None, rng).matrix
    return DensityOperator(np.kron(maximally_mixed(dA), omega), (dA, dB)), omega


def random_bipartite(dA, dB, rng, rank=None):
    return random_density(dA * dB, rank, rng, (dA, dB))


def regularized(rho, eps=1e-6):
    d = rho.dim
    return DensityOperator((1 - eps) * rho.matrix + eps * np.eye(d) / d, rho.dims)


def random_channel_kraus(d_in, d_out, rng, r=3):
    v = haar_unitary(d_out * r, rng)[:, :d_in]
    return v.reshape(r, d_out, d_in)


class TestOrder:
    @pytest.mark.parametrize("alpha", [0.5, 0.9, 1.0001, 2, 7.5])
    def test_accepts(self, alpha):
        assert check_order(alpha) == alpha

    @pytest.mark.parametrize("alpha", [0.49, 1.0, math.inf, math.nan, -2])
    def test_rejects(self, alpha):
        with pytest.raises(ValueError):
            check_order(alpha)


class TestSandwichedNorm:
    @pytest.mark.parametrize("alpha", [0.6, 1.3, 2.0, 3.0])
    def test_product_state(self, alpha):
        rho, omega = product_state(3, 2, make_rng(1))
        assert sandwiched_norm(rho, omega, alpha) == pytest.approx(3 ** (-(alpha - 1) / alpha), rel=1e-12)

    @pytest.mark.parametrize("alpha", [1.5, 2.0])
    def test_maximally_mixed_sigma(self, alpha):
        rho = random_bipartite(2, 3, make_rng(2))
        expected = 3 ** ((alpha - 1) / alpha) * schatten_norm(rho.matrix, alpha)
        assert sandwiched_norm(rho, np.eye(3) / 3, alpha) == pytest.approx(expected, rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sandwiched_norm(random_bipartite(2, 2, make_rng(3)), np.eye(3) / 3, 2.0)


class TestFixedSigma:
    @pytest.mark.parametrize("alpha", [0.5, 0.8, 1.1, 1.5, 2.0, 5.0])
    def test_product_state(self, alpha):
        rho, omega = product_state(4, 2, make_rng(4))
        assert renyi_cond_entropy_fixed(rho, omega, alpha) == pytest.approx(2.0, abs=1e-10)

    def test_support_violation_is_neg_infinity(self):
        rho = DensityOperator(np.kron(np.eye(2) / 2, np.diag([0.5, 0.5])), (2, 2))
        assert renyi_cond_entropy_fixed(rho, np.diag([1.0, 0.0]), 2.0) == NEG_INFINITY
        # alpha < 1 only needs nonzero overlap
        assert math.isfinite(renyi_cond_entropy_fixed(rho, np.diag([1.0, 0.0]), 0.7))

    def test_orthogonal_sigma_below_one(self):
        rho = DensityOperator(np.kron(np.diag([1.0, 0]), np.diag([1.0, 0])), (2, 2))
        assert renyi_cond_entropy_fixed(rho, np.diag([0.0, 1.0]), 0.7) == NEG_INFINITY

    def test_rank_deficient_sigma_with_matching_support(self):
        rho = DensityOperator(np.kron(np.eye(2) / 2, np.diag([1.0, 0.0])), (2, 2))
        assert renyi_cond_entropy_fixed(rho, np.diag([1.0, 0.0]), 2.0) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("alpha", [0.5, 0.75, 1.25, 1.5, 2.0, 3.0])
    def test_maximally_entangled(self, alpha):
        assert renyi_cond_entropy_fixed(maximally_entangled(2), np.eye(2) / 2, alpha) == pytest.approx(-1, abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds, alpha=st.floats(1.01, 3.0))
    def test_norm_identity(self, seed, alpha):
        rng = make_rng(seed)
        rho = random_bipartite(2, 3, rng)
        sig = random_density(3, None, rng).matrix
        h = renyi_cond_entropy_fixed(rho, sig, alpha)
        assert math.log2(sandwiched_norm(rho, sig, alpha)) == pytest.approx((1 - alpha) / alpha * h, abs=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds)
    def test_monotone_in_alpha(self, seed):
        rng = make_rng(seed)
        rho = random_bipartite(2, 2, rng, rank=int(rng.integers(1, 5)))
        sig = random_density(2, None, rng).matrix
        vals = [renyi_cond_entropy_fixed(rho, sig, a) for a in ALPHAS]
        assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds, alpha=st.sampled_from([0.6, 1.2, 1.5, 2.0]))
    def test_data_processing(self, seed, alpha):
        rng = make_rng(seed)
        dA, dB, dB2 = 2, 3, 2
        rho = random_bipartite(dA, dB, rng)
        sig = random_density(dB, None, rng).matrix
        k = random_channel_kraus(dB, dB2, rng)
        big = np.stack([np.kron(np.eye(dA), ki) for ki in k])
        rho2 = np.einsum("rij,jk,rlk->il", big, rho.matrix, big.conj())
        sig2 = np.einsum("rij,jk,rlk->il", k, sig, k.conj())
        before = renyi_cond_entropy_fixed(rho, sig, alpha)
        after = renyi_cond_entropy_fixed(DensityOperator(rho2, (dA, dB2)), sig2, alpha)
        assert after >= before - 1e-9

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds, alpha=st.floats(1.05, 2.0))
    def test_range(self, seed, alpha):
        rng = make_rng(seed)
        dA = int(rng.integers(2, 4))
        rho = random_bipartite(dA, 2, rng, rank=int(rng.integers(1, 2 * dA + 1)))
        h = renyi_cond_entropy_fixed(rho, partial_trace(rho.matrix, 1, rho.dims), alpha)
        assert -math.log2(dA) - 1e-9 <= h <= math.log2(dA) + 1e-9

    @pytest.mark.parametrize("seed", range(5))
    def test_limit_to_relative_entropy(self, seed):
        rho = regularized(random_bipartite(2, 2, make_rng(seed)))
        rho_b = partial_trace(rho.matrix, 1, rho.dims)
        h = renyi_cond_entropy_fixed(rho, rho_b, 1 + 1e-4)
        assert h == pytest.approx(relative_entropy_cond(rho, rho_b), abs=1e-3)
        # at sigma = rho_B the relative-entropy form is H(A|B)
        assert relative_entropy_cond(rho, rho_b) == pytest.approx(von_neumann_cond(rho), abs=1e-10)


class TestOptimized:
    def test_product_state(self):
        rho, omega = product_state(2, 2, make_rng(5))
        res = renyi_cond_entropy_opt(rho, 2.0)
        assert res.value == pytest.approx(1.0, abs=1e-9)
        np.testing.assert_allclose(res.sigma.matrix, omega, atol=1e-6)

    def test_maximally_entangled(self):
        res = renyi_cond_entropy_opt(maximally_entangled(2), 2.0)
        assert res.value == pytest.approx(-1.0, abs=1e-9)
        # the monotonicity upper bound H_2 <= H
        assert res.value <= von_neumann_cond(maximally_entangled(2)) + 1e-9

    def test_witness_reproduces_value(self):
        rho = random_bipartite(2, 3, make_rng(6))
        res = renyi_cond_entropy_opt(rho, 1.5)
        assert renyi_cond_entropy_fixed(rho, res.sigma, 1.5) == pytest.approx(res.value, abs=1e-12)

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_bloch_grid(self, seed):
        rho = random_bipartite(2, 2, make_rng(100 + seed))
        res = renyi_cond_entropy_opt(rho, 2.0)
        grid = bloch_grid_h2(rho.matrix)
        assert res.value >= grid - 1e-9
        assert abs(res.value - grid) <= 1e-3

    @settings(max_examples=15, deadline=None)
    @given(seed=seeds, alpha=st.sampled_from([0.7, 1.3, 2.0]))
    def test_dominates_marginal(self, seed, alpha):
        rng = make_rng(seed)
        rho = random_bipartite(2, 2, rng, rank=int(rng.integers(1, 5)))
        fixed = renyi_cond_entropy_fixed(rho, partial_trace(rho.matrix, 1, rho.dims), alpha)
        assert renyi_cond_entropy_opt(rho, alpha).value >= fixed - 1e-9

    @pytest.mark.parametrize("seed", range(4))
    def test_limit_to_von_neumann(self, seed):
        rho = regularized(random_bipartite(2, 2, make_rng(200 + seed)))
        res = renyi_cond_entropy_opt(rho, 1 + 1e-4)
        assert res.value == pytest.approx(von_neumann_cond(rho), abs=5e-3)
        assert res.value <= von_neumann_cond(rho) + 1e-6


class TestVonNeumann:
    def test_product(self):
        rho, _ = product_state(4, 3, make_rng(7))
        assert von_neumann_cond(rho) == pytest.approx(2.0, abs=1e-10)

    def test_maximally_entangled(self):
        assert von_neumann_cond(maximally_entangled(2)) == pytest.approx(-1.0, abs=1e-12)

    def test_classical_uniform(self):
        rho = DensityOperator(np.eye(4) / 4, (2, 2))
        assert von_neumann_cond(rho) == pytest.approx(1.0, abs=1e-12)


class TestMinEntropy:
    def test_uniform(self):
        assert min_entropy_cc(np.full((4, 1), 0.25)) == pytest.approx(2.0)

    def test_perfectly_correlated(self):
        assert min_entropy_cc(np.eye(4) / 4) == pytest.approx(0.0, abs=1e-15)

    def test_table(self):
        # columns are e; max over a per column is 0.4 and 0.3
        assert min_entropy_cc([[0.4, 0.1], [0.2, 0.3]]) == pytest.approx(-math.log2(0.7))
        assert min_entropy_cc([[0.4, 0.1], [0.2, 0.3]]) == pytest.approx(0.5146, abs=1e-4)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            min_entropy_cc([[0.5, 0.6]])
        with pytest.raises(ValueError):
            min_entropy_cc([[1.2, -0.2]])

    @pytest.mark.parametrize("alpha", [0.7, 1.5, 2.0, 5.0])
    def test_optimized_matches_classical_closed_form(self, alpha):
        # classical H_alpha(A|B) = alpha/(1-alpha) log sum_b (sum_a p(a,b)^alpha)^(1/alpha)
        p = np.array([[0.4, 0.1], [0.2, 0.3]])
        closed = alpha / (1 - alpha) * math.log2(np.sum(np.sum(p ** alpha, axis=0) ** (1 / alpha)))
        rho = DensityOperator(np.diag(p.ravel()), (2, 2))
        assert renyi_cond_entropy_opt(rho, alpha).value == pytest.approx(closed, abs=1e-8)

    def test_large_alpha_approaches_min_entropy(self):
        p = np.array([[0.4, 0.1], [0.2, 0.3]])
        rho = DensityOperator(np.diag(p.ravel()), (2, 2))
        h = renyi_cond_entropy_opt(rho, 200.0).value
        assert min_entropy_cc(p) - 1e-9 <= h <= min_entropy_cc(p) + 0.01
