import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import joint_counts, poly_mul_mod
from renyipa.hashfam import (
    IRREDUCIBLE,
    CQOperator,
    CQState,
    affine_family,
    constant_family,
    deviation_blocks,
    dump_family,
    empirical_lambda_cq,
    family_average,
    family_from_table,
    gf_mul,
    hash_channel_apply,
    identity_family,
    load_family,
    random_cq_operator,
    random_cq_state,
    randomizing_ratio_cq,
    second_moment,
    verify_strong_2universal,
)
from renyipa.qops import make_rng

seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestField:
    @pytest.mark.parametrize("n", range(1, 9))
    def test_matches_coefficient_list_product(self, n):
        size = 1 << n
        pairs = itertools.product(range(size), repeat=2) if n <= 5 else \
            ((a, b) for a in range(0, size, 7) for b in range(size))
        for a, b in pairs:
            assert gf_mul(a, b, n) == poly_mul_mod(a, b, n, IRREDUCIBLE[n])

    @pytest.mark.parametrize("n", range(1, 5))
    def test_distributive_and_associative(self, n):
        size = 1 << n
        for a, x, y in itertools.product(range(size), repeat=3):
            assert gf_mul(a, x ^ y, n) == gf_mul(a, x, n) ^ gf_mul(a, y, n)
            assert gf_mul(gf_mul(a, x, n), y, n) == gf_mul(a, gf_mul(x, y, n), n)

    @pytest.mark.parametrize("n", range(1, 9))
    def test_every_nonzero_element_invertible(self, n):
        size = 1 << n
        for a in range(1, size):
            assert any(gf_mul(a, b, n) == 1 for b in range(1, size))


class TestAffineFamily:
    def test_one_bit(self):
        fam = affine_family(1, 1)
        assert fam.size == 4
        rows = {tuple(r) for r in fam.table.tolist()}
        assert rows == {(0, 0), (1, 1), (0, 1), (1, 0)}

    def test_two_to_one_counts(self):
        fam = affine_family(2, 1)
        assert fam.size == 16
        counts = joint_counts(fam.table.tolist(), 2)
        for pair, d in counts.items():
            assert len(d) == 4
            assert all(v == 4 for v in d.values())  # 4/16 = 1/|C|^2

    @pytest.mark.parametrize("n,m", [(n, m) for n in range(1, 5) for m in range(1, n + 1)])
    def test_strongly_universal(self, n, m):
        fam = affine_family(n, m)
        assert fam.size == 1 << (2 * n)
        rep = verify_strong_2universal(fam)
        assert rep.ok and rep.worst_deviation == 0

    def test_strongly_universal_matches_loop_oracle(self):
        fam = affine_family(3, 3)
        counts = joint_counts(fam.table.tolist(), 8)
        assert all(v == 1 for d in counts.values() for v in d.values())
        assert all(len(d) == 64 for d in counts.values())

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            affine_family(9, 1)
        with pytest.raises(ValueError):
            affine_family(3, 4)
        with pytest.raises(ValueError):
            affine_family(3, 0)


class TestVerification:
    def test_singleton_identity_fails(self):
        rep = verify_strong_2universal(identity_family(1))
        assert not rep.ok
        assert rep.worst_deviation == Fraction(3, 4)

    def test_constant_functions_fail(self):
        rep = verify_strong_2universal(constant_family(2, 1))
        assert not rep.ok
        # h(a) = h(a') always: Pr[c != c'] = 0 against 1/4
        assert rep.worst_deviation == Fraction(1, 4)

    def test_nonuniform_weights(self):
        fam = affine_family(2, 1)
        w = np.full(fam.size, 1 / fam.size)
        assert verify_strong_2universal(family_from_table(fam.table, 2, weights=w)).ok
        w2 = w.copy()
        w2[0] += 1 / 32
        w2[1] -= 1 / 32
        assert not verify_strong_2universal(family_from_table(fam.table, 2, weights=w2)).ok


def cq_uniform_constant(n_symbols, rho_e):
    return CQState(np.repeat(rho_e[None] / n_symbols, n_symbols, axis=0))


class TestHashChannel:
    def test_single_output_symbol(self):
        fam = family_from_table(np.zeros((1, 8), dtype=int), 1)
        st_ = random_cq_state(8, 2, make_rng(1))
        out = hash_channel_apply(fam, 0, st_)
        assert out.n_symbols == 1
        np.testing.assert_allclose(out.blocks[0], st_.marginal_e(), atol=1e-15)

    def test_injective_relabels(self):
        fam = affine_family(3, 3)
        st_ = random_cq_state(8, 2, make_rng(2))
        k = 8 * 3 + 5  # a=3 != 0, so x -> 3x + 5 is a bijection
        out = hash_channel_apply(fam, k, st_)
        for a in range(8):
            np.testing.assert_array_equal(out.blocks[fam(k, a)], st_.blocks[a])

    def test_uniform_input_preimage_profile(self):
        fam = affine_family(3, 2)
        rho_e = random_cq_state(1, 2, make_rng(3)).blocks[0]
        st_ = cq_uniform_constant(8, rho_e)
        for k in range(fam.size):
            out = hash_channel_apply(fam, k, st_)
            sizes = np.bincount(fam.table[k], minlength=4)
            np.testing.assert_allclose(out.pmf(), sizes / 8, atol=1e-14)

    def test_trace_and_marginal_preserved(self):
        fam = affine_family(3, 1)
        st_ = random_cq_state(8, 3, make_rng(4))
        for k in range(0, fam.size, 5):
            out = hash_channel_apply(fam, k, st_)
            assert out.pmf().sum() == pytest.approx(1, abs=1e-14)
            np.testing.assert_allclose(out.marginal_e(), st_.marginal_e(), atol=1e-14)

    def test_average_over_family_returns_marginal(self):
        fam = affine_family(2, 1)
        st_ = random_cq_state(4, 2, make_rng(5))
        avg = sum(w * hash_channel_apply(fam, k, st_).blocks for k, w in enumerate(fam.weights))
        np.testing.assert_allclose(avg.sum(axis=0), st_.marginal_e(), atol=1e-14)

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            hash_channel_apply(affine_family(1, 1), 4, random_cq_state(2, 2, make_rng(0)))

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            hash_channel_apply(affine_family(2, 1), 0, random_cq_state(8, 2, make_rng(0)))


class TestRandomizing:
    def test_deterministic_symbol_ratio(self):
        # pure rho_E on one symbol: (|c><c| - 1/2) x psi has 2-norm sqrt(1/2) for every h
        blocks = np.zeros((2, 2, 2), dtype=complex)
        blocks[0, 0, 0] = 1
        op = CQState(blocks)
        fam = affine_family(1, 1)
        assert second_moment(fam, op) == pytest.approx(1.0)
        assert randomizing_ratio_cq(fam, op).mean == pytest.approx(math.sqrt(0.5), abs=1e-14)

    def test_all_constant_to_uniform_output_is_zero(self):
        # single output symbol: R^h == U, so the deviation vanishes identically
        fam = family_from_table(np.zeros((3, 4), dtype=int), 1)
        op = random_cq_operator(4, 2, make_rng(6), "general")
        assert randomizing_ratio_cq(fam, op).mean == 0.0

    @pytest.mark.parametrize("kind", ["state", "hermitian", "normal", "general"])
    def test_second_moment_identity(self, kind):
        fam = affine_family(3, 1)
        op = random_cq_operator(8, 2, make_rng(7), kind)
        b = op.blocks
        gram = np.einsum("aij,bij->ab", b, b.conj()).real  # tr[X(a) X(b)^dagger]
        # exact collision probabilities from the table
        coll = np.mean(fam.table[:, :, None] == fam.table[:, None, :], axis=0)
        exact = float(np.sum(coll * gram))
        assert second_moment(fam, op) == pytest.approx(exact, rel=1e-12)
        off = ~np.eye(8, dtype=bool)
        np.testing.assert_allclose(coll[off], 0.5)
        e = op.marginal_e()
        bound = op.norm2() ** 2 + np.trace(e @ e.conj().T).real / 2
        assert second_moment(fam, op) <= bound + 1e-9

    def test_lemma_contraction_small(self):
        fam = affine_family(3, 1)
        est = empirical_lambda_cq(fam, 500, make_rng(8))
        assert est.max_ratio <= 1 + 1e-9
        assert len(est.ratios) == 500

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds, n=st.integers(1, 4), data=st.data())
    def test_contraction_property(self, seed, n, data):
        m = data.draw(st.integers(1, n))
        kind = data.draw(st.sampled_from(["state", "hermitian", "normal", "general"]))
        fam = affine_family(n, m)
        op = random_cq_operator(1 << n, data.draw(st.integers(1, 3)), make_rng(seed), kind)
        assert randomizing_ratio_cq(fam, op).mean <= 1 + 1e-9

    def test_exact_vs_subsampled_average(self):
        fam = affine_family(3, 1)
        op = random_cq_operator(8, 2, make_rng(9), "state")
        exact = randomizing_ratio_cq(fam, op)
        sub = family_average(fam, lambda idx: np.sqrt(np.sum(np.abs(deviation_blocks(fam, op)[idx]) ** 2,
                                                               axis=(1, 2, 3))),
                             rng=make_rng(10), max_members=10, samples=4000)
        assert exact.exact and not sub.exact
        assert abs(sub.mean - exact.mean * op.norm2()) <= 4 * sub.stderr


class TestCQOperators:
    def test_matrix_roundtrip(self):
        op = random_cq_operator(4, 3, make_rng(11), "general")
        back = CQOperator.from_matrix(op.to_matrix(), 4)
        np.testing.assert_array_equal(back.blocks, op.blocks)

    def test_from_matrix_rejects_coherence(self):
        m = np.full((4, 4), 0.25)
        with pytest.raises(ValueError):
            CQOperator.from_matrix(m, 2)

    def test_state_validation(self):
        with pytest.raises(ValueError):
            CQState(np.ones((2, 1, 1)))
        with pytest.raises(ValueError):
            CQState(np.array([[[1.5]], [[-0.5]]]))

    def test_random_state_is_state(self):
        st_ = random_cq_state(8, 3, make_rng(12), rank=1)
        assert st_.pmf().sum() == pytest.approx(1)
        for blk in st_.blocks:
            assert np.linalg.matrix_rank(blk, tol=1e-12) == 1


class TestSerialization:
    @pytest.mark.parametrize("n,m", [(1, 1), (3, 2), (4, 4)])
    def test_roundtrip(self, n, m):
        fam = affine_family(n, m)
        back = load_family(dump_family(fam))
        np.testing.assert_array_equal(back.table, fam.table)
        assert back.params == fam.params

    def test_text_is_stable(self):
        text = dump_family(affine_family(1, 1))
        assert text == "n=1 m=1 poly=0x3\n0 0\n0 1\n1 0\n1 1\n"

    def test_bad_header(self):
        with pytest.raises(ValueError):
            load_family("n=3 m=1 poly=0x3\n0 0\n")
        with pytest.raises(ValueError):
            load_family("garbage\n")
