import math
from itertools import product

import numpy as np
import pytest

from hopp.bayes_oracle import (
    ClassConditionalTable,
    embed,
    equivalence_check,
    exact_posterior,
    index_pattern,
    mask_key,
    max_posterior_deviation,
    mobius_transform,
    pattern_index,
    truncate_embedding,
    zeta_transform,
)
from hopp.errors import InvalidInputError, LogDomainError


class TestPatternIndexing:
    def test_x1_is_least_significant(self):
        assert pattern_index((1, 0, 0)) == 1
        assert pattern_index((0, 0, 1)) == 4

    def test_round_trip(self):
        for idx in range(16):
            assert pattern_index(index_pattern(idx, 4)) == idx

    def test_mask_key(self):
        assert mask_key(0) == ()
        assert mask_key(0b101) == (1, 3)


class TestExactPosterior:
    def test_uniform_tables_return_priors(self):
        K = 3
        tables = np.full((2, 8), 1 / 8)
        table = ClassConditionalTable(K, [0.3, 0.7], tables)
        for idx in range(8):
            np.testing.assert_allclose(
                exact_posterior(table, index_pattern(idx, K)), [0.3, 0.7]
            )

    def test_single_input_direct_ratio(self):
        table = ClassConditionalTable(1, [0.5, 0.5], [[0.1, 0.9], [0.9, 0.1]])
        np.testing.assert_allclose(exact_posterior(table, (1,)), [0.9, 0.1])

    def test_matches_longhand_enumeration(self):
        # oracle: spell out Bayes' rule term by term without vectorization
        rng = np.random.default_rng(20)
        table = ClassConditionalTable.random(3, L=3, rng=rng)
        for bits in product((0, 1), repeat=3):
            idx = bits[0] + 2 * bits[1] + 4 * bits[2]
            joint = [table.tables[c][idx] * table.priors[c] for c in range(3)]
            expected = [j / sum(joint) for j in joint]
            np.testing.assert_allclose(
                exact_posterior(table, bits), expected, atol=1e-14
            )

    def test_zero_evidence_rejected(self):
        tables = np.array([[0.0, 1.0], [0.0, 1.0]])
        table = ClassConditionalTable(1, [0.5, 0.5], tables)
        with pytest.raises(InvalidInputError):
            exact_posterior(table, (0,))

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            ClassConditionalTable(1, [0.5, 0.6], [[0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(InvalidInputError):
            ClassConditionalTable(1, [0.5, 0.5], [[0.7, 0.5], [0.5, 0.5]])


class TestSubsetTransforms:
    def test_mobius_zeta_are_inverse(self):
        rng = np.random.default_rng(21)
        for K in range(1, 7):
            f = rng.normal(size=1 << K)
            np.testing.assert_allclose(zeta_transform(mobius_transform(f)), f, atol=1e-9)
            np.testing.assert_allclose(mobius_transform(zeta_transform(f)), f, atol=1e-9)

    def test_known_small_case(self):
        # f over masks {}, {1}, {2}, {1,2}
        f = np.array([1.0, 3.0, 5.0, 11.0])
        out = mobius_transform(f)
        np.testing.assert_allclose(out, [1.0, 2.0, 4.0, 4.0])

    def test_rejects_non_power_of_two(self):
        with pytest.raises(InvalidInputError):
            mobius_transform(np.ones(3))


class TestEmbedding:
    def test_product_form_has_no_higher_order_weights(self):
        rng = np.random.default_rng(22)
        marginals = rng.uniform(0.1, 0.9, size=(2, 4))
        table = ClassConditionalTable.product_form(4, marginals, [0.4, 0.6])
        net = embed(table)
        for (lam, key), w in net.weights.items():
            if len(key) >= 2:
                assert abs(w) < 1e-10

    def test_pairwise_weight_is_the_log_cross_ratio(self):
        rng = np.random.default_rng(23)
        raw = rng.uniform(0.05, 1.0, size=(2, 4))
        tables = raw / raw.sum(axis=1, keepdims=True)
        table = ClassConditionalTable(2, [0.5, 0.5], tables)
        net = embed(table)
        for lam in (1, 2):
            t = tables[lam - 1]
            # index: x1 + 2*x2 -> t[0]=p(00), t[1]=p(10), t[2]=p(01), t[3]=p(11)
            expected = math.log(t[3] * t[0] / (t[1] * t[2]))
            assert net.weights[(lam, (1, 2))] == pytest.approx(expected, abs=1e-10)

    def test_exhaustive_equivalence_k4(self):
        rng = np.random.default_rng(24)
        table = ClassConditionalTable.random(4, rng=rng)
        net = embed(table)
        assert net.N == 4 and net.K == 4
        assert max_posterior_deviation(table, net) < 1e-10

    def test_random_tables_up_to_k4(self):
        assert equivalence_check(n_tables=10, max_k=4, rng=np.random.default_rng(25)) < 1e-10

    def test_sampled_patterns_k6(self):
        rng = np.random.default_rng(26)
        table = ClassConditionalTable.random(6, rng=rng)
        net = embed(table)
        patterns = [index_pattern(int(i), 6) for i in rng.integers(0, 64, size=12)]
        assert max_posterior_deviation(table, net, patterns) < 1e-9

    def test_zero_entries_rejected_without_smoothing(self):
        tables = np.array([[0.0, 1.0], [0.5, 0.5]])
        table = ClassConditionalTable(1, [0.5, 0.5], tables)
        with pytest.raises(LogDomainError):
            embed(table)
        net = embed(table, smooth=True)  # opt-in smoothing clears the zero
        assert np.isfinite(list(net.weights.values())).all()

    def test_rescaling_one_pattern_consistently_preserves_other_posteriors(self):
        # scale one pattern's column, renormalize rows, compensate priors:
        # weights move but posteriors (hence argmax) elsewhere do not
        rng = np.random.default_rng(27)
        table = ClassConditionalTable.random(3, rng=rng)
        c, p0 = 3.0, 5
        scaled = table.tables.copy()
        scaled[:, p0] *= c
        row_norms = scaled.sum(axis=1)
        scaled /= row_norms[:, None]
        new_priors = table.priors * row_norms
        new_priors /= new_priors.sum()
        other = ClassConditionalTable(3, new_priors, scaled)

        net_a, net_b = embed(table), embed(other)
        assert any(
            abs(net_a.weights[s] - net_b.weights[s]) > 1e-9 for s in net_a.weights
        )
        for idx in range(8):
            if idx == p0:
                continue
            pa = exact_posterior(table, index_pattern(idx, 3))
            pb = exact_posterior(other, index_pattern(idx, 3))
            np.testing.assert_allclose(pa, pb, atol=1e-12)
            assert np.argmax(pa) == np.argmax(pb)


class TestTruncation:
    def test_full_order_is_identity(self):
        rng = np.random.default_rng(28)
        table = ClassConditionalTable.random(3, rng=rng)
        net = embed(table)
        assert truncate_embedding(net, 3).weights == net.weights

    def test_product_form_survives_naive_truncation(self):
        rng = np.random.default_rng(29)
        marginals = rng.uniform(0.2, 0.8, size=(2, 3))
        table = ClassConditionalTable.product_form(3, marginals, [0.5, 0.5])
        naive = truncate_embedding(embed(table), 1)
        assert max_posterior_deviation(table, naive) < 1e-10

    def test_correlated_table_degrades_under_truncation(self):
        rng = np.random.default_rng(30)
        table = ClassConditionalTable.random(3, rng=rng, concentration=0.5)
        naive = truncate_embedding(embed(table), 1)
        assert max_posterior_deviation(table, naive) > 1e-6

    def test_order_above_k_rejected(self):
        table = ClassConditionalTable.random(2, rng=np.random.default_rng(31))
        with pytest.raises(InvalidInputError):
            truncate_embedding(embed(table), 3)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        table = ClassConditionalTable.random(3, rng=np.random.default_rng(32))
        path = tmp_path / "table.json"
        table.save(path)
        back = ClassConditionalTable.load(path)
        np.testing.assert_array_equal(back.priors, table.priors)
        np.testing.assert_array_equal(back.tables, table.tables)
