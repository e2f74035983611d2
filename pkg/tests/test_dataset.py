import io

import numpy as np
import pytest

from hopp.dataset import (
    COLUMNS,
    FeatureView,
    Scaler,
    SplitSpec,
    binarize,
    binarized_columns,
    bits_to_levels,
    fit_apply_scaler,
    levels_to_bits,
    parse_wdbc,
    project,
    quantize,
    serialize_wdbc,
    split,
)
from hopp.errors import InvalidInputError, InvalidViewError, WdbcParseError

GOOD_LINE = "8510426,B," + ",".join(str(0.1 * (i + 1)) for i in range(30))


class TestParse:
    def test_canonical_file(self, wdbc_records):
        assert len(wdbc_records) == 569

    def test_class_tally(self, wdbc_records):
        malignant = sum(1 for r in wdbc_records if r.is_malignant)
        assert malignant == 212
        assert len(wdbc_records) - malignant == 357

    def test_order_and_values_preserved(self, wdbc_records):
        first = wdbc_records[0]
        assert first.is_malignant
        assert first.features[0] == 17.99  # mean radius of the first record
        assert first.features[3] == 1001.0  # mean area

    def test_single_line(self):
        recs = parse_wdbc(io.StringIO(GOOD_LINE))
        assert len(recs) == 1
        assert recs[0].diagnosis == "benign"
        assert len(recs[0].features) == 30

    def test_wrong_field_count_names_line(self):
        bad = GOOD_LINE.rsplit(",", 1)[0]  # 29 features
        with pytest.raises(WdbcParseError) as err:
            parse_wdbc([GOOD_LINE, bad])
        assert err.value.line_number == 2
        assert "line 2" in str(err.value)

    def test_unknown_diagnosis(self):
        with pytest.raises(WdbcParseError):
            parse_wdbc([GOOD_LINE.replace(",B,", ",Q,")])

    def test_unparseable_number(self):
        with pytest.raises(WdbcParseError) as err:
            parse_wdbc([GOOD_LINE.replace("0.1,", "zap,")])
        assert err.value.line_number == 1

    def test_round_trip(self, wdbc_records):
        text = serialize_wdbc(wdbc_records[:25])
        again = parse_wdbc(io.StringIO(text))
        assert again == wdbc_records[:25]


class TestViews:
    def test_all30(self, wdbc_records):
        matrix, labels = project(wdbc_records, FeatureView.all30())
        assert matrix.shape == (569, 30)
        assert labels.sum() == 212

    def test_means(self, wdbc_records):
        view = FeatureView.means()
        assert view.K == 10
        matrix, _ = project(wdbc_records, view)
        assert matrix.shape[1] == 10
        assert matrix[0, 0] == 17.99

    def test_worst_and_stddev(self):
        assert FeatureView.worst().columns[0] == "worst radius"
        assert FeatureView.stddev().columns[-1] == "stddev fractal dimension"

    def test_named_triplet(self, wdbc_records):
        view = FeatureView.named(
            [("mean", "texture"), ("worst", "area"), ("worst", "smoothness")]
        )
        assert view.K == 3
        matrix, _ = project(wdbc_records, view)
        assert matrix[0, 0] == 10.38  # mean texture of the first record

    def test_unknown_column(self):
        with pytest.raises(InvalidViewError):
            FeatureView.named([("mean", "sparkle")])

    def test_duplicate_columns_rejected(self):
        with pytest.raises(InvalidViewError):
            FeatureView("dup", ("mean radius", "mean radius"))

    def test_from_spec(self):
        assert FeatureView.from_spec("worst").K == 10
        assert FeatureView.from_spec([["mean", "area"]]).columns == ("mean area",)
        with pytest.raises(InvalidViewError):
            FeatureView.from_spec("all31")


class TestScaler:
    def test_constant_column_maps_to_zero(self):
        train = np.array([[2.0], [2.0], [2.0]])
        scaled, _, _ = fit_apply_scaler(train, train)
        np.testing.assert_array_equal(scaled, np.zeros((3, 1)))

    def test_midpoint(self):
        train = np.array([[0.0], [10.0]])
        _, test_scaled, _ = fit_apply_scaler(train, np.array([[5.0]]))
        assert test_scaled[0, 0] == pytest.approx(0.5)

    def test_test_values_not_clipped(self):
        train = np.array([[0.0], [10.0]])
        _, test_scaled, _ = fit_apply_scaler(train, np.array([[12.0]]))
        assert test_scaled[0, 0] == pytest.approx(1.2)

    def test_idempotent_on_scaled_training_data(self):
        rng = np.random.default_rng(4)
        train = rng.normal(size=(40, 6)) * 17 + 3
        scaled, _, _ = fit_apply_scaler(train, train)
        again, _, _ = fit_apply_scaler(scaled, scaled)
        np.testing.assert_allclose(again, scaled, atol=1e-12)

    def test_column_mismatch(self):
        with pytest.raises(InvalidInputError):
            fit_apply_scaler(np.zeros((2, 3)), np.zeros((2, 4)))


class TestSplit:
    def test_wdbc_sizes(self):
        rng = np.random.default_rng(0)
        train_idx, test_idx = split(569, SplitSpec(0.9), rng)
        assert len(train_idx) == 512
        assert len(test_idx) == 57

    def test_same_seed_same_partition(self):
        a = split(100, SplitSpec(0.8, seed=42))
        b = split(100, SplitSpec(0.8, seed=42))
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_partition_property(self):
        for seed in range(25):
            tr, te = split(57, SplitSpec(0.7, seed=seed))
            combined = np.concatenate([tr, te])
            assert len(np.unique(combined)) == 57
            assert set(combined) == set(range(57))

    def test_degenerate_split_rejected(self):
        with pytest.raises(InvalidInputError):
            split(1, SplitSpec(0.5, seed=0))

    def test_stratified_preserves_proportions(self):
        labels = np.array([1] * 30 + [0] * 70)
        tr, te = split(labels, SplitSpec(0.8, seed=7, stratified=True))
        assert len(tr) == 24 + 56
        assert labels[tr].sum() == 24
        assert labels[te].sum() == 6

    def test_stratified_needs_labels(self):
        with pytest.raises(InvalidInputError):
            split(100, SplitSpec(0.8, seed=0, stratified=True))


class TestBinarize:
    def test_single_bit_threshold(self):
        out = binarize(np.array([[0.3, 0.7]]), B=1)
        np.testing.assert_array_equal(out, [[0.0, 1.0]])

    def test_two_bits(self):
        out = binarize(np.array([[0.9]]), B=2)
        np.testing.assert_array_equal(out, [[1.0, 1.0]])

    def test_boundary_clamped(self):
        out = binarize(np.array([[1.0]]), B=2)
        np.testing.assert_array_equal(out, [[1.0, 1.0]])

    def test_out_of_range_values_clipped_for_quantization(self):
        out = binarize(np.array([[-0.4, 1.7]]), B=3)
        np.testing.assert_array_equal(out[:, :3], [[0.0, 0.0, 0.0]])
        np.testing.assert_array_equal(out[:, 3:], [[1.0, 1.0, 1.0]])

    def test_shape_and_names(self):
        out = binarize(np.zeros((5, 4)), B=3)
        assert out.shape == (5, 12)
        names = binarized_columns(("a", "b"), 2)
        assert names == ("a bit0", "a bit1", "b bit0", "b bit1")

    def test_levels_round_trip(self):
        rng = np.random.default_rng(6)
        for B in (1, 2, 4, 8):
            levels = rng.integers(0, 1 << B, size=(20, 7))
            np.testing.assert_array_equal(bits_to_levels(levels_to_bits(levels, B), B), levels)

    def test_quantize_matches_levels(self):
        m = np.array([[0.0, 0.24, 0.25, 0.49, 0.5, 0.99, 1.0]])
        np.testing.assert_array_equal(quantize(m, 2)[0], [0, 0, 1, 1, 2, 3, 3])

    def test_bad_bit_count(self):
        with pytest.raises(InvalidInputError):
            binarize(np.zeros((1, 1)), B=0)
