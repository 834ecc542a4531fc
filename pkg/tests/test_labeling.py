import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aquafloc.labeling import (
    CSV_HEADER,
    TABLE1_ROWS,
    Dataset,
    InvalidParam,
    ParseError,
    generate_dataset,
    label_sample,
    load_dataset,
    save_dataset,
    table1_dataset,
)
from aquafloc.model import Condition, Thresholds

GOOD_BANDS = dict(temp=(24.0, 30.0), ph=(6.0, 9.0), tds=(1200.0, 1800.0))


class TestLabelSample:
    @pytest.mark.parametrize("cond,temp,ph,tds", TABLE1_ROWS)
    def test_reference_rows(self, cond, temp, ph, tds):
        assert label_sample((temp, ph, tds)) is Condition(cond)

    def test_boundaries_inclusive(self):
        assert label_sample((24.0, 6.0, 1200.0)) is Condition.GOOD
        assert label_sample((30.0, 9.0, 1800.0)) is Condition.GOOD

    @pytest.mark.parametrize(
        "features",
        [
            (23.999, 7.5, 1500.0),
            (30.001, 7.5, 1500.0),
            (27.0, 5.999, 1500.0),
            (27.0, 9.001, 1500.0),
            (27.0, 7.5, 1199.99),
            (27.0, 7.5, 1800.01),
        ],
    )
    def test_single_axis_excursion_is_bad(self, features):
        assert label_sample(features) is Condition.BAD

    @given(
        st.floats(min_value=20.0, max_value=35.0),
        st.floats(min_value=5.0, max_value=11.0),
        st.floats(min_value=900.0, max_value=2000.0),
    )
    def test_good_requires_every_axis_inside(self, temp, ph, tds):
        # Conjunctive oracle computed without label_sample.
        inside = (
            GOOD_BANDS["temp"][0] <= temp <= GOOD_BANDS["temp"][1]
            and GOOD_BANDS["ph"][0] <= ph <= GOOD_BANDS["ph"][1]
            and GOOD_BANDS["tds"][0] <= tds <= GOOD_BANDS["tds"][1]
        )
        expected = Condition.GOOD if inside else Condition.BAD
        assert label_sample((temp, ph, tds)) is expected

    def test_custom_thresholds(self):
        tight = Thresholds(25.0, 26.0, 7.0, 8.0, 1700.0, 1760.0)
        assert label_sample((25.5, 7.5, 1750.0), tight) is Condition.GOOD
        assert label_sample((24.98, 7.81, 1350.0), tight) is Condition.BAD


class TestGenerateDataset:
    def test_shapes_and_ranges(self):
        ds = generate_dataset(500, seed=3)
        assert len(ds) == 500
        assert ds.features.shape == (500, 3)
        assert ds.features.dtype == np.float64
        assert ds.labels.shape == (500,)
        lo = np.array([20.0, 5.0, 900.0])
        hi = np.array([35.0, 11.0, 2000.0])
        assert (ds.features >= lo).all() and (ds.features <= hi).all()
        assert set(np.unique(ds.labels)) <= {0.0, 1.0}

    def test_deterministic_per_seed(self):
        a = generate_dataset(200, seed=42, noise_rate=0.21)
        b = generate_dataset(200, seed=42, noise_rate=0.21)
        assert a == b
        c = generate_dataset(200, seed=43, noise_rate=0.21)
        assert a != c

    def test_clean_labels_match_rule(self):
        ds = generate_dataset(1000, seed=7, noise_rate=0.0)
        for (temp, ph, tds), label in zip(ds.features, ds.labels):
            assert label_sample((temp, ph, tds)).to_value() == label

    def test_noisy_twin_shares_features(self):
        clean = generate_dataset(4000, seed=1, noise_rate=0.0)
        noisy = generate_dataset(4000, seed=1, noise_rate=0.21)
        assert np.array_equal(clean.features, noisy.features)
        flipped = float(np.mean(clean.labels != noisy.labels))
        assert abs(flipped - 0.21) < 0.02

    def test_noise_rate_one_flips_everything(self):
        clean = generate_dataset(300, seed=5, noise_rate=0.0)
        inverted = generate_dataset(300, seed=5, noise_rate=1.0)
        assert np.array_equal(inverted.labels, 1.0 - clean.labels)

    def test_values_quantized_to_two_decimals(self):
        ds = generate_dataset(300, seed=9)
        assert np.array_equal(ds.features, np.round(ds.features, 2))

    @pytest.mark.parametrize("n", [0, -5])
    def test_rejects_non_positive_n(self, n):
        with pytest.raises(InvalidParam):
            generate_dataset(n)

    @pytest.mark.parametrize("rate", [-0.01, 1.0001, 2.0])
    def test_rejects_noise_rate_outside_unit_interval(self, rate):
        with pytest.raises(InvalidParam):
            generate_dataset(10, noise_rate=rate)

    def test_endpoints_of_noise_range_accepted(self):
        generate_dataset(10, noise_rate=0.0)
        generate_dataset(10, noise_rate=1.0)


class TestCsvRoundTrip:
    def test_round_trip_exact(self, tmp_path):
        ds = generate_dataset(250, seed=11, noise_rate=0.3)
        p = tmp_path / "data.csv"
        save_dataset(ds, p)
        loaded = load_dataset(p)
        assert loaded == ds

    def test_header_written(self, tmp_path):
        p = tmp_path / "data.csv"
        save_dataset(table1_dataset(), p)
        first = p.read_text().splitlines()[0]
        assert first == ",".join(CSV_HEADER)

    def test_table1_file_shape(self, tmp_path):
        p = tmp_path / "t1.csv"
        save_dataset(table1_dataset(), p)
        loaded = load_dataset(p)
        assert len(loaded) == 10
        assert float(loaded.labels.sum()) == 5.0

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        with pytest.raises(ParseError):
            load_dataset(p)

    def test_header_only_gives_empty_dataset(self, tmp_path):
        p = tmp_path / "hdr.csv"
        p.write_text(",".join(CSV_HEADER) + "\n")
        ds = load_dataset(p)
        assert len(ds) == 0
        assert ds.features.shape == (0, 3)

    def test_wrong_header_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("temp,ph,tds\nGood,25,7,1500\n")
        with pytest.raises(ParseError) as exc:
            load_dataset(p)
        assert exc.value.line_no == 1

    def test_bad_condition_token_reports_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text(",".join(CSV_HEADER) + "\nGood,25.00,7.00,1500\nOkay,25.00,7.00,1500\n")
        with pytest.raises(ParseError) as exc:
            load_dataset(p)
        assert exc.value.line_no == 3

    def test_non_numeric_value_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text(",".join(CSV_HEADER) + "\nGood,warm,7.00,1500\n")
        with pytest.raises(ParseError):
            load_dataset(p)

    def test_wrong_column_count_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text(",".join(CSV_HEADER) + "\nGood,25.00,7.00\n")
        with pytest.raises(ParseError):
            load_dataset(p)


class TestReferenceTable:
    def test_ten_rows_balanced(self):
        ds = table1_dataset()
        assert len(ds) == 10
        assert float(ds.labels.sum()) == 5.0

    def test_labels_consistent_with_rule(self):
        ds = table1_dataset()
        for (temp, ph, tds), label in zip(ds.features, ds.labels):
            assert label_sample((temp, ph, tds)).to_value() == label


class TestDatasetContainer:
    def test_rejects_misshapen_features(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((4, 2)), np.zeros(4))

    def test_rejects_label_length_mismatch(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((4, 3)), np.zeros(5))

    def test_provenance_excluded_from_equality(self):
        a = Dataset(np.zeros((2, 3)), np.zeros(2), provenance="a")
        b = Dataset(np.zeros((2, 3)), np.zeros(2), provenance="b")
        assert a == b

    def test_rows_iterates_labeled_samples(self):
        ds = table1_dataset()
        rows = list(ds.rows())
        assert len(rows) == 10
        assert rows[0].condition is Condition.GOOD
        assert rows[0].temperature == 24.98
        assert rows[-1].condition is Condition.BAD
