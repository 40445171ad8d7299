import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from fouriersharp import stats
from fouriersharp.errors import DegenerateInputError, NoThresholdError
from fouriersharp.spectral import Descriptor

finite = st.floats(-1e3, 1e3, allow_nan=False)
vectors = arrays(np.float64, st.integers(4, 40), elements=finite)


def _spread(v):
    return np.ptp(v) > 1e-3 * max(1.0, np.max(np.abs(v)))


class TestNormalize:
    def test_example(self):
        np.testing.assert_allclose(stats.normalize_probability([2, 2, 4]), [0.25, 0.25, 0.5])

    def test_zero_vector(self):
        with pytest.raises(DegenerateInputError):
            stats.normalize_probability([0.0, 0.0, 0.0])

    def test_accepts_descriptor(self):
        p = stats.normalize_probability(Descriptor(np.array([1.0, 3.0]), "x"))
        np.testing.assert_allclose(p, [0.25, 0.75])

    @given(arrays(np.float64, st.integers(1, 50), elements=st.floats(0, 1e6)))
    def test_sum_and_idempotence(self, v):
        assume(v.sum() > 0)
        p = stats.normalize_probability(v)
        assert abs(p.sum() - 1) <= 1e-9
        assert np.all(p >= 0)
        np.testing.assert_allclose(stats.normalize_probability(p), p, rtol=1e-12, atol=1e-15)


class TestKurtosis:
    def test_two_point(self):
        assert stats.kurtosis([-1.0, 1.0]) == pytest.approx(-2.0, abs=1e-15)

    def test_normal_samples(self):
        x = np.random.default_rng(0).standard_normal(1_000_000)
        assert abs(stats.kurtosis(x)) < 0.05

    def test_zero_variance(self):
        with pytest.raises(DegenerateInputError):
            stats.kurtosis([5.0, 5.0, 5.0])

    def test_too_short(self):
        with pytest.raises(ValueError):
            stats.kurtosis([1.0])

    @given(vectors)
    @settings(max_examples=60)
    def test_matches_loop_oracle(self, v):
        assume(_spread(v))
        assert stats.kurtosis(v) == pytest.approx(oracles.kurtosis(v.tolist()), rel=1e-10, abs=1e-12)

    @given(vectors, st.floats(-1e3, 1e3), st.floats(0.01, 100).flatmap(lambda a: st.sampled_from([a, -a])))
    @settings(max_examples=60)
    def test_translation_and_scale_invariant(self, v, shift, scale):
        assume(_spread(v))
        k = stats.kurtosis(v)
        assert stats.kurtosis(v + shift) == pytest.approx(k, abs=1e-9, rel=1e-9)
        assert stats.kurtosis(v * scale) == pytest.approx(k, abs=1e-9, rel=1e-9)


class TestKurtosisMatrix:
    def test_shape_and_first_row(self, rng):
        stack = [rng.uniform(0, 1, 32) for _ in range(5)]
        km = stats.kurtosis_matrix(stack)
        assert km.shape == (32 - stats.DEFAULT_MIN_TAIL + 1, 5)
        assert km.crop_sizes[0] == 0
        np.testing.assert_allclose(km.entries[0], [stats.kurtosis(v) for v in stack], rtol=1e-12)

    def test_matches_double_loop(self, rng):
        stack = [stats.normalize_probability(rng.uniform(0, 1, 32)) for _ in range(5)]
        km = stats.kurtosis_matrix(stack, min_tail=4)
        for r, c in enumerate(km.crop_sizes):
            for i, v in enumerate(stack):
                expected = oracles.kurtosis(v[c:].tolist())
                assert km.entries[r, i] == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_zero_variance_rows_invalid(self):
        a = np.array([3.0, 1.0, 2.0, 1.0, 1.0, 1.0])
        b = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        km = stats.kurtosis_matrix([a, b], min_tail=2)
        assert km.valid.tolist() == [True, True, True, False, False]
        assert np.all(np.isnan(km.entries[3:]))

    def test_unequal_lengths(self):
        with pytest.raises(ValueError):
            stats.kurtosis_matrix([np.ones(10), np.ones(12)])


def _km(rows):
    rows = np.asarray(rows, dtype=float)
    return stats.KurtosisMatrix(rows, list(range(len(rows))), np.ones(len(rows), dtype=bool))


class TestOptimalCrop:
    def test_hand_trace(self):
        assert stats.optimal_crop_threshold(_km([[1, 2], [0.5, 5], [-1, 3]])) == 1

    def test_single_eligible_row(self):
        assert stats.optimal_crop_threshold(_km([[-1, 2], [-0.5, 5], [1, 3], [-2, 0]])) == 2

    def test_tie_goes_to_smallest(self):
        assert stats.optimal_crop_threshold(_km([[0, 1], [2, 4], [5, 7], [1, 3]])) == 1

    def test_zero_is_not_negative(self):
        assert stats.optimal_crop_threshold(_km([[0, 0.5], [-0.1, 9]])) == 0

    def test_no_eligible_row(self):
        with pytest.raises(NoThresholdError):
            stats.optimal_crop_threshold(_km([[-1, 2], [3, -4]]))

    def test_invalid_rows_skipped(self):
        km = _km([[0, 1], [0, 9]])
        km.valid[1] = False
        assert stats.optimal_crop_threshold(km) == 0

    @given(arrays(np.int64, st.tuples(st.integers(1, 12), st.integers(2, 6)), elements=st.integers(-3, 6)))
    @settings(max_examples=100)
    def test_matches_exhaustive_search(self, rows):
        rows = rows.astype(float)
        expected = oracles.best_crop_exhaustive(rows.tolist(), list(range(len(rows))))
        if expected is None:
            with pytest.raises(NoThresholdError):
                stats.optimal_crop_threshold(_km(rows))
        else:
            assert stats.optimal_crop_threshold(_km(rows)) == expected


class TestIqr:
    def test_constant(self):
        assert stats.iqr([4.0] * 7) == 0.0

    def test_example(self):
        assert stats.iqr([1, 2, 3, 4]) == pytest.approx(1.5)

    @given(vectors, st.randoms())
    def test_permutation_invariant(self, v, rnd):
        w = v.tolist()
        rnd.shuffle(w)
        assert stats.iqr(w) == stats.iqr(v)

    @given(vectors)
    def test_matches_type7_oracle(self, v):
        assert stats.iqr(v) == pytest.approx(oracles.iqr(v.tolist()), rel=1e-12, abs=1e-9)

    @given(vectors, st.floats(-100, 100), st.floats(0.01, 100))
    def test_translation_and_homogeneity(self, v, c, a):
        base = stats.iqr(v)
        assert stats.iqr(v + c) == pytest.approx(base, abs=1e-9)
        assert stats.iqr(a * v) == pytest.approx(a * base, rel=1e-9, abs=1e-9)


class TestZscores:
    def test_example(self):
        np.testing.assert_allclose(stats.zscores([0, 10]), [-1.0, 1.0])

    def test_mean_element_is_zero(self):
        assert stats.zscores([1.0, 2.0, 3.0])[1] == 0.0

    def test_identical(self):
        with pytest.raises(DegenerateInputError):
            stats.zscores([0.3, 0.3, 0.3, 0.3])

    @given(vectors, st.floats(0.01, 100), st.floats(-100, 100))
    def test_standardized_and_affine_invariant(self, v, a, b):
        assume(_spread(v))
        z = stats.zscores(v)
        assert abs(z.mean()) < 1e-9 and abs(z.std() - 1) < 1e-9
        np.testing.assert_allclose(stats.zscores(a * v + b), z, atol=1e-7)


def _descriptors(rng, n=6, k=64):
    # power-law spectra with per-image slope, plus jitter
    r = np.arange(1, k + 1)
    out = []
    for i in range(n):
        slope = 1.0 + 0.3 * i
        out.append(Descriptor(r**-slope * (1 + 0.05 * rng.uniform(size=k)), f"im{i}"))
    return out


class TestClassifyStack:
    def test_record_invariants(self, rng):
        res = stats.classify_stack(_descriptors(rng), z_threshold=0.5)
        assert [r.source_id for r in res.records] == [f"im{i}" for i in range(6)]
        assert sorted(r.rank for r in res.records) == list(range(1, 7))
        for r in res.records:
            assert (r.label == "sharp") == (r.z_score >= 0.5)
            assert r.iqr_score >= 0
        by_score = sorted(res.records, key=lambda r: -r.iqr_score)
        assert [r.rank for r in by_score] == list(range(1, 7))

    def test_minus_infinity_threshold_labels_all_sharp(self, rng):
        res = stats.classify_stack(_descriptors(rng), z_threshold=-math.inf)
        assert all(r.label == "sharp" for r in res.records)

    def test_identical_images(self):
        d = Descriptor(np.arange(1, 33, dtype=float) ** -1.5)
        with pytest.raises(DegenerateInputError):
            stats.classify_stack([d, Descriptor(d.values.copy()), Descriptor(d.values.copy())])

    def test_single_image(self, rng):
        with pytest.raises(DegenerateInputError):
            stats.classify_stack(_descriptors(rng, n=1))

    def test_crop_threshold_matches_pipeline_steps(self, rng):
        ds = _descriptors(rng)
        probs = [stats.normalize_probability(d) for d in ds]
        c = stats.optimal_crop_threshold(stats.kurtosis_matrix(probs))
        res = stats.classify_stack(ds)
        assert res.crop_threshold == c
        np.testing.assert_allclose([r.iqr_score for r in res.records], [oracles.iqr(p[c:].tolist()) for p in probs])

    def test_csv_and_json(self, rng):
        res = stats.classify_stack(_descriptors(rng, n=3))
        lines = res.to_csv().splitlines()
        assert lines[0] == "source_id,iqr_score,z_score,label,rank"
        assert len(lines) == 4
        import json

        payload = json.loads(res.to_json())
        assert payload["crop_threshold"] == res.crop_threshold
        assert [r["source_id"] for r in payload["records"]] == ["im0", "im1", "im2"]
