import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finprep.metrics import mse
from finprep.model import (
    ConditioningWarning,
    FittedModel,
    ModelError,
    ScalerParams,
    SplitSpec,
    cross_val_neg_mse,
    expand_poly,
    fit_model,
    fit_ols,
    fit_scaler,
    make_rng,
    shuffle_split,
    solve_least_squares,
)


class TestSplit:
    @pytest.mark.parametrize("n, n_test", [(60, 15), (5387, 1347), (42, 11), (4, 1), (5, 2)])
    def test_ceiling_sizes(self, n, n_test):
        train, test = shuffle_split(n)
        assert (len(train), len(test)) == (n - n_test, n_test)

    def test_deterministic(self):
        a = shuffle_split(5387, SplitSpec(seed=42))
        b = shuffle_split(5387, SplitSpec(seed=42))
        np.testing.assert_array_equal(a[1], b[1])
        c = shuffle_split(5387, SplitSpec(seed=43))
        assert not np.array_equal(a[1], c[1])

    def test_generator_is_pcg64(self):
        assert make_rng(42).permutation(5).tolist() == np.random.Generator(np.random.PCG64(42)).permutation(5).tolist()

    @given(st.integers(4, 3000), st.floats(0.01, 0.9), st.integers(0, 2**64 - 1))
    def test_partition(self, n, frac, seed):
        spec = SplitSpec(frac, seed)
        if spec.test_size(n) >= n:
            return
        train, test = shuffle_split(n, spec)
        assert len(test) == spec.test_size(n) == int(np.ceil(round(frac * n, 9)))
        assert np.intersect1d(train, test).size == 0
        assert sorted(np.concatenate([train, test]).tolist()) == list(range(n))

    def test_too_small(self):
        with pytest.raises(ModelError):
            shuffle_split(3)

    @pytest.mark.parametrize("frac", [0.0, 1.0, -0.1])
    def test_bad_fraction(self, frac):
        with pytest.raises(ModelError):
            SplitSpec(frac)

    def test_bad_seed(self):
        with pytest.raises(ModelError):
            make_rng(-1)


class TestScaler:
    def test_population_std(self):
        p = fit_scaler([1.0, 2.0, 3.0, 4.0])
        assert p.mean == 2.5
        assert p.std == pytest.approx(np.sqrt(1.25))

    def test_standardized_moments(self):
        v = np.random.default_rng(0).normal(50, 7, 500)
        z = fit_scaler(v).apply(v)
        assert abs(z.mean()) < 1e-12 and abs(z.std() - 1) < 1e-12

    def test_constant_column(self):
        with pytest.raises(ModelError, match="zero variance"):
            fit_scaler([3.0, 3.0, 3.0])

    @given(
        st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50).filter(lambda v: np.ptp(v) > 1e-3),
        st.floats(-1e6, 1e6),
    )
    def test_round_trip(self, values, probe):
        p = fit_scaler(values)
        assert p.invert(p.apply(probe)) == pytest.approx(probe, rel=1e-9, abs=1e-6)

    def test_positive_std_required(self):
        with pytest.raises(ModelError):
            ScalerParams(0.0, 0.0)


class TestLeastSquares:
    def test_expand_poly(self):
        np.testing.assert_array_equal(expand_poly([2.0, 3.0], 3), [[1, 2, 4, 8], [1, 3, 9, 27]])
        assert expand_poly(2.0, 2).tolist() == [1.0, 2.0, 4.0]

    def test_normal_equations_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            degree = int(rng.integers(1, 5))
            n = int(rng.integers(degree + 3, 51))
            x = rng.uniform(-2, 2, n)
            y = rng.normal(size=n)
            X = expand_poly(x, degree)
            ref = np.linalg.solve(X.T @ X, X.T @ y)
            np.testing.assert_allclose(fit_ols(X, y), ref, rtol=0, atol=1e-8)

    def test_exact_fit(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            degree = int(rng.integers(1, 5))
            beta = rng.normal(size=degree + 1)
            x = np.linspace(-1, 1, 30)
            X = expand_poly(x, degree)
            np.testing.assert_allclose(fit_ols(X, X @ beta), beta, rtol=0, atol=1e-10)

    def test_duplicate_x_gives_group_means(self):
        x = np.array([0.0, 0.0, 1.0, 1.0])
        y = np.array([1.0, 3.0, 5.0, 9.0])
        coef = fit_ols(expand_poly(x, 1), y)
        np.testing.assert_allclose(coef, [2.0, 5.0], atol=1e-12)

    def test_rank_deficient_warns(self):
        X = np.column_stack([np.ones(5), np.arange(5.0), 2 * np.arange(5.0)])
        with pytest.warns(ConditioningWarning):
            coef = fit_ols(X, np.arange(5.0))
        # minimum-norm split between the collinear columns
        assert coef[1] == pytest.approx(coef[2] / 2)

    def test_underdetermined(self):
        with pytest.raises(ModelError):
            solve_least_squares(np.ones((2, 3)), np.ones(2))

    def test_training_mse_non_increasing(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(0, 10, 200)
        y = np.sin(x) + 0.1 * rng.normal(size=200)
        prev = np.inf
        for degree in range(1, 13):
            m = fit_model(x, y, degree)
            cur = mse(m.y_scaler.apply(y), m.predict_scaled(m.x_scaler.apply(x)))
            assert cur <= prev + 1e-8, degree
            prev = cur


class TestFittedModel:
    def test_predict_consistency(self):
        x = np.linspace(1, 9, 40)
        y = 0.5 * x**2 - x + 4
        m = fit_model(x, y, 2)
        np.testing.assert_allclose(m.predict(x), y, atol=1e-9)
        z = m.x_scaler.apply(x)
        np.testing.assert_allclose(m.y_scaler.invert(m.predict_scaled(z)), m.predict(x))
        assert not m.ill_conditioned

    def test_hand_built(self):
        m = FittedModel(1, np.array([1.0, 2.0]))
        assert m.predict(3.0) == 7.0
        assert m.ill_conditioned is False

    def test_degree_zero_rejected(self):
        with pytest.raises(ModelError):
            fit_model([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 0)

    def test_high_degree_flags_rank(self):
        x = np.linspace(0, 1, 300)
        y = np.exp(x)
        with pytest.warns(ConditioningWarning):
            m = fit_model(x, y, 40)
        assert m.ill_conditioned


class TestCrossValidation:
    def test_line_scores_zero(self):
        x = np.linspace(0, 5, 25)
        assert cross_val_neg_mse(x, 3 * x + 1, 1) >= -1e-10

    def test_leave_one_out_exact(self):
        x = np.linspace(-1, 1, 8)
        assert cross_val_neg_mse(x, x**2 - x, 2, k=8) == pytest.approx(0.0, abs=1e-12)

    def test_noise_scores_negative(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=60)
        score = cross_val_neg_mse(x, rng.normal(size=60), 1)
        assert score < -0.5

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        x, y = rng.normal(size=50), rng.normal(size=50)
        assert cross_val_neg_mse(x, y, 2, seed=9) == cross_val_neg_mse(x, y, 2, seed=9)

    def test_bad_k(self):
        with pytest.raises(ModelError):
            cross_val_neg_mse(np.arange(4.0), np.arange(4.0), 1, k=5)
        with pytest.raises(ModelError):
            cross_val_neg_mse(np.arange(4.0), np.arange(4.0), 1, k=1)

    def test_quiet_on_folds(self):
        x = np.linspace(0, 1, 100)
        with warnings.catch_warnings():
            warnings.simplefilter("error", ConditioningWarning)
            cross_val_neg_mse(x, np.exp(x), 40)
