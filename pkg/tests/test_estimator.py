from dataclasses import dataclass, replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from condensity import estimator as E
from condensity import synthetic
from condensity.errors import DegenerateTarget, TooFewSamples
from condensity.regress import KnnConfig, TreeConfig
from condensity.transform import RawDataset, ScalerState

UNIT_GRID = np.linspace(0.0, 1.0, 500)


@dataclass(frozen=True)
class FunctionModel:
    """Stub regressor: predict(rows) = func(x, g) on unscaled rows."""

    func: object
    input_dim: int
    variant = "stub"

    def predict(self, rows):
        return self.func(rows[:, :-1], rows[:, -1])


def stub_estimator(func, d=1, y_min=0.0, y_max=1.0, grid_size=500):
    scaler = ScalerState(y_min, y_max, np.zeros(d + 1), np.ones(d + 1), 0.0, 1.0)
    return E.FittedEstimator(FunctionModel(func, d + 1), scaler, E.FitConfig(grid_size=grid_size), np.nan)


def random_test_set(n=50, d=1, seed=0):
    rng = np.random.default_rng(seed)
    return RawDataset(rng.normal(size=(n, d)), rng.uniform(-0.5, 1.5, size=n))


# ---- quadrature and quantiles ---------------------------------------------


def test_trapezoid_exact_cases():
    grid = np.array([0.0, 0.1, 0.35, 0.9, 1.0])
    assert E.trapezoid(np.ones(5), grid) == 1.0
    assert E.trapezoid(UNIT_GRID, UNIT_GRID) == pytest.approx(0.5, abs=1e-15)
    assert abs(E.trapezoid(UNIT_GRID**2, UNIT_GRID) - 1 / 3) <= 1e-5


def test_trapezoid_rejects_bad_grid():
    with pytest.raises(ValueError):
        E.trapezoid([1.0, 1.0, 1.0], [0.0, 0.5, 0.5])
    with pytest.raises(ValueError):
        E.trapezoid([1.0], [0.0])


def uniform_curve():
    return E.DensityCurve(UNIT_GRID, np.ones(500))


def triangular_curve():
    return E.DensityCurve(UNIT_GRID, 2.0 * (1.0 - UNIT_GRID))


def test_quantiles_uniform():
    assert abs(E.density_quantile(uniform_curve(), 0.1) - 0.1) <= 1e-6
    assert abs(E.density_quantile(uniform_curve(), 0.5) - 0.5) <= 1e-6


@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_quantiles_triangular(p):
    # analytic CDF F(y) = 1 - (1 - y)^2
    assert abs(E.density_quantile(triangular_curve(), p) - (1 - np.sqrt(1 - p))) <= 2e-3


def test_quantile_rejects_p():
    for p in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            E.density_quantile(uniform_curve(), p)


@given(st.lists(st.floats(0.01, 0.99), min_size=2, max_size=5, unique=True))
def test_quantiles_monotone(ps):
    curve = E.DensityCurve(UNIT_GRID, 1.0 + np.sin(7 * UNIT_GRID) ** 2)
    qs = [E.density_quantile(curve, p) for p in sorted(ps)]
    assert all(b >= a for a, b in zip(qs, qs[1:]))


def test_summaries_uniform():
    s = E.density_summaries(uniform_curve())
    assert abs(s["tail_width"] - 0.8) <= 1e-6
    assert abs(s["bowley_skew"]) <= 1e-6
    assert s["mode"] == 0.0  # ties resolve to the lowest grid point


def test_summaries_symmetric():
    v = np.exp(-0.5 * ((UNIT_GRID - 0.5) / 0.13) ** 2)
    s = E.density_summaries(E.DensityCurve(UNIT_GRID, v / E.trapezoid(v, UNIT_GRID)))
    assert abs(s["bowley_skew"]) <= 1e-6
    assert s["mode"] == pytest.approx(0.5, abs=1.1 / 499)


def test_summaries_triangular():
    s = E.density_summaries(triangular_curve())
    d1, m, d9 = 1 - np.sqrt(0.9), 1 - np.sqrt(0.5), 1 - np.sqrt(0.1)
    assert abs(s["bowley_skew"] - ((d9 - m) - (m - d1)) / (d9 - d1)) <= 5e-3
    assert abs(s["bowley_skew"] - 0.2361) <= 5e-3
    assert s["mode"] == 0.0


# ---- post-processing and ISE ----------------------------------------------


@given(arrays(float, 500, elements=st.floats(-50, 50)))
def test_normalized_curves_have_unit_mass(raw):
    out = E.normalize_densities(raw, UNIT_GRID)
    assert (out >= 0).all()
    assert abs(E.trapezoid(out, UNIT_GRID) - 1.0) <= 1e-9


def test_nonpositive_predictions_fall_back_to_uniform():
    est = stub_estimator(lambda x, g: -1.0 - g)
    curve = E.predict_density(est, [0.3])
    np.testing.assert_array_equal(curve.values, np.ones(500))


def test_positive_bump_only_renormalized():
    bump = lambda x, g: 3.0 * np.exp(-0.5 * ((g - 0.4) / 0.1) ** 2)
    curve = E.predict_density(stub_estimator(bump), [0.0])
    expected = bump(None, UNIT_GRID) / E.trapezoid(bump(None, UNIT_GRID), UNIT_GRID)
    np.testing.assert_allclose(curve.values, expected, rtol=0, atol=1e-12)


def test_predict_raw_shapes_and_constant():
    est = E.constant_estimator(2, value=0.7)
    np.testing.assert_array_equal(E.predict_raw(est, [1.0, 2.0], [0.25]), [0.7])
    np.testing.assert_array_equal(E.predict_raw(est, [1.0, 2.0], UNIT_GRID), np.full(500, 0.7))
    with pytest.raises(ValueError):
        E.predict_raw(est, [1.0], UNIT_GRID)


def test_to_original_units():
    sc = ScalerState(0.0, 10.0, np.zeros(2), np.ones(2), 0.0, 1.0)
    grid, values = E.to_original_units(uniform_curve(), sc)
    assert grid[0] == 0.0 and grid[-1] == 10.0
    np.testing.assert_allclose(values, 0.1)
    assert abs(E.trapezoid(values, grid) - 1.0) <= 1e-9
    ident = ScalerState(0.0, 1.0, np.zeros(2), np.ones(2), 0.0, 1.0)
    grid, values = E.to_original_units(triangular_curve(), ident)
    np.testing.assert_array_equal(grid, UNIT_GRID)
    np.testing.assert_array_equal(values, triangular_curve().values)


@given(st.floats(-100, 100), st.floats(0.01, 100))
def test_original_units_keep_unit_mass(lo, span):
    sc = ScalerState(lo, lo + span, np.zeros(2), np.ones(2), 0.0, 1.0)
    grid, values = E.to_original_units(triangular_curve(), sc)
    assert abs(E.trapezoid(values, grid) - 1.0) <= 1e-9


def test_uniform_stub_ise_is_minus_one():
    for seed in range(3):
        rep = E.ise(E.constant_estimator(2, -3.0, 4.0), random_test_set(d=2, seed=seed))
        assert rep.value == -1.0
        assert rep.grid_size == 500 and rep.n_test == 50
        assert rep.value_original_units == -1.0 / 7.0


def test_zero_density_ise_is_zero():
    zeros = np.zeros((10, 500))
    assert E.ise_from_densities(zeros, UNIT_GRID, np.linspace(0, 1, 10)) == 0.0


def test_oracle_density_ise_matches_quadrature():
    mech = synthetic.mechanism("illustration2d")
    lo, hi = -15.0, 15.0
    truth = lambda x, g: (hi - lo) * synthetic.true_density(mech, x, lo + g * (hi - lo))
    est = stub_estimator(truth, d=1, y_min=lo, y_max=hi)
    test = synthetic.sample(mech, 20000, seed=3)
    value = E.ise(est, test).value

    def sq_norm(x):  # int f(y|x)^2 dy for a Gaussian with variance 0.25 + x^2
        return 1.0 / (2.0 * np.sqrt(np.pi) * np.sqrt(0.25 + x * x))

    phi = lambda x: np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi)
    expected = -(hi - lo) * integrate.quad(lambda x: phi(x) * sq_norm(x), -np.inf, np.inf)[0]
    assert expected == pytest.approx(-10.3948, abs=1e-4)
    assert value == pytest.approx(expected, rel=0.02)


# ---- fitting ----------------------------------------------------------------


def fast_config(**kw):
    base = dict(M=20, h=0.05, grid_size=100, regressor=TreeConfig(max_rounds=30, min_data_in_leaf=20), seed=1)
    base.update(kw)
    return E.FitConfig(**base)


def test_fit_is_deterministic(small_single_relevant):
    a = E.fit(small_single_relevant, fast_config())
    b = E.fit(small_single_relevant, fast_config())
    assert a.validation_ise == b.validation_ise
    assert a.ise_history == b.ise_history


def test_fit_keeps_best_snapshot(small_single_relevant):
    est = E.fit(small_single_relevant, fast_config(patience=3))
    assert est.validation_ise == min(est.ise_history)
    assert est.n_train == 1200 and est.n_val == 300
    # the returned model reproduces its recorded validation ISE
    _, val_idx = E.split_indices(1500, 0.8, est.config.seed)
    assert E.ise(est, small_single_relevant.subset(val_idx)).value == pytest.approx(est.validation_ise, abs=1e-9)


def test_fit_stops_after_patience(small_single_relevant):
    est = E.fit(small_single_relevant, fast_config(patience=1, regressor=TreeConfig(max_rounds=200)))
    hist = np.array(est.ise_history)
    assert len(hist) < 200
    assert hist[-1] >= hist[:-1].min()


def test_knn_all_neighbours_gives_uniform(small_single_relevant):
    cfg = fast_config(M=2, regressor=KnnConfig(k=10**9))
    est = E.fit(small_single_relevant, cfg)
    curve = E.predict_density(est, small_single_relevant.x[0])
    np.testing.assert_allclose(curve.values, 1.0, rtol=1e-12)


def test_predict_raw_matches_manual_composition(small_single_relevant):
    est = E.fit(small_single_relevant, fast_config())
    x = small_single_relevant.x[5]
    grid = np.linspace(0, 1, 37)
    rows = np.column_stack([np.tile(x, (37, 1)), grid])
    sc = est.scaler
    manual = est.model.predict((rows - sc.feature_means) / sc.feature_stds) * sc.target_std + sc.target_mean
    np.testing.assert_array_equal(E.predict_raw(est, x, grid), manual)


def test_random_curves_have_unit_mass(small_single_relevant):
    est = E.fit(small_single_relevant, fast_config())
    xs = np.random.default_rng(0).normal(size=(200, 20)) * 2
    dens = E.predict_density_batch(est, xs)
    assert (dens >= 0).all()
    assert np.abs(E.trapezoid(dens, est.grid) - 1.0).max() <= 1e-9


def test_fit_errors():
    x = np.random.default_rng(0).normal(size=(10, 1))
    with pytest.raises(DegenerateTarget):
        E.fit(RawDataset(x, np.ones(10)), fast_config())
    with pytest.raises(TooFewSamples):
        E.fit(RawDataset(x[:2], [0.0, 1.0]), fast_config())


@pytest.mark.parametrize(
    "kw", [dict(M=0), dict(h=0.0), dict(h=2.0), dict(train_fraction=1.0), dict(grid_size=1), dict(patience=0)]
)
def test_fit_config_validation(kw):
    with pytest.raises(ValueError):
        fast_config(**kw)


def test_fit_config_dict_round_trip():
    cfg = fast_config()
    assert E.FitConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        E.FitConfig.from_dict({"M": 3, "bandwidth": 0.1})


def test_illustration_curve_peaks_near_zero():
    mech = synthetic.mechanism("illustration2d")
    data = synthetic.sample(mech, 5000, seed=0)
    est = E.fit(data, E.FitConfig(M=100, h=0.03, seed=0))
    grid, values = E.to_original_units(E.predict_density(est, [0.0]), est.scaler)
    mode = grid[np.argmax(values)]
    assert abs(mode) < 0.5
    # unimodal at coarse resolution: mass falls off on both sides of the peak
    coarse = np.add.reduceat(values, np.arange(0, 500, 25))
    peak = int(np.argmax(coarse))
    tol = 0.01 * coarse[peak]
    assert (np.diff(coarse[: peak + 1]) >= -tol).all()
    assert (np.diff(coarse[peak:]) <= tol).all()


# ---- grid search -----------------------------------------------------------


def test_grid_search_single_cell_matches_direct_fit(small_single_relevant):
    base = fast_config()
    (cell,) = E.grid_search(small_single_relevant, [5], [0.1], base, workers=1)
    direct = E.fit(small_single_relevant, replace(base, M=5, h=0.1, seed=E.cell_seed(base.seed, 5, 0.1)))
    assert cell.report.value == direct.validation_ise
    assert cell.status == "ok"


def test_grid_search_sorted_and_reproducible(small_single_relevant):
    base = fast_config()
    a = E.grid_search(small_single_relevant, [10, 2], [0.1, 0.05], base, workers=1)
    b = E.grid_search(small_single_relevant, [2, 10], [0.05, 0.1], base, workers=2)
    assert [(c.M, c.h) for c in a] == [(2, 0.05), (2, 0.1), (10, 0.05), (10, 0.1)]
    assert [c.report.value for c in a] == [c.report.value for c in b]


def test_grid_search_records_failed_cells():
    # two training rows out of four: some cell seeds draw a constant target
    data = RawDataset(np.arange(4.0)[:, None], [0.0, 1.0, 1.0, 1.0])
    cfg = fast_config(train_fraction=0.5, regressor=KnnConfig(k=1))
    cells = E.grid_search(data, [1, 2, 3, 4, 5, 6], [0.1], cfg, workers=1)
    failed = [c for c in cells if c.error is not None]
    assert failed and len(failed) < len(cells)
    for c in failed:
        assert c.report is None and "DegenerateTarget" in c.status
