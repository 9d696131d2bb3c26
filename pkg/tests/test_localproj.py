import numpy as np
import pytest

from climfact.climatology import ScalarSeries, ShockSeries, ShockConditioning
from climfact.errors import InsufficientSample, RankDeficientDesign
from climfact.ingest import SectorPanel
from climfact.localproj import (
    LpSpec,
    fit_horizon,
    hac_covariance,
    irf,
    run_battery,
    select_lags,
    aic_value,
    _design,
    _ols,
)
from climfact.synth import var1_simulate, var_irf_path

PHI = np.array([[0.5, 0.1], [0.0, 0.3]])
B = np.array([1.0, 0.4])


def _shock_series(values, start="2001-01", name="shock"):
    times = np.datetime64(start, "M") + np.arange(len(values))
    return ShockSeries(times, np.asarray(values, dtype=float), 1.0,
                       ShockConditioning(), name)


def _panel(values, start="2001-01"):
    values = np.atleast_2d(values.T).T
    times = np.datetime64(start, "M") + np.arange(values.shape[0])
    ids = tuple(f"S{j}" for j in range(values.shape[1]))
    return SectorPanel(times, ids, values)


class TestFitHorizon:
    def test_known_coefficient_recovered(self, rng):
        T = 400
        x = rng.normal(size=T)
        y = 0.5 * x + 0.2 * rng.normal(size=T)
        spec = LpSpec(h_max=1, p_max=1, l_max=1)
        est = fit_horizon(y, x, y[:, None], None, 0, spec, p=1, l=0)
        assert abs(est.estimate - 0.5) < 3 * est.se
        assert est.lo < est.estimate < est.hi

    def test_null_design_coverage(self, rng):
        hits = 0
        n_sims = 500
        spec = LpSpec(h_max=1, p_max=1, l_max=1)
        for _ in range(n_sims):
            y = rng.normal(size=120)
            x = rng.normal(size=120)
            est = fit_horizon(y, x, y[:, None], None, 0, spec, p=1, l=0)
            if abs(est.estimate) <= 2 * est.se:
                hits += 1
        assert hits >= 0.90 * n_sims

    def test_insufficient_sample(self, rng):
        y = rng.normal(size=13)
        x = rng.normal(size=13)
        spec = LpSpec(h_max=1, p_max=1, l_max=1)
        with pytest.raises(InsufficientSample):
            fit_horizon(y, x, y[:, None], None, 0, spec, p=1, l=0)

    def test_constant_shock_is_rank_deficient(self, rng):
        y = rng.normal(size=100)
        x = np.ones(100)
        spec = LpSpec(h_max=1, p_max=1, l_max=1)
        with pytest.raises(RankDeficientDesign) as err:
            fit_horizon(y, x, y[:, None], None, 0, spec, p=1, l=0)
        assert any("shock" in c or "const" in c for c in err.value.columns)

    def test_contemporaneous_control_ordering(self, rng):
        # both orderings are supported: controls lagged-only vs entering at
        # lag zero alongside the shock
        T = 300
        z = rng.normal(size=(T, 1))
        x = rng.normal(size=T)
        y = 0.5 * x + 0.8 * z[:, 0] + 0.1 * rng.normal(size=T)
        lagged = LpSpec(h_max=1, p_max=1, l_max=1)
        contemp = LpSpec(h_max=1, p_max=1, l_max=1,
                         contemporaneous_controls=True)
        est_lagged = fit_horizon(y, x, y[:, None], z, 0, lagged, p=1, l=1)
        est_contemp = fit_horizon(y, x, y[:, None], z, 0, contemp, p=1, l=1)
        # with the control absorbed contemporaneously the shock SE shrinks
        assert est_contemp.se < est_lagged.se
        assert abs(est_contemp.estimate - 0.5) < 3 * est_contemp.se

    def test_duplicated_control_names_offender(self, rng):
        y = rng.normal(size=100)
        x = rng.normal(size=100)
        z = rng.normal(size=100)
        controls = np.column_stack([z, z])
        spec = LpSpec(h_max=1, p_max=1, l_max=1)
        with pytest.raises(RankDeficientDesign) as err:
            fit_horizon(y, x, y[:, None], controls, 0, spec, p=1, l=1)
        assert any(c.startswith("ctrl") for c in err.value.columns)


class TestShockLags:
    def test_distributed_lag_coefficients_recovered(self, rng):
        T = 600
        x = rng.normal(size=T)
        y = np.empty(T)
        y[0] = 0.0
        y[1:] = 0.5 * x[1:] + 0.3 * x[:-1]
        y += 0.1 * rng.normal(size=T)
        spec = LpSpec(h_max=1, p_max=1, l_max=1, r=1)
        est = fit_horizon(y, x, y[:, None], None, 0, spec, p=1, l=0)
        # the reported coefficient is the contemporaneous one
        assert abs(est.estimate - 0.5) < 3 * est.se


class TestHac:
    def test_bandwidth_zero_equals_classical(self, rng):
        T = 150
        x = rng.normal(size=T)
        y = 0.3 * x + rng.normal(size=T)
        spec = LpSpec(h_max=1, p_max=1, l_max=1)
        X, target, labels = _design(y, x, y[:, None], None, 0, 1, 0, spec)
        beta, resid, xtx_inv = _ols(X, target, labels)
        classical = hac_covariance(X, resid, xtx_inv, 0)
        sigma2 = resid @ resid / (len(target) - X.shape[1])
        np.testing.assert_allclose(classical, sigma2 * xtx_inv, rtol=1e-12)

    def test_hac_variances_nonnegative(self, rng):
        T = 200
        x = rng.normal(size=T)
        y = rng.normal(size=T)
        spec = LpSpec(h_max=1, p_max=1, l_max=1)
        X, target, labels = _design(y, x, y[:, None], None, 0, 1, 0, spec)
        beta, resid, xtx_inv = _ols(X, target, labels)
        for bw in (1, 3, 8, 24):
            cov = hac_covariance(X, resid, xtx_inv, bw)
            assert np.all(np.diag(cov) >= 0.0)


class TestSelectLags:
    def test_ar1_selects_one_lag_majority(self, rng):
        spec = LpSpec(h_max=1, p_max=4, l_max=1)
        wins = 0
        n_sims = 200
        for _ in range(n_sims):
            T = 300
            y = np.zeros(T)
            eps = rng.normal(size=T)
            for t in range(1, T):
                y[t] = 0.8 * y[t - 1] + eps[t]
            x = rng.normal(size=T)
            p, _ = select_lags(y, x, y[:, None], None, spec)
            wins += p == 1
        assert wins > n_sims / 2

    def test_white_noise_selects_smallest(self, rng):
        spec = LpSpec(h_max=1, p_max=4, l_max=1)
        wins = 0
        n_sims = 200
        for _ in range(n_sims):
            y = rng.normal(size=250)
            x = rng.normal(size=250)
            p, _ = select_lags(y, x, y[:, None], None, spec)
            wins += p == 1
        assert wins > n_sims / 2

    def test_identical_ssr_prefers_fewer_parameters(self):
        # with equal fits only the penalty term differs
        for ssr in (1e-6, 1.0, 250.0):
            assert aic_value(200, ssr, 3) < aic_value(200, ssr, 4)

    def test_informative_control_lag_selected(self, rng):
        wins = 0
        n_sims = 40
        spec = LpSpec(h_max=1, p_max=2, l_max=3)
        for _ in range(n_sims):
            T = 400
            z = rng.normal(size=(T, 1))
            x = rng.normal(size=T)
            y = np.zeros(T)
            y[2:] = 1.2 * z[:-2, 0]  # control matters at lag 2 only
            y += 0.2 * rng.normal(size=T)
            _, l = select_lags(y, x, y[:, None], z, spec)
            wins += l >= 2
        assert wins >= 0.9 * n_sims


class TestIrf:
    def test_var_oracle_small(self, rng):
        spec = LpSpec(h_max=6, p_max=1, l_max=1, lag_selection="fixed")
        n_sims, h_max = 20, 6
        truth = var_irf_path(PHI, B, h_max)[:, 0]
        ok = np.zeros((n_sims, h_max + 1), dtype=bool)
        for s in range(n_sims):
            W, x = var1_simulate(2000, PHI, B, rng)
            panel = _panel(W)
            shock = _shock_series(x)
            result = irf("S0", panel, shock, spec,
                         extra_endogenous=_panel(W[:, 1:]))
            ok[s] = np.abs(result.estimate - truth) <= 3 * result.se
        assert ok.mean(axis=0).min() >= 0.80

    def test_sign_flip_negates_exactly(self, rng):
        W, x = var1_simulate(300, PHI, B, rng)
        panel = _panel(W[:, :1])
        spec = LpSpec(h_max=4, p_max=2, l_max=1, lag_selection="fixed")
        plus = irf("S0", panel, _shock_series(x), spec)
        minus = irf("S0", panel, _shock_series(-x), spec)
        np.testing.assert_allclose(minus.estimate, -plus.estimate, atol=1e-10)
        np.testing.assert_allclose(minus.se, plus.se, rtol=1e-10)

    def test_unit_response_invariant_to_shock_scale(self, rng):
        W, x = var1_simulate(300, PHI, B, rng)
        panel = _panel(W[:, :1])
        spec = LpSpec(h_max=3, p_max=2, l_max=1, lag_selection="fixed")
        base = irf("S0", panel, _shock_series(x), spec)
        scaled = irf("S0", panel, _shock_series(5.0 * x), spec)
        np.testing.assert_allclose(scaled.estimate, base.estimate / 5.0,
                                   atol=1e-12)

    def test_ci_contains_point(self, rng):
        W, x = var1_simulate(300, PHI, B, rng)
        result = irf("S0", _panel(W[:, :1]), _shock_series(x),
                     LpSpec(h_max=8, p_max=2, l_max=1))
        assert np.all(result.lo <= result.estimate)
        assert np.all(result.estimate <= result.hi)


class TestBattery:
    def test_cardinality(self, rng):
        W, x = var1_simulate(300, PHI, B, rng)
        panel = _panel(np.column_stack([W[:, 0], rng.normal(size=300)]))
        shocks = {"all": _shock_series(x), "positive": _shock_series(
            np.where(x > 0, x, 0.0))}
        battery = run_battery(panel, shocks,
                              LpSpec(h_max=3, p_max=1, l_max=1,
                                     lag_selection="fixed"))
        assert len(battery.results) == 4
        assert battery.failures == ()

    def test_bad_sector_isolated(self, rng):
        W, x = var1_simulate(300, PHI, B, rng)
        panel = _panel(np.column_stack([W[:, 0], np.full(300, 7.0)]))
        shocks = {"all": _shock_series(x)}
        battery = run_battery(panel, shocks,
                              LpSpec(h_max=3, p_max=1, l_max=1,
                                     lag_selection="fixed"))
        assert ("S0", "all") in battery.results
        assert len(battery.failures) == 1
        assert battery.failures[0][:2] == ("S1", "all")

    def test_threads_match_sequential(self, rng):
        W, x = var1_simulate(300, PHI, B, rng)
        panel = _panel(W[:, :2])
        shocks = {"all": _shock_series(x)}
        spec = LpSpec(h_max=3, p_max=1, l_max=1, lag_selection="fixed")
        seq = run_battery(panel, shocks, spec)
        par = run_battery(panel, shocks, spec, threads=4)
        for key in seq.results:
            np.testing.assert_array_equal(seq.results[key].estimate,
                                          par.results[key].estimate)

    def test_design_shock_column_identity_across_seasons(self, rng):
        # data-level identity: seasonal shock columns sum to the all-season one
        values = rng.normal(1.0, 1.5, 240)
        times = np.datetime64("2001-01", "M") + np.arange(240)
        from climfact.climatology import shock_variants
        table = shock_variants(ScalarSeries(times, values), 1.0)
        total = sum(table[s].values
                    for s in ("spring", "summer", "autumn", "winter"))
        np.testing.assert_array_equal(total, table["all"].values)
