"""Acceptance suite: every release gate in one module.

Each test prints one `[PASS]`/`[FAIL]` line (visible with pytest -s) and
asserts the stated tolerance. Gates with runtime budgets measure wall
time and fail when exceeded.
"""

import csv
import hashlib
import json
import time
from pathlib import Path

import numpy as np
import scipy.linalg

from climfact import cli
from climfact.climatology import (
    ScalarSeries,
    ShockConditioning,
    default_threshold,
    make_shocks,
    shock_variants,
)
from climfact.factors import (
    associated_factors,
    estimate_covariances,
    hat_matrix,
    svd_cross,
)
from climfact.fira import build_design, fit_fira, make_shock_surface, respond
from climfact.grid import Surface, SurfaceSeries, build_domain, inner_product, norm
from climfact.ingest import SectorPanel
from climfact.localproj import LpSpec, irf
from climfact.synth import (
    EA_MONTHLY_NORMALS,
    anomaly_scalar_series,
    de_domain,
    exact_factor_model,
    planted_factor_instance,
    var1_simulate,
    var_irf_path,
)

MONTH0 = np.datetime64("2001-01", "M")


def _report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def _write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2))
    return str(path)


def _tree_digest(root):
    digest = hashlib.sha256()
    for path in sorted(Path(root).rglob("*")):
        if path.is_file():
            digest.update(str(path.relative_to(root)).encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


# -- criterion 1: monthly-normals fixture through the baseline command ------


def test_criterion_1_baseline_table_fixture(tmp_path):
    start = time.perf_counter()
    synth_cfg = _write_config(tmp_path, {
        "seed": 1,
        "output_dir": str(tmp_path / "data"),
        "synth": {"kind": "normals", "step": 2.0},
    }, "synth.json")
    assert cli.main(["synth", "--config", synth_cfg, "--quiet"]) == 0
    run_cfg = _write_config(tmp_path, {
        "grids": [{"name": name, "path": str(tmp_path / "data" / f"{name}.csv")}
                  for name in EA_MONTHLY_NORMALS],
        "regions": [{"name": "EA", "cells": "all"}],
        "baseline": {"reference_window": [1950, 1980]},
    })
    out = tmp_path / "out"
    assert cli.main(["baseline", "--config", run_cfg, "--out", str(out),
                     "--quiet"]) == 0
    with open(out / "baseline_summary.csv", newline="") as fh:
        rows = {(r["region"], r["variable"]): r for r in csv.DictReader(fh)}
    mismatches = 0
    for variable, expected in EA_MONTHLY_NORMALS.items():
        row = rows[("EA", variable)]
        for m in range(12):
            if round(float(row[f"m{m + 1:02d}"]), 2) != round(expected[m], 2):
                mismatches += 1
    elapsed = time.perf_counter() - start
    _report("criterion 1 (baseline fixture)",
            mismatches == 0 and elapsed < 10.0,
            f"48 entries, {mismatches} mismatch(es), {elapsed:.1f}s (< 10s)")


# -- criterion 2: threshold fixture -----------------------------------------


def test_criterion_2_threshold_fixture():
    series = anomaly_scalar_series(1.30, window=(2001, 2021))
    threshold = default_threshold(series, (2001, 2021))
    thr_ok = abs(threshold - 1.30) <= 1e-9

    probe = ScalarSeries(MONTH0 + np.arange(2), np.array([1.2, 1.4]))
    shock = make_shocks(probe, 1.3, ShockConditioning(sign="positive"))
    events_ok = shock.n_events == 1 and shock.values[1] == 1.4

    _report("criterion 2 (threshold fixture)", thr_ok and events_ok,
            f"threshold {threshold!r} (|err| <= 1e-9), "
            f"{shock.n_events} of 2 deviations pass")


# -- criterion 3: local projections against the analytic VAR response -------


def test_criterion_3_lp_var_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(303)
    phi = np.array([[0.55, 0.15], [0.05, 0.40]])
    b = np.array([1.0, 0.5])
    h_max, n_sims, T = 12, 200, 2000
    truth = var_irf_path(phi, b, h_max)[:, 0]
    spec = LpSpec(h_max=h_max, p_max=1, l_max=1, lag_selection="fixed")
    within = np.zeros((n_sims, h_max + 1), dtype=bool)
    for s in range(n_sims):
        W, x = var1_simulate(T, phi, b, rng)
        times = MONTH0 + np.arange(T)
        panel = SectorPanel(times, ("S0", "S1"), W)
        from climfact.climatology import ShockSeries
        shock = ShockSeries(times, x, 1.0, ShockConditioning(), "x")
        result = irf("S0", panel, shock, spec,
                     extra_endogenous=SectorPanel(times, ("E1",), W[:, 1:]))
        within[s] = np.abs(result.estimate - truth) <= 3.0 * result.se
    coverage = within.mean(axis=0)
    elapsed = time.perf_counter() - start
    _report("criterion 3 (LP-VAR oracle)",
            coverage.min() >= 0.95 and elapsed < 300.0,
            f"per-horizon coverage min {coverage.min():.3f} (>= 0.95) over "
            f"{n_sims} runs, {elapsed:.0f}s (< 300s)")


# -- criterion 4: two-stage pipeline vs direct full-space CCA ---------------


def _direct_cca(panel, series):
    Y, X = panel.values, hat_matrix(series)
    T = Y.shape[0]
    yc, xc = Y - Y.mean(axis=0), X - X.mean(axis=0)
    syy, sxx = yc.T @ yc / (T - 1), xc.T @ xc / (T - 1)
    syx = yc.T @ xc / (T - 1)

    def inv_sqrt(S):
        vals, vecs = np.linalg.eigh(S)
        return (vecs / np.sqrt(vals)) @ vecs.T

    iy, ix = inv_sqrt(syy), inv_sqrt(sxx)
    U, s, Vt = np.linalg.svd(iy @ syx @ ix)
    return s, iy @ U, ix @ Vt.T


def test_criterion_4_two_stage_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(404)
    worst_rho, worst_angle = 0.0, 0.0
    for trial in range(50):
        p = int(rng.choice([2, 3, 5]))
        n_cells = int(rng.integers(4, 10))
        n_lon = n_cells // 2 if n_cells % 2 == 0 else n_cells
        n_lat = n_cells // n_lon
        domain = build_domain(
            (48.0, 48.0 + n_lat, 5.0, 5.0 + n_lon), 1.0
        )
        k = int(rng.integers(1, min(p, domain.n_valid) + 1))
        panel, series = exact_factor_model(domain, p, k, 500, rng)
        result = associated_factors(panel, series, tol=1e-6)
        rho_o, a_o, b_o = _direct_cca(panel, series)
        assert result.k == k
        worst_rho = max(worst_rho, np.abs(result.rho - rho_o[:k]).max())
        worst_angle = max(
            worst_angle,
            scipy.linalg.subspace_angles(result.a.T, a_o[:, :k]).max(),
            scipy.linalg.subspace_angles(result.b_hat.T, b_o[:, :k]).max(),
        )
    elapsed = time.perf_counter() - start
    _report("criterion 4 (two-stage equivalence)",
            worst_rho < 1e-8 and worst_angle < 1e-8 and elapsed < 60.0,
            f"max |rho diff| {worst_rho:.2e}, max principal angle "
            f"{worst_angle:.2e} (< 1e-8), {elapsed:.0f}s (< 60s)")


# -- criterion 5: planted-factor recovery ------------------------------------


def test_criterion_5_planted_factor_recovery():
    rng = np.random.default_rng(505)
    domain = de_domain(step=1.0)
    hits = 0
    n_runs = 100
    for _ in range(n_runs):
        panel, series, g = planted_factor_instance(domain, p=4, T=500,
                                                   rng=rng, snr=10.0)
        dec = svd_cross(estimate_covariances(panel, series), tol=0.1)
        beta1 = dec.beta_surface(0).values[domain.mask]
        truth = g[domain.mask]
        w = domain.valid_weights
        cos = abs(np.sum(w * beta1 * truth)) / np.sqrt(
            np.sum(w * beta1**2) * np.sum(w * truth**2))
        hits += cos > 0.95
    _report("criterion 5 (planted-factor recovery)", hits >= 90,
            f"{hits}/{n_runs} runs with cosine similarity > 0.95 (need >= 90)")


# -- criterion 6: shock geometry and response linearity ----------------------


def test_criterion_6_fira_geometry():
    rng = np.random.default_rng(606)
    domain = de_domain(step=0.25)
    shock = make_shock_surface(1.5, (53.0, 11.5), 150.0, domain)
    target = np.pi * 150.0**2
    area_err = abs(shock.footprint_area_km2 - target) / target

    T = 60
    cube = rng.normal(size=(T,) + domain.shape)
    y = rng.normal(size=(T, 3))
    y[:, 0] += cube[:, domain.mask].mean(axis=1)
    series = SurfaceSeries(domain, MONTH0 + np.arange(T),
                           np.where(domain.mask[None], cube, np.nan))
    panel = SectorPanel(MONTH0 + np.arange(T), ("A", "B", "C"), y)
    fitted = fit_fira(build_design(series, lags=(0, 0, 0)), panel, h_max=2)

    unit = respond(fitted, make_shock_surface(1.0, (53.0, 11.5), 150.0, domain))
    double = respond(fitted, make_shock_surface(2.0, (53.0, 11.5), 150.0,
                                                domain))
    nz = np.abs(unit.canonical) > 0
    linearity = np.abs(double.canonical[nz] - 2.0 * unit.canonical[nz]) / \
        np.abs(2.0 * unit.canonical[nz])
    zero = respond(fitted, make_shock_surface(0.0, (53.0, 11.5), 150.0,
                                              domain))
    zero_ok = np.all(zero.canonical == 0.0)

    ok = area_err < 0.05 and linearity.max() < 1e-12 and zero_ok
    _report("criterion 6 (shock geometry)", ok,
            f"area {shock.footprint_area_km2:.0f} km2 vs {target:.0f} "
            f"(rel err {area_err:.2e} < 0.05), linearity "
            f"{linearity.max():.2e} (< 1e-12), zero path {zero_ok}")


# -- criterion 7: invariant property suites, 1000 cases each ------------------


N_CASES = 1000


def _random_small_domain(rng, max_side=4):
    n_lat = int(rng.integers(1, max_side))
    n_lon = int(rng.integers(1, max_side))
    mask = rng.random((n_lat, n_lon)) < 0.8
    mask.flat[int(rng.integers(0, mask.size))] = True
    return build_domain((35.0, 35.0 + n_lat, 0.0, float(n_lon)), 1.0, mask)


def test_criterion_7a_cauchy_schwarz():
    start = time.perf_counter()
    rng = np.random.default_rng(707)
    for _ in range(N_CASES):
        domain = _random_small_domain(rng)
        f = Surface(domain, rng.normal(size=domain.shape) * 10)
        g = Surface(domain, rng.normal(size=domain.shape) * 10)
        assert abs(inner_product(f, g)) <= norm(f) * norm(g) + 1e-10
        assert inner_product(f, f) >= 0.0
    _report("criterion 7a (Cauchy-Schwarz x1000)", True,
            f"{time.perf_counter() - start:.1f}s")


def _tiny_factor_problem(rng, T=30, p=3, cells=4):
    domain = build_domain((45.0, 46.0, 0.0, float(cells)), 1.0)
    panel = SectorPanel(MONTH0 + np.arange(T),
                        tuple(f"S{j}" for j in range(p)),
                        rng.normal(size=(T, p)))
    cube = rng.normal(size=(T,) + domain.shape)
    series = SurfaceSeries(domain, panel.times, cube)
    return panel, series


def test_criterion_7b_orthonormality():
    start = time.perf_counter()
    rng = np.random.default_rng(717)
    for _ in range(N_CASES):
        panel, series = _tiny_factor_problem(rng)
        dec = svd_cross(estimate_covariances(panel, series), tol=1e-6)
        assert np.allclose(dec.alpha.T @ dec.alpha, np.eye(dec.k), atol=1e-8)
        assert np.allclose(dec.beta_hat.T @ dec.beta_hat, np.eye(dec.k),
                           atol=1e-8)
    _report("criterion 7b (orthonormality x1000)", True,
            f"{time.perf_counter() - start:.1f}s")


def test_criterion_7c_rho_bounds():
    start = time.perf_counter()
    rng = np.random.default_rng(727)
    for _ in range(N_CASES):
        panel, series = _tiny_factor_problem(rng, T=30, p=2, cells=3)
        result = associated_factors(panel, series, tol=1e-6)
        assert np.all(result.rho >= 0.0)
        assert np.all(result.rho <= 1.0 + 1e-10)
    _report("criterion 7c (rho in [0,1] x1000)", True,
            f"{time.perf_counter() - start:.1f}s")


def test_criterion_7d_residual_uncorrelatedness():
    start = time.perf_counter()
    rng = np.random.default_rng(737)
    for _ in range(N_CASES):
        # p > cells so the panel residual is nonzero
        panel, series = _tiny_factor_problem(rng, T=40, p=4, cells=3)
        result = associated_factors(panel, series, tol=1e-6)
        a = result.a.T
        recon = result.y_factors @ np.linalg.pinv(a)
        residual = panel.values - recon
        resid_c = residual - residual.mean(axis=0)
        xf = result.x_factors - result.x_factors.mean(axis=0)
        yf = result.y_factors - result.y_factors.mean(axis=0)
        n = len(xf)
        cov = resid_c.T @ xf / (n - 1)
        scale = max(np.std(panel.values), 1e-12)
        assert np.abs(cov).max() / scale < 1e-10
        # structural contract: slope rho, errors orthogonal to the partner
        errors = yf - xf * result.rho
        assert np.abs(errors.T @ xf / (n - 1)).max() < 1e-10
    _report("criterion 7d (residual uncorrelatedness x1000)", True,
            f"{time.perf_counter() - start:.1f}s")


def test_criterion_7e_season_partition():
    start = time.perf_counter()
    rng = np.random.default_rng(747)
    for _ in range(N_CASES):
        n = int(rng.integers(24, 80))
        series = ScalarSeries(MONTH0 + np.arange(n),
                              rng.normal(0.5, 1.5, n))
        table = shock_variants(series, float(rng.uniform(0.2, 1.5)))
        seasonal = sum(table[s].values
                       for s in ("spring", "summer", "autumn", "winter"))
        np.testing.assert_array_equal(seasonal, table["all"].values)
    _report("criterion 7e (season partition x1000)", True,
            f"{time.perf_counter() - start:.1f}s")


def test_criterion_7f_sign_exclusivity():
    start = time.perf_counter()
    rng = np.random.default_rng(757)
    for _ in range(N_CASES):
        n = int(rng.integers(24, 80))
        series = ScalarSeries(MONTH0 + np.arange(n),
                              rng.normal(0.0, 2.0, n))
        table = shock_variants(series, float(rng.uniform(0.2, 1.5)),
                               variants=("positive", "negative"))
        pos = table["positive"].values != 0.0
        neg = table["negative"].values != 0.0
        assert not np.any(pos & neg)
    _report("criterion 7f (sign exclusivity x1000)", True,
            f"{time.perf_counter() - start:.1f}s")


def test_criterion_7_runtime_budget():
    # rerun the heaviest two suites under one timer to check the budget
    start = time.perf_counter()
    test_criterion_7b_orthonormality()
    test_criterion_7c_rho_bounds()
    test_criterion_7d_residual_uncorrelatedness()
    elapsed = time.perf_counter() - start
    _report("criterion 7 (runtime budget)", elapsed < 120.0,
            f"heaviest suites {elapsed:.0f}s (< 120s)")


# -- criterion 8: CLI determinism --------------------------------------------


def test_criterion_8_cli_determinism(tmp_path):
    synth_cfg = _write_config(tmp_path, {
        "seed": 9,
        "output_dir": str(tmp_path / "data"),
        "synth": {"kind": "fira-demo", "step": 1.0, "months": 252,
                  "sectors": 4},
    }, "synth.json")
    assert cli.main(["synth", "--config", synth_cfg, "--quiet"]) == 0

    norm_cfg = _write_config(tmp_path, {
        "seed": 9,
        "output_dir": str(tmp_path / "data2"),
        "synth": {"kind": "normals", "step": 4.0, "warming": 1.3},
    }, "synth2.json")
    assert cli.main(["synth", "--config", norm_cfg, "--quiet"]) == 0

    base = {
        "seed": 9,
        "grids": [{"name": "temperature",
                   "path": str(tmp_path / "data2" / "temperature.csv")}],
        "regions": [{"name": "EA", "cells": "all"}],
        "shocks": {"variable": "temperature", "threshold": "auto",
                   "variants": ["all", "summer", "negative", "extreme"]},
    }
    fira_doc = {
        "seed": 9,
        "grids": [{"name": "temperature_anomaly",
                   "path": str(tmp_path / "data" / "temperature_anomaly.csv")}],
        "panels": {"sectors": {"path": str(tmp_path / "data" / "sectors.csv"),
                               "transform": "none"}},
        "fira": {"variable": "temperature_anomaly", "use_anomalies": False,
                 "lags": [0, 0, 0], "h_max": 2, "tol": 0.2,
                 "permutation": {"n": 49, "level": 0.9},
                 "shocks": [{"magnitude": 1.5, "center": [51.0, 10.5],
                             "radius_km": 200.0}]},
    }
    factors_doc = {
        "seed": 9,
        "grids": fira_doc["grids"],
        "panels": fira_doc["panels"],
        "factors": {"variable": "temperature_anomaly",
                    "use_anomalies": False, "tol": 0.2,
                    "permutation": {"n": 49, "level": 0.9}},
    }
    lp_doc = dict(base)
    lp_doc["panels"] = fira_doc["panels"]
    lp_doc["shocks"] = {"variable": "temperature", "threshold": "auto",
                        "variants": ["all"]}
    lp_doc["lp"] = {"h_max": 4, "p_max": 1, "l_max": 1,
                    "lag_selection": "fixed"}
    runs = [("baseline", base), ("shocks", base), ("lp", lp_doc),
            ("factors", factors_doc), ("fira", fira_doc)]
    mismatched = []
    for command, doc in runs:
        digests = []
        for attempt in ("first", "second"):
            out = tmp_path / f"{command}_{attempt}"
            config = _write_config(tmp_path, doc, f"{command}_{attempt}.json")
            assert cli.main([command, "--config", config, "--out",
                             str(out), "--quiet"]) == 0
            digests.append(_tree_digest(out))
        if digests[0] != digests[1]:
            mismatched.append(command)
    _report("criterion 8 (CLI determinism)", not mismatched,
            f"byte-identical reruns for {[c for c, _ in runs]}"
            + (f"; MISMATCH in {mismatched}" if mismatched else ""))
