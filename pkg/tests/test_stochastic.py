import numpy as np
import pytest
from dataclasses import replace

from lattice_hilbert.poisson import extend
from lattice_hilbert.signals import LatticeSignal, inner
from lattice_hilbert.stochastic import (
    McEstimate,
    PathRecord,
    WalkConfig,
    covariation_formula_check,
    ito_residual_study,
    orthogonality_stat,
    pairing_mc,
    run_monte_carlo,
    simulate_path,
    _simulate_all,
)
from lattice_hilbert.transforms import H_CENTERED, apply_spectral_torus


def delta16():
    return LatticeSignal.delta_torus(16, mean_zero=True)


# ---------------------------------------------------------------------------
# configuration contracts


def test_config_validation():
    with pytest.raises(ValueError):
        WalkConfig(n=16, paths=0, y0=1.0)
    with pytest.raises(ValueError):
        WalkConfig(n=16, paths=1, y0=-1.0)
    with pytest.raises(ValueError):
        WalkConfig(n=16, paths=1, y0=1.0, h0=0.0)
    with pytest.raises(ValueError):
        WalkConfig(n=16, paths=1, y0=1.0, h0=1e-3, dt_min=1e-2)  # dt_min > h0
    with pytest.raises(ValueError):
        WalkConfig(n=16, paths=1, y0=1.0, h0=2.0)  # h0 > dt_max
    with pytest.raises(ValueError):
        WalkConfig(n=16, paths=1, y0=1.0, step_mode="bogus")
    with pytest.raises(ValueError):
        WalkConfig(n=16, paths=1, y0=1.0, reflect_mult=1.0)
    cfg = WalkConfig(n=16, paths=1, y0=2.0)
    assert cfg.dt_min_value == pytest.approx(1e-4)
    assert cfg.t_cap_value == pytest.approx(200.0)
    assert cfg.y_reflect == pytest.approx(4.0)


def test_rejects_nonzero_mean_signal():
    cfg = WalkConfig(n=16, paths=10, y0=1.0)
    with pytest.raises(ValueError):
        run_monte_carlo(cfg, LatticeSignal.delta_torus(16))
    with pytest.raises(ValueError):
        simulate_path(cfg, extend(LatticeSignal.delta_torus(16)), 0)


def test_config_size_must_match_signal():
    cfg = WalkConfig(n=8, paths=10, y0=1.0)
    with pytest.raises(ValueError):
        run_monte_carlo(cfg, delta16())


# ---------------------------------------------------------------------------
# per-path determinism


def test_path_records_are_pure_functions_of_seed_and_index():
    cfg = WalkConfig(n=16, paths=50, y0=3.0, seed=5)
    ext = extend(delta16())
    r1 = simulate_path(cfg, ext, 7)
    r2 = simulate_path(cfg, ext, 7)
    assert r1 == r2
    r3 = simulate_path(cfg, ext, 8)
    assert r3 != r1
    # a different seed changes the draw
    other = simulate_path(replace(cfg, seed=6), ext, 7)
    assert other != r1


def test_single_path_matches_bulk_rows():
    cfg = WalkConfig(n=16, paths=120, y0=4.0, seed=77)
    f = delta16()
    out = _simulate_all(cfg, f)
    ext = extend(f)
    for idx in (0, 3, 59, 119):
        rec = simulate_path(cfg, ext, idx)
        assert rec.n_final == out["n_final"][idx]
        assert rec.m_initial == out["m_initial"][idx]
        assert rec.x_end == out["x_end"][idx]
        assert rec.n_jumps == out["n_jumps"][idx]
        assert rec.sim_time == out["sim_time"][idx]
        assert rec.realized_qcov_mn == out["qcov"][idx]


def test_worker_count_does_not_change_results():
    f = delta16()
    cfg1 = WalkConfig(n=16, paths=4000, y0=3.0, seed=21, workers=1)
    cfg2 = replace(cfg1, workers=2)
    e1 = run_monte_carlo(cfg1, f)
    e2 = run_monte_carlo(cfg2, f)
    np.testing.assert_array_equal(e1.counts, e2.counts)
    np.testing.assert_array_equal(e1.means, e2.means)
    assert e1.jumps_total == e2.jumps_total
    assert e1.qcov_mean == e2.qcov_mean


def test_rerun_bit_identical():
    f = delta16()
    cfg = WalkConfig(n=16, paths=3000, y0=3.0, seed=13)
    e1 = run_monte_carlo(cfg, f)
    e2 = run_monte_carlo(cfg, f)
    np.testing.assert_array_equal(e1.means, e2.means)
    assert e1.martingale_mean == e2.martingale_mean


# ---------------------------------------------------------------------------
# degenerate and limiting behavior


def test_zero_signal_gives_zero_paths():
    z = LatticeSignal.torus(np.zeros(16))
    cfg = WalkConfig(n=16, paths=500, y0=2.0, seed=1)
    out = _simulate_all(cfg, z)
    assert np.all(out["n_final"] == 0.0)
    assert np.all(out["m_final"] == 0.0)
    assert np.all(out["qcov"] == 0.0)
    est, se = pairing_mc(cfg, z, delta16())
    assert est == 0.0 and se == 0.0


def test_tiny_start_height_hits_immediately():
    # y0 at the dt_min scale: no time to accumulate anything (t_cap is set
    # explicitly because the 50*y0^2 default would be below a single step)
    f = delta16()
    cfg = WalkConfig(n=16, paths=64, y0=1e-3, h0=1e-3, t_cap=1.0, seed=3)
    out = _simulate_all(cfg, f)
    assert np.all(out["status"] == 1)  # every path hits
    assert np.abs(out["n_final"]).max() <= 0.05
    # m_final = f at the hitting site, which stays at the start site
    np.testing.assert_allclose(out["m_final"],
                               f.values[out["x_end"]], atol=1e-12)
    assert np.abs(out["sim_time"]).max() <= 0.2


def test_capped_configuration_raises():
    f = delta16()
    cfg = WalkConfig(n=16, paths=200, y0=8.0, t_cap=0.5, seed=2)
    with pytest.raises(RuntimeError, match="t_cap"):
        run_monte_carlo(cfg, f)


def test_capped_paths_counted_and_excluded():
    f = delta16()
    # t_cap chosen so only a few paths are cut off
    cfg = WalkConfig(n=16, paths=800, y0=3.0, t_cap=25.0, seed=4)
    est = run_monte_carlo(cfg, f)
    assert est.capped > 0
    assert est.aborted == 0
    assert est.counts.sum() + est.capped == est.total_paths
    # a capped path overshoots t_cap by at most one full step
    out = _simulate_all(cfg, f)
    assert out["sim_time"].max() <= cfg.t_cap_value + cfg.dt_max


# ---------------------------------------------------------------------------
# statistical contracts (fixed seeds, modest path counts)


def test_estimator_reconstructs_transform_small():
    f = delta16()
    cfg = WalkConfig(n=16, paths=30000, y0=8.0, seed=42)
    est = run_monte_carlo(cfg, f)
    ref = apply_spectral_torus(f, H_CENTERED).values
    ok = np.abs(est.means - ref) <= 3.5 * est.std_errors + 0.02
    assert ok.sum() >= 14, (est.means, ref, est.std_errors)
    assert est.capped_fraction <= 0.02
    assert est.aborted == 0


def test_martingale_property():
    f = delta16()
    cfg = WalkConfig(n=16, paths=30000, y0=8.0, seed=43)
    est = run_monte_carlo(cfg, f)
    assert abs(est.martingale_mean) <= 3.0 * est.martingale_se + 1e-4


def test_jump_rate_is_unit():
    f = delta16()
    cfg = WalkConfig(n=16, paths=20000, y0=6.0, seed=44)
    est = run_monte_carlo(cfg, f)
    assert abs(est.jump_rate - 1.0) <= 3.0 * est.jump_rate_se + 1e-4


def test_hit_sites_uniform_chi2():
    f = delta16()
    cfg = WalkConfig(n=16, paths=20000, y0=6.0, seed=45)
    est = run_monte_carlo(cfg, f)
    hits = est.counts.sum()
    expect = hits / 16.0
    chi2 = float(((est.counts - expect) ** 2 / expect).sum())
    assert chi2 <= 30.5779  # chi2(df=15) at the 1% level


def test_mean_se_scaling_with_paths():
    f = delta16()
    base = WalkConfig(n=16, paths=4000, y0=4.0, seed=46)
    e1 = run_monte_carlo(base, f)
    e2 = run_monte_carlo(replace(base, paths=16000), f)
    med1 = float(np.nanmedian(e1.std_errors))
    med2 = float(np.nanmedian(e2.std_errors))
    # quadrupling paths should halve the SE
    assert 1.7 <= med1 / med2 <= 2.4


def test_orthogonality_statistic():
    f = delta16()
    cfg = WalkConfig(n=16, paths=20000, y0=6.0, seed=47)
    mean, se = orthogonality_stat(cfg, f)
    assert abs(mean) <= 3.0 * se + 1e-4
    # the realized bracket itself is not pathwise zero
    out = _simulate_all(replace(cfg, paths=200), f)
    assert np.abs(out["qcov"]).max() > 1e-6


def test_pairing_against_transform():
    rng = np.random.default_rng(8)
    f = LatticeSignal.random_mean_zero_torus(8, rng)
    g = LatticeSignal.random_mean_zero_torus(8, rng)
    cfg = WalkConfig(n=8, paths=60000, y0=4.0, seed=48)
    est, se = pairing_mc(cfg, f, g)
    want = inner(apply_spectral_torus(f, H_CENTERED), g)
    assert abs(est - want) <= 3.0 * se + 0.01 * f.norm2() * g.norm2()


def test_pairing_delta_self_is_zero():
    f = delta16()
    cfg = WalkConfig(n=16, paths=20000, y0=6.0, seed=49)
    est, se = pairing_mc(cfg, f, f)
    assert abs(est) <= 3.0 * se + 1e-3


# ---------------------------------------------------------------------------
# pathwise formula checks


def test_ito_residual_order():
    f = delta16()
    cfg = WalkConfig(n=16, paths=1500, y0=1.5, h0=4e-3, seed=50)
    rep = ito_residual_study(cfg, f, [4e-3, 2e-3, 1e-3])
    assert rep["medians"][0] > rep["medians"][-1]
    for fac in rep["halving_factors"]:
        assert 1.2 <= fac <= 1.8, rep


def test_ito_residual_magnitude():
    # median residual is itself small (order sqrt(h0))
    f = delta16()
    cfg = WalkConfig(n=16, paths=800, y0=1.5, seed=51)
    rep = ito_residual_study(cfg, f, [1e-3])
    assert rep["medians"][0] <= 0.05 * np.sqrt(1e-3) ** 0  # sanity: finite
    assert rep["medians"][0] <= 10 * np.sqrt(1e-3)


def test_covariation_formula_self_consistency():
    f = delta16()
    cfg = WalkConfig(n=16, paths=1, y0=2.0, h0=1e-3, dt_min=1e-3,
                     dt_max=1e-3, step_mode="uniform", seed=52)
    rep = covariation_formula_check(cfg, f, f, 300)
    # realized quadratic variation vs the formula: small relative gap
    assert rep["median_relative_gap"] <= 0.05
    assert rep["median_abs_residual"] <= 1e-3


def test_covariation_orientation_resolution():
    rng = np.random.default_rng(53)
    f = delta16()
    g = LatticeSignal.random_mean_zero_torus(16, rng)
    cfg = WalkConfig(n=16, paths=1, y0=2.0, h0=1e-3, dt_min=1e-3,
                     dt_max=1e-3, step_mode="uniform", seed=54)
    rep = covariation_formula_check(cfg, f, g, 300)
    assert rep["jump_term_orientation"] == "sign-matched one-sided difference"
    assert rep["nm_residual_sign_matched"] < 0.2 * rep["nm_residual_backward_only"]


def test_covariation_no_jump_paths_only_vertical_term():
    # with jumps absent the direct and formula accumulators agree through
    # the vertical term alone; force a short path and inspect per-path data
    f = delta16()
    cfg = WalkConfig(n=16, paths=1, y0=0.5, h0=1e-3, dt_min=1e-3,
                     dt_max=1e-3, step_mode="uniform", seed=55)
    rep = covariation_formula_check(cfg, f, f, 200)
    nj = rep["per_path"]["n_jumps"]
    no_jump = nj == 0
    assert no_jump.any()
    gaps = np.abs(rep["per_path"]["direct"][no_jump]
                  - rep["per_path"]["formula"][no_jump])
    # the residual is the (dY^2 - dt) fluctuation of the vertical term
    assert np.median(gaps) <= 1e-3
    assert np.quantile(gaps, 0.9) <= 1e-2


def test_path_record_fields():
    cfg = WalkConfig(n=16, paths=10, y0=2.0, seed=56)
    rec = simulate_path(cfg, extend(delta16()), 3)
    assert isinstance(rec, PathRecord)
    assert rec.hit and not rec.capped
    assert 0 <= rec.x_end < 16
    assert rec.n_jumps >= 0
    assert rec.sim_time > 0
    # at the boundary the value process lands on the signal
    assert rec.m_final == pytest.approx(
        delta16().values[rec.x_end], abs=1e-9)


def test_bias_bounds_reported():
    f = delta16()
    cfg = WalkConfig(n=16, paths=2000, y0=8.0, seed=57)
    est = run_monte_carlo(cfg, f)
    assert 0 < est.y0_bias_bound < 1e-2
    assert 0 < est.reflect_bias_bound < 1e-2
    assert est.wall_ms > 0
