import numpy as np
import pytest

from lattice_hilbert.signals import LatticeSignal, inner
from lattice_hilbert.transforms import (
    DERIV_CENTERED,
    DERIV_MINUS,
    DERIV_PLUS,
    H_CENTERED,
    H_MINUS,
    H_NAIVE,
    H_PLUS,
    LAPLACIAN,
    SHIFT_MINUS,
    SHIFT_PLUS,
    SQRT_NEG_LAPLACIAN,
    OperatorSymbol,
    SpectralGrid,
    apply_kernel,
    apply_spectral_torus,
    apply_spectral_window,
    centered_kernel,
    discrete_derivative,
    eval_multiplier,
    hilbert_kernel,
    identity_suite,
    multiplier_kernel_consistency,
    naive_contrast,
    naive_kernel,
    poisson_factor,
    shift,
    smoothing_average,
)

# ---------------------------------------------------------------------------
# independent oracles


def oracle_one_sided_kernel(sign, n):
    # direct substitution into the displayed kernels
    return -1.0 / (np.pi * (n + (0.5 if sign == "+" else -0.5)))


def oracle_centered_kernel(n):
    return 0.5 * (oracle_one_sided_kernel("+", n) + oracle_one_sided_kernel("-", n))


def oracle_convolution(f_vals, f_offset, kernel_fn, out_offset, out_len):
    # brute-force double loop, no shared code with the implementation
    out = np.zeros(out_len)
    for i in range(out_len):
        x = out_offset + i
        acc = 0.0
        for j, v in enumerate(f_vals):
            acc += v * kernel_fn(x - (f_offset + j))
        out[i] = acc
    return out


# ---------------------------------------------------------------------------
# kernels


def test_one_sided_kernel_values():
    # frozen from the formula -1/(pi (n +/- 1/2))
    assert hilbert_kernel("+", 0) == pytest.approx(-0.63661977236758138, abs=1e-15)
    assert hilbert_kernel("+", -1) == pytest.approx(+0.63661977236758138, abs=1e-15)
    assert hilbert_kernel("-", 0) == pytest.approx(+0.63661977236758138, abs=1e-15)
    n = np.arange(-30, 31)
    np.testing.assert_allclose(hilbert_kernel("+", n),
                               oracle_one_sided_kernel("+", n), rtol=1e-15)
    np.testing.assert_allclose(hilbert_kernel("-", n),
                               oracle_one_sided_kernel("-", n), rtol=1e-15)


def test_centered_kernel_values():
    assert centered_kernel(0) == 0.0
    # oracle: average of the two one-sided kernels, frozen values
    assert centered_kernel(1) == pytest.approx(-0.42441318157838759, abs=1e-15)
    assert centered_kernel(-1) == pytest.approx(+0.42441318157838759, abs=1e-15)
    assert centered_kernel(2) == pytest.approx(-0.16976527263135505, abs=1e-15)
    n = np.arange(-50, 51)
    np.testing.assert_allclose(centered_kernel(n), oracle_centered_kernel(n),
                               rtol=0, atol=1e-16)


def test_centered_kernel_odd():
    n = np.arange(1, 100)
    np.testing.assert_array_equal(centered_kernel(n), -centered_kernel(-n))


# ---------------------------------------------------------------------------
# multipliers


def test_sqrt_neg_laplacian_multiplier():
    assert eval_multiplier(SQRT_NEG_LAPLACIAN, 0.25) == pytest.approx(
        np.sqrt(2.0), abs=1e-15)


def test_hilbert_multiplier_zero_convention():
    for op in (H_PLUS, H_MINUS, H_CENTERED, H_NAIVE):
        assert eval_multiplier(op, 0.0) == 0.0


def test_hplus_multiplier_value():
    # oracle: (e^{2 pi i /4} - 1) / (2 |sin(pi/4)|) = (i - 1)/sqrt(2)
    want = (1j - 1.0) / np.sqrt(2.0)
    got = eval_multiplier(H_PLUS, 0.25)
    assert got == pytest.approx(want, abs=1e-15)
    assert got.real == pytest.approx(-0.70710678118654746, abs=1e-15)
    assert got.imag == pytest.approx(+0.70710678118654746, abs=1e-15)


def test_defining_relation_exact():
    # m_pm(xi) * 2|sin(pi xi)| = e^{+/- 2 pi i xi} - 1, everywhere but 0
    rng = np.random.default_rng(7)
    xi = rng.uniform(-0.5, 0.5, size=2000)
    xi = xi[xi != 0.0]
    for op, dop in ((H_PLUS, DERIV_PLUS), (H_MINUS, DERIV_MINUS)):
        for x in xi[:500]:
            lhs = eval_multiplier(op, x) * eval_multiplier(SQRT_NEG_LAPLACIAN, x)
            rhs = eval_multiplier(dop, x)
            assert abs(lhs - rhs) <= 1e-12


def test_unimodular_symbols():
    rng = np.random.default_rng(3)
    for x in rng.uniform(-0.5, 0.5, 200):
        if x == 0:
            continue
        assert abs(abs(eval_multiplier(H_PLUS, x)) - 1.0) <= 1e-14
        assert abs(abs(eval_multiplier(H_MINUS, x)) - 1.0) <= 1e-14


def test_centered_closed_form_matches_average():
    rng = np.random.default_rng(11)
    for x in rng.uniform(-0.5, 0.5, 300):
        avg = 0.5 * (eval_multiplier(H_PLUS, x) + eval_multiplier(H_MINUS, x))
        assert abs(eval_multiplier(H_CENTERED, x) - avg) <= 1e-14


def test_multiplier_domain():
    with pytest.raises(ValueError):
        eval_multiplier(H_PLUS, 0.75)
    with pytest.raises(ValueError):
        eval_multiplier(H_PLUS, -0.5)
    # right endpoint included
    assert eval_multiplier(H_PLUS, 0.5) == pytest.approx(-1.0, abs=1e-15)


def test_poisson_factor_validation():
    with pytest.raises(ValueError):
        poisson_factor(-1.0)
    with pytest.raises(ValueError):
        OperatorSymbol("bogus")


# ---------------------------------------------------------------------------
# kernel application


def test_apply_kernel_delta_centered():
    # oracle: brute-force convolution with the averaged displayed kernels
    want = oracle_convolution([1.0], 0, oracle_centered_kernel, -2, 5)
    out = apply_kernel(LatticeSignal.delta_window(), H_CENTERED, 2)
    assert out.offset == -2 and out.length == 5
    np.testing.assert_allclose(out.values, want, atol=1e-16)
    frozen = [0.16976527263135505, 0.42441318157838759, 0.0,
              -0.42441318157838759, -0.16976527263135505]
    np.testing.assert_allclose(out.values, frozen, atol=1e-15)


def test_apply_kernel_delta_hplus_radius0():
    out = apply_kernel(LatticeSignal.delta_window(), H_PLUS, 0)
    assert out.offset == 0 and out.length == 1
    assert out.values[0] == pytest.approx(-2.0 / np.pi, abs=1e-15)


def test_apply_kernel_zero_signal():
    z = LatticeSignal.window([0.0, 0.0, 0.0], offset=4)
    out = apply_kernel(z, H_MINUS, 5)
    assert np.all(out.values == 0.0)


def test_apply_kernel_random_vs_bruteforce():
    rng = np.random.default_rng(5)
    vals = rng.standard_normal(7)
    f = LatticeSignal.window(vals, offset=-3)
    for which, kfun in ((H_PLUS, lambda n: oracle_one_sided_kernel("+", n)),
                        (H_NAIVE, lambda n: np.where(n == 0, 0.0,
                                                     -1.0 / (np.pi * np.where(n == 0, 1, n))))):
        out = apply_kernel(f, which, 6)
        want = oracle_convolution(vals, -3, lambda m: float(kfun(np.asarray(m))),
                                  out.offset, out.length)
        np.testing.assert_allclose(out.values, want, atol=1e-14)


def test_apply_kernel_contract_errors():
    t = LatticeSignal.delta_torus(8)
    with pytest.raises(ValueError):
        apply_kernel(t, H_CENTERED, 2)
    with pytest.raises(ValueError):
        apply_kernel(LatticeSignal.delta_window(), H_CENTERED, -1)


def test_apply_kernel_tail_bound_recorded():
    f = LatticeSignal.window([1.0, 2.0, 3.0], offset=0)
    out = apply_kernel(f, H_CENTERED, 10)
    want = f.norm1() / (np.pi * (10 - 1.0))
    assert out.meta["tail_bound"] == pytest.approx(want, rel=1e-15)


def test_apply_kernel_empty_signal():
    out = apply_kernel(LatticeSignal.window([], 0), H_CENTERED, 3)
    assert out.length == 0


# ---------------------------------------------------------------------------
# torus multiplier application


def test_spectral_torus_poisson_zero_is_identity():
    rng = np.random.default_rng(1)
    f = LatticeSignal.torus(rng.standard_normal(12))
    out = apply_spectral_torus(f, poisson_factor(0.0))
    np.testing.assert_allclose(out.values, f.values, atol=1e-14)


def test_spectral_torus_inverse_pair():
    rng = np.random.default_rng(2)
    f = LatticeSignal.random_mean_zero_torus(16, rng)
    out = apply_spectral_torus(apply_spectral_torus(f, H_PLUS), H_MINUS)
    np.testing.assert_allclose(out.values, -f.values, atol=1e-10)


def test_spectral_torus_centered_square_is_smoothing():
    f = LatticeSignal.delta_torus(16, mean_zero=True)
    twice = apply_spectral_torus(apply_spectral_torus(f, H_CENTERED), H_CENTERED)
    np.testing.assert_allclose(twice.values, -smoothing_average(f).values,
                               atol=1e-10)


def test_spectral_torus_real_output():
    rng = np.random.default_rng(4)
    f = LatticeSignal.torus(rng.standard_normal(17))  # odd size too
    for op in (H_PLUS, H_MINUS, H_CENTERED, H_NAIVE, DERIV_PLUS, DERIV_MINUS,
               DERIV_CENTERED, LAPLACIAN, SQRT_NEG_LAPLACIAN, SHIFT_PLUS,
               SHIFT_MINUS, poisson_factor(0.7)):
        out = apply_spectral_torus(f, op)
        assert np.all(np.isfinite(out.values))


def test_spectral_torus_rejects_window():
    with pytest.raises(ValueError):
        apply_spectral_torus(LatticeSignal.delta_window(), H_PLUS)


def test_spectral_torus_matches_wrapped_kernel():
    # torus transform == Z-kernel wrapped around the circle, to wrap accuracy
    n = 64
    f = LatticeSignal.delta_torus(n, mean_zero=True)
    out = apply_spectral_torus(f, H_CENTERED)
    m = 400
    wraps = np.arange(-m, m + 1)
    want = np.empty(n)
    for x in range(n):
        want[x] = centered_kernel(x + wraps * n).sum()
    want -= want.mean()  # the mean-zero input sees the mean-zero part
    np.testing.assert_allclose(out.values, want, atol=1e-4)


def test_naive_multiplier_matches_kernel_sum():
    # Cesaro-averaged Fourier sum of -1/(pi n) against the sawtooth symbol
    L = 200_000
    ns = np.arange(1, L + 1, dtype=float)
    for xi in (0.2, -0.37):
        phase = np.exp(-2j * np.pi * ns * xi)
        terms = naive_kernel(ns) * phase + naive_kernel(-ns) / phase
        fejer = np.sum(terms * (1.0 - ns / (L + 1.0)))
        assert abs(fejer - eval_multiplier(H_NAIVE, xi)) < 1e-4


# ---------------------------------------------------------------------------
# windowed spectral synthesis


def test_spectral_window_sqrt_neg_laplacian_delta():
    # oracle: closed form 4 / (pi (1 - 4 n^2)), cross-checked in development
    # against high-resolution quadrature of 2|sin(pi xi)|
    out = apply_spectral_window(LatticeSignal.delta_window(),
                                SQRT_NEG_LAPLACIAN, out_window=3)
    want = 4.0 / (np.pi * (1.0 - 4.0 * np.arange(-3, 4) ** 2))
    np.testing.assert_allclose(out.values, want, atol=1e-10)
    assert out.values[3] == pytest.approx(1.2732395447351628, abs=1e-10)


def test_spectral_window_matches_kernel():
    out_s = apply_spectral_window(LatticeSignal.delta_window(), H_CENTERED,
                                  out_window=2)
    out_k = apply_kernel(LatticeSignal.delta_window(), H_CENTERED, 2)
    np.testing.assert_allclose(out_s.values, out_k.values, atol=1e-8)


def test_spectral_window_zero_signal():
    z = LatticeSignal.window(np.zeros(4), offset=1)
    out = apply_spectral_window(z, H_PLUS, out_window=2)
    assert np.all(out.values == 0.0)


def test_spectral_window_accuracy_across_grids():
    # the split Gauss-Legendre rule is converged from the q >= 4*(lengths)
    # validity floor upward, so every legal grid already meets the 1e-8
    # agreement contract (it saturates near machine precision)
    rng = np.random.default_rng(9)
    f = LatticeSignal.window(rng.standard_normal(9), offset=-4)
    ref = apply_kernel(f, H_PLUS, 16)
    for q in (200, 1024, 4096):
        out = apply_spectral_window(f, H_PLUS, SpectralGrid.gauss_split(q), 16)
        err = float(np.abs(out.values - ref.values).max())
        assert err <= 1e-8, (q, err)


def test_spectral_window_rejects_small_grid():
    f = LatticeSignal.window(np.ones(10), offset=0)
    with pytest.raises(ValueError):
        apply_spectral_window(f, H_PLUS, SpectralGrid.gauss_split(64), 16)


def test_spectral_grid_invariants():
    g = SpectralGrid.gauss_split(512)
    assert abs(g.weights.sum() - 1.0) <= 1e-14
    assert np.all(g.nodes != 0.0)
    assert np.all((g.nodes > -0.5) & (g.nodes < 0.5))


def test_spectral_window_explicit_window():
    f = LatticeSignal.delta_window()
    out = apply_spectral_window(f, H_CENTERED, out_window=(3, 2))
    assert out.offset == 3 and out.length == 2
    np.testing.assert_allclose(out.values, centered_kernel(np.array([3.0, 4.0])),
                               atol=1e-9)


# ---------------------------------------------------------------------------
# shifts and differences


def test_shift_delta():
    d = LatticeSignal.delta_window()
    s = shift(d, +1)
    assert s.site_value(1) == 1.0 and s.site_value(0) == 0.0


def test_shift_inverse_pair():
    rng = np.random.default_rng(12)
    f = LatticeSignal.torus(rng.standard_normal(9))
    back = shift(shift(f, +1), -1)
    np.testing.assert_array_equal(back.values, f.values)


def test_shift_torus_cycle():
    f = LatticeSignal.torus([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(shift(f, +1).values, [4.0, 1.0, 2.0, 3.0])


def test_shift_matches_multiplier():
    rng = np.random.default_rng(13)
    f = LatticeSignal.torus(rng.standard_normal(10))
    np.testing.assert_allclose(apply_spectral_torus(f, SHIFT_PLUS).values,
                               shift(f, +1).values, atol=1e-12)
    np.testing.assert_allclose(apply_spectral_torus(f, SHIFT_MINUS).values,
                               shift(f, -1).values, atol=1e-12)


def test_derivative_delta_forward():
    out = discrete_derivative(LatticeSignal.delta_window(), "+")
    # (d+ delta0)(x) = delta0(x+1) - delta0(x) = delta_{-1} - delta_0
    assert out.site_value(-1) == 1.0
    assert out.site_value(0) == -1.0


def test_derivative_constant_torus():
    c = LatticeSignal.torus(np.full(8, 3.7))
    for w in ("+", "-", "0"):
        assert np.all(discrete_derivative(c, w).values == 0.0)


def test_derivative_composition_is_laplacian():
    rng = np.random.default_rng(14)
    f = LatticeSignal.torus(rng.standard_normal(20))
    dpm = discrete_derivative(discrete_derivative(f, "-"), "+")
    diff = discrete_derivative(f, "+").values - discrete_derivative(f, "-").values
    lap = apply_spectral_torus(f, LAPLACIAN)
    np.testing.assert_allclose(dpm.values, lap.values, atol=1e-12)
    np.testing.assert_allclose(diff, lap.values, atol=1e-12)


def test_derivative_matches_multiplier():
    rng = np.random.default_rng(15)
    f = LatticeSignal.torus(rng.standard_normal(12))
    for w, op in (("+", DERIV_PLUS), ("-", DERIV_MINUS), ("0", DERIV_CENTERED)):
        np.testing.assert_allclose(discrete_derivative(f, w).values,
                                   apply_spectral_torus(f, op).values,
                                   atol=1e-12)


def test_window_derivative_matches_multiplier_route():
    rng = np.random.default_rng(21)
    f = LatticeSignal.window(rng.standard_normal(6), offset=-2)
    out = discrete_derivative(f, "0")
    want = oracle_convolution(f.values, -2,
                              lambda m: {1: -0.5, -1: 0.5}.get(m, 0.0),
                              out.offset, out.length)
    np.testing.assert_allclose(out.values, want, atol=1e-15)


# ---------------------------------------------------------------------------
# suites


def test_identity_suite_passes():
    rep = identity_suite(64, trials=8, seed=7)
    assert rep["passed"], rep["residuals"]
    assert rep["orientation_consistent"]
    assert max(rep["residuals"].values()) <= 1e-10


def test_identity_suite_orientation_is_opposite_shift():
    # data decides: squared one-sided transforms equal minus the *opposite*
    # shift (the convolution-table computation agrees; recorded, not assumed)
    rep = identity_suite(32, trials=4, seed=1)
    assert rep["squared_plus_orientation"] == "-S_-1"
    assert rep["squared_minus_orientation"] == "-S_+1"


def test_identity_suite_explicit_delta():
    n = 16
    f = LatticeSignal.delta_torus(n, mean_zero=True)
    out = apply_spectral_torus(apply_spectral_torus(f, H_MINUS), H_PLUS)
    np.testing.assert_allclose(out.values, -f.values, atol=1e-12)


def test_identity_suite_adjoint_example():
    rng = np.random.default_rng(30)
    f = LatticeSignal.random_mean_zero_torus(24, rng)
    g = LatticeSignal.random_mean_zero_torus(24, rng)
    hp = apply_spectral_torus(f, H_PLUS)
    hm = apply_spectral_torus(g, H_MINUS)
    assert abs(inner(hp, g) + inner(f, hm)) <= 1e-10


def test_identity_suite_validates_size():
    with pytest.raises(ValueError):
        identity_suite(4, trials=1, seed=0)


def test_multiplier_kernel_consistency():
    rep = multiplier_kernel_consistency([0.25, -0.25, 0.1], L=20_000)
    assert rep["max_cesaro_error"] < 1e-3
    for fac in rep["halving_factors"]:
        assert 1.6 <= fac <= 2.4
    # conjugate frequencies give identical error magnitudes
    per = {(e["xi"], e["sign"]): e["cesaro_error"] for e in rep["per_frequency"]}
    assert per[(0.25, "+")] == pytest.approx(per[(-0.25, "+")], rel=1e-9)


def test_multiplier_kernel_consistency_validation():
    with pytest.raises(ValueError):
        multiplier_kernel_consistency([0.25], L=10)
    with pytest.raises(ValueError):
        multiplier_kernel_consistency([0.0], L=2000)


def test_naive_contrast():
    rep = naive_contrast(64)
    assert rep["anti_involution_defect"] > 0.1
    assert abs(rep["first_application_norm"] - 1.0) > 0.1  # far from isometry
    assert rep["odd_kernel"]


def test_naive_contrast_zero_input_is_zero():
    z = LatticeSignal.window(np.zeros(5), offset=-2)
    out = apply_kernel(z, H_NAIVE, 8)
    assert np.all(out.values == 0.0)


def test_naive_contrast_validates_radius():
    with pytest.raises(ValueError):
        naive_contrast(4)
