import numpy as np
import pytest
import sympy
from scipy.interpolate import CubicSpline

from frontlab import dispersal, waves
from frontlab.errors import (
    ConfigurationError,
    DomainError,
    FamilyMisspecificationError,
    UnclassifiedDecayError,
)


def exact_pushed_wave(s, xi):
    """1/(1 + e^(b xi)) with b = sqrt(s/2): closed-form wave for s > 2."""
    b = np.sqrt(s / 2.0)
    return 1.0 / (1.0 + np.exp(np.clip(b * xi, -500.0, 500.0)))


def test_exact_wave_identity_symbolic():
    # the closed form really solves the profile equation at c = b + 1/b
    xi, s = sympy.symbols("xi s", positive=True)
    b = sympy.sqrt(s / 2)
    W = 1 / (1 + sympy.exp(b * xi))
    c = b + 1 / b
    f = W * (1 - W) * (1 + s * W)
    residual = sympy.simplify(sympy.diff(W, xi, 2) + c * sympy.diff(W, xi) + f)
    assert residual == 0


@pytest.mark.parametrize("s", [3.0, 4.0, 8.0])
def test_exact_pushed_oracle(hr, s):
    c = np.sqrt(s / 2.0) + np.sqrt(2.0 / s)
    prof = waves.solve_wave_local(hr, s, c)
    assert prof is not None
    assert np.max(np.abs(prof.W - exact_pushed_wave(s, prof.xi))) <= 1e-6


def test_nonexistence_below_minimal_speed(hr):
    assert waves.solve_wave_local(hr, 8.0, 2.3) is None  # c*(8) = 2.5


def test_pulled_wave_exists_at_linear_speed(hr):
    prof = waves.solve_wave_local(hr, 0.0, 2.0)
    assert prof is not None
    assert prof.check_shape() == []


def test_below_linear_bound_rejected(hr):
    with pytest.raises(DomainError):
        waves.solve_wave_local(hr, 1.0, 1.5)


@pytest.mark.parametrize(
    "s, expected",
    [(8.0, 2.5), (1.0, 2.0), (4.0, 2.1213203435596424)],
)
def test_minimal_speed_local(hr, s, expected):
    assert waves.minimal_speed_local(hr, s, tol=1e-6) == pytest.approx(expected, abs=1e-4)


def test_minimal_speed_tol_guard(hr):
    with pytest.raises(ConfigurationError):
        waves.minimal_speed_local(hr, 1.0, tol=1e-9)


def test_minimal_speed_growth_cap():
    import frontlab.families as families

    hr = families.hadeler_rothe()
    with pytest.raises(FamilyMisspecificationError):
        waves.minimal_speed_local(hr, 900.0)  # c*(900) > 10 * 2 sqrt(gamma0)


def test_profile_residuals(hr, wave_s1, wave_s8, nonlocal_wave_kpp):
    for _, prof in (wave_s1, wave_s8):
        assert prof.residual <= 1e-8
        assert prof.check_shape() == []
    assert nonlocal_wave_kpp.residual <= 1e-7
    assert nonlocal_wave_kpp.check_shape() == []


def test_nonlocal_solve_at_linear_speed(hr, box1, spectral_box, nonlocal_wave_kpp):
    assert nonlocal_wave_kpp.residual < 1e-8
    assert np.all(np.diff(nonlocal_wave_kpp.W) < 1e-10)


def test_nonlocal_supercritical(hr, box1, spectral_box):
    c = 1.5 * spectral_box.c0_star
    prof = waves.solve_wave_nonlocal(hr, 1.0, c, box1, dx=0.02)
    assert prof is not None
    fit, klass = waves.fit_decay(prof, spectral_box)
    lam_minus, lam_plus = dispersal.lambda_roots(box1, 1.0, c)
    assert klass.label in ("Supercritical", "Pushed")
    matched = lam_minus if klass.label == "Supercritical" else lam_plus
    assert fit.lambda_hat == pytest.approx(matched, rel=0.05)


def test_nonlocal_translation_invariance(hr, box1, spectral_box, nonlocal_wave_kpp):
    shifted = waves.solve_wave_nonlocal(
        hr, 0.0, spectral_box.c0_star, box1, dx=0.02, pin_level=0.3
    )
    ref = nonlocal_wave_kpp
    core = (
        (ref.xi > shifted.xi[0] + 1.0)
        & (ref.xi < shifted.xi[-1] - 1.0)
        & (ref.W > 1e-8)
        & (ref.W < 1.0 - 1e-8)
    )
    interp = CubicSpline(shifted.xi, shifted.W)(ref.xi[core])
    assert np.max(np.abs(interp - ref.W[core])) <= 1e-8


def test_nonlocal_degenerate_grid(hr, box1):
    with pytest.raises(ConfigurationError):
        waves.solve_wave_nonlocal(hr, 0.0, 1.0, box1, dx=0.2)  # < 8 cells per support


def test_left_tail_rate_local(hr, wave_s8):
    _, prof = wave_s8
    mu = dispersal.mu_root(dispersal.local(), -9.0, 2.5)
    assert mu == 2.0
    fit = waves.fit_left_tail(prof)
    assert fit.mu_hat == pytest.approx(mu, rel=0.02)


def test_left_tail_rate_nonlocal(hr, box1, spectral_box, nonlocal_wave_kpp):
    mu = dispersal.mu_root(box1, -1.0, spectral_box.c0_star)
    fit = waves.fit_left_tail(nonlocal_wave_kpp)
    assert fit.mu_hat == pytest.approx(mu, rel=0.02)


def test_decay_classes(hr, spectral_local, wave_s1, wave_s8):
    _, p1 = wave_s1
    fit1, k1 = waves.fit_decay(p1, spectral_local)
    assert k1.label == "Pulled"
    assert fit1.A_hat > 0

    p2 = waves.solve_wave_local(hr, 2.0, 2.0)
    fit2, k2 = waves.fit_decay(p2, spectral_local)
    assert k2.label == "Transition"
    assert abs(fit2.A_hat) * fit2.window[1] <= 0.05 * abs(fit2.B_hat)

    _, p8 = wave_s8
    fit8, k8 = waves.fit_decay(p8, spectral_local)
    assert k8.label == "Pushed"
    assert fit8.lambda_hat == pytest.approx(2.0, rel=0.02)


def test_supercritical_local_class(hr, spectral_local):
    prof = waves.solve_wave_local(hr, 0.0, 2.5)  # c above c* = 2: slow decay
    fit, klass = waves.fit_decay(prof, spectral_local)
    assert klass.label == "Supercritical"
    assert fit.lambda_hat == pytest.approx(0.5, rel=0.05)  # lambda-(2.5)


def test_unclassified_decay(hr, spectral_local):
    xi = np.linspace(-10.0, 25.0, 3000)
    W = np.clip(1.0 / (1.0 + np.exp(0.7 * xi)), 0.0, 1.0)
    prof = waves.WaveProfile(
        c=2.5, xi=xi, W=W, mode="local", family=hr, s=8.0, residual=0.0
    )
    with pytest.raises(UnclassifiedDecayError):
        waves.fit_decay(prof, spectral_local)  # 0.7 matches neither 0.5 nor 2.0


def test_tail_window_guard(hr, spectral_local):
    xi = np.linspace(-5.0, 5.0, 200)
    W = np.clip(1.0 - 0.09 * (xi + 5.0), 0.05, 1.0)  # never below 1e-2
    prof = waves.WaveProfile(
        c=2.0, xi=xi, W=W, mode="local", family=hr, s=1.0, residual=0.0
    )
    with pytest.raises(ConfigurationError):
        waves.fit_decay(prof, spectral_local)
