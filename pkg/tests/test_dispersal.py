import numpy as np
import pytest
from scipy.integrate import quad

from frontlab import dispersal
from frontlab.errors import ConfigurationError, DomainError, NoRootError, UnsupportedOperationError

SINH1 = 1.1752011936438014  # sinh(1), frozen from the quadrature oracle
BOX_LAMBDA0 = 1.9150080481545375  # root of tanh(x) = x/2, bisection oracle
BOX_C0 = 0.9052617393690583  # sinh(x)/x^2 at that root


def quad_mgf(kernel, lam):
    val, err = quad(
        lambda x: dispersal.kernel_density(kernel, x) * np.exp(lam * x),
        -kernel.L,
        kernel.L,
        limit=200,
        epsabs=1e-13,
        epsrel=1e-13,
    )
    assert err < 1e-10
    return val


@pytest.mark.parametrize("maker", [dispersal.box, dispersal.triangle, dispersal.cosine_bump])
@pytest.mark.parametrize("lam", [0.0, 0.3, 1.0, 2.0, -1.0])
def test_mgf_matches_quadrature(maker, lam):
    kernel = maker(1.0)
    assert dispersal.mgf(kernel, lam) == pytest.approx(quad_mgf(kernel, lam), abs=1e-10)


def test_mgf_box_values(box1):
    assert dispersal.mgf(box1, 0.0) == 1.0
    assert dispersal.mgf(box1, 1.0) == pytest.approx(SINH1, abs=1e-12)
    assert dispersal.mgf(box1, -1.0) == pytest.approx(SINH1, abs=1e-12)  # symmetry


def test_mgf_moment1_is_derivative(box1):
    h = 1e-6
    for kernel in (box1, dispersal.triangle(1.5), dispersal.cosine_bump(0.7)):
        for lam in (0.4, 1.3):
            fd = (dispersal.mgf(kernel, lam + h) - dispersal.mgf(kernel, lam - h)) / (2 * h)
            assert dispersal.mgf_moment1(kernel, lam) == pytest.approx(fd, rel=1e-8)


def test_tabulated_triangle_exact():
    # a triangle kernel is piecewise linear, so its tabulation is exact
    x = np.linspace(-1.0, 1.0, 41)
    tri = dispersal.triangle(1.0)
    tab = dispersal.tabulated(x, dispersal.kernel_density(tri, x))
    for lam in (0.0, 0.7, 2.5):
        assert dispersal.mgf(tab, lam) == pytest.approx(dispersal.mgf(tri, lam), abs=1e-12)


def test_tabulated_cosine_dense():
    x = np.linspace(-1.0, 1.0, 2001)
    cb = dispersal.cosine_bump(1.0)
    tab = dispersal.tabulated(x, dispersal.kernel_density(cb, x))
    assert dispersal.mgf(tab, 1.0) == pytest.approx(dispersal.mgf(cb, 1.0), abs=1e-6)


def test_tabulated_renormalization():
    x = np.linspace(-1.0, 1.0, 201)
    tri = dispersal.kernel_density(dispersal.triangle(1.0), x)
    ok = dispersal.tabulated(x, 1.005 * tri)
    assert np.trapezoid([p[1] for p in ok.samples], [p[0] for p in ok.samples]) == pytest.approx(
        1.0, abs=1e-10
    )
    with pytest.raises(ConfigurationError):
        dispersal.tabulated(x, 1.02 * tri)
    with pytest.raises(ConfigurationError):
        dispersal.tabulated(x, tri + np.linspace(0, 0.05, 201))  # asymmetric


def test_local_mgf_is_error():
    with pytest.raises(UnsupportedOperationError):
        dispersal.mgf(dispersal.local(), 1.0)
    with pytest.raises(UnsupportedOperationError):
        dispersal.kernel_density(dispersal.local(), 0.0)


def test_linear_speed_local():
    sp = dispersal.linear_speed(dispersal.local(), 1.0)
    assert (sp.c0_star, sp.lambda0) == (2.0, 1.0)
    sp4 = dispersal.linear_speed(dispersal.local(), 4.0)
    assert (sp4.c0_star, sp4.lambda0) == (4.0, 2.0)


def golden_section_min(fun, lo, hi, tol=1e-12):
    """Independent minimizer used as the oracle for the box spectral data."""
    g = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    m1, m2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = fun(m1), fun(m2)
    while b - a > tol:
        if f1 < f2:
            b, m2, f2 = m2, m1, f1
            m1 = b - g * (b - a)
            f1 = fun(m1)
        else:
            a, m1, f1 = m1, m2, f2
            m2 = a + g * (b - a)
            f2 = fun(m2)
    return 0.5 * (a + b)


def test_linear_speed_box_vs_oracle(box1, spectral_box):
    # a value-comparison minimizer resolves a smooth minimum to ~sqrt(eps)
    lam_oracle = golden_section_min(lambda l: np.sinh(l) / l**2, 0.5, 4.0)
    assert lam_oracle == pytest.approx(BOX_LAMBDA0, abs=5e-8)
    assert spectral_box.lambda0 == pytest.approx(BOX_LAMBDA0, abs=1e-10)
    assert spectral_box.lambda0 == pytest.approx(lam_oracle, abs=1e-7)
    assert spectral_box.c0_star == pytest.approx(BOX_C0, abs=1e-10)
    # stationarity and first-moment certificates
    h = dispersal.characteristic(box1, 1.0, spectral_box.lambda0)
    assert h == pytest.approx(spectral_box.c0_star * spectral_box.lambda0, abs=1e-10)
    assert spectral_box.moment_certificate <= 1e-8


def test_linear_speed_convexity(box1, spectral_box):
    for eps in (1e-3, 1e-2):
        for sign in (-1, 1):
            lam = spectral_box.lambda0 + sign * eps
            phi = dispersal.characteristic(box1, 1.0, lam) / lam
            assert phi > spectral_box.c0_star


def test_continuum_limit_diffusive_scaling():
    # kernel variance 2 eps^2 with rate eps^2: rescaled speed tends to 2
    vals = []
    for eps in (0.5, 0.25, 0.125):
        sp = dispersal.linear_speed(dispersal.box(np.sqrt(6.0) * eps), eps * eps)
        vals.append(sp.c0_star / eps**2)
    gaps = [v - 2.0 for v in vals]
    assert all(g > 0 for g in gaps)
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.01


def test_lambda_roots_local():
    assert dispersal.lambda_roots(dispersal.local(), 1.0, 2.5) == pytest.approx((0.5, 2.0))
    assert dispersal.lambda_roots(dispersal.local(), 1.0, 2.0) == (1.0, 1.0)
    with pytest.raises(NoRootError):
        dispersal.lambda_roots(dispersal.local(), 1.0, 1.9)


def test_lambda_roots_box_residuals(box1, spectral_box):
    rng = np.random.default_rng(5)
    c0, lam0 = spectral_box.c0_star, spectral_box.lambda0
    lm, lp = dispersal.lambda_roots(box1, 1.0, 1.0)
    assert lm < lam0 < lp
    for c in rng.uniform(c0 * 1.0001, 3 * c0, size=20):
        lm, lp = dispersal.lambda_roots(box1, 1.0, float(c))
        for lam in (lm, lp):
            assert abs(dispersal.characteristic(box1, 1.0, lam) - c * lam) <= 1e-9
        assert lm < lam0 < lp


def test_mu_root_local():
    assert dispersal.mu_root(dispersal.local(), -9.0, 2.5) == pytest.approx(2.0, abs=1e-14)
    # for c = 2 this is sqrt(1 - f'(1)) - 1
    assert dispersal.mu_root(dispersal.local(), -3.0, 2.0) == pytest.approx(1.0, abs=1e-14)


def test_mu_root_box_residual(box1):
    mu = dispersal.mu_root(box1, -1.0, 1.0)
    assert abs(dispersal.mgf(box1, mu) + 1.0 * mu - 2.0) < 1e-10


def test_mu_root_monotone_in_f1(box1):
    c = 1.0
    mus = [dispersal.mu_root(box1, f1, c) for f1 in (-0.5, -1.0, -2.0, -4.0)]
    assert all(a < b for a, b in zip(mus, mus[1:]))


def test_mu_root_errors(box1):
    with pytest.raises(DomainError):
        dispersal.mu_root(box1, 0.5, 1.0)
    with pytest.raises(DomainError):
        dispersal.mu_root(box1, -1.0, -1.0)


def test_discrete_weights(box1):
    y, w = dispersal.discrete_weights(box1, 0.05)
    assert w.sum() == pytest.approx(1.0, abs=0)
    assert np.allclose(w, w[::-1])
    with pytest.raises(ConfigurationError):
        dispersal.discrete_weights(box1, 0.2)  # support resolved by < 8 cells
