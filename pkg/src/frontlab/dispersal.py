"""Dispersal operators and their spectral data.

For a compact symmetric kernel J the characteristic function is

    h(lam) = M(lam) - 1 + gamma0,   M(lam) = integral J(x) e^(lam x) dx,

and the linearly selected speed is c0* = min_{lam>0} h(lam)/lam, attained at
the unique decay rate lambda0. The local Laplacian plays the same role with
h(lam) = lam^2 + gamma0, giving (c0*, lambda0) = (2 sqrt(gamma0), sqrt(gamma0)).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import (
    ConfigurationError,
    DomainError,
    NoRootError,
    UnsupportedOperationError,
)

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
_DOUBLE_ROOT_TOL = 1e-9


@dataclass(frozen=True)
class KernelSpec:
    """Dispersal operator: local Laplacian or a compact symmetric kernel.

    ``L`` is the support half-width (nonlocal kinds only); ``samples`` holds
    (x, J(x)) pairs for the Tabulated kind, interpreted piecewise-linearly.
    """

    kind: str
    L: float | None = None
    samples: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.kind not in ("Local", "Box", "Triangle", "CosineBump", "Tabulated"):
            raise ConfigurationError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "Local":
            if self.L is not None or self.samples is not None:
                raise ConfigurationError("Local kind carries no kernel data")
        elif self.kind == "Tabulated":
            if self.samples is None:
                raise ConfigurationError("Tabulated kernel needs samples")
        else:
            if self.L is None or self.L <= 0:
                raise ConfigurationError("nonlocal kernel needs support half-width L > 0")

    @property
    def is_local(self) -> bool:
        return self.kind == "Local"


def local() -> KernelSpec:
    return KernelSpec(kind="Local")


def box(L: float) -> KernelSpec:
    return KernelSpec(kind="Box", L=float(L))


def triangle(L: float) -> KernelSpec:
    return KernelSpec(kind="Triangle", L=float(L))


def cosine_bump(L: float) -> KernelSpec:
    return KernelSpec(kind="CosineBump", L=float(L))


def tabulated(x, j) -> KernelSpec:
    """Build a Tabulated kernel from sample pairs.

    The samples must have strictly increasing x, nonnegative symmetric values
    and unit mass within 1% (renormalized exactly at load; rejected beyond).
    """
    x = np.asarray(x, dtype=float)
    j = np.asarray(j, dtype=float)
    if x.ndim != 1 or x.shape != j.shape or len(x) < 3:
        raise ConfigurationError("tabulated kernel needs matching 1-d sample arrays")
    if np.any(np.diff(x) <= 0):
        raise ConfigurationError("tabulated sample locations must be strictly increasing")
    if np.any(j < -1e-15):
        raise ConfigurationError("tabulated kernel values must be nonnegative")
    j = np.maximum(j, 0.0)
    mirrored = np.interp(-x, x, j, left=0.0, right=0.0)
    if np.max(np.abs(mirrored - j)) > 1e-12 * max(1.0, np.max(j)):
        raise ConfigurationError("tabulated kernel is not symmetric within 1e-12")
    mass = float(np.trapezoid(j, x))
    if abs(mass - 1.0) > 0.01:
        raise ConfigurationError(f"tabulated kernel mass {mass:.6f} deviates from 1 by > 1%")
    j = j / mass
    L = float(max(abs(x[0]), abs(x[-1])))
    return KernelSpec(kind="Tabulated", L=L, samples=tuple(zip(x.tolist(), j.tolist())))


def kernel_density(kernel: KernelSpec, x):
    """Pointwise J(x); zero outside the support. Not defined for Local."""
    if kernel.is_local:
        raise UnsupportedOperationError("Local operator has no kernel density")
    x = np.asarray(x, dtype=float)
    L = kernel.L
    inside = np.abs(x) <= L
    if kernel.kind == "Box":
        return np.where(inside, 1.0 / (2.0 * L), 0.0)
    if kernel.kind == "Triangle":
        return np.where(inside, (1.0 - np.abs(x) / L) / L, 0.0)
    if kernel.kind == "CosineBump":
        return np.where(inside, (np.pi / (4.0 * L)) * np.cos(np.pi * x / (2.0 * L)), 0.0)
    xs = np.array([p[0] for p in kernel.samples])
    js = np.array([p[1] for p in kernel.samples])
    return np.interp(x, xs, js, left=0.0, right=0.0)


# Gauss-Legendre panel rule used for tabulated-kernel integrals; panels are
# subdivided so |lam| * panel width <= 0.5, keeping the rule near machine
# accuracy for the e^(lam y) weight.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _tabulated_integral(kernel: KernelSpec, lam: float, moment: int) -> float:
    xs = np.array([p[0] for p in kernel.samples])
    js = np.array([p[1] for p in kernel.samples])
    total = 0.0
    for x0, x1, j0, j1 in zip(xs[:-1], xs[1:], js[:-1], js[1:]):
        width = x1 - x0
        n_sub = max(1, int(np.ceil(abs(lam) * width / 0.5)))
        edges = np.linspace(x0, x1, n_sub + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            y = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
            jy = j0 + (j1 - j0) * (y - x0) / width
            vals = jy * np.exp(lam * y) * y**moment
            total += 0.5 * (b - a) * float(np.dot(_GL_WEIGHTS, vals))
    return total


def mgf(kernel: KernelSpec, lam: float) -> float:
    """Moment generating function M(lam) = integral J(x) e^(lam x) dx."""
    if kernel.is_local:
        raise UnsupportedOperationError(
            "mgf is undefined for the Local operator; use the quadratic symbol"
        )
    lam = float(lam)
    L = kernel.L
    if kernel.kind == "Box":
        u = lam * L
        if abs(u) < 1e-5:
            return 1.0 + u * u / 6.0 + u**4 / 120.0
        return float(np.sinh(u) / u)
    if kernel.kind == "Triangle":
        v = lam * L / 2.0
        if abs(v) < 1e-5:
            s = 1.0 + v * v / 6.0 + v**4 / 120.0
        else:
            s = float(np.sinh(v) / v)
        return s * s
    if kernel.kind == "CosineBump":
        b = (2.0 * L / np.pi) ** 2
        return float(np.cosh(lam * L) / (1.0 + b * lam * lam))
    return _tabulated_integral(kernel, lam, 0)


def mgf_moment1(kernel: KernelSpec, lam: float) -> float:
    """First moment integral y J(y) e^(lam y) dy, i.e. M'(lam)."""
    if kernel.is_local:
        raise UnsupportedOperationError("moment integrals undefined for Local")
    lam = float(lam)
    L = kernel.L
    if kernel.kind == "Box":
        u = lam * L
        if abs(u) < 0.05:
            num = u**3 / 3.0 + u**5 / 30.0 + u**7 / 840.0
        else:
            num = u * np.cosh(u) - np.sinh(u)
        return float(L * num / (u * u)) if u != 0.0 else 0.0
    if kernel.kind == "Triangle":
        v = lam * L / 2.0
        if v == 0.0:
            return 0.0
        if abs(v) < 0.05:
            num = v**3 / 3.0 + v**5 / 30.0 + v**7 / 840.0
        else:
            num = v * np.cosh(v) - np.sinh(v)
        return float(L * np.sinh(v) * num / v**3) if abs(v) >= 1e-8 else float(L * v / 3.0)
    if kernel.kind == "CosineBump":
        b = (2.0 * L / np.pi) ** 2
        d = 1.0 + b * lam * lam
        return float(L * np.sinh(lam * L) / d - np.cosh(lam * L) * 2.0 * b * lam / d / d)
    return _tabulated_integral(kernel, lam, 1)


def characteristic(kernel: KernelSpec, gamma0: float, lam: float) -> float:
    """h(lam) = M(lam) - 1 + gamma0 (nonlocal) or lam^2 + gamma0 (local)."""
    if kernel.is_local:
        return lam * lam + gamma0
    return mgf(kernel, lam) - 1.0 + gamma0


@dataclass(frozen=True)
class SpectralData:
    """Linearly selected speed and decay rate of a dispersal operator."""

    c0_star: float
    lambda0: float
    gamma0: float
    minimizer_tol: float
    moment_certificate: float  # |c0* - integral y J e^(lambda0 y) dy|, nonlocal only


def _lambda_ceiling(kernel: KernelSpec) -> float:
    return 50.0 / kernel.L


def _golden_min(fun, lo, hi, tol):
    a, b = lo, hi
    m1 = b - _GOLDEN * (b - a)
    m2 = a + _GOLDEN * (b - a)
    f1, f2 = fun(m1), fun(m2)
    while b - a > tol:
        if f1 < f2:
            b, m2, f2 = m2, m1, f1
            m1 = b - _GOLDEN * (b - a)
            f1 = fun(m1)
        else:
            a, m1, f1 = m1, m2, f2
            m2 = a + _GOLDEN * (b - a)
            f2 = fun(m2)
    return 0.5 * (a + b)


@functools.lru_cache(maxsize=64)
def linear_speed(kernel: KernelSpec, gamma0: float) -> SpectralData:
    """Linearly selected speed c0* and decay rate lambda0.

    Local: closed form. Nonlocal: golden-section localization of the interior
    minimizer of h(lam)/lam followed by a Newton polish of the stationarity
    equation lam M'(lam) = h(lam); the first-moment identity
    c0* = integral y J(y) e^(lambda0 y) dy is certified to 1e-8.
    """
    if gamma0 <= 0:
        raise DomainError("gamma0 must be positive")
    if kernel.is_local:
        lam0 = float(np.sqrt(gamma0))
        return SpectralData(2.0 * lam0, lam0, gamma0, 0.0, 0.0)

    lam_max = _lambda_ceiling(kernel)

    def phi(lam):
        return characteristic(kernel, gamma0, lam) / lam

    # bracket the interior minimum on a log-spaced scan before refining
    grid = np.geomspace(1e-4 / kernel.L, lam_max, 200)
    vals = np.array([phi(g) for g in grid])
    k = int(np.argmin(vals))
    if k == 0 or k == len(grid) - 1:
        raise ConfigurationError("no interior minimizer of h(lam)/lam below the ceiling")
    lam = _golden_min(phi, grid[k - 1], grid[k + 1], 1e-8)

    def station(x):
        return x * mgf_moment1(kernel, x) - characteristic(kernel, gamma0, x)

    # Newton polish with a finite-difference slope; fall back to a bracketed
    # solve if an iterate escapes (station is strictly increasing).
    for _ in range(40):
        g = station(lam)
        step = 1e-7 * max(lam, 1.0)
        slope = (station(lam + step) - station(lam - step)) / (2.0 * step)
        if slope <= 0:
            break
        new = lam - g / slope
        if not (grid[k - 1] * 0.5 < new < min(lam_max, grid[k + 1] * 2.0)):
            break
        if abs(new - lam) <= 1e-15 * lam:
            lam = new
            break
        lam = new
    else:
        lam = brentq(station, grid[k - 1] * 0.5, grid[k + 1] * 2.0, xtol=1e-14)
    if abs(station(lam)) > 1e-10 * max(1.0, gamma0):
        lam = brentq(station, lam * 0.5, min(lam * 2.0, lam_max), xtol=1e-14)

    c0 = phi(lam)
    cert = abs(mgf_moment1(kernel, lam) - c0)
    if cert > 1e-8:
        raise ConfigurationError(
            f"first-moment certificate failed: |M'(lambda0) - c0*| = {cert:.3e}"
        )
    return SpectralData(float(c0), float(lam), float(gamma0), 1e-8, float(cert))


def lambda_roots(kernel: KernelSpec, gamma0: float, c: float) -> tuple[float, float]:
    """Positive roots lambda-|lambda+ of h(lam) = c lam at speed c >= c0*.

    At the linear speed (within 1e-9) the double root (lambda0, lambda0) is
    returned; below it there is no real root.
    """
    spectral = linear_speed(kernel, gamma0)
    c0, lam0 = spectral.c0_star, spectral.lambda0
    if c < c0 - 1e-12:
        raise NoRootError(f"speed {c} below the linear speed {c0}: no real decay roots")
    if abs(c - c0) <= _DOUBLE_ROOT_TOL:
        return lam0, lam0
    if kernel.is_local:
        disc = np.sqrt(max(c * c - 4.0 * gamma0, 0.0))
        return (c - disc) / 2.0, (c + disc) / 2.0

    def gap(lam):
        return characteristic(kernel, gamma0, lam) - c * lam

    lo = brentq(gap, 1e-14, lam0, xtol=1e-14)
    hi_end = lam0 * 2.0
    lam_max = _lambda_ceiling(kernel)
    while gap(hi_end) < 0:
        hi_end *= 2.0
        if hi_end > lam_max:
            raise ConfigurationError("upper decay root not found below the lambda ceiling")
    hi = brentq(gap, lam0, hi_end, xtol=1e-14)
    return float(lo), float(hi)


def mu_root(kernel: KernelSpec, f1: float, c: float) -> float:
    """Unique positive left-tail rate mu of 1 - W toward the stable state.

    A mode 1 - W ~ e^(mu xi) decaying as xi -> -infinity satisfies
    mu^2 + c mu + f1 = 0 (local; positive branch (-c + sqrt(c^2 - 4 f1))/2)
    or M(mu) + c mu = 1 - f1 (nonlocal); f1 = f'(1) must be negative. The
    nonlocal form reduces to the local one in the narrow-kernel limit and is
    the unique positive crossing of an increasing function, so the root
    always exists for c > 0.
    """
    if f1 >= 0:
        raise DomainError("f'(1) must be negative for a stable rest state")
    if c <= 0:
        raise DomainError("speed must be positive")
    if kernel.is_local:
        return float((-c + np.sqrt(c * c - 4.0 * f1)) / 2.0)

    def gap(mu):
        return mgf(kernel, mu) + c * mu - (1.0 - f1)

    hi = 1.0 / kernel.L
    lam_max = _lambda_ceiling(kernel)
    while gap(hi) < 0:
        hi *= 2.0
        if hi > lam_max:
            raise ConfigurationError("left-tail rate not found below the lambda ceiling")
    return float(brentq(gap, 1e-14, hi, xtol=1e-14))


def discrete_weights(kernel: KernelSpec, dx: float) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid convolution weights on the lattice k*dx, k = -m..m.

    Weights are renormalized to unit sum so constant states are exact
    equilibria of the discrete operator. Requires >= 8 cells per support
    half-width.
    """
    if kernel.is_local:
        raise UnsupportedOperationError("discrete kernel weights undefined for Local")
    m = int(round(kernel.L / dx))
    if m < 8:
        raise ConfigurationError(
            f"kernel support resolved by only {m} cells; need >= 8 (reduce dx)"
        )
    y = dx * np.arange(-m, m + 1)
    w = kernel_density(kernel, y) * dx
    w[0] *= 0.5
    w[-1] *= 0.5
    total = w.sum()
    if total <= 0:
        raise ConfigurationError("degenerate discrete kernel")
    return y, w / total
