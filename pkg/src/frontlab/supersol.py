"""Piecewise super-solution construction around a pulled minimal wave.

A four-piece correction R is subtracted from the minimal wave W* so that
Wbar = min(W* - R, 1) super-solves the profile operator with the family
parameter raised by delta0:

    region 1 (far tail, xi >= xi1 + d1):      R = eps1 sigma(xi) e^(-lam0 xi)
    region 2 (bridge, xi2 + d2 .. xi1 + d1):  R = eps2 e^(lam1 xi)
    region 3 (sine connector, around xi2):    R = eps3 sin(d4 (xi - xi2))
    region 4 (left tail, xi <= xi2 - d3):     R = -eps4 e^(lam2 xi)

The eps coefficients are chained by continuity at the three junctions, and
one-sided slopes there must make Wbar concave-cornered. The verifier
evaluates the operator pointwise, eliminating W* derivatives through the
profile equation so only the correction is differentiated analytically, and
searches for the largest admissible delta0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import dispersal
from .cauchy import Grid1D
from .dispersal import SpectralData, kernel_density
from .errors import ConfigurationError, DomainError, RejectedParamsError
from .families import FamilySpec, f_eval, reaction
from .waves import WaveProfile, fit_decay, tail_fit

RESIDUAL_SLACK = 1e-9  # "<= 0 a.e." is checked as residual <= +1e-9


@dataclass
class SupersolParams:
    """Junctions, amplitudes, rates and bounds of the four-piece correction."""

    mode: str  # local | nonlocal
    xi1: float
    xi2: float
    delta0: float
    delta1: float
    delta2: float
    delta3: float
    delta4: float
    eps1: float
    eps2: float
    eps3: float
    eps4: float
    lambda1: float
    lambda2: float
    K1: float
    K2: float
    K3: float
    lambda0: float = 1.0
    c_star: float = 2.0
    mu: float = np.nan
    L: float | None = None

    def sigma(self, xi):
        """Far-tail shape: vanishes at xi1, grows linearly, convex start."""
        t = np.asarray(xi, dtype=float) - self.xi1
        lam = self.lambda0
        return (np.exp(-0.5 * lam * t) - 1.0 + lam * t) / lam**2 * self._sig_scale()

    def sigma_d1(self, xi):
        t = np.asarray(xi, dtype=float) - self.xi1
        lam = self.lambda0
        return (1.0 / lam - np.exp(-0.5 * lam * t) / (2.0 * lam)) * self._sig_scale()

    def sigma_d2(self, xi):
        t = np.asarray(xi, dtype=float) - self.xi1
        return 0.25 * np.exp(-0.5 * self.lambda0 * t) * self._sig_scale()

    def _sig_scale(self):
        # the local construction uses 4 e^(-t/2) - 4 + 4t, i.e. the lam0 = 1
        # shape scaled by 4; the nonlocal one uses the 1/lam0^2 form
        return 4.0 if self.mode == "local" else 1.0

    def junctions(self) -> tuple[float, float, float]:
        return (self.xi2 - self.delta3, self.xi2 + self.delta2, self.xi1 + self.delta1)

    def violations(self) -> list[str]:
        """Constraint checklist; empty iff the parameter set is admissible."""
        v = []
        lam0, lam1, lam2 = self.lambda0, self.lambda1, self.lambda2
        c = self.c_star
        if not self.xi2 < 0.0 < self.xi1:
            v.append("junction abscissae must satisfy xi2 < 0 < xi1")
        if min(self.delta1, self.delta2, self.delta3, self.delta4) <= 0:
            v.append("piece offsets must be positive")
        if min(self.eps1, self.eps2, self.eps3, self.eps4) <= 0:
            v.append("piece amplitudes must be positive")

        if self.mode == "local":
            if not (-2.0 * lam1 - lam1**2 + self.K2 < 0.0 and lam1 > self.K2):
                v.append("lambda1 must exceed K2 with -2 lam1 - lam1^2 + K2 < 0")
            if not (0.0 < lam2 < self.mu and lam2**2 + 2.0 * lam2 - self.K3 < 0.0):
                v.append("lambda2 must lie in (0, mu) with lam2^2 + 2 lam2 < K3")
            if not 1.0 + 3.0 * (1.0 - np.exp(-self.delta1 / 2.0)) - 2.0 * self.delta1 > 0.0:
                v.append("delta1 fails its smallness inequality")
            lo, hi = 1.0 / lam1, 1.0 / self.K2
        else:
            if not (-c * lam1 + 1.0 + self.K2 < 0.0 and lam1 > 4.0 * self.K2 / c):
                v.append("lambda1 must exceed 4 K2 / c0* with c0* lam1 > 1 + K2")
            if not (
                0.0 < lam2 < self.mu
                and 1.0 + self.K3 - np.exp(lam2 * self.L) - c * lam2 > 0.0
            ):
                v.append("lambda2 fails its left-tail inequality")
            if not 1.5 * np.exp(-lam0 * self.delta1 / 2.0) + self.delta1 * lam0 < 2.0:
                v.append("delta1 fails its smallness inequality")
            if not self.delta4 < c / (2.0 * self.L):
                v.append("delta4 must stay below c0*/(2 L)")
            lo, hi = 1.0 / lam1, c / (4.0 * self.K2)
        if not lo < self.delta2 < hi:
            v.append(f"delta2 must lie in ({lo:.6g}, {hi:.6g})")
        if not self.delta4 * max(self.delta2, self.delta3) < np.pi / 2.0:
            v.append("sine argument exceeds a quarter period")

        # continuity chaining of the amplitudes
        x1 = self.xi1 + self.delta1
        eps2_req = self.eps1 * float(self.sigma(x1)) * np.exp(-(lam0 + lam1) * x1)
        x2 = self.xi2 + self.delta2
        eps3_req = self.eps2 * np.exp(lam1 * x2) / np.sin(self.delta4 * self.delta2)
        x3 = self.xi2 - self.delta3
        eps4_req = self.eps3 * np.sin(self.delta4 * self.delta3) / np.exp(lam2 * x3)
        for name, got, req in (
            ("eps2", self.eps2, eps2_req),
            ("eps3", self.eps3, eps3_req),
            ("eps4", self.eps4, eps4_req),
        ):
            if abs(got - req) > 1e-12 * max(abs(req), 1e-300):
                v.append(f"{name} violates its continuity formula")
        return v


@dataclass
class PiecewiseBump:
    """Evaluable four-piece correction with one-sided junction derivatives."""

    params: SupersolParams
    sigma_label: str = ""

    def __post_init__(self):
        if not self.sigma_label:
            p = self.params
            self.sigma_label = (
                "4 e^(-(xi-xi1)/2) - 4 + 4 (xi - xi1)"
                if p.mode == "local"
                else "(e^(-lam0 (xi-xi1)/2) - 1 + lam0 (xi - xi1)) / lam0^2"
            )

    def _masks(self, xi):
        p = self.params
        j3, j2, j1 = p.junctions()
        m1 = xi >= j1
        m2 = (xi >= j2) & (xi < j1)
        m3 = (xi >= j3) & (xi < j2)
        m4 = xi < j3
        return m1, m2, m3, m4

    def value(self, xi):
        xi = np.asarray(xi, dtype=float)
        p = self.params
        out = np.empty_like(xi)
        m1, m2, m3, m4 = self._masks(xi)
        out[m1] = p.eps1 * p.sigma(xi[m1]) * np.exp(-p.lambda0 * xi[m1])
        out[m2] = p.eps2 * np.exp(p.lambda1 * xi[m2])
        out[m3] = p.eps3 * np.sin(p.delta4 * (xi[m3] - p.xi2))
        out[m4] = -p.eps4 * np.exp(p.lambda2 * xi[m4])
        return out

    def deriv(self, xi, order: int = 1):
        xi = np.asarray(xi, dtype=float)
        p = self.params
        out = np.empty_like(xi)
        m1, m2, m3, m4 = self._masks(xi)
        lam0 = p.lambda0
        e1 = np.exp(-lam0 * xi[m1])
        if order == 1:
            out[m1] = p.eps1 * (p.sigma_d1(xi[m1]) - lam0 * p.sigma(xi[m1])) * e1
            out[m2] = p.eps2 * p.lambda1 * np.exp(p.lambda1 * xi[m2])
            out[m3] = p.eps3 * p.delta4 * np.cos(p.delta4 * (xi[m3] - p.xi2))
            out[m4] = -p.eps4 * p.lambda2 * np.exp(p.lambda2 * xi[m4])
        elif order == 2:
            out[m1] = p.eps1 * (
                p.sigma_d2(xi[m1]) - 2.0 * lam0 * p.sigma_d1(xi[m1]) + lam0**2 * p.sigma(xi[m1])
            ) * e1
            out[m2] = p.eps2 * p.lambda1**2 * np.exp(p.lambda1 * xi[m2])
            out[m3] = -p.eps3 * p.delta4**2 * np.sin(p.delta4 * (xi[m3] - p.xi2))
            out[m4] = -p.eps4 * p.lambda2**2 * np.exp(p.lambda2 * xi[m4])
        else:
            raise DomainError(f"unsupported derivative order {order}")
        return out

    def one_sided_slopes(self, junction: float) -> tuple[float, float]:
        h = 1e-9
        left = float(self.deriv(np.array([junction - h]))[0])
        right = float(self.deriv(np.array([junction + h]))[0])
        return left, right

    def junction_gaps(self) -> dict[float, float]:
        h = 1e-12
        gaps = {}
        for j in self.params.junctions():
            lo = float(self.value(np.array([j - h]))[0])
            hi = float(self.value(np.array([j + h]))[0])
            gaps[j] = abs(hi - lo)
        return gaps


def build_Rw(params: SupersolParams) -> PiecewiseBump:
    """Assemble the correction; rejects parameter sets violating invariants."""
    bad = params.violations()
    if bad:
        raise RejectedParamsError("; ".join(bad))
    bump = PiecewiseBump(params)
    worst = max(bump.junction_gaps().values())
    scale = max(abs(params.eps3), abs(params.eps2), 1e-300)
    if worst > 1e-12 * max(1.0, scale):
        raise RejectedParamsError(f"junction discontinuity {worst:.3e}")
    return bump


def estimate_constants(
    profile: WaveProfile, family: FamilySpec, s: float
) -> tuple[float, float, float, float, float]:
    """Bounds (K1, K2, K3) along the profile and the junction abscissae.

    K1 and K2 bound |f''| and |f'| along the wave with a 5% margin; K3 is
    half the slope magnitude at the stable state; xi1 marks the onset of the
    quadratic far-tail regime (W < 1e-2); xi2 is the largest xi with
    f'(W(xi)) <= -K3.
    """
    W = profile.W
    if W.max() - W.min() < 0.5:
        raise ConfigurationError("profile does not span both rest states")
    fp = f_eval(family, np.clip(W, 0.0, 1.0), s, 1)
    fpp = f_eval(family, np.clip(W, 0.0, 1.0), s, 2)
    K1 = 1.05 * float(np.max(np.abs(fpp)))
    K2 = 1.05 * float(np.max(np.abs(fp)))
    K3 = 0.5 * abs(f_eval(family, 1.0, s, 1))
    below = np.nonzero(W < 1e-2)[0]
    if len(below) == 0:
        raise ConfigurationError("profile tail never reaches 1e-2")
    xi1 = float(profile.xi[below[0]])
    neg = np.nonzero(fp <= -K3)[0]
    if len(neg) == 0:
        raise ConfigurationError("no region with f'(W) <= -K3 on the profile")
    xi2 = float(profile.xi[neg[-1]])
    if not xi2 < 0.0 < xi1:
        raise ConfigurationError(
            f"junction layout xi2={xi2:.3f} < 0 < xi1={xi1:.3f} failed"
        )
    return K1, K2, K3, xi1, xi2


def auto_params(
    profile: WaveProfile,
    spectral: SpectralData,
    family: FamilySpec,
    s: float,
    delta0: float,
) -> SupersolParams:
    """Choose an admissible parameter set for the given pulled minimal wave.

    Preconditions: the profile is classified Pulled (positive tail
    prefactor), its speed is the linear one, and (local mode) the family is
    normalized to gamma0 = 1 so the operator carries the drift 2 W'.
    """
    mode = profile.mode
    fit, klass = fit_decay(profile, spectral)
    if klass.label != "Pulled":
        raise DomainError(
            f"construction requires a pulled front; profile classified {klass.label}"
        )
    if profile.c > spectral.c0_star + 1e-6:
        raise DomainError("construction applies at the linear speed only")
    if mode == "local" and abs(family.gamma0 - 1.0) > 1e-12:
        raise DomainError("local construction assumes the gamma0 = 1 normalization")

    K1, K2, K3, xi1, xi2 = estimate_constants(profile, family, s)
    lam0 = spectral.lambda0
    c = spectral.c0_star
    f1 = f_eval(family, 1.0, s, 1)
    kernel = profile.kernel if mode == "nonlocal" else dispersal.local()
    mu = dispersal.mu_root(kernel, f1, profile.c)

    if mode == "local":
        lam1 = max(2.0 * K2, 1.0 + np.sqrt(1.0 + K2)) + 1.0
        lam2 = 0.5 * min(mu, np.sqrt(1.0 + K3) - 1.0)
        d2_lo, d2_hi = 1.0 / lam1, 1.0 / K2
    else:
        lam1 = max(4.0 * K2 / c, (1.0 + K2) / c) + 1.0
        r_hi = 1.0 / kernel.L
        while 1.0 + K3 - np.exp(r_hi * kernel.L) - c * r_hi > 0.0:
            r_hi *= 2.0
        r = brentq(
            lambda x: 1.0 + K3 - np.exp(x * kernel.L) - c * x, 1e-12, r_hi, xtol=1e-13
        )
        lam2 = 0.5 * min(mu, r)
        d2_lo, d2_hi = 1.0 / lam1, c / (4.0 * K2)
    if not d2_lo < d2_hi:
        raise RejectedParamsError(
            f"empty admissible interval for delta2: ({d2_lo:.6g}, {d2_hi:.6g})"
        )
    delta2 = 0.5 * (d2_lo + d2_hi)
    delta3 = delta2

    delta1 = 0.1
    for _ in range(60):
        if mode == "local":
            base = 1.0 + 3.0 * (1.0 - np.exp(-delta1 / 2.0)) - 2.0 * delta1 > 0.0
            corner = (
                1.0 + (3.0 + 2.0 * lam1) * (1.0 - np.exp(-delta1 / 2.0))
                - 2.0 * (1.0 + lam1) * delta1
                > 0.0
            )
        else:
            base = 1.5 * np.exp(-lam0 * delta1 / 2.0) + delta1 * lam0 < 2.0
            g = np.exp(-lam0 * delta1 / 2.0)
            corner = (
                2.0 * (lam0 + lam1) * (g - 1.0 + delta1 * lam0) + lam0 * g
                < 2.0 * lam0
            )
        if base and corner:
            break
        delta1 *= 0.5
    else:
        raise RejectedParamsError("no admissible delta1 found")

    delta4 = 0.1
    for _ in range(60):
        if delta4 * max(delta2, delta3) >= np.pi / 2.0:
            delta4 *= 0.5
            continue
        theta2 = np.linspace(0.0, delta4 * delta2, 64)
        theta3 = np.linspace(0.0, delta4 * delta3, 64)
        if mode == "local":
            right = np.all(delta4 * np.cos(theta2) - (K2 + delta4**2) * np.sin(theta2) > 0.0)
            left = np.all(
                2.0 * delta4 * np.cos(theta3) - (K2 + delta4**2) * np.sin(theta3) > 0.0
            )
            cap = True
        else:
            amp = K2 + kernel.L**2 * delta4**4 / 2.0
            right = np.all(0.5 * c * delta4 * np.cos(theta2) - amp * np.sin(theta2) > 0.0)
            left = np.all(c * delta4 * np.cos(theta3) - amp * np.sin(theta3) > 0.0)
            cap = delta4 < c / (2.0 * kernel.L)
        if right and left and cap:
            break
        delta4 *= 0.5
    else:
        raise RejectedParamsError("no admissible delta4 found")

    params = SupersolParams(
        mode=mode, xi1=xi1, xi2=xi2, delta0=delta0,
        delta1=delta1, delta2=delta2, delta3=delta3, delta4=delta4,
        eps1=1.0, eps2=1.0, eps3=1.0, eps4=1.0,
        lambda1=lam1, lambda2=lam2, K1=K1, K2=K2, K3=K3,
        lambda0=lam0, c_star=c, mu=mu,
        L=None if mode == "local" else kernel.L,
    )

    # eps1: keep R below both 0.01 A_hat xi e^(-lam0 xi) and W*/2 on region 1
    mask = profile.xi >= xi1 + delta1
    sig = params.sigma(profile.xi[mask])
    ratio = sig * np.exp(-lam0 * profile.xi[mask]) / np.maximum(profile.W[mask], 1e-300)
    sig_slope = 4.0 if mode == "local" else 1.0 / lam0
    ratio_cap = max(float(np.max(ratio)), 1.05 * sig_slope / max(fit.A_hat, 1e-300))
    params.eps1 = min(0.01 * fit.A_hat, 0.5 / ratio_cap)

    x1 = xi1 + delta1
    params.eps2 = params.eps1 * float(params.sigma(x1)) * np.exp(-(lam0 + lam1) * x1)
    x2 = xi2 + delta2
    params.eps3 = params.eps2 * np.exp(lam1 * x2) / np.sin(delta4 * delta2)
    x3 = xi2 - delta3
    params.eps4 = params.eps3 * np.sin(delta4 * delta3) / np.exp(lam2 * x3)

    bad = params.violations()
    if bad:
        raise RejectedParamsError("auto construction failed: " + "; ".join(bad))
    return params


@dataclass
class VerificationReport:
    """Outcome of the pointwise super-solution check."""

    passed: bool
    delta0: float
    piece_max_residual: dict
    corner_checks: dict
    checklist: dict
    plateau_M: float
    delta0_max: float
    tolerance: float = RESIDUAL_SLACK


class _ExtendedWave:
    """Profile values extended by the fitted tail asymptotics on both sides."""

    def __init__(self, profile: WaveProfile, lam0: float, mu: float):
        self.xi_lo = float(profile.xi[0])
        self.xi_hi = float(profile.xi[-1])
        self.spline = CubicSpline(profile.xi, profile.W)
        fit = tail_fit(profile, pin_rate=lam0)
        self.A, self.B, self.lam0 = fit.A_hat, fit.B_hat, lam0
        end_model = (self.A * self.xi_hi + self.B) * np.exp(-lam0 * self.xi_hi)
        self.right_scale = float(profile.W[-1]) / end_model
        self.mu = mu
        self.left_dev = max(1.0 - float(profile.W[0]), 1e-300)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.empty_like(xi)
        left = xi < self.xi_lo
        right = xi > self.xi_hi
        mid = ~(left | right)
        out[mid] = self.spline(xi[mid])
        out[left] = 1.0 - self.left_dev * np.exp(self.mu * (xi[left] - self.xi_lo))
        out[right] = (
            self.right_scale
            * (self.A * xi[right] + self.B)
            * np.exp(-self.lam0 * xi[right])
        )
        return out


def _plateau_onset(wave: _ExtendedWave, params: SupersolParams) -> float:
    """Largest xi with W* - R >= 1 (left of it Wbar is clipped to 1)."""

    def gap(xi):
        return params.eps4 * np.exp(params.lambda2 * xi) - (1.0 - wave(np.array([xi]))[0])

    lo = wave.xi_lo - 200.0
    hi = params.xi2 - params.delta3
    if gap(hi) >= 0.0:
        return hi
    if gap(lo) <= 0.0:
        raise ConfigurationError("no plateau: left correction never overtakes 1 - W*")
    return float(brentq(gap, lo, hi, xtol=1e-12))


def _local_residual_curve(xi, wave, bump, family, s, delta0, c):
    """N0[Wbar] with W* derivatives eliminated via its own equation."""
    W = wave(xi)
    R = bump.value(xi) if bump is not None else np.zeros_like(xi)
    Wbar = np.minimum(W - R, 1.0)
    clipped = (W - R) >= 1.0
    if bump is not None:
        Rp = bump.deriv(xi, 1)
        Rpp = bump.deriv(xi, 2)
    else:
        Rp = Rpp = np.zeros_like(xi)
    f_up = reaction(family, s + delta0)
    f_at = reaction(family, s)
    eta = -Rpp - c * Rp + f_up(np.clip(Wbar, 0.0, 1.0)) - f_at(np.clip(W, 0.0, 1.0))
    eta[clipped] = float(f_up(np.array([1.0]))[0])  # Wbar == 1: N0[1] = f(1) = 0
    return eta, Wbar


def _piece_grids(params: SupersolParams, lo: float, hi: float, grid: Grid1D | None, min_pts: int):
    j3, j2, j1 = params.junctions()
    edges = [lo, j3, params.xi2, j2, j1, hi]
    pieces = {
        "left-tail": (edges[0], edges[1]),
        "sine": (edges[1], edges[3]),
        "bridge": (edges[3], edges[4]),
        "far-tail": (edges[4], edges[5]),
    }
    out = {}
    for name, (a, b) in pieces.items():
        if grid is None:
            n = max(min_pts, int((b - a) / 0.005))
            pts = np.linspace(a, b, n)
        else:
            pts = grid.points()
            pts = pts[(pts >= a) & (pts <= b)]
            if len(pts) < min_pts:
                raise ConfigurationError(
                    f"grid resolves piece {name!r} by {len(pts)} points; need >= {min_pts}"
                )
        # keep junction evaluations one-sided
        shrink = 1e-9
        pts = np.clip(pts, a + shrink, b - shrink)
        out[name] = pts
    return out


def verify(
    profile: WaveProfile,
    bump: PiecewiseBump | None,
    family: FamilySpec,
    s: float,
    delta0: float,
    grid: Grid1D | None = None,
) -> VerificationReport:
    """Check N0[Wbar] <= 0 (to +1e-9) piecewise plus the corner conditions.

    W* second derivatives are never formed numerically: the profile equation
    substitutes them, so only the analytic correction is differentiated.
    In nonlocal mode the operator is evaluated in the solver's own lattice
    discretization (trapezoid kernel weights, central first derivative and
    its stabilizer), where the profile cancels to its Newton residual.
    Returns the report including the largest admissible delta0 found by a
    doubling/halving search.
    """
    if profile.residual > 1e-6:
        raise ConfigurationError("profile residual not certified below 1e-6")
    params = bump.params if bump is not None else None
    mode = profile.mode
    spectral_c = profile.c

    if params is not None:
        corner_checks = {}
        for j in params.junctions():
            lslope, rslope = bump.one_sided_slopes(j)
            corner_checks[round(j, 9)] = (lslope, rslope, rslope >= lslope - 1e-12)
    else:
        corner_checks = {}

    if mode == "local":
        mu = dispersal.mu_root(dispersal.local(), f_eval(family, 1.0, s, 1), profile.c)
        wave = _ExtendedWave(profile, 1.0 if params is None else params.lambda0, mu)
        if params is not None:
            plateau_M = _plateau_onset(wave, params)
            lo = plateau_M - 5.0
        else:
            plateau_M = wave.xi_lo
            lo = wave.xi_lo
        hi = wave.xi_hi + 5.0

        def residuals(d0):
            out = {}
            ok = True
            wbar_min = np.inf
            if params is None:
                pts = np.linspace(lo, hi, 4000)
                eta, wbar = _local_residual_curve(
                    pts, wave, None, family, s, d0, spectral_c
                )
                out["whole-line"] = float(np.max(eta))
                ok = out["whole-line"] <= RESIDUAL_SLACK
                wbar_min = float(np.min(wbar))
            else:
                for name, pts in _piece_grids(params, lo, hi, grid, 100).items():
                    eta, wbar = _local_residual_curve(
                        pts, wave, bump, family, s, d0, spectral_c
                    )
                    out[name] = float(np.max(eta))
                    ok = ok and out[name] <= RESIDUAL_SLACK
                    wbar_min = min(wbar_min, float(np.min(wbar)))
            return out, ok and wbar_min >= -1e-12, wbar_min

    else:
        if bump is None:
            raise ConfigurationError("nonlocal verification needs an explicit bump")
        if profile.kernel is None or profile.dx is None:
            raise ConfigurationError("nonlocal profile lacks its kernel or lattice")
        kernel = profile.kernel
        dx = profile.dx
        mu = dispersal.mu_root(kernel, f_eval(family, 1.0, s, 1), profile.c)
        wave = _ExtendedWave(profile, params.lambda0, mu)
        plateau_M = _plateau_onset(wave, params)
        _, wts = dispersal.discrete_weights(kernel, dx)
        m = (len(wts) - 1) // 2
        eps4_stab = 0.05
        xi_nodes = profile.xi
        n = len(xi_nodes)
        if grid is not None:
            gp = grid.points()
            if len(gp) != n or abs(gp[0] - xi_nodes[0]) > 1e-9 or abs(grid.dx - dx) > 1e-12:
                raise ConfigurationError(
                    "nonlocal verification runs on the profile's own lattice"
                )
        xi_pad = np.concatenate(
            (
                xi_nodes[0] + dx * np.arange(-m, 0),
                xi_nodes,
                xi_nodes[-1] + dx * np.arange(1, m + 1),
            )
        )
        j3, j2, j1 = params.junctions()
        piece_of = np.full(n, "", dtype=object)
        piece_of[xi_nodes < j3] = "left-tail"
        piece_of[(xi_nodes >= j3) & (xi_nodes < j2)] = "sine"
        piece_of[(xi_nodes >= j2) & (xi_nodes < j1)] = "bridge"
        piece_of[xi_nodes >= j1] = "far-tail"
        for name in ("left-tail", "sine", "bridge", "far-tail"):
            count = int(np.sum(piece_of == name))
            if count < 20:
                raise ConfigurationError(
                    f"lattice resolves piece {name!r} by {count} points; need >= 20"
                )

        def residuals(d0):
            Wext = wave(xi_pad)
            Wext[m : m + n] = profile.W  # exact nodes, spline only off-lattice
            Wbar = np.minimum(Wext - bump.value(xi_pad), 1.0)
            conv = np.convolve(Wbar, wts, mode="valid")
            d1 = (Wbar[m + 1 : m + 1 + n] - Wbar[m - 1 : m - 1 + n]) / (2.0 * dx)
            d4 = (
                Wbar[m - 2 : m - 2 + n]
                - 4.0 * Wbar[m - 1 : m - 1 + n]
                + 6.0 * Wbar[m : m + n]
                - 4.0 * Wbar[m + 1 : m + 1 + n]
                + Wbar[m + 2 : m + 2 + n]
            )
            core = Wbar[m : m + n]
            f_up = reaction(family, s + d0)
            eta = conv - core + spectral_c * d1 + f_up(np.clip(core, 0.0, 1.0)) - eps4_stab * d4
            out = {}
            ok = True
            for name in ("left-tail", "sine", "bridge", "far-tail"):
                sel = piece_of == name
                out[name] = float(np.max(eta[sel]))
                ok = ok and out[name] <= RESIDUAL_SLACK + profile.residual
            return out, ok and float(np.min(core)) >= -1e-12, float(np.min(core))

    piece_res, ok_now, _ = residuals(delta0)
    checklist = {
        "params": params is None or not params.violations(),
        "continuity": params is None
        or max(bump.junction_gaps().values())
        <= 1e-12 * max(1.0, abs(params.eps3)),
        "corners": all(flag for _, _, flag in corner_checks.values()) if corner_checks else True,
        "wbar_nonnegative": ok_now or residuals(delta0)[2] >= -1e-12,
    }
    passed = ok_now and all(checklist.values())

    # largest admissible increment by doubling/halving
    d = max(delta0, 1e-12)
    if residuals(d)[1]:
        while d < 1.0:
            if not residuals(2.0 * d)[1]:
                break
            d *= 2.0
        lo_d, hi_d = d, 2.0 * d
    else:
        while d > 1e-14 and not residuals(d)[1]:
            d *= 0.5
        lo_d, hi_d = d, 2.0 * d
        if d <= 1e-14:
            lo_d = 0.0
    if lo_d > 0.0:
        for _ in range(30):
            mid = 0.5 * (lo_d + hi_d)
            if residuals(mid)[1]:
                lo_d = mid
            else:
                hi_d = mid
    delta0_max = lo_d

    return VerificationReport(
        passed=passed,
        delta0=delta0,
        piece_max_residual=piece_res,
        corner_checks=corner_checks,
        checklist=checklist,
        plateau_M=-plateau_M,
        delta0_max=delta0_max,
    )


def step1_kernel_bound(
    kernel, lambda0: float, xi1: float, xi_span: tuple[float, float], n_pts: int = 64
) -> tuple[float, np.ndarray, np.ndarray]:
    """Far-tail convolution margin of the nonlocal construction.

    Computes I(xi) = integral J(y) [sigma(xi-y) - sigma(xi) + y sigma'(xi)]
    e^(lambda0 y) dy on a xi grid and the estimated constant
    K4 = min I(xi) e^(lambda0 (xi - xi1)/2) > 0. The first-moment identity
    c0* = integral y J(y) e^(lambda0 y) dy makes the linear parts of sigma
    cancel exactly, leaving a positive convex-weight integral.
    """
    L = kernel.L
    nodes, weights = np.polynomial.legendre.leggauss(200)
    y = 0.5 * L * (nodes + 1.0) - L + 0.5 * L * (nodes + 1.0) * 0.0
    y = L * nodes  # [-L, L]
    wq = L * weights
    Jy = kernel_density(kernel, y)

    def sigma(t):
        return (np.exp(-0.5 * lambda0 * (t - xi1)) - 1.0 + lambda0 * (t - xi1)) / lambda0**2

    def sigma_d1(t):
        return (1.0 - 0.5 * np.exp(-0.5 * lambda0 * (t - xi1))) / lambda0

    xis = np.linspace(xi_span[0], xi_span[1], n_pts)
    I = np.array(
        [
            float(
                np.sum(
                    wq
                    * Jy
                    * (sigma(x - y) - sigma(x) + y * sigma_d1(x))
                    * np.exp(lambda0 * y)
                )
            )
            for x in xis
        ]
    )
    envelope = np.exp(-0.5 * lambda0 * (xis - xi1))
    K4 = float(np.min(I / envelope))
    return K4, xis, I
