"""Traveling-wave profile solvers, minimal-speed search, and tail fitting.

Local profiles solve W'' + c W' + f(W; s) = 0 by phase-plane shooting from
the unstable manifold of (1, 0); nonlocal profiles solve
J * W - W + c W' + f(W; q) = 0 by damped Newton on a uniform grid with the
translation pinned at W(0) = 1/2. Tail decay is fitted in two stages (rate,
then polynomial prefactor) and classified against the spectral rates
lambda0 and lambda+-(c).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from . import dispersal
from .dispersal import KernelSpec, SpectralData, linear_speed
from .errors import (
    ConfigurationError,
    DomainError,
    FamilyMisspecificationError,
    InconclusiveError,
    UnclassifiedDecayError,
)
from .families import FamilySpec, f_eval, reaction

W_FLOOR = 1e-9  # right-tail depth at which shooting terminates
TAIL_TOP = 1e-2  # nonlinear-contamination ceiling for decay fits


@dataclass
class WaveProfile:
    """Discretized monotone front W on a uniform xi grid, W(0) = pin level.

    ``dW`` carries derivative samples where the solver provides them (local
    shooting). ``residual`` is the sup-norm residual of the profile equation
    in the solver's own discretization.
    """

    c: float
    xi: np.ndarray
    W: np.ndarray
    mode: str
    family: FamilySpec
    s: float
    kernel: KernelSpec | None = None
    dW: np.ndarray | None = None
    residual: float = np.nan
    iterations: int = 0
    dx: float | None = None

    def check_shape(self, tol_monotone: float = 1e-10) -> list[str]:
        problems = []
        if not np.all(np.diff(self.W) < tol_monotone):
            problems.append("profile not strictly decreasing")
        if self.W[0] < 1.0 - 1e-4:
            problems.append(f"left value {self.W[0]} below 1 - 1e-4")
        if self.W[-1] > 1e-6:
            problems.append(f"right value {self.W[-1]} above 1e-6")
        return problems


@dataclass(frozen=True)
class DecayFit:
    """Two-stage tail fit W ~ (A xi + B) e^(-lambda xi) on the deep tail."""

    lambda_hat: float
    A_hat: float
    B_hat: float
    residual: float
    window: tuple[float, float]
    a_stderr: float = np.nan


@dataclass(frozen=True)
class FrontClass:
    """Front classification with the evidence it was derived from."""

    label: str  # Pulled | Transition | Pushed | Supercritical
    evidence: dict = field(default_factory=dict)


def _local_mu(family: FamilySpec, s: float, c: float) -> float:
    f1 = f_eval(family, 1.0, s, 1)
    if f1 >= 0:
        raise DomainError("family is not monostable: f'(1; s) >= 0")
    return dispersal.mu_root(dispersal.local(), f1, c)


def _crossing(xi, W, level):
    """Location of the downward crossing of the level, cubic-accurate."""
    k = int(np.nonzero(W < level)[0][0])
    lo = max(k - 2, 0)
    hi = min(k + 2, len(xi))
    coeffs = np.polyfit(xi[lo:hi], W[lo:hi] - level, min(3, hi - lo - 1))
    roots = np.roots(coeffs)
    roots = roots[np.isreal(roots)].real
    roots = roots[(roots >= xi[k - 1] - 1e-12) & (roots <= xi[k] + 1e-12)]
    if len(roots) == 0:
        return float(np.interp(level, [W[k], W[k - 1]], [xi[k], xi[k - 1]]))
    return float(roots[0])


def solve_wave_local(
    family: FamilySpec,
    s: float,
    c: float,
    dxi: float = 0.01,
    rtol: float = 1e-11,
    atol: float = 1e-14,
    offset: float = 1e-8,
    floor: float = W_FLOOR,
) -> WaveProfile | None:
    """Shoot for the heteroclinic profile at speed c.

    Returns the profile when the trajectory lands in the stable cone at the
    tail floor, None when it oscillates below zero, its slope turns
    nonnegative, or it reaches the floor with a slope outside the cone (no
    wave at this speed). Raises InconclusiveError when the integration span
    cap is reached without a verdict.
    """
    gamma0 = family.gamma0
    c_lin = 2.0 * np.sqrt(gamma0)
    if c < c_lin - 1e-9:
        raise DomainError(f"speed {c} below the linear bound {c_lin}")
    c = max(c, c_lin)
    mu = _local_mu(family, s, c)
    disc = np.sqrt(max(c * c - 4.0 * gamma0, 0.0))
    lam_plus = (c + disc) / 2.0
    lam_minus = (c - disc) / 2.0

    f = reaction(family, s)

    def rhs(_xi, y):
        return (y[1], -c * y[1] - f(y[0]))

    def ev_floor(_xi, y):
        return y[0] - floor

    def ev_negative(_xi, y):
        return y[0] + 1e-12

    def ev_slope(_xi, y):
        return y[1]

    ev_floor.terminal = True
    ev_floor.direction = -1
    ev_negative.terminal = True
    ev_negative.direction = -1
    ev_slope.terminal = True
    ev_slope.direction = 1

    cap = 40.0 / mu + 60.0 / max(lam_minus, 0.02) + 50.0
    sol = solve_ivp(
        rhs,
        (0.0, cap),
        [1.0 - offset, -offset * mu],
        method="RK45",
        events=(ev_floor, ev_negative, ev_slope),
        rtol=rtol,
        atol=atol,
        dense_output=True,
    )
    if len(sol.t_events[1]) or len(sol.t_events[2]):
        return None
    if not len(sol.t_events[0]):
        raise InconclusiveError(
            f"no verdict within xi-span {cap}; refine the speed or enlarge the cap"
        )
    xi_end = float(sol.t_events[0][0])
    w_end, v_end = sol.y_events[0][0]
    # a genuine connection lands with V/W in [-lambda+, -lambda-]; a
    # transversal crossing leaves the stable cone before the floor
    if v_end >= 0 or abs(v_end) > 1.3 * lam_plus * max(w_end, floor):
        return None

    n = int(np.floor(xi_end / dxi)) + 1
    xi = np.linspace(0.0, dxi * (n - 1), n)
    if xi[-1] < xi_end:
        xi = np.append(xi, xi_end)
    W, V = sol.sol(xi)
    # pin the translation: W(0) = 1/2
    xi = xi - _crossing(xi, W, 0.5)

    res = _local_residual(xi, W, V, c, f)
    return WaveProfile(
        c=c, xi=xi, W=W, mode="local", family=family, s=s,
        kernel=None, dW=V, residual=res, iterations=sol.nfev, dx=None,
    )


def _local_residual(xi, W, V, c, f):
    """Sup-norm ODE residual from fourth-order differences of the samples."""
    h = xi[1] - xi[0]
    if not np.allclose(np.diff(xi), h, rtol=0, atol=1e-9):
        core = slice(2, -3)  # ignore the appended non-uniform last point
    else:
        core = slice(2, -2)
    idx = np.arange(len(xi))[core]
    d1 = lambda a: (-a[idx + 2] + 8 * a[idx + 1] - 8 * a[idx - 1] + a[idx - 2]) / (12 * h)
    r1 = np.max(np.abs(d1(W) - V[idx]))
    r2 = np.max(np.abs(d1(V) + c * V[idx] + f(W[idx])))
    return float(max(r1, r2))


def minimal_wave_local(
    family: FamilySpec, s: float, tol: float = 1e-6
) -> tuple[float, WaveProfile]:
    """Minimal speed and the wave at the admissible end of the final bracket.

    Bisection probes use a deep tail floor (1e-11): near the minimal speed a
    failing trajectory shadows the wave down to a depth that shrinks like a
    power of the speed deficit, and the standard floor would accept it.
    """
    if tol < 1e-8:
        raise ConfigurationError("speed tolerance below 1e-8 is not supported")

    def probe(c):
        return solve_wave_local(family, s, c, floor=1e-11, atol=1e-15)

    lo = 2.0 * np.sqrt(family.gamma0)
    if probe(lo) is not None:
        return lo, solve_wave_local(family, s, lo)
    hi = lo
    cap = 10.0 * lo
    admissible = None
    while admissible is None:
        hi *= 2.0
        if hi > cap:
            raise FamilyMisspecificationError(
                f"no admissible wave below {cap}; family likely not monostable"
            )
        admissible = probe(hi)
    lo_end = lo
    while hi - lo_end > tol:
        mid = 0.5 * (lo_end + hi)
        if probe(mid) is None:
            lo_end = mid
        else:
            hi = mid
    return 0.5 * (lo_end + hi), solve_wave_local(family, s, hi)


def minimal_speed_local(family: FamilySpec, s: float, tol: float = 1e-6) -> float:
    return minimal_wave_local(family, s, tol)[0]


def solve_wave_nonlocal(
    family: FamilySpec,
    q: float,
    c: float,
    kernel: KernelSpec,
    dx: float = 0.02,
    tol: float = 1e-10,
    max_iter: int = 80,
    pin_level: float = 0.5,
    domain: tuple[float, float] | None = None,
) -> WaveProfile | None:
    """Damped Newton solve of the discretized nonlocal profile equation.

    The first derivative is centrally differenced (the discrete dispersal
    relation then brackets the continuum one, so solves at the exact linear
    speed stay well-posed); the kernel is applied with trapezoid weights; the
    closure is W = 1 left of the domain and tail-rate extrapolation on the
    right; translation is pinned by a W(0) = pin_level constraint row.
    Returns None on Newton stagnation or a non-monotone converged profile.
    """
    if kernel.is_local:
        raise ConfigurationError("use solve_wave_local for the Laplacian")
    spectral = linear_speed(kernel, family.gamma0)
    if c < spectral.c0_star - 1e-9:
        raise DomainError(f"speed {c} below the linear speed {spectral.c0_star}")
    c = max(c, spectral.c0_star)
    f1 = f_eval(family, 1.0, q, 1)
    if f1 >= 0:
        raise DomainError("family is not monostable: f'(1; q) >= 0")
    mu = dispersal.mu_root(kernel, f1, c)
    if c > spectral.c0_star + 1e-9:
        lam_right = dispersal.lambda_roots(kernel, family.gamma0, c)[0]
    else:
        lam_right = spectral.lambda0

    if domain is None:
        # left depth capped at 28/mu: beyond that 1 - W falls under float64
        # resolution near 1 and the plateau rows degenerate to rounding
        # noise; the balance of the required length goes to the right tail
        x_left = 28.0 / mu + 2.0 * kernel.L
        x_right = 40.0 / lam_right + 12.0 / mu + 2.0 * kernel.L
    else:
        x_left, x_right = domain
        if x_left + x_right < 40.0 / lam_right + 40.0 / mu:
            raise ConfigurationError("domain shorter than 40/lambda0 + 40/mu")
    n_left = int(np.ceil(x_left / dx))
    n_right = int(np.ceil(x_right / dx))
    n = n_left + n_right + 1
    xi = dx * (np.arange(n) - n_left)
    i0 = n_left

    _, wts = dispersal.discrete_weights(kernel, dx)
    m = (len(wts) - 1) // 2
    fval = reaction(family, q, 0)
    fprime = reaction(family, q, 1)

    # two-sided seed: the logistic with the right-tail rate lambda0 ahead of
    # the front, the left-tail rate mu behind it (a single-rate seed misfits
    # one tail badly enough to steer Newton into a spiked spurious branch)
    W = np.where(
        xi >= 0.0,
        1.0 / (1.0 + np.exp(np.clip(spectral.lambda0 * xi, -500.0, 500.0))),
        1.0 - 0.5 * np.exp(np.clip(mu * xi, -500.0, 500.0)),
    )

    def pad(w):
        tail = w[-1]
        prev = w[-2]
        if tail > 0 and prev > tail:
            lam_hat = min(np.log(prev / tail) / dx, 200.0)
        else:
            lam_hat = lam_right
        right = tail * np.exp(-lam_hat * dx * np.arange(1, m + 1)) if tail > 0 else np.zeros(m)
        return np.concatenate((np.ones(m), w, right))

    # fourth-difference stabilizer: zero on constants, O((lam dx)^4) on the
    # physical tails, but O(16 eps4) on the staggered sector that pure
    # central differencing leaves near-decoupled; kept small so staggered
    # states cannot re-balance against the nonlinearity
    eps4 = 0.05

    def residual_vec(w):
        wp = pad(w)
        conv = np.convolve(wp, wts, mode="valid")
        d1 = (wp[m + 1 : m + 1 + n] - wp[m - 1 : m - 1 + n]) / (2.0 * dx)
        d4 = (
            wp[m - 2 : m - 2 + n]
            - 4.0 * wp[m - 1 : m - 1 + n]
            + 6.0 * wp[m : m + n]
            - 4.0 * wp[m + 1 : m + 1 + n]
            + wp[m + 2 : m + 2 + n]
        )
        F = conv - w + c * d1 + fval(w) - eps4 * d4
        F[i0] = w[i0] - pin_level
        return F

    offsets = list(range(-m, m + 1))
    base_bands = {d: wts[m - d] for d in offsets}
    d4_stencil = {-2: -eps4, -1: 4.0 * eps4, 0: -6.0 * eps4, 1: 4.0 * eps4, 2: -eps4}

    def jacobian(w):
        diag_main = base_bands.get(0, 0.0) + d4_stencil[0] - 1.0 + fprime(w)
        mats = []
        for d in offsets:
            if d == 0:
                continue
            v = np.full(n - abs(d), base_bands[d])
            if d == 1:
                v = v + c / (2.0 * dx)
            if d == -1:
                v = v - c / (2.0 * dx)
            if d in d4_stencil:
                v = v + d4_stencil[d]
            mats.append((d, v))
        A = sp.diags([diag_main] + [v for _, v in mats], [0] + [d for d, _ in mats], format="lil")
        A.rows[i0] = [i0]
        A.data[i0] = [1.0]
        return A.tocsc()

    F = residual_vec(W)
    best = np.max(np.abs(F))
    history = [best]
    iters = 0
    while best > tol and iters < max_iter:
        iters += 1
        delta = spla.splu(jacobian(W)).solve(-F)
        alpha = 1.0
        while alpha > 1e-6:
            trial = W + alpha * delta
            Ft = residual_vec(trial)
            if np.max(np.abs(Ft)) < best:
                W, F = trial, Ft
                best = np.max(np.abs(F))
                break
            alpha *= 0.5
        else:
            return None  # no descent direction: stagnation
        history.append(best)
        if len(history) > 20 and history[-1] > 1e-2 * history[-21]:
            return None  # stagnation over 20 damped steps
    if best > tol:
        return None

    if not np.all(np.diff(W) < 1e-10) or np.min(W) < -1e-10:
        return None  # converged but inadmissible

    # report profiles in the canonical W(0) = 1/2 frame regardless of pin
    xi = xi - _crossing(xi, W, 0.5)

    return WaveProfile(
        c=c, xi=xi, W=W, mode="nonlocal", family=family, s=q,
        kernel=kernel, dW=None, residual=float(best), iterations=iters, dx=dx,
    )


def minimal_wave_nonlocal(
    family: FamilySpec,
    q: float,
    kernel: KernelSpec,
    tol: float = 1e-4,
    dx: float = 0.02,
) -> tuple[float, WaveProfile]:
    """Newton-admissibility bisection for the nonlocal minimal speed."""
    spectral = linear_speed(kernel, family.gamma0)
    lo = spectral.c0_star
    prof = solve_wave_nonlocal(family, q, lo, kernel, dx=dx)
    if prof is not None:
        return lo, prof
    hi = lo
    cap = 10.0 * lo
    while prof is None:
        hi *= 1.2
        if hi > cap:
            raise FamilyMisspecificationError(
                f"no admissible nonlocal wave below {cap}"
            )
        prof = solve_wave_nonlocal(family, q, hi, kernel, dx=dx)
    lo_end = lo
    while hi - lo_end > tol:
        mid = 0.5 * (lo_end + hi)
        trial = solve_wave_nonlocal(family, q, mid, kernel, dx=dx)
        if trial is None:
            lo_end = mid
        else:
            hi, prof = mid, trial
    return 0.5 * (lo_end + hi), prof


def _tail_window(profile: WaveProfile) -> np.ndarray:
    mask = (profile.W > W_FLOOR) & (profile.W < TAIL_TOP)
    idx = np.nonzero(mask)[0]
    if len(idx) < 50:
        raise ConfigurationError(
            f"tail window has {len(idx)} points; need >= 50 (extend the profile)"
        )
    return idx


def tail_fit(profile: WaveProfile, pin_rate: float | None = None) -> DecayFit:
    """Two-stage fit of the deep tail: rate, then prefactor (A, B).

    Stage one estimates the decay rate as the intercept of the local
    log-derivative of W regressed on [1, 1/xi, 1/xi^2, W]; the 1/xi terms
    absorb a polynomial prefactor and the W term the quadratic part of the
    nonlinearity. Stage two regresses W e^(lam xi) on xi for (A, B). Passing
    ``pin_rate`` skips stage one (used where the rate is known exactly, e.g.
    the double root at the linear speed).
    """
    idx = _tail_window(profile)
    xi = profile.xi[idx]
    w = profile.W[idx]
    if pin_rate is None:
        logw = np.log(w)
        h = xi[1] - xi[0]
        dlog = (logw[2:] - logw[:-2]) / (2.0 * h)
        y = -dlog
        x = 1.0 / xi[1:-1]
        A = np.vstack([np.ones_like(x), x, x * x, w[1:-1]]).T
        (lam_hat, *_rest), *_ = np.linalg.lstsq(A, y, rcond=None)
        lam_hat = float(lam_hat)
    else:
        lam_hat = float(pin_rate)

    z = w * np.exp(lam_hat * xi)
    tbar = xi.mean()
    sxx = float(np.sum((xi - tbar) ** 2))
    a_hat = float(np.sum((xi - tbar) * (z - z.mean())) / sxx)
    b_hat = float(z.mean() - a_hat * tbar)
    resid = z - (a_hat * xi + b_hat)
    sigma2 = float(np.sum(resid**2)) / max(len(xi) - 2, 1)
    a_stderr = float(np.sqrt(sigma2 / sxx))
    rel_resid = float(np.sqrt(np.mean(resid**2)) / max(np.max(np.abs(z)), 1e-300))

    return DecayFit(
        lambda_hat=lam_hat,
        A_hat=a_hat,
        B_hat=b_hat,
        residual=rel_resid,
        window=(float(xi[0]), float(xi[-1])),
        a_stderr=a_stderr,
    )


def fit_decay(
    profile: WaveProfile, spectral: SpectralData, c: float | None = None
) -> tuple[DecayFit, FrontClass]:
    """Fit (lambda, A, B) on the deep tail and classify the front.

    Classification compares the fitted rate with lambda0 (2% band) at the
    linear speed, splitting Pulled from Transition by the prefactor weight
    A xi_end versus B, and with lambda+-(c) (5% band) above the linear
    speed (Pushed at the fast rate, Supercritical at the slow one).
    """
    c = profile.c if c is None else c
    fit = tail_fit(profile)
    lam_hat, a_hat, b_hat, a_stderr = fit.lambda_hat, fit.A_hat, fit.B_hat, fit.a_stderr
    xi_end = fit.window[1]
    lam0 = spectral.lambda0
    evidence = {
        "lambda_hat": lam_hat,
        "lambda0": lam0,
        "a_term": a_hat * xi_end,
        "b_term": b_hat,
        "a_stderr": a_stderr,
        "xi_end": xi_end,
        "c": c,
        "c0_star": spectral.c0_star,
    }

    at_linear = c <= spectral.c0_star + 1e-9
    if at_linear:
        if abs(lam_hat - lam0) / lam0 > 0.02:
            raise UnclassifiedDecayError(
                f"rate {lam_hat:.6f} does not match lambda0={lam0:.6f} within 2% "
                "at the linear speed",
                lambda_hat=lam_hat,
                candidates={"lambda0": lam0},
            )
        if abs(a_hat) * xi_end <= 0.05 * abs(b_hat):
            return fit, FrontClass("Transition", evidence)
        if a_hat * xi_end > 10.0 * abs(b_hat) or (a_hat > 0 and a_hat > 5.0 * a_stderr):
            return fit, FrontClass("Pulled", evidence)
        raise UnclassifiedDecayError(
            "prefactor evidence ambiguous between Pulled and Transition",
            lambda_hat=lam_hat,
            candidates={"lambda0": lam0},
        )

    kernel = profile.kernel if profile.kernel is not None else dispersal.local()
    lam_minus, lam_plus = dispersal.lambda_roots(kernel, spectral.gamma0, c)
    evidence["lambda_minus"] = lam_minus
    evidence["lambda_plus"] = lam_plus
    d_plus = abs(lam_hat - lam_plus) / lam_plus
    d_minus = abs(lam_hat - lam_minus) / lam_minus
    if d_plus <= 0.05 and d_plus <= d_minus:
        return fit, FrontClass("Pushed", evidence)
    if d_minus <= 0.05:
        return fit, FrontClass("Supercritical", evidence)
    raise UnclassifiedDecayError(
        f"rate {lam_hat:.6f} matches neither lambda-={lam_minus:.6f} nor "
        f"lambda+={lam_plus:.6f} within 5%",
        lambda_hat=lam_hat,
        candidates={"lambda0": lam0, "lambda_minus": lam_minus, "lambda_plus": lam_plus},
    )


@dataclass(frozen=True)
class LeftTailFit:
    mu_hat: float
    residual: float
    window: tuple[float, float]


def fit_left_tail(profile: WaveProfile, top: float = 1e-2, floor: float = 1e-7) -> LeftTailFit:
    """Exponential rate of 1 - W toward the stable state (xi -> -infinity)."""
    u = 1.0 - profile.W
    mask = (u > floor) & (u < top)
    idx = np.nonzero(mask)[0]
    if len(idx) < 20:
        raise ConfigurationError("left tail window too short")
    xi = profile.xi[idx]
    lu = np.log(u[idx])
    coef = np.polyfit(xi, lu, 1)
    rate = float(coef[0])
    resid = float(np.sqrt(np.mean((np.polyval(coef, xi) - lu) ** 2)))
    return LeftTailFit(mu_hat=rate, residual=resid, window=(float(xi[0]), float(xi[-1])))
