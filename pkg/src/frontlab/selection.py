"""Parameter-to-speed maps and the linear/nonlinear selection threshold.

The threshold s* separates parameters whose minimal wave travels at the
linear spreading speed (pulled regime) from those that outrun it (pushed
regime). Because the minimal speed leaves the linear value quadratically in
s - s*, a speed-excess test cannot localize s* sharply; instead the
bisection predicate tests the wave at the linear speed itself: the sign of
the tail prefactor A in W ~ (A xi + B) e^(-lambda0 xi), fitted with the rate
pinned to lambda0, flips exactly at the threshold.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dispersal import KernelSpec, linear_speed
from .errors import AssumptionViolationError, FrontLabError, UnclassifiedDecayError
from .families import FamilySpec
from .waves import (
    DecayFit,
    fit_decay,
    minimal_wave_local,
    minimal_wave_nonlocal,
    solve_wave_local,
    solve_wave_nonlocal,
    tail_fit,
)


@dataclass(frozen=True)
class CurvePoint:
    s: float
    c_star: float
    front_class: str
    fit: DecayFit
    flagged: bool = False  # cross-validation mismatch (nonlocal only)


@dataclass
class ThresholdResult:
    s_star: float
    bracket: tuple[float, float]  # final bisection bracket
    initial_bracket: tuple[float, float]
    eps_c: float
    tol_s: float
    c_lin: float
    transition_fit: DecayFit
    transition_class: str
    curve: list[CurvePoint]
    family: FamilySpec = None
    kernel: KernelSpec = None


@dataclass(frozen=True)
class CertificateReport:
    passed: bool
    s_star: float
    class_at_star: str
    class_below: str
    class_above: str
    probe_below: float
    probe_above: float
    clamped: bool
    notes: str = ""


def _minimal_wave(family, kernel, s, tol_c):
    if kernel.is_local:
        return minimal_wave_local(family, s, tol=tol_c)
    return minimal_wave_nonlocal(family, s, kernel, tol=max(tol_c, 1e-4))


def _linear_speed_wave(family, kernel, s):
    spectral = linear_speed(kernel, family.gamma0)
    if kernel.is_local:
        prof = solve_wave_local(family, s, spectral.c0_star)
    else:
        prof = solve_wave_nonlocal(family, s, spectral.c0_star, kernel)
    return spectral, prof


def selection_class(family: FamilySpec, kernel: KernelSpec, s: float) -> tuple[str, float]:
    """Classify the selection type at parameter s; returns (label, pinned m).

    The test object is the profile at the linear speed with its decay rate
    pinned to lambda0 (the exact double root there). The weight
    m = A xi_end / |B| of its linear tail prefactor is sharp across the
    threshold: m > 0.05 marks a pulled front, |m| <= 0.05 the transition
    band (prefactor at numerical zero), and m < -0.05 or outright
    nonexistence marks nonlinear selection (pushed). A speed-excess test
    cannot localize this switch because the minimal speed leaves the linear
    one only quadratically.
    """
    spectral, prof = _linear_speed_wave(family, kernel, s)
    if prof is None:
        return "Pushed", -np.inf
    fit = tail_fit(prof, pin_rate=spectral.lambda0)
    m = fit.A_hat * fit.window[1] / abs(fit.B_hat)
    if m > 0.05:
        return "Pulled", m
    if m >= -0.05:
        return "Transition", m
    return "Pushed", m


def _curve_point(family, kernel, s, tol_c, cross_validate=False, strict=True) -> CurvePoint:
    try:
        label, _m = selection_class(family, kernel, s)
        c_star, prof = _minimal_wave(family, kernel, s, tol_c)
        spectral = linear_speed(kernel, family.gamma0)
        try:
            fit, _klass = fit_decay(prof, spectral)
        except UnclassifiedDecayError:
            # marginally pushed regime: the minimal wave sits too close to
            # the linear speed for an unambiguous rate match; keep the raw
            # fit, the selection-level class already stands on its own
            fit = tail_fit(prof)
    except FrontLabError as exc:
        raise type(exc)(f"[s={s}] {exc}") from exc
    flagged = False
    if cross_validate and not kernel.is_local:
        flagged = _cauchy_mismatch(family, kernel, s, c_star)
    return CurvePoint(float(s), float(c_star), label, fit, flagged)


def _cauchy_mismatch(family, kernel, s, c_star) -> bool:
    from . import cauchy

    span = max(60.0, 160.0 * c_star) + 40.0
    dx = kernel.L / 10.0
    grid = cauchy.Grid1D(0.0, dx, int(span / dx) + 1)
    dt = 0.9 * cauchy._nonlocal_cfl(family, s, family.gamma0) / 8.0
    _, track = cauchy.evolve(family, s, kernel, cauchy.step_datum(grid), T=160.0, dt=dt)
    est = cauchy.estimate_speed(track, (100.0, 160.0))
    return abs(est.c_hat - c_star) > 0.03 * c_star


def speed_curve(
    family: FamilySpec,
    kernel: KernelSpec,
    s_list,
    tol_c: float = 1e-6,
    threads: int = 1,
    cross_validate: bool = False,
) -> list[CurvePoint]:
    """Minimal speed and front class per parameter value (sorted input)."""
    s_list = list(s_list)
    if s_list != sorted(s_list):
        raise AssumptionViolationError("s_list must be sorted ascending")
    if not s_list:
        return []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(
                pool.map(
                    lambda s: _curve_point(family, kernel, s, tol_c, cross_validate),
                    s_list,
                )
            )
    return [_curve_point(family, kernel, s, tol_c, cross_validate) for s in s_list]


def linear_selection_holds(family: FamilySpec, kernel: KernelSpec, s: float) -> bool:
    """True iff the minimal wave at parameter s travels at the linear speed.

    Tested on the wave at the linear speed itself: existence plus a
    nonnegative pinned-rate tail prefactor (the sign flips exactly at the
    selection threshold).
    """
    spectral, prof = _linear_speed_wave(family, kernel, s)
    if prof is None:
        return False
    return tail_fit(prof, pin_rate=spectral.lambda0).A_hat >= 0.0


def find_threshold(
    family: FamilySpec,
    kernel: KernelSpec,
    s_lo: float,
    s_hi: float,
    tol_s: float = 0.02,
    eps_c: float = 5e-3,
) -> ThresholdResult:
    """Bisection for the selection threshold s* in [s_lo, s_hi].

    The user bracket must have linear selection at s_lo and a minimal speed
    exceeding the linear speed by more than eps_c at s_hi; violations raise
    AssumptionViolationError. The returned result carries the decay fit of
    the minimal wave at s*, plus a small speed/class curve sampled at the
    bisection probes.
    """
    if tol_s <= 0 or s_hi <= s_lo:
        raise AssumptionViolationError("need s_lo < s_hi and tol_s > 0")
    spectral = linear_speed(kernel, family.gamma0)
    c_lin = spectral.c0_star

    if not linear_selection_holds(family, kernel, s_lo):
        raise AssumptionViolationError(
            f"linear selection fails at s_lo={s_lo}: bracket does not contain the "
            "threshold (low-end assumption violated)"
        )
    c_hi, _ = _minimal_wave(family, kernel, s_hi, tol_c=min(tol_s, 1e-4))
    if c_hi <= c_lin + eps_c:
        raise AssumptionViolationError(
            f"minimal speed {c_hi:.6f} at s_hi={s_hi} does not exceed the linear "
            f"speed {c_lin:.6f} by eps_c={eps_c}: high-end assumption violated"
        )

    lo, hi = float(s_lo), float(s_hi)
    probes: list[float] = []
    while hi - lo > tol_s:
        mid = 0.5 * (lo + hi)
        probes.append(mid)
        if linear_selection_holds(family, kernel, mid):
            lo = mid
        else:
            hi = mid
    s_star = 0.5 * (lo + hi)

    label_star, _m = selection_class(family, kernel, s_star)
    _c_star, prof = _minimal_wave(family, kernel, s_star, tol_c=1e-6)
    try:
        fit, _klass = fit_decay(prof, spectral)
    except UnclassifiedDecayError:
        fit = tail_fit(prof)

    curve_pts = sorted(set([s_lo, s_hi] + probes))
    curve = [_curve_point(family, kernel, s, 1e-6, strict=False) for s in curve_pts]

    return ThresholdResult(
        s_star=float(s_star),
        bracket=(lo, hi),
        initial_bracket=(float(s_lo), float(s_hi)),
        eps_c=eps_c,
        tol_s=tol_s,
        c_lin=float(c_lin),
        transition_fit=fit,
        transition_class=label_star,
        curve=curve,
        family=family,
        kernel=kernel,
    )


def transition_certificate(result: ThresholdResult) -> CertificateReport:
    """Probe s* and s* +- 5 tol_s: pass iff Pulled / Transition / Pushed."""
    if result.transition_fit is None:
        raise AssumptionViolationError("threshold result carries no transition fit")
    family, kernel = result.family, result.kernel
    offset = 5.0 * result.tol_s
    lo_probe = result.s_star - offset
    hi_probe = result.s_star + offset
    clamped = False
    notes = []
    if lo_probe < result.initial_bracket[0]:
        lo_probe = result.initial_bracket[0]
        clamped = True
        notes.append("low probe clamped to bracket start")
    if hi_probe > result.initial_bracket[1]:
        hi_probe = result.initial_bracket[1]
        clamped = True
        notes.append("high probe clamped to bracket end")

    below = _curve_point(family, kernel, lo_probe, 1e-6)
    above = _curve_point(family, kernel, hi_probe, 1e-6)
    passed = (
        result.transition_class == "Transition"
        and below.front_class == "Pulled"
        and above.front_class == "Pushed"
    )
    return CertificateReport(
        passed=passed,
        s_star=result.s_star,
        class_at_star=result.transition_class,
        class_below=below.front_class,
        class_above=above.front_class,
        probe_below=lo_probe,
        probe_above=hi_probe,
        clamped=clamped,
        notes="; ".join(notes),
    )
