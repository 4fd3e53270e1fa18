"""One-parameter monostable nonlinearity families f(w; s).

Two kinds are supported:

* ``HadelerRothe``: f(w; s) = w (1 - w) (1 + s w), the classical family whose
  minimal wave speed switches from linear to nonlinear selection as s grows.
* ``PolyAffine``: f(w; s) = sum_j (a[j][0] + a[j][1] s) w^j, polynomial in w
  and affine in the selection parameter s.

Both reduce internally to the PolyAffine coefficient table, so every
evaluation is an exact polynomial evaluation (no quadrature anywhere).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

_W_SLACK = 1e-8  # tolerance for w slightly outside [0, 1] from time stepping


@dataclass(frozen=True)
class FamilySpec:
    """Declared nonlinearity family.

    ``coeffs[j] = (a0, a1)`` encodes the w^j coefficient a0 + a1*s.
    ``gamma0`` is the declared linearization rate f'(0; s); it must be
    independent of s, which for PolyAffine means ``coeffs[1] == (gamma0, 0)``.
    """

    kind: str
    coeffs: tuple[tuple[float, float], ...] = field(default=())
    gamma0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("HadelerRothe", "PolyAffine"):
            raise ConfigurationError(f"unknown family kind {self.kind!r}")
        if self.kind == "HadelerRothe":
            # fixed algebraic form: f = w + (s-1) w^2 - s w^3, so gamma0 = 1
            object.__setattr__(self, "coeffs", ((0.0, 0.0), (1.0, 0.0), (-1.0, 1.0), (0.0, -1.0)))
            object.__setattr__(self, "gamma0", 1.0)
            return
        c = tuple((float(a), float(b)) for a, b in self.coeffs)
        object.__setattr__(self, "coeffs", c)
        if len(c) < 2:
            raise ConfigurationError("PolyAffine needs coefficients up to degree >= 1")
        if c[0] != (0.0, 0.0):
            raise ConfigurationError("f(0; s) = 0 requires a[0] == (0, 0)")
        if c[1][1] != 0.0:
            raise ConfigurationError("f'(0; s) must not depend on s: a[1][1] must be 0")
        if c[1][0] != self.gamma0:
            raise ConfigurationError(
                f"declared gamma0={self.gamma0} does not match a[1][0]={c[1][0]}"
            )
        if self.gamma0 <= 0:
            raise ConfigurationError("gamma0 must be positive")
        s0 = sum(a for a, _ in c)
        s1 = sum(b for _, b in c)
        if s0 != 0.0 or s1 != 0.0:
            raise ConfigurationError(
                "f(1; s) = 0 requires both coefficient columns to sum to zero"
            )


def hadeler_rothe() -> FamilySpec:
    """The cubic family w (1 - w) (1 + s w)."""
    return FamilySpec(kind="HadelerRothe")


def poly_affine(coeffs, gamma0: float) -> FamilySpec:
    return FamilySpec(kind="PolyAffine", coeffs=tuple(tuple(row) for row in coeffs), gamma0=gamma0)


def _coeff_vector(spec: FamilySpec, s: float) -> np.ndarray:
    rows = np.asarray(spec.coeffs, dtype=float)
    return rows[:, 0] + s * rows[:, 1]


def _poly_eval(c: np.ndarray, w, order: int):
    """Evaluate sum c_j w^j or its w-derivative of the given order (Horner)."""
    deg = len(c) - 1
    if order > 0:
        j = np.arange(len(c), dtype=float)
        for _ in range(order):
            c = c * j
            c = c[1:]
            j = np.arange(len(c), dtype=float)
        if len(c) == 0:
            return np.zeros_like(np.asarray(w, dtype=float))
        deg = len(c) - 1
    out = np.full_like(np.asarray(w, dtype=float), c[deg])
    for k in range(deg - 1, -1, -1):
        out = out * w + c[k]
    return out


def f_eval(spec: FamilySpec, w, s: float, order: int = 0):
    """f, f' or f'' in w at (w; s). Exact polynomial evaluation.

    Raises DomainError for w outside [0, 1] (small slack allowed) or for an
    unsupported derivative order.
    """
    if order not in (0, 1, 2):
        raise DomainError(f"unsupported derivative order {order}")
    if s < 0:
        raise DomainError("parameter s must be nonnegative")
    warr = np.asarray(w, dtype=float)
    if np.any(warr < -_W_SLACK) or np.any(warr > 1.0 + _W_SLACK):
        raise DomainError("state w outside [0, 1]")
    out = _poly_eval(_coeff_vector(spec, s), warr, order)
    return float(out) if np.isscalar(w) else out


def reaction(spec: FamilySpec, s: float, order: int = 0):
    """Unchecked vectorized evaluator for time steppers and wave solvers.

    The caller guarantees the state stays within the family's domain; no
    per-call range validation is done.
    """
    c = _coeff_vector(spec, s)
    return lambda w: _poly_eval(c, w, order)


def _kpp_grid(n_grid: int) -> np.ndarray:
    # union of a uniform and a geometric grid: violations of the linear bound
    # can concentrate arbitrarily close to w = 0 as the family leaves the
    # KPP regime, where a uniform grid alone underresolves them
    return np.union1d(np.linspace(0.0, 1.0, n_grid), np.geomspace(1e-9, 1.0, n_grid))


def kpp_holds(spec: FamilySpec, s: float, n_grid: int = 1000) -> bool:
    """True iff gamma0 * w >= f(w; s) on the sample grid, up to -1e-12 slack."""
    if n_grid < 100:
        raise ConfigurationError("n_grid must be >= 100")
    w = _kpp_grid(n_grid)
    return bool(np.all(spec.gamma0 * w - f_eval(spec, w, s, 0) >= -1e-12))


@dataclass
class AssumptionReport:
    """Outcome of the grid check of the monostability assumptions.

    ``violation_points`` holds (check, w, s) tuples; a pass flag is True
    exactly when no entry with that check tag exists.
    """

    a1_pass: bool
    a2_lipschitz_estimate: float
    a3_pass: bool
    kpp_pass: bool
    violation_points: list[tuple[str, float, float]]

    def consistent(self) -> bool:
        tags = {t for t, _, _ in self.violation_points}
        return (
            self.a1_pass == ("a1" not in tags)
            and self.a3_pass == ("a3" not in tags)
            and self.kpp_pass == ("kpp" not in tags)
        )


def verify_assumptions(
    spec: FamilySpec,
    s_range: tuple[float, float],
    w_grid: int = 1000,
    s_grid: int = 50,
) -> AssumptionReport:
    """Check the monostable-family assumptions on a sampling grid.

    Verified per sampled s: f(0)=f(1)=0, f>0 on (0,1), f'(0)=gamma0,
    f'(1)<0 (the monostable sign conditions); monotone increase of f and of
    f''(0; .) in s; and a finite-difference Lipschitz estimate of f, f', f''
    in s (the reported constant feeds the super-solution increment sizing).
    KPP is evaluated at the low end of the range.
    """
    if w_grid < 100 or s_grid < 2:
        raise ConfigurationError("grid counts too small")
    s_lo, s_hi = float(s_range[0]), float(s_range[1])
    if s_hi < s_lo:
        raise ConfigurationError("empty s range")
    degenerate = s_hi == s_lo
    ss = np.array([s_lo]) if degenerate else np.linspace(s_lo, s_hi, s_grid)
    ws = np.linspace(0.0, 1.0, w_grid)
    interior = ws[1:-1]
    bad: list[tuple[str, float, float]] = []

    for s in ss:
        fw = f_eval(spec, ws, s, 0)
        if abs(fw[0]) > 1e-14 or abs(fw[-1]) > 1e-14:
            bad.append(("a1", 0.0 if abs(fw[0]) > 1e-14 else 1.0, float(s)))
        inside = fw[1:-1]
        if np.any(inside <= 0.0):
            idx = int(np.argmin(inside))
            bad.append(("a1", float(interior[idx]), float(s)))
        if abs(f_eval(spec, 0.0, s, 1) - spec.gamma0) > 1e-12:
            bad.append(("a1", 0.0, float(s)))
        if f_eval(spec, 1.0, s, 1) >= 0.0:
            bad.append(("a1", 1.0, float(s)))

    lip = 0.0
    if not degenerate:
        for s0, s1 in zip(ss[:-1], ss[1:]):
            ds = s1 - s0
            for order in (0, 1, 2):
                d = np.abs(
                    f_eval(spec, ws, s1, order) - f_eval(spec, ws, s0, order)
                )
                lip = max(lip, float(np.max(d)) / ds)
            # (A3): strict growth in s on the interior, and of f''(0; .)
            df = f_eval(spec, interior, s1, 0) - f_eval(spec, interior, s0, 0)
            if np.any(df <= 0.0):
                idx = int(np.argmin(df))
                bad.append(("a3", float(interior[idx]), float(s1)))
            if f_eval(spec, 0.0, s1, 2) <= f_eval(spec, 0.0, s0, 2):
                bad.append(("a3", 0.0, float(s1)))
    else:
        # single-point range: Lipschitz/monotonicity checks are vacuous
        lip = 0.0

    if not kpp_holds(spec, s_lo, max(w_grid, 100)):
        w = _kpp_grid(max(w_grid, 100))
        gap = spec.gamma0 * w - f_eval(spec, w, s_lo, 0)
        bad.append(("kpp", float(w[int(np.argmin(gap))]), s_lo))

    tags = {t for t, _, _ in bad}
    return AssumptionReport(
        a1_pass="a1" not in tags,
        a2_lipschitz_estimate=lip,
        a3_pass="a3" not in tags,
        kpp_pass="kpp" not in tags,
        violation_points=bad,
    )
