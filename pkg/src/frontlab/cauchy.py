"""Explicit time integration of the two Cauchy problems with front tracking.

Local dispersal:    w_t = w_xx + f(w; s)
Nonlocal dispersal: w_t = J * w - w + f(w; q)

Both are stepped with explicit Euler under a CFL bound, second-order central
differences (local) or a trapezoid-weight discrete convolution (nonlocal),
homogeneous Neumann closure on the left and Dirichlet zero on the right.
The rightmost level crossing is recorded over time and a least-squares slope
over a late window estimates the spreading speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dispersal import KernelSpec, discrete_weights
from .errors import ConfigurationError, FrontAbsentError, InstabilityError
from .families import FamilySpec, f_eval, reaction


@dataclass(frozen=True)
class Grid1D:
    """Uniform spatial grid x0 + dx * [0, n)."""

    x0: float
    dx: float
    n: int

    def __post_init__(self):
        if self.n < 16:
            raise ConfigurationError("grid needs at least 16 points")
        if self.dx <= 0:
            raise ConfigurationError("grid spacing must be positive")

    def points(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)


@dataclass
class Field:
    """Per-node state w on a grid."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise ConfigurationError("field length does not match its grid")


@dataclass
class FrontTrack:
    """Level-crossing positions x_c(t) sampled during a run."""

    times: np.ndarray
    positions: np.ndarray
    level: float


@dataclass(frozen=True)
class SpeedEstimate:
    c_hat: float
    stderr: float
    window: tuple[float, float]


def step_datum(grid: Grid1D, plateau: float = 10.0, ramp: float = 1.0) -> Field:
    """Indicator of [x0, plateau] mollified over one ramp width (default 1)."""
    x = grid.points()
    w = np.zeros(grid.n)
    w[x <= plateau - ramp] = 1.0
    on_ramp = (x > plateau - ramp) & (x < plateau)
    w[on_ramp] = 0.5 * (1.0 + np.cos(np.pi * (x[on_ramp] - (plateau - ramp)) / ramp))
    return Field(grid, w)


def front_position(field: Field, level: float) -> float:
    """Rightmost downward crossing of the level, by linear interpolation."""
    if not 0.0 < level < 1.0:
        raise ConfigurationError("tracking level must lie in (0, 1)")
    v = field.values
    d = v - level
    crossings = np.nonzero((d[:-1] >= 0.0) & (d[1:] < 0.0))[0]
    if len(crossings) == 0:
        raise FrontAbsentError(f"field never crosses level {level} from above")
    i = int(crossings[-1])
    x = field.grid.points()
    frac = d[i] / (v[i] - v[i + 1])
    return float(x[i] + frac * field.grid.dx)


def _nonlocal_cfl(family: FamilySpec, s: float, gamma0: float) -> float:
    w = np.linspace(0.0, 1.0, 1001)
    fp_max = float(np.max(np.abs(f_eval(family, w, s, 1))))
    return 0.4 / (1.0 + gamma0 + fp_max)


def evolve(
    family: FamilySpec,
    s: float,
    kernel: KernelSpec,
    init: Field,
    T: float,
    dt: float,
    level: float = 0.5,
    record_interval: float = 0.5,
    boundary_guard: bool = True,
) -> tuple[Field, FrontTrack]:
    """Run the Cauchy problem to time T and track the front.

    Enforces the CFL bound (dt <= 0.4 dx^2 local; dt <= 0.4/(1+gamma0+max|f'|)
    nonlocal), keeps the right boundary at zero and aborts if the front comes
    within 5 kernel supports (or 20 dx) of it, and raises InstabilityError if
    the field leaves [-0.01, 1.01]. ``boundary_guard=False`` disables the
    right-boundary abort (equilibrium tests, where the Dirichlet closure
    itself forms a standing crossing).
    """
    grid = init.grid
    dx = grid.dx
    w = init.values.copy()
    if np.any(w < 0.0) or np.any(w > 1.0):
        raise ConfigurationError("initial datum must lie in [0, 1]")
    if T <= 0 or dt <= 0:
        raise ConfigurationError("T and dt must be positive")

    if kernel.is_local:
        if dt > 0.4 * dx * dx + 1e-15:
            raise ConfigurationError(
                f"CFL violation: dt={dt} exceeds 0.4*dx^2={0.4 * dx * dx}"
            )
        weights = None
        guard = 20 * dx
    else:
        cfl = _nonlocal_cfl(family, s, family.gamma0)
        if dt > cfl + 1e-15:
            raise ConfigurationError(f"CFL violation: dt={dt} exceeds {cfl}")
        _, weights = discrete_weights(kernel, dx)
        guard = max(5.0 * 2.0 * kernel.L, 20 * dx)

    f = reaction(family, s)
    n_steps = int(np.ceil(T / dt - 1e-12))
    dt_eff = T / n_steps
    record_every = max(1, int(round(record_interval / dt_eff)))
    x_right = grid.x0 + dx * (grid.n - 1)

    def try_front(values):
        # equilibria and sub-level data have no front; skip those samples
        try:
            return front_position(Field(grid, values), level)
        except FrontAbsentError:
            return None

    times, positions = [], []
    pos0 = try_front(w)
    if pos0 is not None:
        times.append(0.0)
        positions.append(pos0)
    inv_dx2 = 1.0 / (dx * dx)
    m = 0 if weights is None else (len(weights) - 1) // 2

    for step in range(1, n_steps + 1):
        if weights is None:
            lap = np.empty_like(w)
            lap[1:-1] = (w[2:] - 2.0 * w[1:-1] + w[:-2]) * inv_dx2
            lap[0] = 2.0 * (w[1] - w[0]) * inv_dx2  # mirror ghost (Neumann)
            lap[-1] = 0.0
            w = w + dt_eff * (lap + f(w))
        else:
            padded = np.concatenate((np.full(m, w[0]), w, np.zeros(m)))
            conv = np.convolve(padded, weights, mode="valid")
            w = w + dt_eff * (conv - w + f(w))
        w[-1] = 0.0

        if step % record_every == 0 or step == n_steps:
            lo, hi = float(w.min()), float(w.max())
            t_now = step * dt_eff
            if lo < -0.01 or hi > 1.01:
                raise InstabilityError(
                    f"field escaped [-0.01, 1.01] (range [{lo:.3g}, {hi:.3g}])",
                    time=t_now,
                )
            pos = try_front(w)
            if pos is not None:
                if boundary_guard and x_right - pos < guard:
                    raise ConfigurationError(
                        f"front at x={pos:.2f} within {guard:.2f} of the right boundary "
                        f"at t={t_now:.2f}; enlarge the domain"
                    )
                times.append(t_now)
                positions.append(pos)

    track = FrontTrack(np.asarray(times), np.asarray(positions), level)
    return Field(grid, w), track


def estimate_speed(track: FrontTrack, window: tuple[float, float]) -> SpeedEstimate:
    """Least-squares slope of front position over the time window."""
    t_lo, t_hi = window
    mask = (track.times >= t_lo) & (track.times <= t_hi)
    t = track.times[mask]
    x = track.positions[mask]
    if len(t) < 10:
        raise ConfigurationError(f"only {len(t)} samples in window; need >= 10")
    tbar = t.mean()
    sxx = float(np.sum((t - tbar) ** 2))
    slope = float(np.sum((t - tbar) * (x - x.mean())) / sxx)
    intercept = float(x.mean() - slope * tbar)
    resid = x - (slope * t + intercept)
    sigma2 = float(np.sum(resid**2)) / (len(t) - 2)
    return SpeedEstimate(slope, float(np.sqrt(sigma2 / sxx)), (float(t_lo), float(t_hi)))
