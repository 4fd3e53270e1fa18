import numpy as np
import pytest

from frontlab import cauchy, dispersal
from frontlab.errors import ConfigurationError, FrontAbsentError


def test_equilibria_local(hr):
    g = cauchy.Grid1D(0.0, 0.2, 256)
    for value in (0.0, 1.0):
        final, _ = cauchy.evolve(
            hr, 1.0, dispersal.local(), cauchy.Field(g, np.full(256, value)),
            T=5.0, dt=0.01, boundary_guard=False,
        )
        # interior nodes: the Dirichlet right closure owns a boundary layer
        assert np.max(np.abs(final.values[:128] - value)) <= 1e-12


def test_equilibria_nonlocal(hr, box1):
    g = cauchy.Grid1D(0.0, 0.1, 512)
    for value in (0.0, 1.0):
        final, _ = cauchy.evolve(
            hr, 1.0, box1, cauchy.Field(g, np.full(512, value)),
            T=5.0, dt=0.1, boundary_guard=False,
        )
        assert np.max(np.abs(final.values[:256] - value)) <= 1e-12


def test_front_position_step():
    g = cauchy.Grid1D(0.0, 0.1, 256)
    x = g.points()
    field = cauchy.Field(g, (x < 10.0).astype(float))
    assert cauchy.front_position(field, 0.5) == pytest.approx(10.0, abs=g.dx)


def test_front_position_logistic():
    g = cauchy.Grid1D(0.0, 0.01, 1001)
    x = g.points()
    field = cauchy.Field(g, 1.0 / (1.0 + np.exp(2.0 * (x - 5.0))))
    assert cauchy.front_position(field, 0.5) == pytest.approx(5.0, abs=1e-3)


def test_front_absent():
    g = cauchy.Grid1D(0.0, 0.1, 64)
    field = cauchy.Field(g, np.linspace(0.3, 0.0, 64))
    with pytest.raises(FrontAbsentError):
        cauchy.front_position(field, 0.5)


def test_estimate_speed_exact_line():
    t = np.linspace(0.0, 10.0, 40)
    track = cauchy.FrontTrack(t, 2.5 * t + 1.0, level=0.5)
    est = cauchy.estimate_speed(track, (0.0, 10.0))
    assert est.c_hat == pytest.approx(2.5, abs=1e-12)
    assert est.stderr == pytest.approx(0.0, abs=1e-10)


def test_estimate_speed_window_error():
    t = np.linspace(0.0, 10.0, 40)
    track = cauchy.FrontTrack(t, 2.0 * t, level=0.5)
    with pytest.raises(ConfigurationError):
        cauchy.estimate_speed(track, (9.0, 9.5))


def test_cfl_enforced(hr, box1):
    g = cauchy.Grid1D(0.0, 0.2, 128)
    init = cauchy.step_datum(g)
    with pytest.raises(ConfigurationError):
        cauchy.evolve(hr, 0.0, dispersal.local(), init, T=1.0, dt=0.1)
    with pytest.raises(ConfigurationError):
        cauchy.evolve(hr, 0.0, box1, init, T=1.0, dt=0.5)


def test_init_range_enforced(hr):
    g = cauchy.Grid1D(0.0, 0.2, 128)
    bad = cauchy.Field(g, np.full(128, 1.2))
    with pytest.raises(ConfigurationError):
        cauchy.evolve(hr, 0.0, dispersal.local(), bad, T=1.0, dt=0.01)


def test_boundary_guard_aborts(hr):
    g = cauchy.Grid1D(0.0, 0.2, 128)  # domain [0, 25.4]: the front hits the guard
    init = cauchy.step_datum(g)
    with pytest.raises(ConfigurationError):
        cauchy.evolve(hr, 0.0, dispersal.local(), init, T=20.0, dt=0.01)


def _random_monotone_pair(rng, n):
    u = np.clip(np.sort(rng.uniform(0, 1, size=n))[::-1], 0.0, 1.0)
    bump = rng.uniform(0, 0.5) * np.exp(-((np.arange(n) - rng.uniform(0, n)) ** 2) / (0.1 * n) ** 2)
    v = np.clip(u + bump, 0.0, 1.0)
    return u, np.maximum(u, v)


@pytest.mark.parametrize("kind", ["local", "nonlocal"])
def test_comparison_principle(hr, box1, kind):
    rng = np.random.default_rng(42)
    kernel = dispersal.local() if kind == "local" else box1
    dx = 0.25 if kind == "local" else 0.1
    dt = 0.02 if kind == "local" else 0.1
    n = 160 if kind == "local" else 400
    g = cauchy.Grid1D(0.0, dx, n)
    for _ in range(20):
        u0, v0 = _random_monotone_pair(rng, n)
        u, v = u0, v0
        for _ in range(4):  # checkpointed segments: ordering at sampled times
            fu, _ = cauchy.evolve(hr, 1.0, kernel, cauchy.Field(g, u), T=0.5, dt=dt,
                                  boundary_guard=False)
            fv, _ = cauchy.evolve(hr, 1.0, kernel, cauchy.Field(g, v), T=0.5, dt=dt,
                                  boundary_guard=False)
            u, v = fu.values, fv.values
            assert np.all(u <= v + 1e-10)
            assert np.all(u >= -1e-8) and np.all(v <= 1.0 + 1e-8)


def test_monotone_preservation(hr):
    g = cauchy.Grid1D(0.0, 0.2, 256)
    x = g.points()
    init = cauchy.Field(g, 1.0 / (1.0 + np.exp(0.8 * (x - 20.0))))
    final, _ = cauchy.evolve(hr, 1.0, dispersal.local(), init, T=3.0, dt=0.01,
                             boundary_guard=False)
    assert np.all(np.diff(final.values) <= 1e-10)


def test_level_independence_of_speed(hr):
    g = cauchy.Grid1D(0.0, 0.2, 1501)
    init = cauchy.step_datum(g)
    speeds = []
    for level in (0.25, 0.5, 0.75):
        _, track = cauchy.evolve(hr, 0.0, dispersal.local(), init, T=100.0, dt=0.01,
                                 level=level)
        speeds.append(cauchy.estimate_speed(track, (60.0, 100.0)).c_hat)
    assert max(speeds) - min(speeds) <= 0.02


def test_pulled_speed_short_run(hr):
    g = cauchy.Grid1D(0.0, 0.2, 1501)
    _, track = cauchy.evolve(hr, 0.0, dispersal.local(), cauchy.step_datum(g),
                             T=100.0, dt=0.01)
    est = cauchy.estimate_speed(track, (60.0, 100.0))
    assert est.c_hat == pytest.approx(2.0, abs=0.06)
