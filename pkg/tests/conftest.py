import pytest

from frontlab import dispersal, families, waves


@pytest.fixture(scope="session")
def hr():
    return families.hadeler_rothe()


@pytest.fixture(scope="session")
def box1():
    return dispersal.box(1.0)


@pytest.fixture(scope="session")
def spectral_local():
    return dispersal.linear_speed(dispersal.local(), 1.0)


@pytest.fixture(scope="session")
def spectral_box(box1):
    return dispersal.linear_speed(box1, 1.0)


@pytest.fixture(scope="session")
def wave_s1(hr):
    return waves.minimal_wave_local(hr, 1.0, tol=1e-6)


@pytest.fixture(scope="session")
def wave_s8(hr):
    return waves.minimal_wave_local(hr, 8.0, tol=1e-6)


@pytest.fixture(scope="session")
def nonlocal_wave_kpp(hr, box1, spectral_box):
    prof = waves.solve_wave_nonlocal(hr, 0.0, spectral_box.c0_star, box1, dx=0.02)
    assert prof is not None
    return prof
