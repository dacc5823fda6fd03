import numpy as np
import pytest

from latticelab.drivers import DriverSpec, harmonics_from_sin_cos, paper_driver
from latticelab.errors import ConfigurationError


def test_paper_driver_matches_sin_cos_form():
    d = paper_driver(gamma=1.8, eps=0.2, a=0.5)
    ts = np.linspace(0.0, 7.0, 101)
    expect = 2 * 0.5 * ts + 0.2 * (np.sin(1.8 * ts) + 0.5 * np.cos(2 * 1.8 * ts))
    assert np.allclose(d.position(ts), expect, atol=1e-14)


def test_position_is_real_and_velocity_consistent():
    d = DriverSpec(a=0.3, gamma=2.0, eps=0.4,
                   harmonics={1: 0.3 - 0.2j, 3: 0.05 + 0.1j})
    ts = np.linspace(0, 5, 50)
    x = d.position(ts)
    assert np.all(np.isreal(x))
    h = 1e-6
    fd = (d.position(ts + h) - d.position(ts - h)) / (2 * h)
    assert np.allclose(d.velocity(ts), fd, atol=1e-7)


def test_fourier_coefficients_conjugate_symmetric():
    d = paper_driver(gamma=1.1)
    for m in (1, 2):
        assert d.coefficient(-m) == np.conj(d.coefficient(m))
    assert d.coefficient(0) == 0


def test_harmonics_from_sin_cos():
    h = harmonics_from_sin_cos((1.0,), (0.0, 0.5))
    assert h[1] == pytest.approx(-0.5j)
    assert h[2] == pytest.approx(0.25)


def test_flaschka_a0_mean():
    d = paper_driver(gamma=1.8, a=0.5)
    assert d.a0_mean == -0.5
    ts = np.linspace(0, 2 * np.pi / 1.8, 1000, endpoint=False)
    assert np.mean(d.flaschka_a0(ts)) == pytest.approx(-0.5, abs=1e-12)


def test_invalid_driver():
    with pytest.raises(ConfigurationError):
        DriverSpec(a=0.0, gamma=-1.0)
    with pytest.raises(ConfigurationError):
        DriverSpec(harmonics={0: 1.0})
