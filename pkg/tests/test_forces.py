import math

import numpy as np
import pytest

from latticelab.errors import ConfigurationError, DomainError
from latticelab.forces import ForceLaw, force_law


def test_reference_values():
    assert ForceLaw("toda")(0.0) == 1.0
    assert ForceLaw("linear", (2.25,))(2.0) == pytest.approx(4.5)
    assert ForceLaw("rational")(0.0) == pytest.approx(2.53)
    assert ForceLaw("cubic")(1.0) == pytest.approx(1.71 * 1.2)


@pytest.mark.parametrize("kind,params", [
    ("toda", None), ("linear", (2.25,)), ("cubic", (1.71, 0.2)), ("rational", (2.53, 0.4)),
])
def test_strictly_increasing(kind, params):
    f = ForceLaw(kind, params)
    ys = np.linspace(-1.5, 1.5, 31)
    assert np.all(f.deriv(ys) > 0)


@pytest.mark.parametrize("kind,params,y", [
    ("toda", None, 0.3), ("linear", (2.25,), -0.7),
    ("cubic", (1.71, 0.2), 0.45), ("rational", (2.53, 0.4), -0.2),
])
def test_first_taylor_matches_finite_difference(kind, params, y):
    f = ForceLaw(kind, params)
    h = 1e-6
    fd = (f(y + h) - f(y - h)) / (2 * h)
    assert f.taylor(1, y) == pytest.approx(fd, rel=1e-6)


def test_taylor_higher_orders_toda():
    f = ForceLaw("toda")
    for k in range(6):
        assert f.taylor(k, 0.25) == pytest.approx(math.exp(0.25))


def test_rational_pole_rejected():
    f = ForceLaw("rational")
    with pytest.raises(DomainError):
        f(2.5)  # 0.4 * 2.5 = 1
    with pytest.raises(DomainError):
        f.deriv(3.0)


def test_linear_taylor_vanishes_beyond_one():
    f = ForceLaw("linear", (2.25,))
    assert f.taylor(2, 0.0) == 0.0
    assert f.taylor(5, 1.0) == 0.0


def test_bad_configs():
    with pytest.raises(ConfigurationError):
        ForceLaw("hookean")
    with pytest.raises(ConfigurationError):
        ForceLaw("linear", (-1.0,))
    with pytest.raises(ConfigurationError):
        ForceLaw("toda", (1.0,))


def test_factory_defaults():
    assert force_law("cubic").params == (1.71, 0.2)
    assert force_law("rational").params == (2.53, 0.4)
