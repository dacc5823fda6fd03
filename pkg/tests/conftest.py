import pytest

from latticelab.acceptance import AcceptanceLab
from latticelab.drivers import DriverSpec
from latticelab.forces import ForceLaw
from latticelab.sim import simulate


def pytest_addoption(parser):
    parser.addoption("--skip-slow", action="store_true", default=False,
                     help="skip the multi-minute simulation tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: test needs a long simulation run")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--skip-slow"):
        marker = pytest.mark.skip(reason="--skip-slow")
        for item in items:
            if "slow" in item.keywords:
                item.add_marker(marker)


@pytest.fixture(scope="session")
def lab():
    """Shared cache of the heavy acceptance runs."""
    return AcceptanceLab()


@pytest.fixture(scope="session")
def constant_driver_run():
    """Toda, constant driver a = 0.5, with eigenvalue snapshots at a few times."""
    from latticelab.sim import flaschka
    from latticelab.spectral import build_lax, eigvals

    drv = DriverSpec(a=0.5, gamma=1.0, eps=0.0)
    force = ForceLaw("toda")
    snaps = []

    def sampler(st):
        jm, _ = build_lax(flaschka(st, drv))
        snaps.append((st.t, eigvals(jm)))

    simulate(force, drv, 400, 1e-3, 200.0, sample_times=[50.0, 100.0, 150.0, 200.0],
             sampler=sampler)
    return snaps
