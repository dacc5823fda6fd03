import numpy as np
import pytest

from latticelab.drivers import DriverSpec
from latticelab.errors import AmbiguityError, ConfigurationError
from latticelab.sim import flaschka, rest_state
from latticelab.spectral import (
    DetectedBands,
    EigenSystem,
    JacobiMatrix,
    build_lax,
    detect_bands,
    eigs,
    eigvals,
    evolve_eigensystem,
    flux,
    flux_count,
)


def free_jacobi(N):
    return JacobiMatrix(np.zeros(N), 0.5 * np.ones(N - 1))


def test_free_jacobi_spectrum_matches_chebyshev_oracle():
    # lambda_j = cos(j pi / (N+1)); verified independently through the
    # three-term characteristic recursion p_k = lambda p_{k-1} - p_{k-2}/4
    N = 30
    es = eigs(free_jacobi(N))
    expect = np.sort(np.cos(np.arange(1, N + 1) * np.pi / (N + 1)))
    assert np.allclose(es.lambdas, expect, atol=1e-13)
    for lam in es.lambdas:
        p_prev, p_cur = 1.0, lam
        for _ in range(N - 1):
            p_prev, p_cur = p_cur, lam * p_cur - 0.25 * p_prev
        assert abs(p_cur) < 1e-12


def test_first_components_oracle():
    N = 24
    es = eigs(free_jacobi(N))
    # eigenvector components sin(j k pi/(N+1)) give f_j^2 = 2 sin^2/(N+1)
    js = np.argsort(np.cos(np.arange(1, N + 1) * np.pi / (N + 1)))
    expect = 2.0 / (N + 1) * np.sin(np.arange(1, N + 1) * np.pi / (N + 1)) ** 2
    assert np.allclose(es.first_components**2, expect[js], atol=1e-13)
    assert np.sum(es.first_components**2) == pytest.approx(1.0, abs=1e-10)
    assert np.all(es.first_components**2 > 0)


def test_two_by_two():
    es = eigs(JacobiMatrix([0.0, 0.0], [0.5]))
    assert np.allclose(es.lambdas, [-0.5, 0.5])


def test_single_site():
    es = eigs(JacobiMatrix([1.7], []))
    assert es.lambdas[0] == 1.7 and es.first_components[0] == 1.0


def test_eigenvalue_simplicity_random():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(2, 30))
        jm = JacobiMatrix(rng.normal(size=n), 0.05 + rng.random(n - 1))
        lam = eigvals(jm)
        assert np.min(np.diff(lam)) > 0


def test_build_lax_rest():
    jm, b0 = build_lax(flaschka(rest_state(8), DriverSpec(a=0.0, gamma=1.0)))
    assert np.allclose(jm.diag, 0.0) and np.allclose(jm.offdiag, 0.5)
    assert b0 == pytest.approx(0.5)


def test_nonpositive_offdiag_rejected():
    with pytest.raises(ConfigurationError):
        JacobiMatrix([0.0, 0.0], [0.0])


# ---------------------------------------------------------------------------
# eigenvalue dynamics


def test_frozen_boundary_keeps_spectrum():
    es = eigs(free_jacobi(10))
    ts, lams, mus = evolve_eigensystem(es, lambda t: 0.0, lambda t: 0.0, 5.0,
                                       t_eval=[0.0, 2.5, 5.0])
    assert np.allclose(lams[-1], es.lambdas)
    assert np.allclose(mus, 0.0)


def test_monotone_flow_and_sum_rule():
    es = eigs(free_jacobi(12))
    b0sq = lambda t: 0.25
    ts, lams, mus = evolve_eigensystem(es, b0sq, lambda t: -0.5, 2.0,
                                       t_eval=np.linspace(0, 2, 9))
    assert np.all(np.diff(lams, axis=0) < 0)  # every eigenvalue moves down
    assert np.all(mus > 0)


# ---------------------------------------------------------------------------
# flux


def test_flux_static_spectrum_zero():
    lam = np.linspace(-1, 1, 20)
    snaps = [(0.0, lam), (10.0, lam)]
    assert flux(snaps, 0.3, 0.0, 10.0) == 0.0


def test_flux_synthetic_crossings():
    # paths lambda_i(t) = c_i - v t: crossings of a level are exactly countable
    c = np.linspace(0.0, 3.0, 31)
    v = 0.1
    T = 10.0
    level = 1.0 + 1e-4
    snaps = [(0.0, np.sort(c)), (T, np.sort(c - v * T))]
    k = np.sum((c - v * T < level) & (c > level))
    assert flux(snaps, level, 0.0, T) == pytest.approx(k / T)


def test_flux_additivity_exact():
    rng = np.random.default_rng(3)
    c = np.sort(rng.normal(size=40))
    paths = lambda t: np.sort(c - 0.03 * t - 0.01 * np.sin(c + t))
    snaps = [(t, paths(t)) for t in (0.0, 5.0, 10.0)]
    lvl = 0.1
    J_full = flux(snaps, lvl, 0.0, 10.0)
    J_a = flux(snaps, lvl, 0.0, 5.0)
    J_b = flux(snaps, lvl, 5.0, 5.0)
    assert J_full == pytest.approx(0.5 * (J_a + J_b))


def test_flux_window_coverage_checked():
    snaps = [(0.0, np.zeros(3)), (1.0, np.zeros(3))]
    with pytest.raises(ConfigurationError):
        flux(snaps, 0.5, 0.0, 5.0)


# ---------------------------------------------------------------------------
# band detection


def test_detect_one_cluster():
    lam = np.linspace(0, 1, 50)
    db = detect_bands(lam, min_gap=0.1)
    assert db.g == 0
    assert db.endpoints[0] == 0.0 and db.endpoints[-1] == 1.0


def test_detect_two_clusters():
    lam = np.concatenate([np.linspace(0, 1, 40), np.linspace(1.3, 2.0, 40)])
    db = detect_bands(lam, min_gap=0.1)
    assert db.g == 1
    assert db.gaps[0] == (1.0, 1.3)


def test_strays_do_not_split_bands():
    lam = np.concatenate([np.linspace(0, 1, 60), [1.4], np.linspace(1.8, 2.5, 60)])
    db = detect_bands(lam, min_gap=0.12)
    assert db.g == 1
    assert db.stray.tolist() == [1.4]


def test_ambiguous_detection_raises():
    rng = np.random.default_rng(0)
    lam = np.sort(rng.random(12))
    with pytest.raises((AmbiguityError, ConfigurationError)):
        detect_bands(lam, min_gap=1e-9, min_cluster=50)


@pytest.mark.slow
def test_essential_spectrum_edges_drift_slowly(constant_driver_run):
    # constant driver: outer endpoints of the filled spectrum move < 2%
    snaps = constant_driver_run
    tops, bottoms = [], []
    for t, lam in snaps:
        if t < 50:
            continue
        tops.append(lam[-1])
        bottoms.append(lam[0])
    assert (max(tops) - min(tops)) / abs(np.mean(tops)) < 0.02
    assert (max(bottoms) - min(bottoms)) / abs(np.mean(bottoms)) < 0.02
    # and they sit near the theoretical [-1-2a, 1] = [-2, 1]
    assert np.mean(tops) == pytest.approx(1.0, abs=0.05)
    assert np.mean(bottoms) == pytest.approx(-2.0, abs=0.08)


@pytest.mark.slow
def test_flux_curve_properties_on_driven_run(lab):
    """J >= 0 everywhere and nondecreasing (up to one counting quantum)
    below the original essential band."""
    cfg, states, snaps = lab.spectral_run_18()
    grid = np.linspace(-2.2, -1.02, 60)
    T = 100.0
    J = np.array([flux(snaps, g, 100.0, T) for g in grid])
    assert np.all(J >= 0.0)
    quantum = 1.0 / T
    drops = np.diff(J)
    assert np.min(drops) >= -quantum - 1e-12
