import math

import numpy as np
import pytest

from latticelab.drivers import paper_driver
from latticelab.errors import ConfigurationError
from latticelab.forces import ForceLaw
from latticelab.onephase import (
    boundary_match,
    build_wave,
    energy_flux,
    energy_flux_leading,
    lambda_op,
    mu_fixed_point,
    rotate,
    solve_beta,
    tilde_W,
    wave_from_coefficients,
)
from latticelab.seqspace import SeqW, Weight
from latticelab.wavecore import resonance_data, series_constants

CUBIC = ForceLaw("cubic")
TODA = ForceLaw("toda")
GAMMA = 2.1  # m0 = 1 for F'(0) = 1.71 and for F' = 2.25


@pytest.fixture(scope="module")
def res_cubic():
    return resonance_data(CUBIC, 0.0, GAMMA)


@pytest.fixture(scope="module")
def wave_cubic():
    return build_wave(CUBIC, 0.0, GAMMA, (0.0, 0.05))


def test_lambda_op_values(res_cubic):
    assert lambda_op(0.77, res_cubic, 0) == pytest.approx(0.0)  # 2cos0 + (-2)
    b1 = res_cubic.beta(1)
    assert lambda_op(b1, res_cubic, 1) == pytest.approx(0.0, abs=1e-14)
    # resonance-free kernel: |Lambda(beta, m)| >= delta_2 - 2 for |m| > 1
    floor = float(res_cubic.delta(2)) - 2.0
    assert floor > 0
    for beta in np.linspace(-math.pi, math.pi, 41):
        ms = np.arange(2, 9)
        assert np.all(np.abs(lambda_op(beta, res_cubic, ms)) >= floor - 1e-12)


def test_tilde_W_zero_and_reality(res_cubic):
    r0 = SeqW.zero(8, Weight("unit").times_msq())
    assert np.allclose(tilde_W(CUBIC, 0.0, 0.5, r0).data, 0.0)
    # purely imaginary input -> purely imaginary output
    r = SeqW.zero(8, r0.weight)
    r[1] = 0.03j
    r[-1] = 0.03j  # conj(0.03j) = -0.03j... reality means r(-1) = conj(r(1))
    r[-1] = np.conj(r[1])
    out = tilde_W(CUBIC, 0.0, res_cubic.beta(1), r)
    assert np.max(np.abs(out.data.real)) < 1e-15


def test_tilde_W_translation_equivariance(res_cubic):
    rng = np.random.default_rng(6)
    raw = rng.normal(size=17) + 1j * rng.normal(size=17)
    data = 0.01 * (raw + np.conj(raw[::-1]))
    r = SeqW(data, weight=Weight("unit").times_msq())
    xi = 0.7
    beta = res_cubic.beta(1)
    lhs = tilde_W(CUBIC, 0.0, beta, rotate(r, xi)).data
    rhs = rotate(tilde_W(CUBIC, 0.0, beta, r), xi).data
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_mu_trivial_and_quadratic_bound(res_cubic):
    beta = res_cubic.beta(1)
    mu0 = mu_fixed_point(CUBIC, 0.0, res_cubic, beta, (0.0, 0.0))
    assert np.allclose(mu0.data, 0.0)
    # explicit constant from the contraction construction
    _, _, C_F, _ = series_constants(CUBIC, 0.0)
    C_lambda = 1.0 / (float(res_cubic.delta(2)) - 2.0)
    wt = Weight("unit").times_msq()
    C = 4.0 * C_lambda * C_F * ((wt(1) + wt(-1)) / 2.0) ** 2
    q = (0.0, 1e-2)
    mu = mu_fixed_point(CUBIC, 0.0, res_cubic, beta, q)
    assert mu.norm() <= C * 1e-4
    # imaginary slice: q = (0, p) gives purely imaginary mu
    assert np.max(np.abs(mu.data.real)) < 1e-15
    # projection: no support on |m| <= 1
    for m in (-1, 0, 1):
        assert mu[m] == 0


def test_beta_trivial_and_dyadic(res_cubic):
    assert solve_beta(CUBIC, 0.0, res_cubic, (0.0, 0.0)) == res_cubic.beta(1)
    ps = (0.0125, 0.025, 0.05)
    gaps = [abs(build_wave(CUBIC, 0.0, GAMMA, (0.0, p)).beta - res_cubic.beta(1)) for p in ps]
    Cs = [g / p**2 for g, p in zip(gaps, ps)]
    assert max(Cs) / min(Cs) < 1.3  # quadratic in |q|


def test_beta_depends_on_modulus_only(res_cubic):
    w1 = build_wave(CUBIC, 0.0, GAMMA, (0.0, 0.05))
    w2 = build_wave(CUBIC, 0.0, GAMMA, (0.05 / math.sqrt(2), 0.05 / math.sqrt(2)))
    assert abs(w1.beta - w2.beta) < 1e-12


def test_wave_residuals(wave_cubic, res_cubic):
    lam = lambda_op(wave_cubic.beta, res_cubic, wave_cubic.r.ms)
    resid = lam * wave_cubic.r.data + tilde_W(CUBIC, 0.0, wave_cubic.beta, wave_cubic.r).data
    assert np.max(np.abs(resid)) < 1e-10
    assert wave_cubic.ode_residual(CUBIC) < 1e-8
    # r(0) = 0 normalization; reality; tail bound ||P r|| <= C |q|^2
    assert wave_cubic.r[0] == 0
    assert wave_cubic.r.is_real_symmetric(tol=1e-12)
    tail = sum(wave_cubic.r.weight(m) * abs(wave_cubic.r[m])
               for m in range(-wave_cubic.r.mmax, wave_cubic.r.mmax + 1) if abs(m) > 1)
    assert tail < 10 * 0.05**2


def test_trivial_wave():
    w = build_wave(CUBIC, 0.0, GAMMA, (0.0, 0.0))
    assert np.allclose(w.r.data, 0.0)
    assert w(5, 1.3) == pytest.approx(0.0)


def test_corollary_reconstruction(wave_cubic):
    w2 = wave_from_coefficients(CUBIC, 0.0, GAMMA, wave_cubic.r)
    assert abs(w2.beta - wave_cubic.beta) < 1e-10
    assert np.max(np.abs(w2.r.data - wave_cubic.r.data)) < 1e-10


def test_rotation_is_time_translation():
    p = 0.05
    w0 = build_wave(CUBIC, 0.0, GAMMA, (0.0, p))
    for xi in (0.4, 2.0):
        q = (-p * math.sin(xi), p * math.cos(xi))
        w1 = build_wave(CUBIC, 0.0, GAMMA, q)
        ts = np.linspace(0, w0.period, 7)
        assert np.max(np.abs(w1(4, ts) - w0(4, ts + xi / GAMMA))) < 1e-10


def test_energy_flux(wave_cubic):
    assert energy_flux(CUBIC, 0.0, build_wave(CUBIC, 0.0, GAMMA, (0.0, 0.0))) == pytest.approx(0.0, abs=1e-15)
    E = energy_flux(CUBIC, 0.0, wave_cubic)
    assert E < 0 and math.sin(wave_cubic.beta) < 0
    # quadrature vs second-order formula: gap shrinks ~ O(|q|) relative per halving
    rel_gaps = []
    for p in (0.05, 0.025, 0.0125):
        w = build_wave(CUBIC, 0.0, GAMMA, (0.0, p))
        E1, E2 = energy_flux(CUBIC, 0.0, w), energy_flux_leading(CUBIC, 0.0, w)
        rel_gaps.append(abs(E1 - E2) / abs(E1))
    for g1, g2 in zip(rel_gaps, rel_gaps[1:]):
        assert 1.5 <= g1 / g2 <= 4.0


def test_boundary_match_trivial():
    drv = paper_driver(gamma=GAMMA, eps=1.0)
    b = SeqW({m: drv.coefficient(m) for m in (-2, -1, 1, 2)}, mmax=8)
    q, beta, sol, wave = boundary_match(CUBIC, 0.0, GAMMA, 0.0, b)
    assert np.hypot(*q) < 1e-12
    assert sol(7, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_boundary_match_wrong_window_rejected():
    b = SeqW({1: -0.5j}, mmax=4)
    with pytest.raises(ConfigurationError):
        boundary_match(CUBIC, 0.0, 3.5, 0.1, b)  # m0 = 0 there


def test_toda_equivalence_with_ggap():
    """For F = e^x the matched one-phase solution coincides with the g = 1
    theta-function construction."""
    from latticelab.ggap import resonance_solve

    c = -2 * math.log(1.5)
    drv = paper_driver(gamma=1.8, eps=1.0)
    b = SeqW({m: drv.coefficient(m) for m in (-2, -1, 1, 2)}, mmax=8)
    eps = 0.05
    q, beta, sol, wave = boundary_match(TODA, c, 1.8, eps, b)
    gc, gg, per, diag = resonance_solve(c=c, gamma=1.8, eps=eps, b=b, nmax=64, mmax=16)
    ts = np.linspace(0.0, sol.period, 7)
    worst = max(float(np.max(np.abs(sol(n, ts) - per(n, ts)))) for n in range(0, 12))
    assert worst < 1e-6
    # one-gap bridge: -2 pi U(0) = beta_1 for the matching frequency data
    res = resonance_data(TODA, c, 1.8)
    from latticelab.ggap import solve_params

    cp, perd = solve_params(1, 1.8, c, [0.0])
    assert math.cos(-2 * math.pi * perd.U_shifted[0]) == pytest.approx(-float(res.delta(1)) / 2, abs=1e-10)
    assert -2 * math.pi * perd.U[0] == pytest.approx(res.beta(1), abs=1e-10)
