import math

import numpy as np
import pytest

from latticelab.drivers import paper_driver
from latticelab.errors import ConfigurationError, DomainError
from latticelab.forces import ForceLaw
from latticelab.seqspace import Field, SeqW, Weight
from latticelab.sim import simulate
from latticelab.wavecore import (
    PeriodicSolution,
    boundary_mass,
    dv_deps,
    dY_dv_apply,
    high_freq_solution,
    kernel_apply,
    mode_residual,
    nonlinear_terms,
    resonance_data,
    series_constants,
    solve_v,
)

TODA = ForceLaw("toda")
LINEAR = ForceLaw("linear", (2.25,))


def _random_symmetric_field(rng, nmax, mmax, scale, sigma=0.0):
    raw = rng.normal(size=(nmax + 1, 2 * mmax + 1)) + 1j * rng.normal(size=(nmax + 1, 2 * mmax + 1))
    vals = raw + np.conj(raw[:, ::-1])
    if sigma:
        vals *= np.exp(-sigma * np.arange(nmax + 1))[:, None]
    f = Field(vals, Weight("unit"), sigma)
    return Field(vals * scale / f.norm(0.0), Weight("unit"), sigma)


# ---------------------------------------------------------------------------
# resonance data


def test_m0_thresholds_match_linear_lattice():
    # F' = 2.25 so gamma_k = 3/k; the three experimental frequencies bracket them
    for gamma, m0 in ((3.1, 0), (2.1, 1), (1.2, 2)):
        res = resonance_data(LINEAR, 0.0, gamma)
        assert res.m0 == m0


def test_beta_at_zero_delta():
    # delta_1 = 0 <=> gamma^2 = 2 F'(-c): beta_1 = -pi/2
    gamma = math.sqrt(2 * 2.25)
    res = resonance_data(LINEAR, 0.0, gamma)
    assert res.beta(1) == pytest.approx(-math.pi / 2)


def test_resonant_gamma_rejected():
    with pytest.raises(DomainError):
        resonance_data(LINEAR, 0.0, 3.0)  # gamma_1 exactly
    with pytest.raises(DomainError):
        resonance_data(LINEAR, 0.0, 1.5)  # gamma_2 exactly


def test_z_root_property():
    res = resonance_data(TODA, 0.0, 3.1)
    for m in (1, 2, 3):
        z = res.z(m)
        d = float(res.delta(m))
        assert z**2 + d * z + 1 == pytest.approx(0.0, abs=1e-12)
        assert abs(z) < 1.0


def test_sigma0_definition():
    res = resonance_data(TODA, 0.0, 3.1)
    assert res.sigma0 == pytest.approx(min(1.0, -0.5 * math.log(abs(res.z(1)))))
    assert res.sigma1 == pytest.approx(res.sigma0 / 4)
    assert res.C_K > 0


# ---------------------------------------------------------------------------
# nonlinear terms


def test_nonlinear_terms_vanish_for_zero_input():
    u = Field.zero(10, 4)
    W, Y, Wuv = nonlinear_terms(TODA, 0.0, u)
    assert np.allclose(W.values, 0) and np.allclose(Y.values, 0) and np.allclose(Wuv.values, 0)


def test_nonlinear_terms_vanish_for_linear_force():
    rng = np.random.default_rng(2)
    u = _random_symmetric_field(rng, 8, 4, 0.05)
    W, Y, Wuv = nonlinear_terms(LINEAR, 0.0, u, u)
    assert np.max(np.abs(W.values)) == 0.0
    assert np.max(np.abs(Y.values)) == 0.0


def test_W_matches_time_domain_dft_oracle():
    """W(u)(n,m) equals the DFT of the nonlinear force remainder."""
    rng = np.random.default_rng(9)
    gamma, c = 1.3, -0.2
    mmax = 4
    u = _random_symmetric_field(rng, 6, mmax, 0.04)
    W, _, _ = nonlinear_terms(TODA, c, u)
    alpha1 = TODA.deriv(-c)
    nt = 64
    ts = 2 * np.pi / gamma * np.arange(nt) / nt
    ms = np.arange(-mmax, mmax + 1)

    def dev(n, t):  # deviation x_n - c n as a time signal
        return np.sum(u.row(n)[None, :] * np.exp(1j * gamma * ms[None, :] * t[:, None]), axis=1).real

    for n in (1, 2, 4):
        g_mid = dev(n - 1, ts) - dev(n, ts)
        g_top = dev(n, ts) - dev(n + 1, ts)
        full = TODA(-c + g_mid) - TODA(-c + g_top)
        lin = alpha1 * (g_mid - g_top)
        coeffs = np.fft.fft((full - lin) / alpha1) / nt
        got = np.array([coeffs[m % nt] for m in ms])
        want = W.row(n)
        assert np.max(np.abs(got - want)) < 1e-8


def test_W_quadratic_bound():
    rng = np.random.default_rng(4)
    rho, ct, C_F, _ = series_constants(TODA, 0.0)
    for _ in range(100):
        u = _random_symmetric_field(rng, 8, 4, 0.01 + 0.05 * rng.random())
        W, _, _ = nonlinear_terms(TODA, 0.0, u)
        assert W.norm(0.0) <= C_F * u.norm(0.0) ** 2 * (1 + 1e-10)


# ---------------------------------------------------------------------------
# kernel


def test_kernel_zero_mode_row():
    res = resonance_data(TODA, 0.0, 3.1)
    y = Field.zero(8, 2)
    y.values[5, 2] = 1.0  # basis vector at k = 5, m = 0
    out = kernel_apply(res, y)
    ns = np.arange(9)
    expect = np.where(ns <= 4, -1.0, 0.0)
    assert np.allclose(out.values[:, 2].real, expect)


def test_kernel_three_term_recursion():
    """L_m (K y)(n) = y(n+1) - y(n) for n >= 1 (all mode classes)."""
    rng = np.random.default_rng(12)
    res = resonance_data(TODA, -2 * math.log(1.5), 1.8)  # m0 = 1
    nmax, mmax = 40, 3
    y = _random_symmetric_field(rng, nmax, mmax, 1.0, sigma=res.sigma0)
    out = kernel_apply(res, y)
    delta = res.delta(y.ms)
    for col, m in enumerate(y.ms):
        v = out.values[:, col]
        rhs = y.values[:, col]
        for n in range(1, nmax - 25):
            lhs = v[n - 1] + delta[col] * v[n] + v[n + 1]
            assert abs(lhs - (rhs[n + 1] - rhs[n])) < 1e-10


def test_kernel_norm_bound_200_random():
    rng = np.random.default_rng(8)
    res = resonance_data(TODA, -2 * math.log(1.5), 1.8)
    for _ in range(200):
        sigma = res.sigma1 + (res.sigma0 - res.sigma1) * rng.random()
        y = _random_symmetric_field(rng, 30, 4, 1.0, sigma=sigma)
        assert kernel_apply(res, y).norm(sigma) <= res.C_K * y.norm(sigma) * (1 + 1e-10)


# ---------------------------------------------------------------------------
# fixed point


def _toda_setup(gamma=3.1, eps=0.05, nmax=48, mmax=12):
    c = -2 * math.log(1.5)
    res = resonance_data(TODA, c, gamma)
    drv = paper_driver(gamma=gamma, eps=1.0)
    b = SeqW({m: drv.coefficient(m) for m in (-2, -1, 1, 2)}, mmax=mmax)
    u = Field.zero(nmax, mmax)
    return c, res, b, u


def test_solve_v_trivial():
    c, res, b, u = _toda_setup()
    v = solve_v(res, TODA, c, u, 0.0, b)
    assert np.max(np.abs(v.values)) == 0.0


def test_solve_v_contracts_geometrically():
    from latticelab.wavecore import _boundary_field

    c, res, b, u = _toda_setup(eps=0.05)
    eps = 0.05
    v = Field.zero(u.nmax, u.mmax, u.weight, res.sigma0)
    deltas = []
    for _ in range(8):
        _, Y, _ = nonlinear_terms(TODA, c, u, v)
        vn = kernel_apply(res, Y).values + _boundary_field(res, v, eps, b, u).values
        deltas.append(Field(vn - v.values, u.weight, res.sigma0).norm())
        v = Field(vn, u.weight, res.sigma0)
    ratios = [d2 / d1 for d1, d2 in zip(deltas[1:], deltas[2:])]
    assert max(ratios) <= 0.25


def test_solve_v_properties():
    c, res, b, u = _toda_setup(eps=0.05)
    eps = 0.05
    v = solve_v(res, TODA, c, u, eps, b)
    # (iii) boundary values at nonresonant modes
    for m in range(1, u.mmax + 1):
        if abs(m) > res.m0:
            assert abs(v[0, m] - (eps * b[m] - u[0, m])) < 1e-13
    # (i) three-term recursion residual
    assert mode_residual(res, TODA, c, u, v) < 1e-12
    # (ii) norm bound
    assert v.norm() <= 2 * (boundary_mass(u, res) + abs(eps)) * (1 + 1e-6)
    # (iv) reality
    assert v.is_real_symmetric(tol=1e-13)
    # exponential decay of the computed fixed point
    sup = np.max(np.abs(v.values), axis=1)
    assert np.all(sup[1:41] * np.exp(res.sigma0 * np.arange(1, 41)) < 10 * sup[0] + 1e-12)


def test_fixed_point_unique_from_other_start():
    from latticelab.wavecore import _boundary_field

    c, res, b, u = _toda_setup(eps=0.05)
    eps = 0.05
    v_ref = solve_v(res, TODA, c, u, eps, b)
    rng = np.random.default_rng(3)
    v = _random_symmetric_field(rng, u.nmax, u.mmax, 0.02, sigma=res.sigma0)
    for _ in range(60):
        _, Y, _ = nonlinear_terms(TODA, c, u, v)
        v = Field(kernel_apply(res, Y).values + _boundary_field(res, v, eps, b, u).values,
                  u.weight, res.sigma0)
    assert Field(v.values - v_ref.values, u.weight, res.sigma0).norm(0.0) < 1e-10


def test_dv_deps_matches_difference_quotient():
    c, res, b, u = _toda_setup(eps=0.05)
    eps, h = 0.05, 1e-4
    v0 = solve_v(res, TODA, c, u, eps, b)
    vp = solve_v(res, TODA, c, u, eps + h, b)
    vm = solve_v(res, TODA, c, u, eps - h, b)
    fd = (vp.values - vm.values) / (2 * h)
    y = dv_deps(res, TODA, c, u, v0, b)
    assert np.max(np.abs(fd - y.values)) < 1e-5


# ---------------------------------------------------------------------------
# high-frequency solution


def test_high_freq_trivial():
    c = -2 * math.log(1.5)
    b = SeqW({1: -0.5j, 2: 0.25}, mmax=4)
    sol = high_freq_solution(TODA, c, 3.1, 0.0, b)
    for n in (0, 1, 5):
        assert sol(n, 0.3) == pytest.approx(c * n, abs=1e-14)


def test_high_freq_requires_m0_zero():
    c = -2 * math.log(1.5)
    b = SeqW({1: -0.5j}, mmax=4)
    with pytest.raises(ConfigurationError):
        high_freq_solution(TODA, c, 1.8, 0.1, b)


def test_high_freq_solution_period_and_residual():
    c = -2 * math.log(1.5)
    drv = paper_driver(gamma=3.1, eps=1.0)
    b = SeqW({m: drv.coefficient(m) for m in (-2, -1, 1, 2)}, mmax=8)
    sol = high_freq_solution(TODA, c, 3.1, 0.2, b)
    ts = np.linspace(0, sol.period, 5)
    for n in (1, 7):
        assert np.max(np.abs(sol(n, ts + sol.period) - sol(n, ts))) < 1e-14
    assert sol.ode_residual(TODA, 1, 30) < 1e-8
    # deviation profile decays exponentially in n
    dev = [abs(sol(n, 0.41) - c * n - (sol(40, 0.41) - c * 40)) for n in range(1, 30)]
    assert dev[20] < dev[2] * 1e-4


@pytest.mark.slow
def test_high_freq_matches_long_time_simulation():
    """gamma = 3.1 > gamma_1: no wave; boundary layer matches the driven lattice.

    The interior spacing c of the time-periodic state shifts from the eps = 0
    value -2 ln(1 + a) at order eps^2, so c is measured from the run and fed
    to the construction; only the additive constant d remains fitted.
    """
    gamma, eps = 3.1, 0.2
    drv = paper_driver(gamma=gamma, eps=eps, a=0.5)
    b = SeqW({m: drv.coefficient(m) for m in (-2, -1, 1, 2)}, mmax=8)
    period = 2 * math.pi / gamma
    # the dispersive transient rings down like ~t^-1.3 (4.9e-3 at t=150,
    # 2.0e-3 at t=300); the 1e-3 window needs t ~ 600
    t_end = 600.0
    times = np.linspace(t_end - period, t_end, 9)
    states = []
    simulate(TODA, drv, 1280, 1e-3, t_end, sample_times=times, sampler=states.append)
    ns = np.arange(5, 21)
    c_fit = float(np.mean([np.mean(np.diff(st.x[4:25])) for st in states[:-1]]))
    assert abs(c_fit - (-2 * math.log(1.5))) < 0.01  # O(eps^2) shift only
    sol = high_freq_solution(TODA, c_fit, gamma, eps, b)
    diffs = []
    for st in states[:-1]:
        sim_dev = st.x[ns - 1] - 2 * drv.a * st.t
        con = np.array([sol(int(n), st.t) for n in ns])
        diffs.append(sim_dev - con)
    diffs = np.asarray(diffs)
    d_fit = float(np.mean(diffs))
    assert float(np.max(np.abs(diffs - d_fit))) < 1e-3

    # the driver's oscillatory imprint dies out along the chain.  At desk
    # scale a zero-mean dispersive transient (~1e-3, t^-1.3 decay, not part
    # of the periodic state) still rings, so the profile claim is tested on
    # the period average; the sup-over-period decay is tested on the
    # constructed periodic state, which represents the t -> infinity limit.
    far = np.arange(25, 41)
    means = np.mean([st.x[far - 1] - 2 * drv.a * st.t for st in states[:-1]], axis=0)
    c_far = float(np.polyfit(far, means, 1)[0])
    d_far = float(np.mean(means - c_far * far))
    dev30 = abs(np.mean([st.x[29] - 2 * drv.a * st.t for st in states[:-1]]) - c_far * 30 - d_far)
    assert dev30 < 1e-4
    ts = np.linspace(0.0, period, 16, endpoint=False)
    tail_dev = np.max(np.abs(sol(30, ts) - c_fit * 30 - (sol(45, 0.0) - c_fit * 45)))
    assert tail_dev < 1e-4  # actual scale |z_1|^30 ~ 1e-7
