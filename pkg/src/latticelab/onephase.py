"""Two-parameter family of one-phase travelling waves for a general force law,
valid in the window F'(-c) < gamma^2 < 4 F'(-c) (one resonant mode).

Ansatz x_n(t) = c n + sum_m r(m) e^{i m (beta n + gamma t)} turns the lattice
equation into  Lambda(beta) r + W~(r) = 0  with the diagonal symbol
Lambda(beta, m) = 2 cos(beta m) + delta_m and the nonlinearity

    W~(r)(m) = (1 - e^{i beta m}) (1/a1) sum_{k>=2} (a_k/k!) (Delta r)^{*k}(m),
    Delta r(m) = (e^{-i beta m} - 1) r(m).

Lyapunov-Schmidt: the |m| > 1 part is solved by contraction (Lambda is
invertible there), and the m = 1 equation fixes beta = beta(|q|) near beta_1.
The wave is parameterized by q in R^2 through r(1) = (q1 + i q2)/2;
rotations T_xi r(m) = e^{i xi m} r(m) are time translations of the wave.

Coefficients live in l_{1,w~} with the relaxed weight w~(m) = w(m)(1+|m|)^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractionError, SolverError
from .forces import ForceLaw
from .seqspace import Field, SeqW, Weight
from .wavecore import (
    PeriodicSolution,
    Resonance,
    boundary_mass,
    resonance_data,
    series_constants,
    solve_v,
    taylor_truncation,
)


def lambda_op(beta: float, res: Resonance, m) -> float:
    """Diagonal symbol Lambda(beta, m) = 2 cos(beta m) + delta_m."""
    m = np.asarray(m)
    out = 2.0 * np.cos(beta * m) + res.delta(m)
    return float(out) if out.ndim == 0 else out


def tilde_W(force: ForceLaw, c: float, beta: float, r: SeqW, kmax: int | None = None) -> SeqW:
    """Nonlinearity of the travelling-wave equation (same Taylor data as W)."""
    rho, _, _, alphas = series_constants(force, c)
    nrm = r.norm()
    radius = force.taylor_radius(-c)
    if 2.0 * float(np.sum(np.abs(r.data))) >= 0.95 * radius:
        raise ContractionError(f"||r|| = {nrm:.3g} leaves the Taylor domain")
    ms = r.ms
    dr = (np.exp(-1j * beta * ms) - 1.0) * r.data
    if kmax is None:
        kmax = taylor_truncation(alphas, max(float(np.sum(np.abs(dr))), 1e-12))
    kmax = min(kmax, len(alphas) - 1)
    mmax = r.mmax
    out = np.zeros(2 * mmax + 1, dtype=complex)
    power = dr.copy()  # window expands with the order; crop only per term
    a1 = alphas[1]
    for k in range(2, kmax + 1):
        power = np.convolve(power, dr)
        M = (power.size - 1) // 2
        lo = min(M, mmax)
        term = np.zeros(2 * mmax + 1, dtype=complex)
        term[mmax - lo : mmax + lo + 1] = power[M - lo : M + lo + 1]
        out += (alphas[k] / math.factorial(k) / a1) * term
    out *= 1.0 - np.exp(1j * beta * ms)
    return SeqW(out, weight=r.weight)


def _phi(q, mmax: int, weight) -> SeqW:
    out = SeqW.zero(mmax, weight)
    out[1] = 0.5 * (q[0] + 1j * q[1])
    out[-1] = 0.5 * (q[0] - 1j * q[1])
    return out


def rotate(r: SeqW, xi: float) -> SeqW:
    """T_xi r(m) = e^{i xi m} r(m)."""
    return SeqW(np.exp(1j * xi * r.ms) * r.data, weight=r.weight)


def mu_fixed_point(
    force: ForceLaw,
    c: float,
    res: Resonance,
    beta: float,
    q,
    mmax: int = 32,
    weight=None,
    tol: float = 1e-14,
    max_iter: int = 200,
) -> SeqW:
    """Solve Lambda(beta) mu + P W~(phi(q) + mu) = 0 on |m| > 1 by contraction.

    P projects onto |m| > 1; the iteration is mu <- -Lambda^{-1} P W~(phi+mu).
    """
    if res.m0 != 1:
        raise ConfigurationError("one-phase construction requires m0 = 1")
    weight = weight if weight is not None else res.weight.times_msq()
    phi = _phi(q, mmax, weight)
    ms = phi.ms
    lam = lambda_op(beta, res, ms)
    outer = np.abs(ms) > 1
    mu = SeqW.zero(mmax, weight)
    prev = None
    for it in range(max_iter):
        w = tilde_W(force, c, beta, phi + mu)
        new_data = np.zeros_like(mu.data)
        new_data[outer] = -w.data[outer] / lam[outer]
        delta = float(np.sum(np.abs(new_data - mu.data) * np.asarray(weight(ms))))
        mu = SeqW(new_data, weight=weight)
        if delta < tol:
            return mu
        if prev is not None and prev > 10 * tol and delta / prev >= 1.0 and it >= 3:
            raise ContractionError(f"mu iteration stopped contracting (|q| = {np.hypot(*q):.3g})")
        prev = delta
    raise ContractionError("mu fixed point did not converge")


def _reduced_g(force: ForceLaw, c: float, res: Resonance, beta: float, p: float, mmax: int) -> float:
    """g(beta, p) = (2 cos beta + delta_1) p/2 + Im-part of W~ at m = 1, on the
    imaginary slice q = (0, p) where every term is purely imaginary."""
    mu = mu_fixed_point(force, c, res, beta, (0.0, p), mmax)
    w = tilde_W(force, c, beta, _phi((0.0, p), mmax, mu.weight) + mu)
    val = lambda_op(beta, res, 1) * (1j * p / 2.0) + w[1]
    return float(val.imag)  # val/i reported; real part vanishes on this slice


def solve_beta(
    force: ForceLaw,
    c: float,
    res: Resonance,
    q,
    mmax: int = 32,
    tol: float = 1e-13,
    max_iter: int = 60,
) -> float:
    """Spatial frequency beta(q) near beta_1 solving the reduced m = 1 equation.

    beta depends on |q| only; Newton from beta_1 with a finite-difference
    derivative (its leading term is -sin(beta_1) p != 0).
    """
    p = float(np.hypot(*q))
    beta1 = res.beta(1)
    if p == 0.0:
        return beta1
    beta = beta1
    for _ in range(max_iter):
        g0 = _reduced_g(force, c, res, beta, p, mmax)
        if abs(g0) < tol * max(p, 1e-6):
            return beta
        h = 1e-7
        g1 = _reduced_g(force, c, res, beta + h, p, mmax)
        dg = (g1 - g0) / h
        if dg == 0.0:
            raise SolverError("degenerate reduced equation", diagnostics={"dbeta_g": 0.0})
        beta -= g0 / dg
    raise SolverError(
        "beta Newton did not converge",
        diagnostics={"dbeta_g_estimate": dg, "expected_leading": -math.sin(beta1) * p},
    )


@dataclass
class TravellingWave:
    """One-phase wave x_n(t) = c n + sum_m r(m) e^{i m (beta n + gamma t)}."""

    c: float
    gamma: float
    beta: float
    q: tuple
    r: SeqW

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.gamma

    def __call__(self, n, t):
        n = np.asarray(n)
        t = np.asarray(t, dtype=float)
        ms = self.r.ms
        shape = np.broadcast(n, t).shape
        nb, tb = np.broadcast_to(n, shape), np.broadcast_to(t, shape)
        out = np.zeros(shape, dtype=float)
        for idx in np.ndindex(shape):
            phase = np.exp(1j * ms * (self.beta * float(nb[idx]) + self.gamma * float(tb[idx])))
            out[idx] = self.c * float(nb[idx]) + np.sum(self.r.data * phase).real
        return float(out) if out.ndim == 0 else out

    def as_field(self, nmax: int, mmax: int | None = None, weight=None, sigma: float = 0.0) -> Field:
        """u(q)(n,m) = r(m) e^{i m n beta} as a Field for the boundary matching."""
        mmax = mmax if mmax is not None else self.r.mmax
        weight = weight if weight is not None else Weight("unit")
        rr = self.r.resize(mmax)
        ns = np.arange(nmax + 1)
        vals = rr.data[None, :] * np.exp(1j * rr.ms[None, :] * self.beta * ns[:, None])
        return Field(vals, weight, sigma)

    def ode_residual(self, force: ForceLaw, n_lo: int = -10, n_hi: int = 10, nt: int = 48) -> float:
        """sup | x_n'' - F(x_{n-1}-x_n) + F(x_n-x_{n+1}) | on the doubly infinite lattice."""
        ts = np.linspace(0.0, 2 * math.pi / self.gamma, nt, endpoint=False)
        ms = self.r.ms
        worst = 0.0
        for nn in range(n_lo, n_hi + 1):
            phase = np.exp(1j * ms[None, :] * (self.beta * nn + self.gamma * ts[:, None]))
            acc = (phase * (-(self.gamma * ms) ** 2)[None, :] * self.r.data[None, :]).sum(axis=1).real
            xm = self(nn - 1, ts)
            x0 = self(nn, ts)
            xp = self(nn + 1, ts)
            resid = acc - force(xm - x0) + force(x0 - xp)
            worst = max(worst, float(np.max(np.abs(resid))))
        return worst


def build_wave(force: ForceLaw, c: float, gamma: float, q, mmax: int = 32, weight=None) -> TravellingWave:
    """Wave for parameter q in R^2: solve on the slice (0, |q|), rotate back."""
    res = resonance_data(force, c, gamma, weight or Weight("unit"))
    if res.m0 != 1:
        raise ConfigurationError(f"one-phase window needs m0 = 1, got m0 = {res.m0}")
    p = float(np.hypot(*q))
    beta = solve_beta(force, c, res, q, mmax)
    mu = mu_fixed_point(force, c, res, beta, (0.0, p), mmax)
    r_slice = _phi((0.0, p), mmax, mu.weight) + mu
    if p == 0.0:
        return TravellingWave(c, gamma, beta, tuple(q), r_slice)
    # q = T_xi (0, p): phi(q)(1) = (q1 + i q2)/2 = e^{i xi} (i p / 2)
    xi = math.atan2(float(q[1]), float(q[0])) - math.pi / 2.0
    r = rotate(r_slice, xi)
    return TravellingWave(c, gamma, beta, tuple(q), r)


def wave_from_coefficients(force: ForceLaw, c: float, gamma: float, s: SeqW, mmax: int = 32) -> TravellingWave:
    """Corollary-style reconstruction: q = 2 (Re s(1), Im s(1)) rebuilds the wave."""
    q = (2.0 * s[1].real, 2.0 * s[1].imag)
    return build_wave(force, c, gamma, q, mmax)


def energy_flux(force: ForceLaw, c: float, wave: TravellingWave, nt: int = 256) -> float:
    """E = -int over a period of F(x_0 - x_1) x_0' dt ; E < 0 means energy
    flows outward (from particle 0 to particle 1)."""
    ts = np.linspace(0.0, 2 * math.pi / wave.gamma, nt, endpoint=False)
    ms = wave.r.ms
    x0 = wave(0, ts)
    x1 = wave(1, ts)
    v0 = np.array([
        np.sum(wave.r.data * (1j * wave.gamma * ms) * np.exp(1j * ms * wave.gamma * t)).real for t in ts
    ])
    integrand = -force(x0 - x1) * v0
    return float(np.mean(integrand) * 2 * math.pi / wave.gamma)


def energy_flux_leading(force: ForceLaw, c: float, wave: TravellingWave) -> float:
    """Second-order formula 4 pi alpha_1 |r(1)|^2 sin(beta)."""
    return 4.0 * math.pi * force.deriv(-c) * abs(wave.r[1]) ** 2 * math.sin(wave.beta)


def boundary_match(
    force: ForceLaw,
    c: float,
    gamma: float,
    eps: float,
    b: SeqW,
    nmax: int = 64,
    mmax: int = 32,
    tol: float = 1e-12,
    max_iter: int = 40,
):
    """Match the wave family to the driver: solve eps b_1 = u(q)(0,1) + v(q,eps)(0,1).

    Newton in q in R^2 with leading Jacobian -(1/2) Id; returns
    (q, beta, PeriodicSolution) with a(n,m) = (u+v)(n,m) + const at m = 0.
    """
    res = resonance_data(force, c, gamma, Weight("unit"))
    if res.m0 != 1:
        raise ConfigurationError(f"boundary matching here needs m0 = 1, got {res.m0}")
    bb = b.resize(mmax)
    q = np.zeros(2)
    wave = None
    v = None
    for it in range(max_iter):
        wave = build_wave(force, c, gamma, q, mmax)
        u = wave.as_field(nmax, mmax)
        v = solve_v(res, force, c, u, eps, bb)
        g = eps * bb[1] - v[0, 1] - u[0, 1]
        if abs(g) < tol:
            break
        q = q + 2.0 * np.array([g.real, g.imag])  # Newton with D_q g = -Id/2
    else:
        raise SolverError(f"boundary matching Newton stalled (|g| = {abs(g):.3e}); eps too large?")
    u = wave.as_field(nmax, mmax)
    coeffs = Field(u.values + v.values, u.weight, 0.0)
    const = (eps * bb[0] - u[0, 0] - v[0, 0]).real
    coeffs.values[1:, coeffs.mmax] += const
    coeffs.values[0, :] = eps * bb.data
    sol = PeriodicSolution(c, gamma, coeffs)
    return tuple(q), wave.beta, sol, wave
