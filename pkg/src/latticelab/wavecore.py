"""Fixed-point construction of the exponentially decaying boundary layer.

Writing x_n(t) = c n + sum_m a(n,m) e^{i gamma m t} and splitting
a = u + v + (eps b_m - u(0,m) - v(0,m)) into a travelling-wave part u and a
decaying part v, the Fourier coefficients must satisfy

    v(n-1,m) + delta_m v(n,m) + v(n+1,m) + W(u,v)(n,m) = 0,    n >= 1,

with delta_m = -2 + (m gamma)^2 / F'(-c).  Modes with |delta_m| < 2 are the
resonant ones (|m| <= m0); for them no exponentially decaying solution exists
unless solvability conditions hold, which is what the travelling-wave
parameters are for.  The fixed point v = K Y(u,v) + boundary is contracted
here with the explicit kernel K (tail sums for m = 0, oscillatory sums for
resonant modes, the z_m Green's kernel otherwise).

Nonlinear terms, with alpha_k the Taylor coefficients of F at -c and
Delta u(n,m) = u(n-1,m) - u(n,m):

    W(u)   = (1/alpha_1) sum_{k>=2} (alpha_k/k!) [ (Delta u)^{*k}(n) - (Delta u)^{*k}(n+1) ]
    Y(u,v) = (1/alpha_1) sum_{k>=2} (alpha_k/k!) [ (Delta(u+v))^{*k}(n) - (Delta u)^{*k}(n) ]
    W(u,v) = Y(u,v)(n) - Y(u,v)(n+1)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractionError, DomainError
from .forces import ForceLaw
from .seqspace import Field, SeqW, Weight, forward_difference, mconv_rows


@dataclass
class Resonance:
    """Everything the kernel needs: delta_m, beta_m, z_m, decay rates, bounds."""

    gamma: float
    fprime: float
    m0: int
    weight: Weight = field(default_factory=Weight)
    sigma0: float = 0.0
    sigma1: float = 0.0
    C_K: float = 0.0

    def delta(self, m):
        m = np.asarray(m)
        return -2.0 + (m * self.gamma) ** 2 / self.fprime

    def beta(self, m: int) -> float:
        """Outgoing-wave phase for resonant modes 0 < |m| <= m0."""
        if not 0 < abs(m) <= self.m0:
            raise ConfigurationError("beta_m is defined for resonant modes only")
        return -math.copysign(1.0, m) * math.acos(-float(self.delta(m)) / 2.0)

    def z(self, m: int) -> float:
        """Decaying root (|z| < 1) of z^2 + delta_m z + 1 = 0 for |m| > m0."""
        if abs(m) <= self.m0:
            raise ConfigurationError("z_m is defined for nonresonant modes only")
        d = float(self.delta(m))
        return -d / 2.0 + math.sqrt(d * d / 4.0 - 1.0)


def resonance_data(force: ForceLaw, c: float, gamma: float, weight: Weight = Weight("unit")) -> Resonance:
    """Resonance record for frequency gamma about the uniform state x_n = c n.

    Rejects resonant gamma, i.e. (m gamma)^2 = 4 F'(-c) for some m.
    """
    fp = force.deriv(-c)
    if fp <= 0:
        raise ConfigurationError("need F'(-c) > 0")
    if gamma <= 0:
        raise ConfigurationError("gamma must be positive")
    ratio = 2.0 * math.sqrt(fp) / gamma  # m0 = floor(ratio) unless exactly integer
    m0 = int(math.floor(ratio + 1e-13))
    if abs(ratio - round(ratio)) < 1e-12:
        raise DomainError(f"resonant frequency: (m gamma)^2 = 4 F'(-c) at m = {int(round(ratio))}")
    res = Resonance(gamma=gamma, fprime=fp, m0=m0, weight=weight)
    z_next = abs(res.z(m0 + 1))
    res.sigma0 = min(1.0, -0.5 * math.log(z_next))
    res.sigma1 = res.sigma0 / 4.0
    s0, s1 = res.sigma0, res.sigma1
    nonres = (1 + math.exp(-2 * s0)) / (1 - math.exp(-4 * s0)) * (
        1 / (math.exp(s0) - 1) + 1 / (1 - math.exp(-2 * s0))
    )
    zero_row = 1.0 / (1.0 - math.exp(-s1))
    cand = [nonres, zero_row]
    if m0 >= 1:
        worst = max(1.0 / abs(math.sin(res.beta(m))) for m in range(1, m0 + 1))
        cand.append(2.0 / (1.0 - math.exp(-s1)) * worst)
    res.C_K = max(cand)
    return res


def boundary_mass(u: Field, res: Resonance) -> float:
    """rho_u = sum_{|m| > m0} w(m) |u(0, m)|."""
    ms = u.ms
    mask = np.abs(ms) > res.m0
    return float(np.sum(u.weight(ms[mask]) * np.abs(u.row(0)[mask])))


# ---------------------------------------------------------------------------
# force-law constants


def series_constants(force: ForceLaw, c: float, kmax: int = 60, grid: int = 33):
    """(rho_{F,c}, C~_{F,c}, C_{F,c}, alpha list) from the Taylor data at -c.

    rho is min(1, radius of convergence); C~ is the max over |y| <= rho/2 of
    the three power-series ratios; C = 8 (1 + e) C~ dominates the nonlinear
    bounds for decay rates sigma <= 1.
    """
    alphas = np.array([force.taylor(k, -c) for k in range(kmax + 1)])
    rho = min(1.0, force.taylor_radius(-c))
    a1 = abs(alphas[1])
    if a1 == 0:
        raise ConfigurationError("F'(-c) must be nonzero")
    ys = np.linspace(1e-6, rho / 2.0, grid)
    k = np.arange(2, kmax + 1)
    fact = np.array([math.factorial(int(kk)) for kk in k], dtype=float)
    ratios = []
    for y in ys:
        t0 = np.sum(np.abs(alphas[2:]) / fact * y**k) / a1
        t1 = np.sum(np.abs(alphas[2:]) / (fact / k) * y ** (k - 1)) / a1
        t2 = np.sum(np.abs(alphas[2:]) / (fact / (k * (k - 1))) * y ** (k - 2)) / a1
        ratios.append(max(t0 / y**2, t1 / y, t2))
    c_tilde = float(np.max(ratios))
    return rho, c_tilde, 8.0 * (1.0 + math.e) * c_tilde, alphas


def taylor_truncation(alphas: np.ndarray, scale: float, tol: float = 1e-16) -> int:
    """Largest k needed so |alpha_k/k!| (2 scale)^k stays above tol."""
    kmax = 2
    for k in range(2, len(alphas)):
        if abs(alphas[k]) / math.factorial(k) * (2.0 * max(scale, 1e-30)) ** k > tol:
            kmax = k
    return kmax


# ---------------------------------------------------------------------------
# nonlinear terms


def _series_powers(delta_vals: np.ndarray, kmax: int):
    """Iterated m-convolutions (rows = n) of one Delta-field, orders 1..kmax.

    Windows expand with the order: cropping intermediates would silently drop
    the fold-back of high intermediate modes into the output window.
    """
    powers = [delta_vals]
    mmax_in = (delta_vals.shape[1] - 1) // 2
    for k in range(2, kmax + 1):
        powers.append(mconv_rows(powers[-1], delta_vals, k * mmax_in))
    return powers


def _crop(arr: np.ndarray, mmax: int) -> np.ndarray:
    M = (arr.shape[1] - 1) // 2
    if M <= mmax:
        out = np.zeros((arr.shape[0], 2 * mmax + 1), dtype=arr.dtype)
        out[:, mmax - M : mmax + M + 1] = arr
        return out
    return arr[:, M - mmax : M + mmax + 1]


def _series_sum(powers, alphas, mmax: int):
    out = np.zeros((powers[0].shape[0], 2 * mmax + 1), dtype=complex)
    a1 = alphas[1]
    for k in range(2, len(powers) + 1):
        out += (alphas[k] / math.factorial(k) / a1) * _crop(powers[k - 1], mmax)
    return out


def nonlinear_terms(force: ForceLaw, c: float, u: Field, v: Field | None = None, kmax: int | None = None):
    """(W(u), Y(u,v), W(u,v)) as Fields; v = None means v = 0.

    Rows are valid for n = 0..nmax-1 of the inputs (the n+1 difference loses
    the top row, which is zero-padded).
    """
    rho, _, _, alphas = series_constants(force, c)
    if v is None:
        v = Field.zero(u.nmax, u.mmax, u.weight, u.sigma)
    if u.values.shape != v.values.shape:
        raise ConfigurationError("u and v must share the same (n, m) window")
    nu, nv0 = u.norm(0.0), v.norm(0.0)
    radius = force.taylor_radius(-c)
    if 2.0 * (nu + nv0) >= 0.95 * radius:
        raise ContractionError(
            f"||Delta(u+v)|| ~ {2 * (nu + nv0):.3g} leaves the Taylor domain (radius {radius:.3g})"
        )
    if kmax is None:
        kmax = taylor_truncation(alphas, max(nu + v.norm(0.0), 1e-12))
    kmax = min(kmax, len(alphas) - 1)
    mmax = u.mmax

    du = forward_difference(u).values
    duv = du + forward_difference(v).values
    pu = _series_powers(du, kmax)
    puv = _series_powers(duv, kmax)
    su = _series_sum(pu, alphas, mmax)
    suv = _series_sum(puv, alphas, mmax)

    W_u = np.zeros_like(su)
    W_u[:-1] = su[:-1] - su[1:]
    W_u[0] = 0.0
    Y_uv = suv - su
    Y_uv[0] = 0.0
    W_uv = np.zeros_like(Y_uv)
    W_uv[:-1] = Y_uv[:-1] - Y_uv[1:]
    W_uv[0] = 0.0
    wgt, sig = u.weight, u.sigma
    return (
        Field(W_u, wgt, 0.0),
        Field(Y_uv, wgt, v.sigma),
        Field(W_uv, wgt, v.sigma),
    )


def dY_dv_apply(force: ForceLaw, c: float, u: Field, v: Field, x: Field, kmax: int | None = None) -> Field:
    """Directional derivative (D_v Y)(u,v) x = (1/a1) sum alpha_k/(k-1)! (Delta(u+v))^{*(k-1)} * Delta x."""
    _, _, _, alphas = series_constants(force, c)
    if kmax is None:
        kmax = taylor_truncation(alphas, max(u.norm(0.0) + v.norm(0.0), 1e-12))
    kmax = min(kmax, len(alphas) - 1)
    mmax = u.mmax
    duv = forward_difference(u).values + forward_difference(v).values
    dx = forward_difference(x).values
    # powers[j] = (Delta x) * (Delta(u+v))^{*j}, windows expanding with j
    powers = [dx]
    for j in range(1, kmax):
        powers.append(mconv_rows(powers[-1], duv, (j + 1) * mmax))
    out = np.zeros((dx.shape[0], 2 * mmax + 1), dtype=complex)
    a1 = alphas[1]
    for k in range(2, kmax + 1):
        out += (alphas[k] / math.factorial(k - 1) / a1) * _crop(powers[k - 1], mmax)
    out[0] = 0.0
    return Field(out, u.weight, x.sigma)


# ---------------------------------------------------------------------------
# the kernel K


def kernel_apply(res: Resonance, y: Field) -> Field:
    """Apply K mode-wise to a Y-type field.

    m = 0:           (Ky)(n,0) = -sum_{k > n} y(k,0)
    0 < |m| <= m0:   (Ky)(n,m) = sum_{k > n} [sin((n-k) b) - sin((n+1-k) b)] y(k,m) / sin b
    |m| > m0:        (Ky)(n,m) = sum_{k >= 1} [G(n,k) - G(n,k-1)] y(k,m),
                     G(n,k) = (1 - z^{2 min(n,k)}) z^{|n-k|+1} / (1 - z^2)

    On solutions this realizes the three-term recursion
    (Ky)(n-1,m) + delta_m (Ky)(n,m) + (Ky)(n+1,m) = y(n+1,m) - y(n,m), n >= 1.
    """
    N = y.nmax
    out = np.zeros_like(y.values)
    ns = np.arange(N + 1)
    for col, m in enumerate(y.ms):
        col_vals = y.values[:, col]
        if m == 0:
            out[:, col] = -(np.cumsum(col_vals[::-1])[::-1] - col_vals)
        elif abs(m) <= res.m0:
            b = res.beta(int(m))
            kmat = ns[None, :] - ns[:, None]  # k - n
            kern = np.where(
                kmat >= 1,
                (np.sin(-kmat * b) - np.sin((1 - kmat) * b)) / math.sin(b),
                0.0,
            )
            out[:, col] = kern @ col_vals
        else:
            z = res.z(int(m))
            minnk = np.minimum(ns[:, None], ns[None, :])
            G = (1.0 - z ** (2 * minnk)) / (1.0 - z * z) * z ** (np.abs(ns[:, None] - ns[None, :]) + 1)
            kern = G - np.concatenate([np.zeros((N + 1, 1)), G[:, :-1]], axis=1)
            # k runs from 1; column 0 of the kernel (k = 0) is dropped
            out[:, col] = kern[:, 1:] @ col_vals[1:]
    return Field(out, y.weight, y.sigma)


def _boundary_field(res: Resonance, shape_field: Field, eps: float, b: SeqW, u: Field) -> Field:
    out = Field.zero(shape_field.nmax, shape_field.mmax, shape_field.weight, shape_field.sigma)
    ns = np.arange(out.nmax + 1)
    for col, m in enumerate(out.ms):
        if abs(m) > res.m0:
            z = res.z(int(m))
            out.values[:, col] = (eps * b[int(m)] - u[0, int(m)]) * z**ns
    return out


def solve_v(
    res: Resonance,
    force: ForceLaw,
    c: float,
    u: Field,
    eps: float,
    b: SeqW,
    tol: float = 1e-13,
    max_iter: int = 200,
    enforce_small: bool = False,
) -> Field:
    """Fixed point v = K Y(u, v) + boundary, by direct iteration from v = 0.

    With ``enforce_small`` the theoretical smallness hypotheses
    (||u|| <= c1 = min(1/(4 C_K C_{F,c}), rho/8), rho_u <= c1/4) are enforced
    up front; by default only the measured contraction guards the iteration,
    which is what makes the moderate-amplitude regimes of interest reachable.
    """
    rho, _, C_F, _ = series_constants(force, c)
    if enforce_small:
        c1 = min(1.0 / (4.0 * res.C_K * C_F), rho / 8.0)
        if u.norm(0.0) > c1 or boundary_mass(u, res) > c1 / 4.0 or abs(eps) > c1 / 4.0:
            raise ContractionError(
                f"hypotheses violated: ||u|| = {u.norm(0.0):.3g}, rho_u = {boundary_mass(u, res):.3g}, "
                f"|eps| = {abs(eps):.3g} vs c1 = {c1:.3g}"
            )
    v = Field.zero(u.nmax, u.mmax, u.weight, res.sigma0)
    # Convergence is measured in the unweighted (sigma = 0) norm: the
    # exponential weight e^{sigma0 n} amplifies top-row roundoff by up to
    # e^{sigma0 nmax}, putting the weighted tolerance below the noise floor.
    best = math.inf
    first = None
    stalled = 0
    for it in range(max_iter):
        _, Y, _ = nonlinear_terms(force, c, u, v)
        v_new_vals = kernel_apply(res, Y).values + _boundary_field(res, v, eps, b, u).values
        delta = Field(v_new_vals - v.values, u.weight, 0.0).norm(0.0)
        v = Field(v_new_vals, u.weight, res.sigma0)
        if delta < tol:
            return v
        first = delta if first is None else first
        if delta > max(10.0 * best, first):
            raise ContractionError(
                f"fixed-point iteration diverges (delta {delta:.3e} after best {best:.3e})"
            )
        stalled = stalled + 1 if delta > 0.99 * best else 0
        best = min(best, delta)
        if stalled >= 10:
            raise ContractionError(
                f"fixed-point iteration stopped contracting near delta = {delta:.3e}"
            )
    raise ContractionError(f"fixed point not converged after {max_iter} iterations (last delta {delta:.3e})")


def dv_deps(res: Resonance, force: ForceLaw, c: float, u: Field, v: Field, b: SeqW,
            tol: float = 1e-13, max_iter: int = 200) -> Field:
    """Derivative of the fixed point with respect to eps: y = h + K (D_v Y) y,
    h(n,m) = b_m z_m^n for |m| > m0."""
    h = Field.zero(v.nmax, v.mmax, v.weight, v.sigma)
    ns = np.arange(h.nmax + 1)
    for col, m in enumerate(h.ms):
        if abs(m) > res.m0:
            h.values[:, col] = b[int(m)] * res.z(int(m)) ** ns
    y = h.copy()
    for _ in range(max_iter):
        y_new_vals = h.values + kernel_apply(res, dY_dv_apply(force, c, u, v, y)).values
        delta = Field(y_new_vals - y.values, v.weight, v.sigma).norm()
        y = Field(y_new_vals, v.weight, v.sigma)
        if delta < tol:
            return y
    raise ContractionError("derivative fixed point did not converge")


def mode_residual(res: Resonance, force: ForceLaw, c: float, u: Field, v: Field) -> float:
    """max_n,m | v(n-1,m) + delta_m v(n,m) + v(n+1,m) + W(u,v)(n,m) |, n >= 1.

    Rows near the truncation edge are excluded (v is zero-padded above nmax).
    """
    _, _, Wuv = nonlinear_terms(force, c, u, v)
    delta = res.delta(v.ms)[None, :]
    nhi = v.nmax - 2
    resid = v.values[0 : nhi - 1] + delta * v.values[1:nhi] + v.values[2 : nhi + 1] + Wuv.values[1:nhi]
    return float(np.max(np.abs(resid)))


# ---------------------------------------------------------------------------
# high-frequency solution (m0 = 0)


class PeriodicSolution:
    """Sampler for x_n(t) = c n + const + sum_m a(n,m) e^{i m gamma t}.

    ``coeffs`` holds a(n,m) for n >= 0 with a(0,m) = eps b_m (the driver).
    """

    def __init__(self, c: float, gamma: float, coeffs: Field, const: float = 0.0):
        self.c = c
        self.gamma = gamma
        self.coeffs = coeffs
        self.const = const

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.gamma

    def __call__(self, n, t):
        n = np.asarray(n, dtype=int)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast(n, t).shape
        out = np.zeros(shape, dtype=float)
        ms = self.coeffs.ms
        nb = np.broadcast_to(n, shape)
        tb = np.broadcast_to(t, shape)
        for idx in np.ndindex(shape):
            nn, tt = int(nb[idx]), float(tb[idx])
            row = self.coeffs.row(nn)
            val = np.sum(row * np.exp(1j * self.gamma * ms * tt)).real
            out[idx] = self.c * nn + self.const + val
        return float(out) if out.ndim == 0 else out

    def ode_residual(self, force: ForceLaw, n_lo: int = 1, n_hi: int = 30, nt: int = 64) -> float:
        """sup over a period of | x_n'' - F(x_{n-1}-x_n) + F(x_n-x_{n+1}) |."""
        ts = np.linspace(0.0, self.period, nt, endpoint=False)
        ms = self.coeffs.ms
        worst = 0.0
        for nn in range(n_lo, n_hi + 1):
            row = self.coeffs.row(nn)
            acc = np.array([
                np.sum(row * (-(self.gamma * ms) ** 2) * np.exp(1j * self.gamma * ms * t)).real for t in ts
            ])
            xm = self(nn - 1, ts)
            x0 = self(nn, ts)
            xp = self(nn + 1, ts)
            resid = acc - force(xm - x0) + force(x0 - xp)
            worst = max(worst, float(np.max(np.abs(resid))))
        return worst


def high_freq_solution(force: ForceLaw, c: float, gamma: float, eps: float, b: SeqW,
                       nmax: int = 64, mmax: int | None = None) -> PeriodicSolution:
    """Time-periodic boundary layer for gamma^2 > 4 F'(-c) (no travelling wave)."""
    res = resonance_data(force, c, gamma, b.weight if isinstance(b.weight, Weight) else Weight("unit"))
    if res.m0 != 0:
        raise ConfigurationError(
            f"m0 = {res.m0} > 0: resonant modes present; use the one-phase or g-gap constructions"
        )
    mmax = mmax if mmax is not None else max(4 * b.mmax, 8)
    u = Field.zero(nmax, mmax, b.weight if isinstance(b.weight, Weight) else Weight("unit"), 0.0)
    bb = b.resize(mmax)
    v = solve_v(res, force, c, u, eps, bb)
    coeffs = Field(v.values.copy(), v.weight, 0.0)
    # a(n,m) = v(n,m) for m != 0; a(n,0) = v(n,0) + eps b_0 - v(0,0); a(0,m) = eps b_m
    const = (eps * bb[0] - v[0, 0]).real
    coeffs.values[0, :] = eps * bb.data
    coeffs.values[1:, coeffs.mmax] += const
    return PeriodicSolution(c, gamma, coeffs)
