"""Hyperelliptic g-gap solutions of the doubly infinite Toda lattice.

The spectral curve has branch points a < l_1 - p_1 < l_1 + p_1 < ... < b
(curve coordinates; the Lax spectrum is E/2).  Writing
R(E) = (E-a)(E-b) prod_j ((E-l_j)^2 - p_j^2), the solution is

    x_n(t) = c n + ln[ th(U/2 - Z) th((n-1/2)U + tV - Z) ]
                 - ln[ th(-U/2 - Z) th((n+1/2)U + tV - Z) ],

where pi*i*tau = diag(ln p_k) + tau_reg and all of tau_reg, U, V, Z are real.
Time periodicity with frequency gamma, mean spacing c and zero mean drift
pin the curve parameters through

    V = -(gamma/2pi) (1, ..., g),    I(a,b,l,p) = c,    R(a,b,l,p) = 0,

solved by a nested Newton with the p -> 0 closed forms as seeds:
l_j0 = (a+b)/2 - sqrt(((b-a)/2)^2 - j^2 gamma^2),  b0 = a + 4 e^{-c/2},
a0 = -2 e^{-c/2}.

Conventions.  All period quantities are computed by real-axis quadrature
(upper sheet, positive root for E > b); with that path U lands in (0, 1)
component-wise.  The shifted branch U - 1 (which is what makes
sin(pi U_m(0)) = -2 m gamma / (b-a) < 0 and -2 pi U_m(0) in (pi, 2 pi),
the outgoing-energy direction) is exposed as ``U_shifted``; switching branch
is the same relabelling as shifting the divisor phase Z_m by 1/2, so the
lattice solution itself does not depend on the choice.

Quadratures: gap integrals use Gauss-Chebyshev in E = l_k + p_k cos(theta);
band integrals split off the arccosh log singularities at the gap edges
exactly (so every regular part is even in each p_k and finite at p_k = 0);
integrals over (b, inf) use E = b + L u^2/(1-u)^2 which absorbs the edge
square root and the 1/E^2 tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SolverError
from .forces import ForceLaw
from .seqspace import Field, SeqW, Weight
from .wavecore import PeriodicSolution, resonance_data, solve_v

_GC_CACHE: dict = {}
_GL_CACHE: dict = {}


def _cheb(n: int):
    """Gauss-Chebyshev nodes/weights for int_-1^1 f(s)/sqrt(1-s^2) ds."""
    if n not in _GC_CACHE:
        i = np.arange(1, n + 1)
        _GC_CACHE[n] = (np.cos((2 * i - 1) * np.pi / (2 * n)), np.pi / n)
    return _GC_CACHE[n]


def _gl(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


@dataclass
class CurveParams:
    a: float
    b: float
    lam: np.ndarray  # gap centers l_1 < ... < l_g

    def __post_init__(self):
        self.lam = np.atleast_1d(np.asarray(self.lam, dtype=float))

    @property
    def g(self) -> int:
        return self.lam.size


@dataclass
class Periods:
    tau_reg: np.ndarray  # g x g
    U: np.ndarray        # raw branch, components in (0, 1)
    V: np.ndarray
    h: np.ndarray
    I: float
    R: float

    @property
    def U_shifted(self) -> np.ndarray:
        return self.U - 1.0


@dataclass
class GapConfig:
    """User-facing parameter set of a time periodic g-gap solution."""

    gamma: float
    c: float
    p: np.ndarray                    # half-widths, >= 0
    z_phase: np.ndarray              # divisor phases in [0, 1)
    def __post_init__(self):
        self.p = np.atleast_1d(np.asarray(self.p, dtype=float))
        self.z_phase = np.atleast_1d(np.asarray(self.z_phase, dtype=float)) % 1.0
        if self.p.size != self.z_phase.size:
            raise ConfigurationError("p and z_phase must have matching length g")
        if np.any(self.p < 0):
            raise ConfigurationError("gap half-widths must be nonnegative")

    @property
    def g(self) -> int:
        return self.p.size


def check_frequency_window(g: int, gamma: float, c: float):
    lhs, mid, rhs = g * gamma, 2.0 * math.exp(-c / 2.0), (g + 1) * gamma
    if not lhs < mid < rhs:
        raise ConfigurationError(
            f"frequency window violated: need g*gamma < 2 e^(-c/2) < (g+1)*gamma, "
            f"got {lhs:.6g} < {mid:.6g} < {rhs:.6g}"
        )


def _ej_factory(lam: np.ndarray):
    """e_j(E) = prod_{m != j} (E - l_m)/(l_j - l_m), vectorized over E."""
    g = lam.size

    def ej(j: int, E):
        E = np.asarray(E, dtype=float)
        out = np.ones_like(E)
        for m in range(g):
            if m != j:
                out = out * (E - lam[m]) / (lam[j] - lam[m])
        return out

    return ej


def _h_vector(cp: CurveParams, p: np.ndarray) -> np.ndarray:
    g = cp.g
    h = np.empty(g)
    for k in range(g):
        val = 1.0 / math.sqrt((cp.lam[k] - cp.a) * (cp.b - cp.lam[k]))
        for m in range(g):
            if m != k:
                val /= math.sqrt((cp.lam[k] - cp.lam[m]) ** 2 - p[m] ** 2)
        h[k] = val
    return h


def _gap_rest(cp: CurveParams, p: np.ndarray, k: int, E):
    """sqrt(rest) with R = (p_k^2 - (E-l_k)^2) * rest on gap k; rest > 0 there."""
    E = np.asarray(E, dtype=float)
    rest = (E - cp.a) * (cp.b - E)
    for m in range(cp.g):
        if m != k:
            rest = rest * ((E - cp.lam[m]) ** 2 - p[m] ** 2)
    return np.sqrt(rest)


def elementary_integrals(cp: CurveParams, p: np.ndarray, n_nodes: int = 64):
    """(A~, B~_reg, h) with the log singularities of B~ split off analytically.

    A~_{k,j}  = int over gap k of e_j/sqrt|R|        (Gauss-Chebyshev)
    B~_{k,j}  = int over band k of e_j/sqrt|R|
              = d_{k,j} h_k ln(1/p_k) + d_{k-1,j} h_{k-1} ln(1/p_{k-1}) + B~reg_{k,j}
    Every returned quantity is finite at p_k = 0 and even in each p_k.
    """
    g = cp.g
    p = np.abs(np.asarray(p, dtype=float))  # formal even extension
    lam, a, b = cp.lam, cp.a, cp.b
    if g == 0:
        return np.zeros((0, 0)), np.zeros((0, 0)), np.zeros(0)
    edges_ok = a < lam[0] - p[0]
    for k in range(g - 1):
        edges_ok &= lam[k] + p[k] < lam[k + 1] - p[k + 1]
    edges_ok &= lam[-1] + p[-1] < b
    if not edges_ok:
        raise ConfigurationError("bands degenerate or overlapping for these (a, b, lam, p)")
    ej = _ej_factory(lam)
    h = _h_vector(cp, p)

    s_nodes, s_w = _cheb(n_nodes)
    A = np.empty((g, g))
    for k in range(g):
        E = lam[k] + p[k] * s_nodes
        rest = _gap_rest(cp, p, k, E)
        for j in range(g):
            A[k, j] = s_w * np.sum(ej(j, E) / rest)

    def f_sing(j: int, sing: int, E):
        """e_j(E)/sqrt|R| with the gap-``sing`` factor removed (smooth there)."""
        E = np.asarray(E, dtype=float)
        val = ej(j, E) / np.sqrt((E - a) * (b - E))
        for m in range(g):
            if m != sing:
                val = val / np.sqrt((E - lam[m]) ** 2 - p[m] ** 2)
        return val

    x_gl, w_gl = _gl(n_nodes)
    Breg = np.zeros((g, g))
    for k in range(g):  # band k = [lo, hi]
        lo = a if k == 0 else lam[k - 1] + p[k - 1]
        hi = lam[k] - p[k]
        d = 0.5 * (lo + hi)
        for j in range(g):
            total = 0.0
            # top half [d, hi]: log singularity at l_k
            fk_at = h[k] if j == k else 0.0  # f_sing(j, k, l_k) = e_j(l_k) h_k
            lam_d = lam[k] - d
            total += fk_at * (math.log(2.0 * lam_d) + math.log(0.5 + math.sqrt(0.25 - p[k] ** 2 / (4 * lam_d**2))))
            w_top = math.sqrt(lam_d**2 - p[k] ** 2)
            s = 0.5 * (x_gl + 1.0) * w_top
            E = lam[k] - np.sqrt(s**2 + p[k] ** 2)
            ftil = (f_sing(j, k, E) - fk_at) / (E - lam[k])
            total += -np.sum(ftil * w_gl) * w_top / 2.0
            # bottom half [lo, d]
            if k == 0:
                # plain 1/sqrt(E-a) edge: E = a + (d-a) u^2
                u = 0.5 * (x_gl + 1.0)
                E = a + (d - a) * u**2
                grest = np.sqrt((b - E) * np.prod((E[None, :].T - lam[None, :]) ** 2 - p[None, :] ** 2, axis=1))
                total += 2.0 * math.sqrt(d - a) * np.sum(ej(j, E) / grest * w_gl) / 2.0
            else:
                fk1_at = h[k - 1] if j == k - 1 else 0.0
                d_lam = d - lam[k - 1]
                total += fk1_at * (
                    math.log(2.0 * d_lam) + math.log(0.5 + math.sqrt(0.25 - p[k - 1] ** 2 / (4 * d_lam**2)))
                )
                w_bot = math.sqrt(d_lam**2 - p[k - 1] ** 2)
                s = 0.5 * (x_gl + 1.0) * w_bot
                E = lam[k - 1] + np.sqrt(s**2 + p[k - 1] ** 2)
                ftil = (f_sing(j, k - 1, E) - fk1_at) / (E - lam[k - 1])
                total += np.sum(ftil * w_gl) * w_bot / 2.0
            Breg[k, j] = total
    return A, Breg, h


def _tail_nodes(b: float, scale: float, n: int):
    x, w = _gl(n)
    u = 0.5 * (x + 1.0)
    E = b + scale * u**2 / (1.0 - u) ** 2
    dE = scale * 2.0 * u / (1.0 - u) ** 3 * (w / 2.0)
    return E, dE


def _sqrtR_above_b(cp: CurveParams, p: np.ndarray, E):
    out = np.sqrt((E - cp.a) * (E - cp.b))
    for m in range(cp.g):
        out = out * np.sqrt((E - cp.lam[m]) ** 2 - p[m] ** 2)
    return out


def periods(cp: CurveParams, p: np.ndarray, n_nodes: int = 64, n_tail: int = 96) -> Periods:
    """tau_reg, U (raw branch), V, h, I, R for curve (a, b, lam) with half-widths p."""
    g = cp.g
    p = np.abs(np.asarray(p, dtype=float))  # all period quantities are even in p
    A, Breg, h = elementary_integrals(cp, p, n_nodes)
    sgn = np.array([(-1.0) ** (g - 1 - k) for k in range(g)])  # (-1)^(g-k), k = 1..g
    ej = _ej_factory(cp.lam)

    Ct = np.linalg.inv(A) if g else np.zeros((0, 0))
    cond = np.linalg.cond(A) if g else 1.0
    if cond > 1e12:
        raise SolverError(f"gap-integral matrix ill conditioned (cond = {cond:.3e}); bands nearly touching")
    Cho = Ct - (np.diag(1.0 / (np.pi * h)) if g else Ct)

    # tau_reg = pi diag(sgn h ln|p|) Cho diag(sgn) - pi Lones diag(sgn) Breg C diag(sgn)
    if g:
        lones = np.tril(np.ones((g, g)))
        lnp = np.array([math.log(abs(pk)) if pk != 0 else 0.0 for pk in p])
        t1 = np.pi * np.diag(sgn * h * lnp) @ Cho @ np.diag(sgn)
        t1[p == 0.0, :] = 0.0  # Cho rows vanish at p_k = 0 faster than ln p diverges
        t2 = -np.pi * lones @ np.diag(sgn) @ Breg @ Ct @ np.diag(sgn)
        tau_reg = t1 + t2
    else:
        tau_reg = np.zeros((0, 0))

    # U_k = (1/2) sgn_k sum_j C_{jk} * 2 int_b^inf e_j/sqrtR
    E_t, dE_t = _tail_nodes(cp.b, max(cp.b - cp.a, 1.0), n_tail)
    sqR = _sqrtR_above_b(cp, p, E_t)
    Ivec = np.array([np.sum(ej(j, E_t) / sqR * dE_t) for j in range(g)])
    U = 0.5 * sgn * (Ct.T @ (2.0 * Ivec)) if g else np.zeros(0)

    # V_k = -(1/2) sgn_k sum_j C_{jk} g_j,  g_j = prod_{m != j} 1/(l_j - l_m)
    gvec = np.empty(g)
    for j in range(g):
        val = 1.0
        for m in range(g):
            if m != j:
                val /= cp.lam[j] - cp.lam[m]
        gvec[j] = val
    V = -0.5 * sgn * (Ct.T @ gvec) if g else np.zeros(0)

    # I and R: tail integrands rewritten as exact differences to avoid the
    # catastrophic cancellation of (ratio - 1) at the far nodes.
    P = np.polynomial.polynomial
    s_mid = 0.5 * (cp.a + cp.b)
    polyQ = P.polyfromroots(cp.lam) if g else np.array([1.0])
    polyT = np.array([1.0])
    for j in range(g):
        polyT = P.polymul(polyT, np.array([cp.lam[j] ** 2 - p[j] ** 2, -2.0 * cp.lam[j], 1.0]))
    polyAB = P.polyfromroots([cp.a, cp.b])
    polyR = P.polymul(polyAB, polyT)

    T_t = np.sqrt(P.polyval(E_t, polyT))
    Q_t = P.polyval(E_t, polyQ)
    sqrtAB = np.sqrt(P.polyval(E_t, polyAB))
    # phi1 - 1/sqrt((E-a)(E-b)) = (Q - T) / (sqrtAB * T),  Q - T = (Q^2 - T^2)/(Q + T)
    D2 = P.polysub(P.polymul(polyQ, polyQ), polyT)
    J2 = float(np.sum(P.polyval(E_t, D2) / (Q_t + T_t) / (sqrtAB * T_t) * dE_t))
    # gap moments of omega0^(1) and omega0^(2)
    w1 = np.zeros(g)
    w2 = np.zeros(g)
    s_nodes, s_w = _cheb(n_nodes)
    for k in range(g):
        E = cp.lam[k] + p[k] * s_nodes
        rest = _gap_rest(cp, p, k, E)
        num = np.ones_like(E)
        for m in range(g):
            num = num * (E - cp.lam[m])
        ghat = s_w * np.sum(num / rest)          # int gap_k prod(E-l)/sqrt|R|
        hhat = s_w * np.sum((E - 0.5 * (cp.a + cp.b)) * num / (2.0 * rest))
        w1[k] = -2.0 * sgn[k] * ghat
        w2[k] = -2.0 * sgn[k] * hhat
    I_val = -2.0 * math.log((cp.b - cp.a) / 4.0) + 2.0 * J2 + float(w1 @ U)
    # lim (-4 int_b^E omega0^(2) - 2E) = 2 int_b^inf (2 phi2 - 1) - 2b, with
    # 2 phi2 - 1 = ((E-s) Q - sqrtR)/sqrtR and (E-s) Q - sqrtR = D1/((E-s) Q + sqrtR)
    polyEs = np.array([-s_mid, 1.0])
    polyEsQ = P.polymul(polyEs, polyQ)
    D1 = P.polysub(P.polymul(polyEsQ, polyEsQ), polyR)
    sqrtR_t = sqrtAB * T_t
    EsQ_t = P.polyval(E_t, polyEsQ)
    R_int = float(np.sum(P.polyval(E_t, D1) / (EsQ_t + sqrtR_t) / sqrtR_t * dE_t))
    R_val = 2.0 * R_int - 2.0 * cp.b + 2.0 * float(w2 @ U)
    return Periods(tau_reg=tau_reg, U=U, V=V, h=h, I=I_val, R=R_val)


# ---------------------------------------------------------------------------
# parameter solves


def _lambda_seed(a: float, b: float, gamma: float, g: int) -> np.ndarray:
    disc = ((b - a) / 2.0) ** 2 - (np.arange(1, g + 1) * gamma) ** 2
    if np.any(disc <= 0):
        raise ConfigurationError("frequency window leaves no room for the gap centers")
    return (a + b) / 2.0 - np.sqrt(disc)


def _clip_lambda(lam, a, b, p):
    """Keep gap edges strictly inside (a, b) and non-overlapping."""
    lam = lam.copy()
    lo = a
    for j in range(lam.size):
        floor = lo + p[j] * 1.001
        if lam[j] < floor:
            lam[j] = floor
        lo = lam[j] + p[j]
    if lo >= b:
        raise SolverError("gap centers cannot be kept inside the band span")
    return lam


def _solve_lambda(a, b, gamma, p, g, n_nodes, lam0=None, tol=1e-12, max_iter=60):
    lam = _lambda_seed(a, b, gamma, g) if lam0 is None else np.asarray(lam0, dtype=float).copy()
    lam = _clip_lambda(lam, a, b, np.abs(p))
    target = -(gamma / (2.0 * np.pi)) * np.arange(1, g + 1)

    def resid(l):
        return periods(CurveParams(a, b, l), p, n_nodes).V - target

    r = resid(lam)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            return lam
        J = np.empty((g, g))
        step = 1e-6 * max(b - a, 1.0)
        for j in range(g):
            lp = lam.copy()
            lp[j] += step
            J[:, j] = (resid(lp) - r) / step
        lam = _clip_lambda(lam - np.linalg.solve(J, r), a, b, np.abs(p))
        r = resid(lam)
    raise SolverError("inner Newton (gap centers from the V-condition) did not converge",
                      diagnostics={"residual": r.tolist()})


def _solve_b(a, gamma, c, p, g, n_nodes, b0=None, lam0=None, tol=1e-11, max_iter=60):
    b = a + 4.0 * math.exp(-c / 2.0) if b0 is None else b0
    lam_seed = lam0

    def resid(bv):
        lam = _solve_lambda(a, bv, gamma, p, g, n_nodes, lam0=lam_seed)
        return periods(CurveParams(a, bv, lam), p, n_nodes).I - c, lam

    r, lam = resid(b)
    for _ in range(max_iter):
        if abs(r) < tol:
            return b, lam
        lam_seed = lam
        step = 1e-6 * max(abs(b - a), 1.0)
        r2, _ = resid(b + step)
        b = b - r / ((r2 - r) / step)
        r, lam = resid(b)
    raise SolverError("middle Newton (outer edge b from I = c) did not converge",
                      diagnostics={"residual": r})


def _solve_stage(g, gamma, c, p, n_nodes, seeds, tol, max_iter):
    a, b0, lam0 = seeds

    def resid(av):
        b, lam = _solve_b(av, gamma, c, p, g, n_nodes, b0=b0, lam0=lam0)
        return periods(CurveParams(av, b, lam), p, n_nodes).R, CurveParams(av, b, lam)

    r, cp = resid(a)
    for _ in range(max_iter):
        if abs(r) < tol:
            return cp
        step = 1e-6 * max(abs(a), 1.0)
        r2, _ = resid(a + step)
        a = a - r / ((r2 - r) / step)
        r, cp = resid(a)
    raise SolverError("outer Newton (a from R = 0) did not converge", diagnostics={"residual": r})


def solve_params(g: int, gamma: float, c: float, p, n_nodes: int = 64,
                 tol: float = 1e-10, max_iter: int = 60) -> tuple[CurveParams, Periods]:
    """Pin (a, b, lam) so the g-gap solution is gamma-periodic with spacing c.

    Nested Newton: lam from the V-condition, b from I = c, a from R = 0.
    For sizeable gaps the solve is continued in p (ramped from 0) so every
    Newton iterate keeps a valid band ordering.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if p.size != g:
        raise ConfigurationError("p must have length g")
    check_frequency_window(g, gamma, c)
    if g == 0:
        cp = CurveParams(-2.0 * math.exp(-c / 2.0), 2.0 * math.exp(-c / 2.0), np.zeros(0))
        return cp, periods(cp, p)

    a0 = -2.0 * math.exp(-c / 2.0)
    seeds = (a0, None, None)
    pmax = float(np.max(np.abs(p)))
    n_stage = 1 if pmax < 0.1 else int(math.ceil(pmax / 0.1))
    cp = None
    for stage in range(1, n_stage + 1):
        frac = stage / n_stage
        cp = _solve_stage(g, gamma, c, p * frac, n_nodes, seeds, tol, max_iter)
        seeds = (cp.a, cp.b, cp.lam)
    per = periods(cp, p, n_nodes)
    return cp, per


# ---------------------------------------------------------------------------
# theta function and the lattice solution


class ThetaData:
    """Frozen data for evaluating th(v | tau) in the p^(l^2) form.

    th(v) = sum_l prod_k p_k^{l_k^2} exp(<l, tau_reg l>) exp(2 pi i <l, v>),
    truncated to |l_k| <= L with the tail monitored via the largest dropped
    shell term; L auto-escalates until the bound is below ``tail_tol``.
    """

    def __init__(self, p: np.ndarray, tau_reg: np.ndarray, L: int = 6, tail_tol: float = 1e-12):
        self.p = np.asarray(p, dtype=float)
        if np.any(self.p >= 1.0):
            raise ConfigurationError("theta series requires all p_k < 1")
        self.tau_reg = np.asarray(tau_reg, dtype=float)
        g = self.p.size
        for L_try in (L, L + 2, L + 4, L + 6):
            grid = np.stack(np.meshgrid(*([np.arange(-L_try, L_try + 1)] * g), indexing="ij"), axis=-1).reshape(-1, g) if g else np.zeros((1, 0), dtype=int)
            amp = np.array([
                (np.prod(self.p ** (l**2)) if g else 1.0) * math.exp(float(l @ self.tau_reg @ l) if g else 0.0)
                for l in grid
            ])
            keep = amp > 0.0
            self.grid = grid[keep]
            self.amp = amp[keep]
            shell = np.abs(self.grid).max(axis=1) if g else np.zeros(1)
            edge = self.amp[shell == L_try].max() if np.any(shell == L_try) else 0.0
            self.L = L_try
            self.tail_bound = float(edge)
            if g == 0 or edge < tail_tol or np.all(self.p == 0):
                break
        else:  # pragma: no cover
            raise SolverError(f"theta tail bound {self.tail_bound:.3e} not below {tail_tol}")

    def value(self, v: np.ndarray, deriv_dir: np.ndarray | None = None, orders=(0,)):
        """th and directional t-derivatives along ``deriv_dir`` for each order.

        Real arguments give real values; complex v (used by the monodromy
        identities) returns complex.
        """
        v = np.asarray(v)
        is_complex = np.iscomplexobj(v)
        dot = self.grid @ v if self.grid.size else np.zeros(1)
        phase = np.exp(2j * np.pi * dot) * self.amp
        if deriv_dir is None:
            total = np.sum(phase)
            out = complex(total) if is_complex else float(total.real)
            return out if orders == (0,) else [out]
        fac = 2j * np.pi * (self.grid @ np.asarray(deriv_dir, dtype=float))
        outs = []
        for order in orders:
            total = np.sum(phase * fac**order)
            outs.append(complex(total) if is_complex else float(total.real))
        return outs


@dataclass
class GGapSolution:
    """Callable x_n(t) built from solved curve data."""

    gc: GapConfig
    cp: CurveParams
    per: Periods
    theta: ThetaData

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.gc.gamma

    def _args(self, n, t):
        U, V, Z = self.per.U, self.per.V, self.gc.z_phase
        return (
            0.5 * U - Z,
            (n - 0.5) * U + t * V - Z,
            -0.5 * U - Z,
            (n + 0.5) * U + t * V - Z,
        )

    def __call__(self, n, t):
        shape = np.broadcast(np.asarray(n), np.asarray(t)).shape
        nb = np.broadcast_to(np.asarray(n), shape)
        tb = np.broadcast_to(np.asarray(t, dtype=float), shape)
        out = np.empty(shape, dtype=float)
        for idx in np.ndindex(shape):
            a1, a2, a3, a4 = self._args(float(nb[idx]), float(tb[idx]))
            th = self.theta.value
            val = self.gc.c * float(nb[idx]) + math.log(th(a1)) + math.log(th(a2)) - math.log(th(a3)) - math.log(th(a4))
            out[idx] = val
        return float(out) if out.ndim == 0 else out

    def xddot(self, n: int, t: float) -> float:
        """d^2/dt^2 x_n(t) analytically through the theta derivatives."""
        V = self.per.V
        _, a2, _, a4 = self._args(float(n), float(t))
        val = 0.0
        for arg, sign in ((a2, +1.0), (a4, -1.0)):
            th0, th1, th2 = self.theta.value(arg, deriv_dir=V, orders=(0, 1, 2))
            val += sign * (th2 * th0 - th1 * th1) / th0**2
        return val

    def toda_residual(self, n_lo: int = -10, n_hi: int = 10, nt: int = 100) -> float:
        ts = np.linspace(0.0, self.period, nt, endpoint=False)
        worst = 0.0
        for n in range(n_lo, n_hi + 1):
            xm = self(n - 1, ts)
            x0 = self(n, ts)
            xp = self(n + 1, ts)
            acc = np.array([self.xddot(n, t) for t in ts])
            worst = max(worst, float(np.max(np.abs(acc - np.exp(xm - x0) + np.exp(x0 - xp)))))
        return worst


def build_solution(gc: GapConfig, n_nodes: int = 64, L_trunc: int = 6) -> GGapSolution:
    g = gc.g
    cp, per = solve_params(g, gc.gamma, gc.c, gc.p, n_nodes)
    theta = ThetaData(gc.p, per.tau_reg, L=L_trunc)
    return GGapSolution(gc=gc, cp=cp, per=per, theta=theta)


def xn_ggap(gc: GapConfig, n, t, n_nodes: int = 64) -> float | np.ndarray:
    return build_solution(gc, n_nodes)(n, t)


def gap_width_prediction(eps_bm: float, m: int, gamma: float) -> float:
    """First-order width of gap m when the driver carries eps*b_m at mode m:
    |p_m| = 2 |eps b_m| m gamma."""
    return 2.0 * abs(eps_bm) * m * gamma


# ---------------------------------------------------------------------------
# Fourier side: u(q) and the resonance solve


def _lattice_sum_indices(g: int, L: int) -> np.ndarray:
    grid = np.stack(np.meshgrid(*([np.arange(-L, L + 1)] * g), indexing="ij"), axis=-1).reshape(-1, g)
    return grid[np.any(grid != 0, axis=1)]


def u_fourier(sol: GGapSolution, nmax: int, mmax: int | None = None, L: int = 6,
              weight: Weight = Weight("unit"), tail_tol: float = 1e-14) -> Field:
    """Fourier coefficients u(q)(n,m) of the g-gap solution minus c n.

    Built from the theta expansion:  with p~_j = p_j e^{2 pi i Z_j},

      r(n,l)  = prod_j p_j^{l_j^2} e^{-2 pi i <l,Z>} exp(2 pi i <l,U>(n-1/2) + <l,tau_reg l>),
      s(n,m)  = sum over l != 0 with l.(1..g) = -m of r(n,l),
      u1(n,.) = log-series sum_k (-1)^(k-1)/k s(n,.)^{*k},
      u(n,m)  = u1(n,m) - u1(n+1,m) + [ln th(U/2 - Z) - ln th(-U/2 - Z)] delta_{m,0}.
    """
    g = sol.gc.g
    p, Z, U, tau_reg = sol.gc.p, sol.gc.z_phase, sol.per.U, sol.per.tau_reg
    gamma = sol.gc.gamma
    ls = _lattice_sum_indices(g, L)
    weights_l = np.array([np.prod(p ** (l**2)) * math.exp(float(l @ tau_reg @ l)) for l in ls])
    keep = weights_l > tail_tol * max(1.0, weights_l.max(initial=0.0))
    ls, weights_l = ls[keep], weights_l[keep]
    modes = -(ls @ np.arange(1, g + 1))
    if mmax is None:
        mmax = max(int(np.abs(modes).max(initial=1)), 4)
    ncols = 2 * mmax + 1
    ns = np.arange(nmax + 2)
    s_vals = np.zeros((nmax + 2, ncols), dtype=complex)
    for l, wl, m in zip(ls, weights_l, modes):
        if abs(m) > mmax:
            continue
        coef = wl * np.exp(-2j * np.pi * (l @ Z))
        s_vals[:, m + mmax] += coef * np.exp(2j * np.pi * (l @ U) * (ns - 0.5))
    # log series u1 = sum (-1)^{k-1}/k s^{*k}
    snorm = float(np.max(np.sum(np.abs(s_vals), axis=1)))
    if snorm >= 0.99:
        raise SolverError(f"log series does not converge: max_n ||s(n,.)||_1 = {snorm:.3f}")
    from .seqspace import mconv_rows

    u1 = np.zeros_like(s_vals)
    power = s_vals.copy()
    k = 1
    while True:
        u1 += ((-1.0) ** (k - 1) / k) * power
        if float(np.max(np.sum(np.abs(power), axis=1))) < tail_tol or k > 200:
            break
        power = mconv_rows(power, s_vals, mmax)
        k += 1
    th = sol.theta.value
    u2 = math.log(th(0.5 * U - Z)) - math.log(th(-0.5 * U - Z))
    out = np.zeros((nmax + 1, ncols), dtype=complex)
    out[:, :] = u1[:-1, :] - u1[1:, :]
    out[:, mmax] += u2
    return Field(out, weight, 0.0)


def first_order_coefficient(sol: GGapSolution, m: int) -> complex:
    """d u(q)(0,m) / d p~_m at q = 0:  2 i sin(pi U_m) exp(tau_reg_mm) (raw branch)."""
    per = sol.per
    return 2j * math.sin(math.pi * per.U[m - 1]) * math.exp(per.tau_reg[m - 1, m - 1])


def resonance_solve(
    c: float,
    gamma: float,
    eps: float,
    b: SeqW,
    nmax: int = 64,
    mmax: int = 32,
    L: int = 6,
    tol: float = 1e-10,
    max_iter: int = 40,
    n_nodes: int = 64,
):
    """Driven periodic Toda solution with g = m0 open gaps.

    Solves eps b_m = u(q)(0,m) + v(q,eps)(0,m) for m = 1..g over the complex
    gap parameters p~_m = p_m e^{2 pi i Z_m}; v comes from the boundary-layer
    fixed point with u(q) as the travelling-wave input.
    Returns (GapConfig, GGapSolution, PeriodicSolution, diagnostics).
    """
    force = ForceLaw("toda")
    res = resonance_data(force, c, gamma, Weight("unit"))
    g = res.m0
    if g < 1:
        raise ConfigurationError("resonance solve needs at least one resonant mode (m0 >= 1)")
    check_frequency_window(g, gamma, c)
    bb = b.resize(mmax)
    ptil = np.zeros(g, dtype=complex)
    sol = None
    v = None
    u_field = None

    def evaluate(pt):
        gc = GapConfig(gamma=gamma, c=c,
                       p=np.abs(pt),
                       z_phase=np.where(np.abs(pt) > 0, np.angle(pt) / (2 * np.pi), 0.0))
        sol = build_solution(gc, n_nodes=n_nodes, L_trunc=L)
        uf = u_fourier(sol, nmax=nmax + 1, mmax=mmax, L=L)
        uf = Field(uf.values[: nmax + 1], uf.weight, 0.0)
        vv = solve_v(res, force, c, uf, eps, bb)
        gv = np.array([eps * bb[m] - uf[0, m] - vv[0, m] for m in range(1, g + 1)])
        return sol, uf, vv, gv

    sol, u_field, v, gvec = evaluate(ptil)
    for it in range(max_iter):
        if np.max(np.abs(gvec)) < tol:
            break
        jac = np.array([first_order_coefficient(sol, m) for m in range(1, g + 1)])
        step = gvec / jac
        # damp: never move any |p~| by more than 0.08 at once
        cap = np.max(np.abs(step))
        if cap > 0.08:
            step *= 0.08 / cap
        for _ in range(6):
            try:
                trial = evaluate(ptil + step)
                break
            except (SolverError, ConfigurationError):
                step *= 0.5
        else:
            raise SolverError("resonance Newton cannot find an admissible step")
        ptil = ptil + step
        sol, u_field, v, gvec = trial
    else:
        raise SolverError(f"resonance Newton stalled: |g| = {np.max(np.abs(gvec)):.3e}")
    coeffs = Field(u_field.values + v.values, u_field.weight, 0.0)
    const = (eps * bb[0] - u_field[0, 0] - v[0, 0]).real
    coeffs.values[1:, coeffs.mmax] += const
    coeffs.values[0, :] = eps * bb.data
    periodic = PeriodicSolution(c, gamma, coeffs)
    diag = {"iterations": it + 1, "residual": float(np.max(np.abs(gvec))), "p": np.abs(ptil).tolist()}
    return sol.gc, sol, periodic, diag
