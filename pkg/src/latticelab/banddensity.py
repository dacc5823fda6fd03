"""Predicted asymptotic spectral density from band endpoints alone.

Given bands B = [p_0,q_1] u ... u [p_g,q_{g+1}], define the hyperelliptic
square root R(lam) = {prod_k (lam-p_k)(lam-q_{k+1})}^(1/2) with cuts on B and
R > 0 at +infinity, and the monic node polynomial P(lam) = prod_i (lam-sigma_i)
whose g+1 roots are fixed by

    int_{G_k} P/R dlam = 0  (each gap),      int_B P/R dlam = 0.

Then the density and its Hilbert transform are boundary values of one
analytic function:

    J(lam)  =  (1/pi) Im int_lam^inf (1 - P/R) dmu,
    HJ(lam) =  (1/pi) pv int J(mu)/(lam-mu) dmu = -(1/pi) Re int_lam^inf (1 - P/R) dmu,

J vanishes off B u G, is constant on gaps, and solves
lam - <a_0> - pv int J/(lam-mu) = 0 on B, with the compatibility condition
q_{g+1} + int_{q_{g+1}}^inf (1 - P/R) = <a_0>.

Quadrature: every band/gap segment uses the cos substitution
lam = mid + half*cos(theta) to absorb the inverse square root endpoint
singularities; the semi-infinite tail uses mu = q_{g+1} + L u^2/(1-u)^2 which
also absorbs the sqrt singularity at the band edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SolverError

_GL_CACHE: dict = {}


def _gl(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


@dataclass(frozen=True)
class BandStructure:
    """Strictly increasing endpoints p_0 < q_1 < p_1 < ... < p_g < q_{g+1}."""

    endpoints: tuple

    def __post_init__(self):
        e = tuple(float(v) for v in self.endpoints)
        object.__setattr__(self, "endpoints", e)
        if len(e) < 2 or len(e) % 2:
            raise ConfigurationError("need 2g+2 band endpoints")
        if np.any(np.diff(e) <= 0):
            raise ConfigurationError("band endpoints must be strictly increasing")

    @property
    def g(self) -> int:
        return len(self.endpoints) // 2 - 1

    @property
    def bands(self) -> list:
        e = self.endpoints
        return [(e[2 * k], e[2 * k + 1]) for k in range(self.g + 1)]

    @property
    def gaps(self) -> list:
        e = self.endpoints
        return [(e[2 * k + 1], e[2 * k + 2]) for k in range(self.g)]

    @property
    def span(self) -> tuple:
        return self.endpoints[0], self.endpoints[-1]


@dataclass
class SigmaRoots:
    sigma: np.ndarray

    def __post_init__(self):
        self.sigma = np.sort(np.asarray(self.sigma, dtype=float))


def _r_above(bs: BandStructure, lam):
    """Boundary value R(lam + i0) on the real axis (vectorized).

    With nu(lam) = number of endpoints > lam, the phase is exp(i pi nu / 2):
    real off the bands, pure imaginary inside them.
    """
    lam = np.asarray(lam, dtype=float)
    e = np.asarray(bs.endpoints)
    prod = np.ones_like(lam)
    for v in e:
        prod = prod * np.abs(lam - v)
    nu = (lam[..., None] < e).sum(axis=-1)
    return np.sqrt(prod) * np.exp(1j * np.pi * nu / 2.0)


def R_eval(bs: BandStructure, lam, side: str = "above"):
    """R(lam) on the chosen side of the cuts ("above" or "below" the axis)."""
    if side not in ("above", "below"):
        raise ConfigurationError("side must be 'above' or 'below'")
    out = _r_above(bs, np.asarray(lam, dtype=float))
    if side == "below":
        out = np.conj(out)
    return complex(out) if out.ndim == 0 else out


def _poly(sigma, lam):
    out = np.ones_like(np.asarray(lam, dtype=float))
    for s in sigma:
        out = out * (lam - s)
    return out


def _band_nodes(bs: BandStructure, lo: float, hi: float, n: int):
    """cos-substitution nodes/weights for int_lo^hi f(lam) dlam."""
    x, w = _gl(n)
    theta = (x + 1.0) * (np.pi / 2.0)
    mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
    lam = mid - half * np.cos(theta)
    dlam = half * np.sin(theta) * (np.pi / 2.0) * w
    return lam, dlam


def segment_integral_P_over_R(bs: BandStructure, sigma, lo: float, hi: float, n: int = 64):
    """int_lo^hi P/R(lam+i0) dlam over a segment interior to one band or gap."""
    lam, dlam = _band_nodes(bs, lo, hi, n)
    return np.sum(_poly(sigma, lam) / _r_above(bs, lam) * dlam)


def _gap_band_conditions(bs: BandStructure, sigma, n: int = 64) -> np.ndarray:
    """The g+1 real defining conditions for the sigma roots."""
    conds = []
    for lo, hi in bs.gaps:
        conds.append(segment_integral_P_over_R(bs, sigma, lo, hi, n).real)
    total = 0j
    for lo, hi in bs.bands:
        total += segment_integral_P_over_R(bs, sigma, lo, hi, n)
    conds.append(total.imag)  # P/R is pure imaginary on bands
    return np.array(conds)


def solve_sigma(bs: BandStructure, n_quad: int = 64, tol: float = 1e-12, max_iter: int = 100) -> SigmaRoots:
    """Newton solve for the node-polynomial roots.

    Initial guess: gap midpoints for sigma_1..sigma_g, the last root fixed by
    the exact sum rule 2 sum sigma = sum endpoints.
    """
    e = np.asarray(bs.endpoints)
    sig = np.array([0.5 * (lo + hi) for lo, hi in bs.gaps] + [0.0])
    sig[-1] = 0.5 * np.sum(e) - np.sum(sig[:-1])
    scale = max(e[-1] - e[0], 1.0)

    def jac(sigma):
        J = np.empty((sigma.size, sigma.size))
        for i in range(sigma.size):
            # d/dsigma_i (P/R) = -prod_{j != i}(lam - sigma_j)/R
            rows = []
            others = np.delete(sigma, i)
            for lo, hi in bs.gaps:
                lam, dlam = _band_nodes(bs, lo, hi, n_quad)
                rows.append(np.sum(-_poly(others, lam) / _r_above(bs, lam) * dlam).real)
            tot = 0j
            for lo, hi in bs.bands:
                lam, dlam = _band_nodes(bs, lo, hi, n_quad)
                tot += np.sum(-_poly(others, lam) / _r_above(bs, lam) * dlam)
            rows.append(tot.imag)
            J[:, i] = rows
        return J

    res = _gap_band_conditions(bs, sig, n_quad)
    for _ in range(max_iter):
        if np.max(np.abs(res)) < tol:
            return SigmaRoots(sig)
        J = jac(sig)
        try:
            delta = np.linalg.solve(J, res)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular Jacobian in sigma solve: {exc}") from exc
        step_cap = 0.5 * scale
        if np.max(np.abs(delta)) > step_cap:
            delta *= step_cap / np.max(np.abs(delta))
        sig = sig - delta
        res = _gap_band_conditions(bs, sig, n_quad)
    cond = np.linalg.cond(jac(sig))
    raise SolverError(
        f"sigma Newton did not reach tol={tol} after {max_iter} iterations",
        diagnostics={"residuals": res.tolist(), "condition": float(cond)},
    )


def _tail_nodes(q: float, scale: float, n: int):
    """Nodes/weights for int_q^inf f(mu) dmu with f ~ 1/sqrt(mu-q) at q and ~mu^-2 at inf.

    Map mu = q + scale * u^2/(1-u)^2.
    """
    x, w = _gl(n)
    u = (x + 1.0) / 2.0
    mu = q + scale * u**2 / (1.0 - u) ** 2
    dmu = scale * 2.0 * u / (1.0 - u) ** 3 * (w / 2.0)
    return mu, dmu


def tail_integral(bs: BandStructure, sigma, n: int = 96, start: float | None = None) -> float:
    """int_start^inf (1 - P/R) dmu for start >= q_{g+1} (default q_{g+1}).

    Evaluated as (R - P)/R with R - P = (R^2 - P^2)/(R + P) computed through
    exact polynomial coefficients; the naive ratio loses all precision where
    P/R - 1 drops below machine epsilon.
    """
    Pn = np.polynomial.polynomial
    lo, hi = bs.span
    q = hi if start is None else max(start, hi)
    polyR2 = Pn.polyfromroots(bs.endpoints)
    polyP = Pn.polyfromroots(sigma)
    D = Pn.polysub(polyR2, Pn.polymul(polyP, polyP))
    mu, dmu = _tail_nodes(q, max(hi - lo, 1.0), n)
    R = np.sqrt(Pn.polyval(mu, polyR2))
    P = Pn.polyval(mu, polyP)
    integrand = Pn.polyval(mu, D) / (R + P) / R
    return float(np.sum(integrand * dmu))


def compatibility(bs: BandStructure, sig: SigmaRoots, n: int = 96) -> float:
    """Implied driver mean <a_0> = q_{g+1} + int_{q_{g+1}}^inf (1 - P/R)."""
    return bs.span[1] + tail_integral(bs, sig.sigma, n)


def _integral_from_lam(bs: BandStructure, sigma, lam: float, n: int = 64) -> complex:
    """int_lam^inf (1 - P/R(mu+i0)) dmu, split over segment boundaries."""
    span = bs.span[1] - bs.span[0]
    tiny = 1e-12 * span
    if lam >= bs.span[1] - tiny:
        return complex(tail_integral(bs, sigma, max(n, 96), start=lam))
    pts = [v for v in bs.endpoints if v > lam + tiny]
    total = complex(tail_integral(bs, sigma, max(n, 96)))
    # the "1" part over [lam, q_{g+1}] integrates exactly
    total += bs.span[1] - lam
    segs = [lam] + pts
    for lo, hi in zip(segs[:-1], segs[1:]):
        if hi - lo < tiny:
            continue
        lamq, dlam = _band_nodes(bs, lo, hi, n)
        total -= np.sum(_poly(sigma, lamq) / _r_above(bs, lamq) * dlam)
    return total


def density_J(bs: BandStructure, sig: SigmaRoots, lam, n: int = 64):
    """Predicted density J(lam) >= 0; constant on gaps, zero off the spectrum."""
    scalar = np.isscalar(lam)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.empty_like(lam)
    for i, v in enumerate(lam):
        if v <= bs.span[0] or v >= bs.span[1]:
            out[i] = 0.0
        else:
            out[i] = _integral_from_lam(bs, sig.sigma, v, n).imag / np.pi
    return float(out[0]) if scalar else out


def hilbert_J(bs: BandStructure, sig: SigmaRoots, lam, n: int = 64):
    """HJ(lam) = -(1/pi) Re int_lam^inf (1 - P/R) dmu."""
    scalar = np.isscalar(lam)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.empty_like(lam)
    for i, v in enumerate(lam):
        out[i] = -_integral_from_lam(bs, sig.sigma, v, n).real / np.pi
    return float(out[0]) if scalar else out


def hilbert_pv_quadrature(bs: BandStructure, sig: SigmaRoots, lam: float, n: int = 96) -> float:
    """Independent check of HJ: (1/pi) pv int J(mu)/(lam-mu) dmu.

    Segment-wise cos-substitution quadrature with the log singularity handled
    by subtraction: on the segment containing lam,
        pv int J/(lam-mu) = int (J(mu)-J(lam))/(lam-mu) + J(lam) ln|(lam-lo)/(hi-lam)|.
    """
    segments = bs.bands + bs.gaps
    Jlam = density_J(bs, sig, lam)
    val = 0.0
    for lo, hi in segments:
        mu, dmu = _band_nodes(bs, lo, hi, n)
        J = density_J(bs, sig, mu)
        if lo < lam < hi:
            val += float(np.sum((J - Jlam) / (lam - mu) * dmu))
            val += Jlam * np.log(abs((lam - lo) / (hi - lam)))
        else:
            val += float(np.sum(J / (lam - mu) * dmu))
    return val / np.pi


def gap_constants(bs: BandStructure, sig: SigmaRoots, n: int = 64) -> np.ndarray:
    """J value on each gap (evaluated at the gap midpoints)."""
    return np.array([density_J(bs, sig, 0.5 * (lo + hi), n) for lo, hi in bs.gaps])


def verify_integral_equation(bs: BandStructure, sig: SigmaRoots, a0_mean: float, probes, n: int = 96):
    """Residual lam - <a_0> - pv int J(mu)/(lam-mu) dmu at probes inside bands."""
    res = []
    for lam in np.atleast_1d(probes):
        if not any(lo < lam < hi for lo, hi in bs.bands):
            raise ConfigurationError(f"probe {lam} is not interior to a band")
        pv = hilbert_pv_quadrature(bs, sig, float(lam), n) * np.pi
        res.append(lam - a0_mean - pv)
    return np.asarray(res)


def sum_rule_defect(bs: BandStructure, sig: SigmaRoots) -> float:
    """|2 sum sigma - sum endpoints| (exact identity of the construction)."""
    return abs(2.0 * np.sum(sig.sigma) - np.sum(bs.endpoints))
