"""Spectral side of the driven lattice: the truncated Lax operator L_N(t),
its eigenvalue dynamics, the eigenvalue flux J(lambda), and band detection.

L_N is the symmetric tridiagonal (Jacobi) matrix with diagonal a_1..a_N and
off-diagonal b_1..b_{N-1}; the boundary entry b_0 is kept aside because it
forces the motion through rho(t) = 2 b_0(t)^2.  Because the off-diagonals are
positive all eigenvalues are simple and they move strictly downward:
lambda_j' = -rho f_j^2 < 0, where f_j is the first component of the j-th unit
eigenvector.  The dynamical system for (lambda_j, f_j) is

    (1/2) d/dt ln(-lambda_j') = lambda_j - a_0(t) + sum_{i != j} lambda_i'/(lambda_j - lambda_i),
    f_j^2 = -lambda_j'/rho,      rho = -sum_i lambda_i' = 2 b_0(t)^2,

integrated here in the variables (lambda_j, ln mu_j), mu_j = -lambda_j' > 0.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal

from .errors import AmbiguityError, ConfigurationError, SolverError
from .sim import FlaschkaVars


@dataclass
class JacobiMatrix:
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        self.diag = np.asarray(self.diag, dtype=float)
        self.offdiag = np.asarray(self.offdiag, dtype=float)
        if self.offdiag.size != max(self.diag.size - 1, 0):
            raise ConfigurationError("offdiag must have length N-1")
        if np.any(self.offdiag <= 0):
            raise ConfigurationError("Jacobi matrix requires strictly positive off-diagonals")

    @property
    def size(self) -> int:
        return self.diag.size


@dataclass
class EigenSystem:
    """Sorted eigenvalues and the first components of the unit eigenvectors."""

    lambdas: np.ndarray
    first_components: np.ndarray


def build_lax(fv: FlaschkaVars) -> tuple[JacobiMatrix, float]:
    """Interior Jacobi matrix plus the boundary entry b_0 (for rho = 2 b_0^2)."""
    return JacobiMatrix(diag=fv.a[1:], offdiag=fv.b[1:]), float(fv.b[0])


def eigs(jm: JacobiMatrix, check_residual: bool = False) -> EigenSystem:
    """Eigenvalues (sorted) and first components of orthonormal eigenvectors."""
    if jm.size == 1:
        return EigenSystem(jm.diag.copy(), np.array([1.0]))
    try:
        lam, vecs = eigh_tridiagonal(jm.diag, jm.offdiag)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SolverError(f"tridiagonal eigensolver failed: {exc}") from exc
    if check_residual:
        full = np.diag(jm.diag) + np.diag(jm.offdiag, 1) + np.diag(jm.offdiag, -1)
        res = np.max(np.abs(full @ vecs - vecs * lam))
        if res > 1e-10:
            raise SolverError(f"eigenpair residual {res:.3e} exceeds 1e-10")
    return EigenSystem(lam, vecs[0, :].copy())


def eigvals(jm: JacobiMatrix) -> np.ndarray:
    if jm.size == 1:
        return jm.diag.copy()
    return eigh_tridiagonal(jm.diag, jm.offdiag, eigvals_only=True)


def evolve_eigensystem(
    init: EigenSystem,
    b0_sq,
    a0,
    t_end: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    min_gap: float = 1e-9,
    t_eval=None,
):
    """Integrate the eigenvalue dynamics from t = 0 to t_end.

    ``b0_sq`` and ``a0`` are callables of time; b0_sq sets the initial rates
    mu_j(0) = 2 b_0(0)^2 f_j(0)^2 and is not otherwise used by the flow.
    Returns (times, lambdas[t, j], mus[t, j]).
    """
    lam0 = np.asarray(init.lambdas, dtype=float)
    f0 = np.asarray(init.first_components, dtype=float)
    n = lam0.size
    if np.min(np.diff(lam0)) <= 0:
        raise ConfigurationError("initial eigenvalues must be strictly increasing")
    if float(b0_sq(0.0)) == 0.0:
        # decoupled boundary: rho = 0, the whole spectrum is frozen
        ts = np.asarray(t_eval) if t_eval is not None else np.array([0.0, t_end])
        lams = np.tile(lam0, (ts.size, 1))
        return ts, lams, np.zeros_like(lams)
    mu0 = 2.0 * float(b0_sq(0.0)) * f0**2
    if np.any(mu0 <= 0):
        raise ConfigurationError("initial rates mu_j must be positive (f_j != 0)")

    def rhs(t, y):
        lam = y[:n]
        mu = np.exp(y[n:])
        gaps = lam[:, None] - lam[None, :]
        np.fill_diagonal(gaps, np.inf)
        if np.min(np.abs(gaps)) < min_gap:
            raise SolverError(
                "eigenvalue near-collision during ODE integration",
                diagnostics={"t": t, "min_gap": float(np.min(np.abs(gaps)))},
            )
        interaction = (mu[None, :] / gaps).sum(axis=1)
        dlam = -mu
        dlnmu = 2.0 * (lam - a0(t) - interaction)
        return np.concatenate([dlam, dlnmu])

    sol = solve_ivp(
        rhs,
        (0.0, t_end),
        np.concatenate([lam0, np.log(mu0)]),
        method="DOP853",
        rtol=rtol,
        atol=atol,
        t_eval=t_eval,
        dense_output=False,
    )
    if not sol.success:
        raise SolverError(f"eigenvalue-dynamics integration failed: {sol.message}")
    lams = sol.y[:n, :].T
    mus = np.exp(sol.y[n:, :].T)
    return sol.t, lams, mus


# ---------------------------------------------------------------------------
# flux


def flux_count(lams_start: np.ndarray, lams_end: np.ndarray, level: float) -> int:
    """Number of eigenvalues with lambda_i(end) < level < lambda_i(start).

    Eigenvalue paths are monotone decreasing and cannot cross, so the count
    is a difference of ranks in the two sorted snapshots.
    """
    above_start = len(lams_start) - bisect_right(list(lams_start), level)
    above_end = len(lams_end) - bisect_right(list(lams_end), level)
    return above_start - above_end


def flux(snapshots, level: float, t0: float, T: float) -> float:
    """Windowed eigenvalue flux J_{t0,T}(level) = crossings / T.

    ``snapshots`` is a sequence of (t, sorted eigenvalue array) covering
    [t0, t0+T].  A level colliding exactly with a sampled eigenvalue is
    nudged by 1e-12.
    """
    if T <= 0:
        raise ConfigurationError("window length T must be positive")
    times = [s[0] for s in snapshots]
    if min(times) > t0 + 1e-9 or max(times) < t0 + T - 1e-9:
        raise ConfigurationError("snapshots do not cover the requested window")
    start = min(snapshots, key=lambda s: abs(s[0] - t0))
    end = min(snapshots, key=lambda s: abs(s[0] - (t0 + T)))
    lam_s, lam_e = np.asarray(start[1]), np.asarray(end[1])
    lvl = level
    if np.any(lam_s == lvl) or np.any(lam_e == lvl):
        lvl = level + 1e-12
    return flux_count(lam_s, lam_e, lvl) / T


def flux_curve(snapshots, grid, t0: float, T: float) -> np.ndarray:
    return np.array([flux(snapshots, g, t0, T) for g in grid])


# ---------------------------------------------------------------------------
# band detection


@dataclass
class DetectedBands:
    """Ordered band endpoints p_0 < q_1 < ... < p_g < q_{g+1} plus bookkeeping."""

    endpoints: np.ndarray  # length 2g + 2
    cluster_sizes: list
    stray: np.ndarray  # eigenvalues not assigned to any band

    @property
    def g(self) -> int:
        return self.endpoints.size // 2 - 1

    @property
    def gaps(self) -> list:
        e = self.endpoints
        return [(e[2 * k + 1], e[2 * k + 2]) for k in range(self.g)]

    @property
    def gap_widths(self) -> np.ndarray:
        return np.array([hi - lo for lo, hi in self.gaps])


def detect_bands(lams, min_gap: float | None = None, min_cluster: int = 5) -> DetectedBands:
    """Split a sorted spectrum snapshot into bands separated by gaps.

    Maximal runs with consecutive spacing < min_gap become clusters; clusters
    smaller than ``min_cluster`` are treated as stray in-gap eigenvalues (the
    descending ones) and excluded.  Default min_gap is five times the median
    consecutive spacing.
    """
    lam = np.sort(np.asarray(lams, dtype=float))
    if lam.size < 2 * min_cluster:
        raise ConfigurationError("too few eigenvalues for band detection")
    spac = np.diff(lam)
    if min_gap is None:
        min_gap = 5.0 * float(np.median(spac))
    if min_gap <= 0:
        raise ConfigurationError("min_gap must be positive")
    breaks = np.nonzero(spac >= min_gap)[0]
    bounds = np.concatenate(([0], breaks + 1, [lam.size]))
    clusters = [lam[bounds[i] : bounds[i + 1]] for i in range(bounds.size - 1)]
    bands = [c for c in clusters if c.size >= min_cluster]
    stray = np.concatenate([c for c in clusters if c.size < min_cluster] or [np.empty(0)])
    if not bands:
        raise AmbiguityError(
            "no cluster qualifies as a band at this threshold",
            candidates=sorted(spac)[-5:],
        )
    # a stray falling between two sub-clusters of one true band would split it;
    # merge adjacent bands whose separation is bridged by strays closer than min_gap
    merged = [bands[0]]
    for c in bands[1:]:
        gap_lo, gap_hi = merged[-1][-1], c[0]
        inside = stray[(stray > gap_lo) & (stray < gap_hi)]
        pts = np.concatenate(([gap_lo], np.sort(inside), [gap_hi]))
        if np.max(np.diff(pts)) < min_gap:
            merged[-1] = np.concatenate([merged[-1], inside, c])
        else:
            merged.append(c)
    bands = merged
    endpoints = []
    for c in bands:
        endpoints.extend([c[0], c[-1]])
    return DetectedBands(
        endpoints=np.array(endpoints),
        cluster_sizes=[c.size for c in bands],
        stray=stray,
    )


def spectrum_snapshots(states, driver, stride_times=None):
    """Eigenvalue snapshots (t, sorted lambdas) from simulation states."""
    from .sim import flaschka

    out = []
    for st in states:
        jm, _ = build_lax(flaschka(st, driver))
        out.append((st.t, eigvals(jm)))
    return out
