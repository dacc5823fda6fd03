"""Time integration of the driven semi-infinite lattice.

    x_n'' = F(x_{n-1} - x_n) - F(x_n - x_{n+1}),   n = 1..N,
    x_n(0) = x_n'(0) = 0,
    x_0(t) prescribed analytically by a DriverSpec.

The chain is truncated at particle N with a "frozen spacing" closure: the
force pulling particle N from the right is F evaluated at the initial spacing
(zero by default), which is exact until the disturbance reaches the far end.
Runs therefore require t_end <= N/2.

The default stepper is velocity Verlet (symplectic, time reversible); an RK4
stepper exists for convergence studies.  Both evaluate the driver position
analytically at their stage times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .drivers import DriverSpec
from .errors import ConfigurationError, DomainError, IntegrationError
from .forces import ForceLaw


@dataclass
class LatticeState:
    """Positions and velocities of particles 1..N at time t."""

    t: float
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.x.shape != self.v.shape or self.x.ndim != 1 or self.x.size < 1:
            raise ConfigurationError("state needs matching 1-d x and v with N >= 1")

    @property
    def n_particles(self) -> int:
        return self.x.size

    def copy(self) -> "LatticeState":
        return LatticeState(self.t, self.x.copy(), self.v.copy())


def rest_state(n_particles: int) -> LatticeState:
    if n_particles < 1:
        raise ConfigurationError("need at least one particle")
    return LatticeState(0.0, np.zeros(n_particles), np.zeros(n_particles))


@dataclass
class FlaschkaVars:
    """a_n = -x_n'/2 (n = 0..N), b_n = exp((x_n - x_{n+1})/2)/2 (n = 0..N-1)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if np.any(self.b <= 0):
            raise ConfigurationError("Flaschka off-diagonal b_n must be strictly positive")


def flaschka(state: LatticeState, driver: DriverSpec) -> FlaschkaVars:
    """Flaschka variables of the boundary + lattice, in the lab frame."""
    if not (np.all(np.isfinite(state.x)) and np.all(np.isfinite(state.v))):
        raise ConfigurationError("state must be finite")
    x0 = driver.position(state.t)
    v0 = driver.velocity(state.t)
    xs = np.concatenate(([x0], state.x))
    vs = np.concatenate(([v0], state.v))
    a = -vs / 2.0
    b = 0.5 * np.exp((xs[:-1] - xs[1:]) / 2.0)
    return FlaschkaVars(a=a, b=b)


def _accel(x, x0, force: ForceLaw, right_force: float):
    gaps = np.empty(x.size)
    gaps[0] = x0 - x[0]
    gaps[1:] = x[:-1] - x[1:]
    f = force(gaps)
    acc = np.empty_like(x)
    acc[:-1] = f[:-1] - f[1:]
    acc[-1] = f[-1] - right_force
    return acc


def step(
    state: LatticeState,
    force: ForceLaw,
    driver: DriverSpec,
    dt: float,
    method: str = "verlet",
    right_spacing: float = 0.0,
    right_mode: str = "frozen",
) -> LatticeState:
    """Advance one time step; the driver is evaluated exactly at stage times.

    Right closure: "frozen" pulls particle N with the constant force
    F(right_spacing) (the far end stays at rest until the front arrives);
    "open" applies no right force at all, which makes the truncated N x N
    Lax equation exact and is what the eigenvalue-dynamics theory assumes.
    """
    if dt == 0.0:
        raise ConfigurationError("dt must be nonzero")
    if right_mode == "frozen":
        rf = force(right_spacing)
    elif right_mode == "open":
        rf = 0.0
    else:
        raise ConfigurationError("right_mode must be 'frozen' or 'open'")
    t, x, v = state.t, state.x, state.v
    if method == "verlet":
        a0 = _accel(x, driver.position(t), force, rf)
        vh = v + 0.5 * dt * a0
        x1 = x + dt * vh
        a1 = _accel(x1, driver.position(t + dt), force, rf)
        v1 = vh + 0.5 * dt * a1
    elif method == "rk4":
        def rhs(tt, xx, vv):
            return vv, _accel(xx, driver.position(tt), force, rf)

        k1x, k1v = rhs(t, x, v)
        k2x, k2v = rhs(t + dt / 2, x + dt / 2 * k1x, v + dt / 2 * k1v)
        k3x, k3v = rhs(t + dt / 2, x + dt / 2 * k2x, v + dt / 2 * k2v)
        k4x, k4v = rhs(t + dt, x + dt * k3x, v + dt * k3v)
        x1 = x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v1 = v + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    else:
        raise ConfigurationError(f"unknown stepper {method!r}")
    if not (np.all(np.isfinite(x1)) and np.all(np.isfinite(v1))):
        raise IntegrationError(f"non-finite state at t = {t + dt:.6g}", t=t + dt)
    return LatticeState(t + dt, x1, v1)


def simulate(
    force: ForceLaw,
    driver: DriverSpec,
    n_particles: int,
    dt: float,
    t_end: float,
    sample_times=None,
    sampler=None,
    method: str = "verlet",
    right_spacing: float = 0.0,
    right_mode: str = "frozen",
    initial: LatticeState | None = None,
    enforce_truncation_guard: bool = True,
):
    """Integrate to t_end, invoking ``sampler(state)`` at the requested times.

    Sample times are rounded to the step grid.  Returns the final state; if
    ``sample_times`` is given and no sampler is passed, returns
    ``(final_state, list_of_states)`` instead.
    """
    if dt <= 0 or t_end <= 0:
        raise ConfigurationError("dt and t_end must be positive")
    if enforce_truncation_guard and t_end > n_particles / 2:
        raise ConfigurationError(
            f"t_end = {t_end} exceeds N/2 = {n_particles / 2}; the truncated chain "
            "would feel its far end (increase N or shorten the run)"
        )
    state = initial.copy() if initial is not None else rest_state(n_particles)
    n_steps = int(round(t_end / dt))
    collected = []
    if sample_times is not None:
        sample_steps = sorted({int(round(ts / dt)) for ts in sample_times})
        if sample_steps and sample_steps[-1] > n_steps:
            raise ConfigurationError("sample time beyond t_end")
    else:
        sample_steps = []
    emit = sampler if sampler is not None else collected.append

    idx = 0
    if sample_steps and sample_steps[0] == 0:
        emit(state.copy())
        idx = 1
    for k in range(1, n_steps + 1):
        state = step(state, force, driver, dt, method=method, right_spacing=right_spacing, right_mode=right_mode)
        # keep time exact on the grid to avoid drift over ~1e5 steps
        state.t = k * dt
        if idx < len(sample_steps) and sample_steps[idx] == k:
            emit(state.copy())
            idx += 1
    if sample_times is not None and sampler is None:
        return state, collected
    return state


def total_energy(state: LatticeState, force: ForceLaw, x0: float, right_spacing: float = 0.0) -> float:
    """Lattice energy for a frozen driver position x0 and frozen-spacing closure.

    Potential of a bond with gap r is the antiderivative of F; the constant
    right force contributes F(right_spacing) * x_N.
    """
    gaps = np.empty(state.n_particles)
    gaps[0] = x0 - state.x[0]
    gaps[1:] = state.x[:-1] - state.x[1:]
    kin = 0.5 * float(np.sum(state.v**2))
    if force.kind == "toda":
        pot = float(np.sum(np.exp(gaps)))
    elif force.kind == "linear":
        pot = float(np.sum(0.5 * force.params[0] * gaps**2))
    elif force.kind == "cubic":
        a1, a3 = force.params
        pot = float(np.sum(a1 * (gaps**2 / 2 + a3 * gaps**4 / 4)))
    else:
        a0, s = force.params
        pot = float(np.sum(-(a0 / s) * np.log(1.0 - s * gaps)))
    return kin + pot + force(right_spacing) * float(state.x[-1])


# ---------------------------------------------------------------------------
# linear lattice closed form


def linear_thresholds(alpha: float, kmax: int = 8) -> np.ndarray:
    """Threshold frequencies gamma_k = 2 sqrt(alpha)/k below which mode k propagates."""
    if alpha <= 0:
        raise ConfigurationError("alpha must be positive")
    return 2.0 * math.sqrt(alpha) / np.arange(1, kmax + 1)


def linear_mode_root(alpha: float, gamma: float, m: int) -> complex:
    """Root z_m of z^2 + ((gamma m)^2/alpha - 2) z + 1 = 0 with |z_m| <= 1.

    On the unit circle the outgoing branch z_m = exp(i beta_m),
    beta_m = -sgn(m) arccos(-delta_m/2), is selected so energy leaves the driver.
    """
    if m == 0:
        return 1.0 + 0j
    delta = (gamma * m) ** 2 / alpha - 2.0
    if abs(delta) == 2.0:
        raise DomainError(f"resonant frequency: |delta_m| = 2 at m = {m}")
    if delta > 2.0:
        return complex(-delta / 2.0 + math.sqrt(delta**2 / 4.0 - 1.0))
    if delta < -2.0:
        # |z| < 1 branch on the other side of the spectrum (not reached for m != 0
        # with gamma > 0, but kept for completeness)
        return complex(-delta / 2.0 - math.sqrt(delta**2 / 4.0 - 1.0))
    beta = -math.copysign(1.0, m) * math.acos(-delta / 2.0)
    return complex(math.cos(beta), math.sin(beta))


def linear_closed_form(alpha: float, driver: DriverSpec, n, t):
    """Long-time profile of the driven linear lattice,

        x_n(t) -> 2 a (t - n/sqrt(alpha)) + sum_m eps b_m z_m^n e^{i gamma m t}.

    The mean flow rides the outgoing front at the sound speed sqrt(alpha)
    (for alpha = 1 this is the textbook 2a(t - n)); the oscillatory part
    carries the exact discrete dispersion through the roots z_m.
    ``n`` and ``t`` may be arrays (broadcast together).
    """
    if alpha <= 0:
        raise ConfigurationError("alpha must be positive")
    n = np.asarray(n)
    t = np.asarray(t, dtype=float)
    out = 2.0 * driver.a * (t - n / math.sqrt(alpha)) * np.ones(np.broadcast(n, t).shape)
    for m, bm in driver.harmonics.items():
        zm = linear_mode_root(alpha, driver.gamma, m)
        term = driver.eps * bm * zm**n * np.exp(1j * driver.gamma * m * t)
        out = out + 2.0 * term.real  # m and -m are conjugates
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# asymptotic spacing of the constant-driven Toda lattice


def toda_asymptotic_spacing(a: float) -> float:
    """Mean spacing behind the front: -2 ln(1+a) if a < 1, -ln(4a) if a > 1.

    The two branches and their first derivatives agree at a = 1 (a second
    order transition).
    """
    if a <= 0:
        raise ConfigurationError("driver strength a must be positive")
    if a <= 1.0:
        return -2.0 * math.log(1.0 + a)
    return -math.log(4.0 * a)


def toda_asymptotic_spacing_deriv(a: float) -> float:
    if a <= 0:
        raise ConfigurationError("driver strength a must be positive")
    return -2.0 / (1.0 + a) if a <= 1.0 else -1.0 / a
