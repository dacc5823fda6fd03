"""Boundary driver x_0(t) = 2 a t + eps * sum_m b_m exp(i gamma m t).

The harmonic table stores b_m for m >= 1 only; reality b_{-m} = conj(b_m) is
built in, so x_0 is always real.  All evaluation is analytic (no tabulation):
the integrators ask for positions at arbitrary stage times.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


def harmonics_from_sin_cos(sin_amps=(), cos_amps=()):
    """Harmonic table for h(t) = sum_k sin_amps[k-1] sin(k g t) + cos_amps[k-1] cos(k g t)."""
    table = {}
    for k, amp in enumerate(sin_amps, start=1):
        table[k] = table.get(k, 0j) + amp / 2j
    for k, amp in enumerate(cos_amps, start=1):
        table[k] = table.get(k, 0j) + amp / 2.0
    return {m: c for m, c in table.items() if c != 0}


@dataclass(frozen=True)
class DriverSpec:
    """Mean drift 2a plus an eps-scaled periodic part with frequency gamma."""

    a: float = 0.0
    gamma: float = 1.0
    eps: float = 0.0
    harmonics: dict = field(default_factory=dict)  # m >= 1 -> complex b_m

    def __post_init__(self):
        if self.gamma <= 0:
            raise ConfigurationError("driver frequency gamma must be positive")
        clean = {}
        for m, b in self.harmonics.items():
            m = int(m)
            if m < 1:
                raise ConfigurationError("harmonics are stored for m >= 1 only")
            clean[m] = complex(b)
        object.__setattr__(self, "harmonics", clean)

    def coefficient(self, m: int) -> complex:
        """Full two-sided Fourier coefficient b_m (without the eps factor)."""
        if m == 0:
            return 0j
        if m > 0:
            return self.harmonics.get(m, 0j)
        return np.conj(self.harmonics.get(-m, 0j))

    @property
    def mmax(self) -> int:
        return max(self.harmonics, default=0)

    def oscillation(self, t):
        """h(gamma t) = sum_m b_m e^{i gamma m t} (real), without the eps factor."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for m, b in self.harmonics.items():
            out = out + 2.0 * (b.real * np.cos(self.gamma * m * t) - b.imag * np.sin(self.gamma * m * t))
        return float(out) if out.ndim == 0 else out

    def oscillation_velocity(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for m, b in self.harmonics.items():
            w = self.gamma * m
            out = out + 2.0 * w * (-b.real * np.sin(w * t) - b.imag * np.cos(w * t))
        return float(out) if out.ndim == 0 else out

    def position(self, t):
        """x_0(t) = 2 a t + eps * h(gamma t)."""
        return 2.0 * self.a * np.asarray(t, dtype=float) + self.eps * self.oscillation(t)

    def velocity(self, t):
        return 2.0 * self.a + self.eps * self.oscillation_velocity(t)

    def flaschka_a0(self, t):
        """Boundary Flaschka variable a_0(t) = -x_0'(t)/2."""
        return -0.5 * self.velocity(t)

    @property
    def a0_mean(self) -> float:
        """Time average of a_0(t); the oscillation integrates to zero."""
        return -self.a

    def frozen(self) -> "DriverSpec":
        """The same driver with the motion switched off (x_0 = 0)."""
        return DriverSpec(a=0.0, gamma=self.gamma, eps=0.0, harmonics={})


def paper_driver(gamma: float, eps: float = 0.2, a: float = 0.5) -> DriverSpec:
    """x_0(t) = 2 a t + eps (sin(gamma t) + 0.5 cos(2 gamma t)), the stock experiment."""
    return DriverSpec(a=a, gamma=gamma, eps=eps, harmonics=harmonics_from_sin_cos((1.0,), (0.0, 0.5)))
