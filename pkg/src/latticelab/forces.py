"""Nearest-neighbour force laws for the driven lattice.

The chain obeys  x_n'' = F(x_{n-1} - x_n) - F(x_n - x_{n+1})  and every force
law here is real analytic and strictly increasing on its domain.  Four
families are supported:

    toda        F(y) = exp(y)
    linear      F(y) = alpha * y
    cubic       F(y) = a1 * (y + a3 * y**3)        (default 1.71, 0.2)
    rational    F(y) = a0 / (1 - s * y),  s*y < 1  (default 2.53, 0.4)

Taylor coefficients about an arbitrary expansion point are available in
closed form; they feed the convolution series of the wave construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

_KINDS = ("toda", "linear", "cubic", "rational")

_DEFAULT_PARAMS = {
    "toda": (),
    "linear": (2.25,),
    "cubic": (1.71, 0.2),
    "rational": (2.53, 0.4),
}


@dataclass(frozen=True)
class ForceLaw:
    """A strictly increasing interaction force F with derivatives and Taylor data."""

    kind: str
    params: tuple = field(default=None)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigurationError(f"unknown force law {self.kind!r}; pick one of {_KINDS}")
        params = self.params if self.params is not None else _DEFAULT_PARAMS[self.kind]
        object.__setattr__(self, "params", tuple(float(p) for p in params))
        if self.kind == "linear":
            if len(self.params) != 1 or self.params[0] <= 0:
                raise ConfigurationError("linear force law needs one positive parameter alpha")
        elif self.kind == "cubic":
            if len(self.params) != 2 or self.params[0] <= 0 or self.params[1] < 0:
                raise ConfigurationError("cubic force law needs parameters (a1 > 0, a3 >= 0)")
        elif self.kind == "rational":
            if len(self.params) != 2 or self.params[0] <= 0 or self.params[1] <= 0:
                raise ConfigurationError("rational force law needs parameters (a0 > 0, s > 0)")
        elif self.params:
            raise ConfigurationError("toda force law takes no parameters")

    def _check_domain(self, y):
        if self.kind == "rational":
            s = self.params[1]
            if np.any(np.asarray(y) * s >= 1.0):
                raise DomainError(f"rational force law has a pole: require {s}*y < 1")

    def __call__(self, y):
        """Evaluate F(y); accepts scalars or arrays."""
        self._check_domain(y)
        y = np.asarray(y, dtype=float)
        if self.kind == "toda":
            out = np.exp(y)
        elif self.kind == "linear":
            out = self.params[0] * y
        elif self.kind == "cubic":
            a1, a3 = self.params
            out = a1 * (y + a3 * y**3)
        else:
            a0, s = self.params
            out = a0 / (1.0 - s * y)
        return float(out) if out.ndim == 0 else out

    def deriv(self, y, order: int = 1):
        """k-th derivative of F at y for order in {1, 2}."""
        if order not in (1, 2):
            raise ConfigurationError("force derivatives implemented up to order 2")
        self._check_domain(y)
        y = np.asarray(y, dtype=float)
        if self.kind == "toda":
            out = np.exp(y)
        elif self.kind == "linear":
            out = np.full_like(y, self.params[0]) if order == 1 else np.zeros_like(y)
        elif self.kind == "cubic":
            a1, a3 = self.params
            out = a1 * (1.0 + 3.0 * a3 * y**2) if order == 1 else a1 * 6.0 * a3 * y
        else:
            a0, s = self.params
            k = order
            out = a0 * math.factorial(k) * s**k / (1.0 - s * y) ** (k + 1)
        return float(out) if out.ndim == 0 else out

    def taylor(self, k: int, y: float) -> float:
        """k-th Taylor coefficient alpha_k = F^(k)(y) at expansion point y.

        Note alpha_k is the plain k-th derivative (the 1/k! lives in the series).
        """
        if k < 0:
            raise ConfigurationError("Taylor order must be nonnegative")
        self._check_domain(y)
        if self.kind == "toda":
            return math.exp(y)
        if self.kind == "linear":
            return (self.params[0] * y, self.params[0], 0.0)[k] if k <= 1 else 0.0
        if self.kind == "cubic":
            a1, a3 = self.params
            table = {0: a1 * (y + a3 * y**3), 1: a1 * (1 + 3 * a3 * y**2), 2: a1 * 6 * a3 * y, 3: a1 * 6 * a3}
            return table.get(k, 0.0)
        a0, s = self.params
        return a0 * math.factorial(k) * s**k / (1.0 - s * y) ** (k + 1)

    def taylor_radius(self, y: float) -> float:
        """Radius of convergence of the Taylor series at y (inf if entire)."""
        if self.kind == "rational":
            return (1.0 - self.params[1] * y) / self.params[1]
        return math.inf


def force_law(kind: str, params=None) -> ForceLaw:
    """Factory accepting the default parameters of the four standard laws."""
    return ForceLaw(kind, tuple(params) if params is not None else None)
