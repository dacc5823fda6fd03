"""Weighted sequence spaces for Fourier coefficients.

An admissible weight satisfies w(m) >= 1 and w(m) <= w(m-n) w(n); then the
weighted l1 norm  ||u|| = sum_m w(m)|u(m)|  is submultiplicative under
convolution.  Three families are used: unit, polynomial (1+|m|)^beta, and
exponential e^{beta |m|}.

A SeqW is a finitely supported two-sided sequence on a symmetric index window
[-mmax, mmax]; a Field is a doubly indexed array u(n, m), n = 0..nmax, with
norm  ||u||_{sigma,w} = sum_m w(m) sup_n e^{sigma n} |u(n,m)|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import ConfigurationError


@dataclass(frozen=True)
class Weight:
    kind: str = "unit"
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("unit", "polynomial", "exponential"):
            raise ConfigurationError("weight kind must be unit|polynomial|exponential")
        if self.beta < 0:
            raise ConfigurationError("weight exponent beta must be nonnegative")

    def __call__(self, m):
        m = np.abs(np.asarray(m))
        if self.kind == "unit":
            out = np.ones_like(m, dtype=float)
        elif self.kind == "polynomial":
            out = (1.0 + m) ** self.beta
        else:
            out = np.exp(self.beta * m)
        return float(out) if out.ndim == 0 else out

    def times_msq(self) -> "WeightProduct":
        """The relaxed weight w~(m) = w(m) (1+|m|)^2 (admissible again)."""
        return WeightProduct(self, Weight("polynomial", 2.0))


@dataclass(frozen=True)
class WeightProduct:
    """Pointwise product of two admissible weights (again admissible)."""

    left: Weight
    right: Weight

    def __call__(self, m):
        return self.left(m) * self.right(m)


class SeqW:
    """Finitely supported sequence m -> complex with a weight attached."""

    def __init__(self, data, mmax: int | None = None, weight: Weight | WeightProduct = Weight("unit")):
        if isinstance(data, dict):
            mmax = max((abs(int(m)) for m in data), default=0) if mmax is None else mmax
            arr = np.zeros(2 * mmax + 1, dtype=complex)
            for m, v in data.items():
                if abs(int(m)) <= mmax:
                    arr[int(m) + mmax] = v
        else:
            arr = np.asarray(data, dtype=complex)
            if arr.size % 2 == 0:
                raise ConfigurationError("dense SeqW data must have odd length (window [-M, M])")
            mmax = arr.size // 2
        self.data = arr
        self.mmax = mmax
        self.weight = weight

    @classmethod
    def zero(cls, mmax: int, weight=Weight("unit")) -> "SeqW":
        return cls(np.zeros(2 * mmax + 1, dtype=complex), weight=weight)

    @classmethod
    def delta(cls, mmax: int, weight=Weight("unit")) -> "SeqW":
        z = cls.zero(mmax, weight)
        z.data[mmax] = 1.0
        return z

    def __getitem__(self, m: int) -> complex:
        return self.data[m + self.mmax] if abs(m) <= self.mmax else 0j

    def __setitem__(self, m: int, v):
        self.data[m + self.mmax] = v

    @property
    def ms(self) -> np.ndarray:
        return np.arange(-self.mmax, self.mmax + 1)

    def norm(self) -> float:
        return float(np.sum(self.weight(self.ms) * np.abs(self.data)))

    def is_real_symmetric(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.data - np.conj(self.data[::-1]))) <= tol)

    def resize(self, mmax: int) -> "SeqW":
        out = SeqW.zero(mmax, self.weight)
        lo = min(self.mmax, mmax)
        out.data[mmax - lo : mmax + lo + 1] = self.data[self.mmax - lo : self.mmax + lo + 1]
        return out

    def __add__(self, other: "SeqW") -> "SeqW":
        M = max(self.mmax, other.mmax)
        return SeqW(self.resize(M).data + other.resize(M).data, weight=self.weight)

    def __mul__(self, c) -> "SeqW":
        return SeqW(self.data * c, weight=self.weight)

    __rmul__ = __mul__


def conv(x: SeqW, y: SeqW, mmax: int | None = None) -> SeqW:
    """(x*y)(m) = sum_l x(m-l) y(l), truncated back to a symmetric window."""
    if type(x.weight) is not type(y.weight) or x.weight != y.weight:
        raise ConfigurationError("convolution requires matching weights")
    full = np.convolve(x.data, y.data)
    M = x.mmax + y.mmax
    out_m = M if mmax is None else mmax
    out = SeqW.zero(out_m, x.weight)
    lo = min(M, out_m)
    out.data[out_m - lo : out_m + lo + 1] = full[M - lo : M + lo + 1]
    return out


class Field:
    """u(n, m) for n = 0..nmax, |m| <= mmax, with decay rate sigma and weight w."""

    def __init__(self, values: np.ndarray, weight=Weight("unit"), sigma: float = 0.0):
        values = np.asarray(values, dtype=complex)
        if values.ndim != 2 or values.shape[1] % 2 == 0:
            raise ConfigurationError("Field values must be (nmax+1, 2*mmax+1)")
        self.values = values
        self.weight = weight
        self.sigma = sigma

    @classmethod
    def zero(cls, nmax: int, mmax: int, weight=Weight("unit"), sigma: float = 0.0) -> "Field":
        return cls(np.zeros((nmax + 1, 2 * mmax + 1), dtype=complex), weight, sigma)

    @property
    def nmax(self) -> int:
        return self.values.shape[0] - 1

    @property
    def mmax(self) -> int:
        return self.values.shape[1] // 2

    @property
    def ms(self) -> np.ndarray:
        return np.arange(-self.mmax, self.mmax + 1)

    def __getitem__(self, nm):
        n, m = nm
        if 0 <= n <= self.nmax and abs(m) <= self.mmax:
            return self.values[n, m + self.mmax]
        return 0j

    def row(self, n: int) -> np.ndarray:
        return self.values[n]

    def norm(self, sigma: float | None = None) -> float:
        """||u||_{sigma,w} over the stored range."""
        s = self.sigma if sigma is None else sigma
        env = np.exp(s * np.arange(self.values.shape[0]))
        sup = np.max(np.abs(self.values) * env[:, None], axis=0)
        return float(np.sum(self.weight(self.ms) * sup))

    def copy(self) -> "Field":
        return Field(self.values.copy(), self.weight, self.sigma)

    def is_real_symmetric(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.values - np.conj(self.values[:, ::-1]))) <= tol)


def forward_difference(u: Field) -> Field:
    """(Delta u)(n, m) = u(n-1, m) - u(n, m) for n >= 1; zero row at n = 0."""
    d = np.zeros_like(u.values)
    d[1:] = u.values[:-1] - u.values[1:]
    return Field(d, u.weight, u.sigma)


def mconv_rows(a: np.ndarray, b: np.ndarray, mmax: int) -> np.ndarray:
    """Row-wise m-convolution of two (N, 2M+1) arrays, cropped to window mmax."""
    full = fftconvolve(a, b, mode="full", axes=1)
    M = (a.shape[1] - 1) // 2 + (b.shape[1] - 1) // 2
    return full[:, M - mmax : M + mmax + 1]
