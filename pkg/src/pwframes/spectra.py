"""Core numeric substrate: dyadic-periodic sequences, truncated Fourier
spectra, DFT, inner products, and frame coefficients.

Everything lives in coefficient space.  A 1-periodic function f is represented
by its finitely supported Fourier table f^(n), and a mask at dyadic level j by
a 2**j-periodic complex value table.  All containers are immutable after
construction and every operation is a pure function, so concurrent use needs
no synchronization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DyadicSequence",
    "Spectrum",
    "FrameIndex",
    "frame_shifts",
    "dft",
    "fold_pair",
    "frame_coefficients",
    "inner_product",
]


def _frozen_complex(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.complex128).copy()
    arr.setflags(write=False)
    return arr


def frame_shifts(level: int) -> np.ndarray:
    """Shift indices k used at the given level: 2**level integers.

    For level >= 1 these run from -2**(level-1)+1 to 2**(level-1) inclusive;
    level 0 has the single shift 0 (the formula degenerates to half-integers
    there, and the energy bookkeeping needs exactly 2**level shifts).
    """
    if level < 0:
        raise ValueError(f"level must be nonnegative, got {level}")
    if level == 0:
        return np.array([0])
    half = 1 << (level - 1)
    return np.arange(-half + 1, half + 1)


@dataclass(frozen=True)
class DyadicSequence:
    """A 2**level-periodic complex sequence stored over one period.

    ``values[n]`` holds the value at n = 0..2**level-1; evaluation at any
    integer reduces modulo the period.
    """

    level: int
    values: np.ndarray

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"level must be nonnegative, got {self.level}")
        arr = _frozen_complex(self.values)
        if arr.ndim != 1 or arr.size != (1 << self.level):
            raise ValueError(
                f"level {self.level} sequence needs {1 << self.level} values, "
                f"got shape {arr.shape}"
            )
        object.__setattr__(self, "values", arr)

    @property
    def period(self) -> int:
        return 1 << self.level

    def at(self, n):
        """Value at integer index n (scalar or array), reduced mod the period."""
        return self.values[np.mod(n, self.period)]

    @classmethod
    def constant(cls, level: int, value: complex) -> "DyadicSequence":
        return cls(level, np.full(1 << level, value, dtype=np.complex128))


@dataclass(frozen=True)
class Spectrum:
    """Truncated Fourier-coefficient table of a 1-periodic function.

    Coefficients cover the contiguous support n_min..n_min+len(coeffs)-1 and
    are zero outside.  With trigonometric-polynomial inputs every sum over all
    integers below is exact.
    """

    n_min: int
    coeffs: np.ndarray

    def __post_init__(self):
        arr = _frozen_complex(self.coeffs)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("coeffs must be a nonempty 1-d array")
        object.__setattr__(self, "coeffs", arr)

    @property
    def n_max(self) -> int:
        return self.n_min + self.coeffs.size - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def at(self, n):
        """Coefficient at integer frequency n (scalar or array); 0 off-support."""
        n = np.asarray(n)
        idx = n - self.n_min
        inside = (idx >= 0) & (idx < self.coeffs.size)
        out = np.zeros(n.shape, dtype=np.complex128)
        out[inside] = self.coeffs[idx[inside]]
        if n.ndim == 0:
            return complex(out[()])
        return out

    def norm_sq(self) -> float:
        """Squared L2 norm, equal to the sum of squared coefficient moduli."""
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def scaled(self, factor: complex) -> "Spectrum":
        return Spectrum(self.n_min, self.coeffs * factor)

    @classmethod
    def delta(cls, n0: int, value: complex = 1.0) -> "Spectrum":
        return cls(n0, np.array([value], dtype=np.complex128))

    @classmethod
    def from_values(cls, table: dict[int, complex]) -> "Spectrum":
        lo, hi = min(table), max(table)
        coeffs = np.zeros(hi - lo + 1, dtype=np.complex128)
        for n, v in table.items():
            coeffs[n - lo] = v
        return cls(lo, coeffs)


@dataclass(frozen=True)
class FrameIndex:
    """Index (j, m, k) of one frame element: level, generator, shift."""

    j: int
    m: int
    k: int

    def __post_init__(self):
        if self.j < 0:
            raise ValueError("level must be nonnegative")
        if self.m < 1:
            raise ValueError("generator index starts at 1")
        shifts = frame_shifts(self.j)
        if not (shifts[0] <= self.k <= shifts[-1]):
            raise ValueError(
                f"shift {self.k} outside the level-{self.j} shift range "
                f"[{shifts[0]}, {shifts[-1]}]"
            )


def dft(values) -> np.ndarray:
    """Unnormalized DFT X(k) = sum_n x(n) exp(-2 pi i k n / N), N a power of two.

    Satisfies sum |X|^2 = N * sum |x|^2.
    """
    arr = np.asarray(values, dtype=np.complex128)
    n = arr.size
    if n == 0 or (n & (n - 1)) != 0:
        raise ValueError(f"length must be a power of two, got {n}")
    return np.fft.fft(arr)


def fold_pair(f: Spectrum, g: Spectrum, level: int) -> DyadicSequence:
    """Fold the product table f^(n) conj(g^(n)) to period 2**level.

    h(n) = sum_q f^(2**level q + n) conj(g^(2**level q + n)); the sum is finite
    by truncation and an empty support overlap yields the zero sequence.
    """
    size = 1 << level
    h = np.zeros(size, dtype=np.complex128)
    lo = max(f.n_min, g.n_min)
    hi = min(f.n_max, g.n_max)
    if lo <= hi:
        ns = np.arange(lo, hi + 1)
        prod = f.coeffs[lo - f.n_min : hi + 1 - f.n_min] * np.conj(
            g.coeffs[lo - g.n_min : hi + 1 - g.n_min]
        )
        np.add.at(h, np.mod(ns, size), prod)
    return DyadicSequence(level, h)


def frame_coefficients(f: Spectrum, psi: Spectrum, level: int) -> np.ndarray:
    """Analysis coefficients <f, psi(. + k 2**-level)> for all level shifts k.

    Computed as the DFT of the folded product table; entry i corresponds to
    frame_shifts(level)[i].
    """
    h = fold_pair(f, psi, level)
    transform = dft(h.values)
    return transform[np.mod(frame_shifts(level), h.period)]


def inner_product(f: Spectrum, g: Spectrum) -> complex:
    """<f, g> = sum_n f^(n) conj(g^(n)) over the support overlap."""
    lo = max(f.n_min, g.n_min)
    hi = min(f.n_max, g.n_max)
    if lo > hi:
        return 0.0 + 0.0j
    return complex(
        np.sum(
            f.coeffs[lo - f.n_min : hi + 1 - f.n_min]
            * np.conj(g.coeffs[lo - g.n_min : hi + 1 - g.n_min])
        )
    )
