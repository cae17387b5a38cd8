"""Periodic Fourier grid, fields and the pseudo-spectral algebra on them.

Coefficients are stored so that ``u(x) = sum_k u_k exp(i k.x)`` on the torus
``[0, 2pi)^d``; the forward transform is therefore ``fft(samples) / N`` with
``N = K**d``.  Arrays keep numpy's FFT ordering (``0, 1, ..., K/2-1, -K/2,
..., -1`` along every axis).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft


class GridMismatchError(ValueError):
    """Two fields that must share a grid do not."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[0, 2pi)^d`` with ``K`` modes per axis.

    Parameters
    ----------
    d : int
        Spatial dimension, 1, 2 or 3.
    K : int
        Even number of points (and Fourier modes) per axis.
    dealias : bool
        If True, products of fields are truncated with the 2/3 rule.
    """

    d: int
    K: int
    dealias: bool = False

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if not isinstance(self.K, (int, np.integer)) or self.K < 2 or self.K % 2:
            raise ValueError(f"K must be an even integer >= 2, got {self.K!r}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.K,) * self.d

    @property
    def size(self) -> int:
        return self.K**self.d

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer frequencies of one axis in FFT order."""
        return np.fft.fftfreq(self.K, d=1.0 / self.K).round().astype(np.int64)

    @cached_property
    def k_axes(self) -> tuple[np.ndarray, ...]:
        """Broadcast-ready integer wavenumber arrays, one per axis."""
        return tuple(
            np.asarray(a, dtype=float)
            for a in np.meshgrid(*([self.wavenumbers] * self.d), indexing="ij")
        )

    @cached_property
    def k_squared(self) -> np.ndarray:
        """``|k|^2`` for every multi-index."""
        return sum(k * k for k in self.k_axes)

    @cached_property
    def k_norm(self) -> np.ndarray:
        """Euclidean length ``|k|`` of every multi-index."""
        return np.sqrt(self.k_squared)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep = np.ones(self.shape, dtype=bool)
        for k in self.k_axes:
            keep &= np.abs(k) <= self.K / 3.0
        return keep

    @cached_property
    def points(self) -> tuple[np.ndarray, ...]:
        """Physical coordinates of the grid nodes, one array per axis."""
        x = 2.0 * np.pi * np.arange(self.K) / self.K
        return tuple(np.meshgrid(*([x] * self.d), indexing="ij"))

    def mode_index(self, k) -> tuple[int, ...]:
        """Array index holding the integer multi-index ``k`` (taken mod K)."""
        k = np.atleast_1d(k)
        if k.size != self.d:
            raise ValueError(f"mode {tuple(k)} does not match dimension {self.d}")
        return tuple(int(kk) % self.K for kk in k)


@dataclass(frozen=True, eq=False)
class Field:
    """Complex grid function held by its Fourier coefficients.

    Instances are treated as immutable; arithmetic returns new fields.
    """

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.size != self.grid.size:
            raise ValueError(
                f"expected {self.grid.size} coefficients for {self.grid}, got {c.size}"
            )
        c = c.reshape(self.grid.shape)
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @cached_property
    def samples(self) -> np.ndarray:
        """Physical values at the grid nodes (read-only view)."""
        s = sfft.ifftn(self.coeffs, norm="forward")
        s.flags.writeable = False
        return s

    @classmethod
    def zeros(cls, grid: Grid) -> Field:
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def constant(cls, grid: Grid, value: complex) -> Field:
        c = np.zeros(grid.shape, dtype=complex)
        c[(0,) * grid.d] = value
        return cls(grid, c)

    @classmethod
    def mode(cls, grid: Grid, k, amplitude: complex = 1.0) -> Field:
        """Pure mode ``amplitude * exp(i k.x)``."""
        c = np.zeros(grid.shape, dtype=complex)
        c[grid.mode_index(k)] = amplitude
        return cls(grid, c)

    @classmethod
    def from_function(cls, grid: Grid, func) -> Field:
        """Sample ``func(*points)`` on the grid and transform."""
        return to_fourier(np.broadcast_to(func(*grid.points), grid.shape), grid)

    def coefficient(self, k) -> complex:
        return complex(self.coeffs[self.grid.mode_index(k)])

    def __add__(self, other):
        if isinstance(other, Field):
            _same_grid(self, other)
            return Field(self.grid, self.coeffs + other.coeffs)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Field):
            _same_grid(self, other)
            return Field(self.grid, self.coeffs - other.coeffs)
        return NotImplemented

    def __neg__(self):
        return Field(self.grid, -self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, Field):
            return NotImplemented
        return Field(self.grid, self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Field(self.grid, self.coeffs / complex(scalar))

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.coeffs).all())


def _same_grid(*fields: Field) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatchError(f"{grid} vs {f.grid}")
    return grid


def to_fourier(samples, grid: Grid) -> Field:
    """Transform physical samples to a :class:`Field`."""
    s = np.asarray(samples, dtype=complex)
    if s.size != grid.size:
        raise ValueError(f"expected {grid.size} samples for {grid}, got {s.size}")
    return Field(grid, sfft.fftn(s.reshape(grid.shape), norm="forward"))


def from_fourier(f: Field) -> np.ndarray:
    """Physical samples of ``f`` (a fresh writable array)."""
    return np.array(f.samples)


def _from_product(grid: Grid, samples: np.ndarray) -> Field:
    c = sfft.fftn(samples, norm="forward")
    if grid.dealias:
        c = np.where(grid.dealias_mask, c, 0.0)
    return Field(grid, c)


def pointwise_mul(a: Field, b: Field, *rest: Field) -> Field:
    """Pseudo-spectral product of two or more fields."""
    grid = _same_grid(a, b, *rest)
    s = a.samples * b.samples
    for f in rest:
        s = s * f.samples
    return _from_product(grid, s)


def conj_field(a: Field) -> Field:
    """Complex conjugate: coefficient at ``k`` becomes ``conj(a_{-k})``."""
    c = np.conj(a.coeffs)
    for ax in range(a.grid.d):
        c = np.roll(np.flip(c, axis=ax), 1, axis=ax)
    return Field(a.grid, c)


def gradient(a: Field) -> list[Field]:
    """Spectral partial derivatives, symbol ``i k_l`` on axis ``l``."""
    return [Field(a.grid, 1j * k * a.coeffs) for k in a.grid.k_axes]


def sobolev_norm(a: Field, r: float) -> float:
    """Discrete ``H^r`` norm ``sqrt(sum_k (1 + |k|^(2r)) |a_k|^2)``.

    At ``r = 0`` every mode carries weight 2.
    """
    if r < 0:
        raise ValueError(f"Sobolev exponent must be >= 0, got {r}")
    weight = 1.0 + a.grid.k_norm ** (2.0 * r)
    return float(np.sqrt(np.sum(weight * np.abs(a.coeffs) ** 2)))
