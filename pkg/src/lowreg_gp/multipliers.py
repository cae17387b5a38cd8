"""Diagonal Fourier multipliers: free Schroedinger flow, phi-functions, filter.

With ``Delta -> -|k|^2`` the operator ``phi(c * (-i tau Delta))`` acts on mode
``k`` as multiplication by ``phi(i c tau |k|^2)``.
"""

from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np

from .spectral import Field

PHI1_SWITCH = 1e-2
# phi2's closed form loses ~|z|^-1 digits to cancellation; the series is used
# on a wider disc where 20 terms still reach round-off.
PHI2_SWITCH = 1.0

_PHI1_TAYLOR = np.array([1.0 / factorial(n + 1) for n in range(10)])
_PHI2_TAYLOR = np.array([(n + 1) / factorial(n + 2) for n in range(22)])


def _horner(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(z)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc


def phi1_scalar(z):
    """``(exp(z) - 1) / z`` with the removable singularity filled in.

    Accepts scalars or arrays.
    """
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < PHI1_SWITCH
    safe = np.where(small, 1.0, z)
    out = np.where(small, _horner(_PHI1_TAYLOR, z), np.expm1(safe) / safe)
    return out[()] if out.ndim == 0 else out


def phi2_scalar(z):
    """``(exp(z) - phi1(z)) / z``, equal to ``1/2`` at the origin."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < PHI2_SWITCH
    safe = np.where(small, 1.0, z)
    out = np.where(
        small, _horner(_PHI2_TAYLOR, z), (np.exp(safe) - phi1_scalar(safe)) / safe
    )
    return out[()] if out.ndim == 0 else out


_PHI = {"phi1": phi1_scalar, "phi2": phi2_scalar}


# Symbols are cached per (grid, parameters): time stepping reuses a handful of
# step sizes millions of times.  Cached arrays are read-only.
def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@lru_cache(maxsize=256)
def exp_laplacian_symbol(grid, t: float) -> np.ndarray:
    return _frozen(np.exp(-1j * t * grid.k_squared))


@lru_cache(maxsize=256)
def phi_symbol(kind: str, grid, c: float, tau: float) -> np.ndarray:
    try:
        phi = _PHI[kind]
    except KeyError:
        raise ValueError(f"unknown phi kind {kind!r}; use 'phi1' or 'phi2'") from None
    return _frozen(np.asarray(phi(1j * c * tau * grid.k_squared)))


@lru_cache(maxsize=256)
def psi_symbol(grid, tau: float) -> np.ndarray:
    return _frozen(np.asarray(phi1_scalar(1j * tau * grid.k_norm)))


def apply_exp_laplacian(a: Field, t: float) -> Field:
    """Free flow ``exp(i t Delta) a``; mode ``k`` picks up ``exp(-i t |k|^2)``."""
    return Field(a.grid, a.coeffs * exp_laplacian_symbol(a.grid, t))


def apply_phi(kind: str, a: Field, c: float, tau: float) -> Field:
    """``phi(-i c tau Delta) a`` for ``kind`` in ``{'phi1', 'phi2'}``."""
    return Field(a.grid, a.coeffs * phi_symbol(kind, a.grid, c, tau))


def apply_filter_psi(a: Field, tau: float) -> Field:
    """Stabilising filter ``phi1(i tau |grad|)``."""
    return Field(a.grid, a.coeffs * psi_symbol(a.grid, tau))
