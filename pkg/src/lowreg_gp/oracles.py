"""Independent reference values used by the test-suite and ``selftest``.

Nothing here is used by the integrators themselves.
"""

from __future__ import annotations

import itertools

import numpy as np

from .spectral import Field, Grid


def _integral_exp(phase_rate: float, tau: float) -> complex:
    """``int_0^tau exp(i a z) dz`` in closed form."""
    if phase_rate == 0:
        return complex(tau)
    return (np.exp(1j * phase_rate * tau) - 1.0) / (1j * phase_rate)


def lri1_step_by_convolution(u: Field, V: Field, tau: float) -> Field:
    """One first-order low-regularity step assembled mode by mode.

    Frequency interactions are summed explicitly: ``V_{l1} u_{l2}`` feeds mode
    ``l1 + l2`` with weight ``int_0^tau exp(i z l1^2) dz`` and
    ``conj(u_{k1}) u_{k2} u_{k3}`` feeds ``-k1 + k2 + k3`` with weight
    ``int_0^tau exp(2 i z |k1|^2) dz``; i.e. only the dominant part of each
    resonance is integrated and the rest is frozen at zero.  Target indices
    wrap modulo ``K`` so the result is comparable with an aliased
    pseudo-spectral product.  Cost is ``O(N^3)``; keep grids tiny.
    """
    grid = u.grid
    K = grid.K
    ks = grid.wavenumbers
    modes = list(itertools.product(range(K), repeat=grid.d))
    kvec = {m: np.array([ks[i] for i in m]) for m in modes}
    uc, Vc = u.coeffs, V.coeffs
    J = np.zeros(grid.shape, dtype=complex)

    def target(vec):
        return tuple(int(x) % K for x in vec)

    for m1 in modes:
        l1 = kvec[m1]
        w = _integral_exp(float(l1 @ l1), tau)
        for m2 in modes:
            J[target(l1 + kvec[m2])] += Vc[m1] * uc[m2] * w
    for m1 in modes:
        k1 = kvec[m1]
        # conj(u) carries mode -k1 with amplitude conj(u_{k1})
        w = _integral_exp(2.0 * float(k1 @ k1), tau)
        c1 = np.conj(uc[m1]) * w
        for m2 in modes:
            for m3 in modes:
                J[target(-k1 + kvec[m2] + kvec[m3])] += c1 * uc[m2] * uc[m3]
    out = np.exp(-1j * tau * grid.k_squared) * (uc - 1j * J)
    return Field(grid, out)


def plane_wave(grid: Grid, k, amplitude: complex, t: float) -> Field:
    """Exact solution ``a exp(i k.x - i (|k|^2 + |a|^2) t)`` for ``V = 0``."""
    k = np.atleast_1d(k)
    omega = float(k @ k) + abs(amplitude) ** 2
    return Field.mode(grid, k, amplitude * np.exp(-1j * omega * t))


def constant_solution(grid: Grid, c: complex, V0: complex, t: float) -> Field:
    """Exact solution for constant data ``c`` and constant potential ``V0``.

    ``|u|^2`` grows like ``exp(2 Im(V0) t)``; for real ``V0`` this reduces to
    ``c exp(-i (V0 + |c|^2) t)``.
    """
    g = 2.0 * np.imag(V0)
    mass_integral = t if g == 0 else np.expm1(g * t) / g
    value = c * np.exp(-1j * V0 * t - 1j * abs(c) ** 2 * mass_integral)
    return Field.constant(grid, value)
