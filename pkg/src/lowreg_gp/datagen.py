"""Random data of prescribed Sobolev regularity.

Mode ``k`` receives ``(1 + |k|)^(-theta - 1/2) * (x + i y)`` with ``x, y``
uniform on ``[0, 1)``.  The uniforms come from a Philox stream whose key is the
seed and whose counter is the integer multi-index, so a given mode gets the
same value on every grid that contains it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import Field, Grid

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RegularitySpec:
    """Regularity ``theta`` and RNG identity of one random field.

    ``stream`` separates independent fields drawn under the same seed (the
    harness uses 0 for the initial datum and 1 for the potential).
    """

    theta: float
    seed: int
    grid: Grid
    stream: int = 0

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")


def mode_uniforms(seed: int, k, stream: int = 0) -> tuple[float, float]:
    """The two uniforms assigned to multi-index ``k`` under ``(seed, stream)``."""
    counter = np.zeros(4, dtype=np.uint64)
    counter[: len(k)] = [int(kk) & _MASK64 for kk in k]
    key = np.array([int(seed) & _MASK64, int(stream) & _MASK64], dtype=np.uint64)
    bitgen = np.random.Philox(key=key, counter=counter)
    x, y = np.random.Generator(bitgen).random(2)
    return float(x), float(y)


def random_sobolev_field(spec: RegularitySpec) -> Field:
    """Field with coefficients ``(1 + |k|)^(-theta - 1/2) a_k``."""
    grid = spec.grid
    ks = grid.wavenumbers
    a = np.empty(grid.shape, dtype=complex)
    for idx in np.ndindex(*grid.shape):
        x, y = mode_uniforms(spec.seed, [ks[i] for i in idx], spec.stream)
        a[idx] = complex(x, y)
    envelope = (1.0 + grid.k_norm) ** (-spec.theta - 0.5)
    return Field(grid, envelope * a)


def truncated_projection(a: Field, K_target: int) -> Field:
    """Keep the modes whose components all lie in ``[-K_target/2, K_target/2 - 1]``.

    The result lives on the coarser grid with ``K_target`` modes per axis.
    """
    K = a.grid.K
    if K_target < 2 or K_target % 2 or K_target > K:
        raise ValueError(f"cannot project K={K} onto K_target={K_target}")
    target = Grid(a.grid.d, K_target, a.grid.dealias)
    idx = np.ix_(*([target.wavenumbers % K] * a.grid.d))
    return Field(target, a.coeffs[idx])
