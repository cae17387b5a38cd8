"""One-step maps for the Gross-Pitaevskii equation on the torus.

The equation is ``i u_t = -Delta u + V u + |u|^2 u`` with nonlinearity
``f(u, V) = -i (V u + u^2 conj(u))``.  Besides the three low-regularity
integrators (first order, second order with finite-difference stabilisation,
second order with a filtered commutator) the module carries Lie/Strang
splitting and exponential Euler baselines, plus a Gauss-Legendre evaluation of
the first-order oscillatory integral that tests use as an oracle.
"""

from __future__ import annotations

import enum
import weakref
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .multipliers import (
    apply_exp_laplacian,
    apply_phi,
    exp_laplacian_symbol,
    phi1_scalar,
    phi_symbol,
    psi_symbol,
)
from .spectral import Field, _from_product, _same_grid, conj_field, gradient, pointwise_mul


class SchemeId(str, enum.Enum):
    LRI1 = "lri1"
    LRI2_FD = "lri2_fd"
    LRI2_FILTERED = "lri2_filtered"
    LIE_SPLIT = "lie"
    STRANG_SPLIT = "strang"
    EXP_EULER = "exp_euler"

    @classmethod
    def parse(cls, name) -> SchemeId:
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        raise ValueError(
            f"unknown scheme {name!r}; choose from {', '.join(m.value for m in cls)}"
        )


@dataclass(frozen=True)
class StepConfig:
    tau: float
    scheme: SchemeId = SchemeId.LRI1
    conjugate_commutator: bool = False

    def __post_init__(self):
        if not (0.0 < self.tau <= 1.0):
            raise ValueError(f"time step must lie in (0, 1], got {self.tau}")
        object.__setattr__(self, "scheme", SchemeId.parse(self.scheme))


class BlowUpError(FloatingPointError):
    """Non-finite coefficients appeared during time stepping."""

    def __init__(self, step: int, scheme: SchemeId | str):
        self.step = step
        self.scheme = scheme
        super().__init__(f"non-finite state after step {step} ({scheme})")


def nonlinearity_f(u: Field, V: Field) -> Field:
    """``-i (V u + u^2 conj(u))``."""
    _same_grid(u, V)
    s = u.samples
    return _from_product(u.grid, -1j * (V.samples * s + s * s * np.conj(s)))


def commutator_C(u: Field, v: Field, w: Field, conjugate_middle: bool = False) -> Field:
    """``-2i (grad w . grad u + (grad u . grad u) v + grad(u^2) . grad v)``.

    With ``conjugate_middle`` the middle term uses ``grad u . grad conj(u)``
    instead of the unconjugated square.
    """
    grid = _same_grid(u, v, w)
    du = [g.samples for g in gradient(u)]
    dv = [g.samples for g in gradient(v)]
    dw = [g.samples for g in gradient(w)]
    du2 = [g.samples for g in gradient(pointwise_mul(u, u))]
    if conjugate_middle:
        mid = sum(a * np.conj(a) for a in du)
    else:
        mid = sum(a * a for a in du)
    total = sum(a * b for a, b in zip(dw, du)) + mid * v.samples
    total = total + sum(a * b for a, b in zip(du2, dv))
    return _from_product(grid, -2j * total)


def quadratic_source(u: Field, V: Field) -> Field:
    """``|u|^4 u + 3 u |u|^2 V - |u|^2 u conj(V) + u V^2``."""
    _same_grid(u, V)
    return _from_product(u.grid, _quadratic_samples(u.samples, V.samples))


# Internal helpers work on physical sample arrays to keep the number of FFTs
# per step low.  Multiplier symbols depend on |k| only, hence are even in k, so
# ``sym(conj(u)) = conj(conj(sym)(u))`` needs no coefficient reflection.
def _ifft(grid, coeffs):
    return sfft.ifftn(coeffs, norm="forward")


def _apply_to_conj(u: Field, symbol: np.ndarray) -> np.ndarray:
    """Samples of ``symbol(D) conj(u)``."""
    return np.conj(_ifft(u.grid, np.conj(symbol) * u.coeffs))


_POTENTIAL_CACHE: "weakref.WeakKeyDictionary[Field, dict]" = weakref.WeakKeyDictionary()


def _potential_samples(V: Field, key: tuple, symbol: np.ndarray) -> np.ndarray:
    """Samples of ``symbol(D) V``, memoised per potential field."""
    cache = _POTENTIAL_CACHE.setdefault(V, {})
    out = cache.get(key)
    if out is None:
        out = _ifft(V.grid, symbol * V.coeffs)
        out.flags.writeable = False
        cache[key] = out
    return out


def _phi_pair(u: Field, V: Field, tau: float, kind: str) -> np.ndarray:
    """Samples of ``u phi(-i tau Delta) V + u^2 phi(-2i tau Delta) conj(u)``."""
    grid = u.grid
    s = u.samples
    pv = _potential_samples(V, (kind, tau), phi_symbol(kind, grid, 1.0, tau))
    pu = _apply_to_conj(u, phi_symbol(kind, grid, 2.0, tau))
    return s * pv + s * s * pu


def _quadratic_samples(s: np.ndarray, p: np.ndarray) -> np.ndarray:
    m = (s * np.conj(s)).real
    return m * m * s + 3 * s * m * p - m * s * np.conj(p) + s * p * p


def step_lri1(u: Field, V: Field, tau: float) -> Field:
    """First-order low-regularity step.

    ``exp(i tau Delta) [u - i tau (u phi1(-i tau Delta) V
    + u^2 phi1(-2 i tau Delta) conj(u))]``
    """
    _same_grid(u, V)
    inner = u - 1j * tau * _from_product(u.grid, _phi_pair(u, V, tau, "phi1"))
    return apply_exp_laplacian(inner, tau)


def step_lri2_fd(u: Field, V: Field, tau: float) -> Field:
    """Second-order step stabilised by a finite difference in the filter time.

    Lines of the update, before the outer free flow where it applies:
    ``u - i tau (phi1 terms) + i tau (phi2 terms) - tau^2/2 S(u, V)``, then
    ``- i tau (phi2 terms evaluated at the freely flowed u, conj(u), V)``.
    """
    grid = _same_grid(u, V)
    s = u.samples
    nonlin = (
        -1j * tau * _phi_pair(u, V, tau, "phi1")
        + 1j * tau * _phi_pair(u, V, tau, "phi2")
        - (0.5 * tau * tau) * _quadratic_samples(s, V.samples)
    )
    flow = exp_laplacian_symbol(grid, tau)
    su = _ifft(grid, flow * u.coeffs)
    pv = _potential_samples(
        V, ("flowed-phi2", tau), phi_symbol("phi2", grid, 1.0, tau) * flow
    )
    pu = _apply_to_conj(u, phi_symbol("phi2", grid, 2.0, tau) * flow)
    flowed = su * pv + su * su * pu
    out = flow * sfft.fftn(nonlin, norm="forward") - 1j * tau * sfft.fftn(
        flowed, norm="forward"
    )
    return Field(grid, flow * u.coeffs + _dealiased(grid, out))


def step_lri2_filtered(
    u: Field, V: Field, tau: float, conjugate_commutator: bool = False
) -> Field:
    """Second-order step with the commutator damped by ``phi1(i tau |grad|)``."""
    grid = _same_grid(u, V)
    ubar = conj_field(u)
    comm = commutator_C(
        u,
        apply_phi("phi2", ubar, 2.0, tau),
        apply_phi("phi2", V, 1.0, tau),
        conjugate_middle=conjugate_commutator,
    )
    s = u.samples
    nonlin = -1j * tau * _phi_pair(u, V, tau, "phi1")
    nonlin = nonlin - (0.5 * tau * tau) * _quadratic_samples(s, V.samples)
    out = _dealiased(grid, sfft.fftn(nonlin, norm="forward"))
    out = u.coeffs + out - 1j * tau * tau * psi_symbol(grid, tau) * comm.coeffs
    return Field(grid, exp_laplacian_symbol(grid, tau) * out)


def _dealiased(grid, coeffs):
    """Truncate a nonlinear term to the two-thirds band on dealiased grids."""
    if grid.dealias:
        coeffs = np.where(grid.dealias_mask, coeffs, 0.0)
    return coeffs


def _pointwise_flow(u: Field, V: Field, t: float) -> Field:
    """Exact flow of ``i u_t = V u + |u|^2 u`` at every grid node.

    ``|u|^2`` evolves as ``|u0|^2 exp(2 Im(V) t)``, which is constant for a
    real potential; the phase integral then has a closed form through phi1.
    """
    cache = _POTENTIAL_CACHE.setdefault(V, {})
    factors = cache.get(("pointwise", t))
    if factors is None:
        p = V.samples
        factors = (np.exp(-1j * p * t), -1j * t * phi1_scalar(2.0 * p.imag * t))
        cache[("pointwise", t)] = factors
    rot, cubic = factors
    s = u.samples
    m0 = (s * np.conj(s)).real
    return _from_product(u.grid, s * rot * np.exp(cubic * m0))


def step_baseline(u: Field, V: Field, tau: float, which: SchemeId | str) -> Field:
    """Lie/Strang splitting or exponential Euler step."""
    _same_grid(u, V)
    which = SchemeId.parse(which)
    if which is SchemeId.LIE_SPLIT:
        return _pointwise_flow(apply_exp_laplacian(u, tau), V, tau)
    if which is SchemeId.STRANG_SPLIT:
        half = _pointwise_flow(u, V, 0.5 * tau)
        return _pointwise_flow(apply_exp_laplacian(half, tau), V, 0.5 * tau)
    if which is SchemeId.EXP_EULER:
        return apply_exp_laplacian(u + tau * nonlinearity_f(u, V), tau)
    raise ValueError(f"{which} is not a baseline scheme")


def step(u: Field, V: Field, cfg: StepConfig) -> Field:
    """Dispatch one step of ``cfg.scheme``."""
    if cfg.scheme is SchemeId.LRI1:
        return step_lri1(u, V, cfg.tau)
    if cfg.scheme is SchemeId.LRI2_FD:
        return step_lri2_fd(u, V, cfg.tau)
    if cfg.scheme is SchemeId.LRI2_FILTERED:
        return step_lri2_filtered(u, V, cfg.tau, cfg.conjugate_commutator)
    return step_baseline(u, V, cfg.tau, cfg.scheme)


def evolve(
    u0: Field,
    V: Field,
    cfg: StepConfig,
    n_steps: int,
    snapshot_every: int | None = None,
):
    """Apply ``n_steps`` steps of ``cfg.scheme`` starting from ``u0``.

    Returns the final field, or ``(final, snapshots)`` when ``snapshot_every``
    is given; ``snapshots`` is a list of ``(step_index, field)`` pairs that
    includes the initial and final states.

    Raises
    ------
    BlowUpError
        As soon as a step produces a non-finite coefficient.
    """
    if n_steps < 0:
        raise ValueError(f"n_steps must be >= 0, got {n_steps}")
    _same_grid(u0, V)
    u = u0
    snaps = [(0, u0)] if snapshot_every else None
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_steps + 1):
            u = step(u, V, cfg)
            if not u.is_finite():
                raise BlowUpError(n, cfg.scheme.value)
            if snaps is not None and (n % snapshot_every == 0 or n == n_steps):
                if snaps[-1][0] != n:
                    snaps.append((n, u))
    if snaps is not None:
        return u, snaps
    return u


def oscillatory_integral_oracle(
    u: Field, V: Field, tau: float, n_quad: int = 16, panels: int = 1
) -> Field:
    """Composite Gauss-Legendre value of the first-order oscillatory integral

    ``int_0^tau exp(-i z Delta)[V exp(i z Delta) u
    + (exp(i z Delta) u)^2 exp(-i z Delta) conj(u)] dz``.

    Only intended as a reference for tests.
    """
    if n_quad < 2:
        raise ValueError("n_quad must be >= 2")
    if panels < 1:
        raise ValueError("panels must be >= 1")
    _same_grid(u, V)
    x, w = np.polynomial.legendre.leggauss(n_quad)
    h = tau / panels
    ubar = conj_field(u)
    acc = np.zeros(u.grid.shape, dtype=complex)
    for p in range(panels):
        for xi, wi in zip(x, w):
            z = p * h + 0.5 * h * (xi + 1.0)
            fu = apply_exp_laplacian(u, z).samples
            fb = apply_exp_laplacian(ubar, -z).samples
            g = _from_product(u.grid, V.samples * fu + fu * fu * fb)
            acc += 0.5 * h * wi * apply_exp_laplacian(g, -z).coeffs
    return Field(u.grid, acc)
