"""Quick oracle and invariant checks behind ``lowreg-gp selftest``."""

from __future__ import annotations

import numpy as np

from . import oracles
from .datagen import RegularitySpec, random_sobolev_field
from .multipliers import apply_exp_laplacian, phi1_scalar, phi2_scalar
from .schemes import SchemeId, StepConfig, evolve, step
from .spectral import Field, Grid, from_fourier, sobolev_norm, to_fourier


def _data(grid, theta, seed):
    u = random_sobolev_field(RegularitySpec(theta, seed, grid, 0))
    V = random_sobolev_field(RegularitySpec(theta, seed, grid, 1))
    return u, V


def check_unitarity():
    g = Grid(1, 64)
    u, _ = _data(g, 1.0, 3)
    worst = 0.0
    for t in (0.1, 1.0, -2.5):
        v = apply_exp_laplacian(u, t)
        for r in (0.0, 0.5, 1.0, 2.0):
            a, b = sobolev_norm(u, r), sobolev_norm(v, r)
            worst = max(worst, abs(a - b) / a)
    return worst <= 1e-12, f"max relative norm change {worst:.2e}"


def check_group_law():
    g = Grid(2, 16)
    u, _ = _data(g, 1.0, 4)
    a = apply_exp_laplacian(apply_exp_laplacian(u, 0.3), 0.45)
    b = apply_exp_laplacian(u, 0.75)
    back = apply_exp_laplacian(apply_exp_laplacian(u, 0.7), -0.7)
    err = max(np.abs((a - b).coeffs).max(), np.abs((back - u).coeffs).max())
    return err <= 1e-12, f"max deviation {err:.2e}"


def check_phi_identity():
    y = np.concatenate([np.linspace(-50, 50, 401), [1e-9, -3e-3, 0.0099, 0.0101]])
    z = 1j * y
    err = np.abs(z * phi2_scalar(z) + phi1_scalar(z) - np.exp(z)).max()
    return err <= 1e-13, f"max |z phi2 + phi1 - e^z| = {err:.2e}"


def check_zero_fixed_point():
    g = Grid(1, 32)
    _, V = _data(g, 1.0, 5)
    zero = Field.zeros(g)
    worst = 0.0
    for scheme in SchemeId:
        out = step(zero, V, StepConfig(0.1, scheme))
        worst = max(worst, float(np.abs(out.coeffs).max()))
    return worst == 0.0, f"max |step(0)| = {worst:.1e} over {len(SchemeId)} schemes"


def check_parseval():
    g = Grid(1, 128)
    rng = np.random.default_rng(7)
    s = rng.standard_normal(128) + 1j * rng.standard_normal(128)
    f = to_fourier(s, g)
    mass = np.sum(np.abs(f.coeffs) ** 2)
    mean_sq = np.mean(np.abs(s) ** 2)
    rt = np.abs(from_fourier(f) - s).max() / np.abs(s).max()
    err = max(abs(mass - mean_sq) / mean_sq, rt)
    return err <= 1e-12, f"Parseval/round-trip deviation {err:.2e}"


def check_datagen():
    spec = RegularitySpec(1.5, 99, Grid(1, 64))
    a = random_sobolev_field(spec)
    b = random_sobolev_field(spec)
    fine = random_sobolev_field(RegularitySpec(1.5, 99, Grid(1, 128)))
    same = np.array_equal(a.coeffs, b.coeffs)
    shared = all(a.coefficient(k) == fine.coefficient(k) for k in range(-32, 32))
    return same and shared, f"deterministic={same}, K-consistent={shared}"


def check_convolution_oracle():
    g = Grid(1, 8)
    worst = 0.0
    for seed in range(5):
        u, V = _data(g, 1.0, seed)
        for tau in (0.3, 0.05):
            ref = oracles.lri1_step_by_convolution(u, V, tau)
            got = step(u, V, StepConfig(tau, SchemeId.LRI1))
            worst = max(worst, float(np.abs((got - ref).coeffs).max()))
    return worst <= 1e-12, f"max |LRI1 - brute-force convolution| = {worst:.2e}"


def check_plane_wave():
    g = Grid(1, 16)
    u0 = Field.mode(g, 1, 1.0)
    V = Field.zeros(g)
    exact = oracles.plane_wave(g, 1, 1.0, 1.0)
    split = evolve(u0, V, StepConfig(1 / 32, SchemeId.STRANG_SPLIT), 32)
    err_split = sobolev_norm(split - exact, 0)
    errs = []
    for tau in (1 / 32, 1 / 64):
        u = evolve(u0, V, StepConfig(tau, SchemeId.LRI1), round(1 / tau))
        errs.append(sobolev_norm(u - exact, 0))
    ratio = errs[0] / errs[1]
    ok = err_split <= 1e-12 and 1.7 <= ratio <= 2.3
    return ok, f"Strang error {err_split:.1e}, LRI1 error ratio {ratio:.2f} on halving tau"


CHECKS = [
    ("free-flow unitarity", check_unitarity),
    ("free-flow group law", check_group_law),
    ("phi identity", check_phi_identity),
    ("zero fixed point", check_zero_fixed_point),
    ("Parseval and round trip", check_parseval),
    ("datagen determinism", check_datagen),
    ("brute-force convolution oracle (K=8)", check_convolution_oracle),
    ("plane-wave solution", check_plane_wave),
]


def run_checks():
    """Run every check; returns ``[(name, passed, detail), ...]``."""
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results
