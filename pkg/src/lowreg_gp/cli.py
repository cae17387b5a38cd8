"""Command-line front end.

Usage::

    lowreg-gp run --scheme=lri2_fd --tau=0.01 --steps=100
    lowreg-gp converge --scheme=lri1 --theta=1.25 --norms=0,0.5,1
    lowreg-gp selftest

Values may also come from a flat ``key = value`` file given with ``--config``
(``#`` starts a comment); command-line flags override the file.

Exit status: 0 success, 1 validation error, 2 numerical blow-up,
3 unresolved reference solution.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import harness
from .schemes import BlowUpError, SchemeId, StepConfig, evolve
from .spectral import sobolev_norm

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BLOWUP = 2
EXIT_UNRESOLVED = 3

OUTPUT_ENV = "LOWREG_GP_OUTPUT"
COMMANDS = ("run", "converge", "selftest")


class UsageError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def _positive_float(text: str) -> float:
    value = float(_fraction(text))
    if value <= 0:
        raise UsageError(f"expected a positive number, got {text!r}")
    return value


def _nonneg_float(text: str) -> float:
    value = float(_fraction(text))
    if value < 0:
        raise UsageError(f"expected a non-negative number, got {text!r}")
    return value


def _int(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise UsageError(f"not an integer: {text!r}") from None


def _float_list(text: str) -> list[Fraction]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise UsageError("empty list")
    return [_fraction(t) for t in items]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


# name -> (parser, help).  Shared by the flag parser and the config file.
OPTIONS = {
    "scheme": (SchemeId.parse, "integrator: " + ", ".join(m.value for m in SchemeId)),
    "tau": (_fraction, "time step for 'run' (fractions like 1/64 accepted)"),
    "steps": (_int, "number of steps for 'run' (default T/tau)"),
    "T": (_fraction, "final time (default 1)"),
    "K": (_int, "Fourier modes per axis, even (default 256)"),
    "d": (_int, "spatial dimension 1-3 (default 1)"),
    "theta": (_nonneg_float, "regularity of both u0 and V"),
    "theta_u": (_nonneg_float, "regularity of u0 (overrides --theta)"),
    "theta_V": (_nonneg_float, "regularity of V (overrides --theta)"),
    "norms": (_float_list, "comma-separated Sobolev exponents r for errors (default 0)"),
    "tau_list": (_float_list, "comma-separated decreasing time steps for 'converge'"),
    "seed": (_int, "RNG seed for the random data (default 2022)"),
    "out": (str, f"output directory (default ${OUTPUT_ENV} or ./results)"),
    "dealias": (_bool, "2/3-rule dealiasing of products (true/false)"),
    "conjugate_commutator": (_bool, "use grad u . grad conj(u) in the commutator (true/false)"),
    "ref_refine": (_int, "reference step is min(tau_list) / ref_refine (default 64)"),
    "dump_state": (_bool, "'run': write the final coefficients to CSV (true/false)"),
}


@dataclass
class CliInvocation:
    command: str
    config_path: Path | None = None
    values: dict = field(default_factory=dict)


def _convert(name: str, text: str):
    try:
        return OPTIONS[name][0](text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def read_config(path) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in OPTIONS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _convert(key, value)
        except UsageError as exc:
            raise UsageError(f"{path}:{lineno}: {exc}") from None
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="lowreg-gp",
        allow_abbrev=False,
        description="Low-regularity integrators for the Gross-Pitaevskii equation.",
        epilog="Exit status: 0 ok, 1 validation error, 2 blow-up, 3 unresolved reference.",
    )
    parser.add_argument("command", choices=COMMANDS, help="what to do")
    parser.add_argument("--config", help="key = value file; flags override it")
    for name, (_, help_text) in OPTIONS.items():
        flag = "--" + name.replace("_", "-")
        parser.add_argument(flag, dest=name, metavar=name.upper(), help=help_text)
    return parser


def parse_invocation(argv) -> CliInvocation:
    """Turn ``argv`` into a validated :class:`CliInvocation`.

    Raises :class:`UsageError` on unknown flags or malformed values.
    """
    ns = build_parser().parse_args(list(argv))
    values = {}
    config_path = None
    if ns.config:
        config_path = Path(ns.config)
        values.update(read_config(config_path))
    for name in OPTIONS:
        raw = getattr(ns, name)
        if raw is not None:
            values[name] = _convert(name, raw)
    inv = CliInvocation(ns.command, config_path, values)
    if inv.command == "converge":
        experiment_config(inv)
    elif inv.command == "run":
        run_parameters(inv)
    return inv


def _output_dir(inv: CliInvocation) -> Path:
    return Path(inv.values.get("out") or os.environ.get(OUTPUT_ENV) or "results")


def _thetas(values) -> tuple[float, float]:
    theta = values.get("theta", 1.25)
    return values.get("theta_u", theta), values.get("theta_V", theta)


def experiment_config(inv: CliInvocation) -> harness.ExperimentConfig:
    v = inv.values
    T = v.get("T", Fraction(1))
    taus = v.get("tau_list", [Fraction(1, 2**j) for j in range(4, 11)])
    for tau in taus:
        if tau <= 0:
            raise UsageError(f"time steps must be positive, got {tau}")
        if (T / tau).denominator != 1:
            raise UsageError(f"time step {tau} does not divide T = {T}")
    theta_u, theta_V = _thetas(v)
    policy = harness.ReferencePolicy(refine=v.get("ref_refine", 64))
    try:
        return harness.ExperimentConfig(
            scheme=v.get("scheme", SchemeId.LRI1),
            K=v.get("K", 256),
            d=v.get("d", 1),
            T=float(T),
            taus=tuple(float(t) for t in taus),
            theta_u=theta_u,
            theta_V=theta_V,
            norms=tuple(float(r) for r in v.get("norms", [0])),
            seed=v.get("seed", 2022),
            reference=policy,
            dealias=v.get("dealias", False),
            conjugate_commutator=v.get("conjugate_commutator", False),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def run_parameters(inv: CliInvocation) -> tuple[harness.ExperimentConfig, float, int]:
    """``(config, tau, n_steps)`` for the ``run`` command."""
    v = inv.values
    tau = v.get("tau", Fraction(1, 100))
    if tau <= 0 or tau > 1:
        raise UsageError(f"time step must lie in (0, 1], got {tau}")
    if "steps" in v:
        steps = v["steps"]
        if steps < 0:
            raise UsageError("steps must be >= 0")
    else:
        T = v.get("T", Fraction(1))
        if (T / tau).denominator != 1:
            raise UsageError(f"time step {tau} does not divide T = {T}")
        steps = int(T / tau)
    theta_u, theta_V = _thetas(v)
    try:
        cfg = harness.ExperimentConfig(
            scheme=v.get("scheme", SchemeId.LRI1),
            K=v.get("K", 256),
            d=v.get("d", 1),
            T=float(tau * max(steps, 1)),
            taus=(float(tau),),
            theta_u=theta_u,
            theta_V=theta_V,
            norms=tuple(float(r) for r in v.get("norms", [0, 0.5, 1])),
            seed=v.get("seed", 2022),
            dealias=v.get("dealias", False),
            conjugate_commutator=v.get("conjugate_commutator", False),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg, float(tau), steps


def write_state(u, path) -> Path:
    """Coefficients as ``k_1[,k_2,k_3],re,im`` rows, mode index first."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = u.grid
    ks = grid.wavenumbers
    axes = ["k1", "k2", "k3"][: grid.d]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(axes + ["re", "im"])
        for idx in np.ndindex(*grid.shape):
            c = u.coeffs[idx]
            w.writerow([int(ks[i]) for i in idx] + [format(c.real, ".17g"), format(c.imag, ".17g")])
    return path


def _cmd_run(inv: CliInvocation, out) -> int:
    cfg, tau, steps = run_parameters(inv)
    u0, V = harness.initial_data(cfg)
    start = time.perf_counter()
    u = evolve(u0, V, StepConfig(tau, cfg.scheme, cfg.conjugate_commutator), steps)
    wall = time.perf_counter() - start
    print(f"scheme={cfg.scheme.value} tau={tau:.6g} steps={steps} T={tau * steps:.6g} "
          f"K={cfg.K} d={cfg.d} theta_u={cfg.theta_u:g} theta_V={cfg.theta_V:g}", file=out)
    for r in cfg.norms:
        print(f"  ||u0||_H^{r:g} = {sobolev_norm(u0, r):.12e}   "
              f"||u(T)||_H^{r:g} = {sobolev_norm(u, r):.12e}", file=out)
    print(f"  wall time {wall:.3f} s", file=out)
    if inv.values.get("dump_state"):
        path = write_state(u, _output_dir(inv) / f"state_{cfg.scheme.value}.csv")
        print(f"  state written to {path}", file=out)
    return EXIT_OK


def _cmd_converge(inv: CliInvocation, out) -> int:
    cfg = experiment_config(inv)
    report = harness.convergence_study(cfg)
    stem = f"convergence_{cfg.scheme.value}_theta{cfg.theta_u:g}"
    paths = harness.write_report(report, _output_dir(inv), stem)
    print(report.summary(), file=out)
    for p in paths:
        print(f"wrote {p}", file=out)
    blown = [t for t, s in report.status.items() if s != "ok"]
    if blown:
        for t in blown:
            print(f"tau={t:g}: {report.status[t]}", file=out)
        return EXIT_BLOWUP
    if report.unresolved_reference:
        return EXIT_UNRESOLVED
    return EXIT_OK


def _cmd_selftest(inv: CliInvocation, out) -> int:
    from .selftest import run_checks

    results = run_checks()
    for name, ok, detail in results:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}", file=out)
    failed = sum(not ok for _, ok, _ in results)
    print(f"{len(results) - failed} passed, {failed} failed", file=out)
    return EXIT_OK if failed == 0 else EXIT_VALIDATION


def dispatch(inv: CliInvocation, out=None) -> int:
    out = out or sys.stdout
    handler = {"run": _cmd_run, "converge": _cmd_converge, "selftest": _cmd_selftest}
    try:
        return handler[inv.command](inv, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        inv = parse_invocation(argv)
    except UsageError as exc:
        build_parser().print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return dispatch(inv)


if __name__ == "__main__":
    sys.exit(main())
