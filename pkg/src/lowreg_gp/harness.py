"""Convergence studies: reference solutions, errors, order fits, reports."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .datagen import RegularitySpec, random_sobolev_field, truncated_projection
from .schemes import BlowUpError, SchemeId, StepConfig, evolve
from .spectral import Field, Grid, GridMismatchError, sobolev_norm

log = logging.getLogger(__name__)

CSV_HEADER = ["scheme", "d", "K", "T", "theta_u", "theta_V", "r", "tau", "error", "order_fit", "seed"]
TRIM_RESIDUAL = 0.15
MIN_TRIMMED_POINTS = 3


class DegenerateFitError(ValueError):
    """Order fit requested on fewer than two points or non-positive errors."""


def steps_for(T: float, tau: float) -> int:
    """Number of steps of size ``tau`` covering ``[0, T]``; must be integral."""
    n = Fraction(T).limit_denominator(1 << 40) / Fraction(tau).limit_denominator(1 << 40)
    if n.denominator != 1:
        raise ValueError(f"time step {tau} does not divide T = {T}")
    return int(n)


@dataclass(frozen=True)
class ReferencePolicy:
    """How the reference solution is produced.

    The primary reference uses ``scheme`` with ``tau_ref = min(taus) / refine``;
    ``check_scheme`` at the same step gives an independent second opinion.  The
    references count as resolved when they differ, in every norm, by less than
    ``tolerance`` times the smallest measured scheme error.
    """

    scheme: SchemeId = SchemeId.LRI2_FD
    refine: int = 64
    check_scheme: SchemeId | None = SchemeId.STRANG_SPLIT
    tolerance: float = 0.01


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: SchemeId = SchemeId.LRI1
    K: int = 256
    d: int = 1
    T: float = 1.0
    taus: tuple[float, ...] = tuple(2.0**-j for j in range(4, 11))
    theta_u: float = 1.25
    theta_V: float = 1.25
    norms: tuple[float, ...] = (0.0,)
    seed: int = 2022
    reference: ReferencePolicy = field(default_factory=ReferencePolicy)
    dealias: bool = False
    conjugate_commutator: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeId.parse(self.scheme))
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
        object.__setattr__(self, "norms", tuple(float(r) for r in self.norms))
        if self.T <= 0:
            raise ValueError(f"final time must be positive, got {self.T}")
        if not self.taus:
            raise ValueError("at least one time step is required")
        if any(b >= a for a, b in zip(self.taus, self.taus[1:])):
            raise ValueError(f"time steps must be strictly decreasing: {self.taus}")
        for tau in self.taus:
            StepConfig(tau, self.scheme)
            steps_for(self.T, tau)
        if any(r < 0 for r in self.norms):
            raise ValueError(f"Sobolev exponents must be >= 0: {self.norms}")
        if self.theta_u < 0 or self.theta_V < 0:
            raise ValueError("regularity exponents must be >= 0")
        Grid(self.d, self.K)

    @property
    def grid(self) -> Grid:
        return Grid(self.d, self.K, self.dealias)

    @property
    def tau_ref(self) -> float:
        return min(self.taus) / self.reference.refine


def initial_data(cfg: ExperimentConfig) -> tuple[Field, Field]:
    """Random ``(u0, V)`` for ``cfg``; streams 0 and 1 of ``cfg.seed``."""
    grid = cfg.grid
    u0 = random_sobolev_field(RegularitySpec(cfg.theta_u, cfg.seed, grid, stream=0))
    V = random_sobolev_field(RegularitySpec(cfg.theta_V, cfg.seed, grid, stream=1))
    return u0, V


@dataclass
class ReferenceSolution:
    field: Field
    check: Field | None
    tau_ref: float
    policy: ReferencePolicy

    def discrepancy(self, r: float) -> float:
        """Distance between the two references in ``H^r`` (0 without a check)."""
        if self.check is None:
            return 0.0
        return measure_error(self.check, self.field, r)


def reference_solution(
    u0: Field, V: Field, T: float, tau_ref: float, policy: ReferencePolicy | None = None
) -> ReferenceSolution:
    """Fine-step solution at time ``T`` plus the cross-check run."""
    policy = policy or ReferencePolicy()
    if T == 0:
        return ReferenceSolution(u0, u0 if policy.check_scheme else None, tau_ref, policy)
    n = steps_for(T, tau_ref)
    main = evolve(u0, V, StepConfig(tau_ref, policy.scheme), n)
    check = None
    if policy.check_scheme is not None:
        check = evolve(u0, V, StepConfig(tau_ref, policy.check_scheme), n)
    return ReferenceSolution(main, check, tau_ref, policy)


def measure_error(num: Field, ref: Field, r: float) -> float:
    """``||num - ref||_{H^r}``; a finer reference is projected onto ``num``'s modes."""
    if ref.grid.d != num.grid.d:
        raise GridMismatchError(f"{num.grid} vs {ref.grid}")
    if ref.grid.K > num.grid.K:
        ref = truncated_projection(ref, num.grid.K)
    if ref.grid.K != num.grid.K:
        raise GridMismatchError(f"{num.grid} vs {ref.grid}")
    return sobolev_norm(Field(num.grid, num.coeffs - ref.coeffs), r)


def fit_order(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares slope of ``log(error)`` against ``log(tau)``.

    Returns ``(slope, residual)`` where ``residual`` is the RMS deviation of the
    fit in natural-log units.
    """
    if len(points) < 2:
        raise DegenerateFitError(f"need at least 2 points, got {len(points)}")
    taus = np.array([p[0] for p in points], dtype=float)
    errs = np.array([p[1] for p in points], dtype=float)
    if np.any(errs <= 0) or np.any(taus <= 0) or not np.all(np.isfinite(errs)):
        raise DegenerateFitError("errors and step sizes must be positive and finite")
    x, y = np.log(taus), np.log(errs)
    if np.ptp(x) == 0:
        raise DegenerateFitError("all step sizes are equal")
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), residual


def trimmed_fit(points: Sequence[tuple[float, float]]) -> tuple[float, float, int]:
    """Fit after discarding pre-asymptotic large steps.

    Largest-``tau`` points are dropped until the residual is below
    ``TRIM_RESIDUAL``, keeping at least ``MIN_TRIMMED_POINTS``.  Returns
    ``(slope, residual, points_used)``.
    """
    pts = sorted(points, key=lambda p: -p[0])
    slope, res = fit_order(pts)
    while res > TRIM_RESIDUAL and len(pts) > MIN_TRIMMED_POINTS:
        pts = pts[1:]
        slope, res = fit_order(pts)
    return slope, res, len(pts)


@dataclass
class NormFit:
    r: float
    raw_order: float | None = None
    raw_residual: float | None = None
    order: float | None = None
    residual: float | None = None
    points_used: int = 0


@dataclass
class ConvergenceReport:
    """Errors per ``(r, tau)`` and fitted orders per norm."""

    config: ExperimentConfig
    errors: dict[float, dict[float, float]] = field(default_factory=dict)
    status: dict[float, str] = field(default_factory=dict)
    fits: dict[float, NormFit] = field(default_factory=dict)
    reference_discrepancy: dict[float, float] = field(default_factory=dict)
    unresolved_reference: bool = False
    non_monotone: list[float] = field(default_factory=list)
    check_orders: dict[float, float | None] = field(default_factory=dict)

    def order(self, r: float) -> float | None:
        fit = self.fits.get(float(r))
        return None if fit is None else fit.order

    def points(self, r: float) -> list[tuple[float, float]]:
        return sorted(self.errors.get(float(r), {}).items(), key=lambda p: -p[0])

    def refit(self) -> None:
        """Recompute fits and monotonicity flags from ``errors``."""
        self.fits = {}
        self.non_monotone = []
        for r in self.config.norms:
            pts = [(t, e) for t, e in self.points(r) if e > 0]
            fit = NormFit(r)
            if len(pts) >= 2:
                fit.raw_order, fit.raw_residual = fit_order(pts)
                fit.order, fit.residual, fit.points_used = trimmed_fit(pts)
            self.fits[r] = fit
            errs = [e for _, e in self.points(r)]
            if any(b > a for a, b in zip(errs, errs[1:])):
                self.non_monotone.append(r)

    def summary(self) -> str:
        c = self.config
        lines = [
            f"{c.scheme.value}  d={c.d} K={c.K} T={c.T:g} theta_u={c.theta_u:g} "
            f"theta_V={c.theta_V:g} seed={c.seed}"
        ]
        for r in c.norms:
            fit = self.fits.get(r, NormFit(r))
            raw = "n/a" if fit.raw_order is None else f"{fit.raw_order:.3f}"
            trim = "n/a" if fit.order is None else f"{fit.order:.3f}"
            lines.append(f"  r={r:g}: order {trim} (raw {raw}, {fit.points_used} pts)")
            for tau, err in self.points(r):
                lines.append(f"    tau={tau:.6g}  error={err:.6e}")
        if self.unresolved_reference:
            lines.append("  WARNING: reference solution unresolved")
        return "\n".join(lines)


def convergence_study(
    cfg: ExperimentConfig,
    data: tuple[Field, Field] | None = None,
    reference: ReferenceSolution | None = None,
) -> ConvergenceReport:
    """Run ``cfg.scheme`` for every step in ``cfg.taus`` and fit orders.

    ``data`` and ``reference`` may be passed in to share them between studies
    on the same initial datum and potential.
    """
    u0, V = data if data is not None else initial_data(cfg)
    if reference is None:
        reference = reference_solution(u0, V, cfg.T, cfg.tau_ref, cfg.reference)
    report = ConvergenceReport(cfg)
    check_errors = {r: {} for r in cfg.norms}
    for r in cfg.norms:
        report.errors[r] = {}
    for tau in cfg.taus:
        step_cfg = StepConfig(tau, cfg.scheme, cfg.conjugate_commutator)
        try:
            num = evolve(u0, V, step_cfg, steps_for(cfg.T, tau))
        except BlowUpError as exc:
            log.warning("tau=%g: %s", tau, exc)
            report.status[tau] = f"blowup at step {exc.step}"
            continue
        report.status[tau] = "ok"
        for r in cfg.norms:
            report.errors[r][tau] = measure_error(num, reference.field, r)
            if reference.check is not None:
                check_errors[r][tau] = measure_error(num, reference.check, r)
    report.refit()
    for r, errs in check_errors.items():
        pts = [(t, e) for t, e in errs.items() if e > 0]
        report.check_orders[r] = trimmed_fit(pts)[0] if len(pts) >= 2 else None
    for r in cfg.norms:
        report.reference_discrepancy[r] = reference.discrepancy(r)
        errs = list(report.errors[r].values())
        if errs and report.reference_discrepancy[r] > cfg.reference.tolerance * min(errs):
            report.unresolved_reference = True
    return report


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def report_rows(report: ConvergenceReport) -> list[list[str]]:
    c = report.config
    rows = []
    for r in c.norms:
        fit = report.fits.get(r)
        order = "" if fit is None or fit.order is None else _fmt(fit.order)
        for tau, err in report.points(r):
            rows.append(
                [c.scheme.value, str(c.d), str(c.K), _fmt(c.T), _fmt(c.theta_u),
                 _fmt(c.theta_V), _fmt(r), _fmt(tau), _fmt(err), order, str(c.seed)]
            )
    return rows


def write_csv(reports: Sequence[ConvergenceReport], path) -> Path:
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for report in reports:
        writer.writerows(report_rows(report))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(buf.getvalue(), encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc}") from exc
    return path


def read_csv(path) -> list[dict]:
    """Parse a report CSV back into typed records."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(
                {
                    "scheme": row["scheme"],
                    "d": int(row["d"]),
                    "K": int(row["K"]),
                    "T": float(row["T"]),
                    "theta_u": float(row["theta_u"]),
                    "theta_V": float(row["theta_V"]),
                    "r": float(row["r"]),
                    "tau": float(row["tau"]),
                    "error": float(row["error"]),
                    "order_fit": float(row["order_fit"]) if row["order_fit"] else None,
                    "seed": int(row["seed"]),
                }
            )
    return out


def plot_reports(reports: Sequence[ConvergenceReport], outdir, stem: str = "convergence") -> list[Path]:
    """One log-log SVG per norm with slope-1 and slope-2 guide lines."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    norms = sorted({r for rep in reports for r in rep.config.norms})
    paths = []
    with matplotlib.rc_context({"svg.hashsalt": "lowreg-gp", "svg.fonttype": "path"}):
        for r in norms:
            fig, ax = plt.subplots(figsize=(5, 4))
            all_taus = []
            anchor = None
            for rep in reports:
                pts = [(t, e) for t, e in rep.points(r) if e > 0]
                if not pts:
                    continue
                taus, errs = zip(*pts)
                all_taus.extend(taus)
                anchor = anchor if anchor is not None else (taus[-1], errs[-1])
                c = rep.config
                order = rep.order(r)
                label = f"{c.scheme.value}, theta={c.theta_u:g}"
                if order is not None:
                    label += f" (p={order:.2f})"
                ax.loglog(taus, errs, "o-", label=label)
            if all_taus:
                t = np.array(sorted(set(all_taus)))
                t0, e0 = anchor
                for p, style in ((1, "k--"), (2, "k:")):
                    ax.loglog(t, 0.5 * e0 * (t / t0) ** p, style, lw=1, label=f"slope {p}")
            ax.set_xlabel("tau")
            ax.set_ylabel(f"error in H^{r:g}" if r else "error in L^2")
            if ax.get_legend_handles_labels()[0]:
                ax.legend(fontsize=7)
            ax.grid(True, which="both", alpha=0.3)
            path = outdir / f"{stem}_r{r:g}.svg"
            try:
                outdir.mkdir(parents=True, exist_ok=True)
                fig.savefig(path, format="svg", metadata={"Date": None})
            except OSError as exc:
                raise OSError(f"cannot write plot {path}: {exc}") from exc
            finally:
                plt.close(fig)
            paths.append(path)
    return paths


def write_report(reports, outdir, stem: str = "convergence") -> list[Path]:
    """Write ``<stem>.csv`` and one ``<stem>_r<r>.svg`` per norm into ``outdir``."""
    if isinstance(reports, ConvergenceReport):
        reports = [reports]
    outdir = Path(outdir)
    paths = [write_csv(reports, outdir / f"{stem}.csv")]
    paths += plot_reports(reports, outdir, stem)
    return paths


def with_scheme(cfg: ExperimentConfig, scheme) -> ExperimentConfig:
    return replace(cfg, scheme=SchemeId.parse(scheme))

