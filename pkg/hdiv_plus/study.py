"""Convergence studies over structured mesh sequences."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field
from math import isfinite
from pathlib import Path
from typing import Any, NamedTuple

import pandas as pd

from .assembly import assemble_system, conservation_defect, flux_jump, solve_mixed
from .const import (
    CSV_COLUMNS,
    CSV_FILENAME,
    DEFAULT_LEVEL_MAX,
    DEFAULT_LEVEL_MIN,
    DEFAULT_QUAD_BUMP,
    ERROR_KINDS,
    FIT_LEVELS,
    MAX_LEVEL,
    MAX_N,
    MIN_LEVEL,
    PLOT_FILENAMES,
    PROJECTION_COLUMNS,
    PROJECTION_CSV_FILENAME,
    RESIDUAL_TOL,
    SLOPE_BAND,
)
from .convergence import FitReport, ManufacturedSolution, exact_fields, fit_orders, l2_errors
from .exceptions import ConfigurationError, HdivError
from .helpers.logging_utils import get_summarizing_logger
from .helpers.plotting import plot_convergence
from .mesh import build_mesh
from .models import (
    MESH_SHAPE,
    LevelErrors,
    MeshFamily,
    RunStatus,
    SpaceConfig,
    SpaceFamily,
    StudyResult,
)
from .projection import global_projection_errors

_LOGGER = get_summarizing_logger(__name__)


class ExpectedOrders(NamedTuple):
    """Expected L2 convergence orders of flux, potential and divergence."""

    flux: int
    pot: int
    div: int

    def as_dict(self) -> dict[str, int]:
        """Return the orders keyed by error kind."""
        return {"flux": self.flux, "pot": self.pot, "div": self.div}


def check_compatible(family: SpaceFamily, mesh_family: MeshFamily) -> None:
    """Raise ConfigurationError unless the space family fits the mesh cells."""
    if SpaceConfig(family, 1).shape is not MESH_SHAPE[mesh_family]:
        raise ConfigurationError(f"{family} spaces cannot be used on a {mesh_family} mesh")


def expected_orders(
    family: SpaceFamily, mesh_family: MeshFamily, k: int, n: int
) -> ExpectedOrders:
    """Return the convergence orders predicted for V_k^{n+} x U_{k+n}.

    Raises:
        ConfigurationError: for an incompatible family/mesh pair or bad orders.
    """
    SpaceConfig(family, k, n)
    check_compatible(family, mesh_family)

    if family is SpaceFamily.BDM:
        return ExpectedOrders(k + 1, k + min(n, 2), k + n)

    pot = k + 1 if n == 0 else k + 2
    if mesh_family is MeshFamily.RECT:
        return ExpectedOrders(k + 1, pot, k + n + 1)
    # Non-affine cells lose one order in the divergence of RT_k
    return ExpectedOrders(k + 1, pot, k if n == 0 else k + n)


@dataclass(frozen=True, slots=True)
class StudyConfig:
    """One convergence study: a mesh family, a space family and k, several n."""

    mesh_family: MeshFamily
    family: SpaceFamily
    k: int
    n_list: tuple[int, ...]
    levels: tuple[int, int] = (DEFAULT_LEVEL_MIN, DEFAULT_LEVEL_MAX)
    out: Path = Path("out")
    direct: bool = False
    quad_bump: int = DEFAULT_QUAD_BUMP
    projection: bool = False

    def __post_init__(self) -> None:
        """Validate the study parameters."""
        if not self.n_list:
            raise ConfigurationError("enrichment list must not be empty")
        if any(n < 0 or n > MAX_N for n in self.n_list):
            raise ConfigurationError(f"enrichment levels must lie in [0, {MAX_N}]")
        lo, hi = self.levels
        if not MIN_LEVEL <= lo <= hi <= MAX_LEVEL:
            raise ConfigurationError(
                f"levels {lo}..{hi} outside the supported range {MIN_LEVEL}..{MAX_LEVEL}"
            )
        if self.quad_bump < 0:
            raise ConfigurationError("quadrature bump must be non-negative")
        check_compatible(self.family, self.mesh_family)
        for n in self.n_list:
            SpaceConfig(self.family, self.k, n)

    @property
    def level_range(self) -> range:
        """Return the refinement levels i."""
        return range(self.levels[0], self.levels[1] + 1)

    @property
    def tag(self) -> str:
        """Return the family column value, e.g. RT-trap."""
        return f"{self.family.value}-{self.mesh_family.value}"

    @property
    def plot_dir(self) -> Path:
        """Return the per-study directory for figures."""
        return self.out / f"{self.mesh_family.value}-{self.family.value}-k{self.k}"


@dataclass(slots=True)
class SeriesOutcome:
    """Errors, fitted slopes and verdict of one (k, n) series."""

    result: StudyResult
    expected: ExpectedOrders
    report: FitReport | None = None
    checks: dict[str, RunStatus] = field(default_factory=dict)
    failures: dict[int, str] = field(default_factory=dict)
    projection: StudyResult | None = None

    @property
    def nonconforming_levels(self) -> list[int]:
        """Return the levels whose flux jump or conservation defect exceeds the tolerance."""
        return [row.i for row in self.result.levels if row.residual > RESIDUAL_TOL]

    @property
    def status(self) -> RunStatus:
        """Return PASS only when every kind passes, every level conforms and no run failed."""
        if self.failures or self.report is None:
            return RunStatus.ERROR
        if self.nonconforming_levels:
            return RunStatus.FAIL
        if all(check is RunStatus.PASS for check in self.checks.values()):
            return RunStatus.PASS
        return RunStatus.FAIL


@dataclass(slots=True)
class StudyOutcome:
    """All series of a study and the written artifacts."""

    config: StudyConfig
    series: list[SeriesOutcome] = field(default_factory=list)
    files: list[Path] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """Return True iff every series passed."""
        return bool(self.series) and all(s.status is RunStatus.PASS for s in self.series)


def solve_level(
    mesh_family: MeshFamily,
    config: SpaceConfig,
    level: int,
    exact: ManufacturedSolution,
    direct: bool = False,
    bump: int = DEFAULT_QUAD_BUMP,
) -> LevelErrors:
    """Solve on one mesh level and measure the L2 errors."""
    mesh = build_mesh(mesh_family, level)
    system = assemble_system(mesh, config, exact.source, exact.potential, bump=bump)
    solution = solve_mixed(system, condensed=not direct)
    errors = l2_errors(mesh, solution, exact, bump)

    jump = flux_jump(mesh, solution, bump)
    defect = conservation_defect(mesh, solution, exact.source, bump)
    residual = max(jump, defect)
    if residual > RESIDUAL_TOL:
        _LOGGER.warning(
            "%s on %s i=%d: normal jump %.2e, conservation defect %.2e",
            config.label(),
            mesh_family,
            level,
            jump,
            defect,
        )
    return LevelErrors(
        level,
        mesh.h,
        errors,
        system.dof_map.num_dofs,
        system.dof_map.num_condensed,
        residual,
    )


def _check_slopes(report: FitReport, expected: ExpectedOrders) -> dict[str, RunStatus]:
    checks = {}
    for kind, target in expected.as_dict().items():
        slope = report.least_squares[kind]
        ok = isfinite(slope) and abs(slope - target) <= SLOPE_BAND
        checks[kind] = RunStatus.PASS if ok else RunStatus.FAIL
    return checks


def _fit(
    result: StudyResult, expected: ExpectedOrders
) -> tuple[FitReport | None, dict[str, RunStatus]]:
    if len(result.levels) < 2:
        return None, {}
    report = fit_orders(result, FIT_LEVELS)
    return report, _check_slopes(report, expected)


def _series_rows(
    config: StudyConfig,
    result: StudyResult,
    report: FitReport | None,
    failures: dict[int, str],
    status: RunStatus | None = None,
) -> list[dict[str, Any]]:
    """Return CSV rows of one series in level order, failed runs included.

    Slope columns hold the pairwise slope towards the previous level; the
    first solved level has NaN. ``status=None`` omits the dof and status
    columns.
    """
    rows = []
    solved = {row.i: pos for pos, row in enumerate(result.levels)}
    for level in config.level_range:
        record: dict[str, Any] = {
            "family": config.tag,
            "k": config.k,
            "n": result.config.n,
            "i": level,
        }
        if level in solved:
            pos = solved[level]
            row = result.levels[pos]
            record["h"] = row.h
            for kind, value in row.errors.as_dict().items():
                record[f"e_{kind}"] = value
                record[f"slope_{kind}"] = (
                    report.pairwise[kind][pos - 1] if report and pos else float("nan")
                )
            if status is not None:
                record["dofs_total"] = row.dofs_total
                record["dofs_condensed"] = row.dofs_condensed
                record["status"] = status.value
        elif level in failures:
            record["h"] = 2.0**-level
            if status is not None:
                record["status"] = f"{RunStatus.ERROR.value}:{failures[level]}"
        else:
            continue
        rows.append(record)
    return rows


def _append_csv(path: Path, rows: list[dict], columns: tuple[str, ...]) -> None:
    if not rows:
        return
    frame = pd.DataFrame(rows).reindex(columns=list(columns))
    frame.to_csv(path, mode="a", header=not path.exists(), index=False)


def run_study(
    config: StudyConfig, exact: ManufacturedSolution | None = None
) -> StudyOutcome:
    """Run every (n, i) combination of a study and write its artifacts.

    Rows are appended to ``results.csv`` in (family, k, n, i) order. A run
    that raises an HdivError is recorded with status ``ERROR:<name>`` and the
    study continues.
    """
    exact = exact or exact_fields()
    config.out.mkdir(parents=True, exist_ok=True)
    outcome = StudyOutcome(config)
    csv_path = config.out / CSV_FILENAME

    for n in sorted(config.n_list):
        space = SpaceConfig(config.family, config.k, n)
        series = SeriesOutcome(
            StudyResult(config.mesh_family, space),
            expected_orders(config.family, config.mesh_family, config.k, n),
        )
        if config.projection:
            series.projection = StudyResult(config.mesh_family, space)

        for level in config.level_range:
            try:
                row = solve_level(
                    config.mesh_family, space, level, exact, config.direct, config.quad_bump
                )
            except HdivError as err:
                _LOGGER.error(
                    "%s on %s i=%d failed: %s", space.label(), config.mesh_family, level, err
                )
                series.failures[level] = type(err).__name__
                continue
            series.result.levels.append(row)
            _LOGGER.info(
                "%s %s i=%d h=%.4g dofs=%d/%d e_flux=%.3e e_pot=%.3e e_div=%.3e",
                config.tag,
                space.label(),
                level,
                row.h,
                row.dofs_total,
                row.dofs_condensed,
                row.errors.flux,
                row.errors.pot,
                row.errors.div,
            )
            if series.projection is not None:
                try:
                    errors = global_projection_errors(
                        build_mesh(config.mesh_family, level), space, exact, config.quad_bump
                    )
                except HdivError as err:
                    _LOGGER.error("%s projection on i=%d failed: %s", space.label(), level, err)
                else:
                    series.projection.levels.append(LevelErrors(level, row.h, errors))

        series.report, series.checks = _fit(series.result, series.expected)
        if series.status is not RunStatus.PASS:
            _LOGGER.warning(
                "%s on %s: %s (slopes %s, expected %s, nonconforming levels %s)",
                space.label(),
                config.mesh_family,
                series.status,
                series.report.least_squares if series.report else {},
                series.expected.as_dict(),
                series.nonconforming_levels,
            )
        outcome.series.append(series)

        rows = _series_rows(
            config, series.result, series.report, series.failures, series.status
        )
        _append_csv(csv_path, rows, CSV_COLUMNS)
        if series.projection is not None:
            _append_csv(
                config.out / PROJECTION_CSV_FILENAME,
                _series_rows(
                    config,
                    series.projection,
                    _fit(series.projection, series.expected)[0],
                    series.failures,
                ),
                PROJECTION_COLUMNS,
            )

    outcome.files.append(csv_path)
    if config.projection:
        outcome.files.append(config.out / PROJECTION_CSV_FILENAME)
    outcome.files.extend(write_plots(outcome))
    return outcome


def write_plots(outcome: StudyOutcome) -> list[Path]:
    """Write one log-log SVG per error kind into the study directory."""
    plot_dir = outcome.config.plot_dir
    plot_dir.mkdir(parents=True, exist_ok=True)
    results = [s.result for s in outcome.series]
    paths = []
    for kind, filename in PLOT_FILENAMES.items():
        expected = {s.result.config.n: s.expected.as_dict()[kind] for s in outcome.series}
        paths.append(plot_convergence(results, kind, expected, plot_dir / filename))
    return paths


def format_rate_table(outcomes: Iterable[StudyOutcome]) -> str:
    """Return a rate table with fitted and expected orders and verdicts per series."""
    records = []
    for outcome in outcomes:
        for series in outcome.series:
            record: dict = {
                "mesh": outcome.config.mesh_family.value,
                "space": series.result.config.label(),
                "k": outcome.config.k,
                "n": series.result.config.n,
            }
            for kind in ERROR_KINDS:
                slope = (
                    series.report.least_squares[kind] if series.report else float("nan")
                )
                check = series.checks.get(kind, RunStatus.ERROR)
                record[kind] = (
                    f"{slope:.2f}/{series.expected.as_dict()[kind]} {check.value}"
                )
            record["status"] = series.status.value
            records.append(record)
    if not records:
        return "(no runs)"
    return pd.DataFrame(records).to_string(index=False)

