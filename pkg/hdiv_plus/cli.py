"""Command-line entry point for hdiv-plus convergence studies."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from .const import (
    BIG_K_LIST,
    CONF_BIG,
    CONF_DIRECT,
    CONF_ENV_DEBUG,
    CONF_FAMILY,
    CONF_K,
    CONF_LEVELS,
    CONF_MESH,
    CONF_N,
    CONF_OUT,
    CONF_PROJECTION,
    CONF_QUAD_BUMP,
    DEFAULT_K_LIST,
    DEFAULT_LEVEL_MAX,
    DEFAULT_LEVEL_MIN,
    DEFAULT_QUAD_BUMP,
    PACKAGE,
    TRAP_LEVEL_MAX,
)
from .exceptions import ConfigurationError
from .helpers.config_parser import build_study_options, read_config_file
from .models import MESH_SHAPE, MeshFamily, SpaceFamily
from .study import StudyConfig, StudyOutcome, format_rate_table, run_study

_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

# Default enrichment levels per mesh family
DEFAULT_N: dict[MeshFamily, tuple[int, ...]] = {
    MeshFamily.RECT: (0, 1, 2),
    MeshFamily.TRI: (0, 1, 2),
    MeshFamily.TRAP: (0, 1, 2, 3),
}

# Default refinement levels per mesh family
DEFAULT_LEVELS: dict[MeshFamily, tuple[int, int]] = {
    MeshFamily.RECT: (DEFAULT_LEVEL_MIN, DEFAULT_LEVEL_MAX),
    MeshFamily.TRI: (DEFAULT_LEVEL_MIN, DEFAULT_LEVEL_MAX),
    MeshFamily.TRAP: (DEFAULT_LEVEL_MIN, TRAP_LEVEL_MAX),
}


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser."""
    parser = argparse.ArgumentParser(
        prog="hdiv-plus",
        description="Convergence studies for enriched H(div) mixed spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    study = sub.add_parser("study", help="run mesh-refinement convergence studies")
    study.add_argument("--mesh", choices=[m.value for m in MeshFamily])
    study.add_argument("--family", choices=[f.value for f in SpaceFamily])
    study.add_argument("--k", help="edge degree(s), e.g. 2 or 1,2")
    study.add_argument("--n", help="enrichment levels, e.g. 0,1,2 or 0..3")
    study.add_argument("--levels", help="refinement levels LO..HI (h = 2^-i)")
    study.add_argument("--out", help="output directory (default: out)")
    study.add_argument(
        "--direct",
        action="store_const",
        const=True,
        help="solve the full indefinite system instead of the condensed one",
    )
    study.add_argument(
        "--big", action="store_const", const=True, help=f"also run k in {BIG_K_LIST}"
    )
    study.add_argument("--config", type=Path, help="key=value study file")
    study.add_argument("--quad-bump", type=int, help="extra quadrature degrees")
    study.add_argument(
        "--projection",
        action="store_const",
        const=True,
        help="also write global projection errors",
    )
    study.add_argument("--debug", action="store_true", help="enable debug logging")
    return parser


def _families(options: dict[str, Any]) -> list[tuple[MeshFamily, SpaceFamily]]:
    """Return the (mesh, family) pairs selected by the options."""
    mesh = options.get(CONF_MESH)
    family = options.get(CONF_FAMILY)
    pairs = [
        (MeshFamily.RECT, SpaceFamily.RT),
        (MeshFamily.TRI, SpaceFamily.BDM),
        (MeshFamily.TRAP, SpaceFamily.RT),
    ]
    if mesh is not None:
        pairs = [p for p in pairs if p[0] is mesh]
    if family is not None:
        pairs = [p for p in pairs if p[1] is family]
    if not pairs:
        raise ConfigurationError(
            f"{family} spaces cannot be used on a {mesh} mesh "
            f"({mesh} cells are {MESH_SHAPE[mesh]}s)"
        )
    return pairs


def studies_from_options(options: dict[str, Any]) -> list[StudyConfig]:
    """Expand validated options into individual study configurations."""
    k_list = tuple(options.get(CONF_K, DEFAULT_K_LIST))
    if options.get(CONF_BIG):
        k_list = tuple(dict.fromkeys((*k_list, *BIG_K_LIST)))
    out = options.get(CONF_OUT, Path("out"))
    return [
        StudyConfig(
            mesh_family=mesh,
            family=family,
            k=k,
            n_list=tuple(options.get(CONF_N, DEFAULT_N[mesh])),
            levels=options.get(CONF_LEVELS, DEFAULT_LEVELS[mesh]),
            out=out,
            direct=options.get(CONF_DIRECT, False),
            quad_bump=options.get(CONF_QUAD_BUMP, DEFAULT_QUAD_BUMP),
            projection=options.get(CONF_PROJECTION, False),
        )
        for mesh, family in _families(options)
        for k in k_list
    ]


def _configure_logging(debug: bool) -> None:
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if debug or CONF_ENV_DEBUG:
        logging.getLogger(PACKAGE).setLevel(logging.DEBUG)


def run(args: argparse.Namespace) -> int:
    """Run the studies requested by parsed arguments and return the exit code."""
    file_values = read_config_file(args.config) if args.config else {}
    options = build_study_options(
        file_values,
        {
            CONF_MESH: args.mesh,
            CONF_FAMILY: args.family,
            CONF_K: args.k,
            CONF_N: args.n,
            CONF_LEVELS: args.levels,
            CONF_OUT: args.out,
            CONF_DIRECT: args.direct,
            CONF_BIG: args.big,
            CONF_QUAD_BUMP: args.quad_bump,
            CONF_PROJECTION: args.projection,
        },
    )
    studies = studies_from_options(options)

    outcomes: list[StudyOutcome] = []
    for config in studies:
        _LOGGER.info(
            "Study %s k=%d n=%s levels=%d..%d",
            config.tag,
            config.k,
            config.n_list,
            *config.levels,
        )
        outcomes.append(run_study(config))

    print(format_rate_table(outcomes))
    passed = all(outcome.passed for outcome in outcomes)
    print("ALL PASS" if passed else "SOME STUDIES FAILED")
    return EXIT_OK if passed else EXIT_FAILED


def main(argv: Sequence[str] | None = None) -> int:
    """Console entry point."""
    args = build_parser().parse_args(argv)
    _configure_logging(args.debug)
    try:
        return run(args)
    except ConfigurationError as err:
        _LOGGER.error("%s", err)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
