# Copyright 2024 The sturmian Developers
# SPDX-License-Identifier: Apache-2.0

import csv
import json
import logging
import os
import sys
from argparse import ArgumentParser, Namespace
from contextlib import nullcontext
from pathlib import Path
from typing import (
    Any,
    ContextManager,
    Dict,
    List,
    NoReturn,
    Optional,
    Sequence,
    TextIO,
    Tuple,
)

import attr
from public import public

from sturmian import __version__
from sturmian.analysis import (
    FLOW_COLUMNS,
    PROMINENT,
    BulkSpectrum,
    Gap,
    OrientationGapMissing,
    Tolerances,
    UnderResolvedSweep,
    boundary_sweep,
    bulk_spectrum,
    find_gaps,
    gap_coverage,
    label_gaps,
    orientation_gap,
    prominent_gaps,
    spectral_flows,
    verify_correspondence,
    winding,
)
from sturmian.eigensolve import BACKENDS, PivotBreakdown, StalledIteration
from sturmian.operators import PRESETS, OperatorSpec
from sturmian.plotting import scatter_svg
from sturmian.sequences import (
    KINDS,
    CutProjectParams,
    SequenceFamily,
    parse_theta,
)

DEFAULT_THETA = "fib"
DEFAULT_Q = 987
DEFAULT_GRID = 32
DEFAULT_EPSILON = 0.1
COVERAGE_RADIUS = 1 / 200
THREADS_ENV = "STURMIAN_THREADS"

EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_FAILED = 3

COMMANDS = ("bulk", "edge", "flow", "labels", "winding", "verify", "plot")
FLOW_COMMANDS = ("flow", "winding", "verify")

# Make the program name a little nicer, especially when `python3 -m sturmian`
# is used.
PROGRAM = "sturmian" if "__main__.py" in sys.argv[0] else sys.argv[0]

log = logging.getLogger("sturmian.log")


class _Parser(ArgumentParser):
    """Usage errors exit with status 1; 2 is kept for numerical failures."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# region #### Configuration ##########################################################


def _nonnegative(instance, attribute, value):
    if value is not None and value < 0:
        raise ValueError(f"{attribute.name} must not be negative, got {value!r}")


def _at_least_one(instance, attribute, value):
    if value is not None and value < 1:
        raise ValueError(f"{attribute.name} must be at least 1, got {value!r}")


@public
@attr.s(frozen=True, slots=True)
class RunConfig:
    command: str = attr.ib(validator=attr.validators.in_(COMMANDS))
    theta: float = attr.ib(default=DEFAULT_THETA, converter=parse_theta)
    q_max: int = attr.ib(default=DEFAULT_Q, validator=_at_least_one)
    model: str = attr.ib(default="sturmian", validator=attr.validators.in_(KINDS))
    epsilon: Optional[float] = attr.ib(default=None)
    hamiltonian: Optional[str] = attr.ib(default=None)
    phi0: Optional[float] = attr.ib(default=None)
    gamma: float = attr.ib(default=1.0)
    l0: float = attr.ib(default=1.0)
    grid: int = attr.ib(default=DEFAULT_GRID, validator=_at_least_one)
    shifts: int = attr.ib(default=1, validator=_at_least_one)
    gaps: int = attr.ib(default=PROMINENT, validator=_at_least_one)
    tolerances: Tolerances = attr.ib(factory=Tolerances)
    workers: int = attr.ib(default=1, validator=_at_least_one)
    out: Optional[Path] = attr.ib(default=None)
    svg: Optional[Path] = attr.ib(default=None)
    input: Optional[Path] = attr.ib(default=None)
    kind: str = attr.ib(default="bulk", validator=attr.validators.in_(("bulk", "flow")))

    @epsilon.validator
    def _check_epsilon(self, attribute, value):
        if value is not None and not value > 0:
            raise ValueError(f"epsilon must be positive, got {value!r}")

    @hamiltonian.validator
    def _check_hamiltonian(self, attribute, value):
        if value is not None and value not in PRESETS:
            raise ValueError(f"Unknown hamiltonian preset {value!r}")

    @phi0.validator
    def _check_phi0(self, attribute, value):
        _nonnegative(self, attribute, value)
        if value is not None and not value < 1:
            raise ValueError(f"phi0 must lie in [0, 1), got {value!r}")

    def __attrs_post_init__(self):
        if self.model == "smoothed" and self.epsilon is None:
            object.__setattr__(self, "epsilon", DEFAULT_EPSILON)
        if self.hamiltonian is None:
            preset = "kohmoto" if self.model == "sturmian" else "normalized"
            object.__setattr__(self, "hamiltonian", preset)
        if self.command in FLOW_COMMANDS and self.model == "sturmian":
            raise ValueError(
                "Sturmian spectral flow lines are discontinuous, so there is no "
                "winding number to compute; use --model smoothed or augmented"
            )

    def family(self) -> SequenceFamily:
        params = CutProjectParams.periodic(self.theta, self.q_max, self.gamma, self.l0)
        epsilon = self.epsilon if self.model == "smoothed" else None
        return SequenceFamily(params, self.model, epsilon, self.phi0)

    def operator(self, family: SequenceFamily) -> OperatorSpec:
        return PRESETS[self.hamiltonian](family.params)

    def metadata(self, family: SequenceFamily) -> Dict[str, Any]:
        approx = family.params.approximant
        return {
            "theta": f"{approx.p}/{approx.q}",
            "source_theta": float(family.params.label_theta),
            "L": int(approx.q),
            "model": self.model,
            "epsilon": None if self.epsilon is None else float(self.epsilon),
            "hamiltonian": self.hamiltonian,
            "grid": int(self.grid),
            "tolerances": {
                key: (float(value) if isinstance(value, float) else value)
                for key, value in attr.asdict(self.tolerances).items()
            },
        }


TOLERANCE_FLAGS = {
    "tol": "spec",
    "min_width": "min_width",
    "label_tol": "label_tol",
    "m_max": "m_max",
    "jump_tol": "jump_tol",
    "wind_tol": "wind_tol",
    "backend": "backend",
}


def _workers(parser: ArgumentParser, requested: Optional[int]) -> int:
    bound = os.environ.get(THREADS_ENV)
    if bound is None:
        return 1 if requested is None else requested
    try:
        limit = int(bound)
    except ValueError:
        limit = 0
    if limit < 1:
        parser.error(f"{THREADS_ENV} must be a positive integer, got {bound!r}")
    return limit if requested is None else min(requested, limit)


def _config(parser: ArgumentParser, ns: Namespace) -> RunConfig:
    given = vars(ns)
    tolerances = {
        field: given[flag]
        for flag, field in TOLERANCE_FLAGS.items()
        if given.get(flag) is not None
    }
    fields = {
        field.name: given[field.name]
        for field in attr.fields(RunConfig)
        if field.name not in ("tolerances", "workers")
        and given.get(field.name) is not None
    }
    try:
        return RunConfig(
            tolerances=Tolerances(**tolerances),
            workers=_workers(parser, given.get("workers")),
            **fields,
        )
    except (TypeError, ValueError) as error:
        parser.error(str(error))


def _load_config(
    parser: ArgumentParser, path: Path, names: Dict[str, str]
) -> Dict[str, Any]:
    """Read option defaults from *path*, keyed by long option name."""
    try:
        with open(path) as fp:
            values = json.load(fp)
    except (OSError, ValueError) as error:
        parser.error(f"Cannot read config file {path}: {error}")
    if not isinstance(values, dict):
        parser.error(f"Config file {path} must hold a JSON object")
    values = {key.replace("-", "_"): value for key, value in values.items()}
    unknown = sorted(set(values) - set(names))
    if unknown:
        parser.error(f"Unknown config keys: {', '.join(unknown)}")
    return {names[key]: value for key, value in values.items()}


# endregion

# region #### Parser #################################################################


def _model_options(parser: ArgumentParser) -> None:
    parser.add_argument(
        "--theta",
        metavar="THETA",
        help=(
            "Slope of the cut line: ``fib`` (or ``(3-sqrt5)/2``), a decimal, or "
            "``p/q``.  Defaults to ``fib``."
        ),
    )
    parser.add_argument(
        "--q",
        dest="q_max",
        metavar="Q",
        type=int,
        help=(
            f"Largest denominator of the periodic approximant; the system size "
            f"is its denominator.  Defaults to {DEFAULT_Q}."
        ),
    )
    parser.add_argument("--model", choices=KINDS, help="Sequence model.")
    parser.add_argument(
        "--epsilon",
        type=float,
        help=f"Smoothing width of the smoothed model.  Defaults to {DEFAULT_EPSILON}.",
    )
    parser.add_argument(
        "--ham",
        dest="hamiltonian",
        choices=sorted(PRESETS),
        help=(
            "Hamiltonian preset.  Defaults to ``kohmoto`` for the Sturmian model "
            "and ``normalized`` otherwise."
        ),
    )
    parser.add_argument("--phi0", type=float, help="Base intercept.")
    parser.add_argument("--gamma", type=float, help="Projection scale.")
    parser.add_argument("--l0", type=float, help="Mean letter length.")
    parser.add_argument(
        "--grid",
        type=int,
        help=f"Parameter samples per sweep.  Defaults to {DEFAULT_GRID}.",
    )
    parser.add_argument("--tol", type=float, help="Eigenvalue tolerance.")
    parser.add_argument("--min-width", type=float, help="Smallest reported gap.")
    parser.add_argument("--label-tol", type=float, help="Largest label residual.")
    parser.add_argument("--m-max", type=int, help="Largest |m| tried for labels.")
    parser.add_argument(
        "--jump-tol", type=float, help="Flow tracking jump, in gap widths."
    )
    parser.add_argument("--wind-tol", type=float, help="Winding rounding tolerance.")
    parser.add_argument("--backend", choices=BACKENDS, help="Eigenvalue backend.")
    parser.add_argument(
        "--workers",
        type=int,
        help=f"Worker processes for sweeps, bounded by ``{THREADS_ENV}``.",
    )


def _output_options(parser: ArgumentParser, svg: bool = True) -> None:
    parser.add_argument(
        "-o", "--out", type=Path, help="Output file.  Defaults to standard output."
    )
    if svg:
        parser.add_argument("--svg", type=Path, help="Also write a scatter plot.")


# Need to emit ArgumentParser by itself so autoprogramm extension can do its magic
def _parser() -> ArgumentParser:
    parser = _Parser(
        prog=PROGRAM,
        description="Bulk and boundary spectra of quasiperiodic tight-binding chains.",
    )
    parser.add_argument(
        "-v", "--version", action="version", version="%(prog)s {}".format(__version__)
    )
    parser.add_argument(
        "-d",
        "--debug",
        default=0,
        action="count",
        help=(
            "Increase debugging output. Every ``-d`` increases debugging level by one."
        ),
    )
    parser.add_argument(
        "--config",
        type=Path,
        help=(
            "JSON file whose keys mirror the long option names; options given "
            "on the command line take precedence."
        ),
    )
    commands = parser.add_subparsers(
        dest="command", metavar="COMMAND", parser_class=_Parser
    )
    commands.required = True
    helps = {
        "bulk": "Periodic spectra over the bulk grid (columns: param, eigenvalue).",
        "edge": "Dirichlet in-gap spectra under cyclic shifts, with gap coverage.",
        "flow": "Spectral flow lines of the left edge over one phason cycle.",
        "labels": "Gaps of the bulk spectrum with their (n, m) labels.",
        "winding": "Winding numbers of the spectral flow per gap.",
        "verify": "Check winding == -m on the prominent gaps (exit 3 on failure).",
        "plot": "Scatter plot of a bulk or flow CSV file.",
    }
    for name in COMMANDS:
        sub = commands.add_parser(name, help=helps[name], description=helps[name])
        if name == "plot":
            sub.add_argument("input", type=Path, metavar="CSV", help="Input CSV file.")
            sub.add_argument(
                "--kind", choices=("bulk", "flow"), help="Layout of the input file."
            )
            sub.add_argument("-o", "--out", type=Path, required=True, help="SVG file.")
            continue
        _model_options(sub)
        if name == "edge":
            sub.add_argument(
                "--shifts", type=int, help="Number of cyclic shifts.  Defaults to 1."
            )
        if name in ("edge", "flow", "winding", "verify"):
            sub.add_argument(
                "--gaps",
                type=int,
                help=f"Number of widest gaps to follow.  Defaults to {PROMINENT}.",
            )
        _output_options(sub, svg=name in ("bulk", "edge", "flow"))
    return parser


def _subparser(parser: ArgumentParser, name: str) -> ArgumentParser:
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    raise KeyError(name)  # pragma: nocover


def parseargs(args: Optional[Sequence[str]] = None) -> Tuple[ArgumentParser, Namespace]:
    parser = _parser()
    parsed = parser.parse_args(args)
    if parsed.config is not None:
        sub = _subparser(parser, parsed.command)
        names = {
            option[2:].replace("-", "_"): action.dest
            for action in sub._actions
            for option in action.option_strings
            if option.startswith("--")
        }
        sub.set_defaults(**_load_config(parser, parsed.config, names))
        parsed = parser.parse_args(args)
    if getattr(parsed, "shifts", None) is not None and parsed.shifts < 1:
        parser.error("--shifts must be at least 1")
    parsed.run = _config(parser, parsed)
    return parser, parsed


# endregion

# region #### Commands ###############################################################


def _open(path: Optional[Path]) -> ContextManager[TextIO]:
    if path is None:
        return nullcontext(sys.stdout)
    return open(path, "w", newline="")


def _write_rows(path: Optional[Path], header: Sequence[str], rows) -> None:
    with _open(path) as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _labelled_gaps(
    run: RunConfig, family: SequenceFamily, bulk: BulkSpectrum
) -> List[Gap]:
    tol = run.tolerances
    gaps = find_gaps(bulk, tol.min_width, resolution=tol.resolution)
    return label_gaps(
        gaps, family.params.label_theta, tol.label_for(family.q), tol.m_max
    )


def _bulk(run: RunConfig, family: SequenceFamily, spec: OperatorSpec) -> BulkSpectrum:
    return bulk_spectrum(
        family, spec, run.grid, tolerances=run.tolerances, workers=run.workers
    )


def _followed(run: RunConfig, gaps: Sequence[Gap]) -> List[Gap]:
    chosen = prominent_gaps(gaps, run.gaps)
    orient = orientation_gap(gaps)
    if orient is not None and orient not in chosen:
        chosen.append(orient)
    return sorted(chosen, key=lambda gap: gap.E0)


def cmd_bulk(run: RunConfig) -> int:
    family = run.family()
    bulk = _bulk(run, family, run.operator(family))
    rows = list(bulk.rows())
    _write_rows(run.out, ("param", "eigenvalue"), rows)
    if run.svg is not None:
        scatter_svg(
            run.svg,
            [float(e) for _, e in rows],
            [float(p) for p, _ in rows],
            xlabel="energy",
            ylabel="parameter",
        )
    return 0


def cmd_labels(run: RunConfig) -> int:
    family = run.family()
    gaps = _labelled_gaps(run, family, _bulk(run, family, run.operator(family)))
    header = ("gap_id", "E0", "E1", "width", "ids", "n", "m", "residual", "reliable")
    rows = [
        (
            gap.index,
            repr(gap.E0),
            repr(gap.E1),
            repr(gap.width),
            repr(gap.ids),
            gap.label.n,
            gap.label.m,
            repr(gap.label.residual),
            int(gap.label.reliable),
        )
        for gap in gaps
    ]
    _write_rows(run.out, header, rows)
    return 0


def cmd_edge(run: RunConfig) -> int:
    family = run.family()
    spec = run.operator(family)
    bulk = _bulk(run, family, spec)
    gaps = prominent_gaps(_labelled_gaps(run, family, bulk), run.gaps)
    points = boundary_sweep(
        family, spec, gaps, run.shifts, tolerances=run.tolerances, workers=run.workers
    )
    _write_rows(run.out, FLOW_COLUMNS, [p.row() for p in points])
    for gap in gaps:
        inside = [p for p in points if p.gap_id == gap.index]
        coverage = gap_coverage(inside, gap, COVERAGE_RADIUS * gap.width)
        print(
            f"gap {gap.index} ({gap.label.n}, {gap.label.m}): "
            f"{len(inside)} points, coverage {coverage:.3f}",
            file=sys.stderr,
        )
    if run.svg is not None:
        scatter_svg(
            run.svg,
            [p.param.value for p in points],
            [p.energy for p in points],
            groups=[p.side.value for p in points],
            xlabel="phi",
            ylabel="energy",
        )
    return 0


def _flows(run: RunConfig):
    family = run.family()
    spec = run.operator(family)
    bulk = _bulk(run, family, spec)
    gaps = _followed(run, _labelled_gaps(run, family, bulk))
    flows = spectral_flows(
        family, spec, gaps, run.grid, tolerances=run.tolerances, workers=run.workers
    )
    return family, spec, bulk, gaps, flows


def cmd_flow(run: RunConfig) -> int:
    _, _, _, _, flows = _flows(run)
    points = [p for curves in flows.values() for curve in curves for p in curve.points]
    _write_rows(run.out, FLOW_COLUMNS, [p.row() for p in points])
    if run.svg is not None:
        scatter_svg(
            run.svg,
            [p.shift for p in points],
            [p.energy for p in points],
            groups=[p.side.value for p in points],
            xlabel="sweep sample",
            ylabel="energy",
        )
    return 0


def cmd_winding(run: RunConfig) -> int:
    _, _, _, gaps, flows = _flows(run)
    results = []
    for gap in gaps:
        result = winding(flows[gap.index], gap, run.tolerances)
        results.append(
            {
                "gap_id": gap.index,
                "n": gap.label.n,
                "m": gap.label.m,
                "w_crossings": result.w_crossings,
                "w_displacement": result.w_displacement,
                "agree": result.agree,
            }
        )
    with _open(run.out) as fp:
        fp.write(json.dumps(results, indent=2) + "\n")
    return 0


def cmd_verify(run: RunConfig) -> int:
    family = run.family()
    spec = run.operator(family)
    bulk = _bulk(run, family, spec)
    gaps = _followed(run, _labelled_gaps(run, family, bulk))
    report = verify_correspondence(
        family,
        spec,
        bulk.spectrum,
        gaps,
        run.grid,
        tolerances=run.tolerances,
        workers=run.workers,
        metadata=run.metadata(family),
    )
    with _open(run.out) as fp:
        fp.write(report.to_json())
    if not report.passed:
        failed = sum(not row.passed for row in report.rows)
        log.error("correspondence failed on %d gaps", failed)
        return EXIT_FAILED
    return 0


def cmd_plot(run: RunConfig) -> int:
    with open(run.input, newline="") as fp:
        rows = list(csv.DictReader(fp))
    if run.kind == "flow":
        scatter_svg(
            run.out,
            [float(r["param"]) for r in rows],
            [float(r["energy"]) for r in rows],
            groups=[r["side"] for r in rows],
            xlabel="parameter",
            ylabel="energy",
        )
    else:
        scatter_svg(
            run.out,
            [float(r["eigenvalue"]) for r in rows],
            [float(r["param"]) for r in rows],
            xlabel="energy",
            ylabel="parameter",
        )
    return 0


HANDLERS = {
    "bulk": cmd_bulk,
    "edge": cmd_edge,
    "flow": cmd_flow,
    "labels": cmd_labels,
    "winding": cmd_winding,
    "verify": cmd_verify,
    "plot": cmd_plot,
}


# endregion


def _fail(parser: ArgumentParser, error: Exception, status: int) -> NoReturn:
    log.error("%s: %s", type(error).__name__, error)
    print(f"{parser.prog}: {error}", file=sys.stderr)
    sys.exit(status)


@public
def main(args: Optional[Sequence[str]] = None) -> None:
    parser, ns = parseargs(args=args)

    logging.basicConfig(level=logging.ERROR)
    debug = logging.getLogger("sturmian.debug")
    if ns.debug > 0:
        log.setLevel(logging.INFO)
    if ns.debug > 1:
        log.setLevel(logging.DEBUG)
        debug.setLevel(logging.DEBUG)

    log.debug("Running %s with %r", ns.command, ns.run)
    try:
        status = HANDLERS[ns.command](ns.run)
    except (UnderResolvedSweep, PivotBreakdown, StalledIteration) as error:
        _fail(parser, error, EXIT_NUMERICAL)
    except OrientationGapMissing as error:
        _fail(parser, error, EXIT_FAILED)
    if status:
        sys.exit(status)


if __name__ == "__main__":  # pragma: nocover
    main()
