# Copyright 2024 The sturmian Developers
# SPDX-License-Identifier: Apache-2.0

"""Bulk spectra, gap labels, boundary spectra, spectral flow and winding numbers."""

import json
import logging
import math
from enum import Enum
from typing import (
    Any,
    Callable,
    Dict,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

import attr
import numpy as np
from joblib import Parallel, delayed
from public import public

from sturmian.eigensolve import (
    BACKENDS,
    ISOLATION_FACTOR,
    ClusteredEigenvalueError,
    Spectrum,
    cluster_sizes,
    eigenvalues_in,
    eigenvalues_in_many,
    eigenvector,
    spectrum,
)
from sturmian.operators import (
    DIRICHLET,
    PERIODIC,
    HamiltonianMatrix,
    OperatorSpec,
    build_hamiltonian,
)
from sturmian.sequences import (
    SequenceFamily,
    SweepParam,
    Word,
    frac,
    hausdorff_distance,
)

TOL_SPEC = 1e-10
RES_FACTOR = 5
M_MAX = 50
MIN_WIDTH = 0.01
PROMINENT = 6
JUMP_TOL = 0.2
MAX_DEPTH = 12
SIDE_FRAC = 0.5
WIND_TOL = 0.1
MIDLINE_NUDGE = 1e-9
LABEL_TIE = 1e-12
RESPONSE_TOL = 1e-6
CHUNK = 32

log = logging.getLogger("sturmian.log")


@public
class UnderResolvedSweep(RuntimeError):
    pass


@public
class OrientationGapMissing(LookupError):
    pass


# region #### Records ################################################################


def _positive(instance, attribute, value):
    if value is not None and not value > 0:
        raise ValueError(f"{attribute.name} must be positive, got {value!r}")


@public
@attr.s(frozen=True, slots=True)
class Tolerances:
    spec: float = attr.ib(default=TOL_SPEC, converter=float, validator=_positive)
    """Absolute accuracy of every computed eigenvalue"""
    res_factor: float = attr.ib(default=RES_FACTOR, validator=_positive)
    label_tol: Optional[float] = attr.ib(default=None, validator=_positive)
    """Largest accepted label residual; ``10/q`` when unset"""
    m_max: int = attr.ib(default=M_MAX, validator=_positive)
    min_width: float = attr.ib(default=MIN_WIDTH, validator=_positive)
    jump_tol: float = attr.ib(default=JUMP_TOL, validator=_positive)
    max_depth: int = attr.ib(default=MAX_DEPTH, validator=_positive)
    side_frac: float = attr.ib(default=SIDE_FRAC, validator=_positive)
    wind_tol: float = attr.ib(default=WIND_TOL, validator=_positive)
    backend: str = attr.ib(default="native", validator=attr.validators.in_(BACKENDS))

    @property
    def resolution(self) -> float:
        return self.res_factor * self.spec

    def label_for(self, q: int) -> float:
        return 10.0 / q if self.label_tol is None else self.label_tol


@public
class Side(Enum):
    LEFT = "left"
    RIGHT = "right"
    UNKNOWN = "unknown"


@public
class GapLabel(NamedTuple):
    n: int
    m: int
    residual: float
    reliable: bool


@public
@attr.s(frozen=True, slots=True)
class Gap:
    E0: float = attr.ib(converter=float)
    E1: float = attr.ib(converter=float)
    ids: float = attr.ib(converter=float)
    label: Optional[GapLabel] = attr.ib(default=None)
    index: int = attr.ib(default=0)
    """Position among the detected gaps, in order of energy; -1 below the spectrum"""

    @E1.validator
    def _check_edges(self, attribute, value):
        if not self.E0 < value:
            raise ValueError(f"gap edges out of order: ({self.E0!r}, {value!r})")

    @ids.validator
    def _check_ids(self, attribute, value):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"ids must lie in [0, 1], got {value!r}")

    @property
    def width(self) -> float:
        return self.E1 - self.E0

    @property
    def mid(self) -> float:
        return 0.5 * (self.E0 + self.E1)

    def contains(self, energy: float) -> bool:
        return self.E0 < energy < self.E1


@public
@attr.s(frozen=True, slots=True)
class FlowPoint:
    param: SweepParam = attr.ib()
    energy: float = attr.ib(converter=float)
    side: Side = attr.ib()
    shift: int = attr.ib(default=0)
    """Cyclic shift for boundary sweeps, sample position for flow sweeps"""
    gap_id: int = attr.ib(default=0)

    def row(self) -> Tuple:
        return (
            self.shift,
            self.param.kind,
            "" if self.param.k is None else self.param.k,
            repr(float(self.param.value)),
            repr(self.energy),
            self.side.value,
            self.gap_id,
        )


FLOW_COLUMNS = ("shift", "param_kind", "k", "param", "energy", "side", "gap_id")


@public
@attr.s(frozen=True, slots=True)
class FlowCurve:
    gap_id: int = attr.ib()
    points: Tuple[FlowPoint, ...] = attr.ib(converter=tuple)
    closed: bool = attr.ib(default=False)
    """The last point links back to the first"""
    split: bool = attr.ib(default=False)
    """The curve passes a crossing left unresolved and linked by nearest energy"""

    @property
    def energies(self) -> np.ndarray:
        return np.array([p.energy for p in self.points])


@public
@attr.s(frozen=True, slots=True)
class WindingResult:
    gap_id: int = attr.ib()
    w_crossings: int = attr.ib()
    w_displacement: int = attr.ib()

    @property
    def agree(self) -> bool:
        return self.w_crossings == self.w_displacement


@public
@attr.s(frozen=True, slots=True)
class GapReport:
    gap: Gap = attr.ib()
    winding: WindingResult = attr.ib()
    orientation: int = attr.ib()

    @property
    def passed(self) -> bool:
        label = self.gap.label
        return (
            label.reliable
            and self.winding.agree
            and self.orientation * self.winding.w_crossings == -label.m
        )

    def as_dict(self) -> Dict[str, Any]:
        label = self.gap.label
        return {
            "E0": self.gap.E0,
            "E1": self.gap.E1,
            "ids": self.gap.ids,
            "n": int(label.n),
            "m": int(label.m),
            "w_crossings": int(self.winding.w_crossings),
            "w_displacement": int(self.winding.w_displacement),
            "pass": bool(self.passed),
        }


@public
@attr.s(frozen=True, slots=True)
class CorrespondenceReport:
    rows: Tuple[GapReport, ...] = attr.ib(converter=tuple)
    orientation: int = attr.ib()
    """Sign applied to every winding so that the ``(0, 1)`` gap winds by -1"""
    metadata: Dict[str, Any] = attr.ib(factory=dict)

    @property
    def passed(self) -> bool:
        return self.orientation != 0 and all(row.passed for row in self.rows)

    def to_json(self) -> str:
        document = {
            "metadata": self.metadata,
            "orientation": int(self.orientation),
            "passed": bool(self.passed),
            "gaps": [row.as_dict() for row in self.rows],
        }
        return json.dumps(document, indent=2) + "\n"


@public
@attr.s(frozen=True, slots=True, eq=False)
class BulkSpectrum:
    spectrum: Spectrum = attr.ib()
    """Union over the grid; ``size`` counts every sampled site"""
    samples: Tuple[Tuple[SweepParam, np.ndarray], ...] = attr.ib(converter=tuple)
    intervals: np.ndarray = attr.ib()

    def rows(self):
        for param, values in self.samples:
            for value in values:
                yield repr(float(param.value)), repr(float(value))


# endregion

# region #### Bulk ###################################################################


def _bulk_sample(
    family: SequenceFamily,
    spec: OperatorSpec,
    param: SweepParam,
    tol: float,
    backend: str,
) -> np.ndarray:
    M = build_hamiltonian(family.word(param), spec, PERIODIC)
    return spectrum(M, tol, backend=backend).eigenvalues


@public
def covering_intervals(
    values: Union[Spectrum, Sequence[float]], resolution: float
) -> np.ndarray:
    """Merge sorted values closer than *resolution* into closed intervals."""
    if isinstance(values, Spectrum):
        values = values.eigenvalues
    values = np.sort(np.asarray(values, dtype=float))
    if not len(values):
        return np.zeros((0, 2))
    breaks = np.flatnonzero(np.diff(values) > resolution)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [len(values) - 1]))
    return np.column_stack((values[starts], values[ends]))


@public
def merge_intervals(intervals: np.ndarray, resolution: float) -> np.ndarray:
    """Union of closed intervals, joining those less than *resolution* apart."""
    intervals = np.asarray(intervals, dtype=float).reshape(-1, 2)
    if not len(intervals):
        return np.zeros((0, 2))
    intervals = intervals[np.argsort(intervals[:, 0], kind="stable")]
    reach = np.maximum.accumulate(intervals[:, 1])
    breaks = np.flatnonzero(intervals[1:, 0] - reach[:-1] > resolution)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [len(intervals) - 1]))
    return np.column_stack((intervals[starts, 0], reach[ends]))


def _swept_ranges(spectra: Sequence[np.ndarray], cyclic: bool) -> np.ndarray:
    """Range of each sorted eigenvalue between neighbouring grid samples.

    Sorted eigenvalues are continuous in the sweep parameter, so the union of
    spectra over the whole parameter interval holds every one of these ranges.
    """
    if len(spectra) < 2 or len({len(values) for values in spectra}) != 1:
        return np.zeros((0, 2))
    stacked = np.stack(spectra)
    after = np.roll(stacked, -1, axis=0) if cyclic else stacked[1:]
    before = stacked if cyclic else stacked[:-1]
    return np.column_stack(
        (np.minimum(before, after).ravel(), np.maximum(before, after).ravel())
    )


@public
def bulk_spectrum(
    family: SequenceFamily,
    spec: OperatorSpec,
    grid: int,
    *,
    tolerances: Optional[Tolerances] = None,
    workers: int = 1,
) -> BulkSpectrum:
    """Union of the periodic spectra over the family's bulk grid.

    Besides the sampled eigenvalues, ``intervals`` covers the range each sorted
    eigenvalue sweeps between neighbouring samples (cyclically for the
    smoothed ``phi`` grid).
    """
    tolerances = Tolerances() if tolerances is None else tolerances
    params = family.bulk_grid(grid)
    if not params:
        raise ValueError("empty parameter grid")
    spectra = Parallel(n_jobs=workers)(
        delayed(_bulk_sample)(family, spec, param, tolerances.spec, tolerances.backend)
        for param in params
    )
    union = Spectrum(
        np.concatenate(spectra), tolerances.spec, family.q * len(params)
    )
    swept = _swept_ranges(spectra, cyclic=family.kind == "smoothed")
    points = np.repeat(union.eigenvalues[:, None], 2, axis=1)
    intervals = merge_intervals(np.concatenate((points, swept)), tolerances.resolution)
    log.info(
        "bulk spectrum: %d samples of size %d, %d eigenvalues in %d intervals",
        len(params),
        family.q,
        len(union),
        len(intervals),
    )
    return BulkSpectrum(union, tuple(zip(params, spectra)), intervals)


@public
def ids(values: Spectrum, E: float) -> float:
    """Fraction of eigenvalues strictly below *E*."""
    below = np.searchsorted(values.eigenvalues, E, side="left")
    return float(below) / values.size


@public
def find_gaps(
    values: Union[Spectrum, BulkSpectrum],
    min_width: float = MIN_WIDTH,
    *,
    resolution: Optional[float] = None,
) -> List[Gap]:
    """Open intervals of width >= *min_width* between covering intervals.

    A :class:`BulkSpectrum` brings its own intervals, swept ranges included.
    """
    bulk = values if isinstance(values, BulkSpectrum) else None
    if bulk is not None:
        values = bulk.spectrum
    if not len(values):
        raise ValueError("cannot find gaps in an empty spectrum")
    resolution = RES_FACTOR * values.tol if resolution is None else resolution
    if bulk is not None:
        intervals = merge_intervals(bulk.intervals, resolution)
    else:
        intervals = covering_intervals(values, resolution)
    gaps = []
    for (_, lo), (hi, _) in zip(intervals[:-1], intervals[1:]):
        if hi - lo >= min_width:
            mid = 0.5 * (lo + hi)
            gaps.append(Gap(lo, hi, ids(values, mid), index=len(gaps)))
    return gaps


@public
def gap_label(
    ids_value: float,
    theta: float,
    m_max: int = M_MAX,
    label_tol: float = 1e-8,
) -> GapLabel:
    """Nearest ``n + m*theta`` in ``[0, 1]``; ties go to the smaller ``|m|``."""
    m = np.arange(-m_max, m_max + 1)
    n = np.arange(-m_max, m_max + 2)
    mm, nn = np.meshgrid(m, n)
    values = nn + mm * theta
    valid = (values >= 0.0) & (values <= 1.0)
    residual = np.where(valid, np.abs(ids_value - values), np.inf)
    best = residual.min()
    tied = residual <= best + LABEL_TIE
    order = np.lexsort((np.abs(nn[tied]), np.abs(mm[tied])))
    pick = order[0]
    label = GapLabel(int(nn[tied][pick]), int(mm[tied][pick]), float(best), True)
    if best > label_tol:
        log.info("ids %r has no label within %g (best %r)", ids_value, label_tol, label)
        label = label._replace(reliable=False)
    return label


@public
def label_gaps(
    gaps: Sequence[Gap],
    theta: float,
    label_tol: float,
    m_max: int = M_MAX,
) -> List[Gap]:
    return [
        attr.evolve(gap, label=gap_label(gap.ids, theta, m_max, label_tol))
        for gap in gaps
    ]


@public
def prominent_gaps(gaps: Sequence[Gap], count: int = PROMINENT) -> List[Gap]:
    """The *count* widest gaps, in order of energy."""
    widest = sorted(gaps, key=lambda gap: gap.width, reverse=True)[:count]
    return sorted(widest, key=lambda gap: gap.E0)


@public
def orientation_gap(gaps: Sequence[Gap]) -> Optional[Gap]:
    """The widest gap reliably labelled ``(0, 1)``, if any."""
    candidates = [
        gap
        for gap in gaps
        if gap.label is not None
        and gap.label.reliable
        and (gap.label.n, gap.label.m) == (0, 1)
    ]
    return max(candidates, key=lambda gap: gap.width, default=None)


# endregion

# region #### Boundary spectra #######################################################


@public
def edge_side(psi: np.ndarray, side_frac: float = SIDE_FRAC) -> Side:
    weight = np.asarray(psi, dtype=float) ** 2
    weight = weight / weight.sum()
    quarter = math.ceil(len(weight) / 4)
    if weight[:quarter].sum() >= side_frac:
        return Side.LEFT
    if weight[-quarter:].sum() >= side_frac:
        return Side.RIGHT
    return Side.UNKNOWN


@public
def flow_side(psi: np.ndarray, side_frac: float = SIDE_FRAC) -> Side:
    """:func:`edge_side`, with states clear of both quarters given to the heavier half.

    The two states of an avoided crossing between edges share the left-edge
    weight, so exactly one of them counts as left.
    """
    side = edge_side(psi, side_frac)
    if side is not Side.UNKNOWN:
        return side
    weight = np.asarray(psi, dtype=float) ** 2
    half = len(weight) // 2
    left, right = weight[:half].sum(), weight[len(weight) - half :].sum()
    return Side.LEFT if left > right else Side.RIGHT


def _in_gap(
    M: HamiltonianMatrix,
    windows: Sequence[Tuple[float, float]],
    tol: float,
    backend: str,
) -> List[np.ndarray]:
    found = []
    for E0, E1 in windows:
        lo = E0 + tol
        if lo < E1:
            found.append(eigenvalues_in(M, lo, E1, tol, backend=backend))
        else:
            found.append(np.zeros(0))
    return found


def _vector_side(
    M: HamiltonianMatrix,
    energy: float,
    tol: float,
    side_of: Callable[[np.ndarray, float], Side],
    side_frac: float,
) -> Side:
    try:
        psi = eigenvector(M, energy, tol, check=False)
    except ClusteredEigenvalueError:
        return Side.UNKNOWN
    return side_of(psi, side_frac)


_Found = List[List[List[Tuple[float, Side]]]]


def _classified(
    words: Sequence[Word],
    spec: OperatorSpec,
    windows: Sequence[Tuple[float, float]],
    tolerances: Tolerances,
    flow: bool = False,
) -> _Found:
    """In-gap Dirichlet eigenvalues with their sides, per word and per window.

    Eigenvalues within the isolation radius of :func:`eigenvector` of each
    other have no eigenvector of their own.  On a flow sweep such a cluster
    holds one left state and counts once as left; otherwise it is Unknown.
    """
    tol = tolerances.spec
    radius = ISOLATION_FACTOR * tol
    side_of = flow_side if flow else edge_side
    matrices = [build_hamiltonian(word, spec, DIRICHLET) for word in words]
    shifted = [(E0 + tol, E1) for E0, E1 in windows]
    found = eigenvalues_in_many(matrices, shifted, tol, backend=tolerances.backend)
    owner = [s for s, row in enumerate(found) for values in row for _ in values]
    energies = [e for row in found for values in row for e in values]
    sizes = iter(cluster_sizes(matrices, owner, energies, tol) if energies else ())
    result = []
    for M, row in zip(matrices, found):
        per_window = []
        for values in row:
            sides: List[Tuple[float, Side]] = []
            for energy in map(float, values):
                if next(sizes) == 1:
                    side = _vector_side(M, energy, tol, side_of, tolerances.side_frac)
                elif flow and not (sides and energy - sides[-1][0] <= radius):
                    side = Side.LEFT
                else:
                    side = Side.UNKNOWN
                sides.append((energy, side))
            per_window.append(sides)
        result.append(per_window)
    return result


def _chunks(items: Sequence, size: int = CHUNK) -> List[Sequence]:
    return [items[i : i + size] for i in range(0, len(items), size)]


def _windows(gaps: Sequence[Gap]) -> List[Tuple[float, float]]:
    return [(gap.E0, gap.E1) for gap in gaps]


@public
def boundary_sweep(
    family: SequenceFamily,
    spec: OperatorSpec,
    gaps: Sequence[Gap],
    shifts: int,
    *,
    tolerances: Optional[Tolerances] = None,
    workers: int = 1,
) -> List[FlowPoint]:
    """In-gap Dirichlet eigenvalues of the base word under ``shifts`` cyclic shifts."""
    tolerances = Tolerances() if tolerances is None else tolerances
    if shifts < 1:
        raise ValueError(f"shifts must be positive, got {shifts!r}")
    if shifts > family.q:
        log.warning("%d shifts of a word of period %d repeat", shifts, family.q)
    word = family.word(family.base_param())
    approx = family.params.approximant
    windows = _windows(gaps)
    words = [word.shifted(n) for n in range(shifts)]
    parts = Parallel(n_jobs=workers)(
        delayed(_classified)(chunk, spec, windows, tolerances)
        for chunk in _chunks(words)
    )
    results = [per_gap for part in parts for per_gap in part]
    points = []
    for n, per_gap in enumerate(results):
        phi = frac(family.base_phi + (n * approx.p % approx.q) / approx.q)
        for gap, found in zip(gaps, per_gap):
            for energy, side in found:
                points.append(
                    FlowPoint(SweepParam("phi", phi), energy, side, n, gap.index)
                )
    return points


@public
def gap_coverage(
    points: Sequence[Union[FlowPoint, float]], gap: Gap, radius: float
) -> float:
    """Fraction of the gap within *radius* of some in-gap point."""
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius!r}")
    energies = np.array(
        [p.energy if isinstance(p, FlowPoint) else float(p) for p in points]
    )
    energies = np.sort(energies[(energies > gap.E0) & (energies < gap.E1)])
    if not len(energies):
        return 0.0
    lo = np.maximum(energies - radius, gap.E0)
    hi = np.minimum(energies + radius, gap.E1)
    # intervals are sorted by left end and share one radius
    covered, reach = 0.0, gap.E0
    for a, b in zip(lo, hi):
        a = max(a, reach)
        if b > a:
            covered += b - a
            reach = b
    return covered / gap.width


@public
def perturbation_sides(
    M: HamiltonianMatrix,
    gap: Gap,
    delta: float = 0.1,
    tol: float = TOL_SPEC,
) -> List[Tuple[float, Side]]:
    """Classify in-gap eigenvalues by their response to ``onsite(0) += delta``.

    States localized away from site 0 stay put; the others move.
    """
    before = _in_gap(M, [(gap.E0, gap.E1)], tol, "native")[0]
    after = _in_gap(M.with_onsite_shift(0, delta), [(gap.E0, gap.E1)], tol, "native")[0]
    sides = []
    for energy in before:
        if len(after) and np.min(np.abs(after - energy)) <= RESPONSE_TOL * abs(delta):
            sides.append((float(energy), Side.RIGHT))
        else:
            sides.append((float(energy), Side.LEFT))
    return sides


# endregion

# region #### Spectral flow ##########################################################


_Node = Tuple[int, int]


class _Sample(NamedTuple):
    param: SweepParam
    energies: np.ndarray


def _left_energies(found: List[Tuple[float, Side]]) -> np.ndarray:
    return np.array(sorted(e for e, side in found if side is Side.LEFT))


def _flow_chunk(
    family: SequenceFamily,
    spec: OperatorSpec,
    params: Sequence[SweepParam],
    windows: Sequence[Tuple[float, float]],
    tolerances: Tolerances,
) -> _Found:
    words = [family.word(param) for param in params]
    return _classified(words, spec, windows, tolerances, flow=True)


class _FlowTracker:
    """Links the left-edge eigenvalues of one gap across an ordered cyclic sweep."""

    def __init__(
        self,
        gap: Gap,
        family: SequenceFamily,
        evaluate: Callable[[SweepParam], np.ndarray],
        tolerances: Tolerances,
    ):
        self.gap = gap
        self.family = family
        self.evaluate = evaluate
        self.jump = tolerances.jump_tol * gap.width
        self.max_depth = tolerances.max_depth
        self.refinements = 0

    def _near_edge(self, energy: float) -> bool:
        return min(energy - self.gap.E0, self.gap.E1 - energy) <= self.jump

    def match(self, a: _Sample, b: _Sample) -> Tuple[List[Tuple[int, int]], bool]:
        """Greedy nearest-energy links and whether they are ambiguous."""
        ea, eb = a.energies, b.energies
        if not len(ea) or not len(eb):
            unmatched = [e for e in (*ea, *eb) if not self._near_edge(e)]
            return [], bool(unmatched)
        dist = np.abs(ea[:, None] - eb[None, :])
        pairs, used_a, used_b = [], set(), set()
        for flat in np.argsort(dist, axis=None, kind="stable"):
            i, j = divmod(int(flat), len(eb))
            if dist[i, j] > self.jump:
                break
            if i in used_a or j in used_b:
                continue
            pairs.append((i, j))
            used_a.add(i)
            used_b.add(j)
        ambiguous = False
        for i, j in pairs:
            rivals = np.concatenate((np.delete(dist[i], j), np.delete(dist[:, j], i)))
            if rivals.size and rivals.min() <= 2.0 * dist[i, j]:
                ambiguous = True
        for i, e in enumerate(ea):
            if i not in used_a and not self._near_edge(e):
                ambiguous = True
        for j, e in enumerate(eb):
            if j not in used_b and not self._near_edge(e):
                ambiguous = True
        return pairs, ambiguous

    def refine(
        self, a: _Sample, b: _Sample, depth: int = 0
    ) -> List[Optional[_Sample]]:
        """Samples to insert between *a* and *b*.

        ``None`` marks a link left unresolved at the depth limit.  It is still
        linked by nearest energy, and the curves through it are flagged split.
        """
        _, ambiguous = self.match(a, b)
        if not ambiguous:
            return []
        mid_param = self.family.midpoint(a.param, b.param)
        if mid_param is None or depth >= self.max_depth:
            log.warning(
                "gap %d: unresolved crossing between %r and %r",
                self.gap.index,
                a.param,
                b.param,
            )
            return [None]
        self.refinements += 1
        mid = _Sample(mid_param, self.evaluate(mid_param))
        return self.refine(a, mid, depth + 1) + [mid] + self.refine(mid, b, depth + 1)

    def track(self, samples: Sequence[_Sample]) -> List[FlowCurve]:
        refined: List[_Sample] = []
        forced: Set[int] = set()
        for i, a in enumerate(samples):
            b = samples[(i + 1) % len(samples)]
            inserted = self.refine(a, b)
            refined.append(a)
            for sample in inserted:
                if sample is None:
                    forced.add(len(refined) - 1)
                else:
                    refined.append(sample)
        if self.refinements:
            log.debug("gap %d: %d refinements", self.gap.index, self.refinements)
        return self._assemble(refined, forced)

    def _assemble(self, samples: List[_Sample], forced: Set[int]) -> List[FlowCurve]:
        count = len(samples)
        succ: Dict[_Node, _Node] = {}
        pred: Dict[_Node, _Node] = {}
        for i in range(count):
            nxt = (i + 1) % count
            pairs, _ = self.match(samples[i], samples[nxt])
            for a, b in pairs:
                succ[(i, a)] = (nxt, b)
                pred[(nxt, b)] = (i, a)
        nodes = [(i, a) for i in range(count) for a in range(len(samples[i].energies))]
        # chains without a predecessor first; whatever is left lies on cycles
        nodes.sort(key=lambda node: node in pred)
        seen: Set[_Node] = set()
        curves = []
        for start in nodes:
            if start in seen:
                continue
            chain = [start]
            seen.add(start)
            while chain[-1] in succ and succ[chain[-1]] not in seen:
                chain.append(succ[chain[-1]])
                seen.add(chain[-1])
            closed = succ.get(chain[-1]) == start
            split = (chain[0][0] - 1) % count in forced or any(
                i in forced for i, _ in chain
            )
            points = [
                FlowPoint(
                    samples[i].param,
                    samples[i].energies[a],
                    Side.LEFT,
                    i,
                    self.gap.index,
                )
                for i, a in chain
            ]
            curves.append(FlowCurve(self.gap.index, points, closed, split))
        return curves


@public
def spectral_flows(
    family: SequenceFamily,
    spec: OperatorSpec,
    gaps: Sequence[Gap],
    grid: int,
    *,
    tolerances: Optional[Tolerances] = None,
    workers: int = 1,
) -> Dict[int, List[FlowCurve]]:
    """Left-edge flow curves per gap over one phason cycle of *family*."""
    tolerances = Tolerances() if tolerances is None else tolerances
    params = family.sweep(grid)
    windows = _windows(gaps)
    parts = Parallel(n_jobs=workers)(
        delayed(_flow_chunk)(family, spec, chunk, windows, tolerances)
        for chunk in _chunks(params)
    )
    results = [per_gap for part in parts for per_gap in part]
    unknown = sum(
        side is Side.UNKNOWN
        for per_gap in results
        for found in per_gap
        for _, side in found
    )
    if unknown:
        log.info("%d clustered in-gap states excluded from the flow", unknown)
    flows = {}
    for pos, gap in enumerate(gaps):

        def evaluate(param, window=windows[pos]):
            found = _flow_chunk(family, spec, [param], [window], tolerances)
            return _left_energies(found[0][0])

        samples = [
            _Sample(param, _left_energies(per_gap[pos]))
            for param, per_gap in zip(params, results)
        ]
        tracker = _FlowTracker(gap, family, evaluate, tolerances)
        flows[gap.index] = tracker.track(samples)
    return flows


@public
def spectral_flow(
    family: SequenceFamily,
    spec: OperatorSpec,
    gap: Gap,
    grid: int,
    *,
    tolerances: Optional[Tolerances] = None,
    workers: int = 1,
) -> List[FlowCurve]:
    flows = spectral_flows(
        family, spec, [gap], grid, tolerances=tolerances, workers=workers
    )
    return flows[gap.index]


# endregion

# region #### Winding ################################################################


def _steps(curve: FlowCurve) -> Tuple[np.ndarray, np.ndarray]:
    energies = curve.energies
    if curve.closed:
        return energies, np.roll(energies, -1)
    return energies[:-1], energies[1:]


@public
def winding_crossings(curves: Sequence[FlowCurve], gap: Gap) -> int:
    """Signed crossings of the gap midline, upward counting +1."""
    midline = gap.mid
    if any(np.any(curve.energies == midline) for curve in curves):
        midline += MIDLINE_NUDGE * gap.width
    total = 0
    for curve in curves:
        start, end = _steps(curve)
        up = (start < midline) & (end > midline)
        down = (start > midline) & (end < midline)
        total += int(up.sum()) - int(down.sum())
    return total


@public
def winding_displacement(
    curves: Sequence[FlowCurve],
    gap: Gap,
    *,
    jump_tol: float = JUMP_TOL,
    wind_tol: float = WIND_TOL,
) -> int:
    """Total signed energy travelled, in units of the gap width.

    Open curves are extended to the gap edge they enter from and leave to.
    """
    reach = jump_tol * gap.width
    total = 0.0
    for curve in curves:
        start, end = _steps(curve)
        total += float(np.sum(end - start))
        if curve.closed or not len(curve.points):
            continue
        first, last = curve.points[0].energy, curve.points[-1].energy
        if first - gap.E0 <= reach:
            total += first - gap.E0
        elif gap.E1 - first <= reach:
            total += first - gap.E1
        if gap.E1 - last <= reach:
            total += gap.E1 - last
        elif last - gap.E0 <= reach:
            total += gap.E0 - last
    value = total / gap.width
    rounded = round(value)
    if abs(value - rounded) > wind_tol:
        raise UnderResolvedSweep(
            f"gap {gap.index}: displacement {value:.3f} is not near an integer; "
            f"refine grid"
        )
    return int(rounded)


@public
def winding(
    curves: Sequence[FlowCurve], gap: Gap, tolerances: Optional[Tolerances] = None
) -> WindingResult:
    tolerances = Tolerances() if tolerances is None else tolerances
    result = WindingResult(
        gap.index,
        winding_crossings(curves, gap),
        winding_displacement(
            curves, gap, jump_tol=tolerances.jump_tol, wind_tol=tolerances.wind_tol
        ),
    )
    if not result.agree:
        log.warning(
            "gap %d: %d midline crossings but displacement %d",
            gap.index,
            result.w_crossings,
            result.w_displacement,
        )
    return result


def _trivial_gap(bulk: Spectrum, tolerances: Tolerances) -> Gap:
    bottom = float(bulk.eigenvalues[0])
    return Gap(
        bottom - 1.0,
        bottom - tolerances.min_width,
        0.0,
        GapLabel(0, 0, 0.0, True),
        index=-1,
    )


@public
def verify_correspondence(
    family: SequenceFamily,
    spec: OperatorSpec,
    bulk: Spectrum,
    gaps: Sequence[Gap],
    grid: int,
    *,
    tolerances: Optional[Tolerances] = None,
    workers: int = 1,
    metadata: Optional[Dict[str, Any]] = None,
) -> CorrespondenceReport:
    """Check ``winding == -m`` on every labelled gap.

    The global orientation is fixed by the widest gap reliably labelled
    ``(0, 1)``, whose winding is taken to be -1.  The gap below the spectrum
    is reported with label (0, 0).
    """
    tolerances = Tolerances() if tolerances is None else tolerances
    orient_gap = orientation_gap(gaps)
    if orient_gap is None:
        raise OrientationGapMissing(
            f"no gap reliably labelled (0, 1) wider than {tolerances.min_width}"
        )
    checked = [_trivial_gap(bulk, tolerances), *gaps]
    flows = spectral_flows(
        family, spec, checked, grid, tolerances=tolerances, workers=workers
    )
    windings = {
        gap.index: winding(flows[gap.index], gap, tolerances) for gap in checked
    }
    raw = windings[orient_gap.index].w_crossings
    if abs(raw) == 1:
        orientation = -raw
        log.info("orientation %+d from gap %d", orientation, orient_gap.index)
    else:
        orientation = 0
        log.warning(
            "gap %d labelled (0, 1) winds %d times; no orientation",
            orient_gap.index,
            raw,
        )
    rows = [GapReport(gap, windings[gap.index], orientation) for gap in checked]
    return CorrespondenceReport(rows, orientation, dict(metadata or {}))


# endregion

# region #### Continuity #############################################################


@public
class ContinuityResult(NamedTuple):
    deltas: np.ndarray
    distances: np.ndarray
    exponent: float
    """Fitted ``d ~ delta**exponent``; NaN when some distance vanishes"""


@public
def spectral_continuity(
    family: SequenceFamily,
    spec: OperatorSpec,
    gaps: Sequence[Gap],
    phi: float,
    deltas: Sequence[float],
    *,
    tolerances: Optional[Tolerances] = None,
) -> ContinuityResult:
    """Hausdorff distance of in-gap Dirichlet spectra at ``phi`` and ``phi + delta``."""
    tolerances = Tolerances() if tolerances is None else tolerances
    windows = _windows(gaps)

    def in_gap(value):
        word = family.word(SweepParam("phi", frac(value)))
        M = build_hamiltonian(word, spec, DIRICHLET)
        found = _in_gap(M, windows, tolerances.spec, tolerances.backend)
        return np.concatenate(found) if found else np.zeros(0)

    base = in_gap(phi)
    distances = []
    for delta in deltas:
        moved = in_gap(phi + delta)
        if not len(base) and not len(moved):
            distances.append(0.0)
        elif not len(base) or not len(moved):
            distances.append(math.inf)
        else:
            distances.append(hausdorff_distance(base, moved))
    deltas = np.asarray(deltas, dtype=float)
    distances = np.asarray(distances)
    exponent = math.nan
    usable = np.isfinite(distances) & (distances > 0)
    if usable.sum() >= 2 and usable.all():
        exponent = float(np.polyfit(np.log(deltas), np.log(distances), 1)[0])
    return ContinuityResult(deltas, distances, exponent)


# endregion
