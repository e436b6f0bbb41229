# Copyright 2024 The sturmian Developers
# SPDX-License-Identifier: Apache-2.0

import json
import logging
from unittest.mock import Mock

import numpy as np
import pytest
from pytest_mock import MockFixture

from sturmian.analysis import (
    FLOW_COLUMNS,
    CorrespondenceReport,
    FlowPoint,
    Gap,
    GapLabel,
    GapReport,
    OrientationGapMissing,
    Side,
    Tolerances,
    UnderResolvedSweep,
    WindingResult,
    _FlowTracker,
    _Sample,
    _classified,
    _swept_ranges,
    _trivial_gap,
    boundary_sweep,
    bulk_spectrum,
    covering_intervals,
    edge_side,
    find_gaps,
    flow_side,
    gap_coverage,
    gap_label,
    ids,
    label_gaps,
    merge_intervals,
    orientation_gap,
    perturbation_sides,
    prominent_gaps,
    spectral_continuity,
    spectral_flow,
    verify_correspondence,
    winding,
    winding_crossings,
    winding_displacement,
)
from sturmian.eigensolve import Spectrum, eigenvector
from sturmian.operators import DIRICHLET, OperatorSpec, cyclic_shift
from sturmian.sequences import (
    FIB_THETA,
    CutProjectParams,
    SequenceFamily,
    SweepParam,
    hausdorff_distance,
)
from sturmian.testing.helpers import synthetic_curve, unit_gap
from sturmian.testing.reference import free_chain_spectrum
from sturmian.tests.conftest import slow

param = pytest.param
parametrize = pytest.mark.parametrize

TOL = 1e-10


def _phi(value: float) -> SweepParam:
    return SweepParam("phi", value)


@pytest.fixture
def smoothed_bulk(smoothed_89):
    family, spec = smoothed_89
    tolerances = Tolerances()
    bulk = bulk_spectrum(family, spec, 16, tolerances=tolerances)
    gaps = find_gaps(bulk, tolerances.min_width, resolution=tolerances.resolution)
    return bulk, label_gaps(gaps, FIB_THETA, tolerances.label_for(family.q))


@pytest.fixture(scope="module")
def kohmoto_987():
    params = CutProjectParams.periodic(FIB_THETA, 987)
    family = SequenceFamily(params)
    spec = OperatorSpec.kohmoto(params)
    tolerances = Tolerances()
    bulk = bulk_spectrum(family, spec, 1, tolerances=tolerances)
    gaps = find_gaps(bulk, tolerances.min_width, resolution=tolerances.resolution)
    return family, spec, label_gaps(gaps, FIB_THETA, tolerances.label_for(family.q))


def _acceptance_gaps(family, spec, grid, tolerances):
    bulk = bulk_spectrum(family, spec, grid, tolerances=tolerances, workers=4)
    gaps = label_gaps(
        find_gaps(bulk, tolerances.min_width, resolution=tolerances.resolution),
        FIB_THETA,
        tolerances.label_for(family.q),
    )
    chosen = set(prominent_gaps(gaps))
    theta = orientation_gap(gaps)
    if theta is not None:
        chosen.add(theta)
    return bulk, gaps, sorted(chosen, key=lambda gap: gap.E0)


class TestRecords:
    def test_tolerances(self):
        tolerances = Tolerances()
        assert tolerances.resolution == pytest.approx(5e-10)
        assert tolerances.label_for(89) == pytest.approx(10 / 89)
        assert Tolerances(label_tol=1e-3).label_for(89) == 1e-3

    @parametrize(
        "kwargs",
        [
            param({"spec": 0.0}, id="spec"),
            param({"jump_tol": -0.1}, id="jump"),
            param({"backend": "magic"}, id="backend"),
        ],
    )
    def test_bad_tolerances(self, kwargs):
        with pytest.raises(ValueError):
            Tolerances(**kwargs)

    def test_gap(self):
        gap = Gap(-1.0, 1.0, 0.5)
        assert (gap.width, gap.mid) == (2.0, 0.0)
        assert gap.contains(0.0)
        assert not gap.contains(1.0)

    def test_bad_gap(self):
        with pytest.raises(ValueError, match="out of order"):
            Gap(1.0, 0.0, 0.5)
        with pytest.raises(ValueError, match="ids"):
            Gap(0.0, 1.0, 1.5)

    def test_flow_point_row(self):
        point = FlowPoint(SweepParam("t", 0.5, 3), 0.25, Side.LEFT, 7, 2)
        assert point.row() == (7, "t", 3, "0.5", "0.25", "left", 2)
        assert len(point.row()) == len(FLOW_COLUMNS)
        assert FlowPoint(_phi(0.1), 0.0, Side.RIGHT).row()[2] == ""

    def test_report(self):
        gap = Gap(0.0, 1.0, FIB_THETA, GapLabel(0, 1, 0.0, True), index=3)
        row = GapReport(gap, WindingResult(3, 1, 1), -1)
        assert row.passed
        assert list(row.as_dict()) == [
            "E0",
            "E1",
            "ids",
            "n",
            "m",
            "w_crossings",
            "w_displacement",
            "pass",
        ]
        report = CorrespondenceReport([row], -1, {"L": 89})
        document = json.loads(report.to_json())
        assert list(document) == ["metadata", "orientation", "passed", "gaps"]
        assert document["passed"] is True
        assert document["gaps"][0]["m"] == 1

    def test_report_failures(self):
        gap = Gap(0.0, 1.0, FIB_THETA, GapLabel(0, 1, 0.0, True))
        assert not GapReport(gap, WindingResult(0, 1, 0), -1).passed
        assert not GapReport(gap, WindingResult(0, 1, 1), 1).passed
        unlabelled = Gap(0.0, 1.0, FIB_THETA, GapLabel(0, 1, 0.3, False))
        assert not GapReport(unlabelled, WindingResult(0, 1, 1), -1).passed
        assert not CorrespondenceReport([], 0).passed


class TestBulk:
    def test_covering_intervals(self):
        intervals = covering_intervals([1.0, 0.0, 0.1, 0.15], 0.06)
        assert intervals.tolist() == [[0.0, 0.0], [0.1, 0.15], [1.0, 1.0]]
        assert covering_intervals([], 0.1).shape == (0, 2)

    def test_ids_strictly_below(self):
        values = Spectrum([0.0, 1.0, 2.0, 3.0], TOL, 4)
        assert ids(values, 1.5) == 0.5
        assert ids(values, 1.0) == 0.25
        assert ids(values, -1.0) == 0.0

    def test_kohmoto(self, kohmoto_89_gaps):
        bulk, _ = kohmoto_89_gaps
        assert bulk.spectrum.size == 89
        assert len(bulk.spectrum) == 89
        assert len(bulk.samples) == 1
        assert len(list(bulk.rows())) == 89

    def test_smoothed_grid(self, smoothed_bulk):
        bulk, _ = smoothed_bulk
        assert bulk.spectrum.size == 16 * 89
        assert [p.value for p, _ in bulk.samples] == [j / 16 for j in range(16)]
        assert bulk.intervals[:, 0].tolist() == sorted(bulk.intervals[:, 0].tolist())

    def test_workers(self, smoothed_89):
        family, spec = smoothed_89
        serial = bulk_spectrum(family, spec, 4)
        parallel = bulk_spectrum(family, spec, 4, workers=2)
        assert np.array_equal(
            serial.spectrum.eigenvalues, parallel.spectrum.eigenvalues
        )

    def test_empty_grid(self, smoothed_89):
        family, spec = smoothed_89
        with pytest.raises(ValueError, match="empty"):
            bulk_spectrum(family, spec, 0)

    def test_merge_intervals(self):
        merged = merge_intervals([[2.0, 3.0], [0.0, 1.0], [0.5, 0.7], [1.05, 1.5]], 0.1)
        assert merged.tolist() == [[0.0, 1.5], [2.0, 3.0]]
        assert merge_intervals([], 0.1).shape == (0, 2)

    def test_swept_ranges(self):
        spectra = [np.array([0.0, 2.0]), np.array([0.5, 1.5]), np.array([0.2, 3.0])]
        assert _swept_ranges(spectra, cyclic=False).tolist() == [
            [0.0, 0.5],
            [1.5, 2.0],
            [0.2, 0.5],
            [1.5, 3.0],
        ]
        cyclic = _swept_ranges(spectra, cyclic=True)
        assert cyclic[-2:].tolist() == [[0.0, 0.2], [2.0, 3.0]]
        assert _swept_ranges(spectra[:1], cyclic=True).shape == (0, 2)

    def test_swept_ranges_covered(self, smoothed_bulk):
        bulk, _ = smoothed_bulk
        spectra = [values for _, values in bulk.samples]
        for lo, hi in _swept_ranges(spectra, cyclic=True):
            inside = (bulk.intervals[:, 0] <= lo) & (hi <= bulk.intervals[:, 1])
            assert inside.any()

    def test_augmented(self, augmented_89_gaps):
        bulk, gaps = augmented_89_gaps
        assert bulk.spectrum.size == 16 * 89
        assert [p.kind for p, _ in bulk.samples] == ["t"] * 16
        # no slivers between samples of one eigenvalue branch
        near = [gap for gap in gaps if abs(gap.ids - 34 / 89) < 1 / 89]
        assert len(near) == 1
        (gap,) = near
        assert gap.ids == pytest.approx(34 / 89)
        assert (gap.label.n, gap.label.m) == (0, 1)
        assert gap.E0 == pytest.approx(-0.178, abs=2e-3)
        assert gap.E1 == pytest.approx(1.079, abs=2e-3)
        for gap in gaps:
            assert gap.ids * 89 == pytest.approx(round(gap.ids * 89))

    def test_sturmian_independent_of_phi(self, params_89, kohmoto_89_gaps):
        bulk, _ = kohmoto_89_gaps
        moved = SequenceFamily(params_89, phi0=0.3)
        other = bulk_spectrum(moved, OperatorSpec.kohmoto(params_89), 1)
        distance = hausdorff_distance(
            bulk.spectrum.eigenvalues, other.spectrum.eigenvalues
        )
        assert distance <= 2 * TOL

    @slow
    def test_smoothed_converges_to_augmented(self):
        params = CutProjectParams.periodic(FIB_THETA, 987)
        spec = OperatorSpec.normalized(params)
        augmented = bulk_spectrum(SequenceFamily(params, "augmented"), spec, 32)
        distances = []
        for epsilon in (0.1, 0.03, 0.01):
            family = SequenceFamily(params, "smoothed", epsilon)
            smoothed = bulk_spectrum(family, spec, 32)
            distances.append(
                hausdorff_distance(
                    smoothed.spectrum.eigenvalues, augmented.spectrum.eigenvalues
                )
            )
        assert distances[0] > distances[1] > distances[2]


class TestGaps:
    def test_two_bands(self):
        values = np.concatenate((np.linspace(0.0, 1.0, 21), np.linspace(2.0, 3.0, 21)))
        gaps = find_gaps(Spectrum(values, TOL, 42), 0.01, resolution=0.06)
        assert len(gaps) == 1
        assert (gaps[0].E0, gaps[0].E1) == (1.0, 2.0)
        assert gaps[0].ids == 0.5
        assert gaps[0].index == 0

    def test_too_narrow(self):
        values = np.concatenate((np.linspace(0.0, 1.0, 21), np.linspace(2.0, 3.0, 21)))
        assert find_gaps(Spectrum(values, TOL, 42), 1.5, resolution=0.06) == []

    def test_free_chain_has_no_gaps(self):
        values = Spectrum(free_chain_spectrum(2000), TOL, 2000)
        assert find_gaps(values, 0.01) == []

    def test_empty(self):
        with pytest.raises(ValueError, match="empty"):
            find_gaps(Spectrum(np.zeros(0), TOL, 0))

    @parametrize(
        "ids_value, expected",
        [
            param(FIB_THETA, (0, 1), id="theta"),
            param(1 - FIB_THETA, (1, -1), id="one-minus-theta"),
            param(1.0, (1, 0), id="top"),
            param(0.0, (0, 0), id="bottom"),
        ],
    )
    def test_label(self, ids_value, expected):
        label = gap_label(ids_value, FIB_THETA)
        assert (label.n, label.m) == expected
        assert label.residual == pytest.approx(0.0, abs=1e-15)
        assert label.reliable

    def test_unreliable(self, caplog):
        with caplog.at_level(logging.INFO, logger="sturmian.log"):
            label = gap_label(0.5, FIB_THETA, label_tol=1e-12)
        assert not label.reliable
        assert label.residual > 1e-12
        assert "no label" in caplog.text

    def test_kohmoto_labels(self, kohmoto_89_gaps):
        _, gaps = kohmoto_89_gaps
        labels = {(gap.label.n, gap.label.m) for gap in gaps}
        assert {(0, 1), (1, -1)} <= labels
        for gap in gaps:
            assert gap.label.reliable
            assert gap.label.m != 0
            assert 0.0 < gap.ids < 1.0

    def test_kohmoto_ids_are_counts(self, kohmoto_89_gaps):
        _, gaps = kohmoto_89_gaps
        for gap in gaps:
            assert gap.ids * 89 == pytest.approx(round(gap.ids * 89))

    def test_prominent(self):
        gaps = [
            Gap(0.0, 1.0, 0.1, index=0),
            Gap(2.0, 2.5, 0.2, index=1),
            Gap(3.0, 5.0, 0.3, index=2),
        ]
        assert [gap.index for gap in prominent_gaps(gaps, 2)] == [0, 2]
        assert [gap.index for gap in prominent_gaps(gaps)] == [0, 1, 2]

    def test_orientation_gap(self):
        theta = GapLabel(0, 1, 1e-4, True)
        gaps = [
            Gap(0.0, 0.02, 0.38, theta, index=0),
            Gap(0.1, 0.9, 0.382, theta, index=1),
            Gap(1.0, 3.0, 0.5, GapLabel(0, 1, 0.2, False), index=2),
            Gap(4.0, 5.0, 0.6, GapLabel(1, -1, 0.0, True), index=3),
        ]
        assert orientation_gap(gaps).index == 1
        assert orientation_gap(gaps[2:]) is None
        assert orientation_gap([Gap(0.0, 1.0, 0.4)]) is None

    def test_augmented_orientation_gap(self, augmented_89_gaps):
        _, gaps = augmented_89_gaps
        gap = orientation_gap(gaps)
        assert gap.ids == pytest.approx(34 / 89)
        assert gap.width > 1.0


class TestBoundary:
    @parametrize(
        "weights, expected",
        [
            param([1, 0, 0, 0, 0, 0, 0, 0], Side.LEFT, id="left"),
            param([0, 0, 0, 0, 0, 0, 0, 1], Side.RIGHT, id="right"),
            param([1, 1, 1, 1, 1, 1, 1, 1], Side.UNKNOWN, id="spread"),
        ],
    )
    def test_edge_side(self, weights, expected):
        assert edge_side(np.sqrt(weights)) is expected

    @parametrize(
        "weights, expected",
        [
            param([0.3, 0.15, 0.1, 0, 0, 0.05, 0.1, 0.3], Side.LEFT, id="more-left"),
            param([0.3, 0.1, 0.05, 0, 0, 0.1, 0.15, 0.3], Side.RIGHT, id="more-right"),
            param([1, 0, 0, 0, 0, 0, 0, 0], Side.LEFT, id="left"),
            param([0, 0, 0, 0, 0, 0, 0, 1], Side.RIGHT, id="right"),
        ],
    )
    def test_flow_side(self, weights, expected):
        assert flow_side(np.sqrt(weights)) is expected

    @parametrize("flow, expected", [param(True, Side.LEFT), param(False, Side.UNKNOWN)])
    def test_clustered(
        self, mocker: MockFixture, kohmoto_89, kohmoto_89_gaps, flow, expected
    ):
        family, spec = kohmoto_89
        _, gaps = kohmoto_89_gaps
        def pairs(matrices, owner, energies, tol):
            return np.full(len(energies), 2)

        sizes = mocker.patch("sturmian.analysis.cluster_sizes", side_effect=pairs)
        words = [family.word(_phi((j + 0.5) / 89)) for j in range(0, 89, 11)]
        windows = [(gap.E0, gap.E1) for gap in gaps]
        found = _classified(words, spec, windows, Tolerances(), flow=flow)
        sizes.assert_called_once()
        sides = [side for row in found for per_gap in row for _, side in per_gap]
        assert sides
        assert set(sides) == {expected}

    @slow
    def test_rank_bound_987(self, kohmoto_987):
        family, spec, gaps = kohmoto_987
        points = boundary_sweep(family, spec, gaps, 200, workers=4)
        counts = {}
        for point in points:
            key = (point.shift, point.gap_id)
            counts[key] = counts.get(key, 0) + 1
        assert counts
        assert max(counts.values()) <= 2

    @slow
    def test_kohmoto_coverage_987(self, kohmoto_987):
        family, spec, gaps = kohmoto_987
        chosen = prominent_gaps(gaps)
        points = boundary_sweep(family, spec, chosen, family.q, workers=4)
        for gap in chosen:
            inside = [p for p in points if p.gap_id == gap.index]
            assert gap_coverage(inside, gap, gap.width / 200) <= 0.5

    @slow
    def test_smoothed_coverage_987(self):
        params = CutProjectParams.periodic(FIB_THETA, 987)
        family = SequenceFamily(params, "smoothed", epsilon=0.1)
        spec = OperatorSpec.normalized(params)
        _, gaps, _ = _acceptance_gaps(family, spec, 32, Tolerances())
        chosen = prominent_gaps(gaps)
        points = boundary_sweep(family, spec, chosen, family.q, workers=4)
        for gap in chosen:
            inside = [p for p in points if p.gap_id == gap.index]
            assert gap_coverage(inside, gap, gap.width / 200) >= 0.9

    def test_sweep(self, kohmoto_89, kohmoto_89_gaps):
        family, spec = kohmoto_89
        _, gaps = kohmoto_89_gaps
        points = boundary_sweep(family, spec, gaps, 8)
        by_gap = {gap.index: gap for gap in gaps}
        for point in points:
            assert by_gap[point.gap_id].contains(point.energy)
            assert 0 <= point.shift < 8
            assert point.param.kind == "phi"
        for shift in range(8):
            for gap in gaps:
                key = (shift, gap.index)
                inside = [p for p in points if (p.shift, p.gap_id) == key]
                # removing one hopping is a rank-two change
                assert len(inside) <= 2

    def test_sweep_phases(self, kohmoto_89, kohmoto_89_gaps):
        family, spec = kohmoto_89
        _, gaps = kohmoto_89_gaps
        approx = family.params.approximant
        for point in boundary_sweep(family, spec, gaps, 3):
            expected = family.base_phi + (point.shift * approx.p % approx.q) / approx.q
            assert point.param.value == pytest.approx(expected)

    def test_bad_shifts(self, kohmoto_89):
        family, spec = kohmoto_89
        with pytest.raises(ValueError, match="positive"):
            boundary_sweep(family, spec, [], 0)

    def test_repeating_shifts(self, caplog):
        params = CutProjectParams.periodic(FIB_THETA, 13)
        family = SequenceFamily(params)
        with caplog.at_level(logging.WARNING, logger="sturmian.log"):
            points = boundary_sweep(family, OperatorSpec.kohmoto(params), [], 14)
        assert points == []
        assert "repeat" in caplog.text

    def test_coverage(self):
        gap = unit_gap()
        assert gap_coverage([], gap, 0.1) == 0.0
        assert gap_coverage([0.5], gap, 0.5) == pytest.approx(1.0)
        assert gap_coverage([0.1, 0.2], gap, 0.05) == pytest.approx(0.2)
        assert gap_coverage([0.1, 0.12], gap, 0.05) == pytest.approx(0.12)
        assert gap_coverage([1.5, -0.2], gap, 0.1) == 0.0

    def test_coverage_points(self):
        point = FlowPoint(_phi(0.0), 0.5, Side.LEFT)
        assert gap_coverage([point], unit_gap(), 0.25) == pytest.approx(0.5)
        with pytest.raises(ValueError, match="radius"):
            gap_coverage([point], unit_gap(), 0.0)

    def test_shifts_fill_widest_gap(self, kohmoto_89, kohmoto_89_gaps):
        family, spec = kohmoto_89
        _, gaps = kohmoto_89_gaps
        gap = max(gaps, key=lambda g: g.width)
        points = boundary_sweep(family, spec, [gap], family.q)
        assert gap_coverage(points, gap, 0.25 * gap.width) > 0.5

    def test_perturbation_agrees(self, kohmoto_word_89, kohmoto_89_gaps):
        word, spec = kohmoto_word_89
        _, gaps = kohmoto_89_gaps
        seen = 0
        for shift in range(0, 89, 8):
            M = cyclic_shift(word, spec, shift, DIRICHLET)
            for gap in gaps:
                for energy, side in perturbation_sides(M, gap, tol=TOL):
                    first = eigenvector(M, energy, TOL)[0] ** 2
                    if first > 1e-4:
                        assert side is Side.LEFT
                        seen += 1
                    elif first < 1e-9:
                        assert side is Side.RIGHT
                        seen += 1
        assert seen > 0


class TestFlow:
    def _tracker(self, family, evaluate=None, **kwargs):
        evaluate = Mock(return_value=np.zeros(0)) if evaluate is None else evaluate
        return _FlowTracker(unit_gap(), family, evaluate, Tolerances(**kwargs))

    def test_match(self, smoothed_89):
        tracker = self._tracker(smoothed_89[0])
        pairs, ambiguous = tracker.match(
            _Sample(_phi(0.0), np.array([0.3, 0.6])),
            _Sample(_phi(0.1), np.array([0.31, 0.62])),
        )
        assert pairs == [(0, 0), (1, 1)]
        assert not ambiguous

    def test_match_ambiguous(self, smoothed_89):
        tracker = self._tracker(smoothed_89[0])
        _, ambiguous = tracker.match(
            _Sample(_phi(0.0), np.array([0.45, 0.5])),
            _Sample(_phi(0.1), np.array([0.47])),
        )
        assert ambiguous

    def test_match_edges(self, smoothed_89):
        tracker = self._tracker(smoothed_89[0])
        empty = _Sample(_phi(0.0), np.zeros(0))
        assert tracker.match(empty, _Sample(_phi(0.1), np.array([0.95]))) == ([], False)
        assert tracker.match(empty, _Sample(_phi(0.1), np.array([0.5]))) == ([], True)

    def test_linear_flow(self, smoothed_89):
        evaluate = Mock(return_value=np.zeros(0))
        tracker = self._tracker(smoothed_89[0], evaluate)
        samples = [_Sample(_phi(0.0), np.zeros(0))] + [
            _Sample(_phi(j / 16), np.array([j / 16])) for j in range(1, 16)
        ]
        curves = tracker.track(samples)
        evaluate.assert_not_called()
        assert len(curves) == 1
        (curve,) = curves
        assert not curve.closed
        assert not curve.split
        assert curve.energies.tolist() == [j / 16 for j in range(1, 16)]
        assert winding(curves, unit_gap()) == WindingResult(0, 1, 1)

    def test_closed_loop(self, smoothed_89):
        tracker = self._tracker(smoothed_89[0])
        samples = [_Sample(_phi(j / 4), np.array([0.5])) for j in range(4)]
        (curve,) = tracker.track(samples)
        assert curve.closed
        assert len(curve.points) == 4

    def test_refine_depth_limit(self, smoothed_89, caplog):
        evaluate = Mock(return_value=np.zeros(0))
        tracker = self._tracker(smoothed_89[0], evaluate, max_depth=3)
        samples = [
            _Sample(_phi(0.25), np.array([0.5])),
            _Sample(_phi(0.75), np.zeros(0)),
        ]
        with caplog.at_level(logging.WARNING, logger="sturmian.log"):
            curves = tracker.track(samples)
        assert evaluate.call_count == 6
        assert tracker.refinements == 6
        assert "unresolved crossing" in caplog.text
        (curve,) = curves
        assert curve.energies.tolist() == [0.5]
        assert curve.split

    def test_unresolved_link_joins_curve(self, kohmoto_89):
        evaluate = Mock(return_value=np.zeros(0))
        tracker = self._tracker(kohmoto_89[0], evaluate)
        samples = [
            _Sample(_phi(0.25), np.array([0.4, 0.5])),
            _Sample(_phi(0.75), np.array([0.45])),
        ]
        curves = tracker.track(samples)
        evaluate.assert_not_called()
        linked = [curve for curve in curves if len(curve.points) > 1]
        assert len(linked) == 1
        assert linked[0].energies.tolist() == [0.4, 0.45]
        assert all(curve.split for curve in curves)

    def test_refine_midpoints(self, smoothed_89):
        evaluate = Mock(return_value=np.array([0.5]))
        tracker = self._tracker(smoothed_89[0], evaluate)
        a = _Sample(_phi(0.25), np.array([0.35]))
        b = _Sample(_phi(0.75), np.array([0.65]))
        inserted = tracker.refine(a, b)
        evaluate.assert_called_once_with(_phi(0.5))
        assert [s.param for s in inserted] == [_phi(0.5)]

    def test_smoothed_flow(self, smoothed_89, smoothed_bulk):
        family, spec = smoothed_89
        _, gaps = smoothed_bulk
        gap = max(gaps, key=lambda g: g.width)
        tolerances = Tolerances(max_depth=4)
        curves = spectral_flow(family, spec, gap, 16, tolerances=tolerances)
        for curve in curves:
            assert curve.gap_id == gap.index
            for point in curve.points:
                assert gap.contains(point.energy)
                assert point.side is Side.LEFT


class TestWinding:
    def test_empty(self):
        assert winding([], unit_gap()) == WindingResult(0, 0, 0)

    @parametrize(
        "energies, expected",
        [
            param([0.1, 0.3, 0.45, 0.6, 0.8, 0.95], 1, id="up"),
            param([0.95, 0.8, 0.6, 0.45, 0.3, 0.1], -1, id="down"),
        ],
    )
    def test_open_curve(self, energies, expected):
        curves = [synthetic_curve(energies)]
        assert winding_crossings(curves, unit_gap()) == expected
        assert winding_displacement(curves, unit_gap()) == expected

    def test_closed_loop(self):
        curves = [synthetic_curve([0.3, 0.6, 0.7, 0.4], closed=True)]
        assert winding(curves, unit_gap()) == WindingResult(0, 0, 0)

    def test_sum_over_curves(self):
        curves = [
            synthetic_curve([0.1, 0.3, 0.45, 0.6, 0.8, 0.95]),
            synthetic_curve([0.3, 0.6, 0.7, 0.4], closed=True),
            synthetic_curve([0.05, 0.4, 0.7, 0.9]),
        ]
        assert winding(curves, unit_gap()).w_crossings == 2
        assert winding(curves, unit_gap()).agree

    def test_midline_sample(self):
        curves = [synthetic_curve([0.2, 0.5, 0.8])]
        assert winding_crossings(curves, unit_gap()) == 1
        assert winding_displacement(curves, unit_gap()) == 1

    def test_under_resolved(self):
        curves = [synthetic_curve([0.1, 0.3, 0.4])]
        assert winding_crossings(curves, unit_gap()) == 0
        with pytest.raises(UnderResolvedSweep, match="refine grid"):
            winding_displacement(curves, unit_gap())

    def test_disagreement_logged(self, caplog):
        # a curve cut at the midline loses its crossing but not its displacement
        curves = [synthetic_curve([0.05, 0.48]), synthetic_curve([0.52, 0.95])]
        with caplog.at_level(logging.WARNING, logger="sturmian.log"):
            result = winding(curves, unit_gap())
        assert result == WindingResult(0, 0, 1)
        assert not result.agree
        assert "0 midline crossings but displacement 1" in caplog.text

    def test_gap_scale(self):
        gap = Gap(-3.0, -1.0, 0.2, index=4)
        curves = [synthetic_curve([-2.9, -2.2, -1.8, -1.1], gap_id=4)]
        assert winding(curves, gap) == WindingResult(4, 1, 1)


class TestCorrespondence:
    def test_trivial_gap(self):
        gap = _trivial_gap(Spectrum([-2.0, 1.0], TOL, 2), Tolerances())
        assert (gap.E0, gap.E1) == (-3.0, pytest.approx(-2.01))
        assert gap.index == -1
        assert (gap.label.n, gap.label.m) == (0, 0)

    def test_missing_orientation(self, smoothed_89):
        family, spec = smoothed_89
        gaps = [Gap(0.0, 1.0, 0.5, GapLabel(1, -1, 0.0, True))]
        with pytest.raises(OrientationGapMissing):
            verify_correspondence(family, spec, Spectrum([-1.0, 2.0], TOL, 2), gaps, 8)

    def test_unreliable_orientation(self, smoothed_89):
        family, spec = smoothed_89
        gaps = [Gap(0.0, 1.0, 0.45, GapLabel(0, 1, 0.3, False))]
        with pytest.raises(OrientationGapMissing, match="reliably"):
            verify_correspondence(family, spec, Spectrum([-1.0, 2.0], TOL, 2), gaps, 8)

    @slow
    def test_smoothed_89(self, smoothed_89, smoothed_bulk):
        family, spec = smoothed_89
        bulk, gaps = smoothed_bulk
        chosen = [g for g in gaps if (g.label.n, g.label.m) in ((0, 1), (1, -1))]
        report = verify_correspondence(family, spec, bulk.spectrum, chosen, 256)
        assert report.orientation in (-1, 1)
        assert all(row.winding.agree for row in report.rows)
        assert report.passed

    @slow
    def test_augmented_89(self, augmented_89):
        family, spec = augmented_89
        tolerances = Tolerances()
        bulk, _, chosen = _acceptance_gaps(family, spec, 16, tolerances)
        report = verify_correspondence(
            family, spec, bulk.spectrum, chosen, 8, tolerances=tolerances, workers=4
        )
        theta = [row for row in report.rows if row.gap.ids == pytest.approx(34 / 89)]
        assert len(theta) == 1
        assert theta[0].gap.width > 1.0
        assert all(row.winding.agree for row in report.rows)
        assert report.passed

    @slow
    @parametrize("model", ["smoothed", "augmented"])
    def test_acceptance(self, model):
        params = CutProjectParams.periodic(FIB_THETA, 987)
        epsilon = 0.1 if model == "smoothed" else None
        family = SequenceFamily(params, model, epsilon)
        spec = OperatorSpec.normalized(params)
        tolerances = Tolerances()
        bulk, _, chosen = _acceptance_gaps(family, spec, 32, tolerances)
        report = verify_correspondence(
            family, spec, bulk.spectrum, chosen, 32, tolerances=tolerances, workers=4
        )
        assert all(row.winding.agree for row in report.rows)
        assert report.passed


class TestContinuity:
    def test_small_steps(self, smoothed_89, smoothed_bulk):
        family, spec = smoothed_89
        _, gaps = smoothed_bulk
        result = spectral_continuity(
            family, spec, prominent_gaps(gaps, 3), family.base_phi, [1e-3, 1e-5]
        )
        assert result.deltas.tolist() == [1e-3, 1e-5]
        assert result.distances[1] <= result.distances[0] + 1e-12
        assert result.distances[1] < 1e-2

    def test_no_gaps(self, smoothed_89):
        family, spec = smoothed_89
        result = spectral_continuity(family, spec, [], 0.3, [1e-3, 1e-4])
        assert result.distances.tolist() == [0.0, 0.0]
        assert np.isnan(result.exponent)
