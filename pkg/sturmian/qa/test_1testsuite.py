# Copyright 2024 The sturmian Developers
# SPDX-License-Identifier: Apache-2.0

"""Test the sanity of the test suite itself"""

import math

import numpy as np
import pytest

from sturmian.sequences import FIB_THETA
from sturmian.testing import reference


# noinspection PyUnresolvedReferences
@pytest.fixture(scope="module", autouse=True)
def exit_on_fail(request: pytest.FixtureRequest):
    # Every other module checks against these values; nothing else is
    # worth running if they are wrong.
    failcount = request.session.testsfailed
    yield
    if request.session.testsfailed != failcount:
        pytest.exit("Test Suite is Not Sane!")


class TestConvergents:
    def test_fibonacci(self):
        """Numerators and denominators run along the Fibonacci numbers"""
        pairs = reference.FIB_CONVERGENTS
        for (p0, q0), (p1, q1), (p2, q2) in zip(pairs, pairs[1:], pairs[2:]):
            assert p2 == p0 + p1
            assert q2 == q0 + q1

    def test_coprime(self):
        for p, q in reference.FIB_CONVERGENTS:
            assert math.gcd(p, q) == 1

    def test_alternate(self):
        """Convergents approach the slope from alternating sides"""
        signs = [np.sign(p / q - FIB_THETA) for p, q in reference.FIB_CONVERGENTS]
        assert all(a == -b for a, b in zip(signs, signs[1:]))

    def test_last_error(self):
        p, q = reference.FIB_CONVERGENTS[-1]
        error = abs(FIB_THETA - p / q)
        assert error == pytest.approx(reference.FIB_6765_ERROR, rel=1e-3)


class TestFreeSpectra:
    def test_traceless(self):
        """Zero potential means zero trace"""
        for size in (3, 10, 101):
            chain = reference.free_chain_spectrum(size)
            ring = reference.free_ring_spectrum(size)
            assert chain.sum() == pytest.approx(0.0, abs=1e-12)
            assert ring.sum() == pytest.approx(0.0, abs=1e-12)

    def test_small(self):
        assert reference.free_chain_spectrum(3) == pytest.approx(reference.FREE_CHAIN_3)
        assert reference.free_ring_spectrum(4) == pytest.approx(
            reference.FREE_RING_4, abs=1e-15
        )

    def test_bounds(self):
        values = reference.free_ring_spectrum(40)
        assert values[0] == -2.0
        assert values[-1] == 2.0

    def test_eigenvectors(self):
        H = np.diag([1.0, 1.0], 1) + np.diag([1.0, 1.0], -1)
        for vector, energy in (
            (reference.FREE_CHAIN_3_TOP, math.sqrt(2.0)),
            (reference.FREE_CHAIN_3_MIDDLE, 0.0),
        ):
            x = np.array(vector)
            assert np.linalg.norm(x) == pytest.approx(1.0)
            assert H @ x == pytest.approx(energy * x, abs=1e-15)
