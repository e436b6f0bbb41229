# Copyright 2024 The sturmian Developers
# SPDX-License-Identifier: Apache-2.0

"""Testing helpers."""

from typing import Optional, Sequence

import numpy as np

from sturmian.analysis import FlowCurve, FlowPoint, Gap, Side
from sturmian.operators import (
    DIRICHLET,
    PERIODIC,
    BoundaryCondition,
    HamiltonianMatrix,
    OperatorSpec,
    build_hamiltonian,
)
from sturmian.sequences import FIB_THETA, CutProjectParams, SweepParam, Word


def dense_eigenvalues(M: HamiltonianMatrix) -> np.ndarray:
    """Dense reference spectrum (Householder reduction plus QL in LAPACK)."""
    return np.linalg.eigvalsh(M.to_dense())


def constant_word(size: int, letter: float = FIB_THETA) -> Word:
    """A word of one repeated letter, periodic with period 1."""
    return Word(np.full(size, letter), period=1)


def free_matrix(size: int, bc: BoundaryCondition = DIRICHLET) -> HamiltonianMatrix:
    """Zero potential and unit hopping: the Kohmoto operator on the word ``aaa...``."""
    params = CutProjectParams(FIB_THETA)
    spec = OperatorSpec.kohmoto(params)
    return build_hamiltonian(constant_word(size, params.a), spec, bc)


def random_banded(
    rng: np.random.Generator,
    size: int,
    bandwidth: int = 1,
    bc: BoundaryCondition = DIRICHLET,
) -> HamiltonianMatrix:
    bands = np.zeros((bandwidth + 1, size))
    bands[0] = rng.uniform(-2.0, 2.0, size)
    for k in range(1, bandwidth + 1):
        bands[k, : size - k] = rng.uniform(-1.0, 1.0, size - k)
    corner = None
    if bc is PERIODIC:
        corner = np.tril(rng.uniform(-1.0, 1.0, (bandwidth, bandwidth)))
    return HamiltonianMatrix(bands, bc, corner)


def synthetic_curve(
    energies: Sequence[float],
    *,
    gap_id: int = 0,
    closed: bool = False,
    params: Optional[Sequence[float]] = None,
) -> FlowCurve:
    if params is None:
        params = np.linspace(0.0, 1.0, len(energies), endpoint=False)
    points = [
        FlowPoint(SweepParam("phi", float(p)), e, Side.LEFT, n, gap_id)
        for n, (p, e) in enumerate(zip(params, energies))
    ]
    return FlowCurve(gap_id, points, closed)


def unit_gap(index: int = 0) -> Gap:
    return Gap(0.0, 1.0, 0.5, index=index)
