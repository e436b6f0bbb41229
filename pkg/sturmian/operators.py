# Copyright 2024 The sturmian Developers
# SPDX-License-Identifier: Apache-2.0

"""Pattern-equivariant tight-binding Hamiltonians built from words."""

import csv
import logging
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, Iterator, Optional, Tuple

import attr
import numpy as np
from public import public
from scipy import sparse

from sturmian.sequences import CutProjectParams, Word

log = logging.getLogger("sturmian.log")


@public
class WordTooShortError(ValueError):
    pass


@public
class BoundaryCondition(Enum):
    PERIODIC = "periodic"
    """Indices taken mod L; the word must be a full period of an approximant"""
    DIRICHLET = "dirichlet"
    """Compression to the window; couplings leaving it are dropped"""


PERIODIC = BoundaryCondition.PERIODIC
DIRICHLET = BoundaryCondition.DIRICHLET


# region #### Codes ##################################################################

# Rules take an (N, 2r+1) array of letter blocks and return N coefficients.
# They are attrs instances so that specs pickle into worker processes.


@attr.s(frozen=True, slots=True)
class _Constant:
    value: float = attr.ib(converter=float)

    def __call__(self, blocks: np.ndarray) -> np.ndarray:
        return np.full(blocks.shape[0], self.value)


@attr.s(frozen=True, slots=True)
class _KohmotoOnsite:
    a: float = attr.ib()
    b: float = attr.ib()

    def __call__(self, blocks: np.ndarray) -> np.ndarray:
        center = blocks[:, blocks.shape[1] // 2]
        return (center > 0.5 * (self.a + self.b)).astype(float)


@attr.s(frozen=True, slots=True)
class _NormalizedOnsite:
    a: float = attr.ib()
    b: float = attr.ib()

    def __call__(self, blocks: np.ndarray) -> np.ndarray:
        center = blocks[:, blocks.shape[1] // 2]
        return 2.0 * (center - self.a) / (self.b - self.a)


@public
@attr.s(frozen=True, slots=True)
class SlidingBlockCode:
    """A local rule reading the letters ``n-r ... n+r`` around each site ``n``."""

    rule: Callable[[np.ndarray], np.ndarray] = attr.ib()
    range: int = attr.ib(default=0, converter=int)
    name: str = attr.ib(default="")

    @range.validator
    def _check_range(self, attribute, value):
        if value < 0:
            raise ValueError(f"range must be non-negative, got {value!r}")

    @classmethod
    def constant(cls, value: float) -> "SlidingBlockCode":
        return cls(_Constant(value), 0, f"const({value:g})")

    def blocks(self, letters: np.ndarray) -> np.ndarray:
        """Cyclic letter blocks, one row per site."""
        size = len(letters)
        offsets = np.arange(-self.range, self.range + 1)
        return letters[(np.arange(size)[:, None] + offsets) % size]

    def evaluate(self, letters: np.ndarray) -> np.ndarray:
        values = np.asarray(self.rule(self.blocks(letters)), dtype=float)
        if values.shape != (len(letters),):
            raise ValueError(f"code {self.name!r} returned shape {values.shape}")
        return values

    def __call__(self, block) -> float:
        block = np.asarray(block, dtype=float)
        if block.shape != (2 * self.range + 1,):
            raise ValueError(
                f"code {self.name!r} reads blocks of length {2 * self.range + 1}"
            )
        return float(self.rule(block[None, :])[0])


def _hopping(value) -> Dict[int, SlidingBlockCode]:
    hopping = {int(k): code for k, code in dict(value).items()}
    if not hopping:
        raise ValueError("at least one hopping offset is needed")
    if min(hopping) < 1:
        raise ValueError("hopping offsets must be positive")
    return hopping


@public
@attr.s(frozen=True, slots=True)
class OperatorSpec:
    onsite: SlidingBlockCode = attr.ib()
    hopping: Dict[int, SlidingBlockCode] = attr.ib(converter=_hopping)
    """Code for the coupling ``(n, n+k)`` per offset ``k``"""
    name: str = attr.ib(default="custom")

    @property
    def bandwidth(self) -> int:
        return max(self.hopping)

    @property
    def reach(self) -> int:
        return max(code.range for code in (self.onsite, *self.hopping.values()))

    @classmethod
    def kohmoto(cls, params: CutProjectParams) -> "OperatorSpec":
        """Free hopping plus a 0/1 potential; letters are split at ``(a+b)/2``."""
        onsite = SlidingBlockCode(_KohmotoOnsite(params.a, params.b), 0, "kohmoto")
        return cls(onsite, {1: SlidingBlockCode.constant(1.0)}, "kohmoto")

    @classmethod
    def normalized(cls, params: CutProjectParams) -> "OperatorSpec":
        """Free hopping plus ``2(t-a)/(b-a)``, continuous in the letter ``t``."""
        onsite = SlidingBlockCode(
            _NormalizedOnsite(params.a, params.b), 0, "normalized"
        )
        return cls(onsite, {1: SlidingBlockCode.constant(1.0)}, "normalized")


PRESETS: Dict[str, Callable[[CutProjectParams], OperatorSpec]] = {
    "kohmoto": OperatorSpec.kohmoto,
    "normalized": OperatorSpec.normalized,
}


# endregion

# region #### Matrices ###############################################################


def _readonly(value) -> np.ndarray:
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)
    return arr


@public
@attr.s(frozen=True, slots=True, eq=False)
class HamiltonianMatrix:
    """Real symmetric banded matrix, optionally closed into a ring.

    ``bands`` uses LAPACK lower storage, ``bands[k, n] = entry(n+k, n)``.  For
    periodic matrices the couplings that wrap around live in ``corner``, with
    ``corner[i - (L-w), j] = entry(i, j)`` for ``i >= L-w`` and ``j < w``.
    """

    bands: np.ndarray = attr.ib(converter=_readonly)
    bc: BoundaryCondition = attr.ib()
    corner: Optional[np.ndarray] = attr.ib(default=None)
    approximant: bool = attr.ib(default=True)
    """False when a periodic matrix was built from a word with no matching period"""

    @bands.validator
    def _check_bands(self, attribute, value):
        if value.ndim != 2 or value.shape[0] < 1:
            raise ValueError("bands must be a (w+1, L) array")

    def __attrs_post_init__(self):
        if self.bc is PERIODIC:
            w = self.bandwidth
            corner = np.zeros((w, w)) if self.corner is None else self.corner
            object.__setattr__(self, "corner", _readonly(corner))
            if self.corner.shape != (w, w):
                raise ValueError(f"corner must be ({w}, {w})")
        elif self.corner is not None:
            raise ValueError("Dirichlet matrices have no corner block")

    @property
    def size(self) -> int:
        return self.bands.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.bands.shape[0] - 1

    def __len__(self) -> int:
        return self.size

    def entry(self, i: int, j: int) -> float:
        if i < j:
            i, j = j, i
        size, w = self.size, self.bandwidth
        if not 0 <= j <= i < size:
            raise IndexError(f"({i}, {j}) outside a {size}x{size} matrix")
        value = 0.0
        if i - j <= w:
            value += float(self.bands[i - j, j])
        if self.bc is PERIODIC and i >= size - w and j < w:
            value += float(self.corner[i - (size - w), j])
        return value

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Rows, columns and values of the stored lower-triangle entries."""
        size, w = self.size, self.bandwidth
        rows, cols, vals = [], [], []
        for k in range(w + 1):
            n = np.arange(size - k)
            rows.append(n + k)
            cols.append(n)
            vals.append(self.bands[k, : size - k])
        if self.bc is PERIODIC:
            i, j = np.nonzero(self.corner)
            rows.append(i + size - w)
            cols.append(j)
            vals.append(self.corner[i, j])
        rows, cols, vals = (np.concatenate(part) for part in (rows, cols, vals))
        keep = (vals != 0.0) | (rows == cols)
        return rows[keep], cols[keep], vals[keep]

    def lower_entries(self) -> Iterator[Tuple[int, int, float]]:
        rows, cols, vals = self.coordinates()
        order = np.lexsort((cols, rows))
        for i, j, value in zip(rows[order], cols[order], vals[order]):
            yield int(i), int(j), float(value)

    def to_sparse(self) -> sparse.csr_matrix:
        rows, cols, vals = self.coordinates()
        off = rows != cols
        lower = sparse.coo_matrix((vals, (rows, cols)), shape=(self.size,) * 2)
        upper = sparse.coo_matrix(
            (vals[off], (cols[off], rows[off])), shape=(self.size,) * 2
        )
        return (lower + upper).tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.to_sparse() @ np.asarray(x, dtype=float)

    def gershgorin(self) -> Tuple[float, float]:
        """Interval containing every eigenvalue."""
        dense_rows = np.abs(self.to_sparse()).sum(axis=1).A1
        diag = self.bands[0]
        radius = dense_rows - np.abs(diag)
        return float(np.min(diag - radius)), float(np.max(diag + radius))

    def with_onsite_shift(self, index: int, delta: float) -> "HamiltonianMatrix":
        bands = self.bands.copy()
        bands[0, index] += delta
        return attr.evolve(self, bands=bands)

    def full_bands(self) -> np.ndarray:
        """``(2w+1, L)`` general band form for :func:`scipy.linalg.solve_banded`."""
        if self.bc is PERIODIC:
            raise ValueError("periodic matrices are not banded")
        w, size = self.bandwidth, self.size
        ab = np.zeros((2 * w + 1, size))
        ab[w:] = self.bands
        for k in range(1, w + 1):
            ab[w - k, k:] = self.bands[k, : size - k]
        return ab

    def folded_bands(self) -> np.ndarray:
        """Lower band storage, bandwidth ``2w``, of the ring reordered.

        The order is ``0, L-1, 1, L-2, ...``.
        """
        size, w = self.size, self.bandwidth
        rows, cols, vals = self.coordinates()
        half = (size - 1) // 2
        position = np.where(
            np.arange(size) <= half,
            2 * np.arange(size),
            2 * (size - 1 - np.arange(size)) + 1,
        )
        pi, pj = position[rows], position[cols]
        lo, hi = np.minimum(pi, pj), np.maximum(pi, pj)
        folded = np.zeros((2 * w + 1, size))
        np.add.at(folded, (hi - lo, lo), vals)
        return folded

    def dump_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as fp:
            writer = csv.writer(fp)
            writer.writerow(("i", "j", "value"))
            for i, j, value in self.lower_entries():
                writer.writerow((i, j, repr(value)))


def _minimum_length(spec: OperatorSpec, bc: BoundaryCondition) -> int:
    w = spec.bandwidth
    length = max(2 * spec.reach + 2, w + 1)
    if bc is PERIODIC:
        length = max(length, 3 * w)
    return length


@public
def build_hamiltonian(
    word: Word, spec: OperatorSpec, bc: BoundaryCondition = PERIODIC
) -> HamiltonianMatrix:
    """Assemble ``onsite + sum_k (hop_k T^k + h.c.)`` on the letters of *word*.

    Codes read their letter blocks cyclically.  Under Dirichlet conditions the
    couplings leaving the window are dropped; periodic ones wrap into the corner.
    """
    bc = BoundaryCondition(bc)
    size, w = len(word), spec.bandwidth
    needed = _minimum_length(spec, bc)
    if size < needed:
        raise WordTooShortError(
            f"{spec.name} needs a word of length >= {needed} under {bc.value} "
            f"boundary conditions, got {size}"
        )
    letters = word.letters
    bands = np.zeros((w + 1, size))
    bands[0] = spec.onsite.evaluate(letters)
    corner = np.zeros((w, w)) if bc is PERIODIC else None
    for k, code in spec.hopping.items():
        values = code.evaluate(letters)
        bands[k, : size - k] = values[: size - k]
        if corner is not None:
            n = np.arange(size - k, size)
            np.add.at(corner, (n - (size - w), n + k - size), values[size - k:])
    approximant = True
    if bc is PERIODIC and (word.period is None or size % word.period):
        log.warning(
            "periodic boundary conditions on a word of length %d that is not "
            "a full period of an approximant",
            size,
        )
        approximant = False
    return HamiltonianMatrix(bands, bc, corner, approximant)


@public
def cyclic_shift(
    word: Word,
    spec: OperatorSpec,
    shift: int = 1,
    bc: BoundaryCondition = PERIODIC,
) -> HamiltonianMatrix:
    """Hamiltonian of *word* cyclically shifted by *shift* sites."""
    return build_hamiltonian(word.shifted(shift), spec, bc)


# endregion
