# Copyright 2024 The sturmian Developers
# SPDX-License-Identifier: Apache-2.0

"""Inertia counts, bisection eigenvalues and inverse iteration for banded matrices.

Everything is built on :func:`counts_below`, which factors ``M - E`` as
``L D L^T`` without pivoting and counts the negative pivots (Sylvester's law
of inertia).  Counts are vectorized over many energies at once, so one
bisection step for all eigenvalues of a matrix is a single sweep down its rows.
Periodic matrices eliminate their interior first and keep the rows touched by
the corner block as a border, factored last.
"""

import logging
import math
from typing import List, Sequence, Tuple

import attr
import numpy as np
from public import public
from scipy import linalg
from scipy.sparse import identity
from scipy.sparse.linalg import splu

from sturmian.operators import PERIODIC, HamiltonianMatrix

MAX_RETRIES = 3
BREAKDOWN_SHIFT = 1e-13
ISOLATION_FACTOR = 10
RESIDUAL_FACTOR = 100
MAX_ITERATIONS = 8
BACKENDS = ("native", "lapack")

TINY = np.finfo(float).tiny

log = logging.getLogger("sturmian.log")
debug = logging.getLogger("sturmian.debug")


@public
class PivotBreakdown(ArithmeticError):
    """A zero pivot kept recurring after every retry shift."""

    def __init__(self, energy: float, offset: float):
        super().__init__(
            f"zero pivot at E={energy!r} after {MAX_RETRIES} retries; "
            f"shift E by about {offset:.3g} and retry"
        )
        self.energy = energy
        self.offset = offset


@public
class ClusteredEigenvalueError(ValueError):
    pass


@public
class StalledIteration(ClusteredEigenvalueError, ArithmeticError):
    """Inverse iteration missed its residual target, as on unresolved clusters."""

    def __init__(self, mu: float, residual: float):
        super().__init__(
            f"inverse iteration at {mu!r} stalled with residual {residual:.3g}"
        )
        self.mu = mu
        self.residual = residual


def _readonly_sorted(values) -> np.ndarray:
    arr = np.sort(np.asarray(values, dtype=float).ravel())
    arr.setflags(write=False)
    return arr


@public
@attr.s(frozen=True, slots=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray = attr.ib(converter=_readonly_sorted)
    """Sorted, with multiplicities"""
    tol: float = attr.ib()
    """Every value lies within this distance of a true eigenvalue"""
    size: int = attr.ib()
    """Order of the matrix (or matrices) the values came from"""

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def distinct(self) -> Tuple[np.ndarray, np.ndarray]:
        """Values merged when closer than ``tol``, and their multiplicities."""
        values = self.eigenvalues
        if not len(values):
            return values, np.zeros(0, dtype=int)
        starts = np.flatnonzero(np.diff(values) > self.tol) + 1
        starts = np.concatenate(([0], starts))
        counts = np.diff(np.concatenate((starts, [len(values)])))
        return values[starts], counts


# region #### Inertia ################################################################


def _pivmin(M: HamiltonianMatrix) -> float:
    off = M.bands[1:]
    largest = float(np.max(off * off)) if off.size else 0.0
    if M.bc is PERIODIC and M.corner.size:
        largest = max(largest, float(np.max(M.corner * M.corner)))
    return TINY * max(1.0, largest)


def _check_pivot(p: np.ndarray, pivmin: float, bad: np.ndarray) -> np.ndarray:
    small = np.abs(p) <= pivmin
    bad |= small
    return np.where(small, -pivmin, p)


def _sturm_chain(diag: np.ndarray, off2: np.ndarray, pivmin, shifts: np.ndarray):
    """Row ``n`` of *diag* and *off2* broadcasts against *shifts*."""
    bad = np.zeros(shifts.shape, dtype=bool)
    p = _check_pivot(diag[0] - shifts, pivmin, bad)
    counts = (p < 0).astype(np.int64)
    for n in range(1, len(diag)):
        p = _check_pivot(diag[n] - shifts - off2[n - 1] / p, pivmin, bad)
        counts += p < 0
    return counts, bad


def _sturm_dirichlet(M: HamiltonianMatrix, shifts: np.ndarray):
    off = M.bands[1]
    return _sturm_chain(M.bands[0], off * off, _pivmin(M), shifts)


def _sturm_periodic(M: HamiltonianMatrix, shifts: np.ndarray):
    """Tridiagonal ring: rows ``1 .. L-1`` form a chain, row 0 borders it."""
    size = M.size
    diag, off = M.bands[0], M.bands[1]
    border = np.zeros(size)
    border[1] += off[0]
    border[size - 1] += M.corner[0, 0]
    pivmin = _pivmin(M)
    bad = np.zeros(shifts.shape, dtype=bool)
    schur = diag[0] - shifts
    p = _check_pivot(diag[1] - shifts, pivmin, bad)
    x = np.full(shifts.shape, border[1])
    counts = (p < 0).astype(np.int64)
    for n in range(2, size):
        ratio = off[n - 1] / p
        schur = schur - x * x / p
        x = border[n] - ratio * x
        p = _check_pivot(diag[n] - shifts - off[n - 1] * ratio, pivmin, bad)
        counts += p < 0
    schur = _check_pivot(schur - x * x / p, pivmin, bad)
    counts += schur < 0
    return counts, bad


def _border_coupling(M: HamiltonianMatrix) -> np.ndarray:
    """``coupling[r, s] = entry(r, s)`` for border rows ``s < w``."""
    w = M.bandwidth
    coupling = np.zeros((M.size, w))
    rows, cols, vals = M.coordinates()
    mask = (cols < w) & (rows >= w)
    np.add.at(coupling, (rows[mask], cols[mask]), vals[mask])
    return coupling


def _banded_inertia(M: HamiltonianMatrix, shifts: np.ndarray):
    """General bandwidth: elimination over a sliding ``(w+1)``-row window."""
    size, w = M.size, M.bandwidth
    bands = M.bands
    nb = w if M.bc is PERIODIC else 0
    m = w + 1 + nb
    pivmin = _pivmin(M)
    bad = np.zeros(shifts.shape, dtype=bool)
    counts = np.zeros(shifts.shape, dtype=np.int64)
    coupling = _border_coupling(M) if nb else None

    A = np.zeros(shifts.shape + (m, m))
    for a in range(w + 1):
        r = nb + a
        if r >= size:
            break
        A[..., a, a] = bands[0, r] - shifts
        for b in range(a):
            A[..., a, b] = A[..., b, a] = bands[a - b, nb + b]
        for s in range(nb):
            A[..., a, w + 1 + s] = A[..., w + 1 + s, a] = coupling[r, s]
    for s in range(nb):
        A[..., w + 1 + s, w + 1 + s] = bands[0, s] - shifts
        for t in range(s):
            coupled = bands[s - t, t]
            A[..., w + 1 + s, w + 1 + t] = A[..., w + 1 + t, w + 1 + s] = coupled

    for n in range(size - nb):
        p = _check_pivot(A[..., 0, 0], pivmin, bad)
        counts += p < 0
        v = A[..., 1:, 0]
        B = A[..., 1:, 1:] - v[..., :, None] * v[..., None, :] / p[..., None, None]
        A = np.zeros_like(A)
        A[..., :w, :w] = B[..., :w, :w]
        A[..., w + 1:, w + 1:] = B[..., w:, w:]
        A[..., :w, w + 1:] = B[..., :w, w:]
        A[..., w + 1:, :w] = B[..., w:, :w]
        r = nb + n + w + 1
        if r < size:
            A[..., w, w] = bands[0, r] - shifts
            for b in range(w):
                A[..., w, b] = A[..., b, w] = bands[w - b, r - w + b]
            for s in range(nb):
                A[..., w, w + 1 + s] = A[..., w + 1 + s, w] = coupling[r, s]

    C = A[..., w + 1:, w + 1:]
    for s in range(nb):
        p = _check_pivot(C[..., 0, 0], pivmin, bad)
        counts += p < 0
        v = C[..., 1:, 0]
        C = C[..., 1:, 1:] - v[..., :, None] * v[..., None, :] / p[..., None, None]
    return counts, bad


def _inertia(M: HamiltonianMatrix, shifts: np.ndarray):
    # a clamped pivot may overflow later terms; such energies are already flagged bad
    with np.errstate(over="ignore", invalid="ignore"):
        if M.bandwidth == 1:
            if M.bc is PERIODIC:
                return _sturm_periodic(M, shifts)
            return _sturm_dirichlet(M, shifts)
        return _banded_inertia(M, shifts)


@public
def counts_below(M: HamiltonianMatrix, energies) -> np.ndarray:
    """Number of eigenvalues of *M* strictly below each energy.

    A zero pivot shifts the energy down by ``1e-13*(1+|E|)`` per retry.
    """
    energies = np.asarray(energies, dtype=float)
    counts, bad = _inertia(M, energies)
    offsets = BREAKDOWN_SHIFT * (1.0 + np.abs(energies))
    for attempt in range(1, MAX_RETRIES + 1):
        if not bad.any():
            break
        idx = np.nonzero(bad)
        debug.debug(
            "pivot breakdown at %d energies, retry %d", len(idx[0]), attempt
        )
        retry, still_bad = _inertia(M, energies[idx] - attempt * offsets[idx])
        counts[idx] = retry
        bad[idx] = still_bad
    if bad.any():
        first = np.flatnonzero(bad.ravel())[0]
        raise PivotBreakdown(
            float(energies.ravel()[first]), float(offsets.ravel()[first])
        )
    return counts


@public
def count_below(M: HamiltonianMatrix, E: float) -> int:
    return int(counts_below(M, np.array([E]))[0])


# endregion

# region #### Eigenvalues ############################################################


def _bisect(
    M: HamiltonianMatrix, lo: float, hi: float, first: int, last: int, tol: float
):
    index = np.arange(first, last)
    left = np.full(index.shape, lo)
    right = np.full(index.shape, hi)
    steps = max(1, math.ceil(math.log2((hi - lo) / tol)))
    for _ in range(steps):
        mid = 0.5 * (left + right)
        above = counts_below(M, mid) > index
        right = np.where(above, mid, right)
        left = np.where(above, left, mid)
    return 0.5 * (left + right)


def _lapack(M: HamiltonianMatrix, first: int, last: int) -> np.ndarray:
    select = (first, last - 1)
    if M.bc is PERIODIC:
        return linalg.eigvals_banded(
            M.folded_bands(), lower=True, select="i", select_range=select
        )
    if M.bandwidth == 1:
        return linalg.eigvalsh_tridiagonal(
            M.bands[0],
            M.bands[1, :-1],
            select="i",
            select_range=select,
            lapack_driver="stebz",
        )
    return linalg.eigvals_banded(M.bands, lower=True, select="i", select_range=select)


def _certified(
    M: HamiltonianMatrix, values: np.ndarray, first: int, tol: float
) -> bool:
    """Every value brackets its own index within ``tol``."""
    index = np.arange(first, first + len(values))
    below = counts_below(M, values - tol)
    above = counts_below(M, values + tol)
    return bool(np.all(below <= index) and np.all(above > index))


@public
def eigenvalues_in(
    M: HamiltonianMatrix,
    E_lo: float,
    E_hi: float,
    tol: float,
    *,
    backend: str = "native",
) -> np.ndarray:
    """All eigenvalues in ``[E_lo, E_hi)``, each within ``tol`` of the truth.

    The ``lapack`` backend asks LAPACK for the same index range and certifies
    every value against native counts, falling back to bisection on mismatch.
    """
    if not E_lo < E_hi:
        raise ValueError(f"empty interval [{E_lo!r}, {E_hi!r})")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    if backend not in BACKENDS:
        raise ValueError(f"Unknown backend {backend!r}")
    first, last = (int(c) for c in counts_below(M, np.array([E_lo, E_hi])))
    if first == last:
        return np.zeros(0)
    if backend == "lapack":
        values = np.sort(_lapack(M, first, last))
        if len(values) == last - first and _certified(M, values, first, tol):
            return values
        log.warning(
            "LAPACK eigenvalues in [%r, %r) failed certification; bisecting",
            E_lo,
            E_hi,
        )
    return _bisect(M, E_lo, E_hi, first, last, tol)


@public
def spectrum(M: HamiltonianMatrix, tol: float, *, backend: str = "native") -> Spectrum:
    """Full spectrum of *M*."""
    lo, hi = M.gershgorin()
    pad = 1.0 + tol
    values = eigenvalues_in(M, lo - pad, hi + pad, tol, backend=backend)
    return Spectrum(values, tol, M.size)


# endregion

# region #### Many matrices ##########################################################


def _stackable(matrices: Sequence[HamiltonianMatrix]) -> bool:
    """Open tridiagonal chains of one size share a single row sweep."""
    return bool(matrices) and all(
        M.bandwidth == 1 and M.bc is not PERIODIC and M.size == matrices[0].size
        for M in matrices
    )


class _Chains:
    """Open tridiagonal chains gathered column-wise, one column per query."""

    def __init__(self, matrices: Sequence[HamiltonianMatrix], owner: np.ndarray):
        self.matrices = matrices
        self.owner = owner
        diag = np.stack([M.bands[0] for M in matrices], axis=1)
        off = np.stack([M.bands[1] for M in matrices], axis=1)
        self.diag = diag[:, owner]
        self.off2 = (off * off)[:, owner]
        self.pivmin = np.array([_pivmin(M) for M in matrices])[owner]

    def counts(self, energies: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            counts, bad = _sturm_chain(self.diag, self.off2, self.pivmin, energies)
        for i in np.flatnonzero(bad):
            # the retry shifts of counts_below, one energy at a time
            counts[i] = count_below(self.matrices[self.owner[i]], float(energies[i]))
        return counts


@public
def counts_below_many(
    matrices: Sequence[HamiltonianMatrix], owner, energies
) -> np.ndarray:
    """``count_below(matrices[owner[i]], energies[i])`` for every ``i``."""
    energies = np.asarray(energies, dtype=float).ravel()
    owner = np.broadcast_to(np.asarray(owner, dtype=int), energies.shape)
    if _stackable(matrices):
        return _Chains(matrices, owner).counts(energies)
    counts = np.zeros(energies.shape, dtype=np.int64)
    for s, M in enumerate(matrices):
        mask = owner == s
        if mask.any():
            counts[mask] = counts_below(M, energies[mask])
    return counts


@public
def eigenvalues_in_many(
    matrices: Sequence[HamiltonianMatrix],
    windows: Sequence[Tuple[float, float]],
    tol: float,
    *,
    backend: str = "native",
) -> List[List[np.ndarray]]:
    """:func:`eigenvalues_in` for every matrix and every window.

    Empty windows find nothing.

    Open chains of one size are bisected together: each step is one sweep
    down the rows for every bracket of every matrix.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    if backend not in BACKENDS:
        raise ValueError(f"Unknown backend {backend!r}")
    found = [[np.zeros(0) for _ in windows] for _ in matrices]
    if backend != "native" or not _stackable(matrices):
        for s, M in enumerate(matrices):
            for w, (lo, hi) in enumerate(windows):
                if lo < hi:
                    found[s][w] = eigenvalues_in(M, lo, hi, tol, backend=backend)
        return found
    if not windows:
        return found
    lo = np.array([w[0] for w in windows], dtype=float)
    hi = np.array([w[1] for w in windows], dtype=float)
    count, width = len(matrices), len(windows)
    edges = np.tile(np.column_stack((lo, hi)).ravel(), count)
    owner = np.repeat(np.arange(count), 2 * width)
    bounds = counts_below_many(matrices, owner, edges).reshape(count * width, 2)
    first, last = bounds[:, 0], bounds[:, 1]
    # slot s*width + w holds window w of matrix s
    sizes = np.where(np.tile(lo < hi, count), last - first, 0)
    pairs = np.flatnonzero(sizes > 0)
    if not len(pairs):
        return found
    reps = sizes[pairs]
    pair = np.repeat(pairs, reps)
    starts = np.repeat(np.cumsum(reps) - reps, reps)
    index = first[pair] + np.arange(len(pair)) - starts
    window = pair % width
    left, right = lo[window], hi[window]
    chains = _Chains(matrices, pair // width)
    steps = max(1, math.ceil(math.log2(float(np.max(right - left)) / tol)))
    for _ in range(steps):
        mid = 0.5 * (left + right)
        above = chains.counts(mid) > index
        right = np.where(above, mid, right)
        left = np.where(above, left, mid)
    values = 0.5 * (left + right)
    for p, chunk in zip(pairs, np.split(values, np.cumsum(reps)[:-1])):
        found[p // width][p % width] = chunk
    debug.debug(
        "bisected %d eigenvalues of %d matrices in %d steps", len(values), count, steps
    )
    return found


@public
def cluster_sizes(
    matrices: Sequence[HamiltonianMatrix], owner, energies, tol: float
) -> np.ndarray:
    """Eigenvalues within the isolation radius of :func:`eigenvector` of each energy."""
    energies = np.asarray(energies, dtype=float).ravel()
    owner = np.broadcast_to(np.asarray(owner, dtype=int), energies.shape)
    radius = ISOLATION_FACTOR * tol
    both = np.concatenate((energies - radius, energies + radius))
    counts = counts_below_many(matrices, np.concatenate((owner, owner)), both)
    return counts[len(energies):] - counts[: len(energies)]


# endregion

# region #### Eigenvectors ###########################################################


def _solver(M: HamiltonianMatrix, sigma: float):
    if M.bc is PERIODIC:
        shifted = (M.to_sparse() - sigma * identity(M.size, format="csr")).tocsc()
        return splu(shifted).solve
    ab = M.full_bands()
    ab[M.bandwidth] -= sigma
    w = M.bandwidth
    return lambda rhs: linalg.solve_banded((w, w), ab, rhs)


def _factor(M: HamiltonianMatrix, mu: float, tol: float):
    sigma = mu
    for attempt in range(MAX_RETRIES + 1):
        try:
            solve = _solver(M, sigma)
            # solve_banded only notices singularity when it solves
            solve(np.ones(M.size))
            return solve
        except (linalg.LinAlgError, RuntimeError):
            sigma = mu + (attempt + 1) * 1e-3 * tol
            debug.debug("singular shift at %r, moving to %r", mu, sigma)
    raise PivotBreakdown(mu, 1e-3 * tol)


@public
def eigenvector(
    M: HamiltonianMatrix, mu: float, tol: float, *, check: bool = True
) -> np.ndarray:
    """Unit eigenvector for the isolated eigenvalue *mu*, by inverse iteration.

    The first entry of largest magnitude is made positive.
    """
    if check:
        radius = ISOLATION_FACTOR * tol
        inside = int(np.diff(counts_below(M, np.array([mu - radius, mu + radius])))[0])
        if inside == 0:
            raise ValueError(f"no eigenvalue within {radius:.3g} of {mu!r}")
        if inside > 1:
            raise ClusteredEigenvalueError(
                f"{inside} eigenvalues within {radius:.3g} of {mu!r}"
            )
    solve = _factor(M, mu, tol)
    x = np.random.default_rng(M.size).standard_normal(M.size)
    x /= np.linalg.norm(x)
    residual = np.inf
    for _ in range(MAX_ITERATIONS):
        y = solve(x)
        norm = np.linalg.norm(y)
        if not np.isfinite(norm) or norm == 0.0:
            break
        x = y / norm
        residual = float(np.linalg.norm(M.matvec(x) - mu * x))
        if residual <= RESIDUAL_FACTOR * tol:
            break
    if not residual <= RESIDUAL_FACTOR * tol:
        raise StalledIteration(mu, residual)
    largest = np.abs(x).max()
    lead = np.flatnonzero(np.abs(x) >= (1.0 - 1e-8) * largest)[0]
    return x if x[lead] > 0 else -x


# endregion
