# Copyright 2024 The sturmian Developers
# SPDX-License-Identifier: Apache-2.0

"""Quasiperiodic words from the cut-and-project scheme.

A window of letters ``xi_n = w_n - w_(n-1)`` is read off the pattern::

    w_n = n*l0 + gamma*(phi_n - chi(phi_n - theta)),    phi_n = {phi + n*theta}

where ``chi`` is the step function.  Three kinds of intercept are supported:

* Sturmian words, the plain pattern at a non-singular ``phi``;
* smoothed words, with ``chi`` replaced by ``(1 + tanh(t/eps))/2``;
* augmented words, where a singular intercept ``phi = {k*theta}`` gets its
  flipped pair ``ab`` replaced by the interpolated pair ``b_t a_t``.

Periodic approximants (``theta = p/q``) compute their phases in integer
arithmetic, so singular intercepts are hit exactly.
"""

import csv
import logging
import math
from fractions import Fraction
from functools import partial
from pathlib import Path
from typing import (
    Callable,
    Iterator,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import attr
import numpy as np
from public import public

SINGULAR_TOL = 1e-12
DELTA_LIMIT_FACTOR = 1e-9
Q_GUARD = 10**6
RATIONAL_TOL = 1e-15

FIB_THETA = (3 - math.sqrt(5)) / 2
"""Inverse square of the golden ratio, the slope of the Fibonacci word"""

KINDS = ("sturmian", "smoothed", "augmented")

_GOLDEN_LITERALS = frozenset(
    {"fib", "fibonacci", "golden", "(3-sqrt5)/2", "(3-sqrt(5))/2"}
)

log = logging.getLogger("sturmian.log")

Window = Tuple[int, int]


@public
class SingularInterceptError(ValueError):
    """The intercept sits on a discontinuity of the pattern inside the window."""

    def __init__(self, index: int, phi: float):
        super().__init__(
            f"phi={phi!r} is singular at n={index}; "
            f"use an augmented word or one_sided_limits()"
        )
        self.index = index
        self.phi = phi


@public
class WindowError(ValueError):
    pass


# region #### Numbers ################################################################


@public
def frac(r):
    """Fractional part ``r - floor(r)``, in ``[0, 1)``.  Accepts arrays."""
    arr = np.asarray(r, dtype=float)
    out = arr - np.floor(arr)
    # -1e-17 - floor(-1e-17) rounds to 1.0
    out = np.where(out >= 1.0, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def _circle_distance(x: np.ndarray) -> np.ndarray:
    x = frac(x)
    return np.minimum(x, 1.0 - x)


@public
class Approximant(NamedTuple):
    p: int
    q: int
    rational: bool = False
    """True when theta itself is p/q, i.e. the input was rational"""


def _partial_quotients(value: Fraction) -> Iterator[int]:
    num, den = value.numerator, value.denominator
    while den:
        quotient, rem = divmod(num, den)
        yield quotient
        num, den = den, rem


@public
def convergents(theta: float) -> Iterator[Tuple[int, int]]:
    """Continued-fraction convergents ``(p, q)`` of the binary value of *theta*."""
    p_prev, p = 0, 1
    q_prev, q = 1, 0
    for quotient in _partial_quotients(Fraction(theta)):
        p_prev, p = p, quotient * p + p_prev
        q_prev, q = q, quotient * q + q_prev
        yield p, q


@public
def continued_fraction_approximant(theta: float, q_max: int) -> Approximant:
    """Convergent of *theta* with the largest denominator ``q <= q_max``.

    If *theta* equals one of the convergents up to rounding, that exact
    fraction is returned with ``rational=True``.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta!r}")
    if q_max < 1:
        raise ValueError(f"q_max must be positive, got {q_max!r}")
    best = Approximant(0, 1)
    for p, q in convergents(theta):
        if q > q_max:
            break
        if abs(theta - p / q) <= RATIONAL_TOL:
            return Approximant(p, q, rational=True)
        best = Approximant(p, q)
    return best


@public
def parse_theta(text: Union[str, float]) -> float:
    """Read a slope literal: ``fib``, ``(3-sqrt5)/2``, a decimal or ``p/q``."""
    literal = str(text).strip().lower().replace(" ", "")
    if literal in _GOLDEN_LITERALS:
        return FIB_THETA
    try:
        if "/" in literal:
            num, _, den = literal.partition("/")
            value = int(num) / int(den)
        else:
            value = float(literal)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"Not a slope literal: {text!r}") from None
    if not 0.0 < value < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {text!r}")
    return value


# endregion

# region #### Parameters #############################################################


def _positive(instance, attribute, value):
    if not value > 0:
        raise ValueError(f"{attribute.name} must be positive, got {value!r}")


@public
@attr.s(frozen=True, slots=True)
class CutProjectParams:
    theta: float = attr.ib(converter=float)
    """Slope of the cut line, in (0, 1)"""
    gamma: float = attr.ib(default=1.0, converter=float, validator=_positive)
    """Projection scale; the two letters differ by exactly gamma"""
    l0: float = attr.ib(default=1.0, converter=float)
    """Mean letter length"""
    approximant: Optional[Approximant] = attr.ib(default=None, kw_only=True)
    """Exact ``(p, q)`` when theta is the periodic approximant p/q"""
    source_theta: Optional[float] = attr.ib(default=None, kw_only=True)
    """The irrational slope an approximant was derived from"""
    q_guard: int = attr.ib(default=Q_GUARD, kw_only=True)
    rational: bool = attr.ib(init=False)

    @theta.validator
    def _check_theta(self, attribute, value):
        if not 0.0 < value < 1.0:
            raise ValueError(f"theta must lie in (0, 1), got {value!r}")

    @approximant.validator
    def _check_approximant(self, attribute, value):
        if value is not None and self.theta != value.p / value.q:
            raise ValueError(f"theta={self.theta!r} is not {value.p}/{value.q}")

    @rational.default
    def _rational(self) -> bool:
        if self.approximant is not None:
            return True
        if not 0.0 < self.theta < 1.0:
            return False
        return continued_fraction_approximant(self.theta, self.q_guard).rational

    def __attrs_post_init__(self):
        if self.rational and self.approximant is None:
            log.warning(
                "theta=%r is rational with denominator <= %d; "
                "minimality of the subshift does not hold",
                self.theta,
                self.q_guard,
            )

    @classmethod
    def periodic(
        cls, theta: float, q_max: int, gamma: float = 1.0, l0: float = 1.0
    ) -> "CutProjectParams":
        """Parameters of the periodic approximant of *theta* with ``q <= q_max``."""
        approx = continued_fraction_approximant(theta, q_max)
        return cls(
            approx.p / approx.q,
            gamma,
            l0,
            approximant=approx,
            source_theta=theta,
        )

    @property
    def a(self) -> float:
        return self.l0 + self.gamma * (self.theta - 1.0)

    @property
    def b(self) -> float:
        return self.l0 + self.gamma * self.theta

    @property
    def label_theta(self) -> float:
        """Slope used for gap labels: the irrational one behind an approximant."""
        return self.theta if self.source_theta is None else self.source_theta

    @property
    def period(self) -> Optional[int]:
        return None if self.approximant is None else self.approximant.q


@public
@attr.s(frozen=True, slots=True)
class Sturmian:
    phi: float = attr.ib(converter=float)


@public
@attr.s(frozen=True, slots=True)
class Augmented:
    k: int = attr.ib(converter=int)
    """Index of the singular intercept ``phi = {k*theta}``"""
    t: float = attr.ib(converter=float)

    @t.validator
    def _check_t(self, attribute, value):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"t must lie in [0, 1], got {value!r}")


@public
@attr.s(frozen=True, slots=True)
class Smoothed:
    phi: float = attr.ib(converter=float)
    epsilon: float = attr.ib(converter=float, validator=_positive)


Kind = Union[Sturmian, Augmented, Smoothed]


def _window(value) -> Window:
    n0, n1 = (int(n) for n in value)
    if n0 > n1:
        raise ValueError(f"Empty window [{n0}, {n1}]")
    return n0, n1


@public
@attr.s(frozen=True, slots=True)
class SequenceSpec:
    params: CutProjectParams = attr.ib()
    kind: Kind = attr.ib(
        validator=attr.validators.instance_of((Sturmian, Augmented, Smoothed))
    )
    window: Window = attr.ib(converter=_window)


# endregion

# region #### Words ##################################################################


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError("letters must be one-dimensional")
    arr.setflags(write=False)
    return arr


@public
@attr.s(frozen=True, slots=True, eq=False)
class Word:
    letters: np.ndarray = attr.ib(converter=_readonly)
    offset: int = attr.ib(default=0, converter=int)
    """Sequence index of ``letters[0]``"""
    period: Optional[int] = attr.ib(default=None, kw_only=True)
    """Period of the underlying sequence, for words cut from an approximant"""

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def window(self) -> Window:
        return self.offset, self.offset + len(self.letters) - 1

    def indices(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + len(self.letters))

    def at(self, n: int) -> float:
        return float(self.letters[n - self.offset])

    def equals(self, other: "Word") -> bool:
        return self.offset == other.offset and np.array_equal(
            self.letters, other.letters
        )

    def shifted(self, shift: int) -> "Word":
        """Cyclic shift: ``new[n] = old[n + shift]`` with indices taken mod length."""
        return Word(np.roll(self.letters, -shift), self.offset, period=self.period)

    def reversed(self) -> "Word":
        return Word(self.letters[::-1], self.offset, period=self.period)

    def symbols(self, params: CutProjectParams) -> np.ndarray:
        """Two-letter pattern, 1 where the letter is ``b``."""
        return (self.letters > 0.5 * (params.a + params.b)).astype(np.int8)

    def to_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as fp:
            writer = csv.writer(fp)
            writer.writerow(("index", "letter"))
            for n, letter in zip(self.indices(), self.letters):
                writer.writerow((int(n), repr(float(letter))))

    @classmethod
    def from_csv(cls, path: Path) -> "Word":
        with open(path, newline="") as fp:
            rows = list(csv.DictReader(fp))
        if not rows:
            raise WindowError(f"{path} holds no letters")
        indices = [int(row["index"]) for row in rows]
        if indices != list(range(indices[0], indices[0] + len(indices))):
            raise WindowError(f"{path} does not hold a contiguous window")
        return cls([float(row["letter"]) for row in rows], indices[0])


def _step(x: np.ndarray) -> np.ndarray:
    return (x >= 0.0).astype(float)


def _smooth_step(x: np.ndarray, epsilon: float) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(x / epsilon))


def _phases(
    params: CutProjectParams,
    n: np.ndarray,
    *,
    phi: Optional[float] = None,
    k: Optional[int] = None,
) -> np.ndarray:
    """``{phi + n*theta}``, or ``{(k + n)*theta}`` when *k* is given."""
    approx = params.approximant
    if k is None:
        if approx is not None:
            steps = (n * approx.p) % approx.q / approx.q
        else:
            steps = n * params.theta
        return frac(phi + steps)
    if approx is not None:
        return (k + n) * approx.p % approx.q / approx.q
    return frac((k + n) * params.theta)


def _letters(
    params: CutProjectParams,
    phases: np.ndarray,
    chi: Callable[[np.ndarray], np.ndarray],
) -> np.ndarray:
    """Letters ``w_n - w_(n-1)`` for ``phases = phi_(n0-1) ... phi_(n1)``."""
    prev, cur = phases[:-1], phases[1:]
    # phi_n - phi_(n-1) = theta - wrap
    wrap = (cur < prev).astype(float)
    theta = params.theta
    jumps = -wrap - chi(cur - theta) + chi(prev - theta)
    return params.l0 + params.gamma * (theta + jumps)


def _singular(params: CutProjectParams, phases: np.ndarray) -> np.ndarray:
    close = (_circle_distance(phases - params.theta) < SINGULAR_TOL) | (
        _circle_distance(phases) < SINGULAR_TOL
    )
    return np.flatnonzero(close)


def _period_for(params: CutProjectParams, length: int) -> Optional[int]:
    period = params.period
    if period is not None and length % period == 0:
        return period
    return None


@public
class OneSidedLimits(NamedTuple):
    minus: Word
    """Limit as phi increases to the singular value"""
    plus: Word
    """Limit as phi decreases to the singular value"""
    flip: int
    """Sequence index of the first letter of the flipped pair"""
    inside: bool
    """Both letters of the flipped pair lie in the window"""

    def interpolate(self, t: float) -> Word:
        """Elementwise ``(1 - t)*minus + t*plus``; unflipped letters are kept as-is."""
        lo, hi = self.minus.letters, self.plus.letters
        mixed = np.where(lo == hi, lo, (1.0 - t) * lo + t * hi)
        return Word(mixed, self.minus.offset, period=self.minus.period)


def _lattice_gap(params: CutProjectParams, phases: np.ndarray) -> float:
    distances = np.concatenate(
        (_circle_distance(phases - params.theta), _circle_distance(phases))
    )
    distances = distances[distances > SINGULAR_TOL]
    if distances.size == 0:
        return 0.5
    return float(distances.min())


@public
def one_sided_limits(
    params: CutProjectParams, k: int, window: Window
) -> OneSidedLimits:
    """The two Sturmian words adjacent to the singular intercept ``{k*theta}``."""
    n0, n1 = _window(window)
    n = np.arange(n0 - 1, n1 + 1)
    base = _phases(params, n, k=k)
    delta = DELTA_LIMIT_FACTOR * _lattice_gap(params, base)
    period = _period_for(params, n1 - n0 + 1)
    minus = Word(_letters(params, frac(base - delta), _step), n0, period=period)
    plus = Word(_letters(params, frac(base + delta), _step), n0, period=period)
    flip = 1 - k
    if params.period is not None:
        flip = n0 + (flip - n0) % params.period
    inside = n0 <= flip and flip + 1 <= n1
    if not inside:
        log.debug("flip of k=%d at n=%d lies outside [%d, %d]", k, flip, n0, n1)
    return OneSidedLimits(minus, plus, flip, inside)


@public
def generate_word(spec: SequenceSpec) -> Word:
    params, kind = spec.params, spec.kind
    n0, n1 = spec.window
    if isinstance(kind, Augmented):
        return one_sided_limits(params, kind.k, spec.window).interpolate(kind.t)
    n = np.arange(n0 - 1, n1 + 1)
    phases = _phases(params, n, phi=kind.phi)
    if isinstance(kind, Smoothed):
        chi = partial(_smooth_step, epsilon=kind.epsilon)
    else:
        bad = _singular(params, phases)
        if bad.size:
            raise SingularInterceptError(int(n[bad[0]]), kind.phi)
        chi = _step
    period = _period_for(params, n1 - n0 + 1)
    return Word(_letters(params, phases, chi), n0, period=period)


@public
def word_complexity(word: Word, n: int) -> int:
    """Number of distinct factors of length *n* in *word* (exact letter equality)."""
    if not 1 <= n <= len(word):
        raise WindowError(f"factor length {n} outside [1, {len(word)}]")
    _, codes = np.unique(word.letters, return_inverse=True)
    factors = np.lib.stride_tricks.sliding_window_view(codes.ravel(), n)
    return int(np.unique(factors, axis=0).shape[0])


# endregion

# region #### Metrics ################################################################


def _common_half_width(words: Sequence[Word]) -> int:
    half = min(min(-w.window[0], w.window[1]) for w in words)
    if half < 0:
        raise WindowError("words do not share a window around index 0")
    return half


def _centered(word: Word, half: int) -> np.ndarray:
    start = -half - word.offset
    return word.letters[start:start + 2 * half + 1]


def _metric_from_differences(diff: np.ndarray) -> np.ndarray:
    """Metric value for each row of letter differences over ``-K..K``."""
    half = (diff.shape[-1] - 1) // 2
    mag = np.abs(diff)
    # worst difference over |j| <= k, for k = 0..K
    sym = np.maximum(mag[..., half:], mag[..., half::-1])
    worst = np.maximum.accumulate(sym, axis=-1)
    k = np.arange(half + 1)
    # eps in (1/(k+1), 1/k] constrains exactly the indices |j| <= k
    lower = 1.0 / (k + 1)
    upper = np.full(half + 1, np.inf)
    upper[1:] = 1.0 / k[1:]
    candidates = np.maximum(worst, lower)
    candidates = np.where(candidates <= upper, candidates, np.inf)
    return candidates.min(axis=-1)


@public
def sequence_metric(x: Word, y: Word) -> float:
    """Subshift distance of two words on their common symmetric window.

    The window caps resolution: identical words are at distance
    ``1/(K + 1)`` for a common half-width ``K``.
    """
    half = _common_half_width((x, y))
    diff = _centered(x, half) - _centered(y, half)
    return float(_metric_from_differences(diff))


@public
def sequence_metric_many(x: Word, ys: Sequence[Word]) -> np.ndarray:
    """:func:`sequence_metric` from *x* to every word in *ys*."""
    half = _common_half_width((x, *ys))
    rows = np.stack([_centered(y, half) for y in ys])
    return _metric_from_differences(_centered(x, half) - rows)


def _directed_real(a: np.ndarray, b: np.ndarray) -> float:
    idx = np.searchsorted(b, a)
    left = b[np.clip(idx - 1, 0, len(b) - 1)]
    right = b[np.clip(idx, 0, len(b) - 1)]
    return float(np.max(np.minimum(np.abs(a - left), np.abs(a - right))))


@public
def hausdorff_distance(
    A: Sequence,
    B: Sequence,
    dist: Optional[Callable] = None,
    *,
    pairwise: Optional[Callable] = None,
) -> float:
    """Hausdorff distance of two finite sets.

    Without *dist* the points are reals under ``|a - b|``.  *pairwise*, if
    given, maps one point and a whole set to the array of distances.
    """
    if len(A) == 0 or len(B) == 0:
        raise WindowError("Hausdorff distance of an empty set")
    if dist is None and pairwise is None:
        a = np.sort(np.asarray(A, dtype=float).ravel())
        b = np.sort(np.asarray(B, dtype=float).ravel())
        return max(_directed_real(a, b), _directed_real(b, a))
    if pairwise is None:

        def pairwise(point, points):
            return np.array([dist(point, other) for other in points])

    forward = max(float(np.min(pairwise(a, B))) for a in A)
    backward = max(float(np.min(pairwise(b, A))) for b in B)
    return max(forward, backward)


@public
def sample_subshift(
    params: CutProjectParams,
    kind: str,
    half_width: int,
    count: int,
    *,
    epsilon: Optional[float] = None,
    t_count: int = 11,
) -> List[Word]:
    """Sample words of a subshift on the window ``[-half_width, half_width]``.

    Intercepts are ``(j + 1/2)/count``; the augmented sample adds, for every
    flip touching the window, the words at ``t_count`` evenly spaced ``t``.
    """
    if kind not in KINDS:
        raise ValueError(f"Unknown subshift kind {kind!r}")
    window = (-half_width, half_width)
    phis = (np.arange(count) + 0.5) / count
    words: List[Word] = []
    for phi in phis:
        if kind == "smoothed":
            spec = SequenceSpec(params, Smoothed(phi, epsilon), window)
        else:
            spec = SequenceSpec(params, Sturmian(phi), window)
        try:
            words.append(generate_word(spec))
        except SingularInterceptError:
            continue
    if kind == "augmented":
        ts = np.linspace(0.0, 1.0, t_count)
        for k in range(1 - half_width, 3 + half_width):
            limits = one_sided_limits(params, k, window)
            words.extend(limits.interpolate(t) for t in ts)
    return words


# endregion

# region #### Families ###############################################################


@public
class SweepParam(NamedTuple):
    kind: str
    """``phi`` for an intercept, ``t`` for a point on an inserted flip interval"""
    value: float
    k: Optional[int] = None


@public
@attr.s(frozen=True, slots=True)
class SequenceFamily:
    """All words of one model over a periodic approximant, by sweep parameter."""

    params: CutProjectParams = attr.ib()
    kind: str = attr.ib(default="sturmian", validator=attr.validators.in_(KINDS))
    epsilon: Optional[float] = attr.ib(default=None)
    phi0: Optional[float] = attr.ib(default=None)

    @params.validator
    def _check_params(self, attribute, value):
        if value.approximant is None:
            raise ValueError("families are built over a periodic approximant")

    @epsilon.validator
    def _check_epsilon(self, attribute, value):
        if self.kind == "smoothed" and (value is None or not value > 0):
            raise ValueError("smoothed families need epsilon > 0")

    @property
    def q(self) -> int:
        return self.params.approximant.q

    @property
    def base_phi(self) -> float:
        """Default intercept, halfway between two singular values."""
        return 0.5 / self.q if self.phi0 is None else self.phi0

    def window(self, length: Optional[int] = None) -> Window:
        return 0, (self.q if length is None else length) - 1

    def word(self, param: SweepParam, window: Optional[Window] = None) -> Word:
        window = self.window() if window is None else window
        if param.kind == "t":
            limits = one_sided_limits(self.params, param.k, window)
            return limits.interpolate(param.value)
        if self.kind == "smoothed":
            kind: Kind = Smoothed(param.value, self.epsilon)
        else:
            kind = Sturmian(param.value)
        return generate_word(SequenceSpec(self.params, kind, window))

    def base_param(self) -> SweepParam:
        return SweepParam("phi", self.base_phi)

    def singular_index(self, j: int) -> int:
        """``k`` with ``{k*p/q} = j/q``."""
        approx = self.params.approximant
        return j * pow(approx.p, -1, approx.q) % approx.q

    def bulk_grid(self, grid: int) -> List[SweepParam]:
        """Parameters whose periodic spectra make up the bulk spectrum."""
        if grid < 1:
            return []
        if self.kind == "sturmian":
            return [self.base_param()]
        if self.kind == "smoothed":
            return [SweepParam("phi", j / grid) for j in range(grid)]
        if grid == 1:
            return [SweepParam("t", 0.0, 0)]
        return [SweepParam("t", j / (grid - 1), 0) for j in range(grid)]

    def flip_site(self, k: int) -> int:
        """Window position of the first letter of the pair flipped at ``{k*theta}``."""
        return (1 - k) % self.q

    def sweep(self, grid: int) -> List[SweepParam]:
        """One phason cycle in the order of increasing ``phi``.

        Augmented cycles visit every singular value ``j/q`` and then take one
        sample of the arc up to the next.  Flips in the left quarter of the
        window, and the one joining its two ends, get a ``t`` sub-sweep
        ``1/grid ... 1``; the rest only swap letters far from the left edge
        and are stepped over.
        """
        if self.kind == "sturmian":
            raise ValueError(
                "Sturmian spectral flow lines are discontinuous; "
                "there is no winding number to sweep for"
            )
        if grid < 1:
            raise ValueError(f"grid must be positive, got {grid!r}")
        if self.kind == "smoothed":
            return [SweepParam("phi", j / grid) for j in range(grid)]
        edge = math.ceil(self.q / 4)
        params: List[SweepParam] = []
        for j in range(self.q):
            k = self.singular_index(j)
            site = self.flip_site(k)
            if site < edge or site == self.q - 1:
                params.extend(SweepParam("t", i / grid, k) for i in range(1, grid + 1))
            params.append(SweepParam("phi", (j + 0.5) / self.q))
        return params

    def midpoint(self, a: SweepParam, b: SweepParam) -> Optional[SweepParam]:
        """Parameter halfway between consecutive sweep samples, if one exists."""
        if a.kind == "phi" and b.kind == "phi":
            if self.kind == "smoothed":
                hi = b.value if b.value > a.value else b.value + 1.0
                return SweepParam("phi", frac(0.5 * (a.value + hi)))
            if self.kind == "sturmian":
                return None
            # neighbouring arcs around a flip the sweep stepped over
            j = round(b.value * self.q - 0.5)
            arc = (j + 0.5) / self.q
            before = frac(arc - 1.0 / self.q)
            if not (math.isclose(b.value, arc) and math.isclose(a.value, before)):
                return None
            return SweepParam("t", 0.5, self.singular_index(j % self.q))
        if a.kind == "t" and b.kind == "t":
            if a.k != b.k:
                return None
            return SweepParam("t", 0.5 * (a.value + b.value), a.k)
        if a.kind == "phi":
            # the arc before a flip carries the t = 0 word
            return SweepParam("t", 0.5 * b.value, b.k)
        if a.value < 1.0:
            return SweepParam("t", 0.5 * (a.value + 1.0), a.k)
        return None


# endregion
