"""Classical open baker's maps on the torus and their thermodynamics.

The phase space is the unit torus, coordinates (x, xi).  A D-symbol baker
map is built from a partition 0 = x_0 < x_1 < ... < x_D = 1 into vertical
Markov rectangles R_i = [x_i, x_{i+1}) x [0, 1) of widths ell_i.  On R_i
the map acts by

    (x, xi)  |->  ((x - x_i) / ell_i,  ell_i * xi + x_i),

stretching horizontally by 1/ell_i and squeezing vertically by ell_i.  The
map is opened by declaring a subset of the rectangles a "hole": orbits
entering a removed rectangle escape and are never iterated again.

Everything about the long-time structure of the open map is encoded in
symbolic dynamics on the kept alphabet.  Points surviving n forward steps
form |keep|^n vertical strips labelled by admissible words; as n grows
these strips converge to Can x [0,1), the incoming tail K-.  Backward
survivors give the outgoing tail K+ = [0,1) x Can, and the trapped set is
the product Can x Can of two Cantor sets.

The thermodynamic quantities used by the spectral bounds all reduce to the
one closed form

    P(-s phi+) = log sum_{i in keep} ell_i^s,

the topological pressure of the full shift with unstable Jacobian weight
phi+ = log(1/ell_i).  Its root in s is the Cantor-set dimension exponent
nu, its value at s=0 is the topological entropy, at s=1 it gives (minus)
the classical escape rate gamma_cl, and at s=1/2 the spectral-gap
constant.  A Perron-Frobenius route through the weighted transition
matrix is implemented alongside as an independent cross-check.

Arithmetic is deliberately dual: set-level quantities (volumes, interval
covers) are computed in exact rational arithmetic via ``fractions``, while
pressure and root-finding use floats.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from math import log
from typing import Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    EmptyOrFullKeepSet,
    EndpointMismatch,
    HorizonTooLarge,
    NonMonotonePartition,
    OutOfDomain,
    PowerIterationDivergence,
)

__all__ = [
    "BakerSpec",
    "Word",
    "EscapeReport",
    "TrappedCover",
    "PressureReport",
    "validate_spec",
    "symmetric_spec",
    "spec_digest",
    "step",
    "escape_time",
    "escape_report",
    "admissible_words",
    "word_interval",
    "trapped_cover",
    "pressure",
    "cantor_dimension",
    "thermo_report",
]

Rational = Union[Fraction, int, str]
Interval = Tuple[Fraction, Fraction]

# Hard cap on how many cover intervals any operation may enumerate.
INTERVAL_GUARD = 10**7


# ---------------------------------------------------------------------------
# specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BakerSpec:
    """A validated open baker's map: partition points plus kept rectangles.

    Construct through :func:`validate_spec` (or :func:`symmetric_spec`);
    the constructor itself re-checks the invariants so an invalid spec
    cannot exist.
    """

    partition: Tuple[Fraction, ...]
    keep: Tuple[int, ...]

    def __post_init__(self):
        pts = self.partition
        if len(pts) < 3:
            # D >= 2 is forced: with a single rectangle the keep set
            # cannot be both nonempty and proper.
            raise EmptyOrFullKeepSet("need at least 2 rectangles to open a map")
        if pts[0] != 0 or pts[-1] != 1:
            raise EndpointMismatch(f"partition must span [0,1], got {pts[0]}..{pts[-1]}")
        if any(a >= b for a, b in zip(pts, pts[1:])):
            raise NonMonotonePartition(f"partition not strictly increasing: {pts}")
        D = len(pts) - 1
        ks = self.keep
        if len(ks) == 0 or len(ks) >= D:
            raise EmptyOrFullKeepSet(f"keep set must be nonempty and proper, got {ks}")
        if list(ks) != sorted(set(ks)) or ks[0] < 0 or ks[-1] >= D:
            raise EmptyOrFullKeepSet(f"keep indices must be distinct, sorted, in 0..{D-1}")

    @property
    def branch_count(self) -> int:
        """D, the number of Markov rectangles."""
        return len(self.partition) - 1

    @property
    def lengths(self) -> Tuple[Fraction, ...]:
        """Rectangle widths ell_i = x_{i+1} - x_i (exact)."""
        return tuple(b - a for a, b in zip(self.partition, self.partition[1:]))

    @property
    def kept_lengths(self) -> Tuple[Fraction, ...]:
        return tuple(self.lengths[i] for i in self.keep)

    @property
    def survival_fraction(self) -> Fraction:
        """Lebesgue measure surviving one step, sum of kept widths."""
        return sum(self.kept_lengths, Fraction(0))

    def symmetric(self) -> bool:
        """True iff all rectangles have equal width 1/D."""
        D = self.branch_count
        return all(l == Fraction(1, D) for l in self.lengths)

    def reflection_symmetric(self) -> bool:
        """True iff both partition widths and keep set are invariant
        under the relabeling i -> D-1-i (needed for parity splitting)."""
        D = self.branch_count
        ls = self.lengths
        widths_ok = all(ls[i] == ls[D - 1 - i] for i in range(D))
        keep_ok = sorted(D - 1 - i for i in self.keep) == list(self.keep)
        return widths_ok and keep_ok


def _as_fraction(value: Rational) -> Fraction:
    if isinstance(value, float):
        # Exactness is part of the contract; a float would smuggle in
        # binary rounding. Callers must pass "1/3", Fraction, or ints.
        raise TypeError(f"partition points must be exact rationals, got float {value!r}")
    return Fraction(value)


def validate_spec(partition: Sequence[Rational], keep: Sequence[int]) -> BakerSpec:
    """Check and normalize raw inputs into a :class:`BakerSpec`.

    Raises NonMonotonePartition, EmptyOrFullKeepSet, or EndpointMismatch.
    """
    pts = tuple(_as_fraction(p) for p in partition)
    ks = tuple(sorted(int(i) for i in set(keep)))
    return BakerSpec(partition=pts, keep=ks)


def symmetric_spec(D: int, keep: Sequence[int]) -> BakerSpec:
    """The D-symbol baker with equal widths 1/D and the given hole."""
    return validate_spec([Fraction(i, D) for i in range(D + 1)], keep)


def spec_digest(spec: BakerSpec) -> str:
    """Deterministic short hash identifying the spec (for provenance)."""
    canon = ";".join(f"{p.numerator}/{p.denominator}" for p in spec.partition)
    canon += "|" + ",".join(str(i) for i in spec.keep)
    return hashlib.sha256(canon.encode("ascii")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# pointwise dynamics
# ---------------------------------------------------------------------------

def _rectangle_of(spec: BakerSpec, coord) -> int:
    """Index i with coord in [x_i, x_{i+1}); membership is half-open so
    every point of [0,1) belongs to exactly one rectangle."""
    for i in range(spec.branch_count):
        if coord < spec.partition[i + 1]:
            return i
    # coord < 1 is checked by the caller, so this is unreachable
    raise AssertionError("coordinate escaped the partition scan")


def step(spec: BakerSpec, point, direction: str = "forward"):
    """One step of the open baker map; None means the point escaped.

    ``point`` is an (x, xi) pair of floats or of Fractions; the output
    keeps the arithmetic of the input (exact in, exact out).  Forward
    steps are keyed on x's rectangle, backward steps on xi's rectangle,
    because the inverse map contracts horizontally exactly where the
    forward map expanded.
    """
    x, xi = point
    if not (0 <= x < 1 and 0 <= xi < 1):
        raise OutOfDomain(f"point {point} outside [0,1)^2")
    if direction == "forward":
        i = _rectangle_of(spec, x)
        if i not in spec.keep:
            return None
        ell = spec.lengths[i]
        return ((x - spec.partition[i]) / ell, ell * xi + spec.partition[i])
    if direction == "backward":
        i = _rectangle_of(spec, xi)
        if i not in spec.keep:
            return None
        ell = spec.lengths[i]
        return (ell * x + spec.partition[i], (xi - spec.partition[i]) / ell)
    raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")


def escape_time(spec: BakerSpec, point, horizon: int) -> Optional[int]:
    """Number of completed steps before the forward orbit enters the hole.

    A point already sitting in a removed rectangle has escape time 0 (it
    escapes before completing any step).  Returns None if the orbit is
    still alive after ``horizon`` steps.
    """
    current = point
    for t in range(horizon):
        x = current[0]
        if _rectangle_of(spec, x) not in spec.keep:
            return t
        current = step(spec, current, "forward")
    return None


# ---------------------------------------------------------------------------
# symbolic dynamics: words, covers, escape sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Word:
    """An admissible symbol sequence over the kept alphabet.

    ``direction`` records which itinerary the word describes: "forward"
    for x (future symbols), "backward" for xi (past symbols).  The
    distinction is bookkeeping only; both itineraries generate the same
    nested-interval geometry because the inverse baker acts on xi exactly
    as the forward baker acts on x.
    """

    symbols: Tuple[int, ...]
    direction: str = "forward"

    def __post_init__(self):
        if self.direction not in ("forward", "backward"):
            raise ValueError(f"bad direction {self.direction!r}")

    def __len__(self) -> int:
        return len(self.symbols)


def word_interval(spec: BakerSpec, word: Word) -> Interval:
    """The half-open interval of coordinates sharing this itinerary.

    Built by nesting: I_(s w) = x_s + ell_s * I_w.  Exact rationals.
    """
    for s in word.symbols:
        if s not in spec.keep:
            raise ValueError(f"symbol {s} not in keep set {spec.keep}")
    lo, width = Fraction(0), Fraction(1)
    for s in word.symbols:
        lo = lo + width * spec.partition[s]
        width = width * spec.lengths[s]
    return (lo, lo + width)


def admissible_words(spec: BakerSpec, length: int,
                     direction: str = "forward") -> Iterator[Word]:
    """All |keep|^length admissible words, lexicographic in kept symbols."""
    if length < 0:
        raise ValueError("word length must be >= 0")
    def rec(prefix):
        if len(prefix) == length:
            yield Word(tuple(prefix), direction)
            return
        for s in spec.keep:
            prefix.append(s)
            yield from rec(prefix)
            prefix.pop()
    return rec([])


def _refine_intervals(spec: BakerSpec, intervals: Sequence[Interval]) -> list:
    """One symbolic refinement: map each interval I to x_s + ell_s * I
    for every kept symbol s.  Preserves exactness and sorted order."""
    out = []
    for s in spec.keep:
        x_s, ell_s = spec.partition[s], spec.lengths[s]
        for lo, hi in intervals:
            out.append((x_s + ell_s * lo, x_s + ell_s * hi))
    out.sort()
    return out


def _level_intervals(spec: BakerSpec, level: int) -> list:
    """Level-m cover of the Cantor set: sorted admissible-word intervals."""
    count = len(spec.keep) ** level
    if count > INTERVAL_GUARD:
        raise HorizonTooLarge(
            f"level {level} needs {count} intervals (guard {INTERVAL_GUARD})")
    intervals = [(Fraction(0), Fraction(1))]
    for _ in range(level):
        intervals = _refine_intervals(spec, intervals)
    return intervals


@dataclass(frozen=True)
class EscapeReport:
    """Exact accounting of who has escaped by each time up to the horizon.

    ``escaped_volumes[m-1]`` is Vol(D_m), the measure of points with
    escape time < m; with the time-0 convention D_1 is exactly the hole.
    Survivor intervals are the x-projections of the level-n cover.
    """

    horizon: int
    escaped_volumes: Tuple[Fraction, ...]
    survivor_volume: Fraction
    survivor_intervals: Tuple[Interval, ...]


def escape_report(spec: BakerSpec, horizon: int) -> EscapeReport:
    """Escape-set volumes Vol(D_m) for m <= horizon, all exact.

    The volumes are obtained by summing the actual admissible-interval
    lengths at each level, not from the closed form (sum ell)^m, so the
    telescoping identity is a genuine cross-check downstream.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    count = len(spec.keep) ** horizon
    if count > INTERVAL_GUARD:
        raise HorizonTooLarge(
            f"horizon {horizon} needs {count} intervals (guard {INTERVAL_GUARD})")

    escaped = []
    intervals = [(Fraction(0), Fraction(1))]
    for _ in range(horizon):
        intervals = _refine_intervals(spec, intervals)
        alive = sum((hi - lo for lo, hi in intervals), Fraction(0))
        escaped.append(1 - alive)
    survivor_volume = 1 - escaped[-1]

    report = EscapeReport(
        horizon=horizon,
        escaped_volumes=tuple(escaped),
        survivor_volume=survivor_volume,
        survivor_intervals=tuple(intervals),
    )
    # escaped mass only ever grows
    assert all(a <= b for a, b in zip(escaped, escaped[1:]))
    return report


@dataclass(frozen=True)
class TrappedCover:
    """Level-m cover of a trapped tail by strips or product rectangles.

    For tail "K_minus" the cover is vertical strips (x-intervals times
    the full xi range); "K_plus" gives horizontal strips; "K" gives the
    full product-rectangle cover with measure (sum ell)^(2m).  Rectangle
    lists for K are exposed lazily via :meth:`rectangles` since there are
    |keep|^(2m) of them.
    """

    tail: str
    level: int
    x_intervals: Optional[Tuple[Interval, ...]]
    xi_intervals: Optional[Tuple[Interval, ...]]
    measure: Fraction

    def rectangles(self) -> Iterator[Tuple[Interval, Interval]]:
        if self.tail != "K":
            raise ValueError("rectangles are only defined for the full trapped set")
        for ix in self.x_intervals:
            for ixi in self.xi_intervals:
                yield (ix, ixi)


def trapped_cover(spec: BakerSpec, level: int, tail: str = "K") -> TrappedCover:
    """Exact level-m cover of K, K- or K+ by symbolic strips."""
    if level < 1:
        raise ValueError("cover level must be >= 1")
    if tail not in ("K", "K_minus", "K_plus"):
        raise ValueError(f"tail must be K, K_minus or K_plus, got {tail!r}")
    # the K cover conceptually holds |keep|^(2m) rectangles; guard on that
    count = len(spec.keep) ** (2 * level if tail == "K" else level)
    if count > INTERVAL_GUARD:
        raise HorizonTooLarge(
            f"cover would hold {count} elements (guard {INTERVAL_GUARD})")

    intervals = tuple(_level_intervals(spec, level))
    length = sum((hi - lo for lo, hi in intervals), Fraction(0))
    if tail == "K_minus":
        return TrappedCover(tail, level, intervals, None, length)
    if tail == "K_plus":
        return TrappedCover(tail, level, None, intervals, length)
    return TrappedCover(tail, level, intervals, intervals, length * length)


# ---------------------------------------------------------------------------
# thermodynamics
# ---------------------------------------------------------------------------

def pressure(spec: BakerSpec, s: float, method: str = "closed_form") -> float:
    """Topological pressure P(-s phi+) of the open baker's full shift.

    closed_form evaluates log sum_{i in keep} ell_i^s directly.  markov
    builds the |keep| x |keep| all-ones transition matrix with column
    weights w_i = ell_i^s and returns the log of its Perron-Frobenius
    eigenvalue by power iteration (relative tolerance 1e-12).  For a full
    shift the two must agree; the markov route exists as an independent
    cross-check and to accommodate future subshift specs.
    """
    weights = [float(l) ** s for l in spec.kept_lengths]
    if method == "closed_form":
        return log(sum(weights))
    if method == "markov":
        return log(_perron_frobenius_full_shift(weights))
    raise ValueError(f"method must be 'closed_form' or 'markov', got {method!r}")


def _perron_frobenius_full_shift(weights: Sequence[float],
                                 rel_tol: float = 1e-12,
                                 max_iter: int = 10000) -> float:
    """Largest eigenvalue of T^w where T is all-ones and T^w[a,b] = w_b.

    Generic positive-matrix power iteration; the full-shift case is rank
    one and converges immediately, but the loop and divergence guard stay
    general on purpose.
    """
    w = np.asarray(weights, dtype=float)
    n = w.size
    assert n >= 1 and np.all(w > 0)
    v = np.full(n, 1.0 / n)
    lam_prev = 0.0
    for _ in range(max_iter):
        tv = np.full(n, float(np.dot(w, v)))  # every row of T^w equals w
        lam = tv.sum() / v.sum()
        v = tv / tv.sum()
        if abs(lam - lam_prev) <= rel_tol * abs(lam):
            return float(lam)
        lam_prev = lam
    raise PowerIterationDivergence(
        f"no convergence after {max_iter} iterations (last estimate {lam_prev})")


def cantor_dimension(spec: BakerSpec) -> float:
    """Dimension exponent nu: the unique root of sum ell_i^s = 1.

    Bisection to 1e-12 absolute.  f(s) = sum ell_i^s - 1 is strictly
    decreasing (every kept ell_i < 1), f(0) = n-1 >= 0 and f(1) < 0 for a
    proper keep set, so the root lies in [0, 1].  A single kept rectangle
    gives nu = 0 exactly.
    """
    lengths = [float(l) for l in spec.kept_lengths]
    if len(lengths) == 1:
        return 0.0

    def f(s: float) -> float:
        return sum(l ** s for l in lengths) - 1.0

    lo, hi = 0.0, 1.0
    assert f(lo) > 0 and f(hi) < 0
    for _ in range(60):  # 2^-60 << the 1e-12 target
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PressureReport:
    """Pressure curve plus the derived thermodynamic constants.

    g_half = exp P(-phi+/2) and g_cl = exp(P(-phi+)/2) are the two
    spectral-radius reference levels; convexity_ok records whether the
    chain -gamma_cl/2 <= P(-phi+/2) <= (H_top - gamma_cl)/2 held.
    """

    s_grid: Tuple[float, ...]
    values: Tuple[float, ...]
    nu: float
    gamma_cl: float
    h_top: float
    g_half: float
    g_cl: float
    convexity_ok: bool


def thermo_report(spec: BakerSpec,
                  s_grid: Optional[Sequence[float]] = None) -> PressureReport:
    """Pressure on a grid plus nu, gamma_cl, H_top and the gap constants."""
    if s_grid is None:
        s_grid = np.linspace(-1.0, 3.0, 50)
    s_grid = tuple(float(s) for s in s_grid)
    values = tuple(pressure(spec, s) for s in s_grid)

    nu = cantor_dimension(spec)
    surviving = float(spec.survival_fraction)
    gamma_cl = -log(surviving)
    h_top = log(len(spec.keep))
    p_half = pressure(spec, 0.5)
    g_half = float(np.exp(p_half))
    g_cl = float(np.sqrt(surviving))
    # convexity of s -> P(-s phi+) pinches the midpoint value
    slack = 1e-12
    convexity_ok = (-gamma_cl / 2 - slack <= p_half <= (h_top - gamma_cl) / 2 + slack)
    return PressureReport(
        s_grid=s_grid,
        values=values,
        nu=nu,
        gamma_cl=gamma_cl,
        h_top=h_top,
        g_half=g_half,
        g_cl=g_cl,
        convexity_ok=convexity_ok,
    )
