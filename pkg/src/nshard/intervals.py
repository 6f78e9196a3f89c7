"""Nested open intervals generated by per-level affine contractions.

Level i carries two increasing affine maps of [0,1] into (0,1):

    child_map(i, 0):  x -> delta(i) * x + 1/2 - 2 delta(i)
    child_map(i, 1):  x -> delta(i) * x + 1/2 + delta(i)

A bit string b_1 b_2 ... b_k selects one map per level; composing them and
applying to (0,1) yields the depth-k open interval of that prefix.  Prefixes
of equal length are pairwise disjoint and every prefix contains all of its
extensions, giving a binary tree of exponentially shrinking intervals whose
width at depth k is prod_{j<=k} delta(j).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

from .schedule import DEFAULT_SCHEDULE, AngleSchedule

Bits = Tuple[int, ...]
BitsLike = Union[str, Sequence[int], Iterable[int]]

# Beyond this depth, absolute endpoints in binary64 sit under the rounding
# noise of values near 1/2; deeper prefixes need the extended backend.
DEPTH_CAP = 24


def as_bits(bits: BitsLike) -> Bits:
    """Normalize "0110", [0,1,1,0], etc. to a tuple of 0/1 ints."""
    if isinstance(bits, str):
        seq = [int(ch) for ch in bits]
    else:
        seq = [int(b) for b in bits]
    for b in seq:
        if b not in (0, 1):
            raise ValueError(f"bits must be 0 or 1, got {b}")
    return tuple(seq)


def bits_to_str(bits: BitsLike) -> str:
    return "".join(str(b) for b in as_bits(bits))


def random_bits(n: int, rng) -> Bits:
    return tuple(int(b) for b in rng.integers(0, 2, size=n))


@dataclass(frozen=True)
class AffineMap:
    """x -> slope * x + intercept restricted to domain (a closed interval)."""

    slope: float
    intercept: float
    domain: Tuple[float, float] = (0.0, 1.0)

    def __call__(self, x):
        return self.slope * x + self.intercept

    def inverse(self, y):
        return (y - self.intercept) / self.slope

    def image(self) -> Tuple[float, float]:
        lo, hi = self.domain
        return self(lo), self(hi)


@dataclass(frozen=True)
class Interval:
    """Open interval (lo, hi); endpoints are outside."""

    lo: float
    hi: float

    def __contains__(self, x) -> bool:
        return self.lo < x < self.hi

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return (self.lo + self.hi) / 2


def phi(i: int, bit: int, sched: AngleSchedule = DEFAULT_SCHEDULE) -> AffineMap:
    """The level-i child map for the given bit."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    d = sched.delta(i)
    # 0.5 is exact in binary, so mixed float/mpf arithmetic stays faithful
    intercept = 0.5 + d if bit else 0.5 - 2 * d
    return AffineMap(slope=d, intercept=intercept)


def interval(
    bits: BitsLike,
    sched: AngleSchedule = DEFAULT_SCHEDULE,
    base_level: int = 1,
) -> Interval:
    """Open interval selected by a bit prefix.

    The empty prefix gives (0,1).  ``base_level`` shifts the level indexing so
    sub-trees can be evaluated in the local frame of an ancestor, which keeps
    endpoint comparisons exact at depth (composition is applied outermost
    last, so no catastrophic cancellation occurs).
    """
    bits = as_bits(bits)
    if sched.backend == "binary64" and len(bits) > DEPTH_CAP:
        raise ValueError(
            f"prefix depth {len(bits)} exceeds the binary64 cap {DEPTH_CAP}; "
            "use an extended-precision schedule"
        )
    with sched.context():
        lo, hi = (0.0, 1.0) if sched.backend == "binary64" else (sched._one * 0, sched._one)
        for j in range(len(bits) - 1, -1, -1):
            m = phi(base_level + j, bits[j], sched)
            lo, hi = m(lo), m(hi)
    return Interval(lo, hi)


def locate(x, bits: BitsLike, sched: AngleSchedule = DEFAULT_SCHEDULE) -> int:
    """Deepest prefix of ``bits`` whose open interval strictly contains x.

    Returns 0 when x is not inside the depth-1 interval.  Boundary hits count
    as outside (the intervals are open), and by nesting the set of containing
    prefixes is always an initial run, so a single descent suffices.  The
    descent rescales to local coordinates level by level, which stays exact
    far beyond the absolute-endpoint depth cap.
    """
    return descend(x, bits, sched)[0]


def descend(x, bits: BitsLike, sched: AngleSchedule = DEFAULT_SCHEDULE):
    """Like locate, but also return the local coordinate at the stop depth."""
    bits = as_bits(bits)
    with sched.context():
        u = x
        depth = 0
        for j, b in enumerate(bits):
            d = sched.delta(j + 1)
            lo = 0.5 + d if b else 0.5 - 2 * d
            if not (lo < u < lo + d):
                break
            u = (u - lo) / d
            depth = j + 1
    return depth, u


def separation_depth(log2_inv_rho: float) -> int:
    """Depth k = floor(sqrt(log2(1/rho)) / 4), clamped to at least 1.

    For log2(1/rho) >= 16 the returned k satisfies 2k^2 + k + 4 < log2(1/rho),
    which is the margin that makes a depth-k miss imply distance > rho from
    the depth-(k+1) interval.  Smaller inputs are clamped and carry no such
    guarantee.
    """
    if not log2_inv_rho > 0:
        raise ValueError(f"log2(1/rho) must be positive, got {log2_inv_rho!r}")
    k = int(math.floor(math.sqrt(log2_inv_rho) / 4))
    return max(k, 1)


def separation_margins(bits: BitsLike, k: int, sched: AngleSchedule = DEFAULT_SCHEDULE):
    """Gaps between the depth-k and depth-(k+1) interval endpoints.

    Returns (inf_gap, sup_gap) where inf_gap = inf I_{b_1..b_{k+1}} -
    inf I_{b_1..b_k} and sup_gap is the mirror quantity.  Both are computed as
    a product times a level-(k+1) offset, avoiding endpoint subtraction.
    """
    bits = as_bits(bits)
    if len(bits) < k + 1:
        raise ValueError("need at least k+1 bits")
    with sched.context():
        prod = sched.delta_product(k)
        m = phi(k + 1, bits[k], sched)
        lo, hi = m.image()
        return prod * lo, prod * (1 - hi)
