"""Random piecewise-affine hard functions on the line.

A bit string b of length N determines a convex, 1-Lipschitz, piecewise-affine
function r_b built from N nested levels.  Outside [0,1] it continues as the
tails 1-x (left) and x (right).  Inside, level i contributes a wedge: two
affine branches whose slopes are cotangents of the schedule angles, separated
by a gap over the child interval of bit b_i, where the next level is pasted in
after an affine rescale.  The deepest level ends in a symmetric V whose kink
x_mid is the unique minimizer.  Shifting by 2 - r_b(x_mid) gives the hard
function hbar with minimum value exactly 2.

Two redundant representations are kept deliberately: an explicit piece table
(breakpoints, values, slopes) for structural checks, and a recursive descent
evaluator that works in local coordinates and stays accurate at depth.  Tests
cross-validate them.
"""

from __future__ import annotations

import bisect
import csv
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .intervals import DEPTH_CAP, Bits, BitsLike, as_bits, descend, interval, separation_depth
from .schedule import DEFAULT_SCHEDULE, AngleSchedule


# ---------------------------------------------------------------------------
# piece table
# ---------------------------------------------------------------------------


@dataclass
class PiecewiseAffine1D:
    """Continuous piecewise-affine function with affine tails.

    ``slopes`` has one more entry than ``breakpoints``: slopes[0] is the left
    tail, slopes[-1] the right tail, slopes[j] the piece between breakpoints
    j-1 and j.  ``values`` are the function values at the breakpoints.
    Breakpoints must be nondecreasing; at depths where nested widths fall
    under binary64 resolution, neighbors may collapse to equal floats and the
    table remains consistent (tied breakpoints carry near-identical values).
    """

    breakpoints: list
    values: list
    slopes: list
    _np: Optional[tuple] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        nb, nv, ns = len(self.breakpoints), len(self.values), len(self.slopes)
        if nb < 1 or nv != nb or ns != nb + 1:
            raise ValueError(f"inconsistent table sizes: {nb} breakpoints, {nv} values, {ns} slopes")
        for a, b in zip(self.breakpoints, self.breakpoints[1:]):
            if b < a:
                raise ValueError("breakpoints must be nondecreasing")

    # -- scalar evaluation ----------------------------------------------------

    def __call__(self, x):
        j = bisect.bisect_right(self.breakpoints, x)
        a = j - 1 if j > 0 else 0
        return self.values[a] + self.slopes[j] * (x - self.breakpoints[a])

    def subdiff(self, x) -> Tuple[float, float]:
        """Slope interval [lo, hi] at x; a singleton inside a piece."""
        l = bisect.bisect_left(self.breakpoints, x)
        r = bisect.bisect_right(self.breakpoints, x)
        return self.slopes[l], self.slopes[r]

    def min_norm_slope(self, x):
        lo, hi = self.subdiff(x)
        if lo > 0:
            return lo
        if hi < 0:
            return hi
        return 0.0

    # -- batch evaluation (float tables only) ---------------------------------

    def _arrays(self):
        if self._np is None:
            self._np = (
                np.asarray(self.breakpoints, dtype=float),
                np.asarray(self.values, dtype=float),
                np.asarray(self.slopes, dtype=float),
            )
        return self._np

    def eval_batch(self, x: np.ndarray) -> np.ndarray:
        b, v, s = self._arrays()
        x = np.asarray(x, dtype=float)
        j = np.searchsorted(b, x, side="right")
        a = np.maximum(j - 1, 0)
        return v[a] + s[j] * (x - b[a])

    def subdiff_batch(self, x: np.ndarray):
        b, _, s = self._arrays()
        x = np.asarray(x, dtype=float)
        return s[np.searchsorted(b, x, side="left")], s[np.searchsorted(b, x, side="right")]

    # -- structure -------------------------------------------------------------

    @property
    def piece_count(self) -> int:
        return len(self.slopes)

    def continuity_residuals(self):
        """Relative mismatch between stored values and slope-propagated ones."""
        out = []
        for k in range(1, len(self.breakpoints)):
            pred = self.values[k - 1] + self.slopes[k] * (self.breakpoints[k] - self.breakpoints[k - 1])
            denom = max(1.0, abs(float(self.values[k])))
            out.append(abs(float(pred - self.values[k])) / denom)
        return out

    def merged(self, tol=0.0) -> "PiecewiseAffine1D":
        """Collapse adjacent collinear pieces (equal slopes within tol).

        The construction legitimately produces equal-slope neighbors (e.g. a
        tail continuing into the first wedge branch), so strict slope growth
        only holds on the merged table.
        """
        bp, vals, slopes = [], [], [self.slopes[0]]
        for k in range(len(self.breakpoints)):
            nxt = self.slopes[k + 1]
            if abs(float(nxt - slopes[-1])) <= tol:
                continue
            bp.append(self.breakpoints[k])
            vals.append(self.values[k])
            slopes.append(nxt)
        if not bp:
            bp, vals = [self.breakpoints[0]], [self.values[0]]
            slopes = [self.slopes[0], self.slopes[-1]]
        return PiecewiseAffine1D(bp, vals, slopes)

    def scale(self, c) -> "PiecewiseAffine1D":
        return PiecewiseAffine1D(
            list(self.breakpoints),
            [v * c for v in self.values],
            [s * c for s in self.slopes],
        )


# ---------------------------------------------------------------------------
# wedge profiles and value lifts
# ---------------------------------------------------------------------------


def wedge_value(i: int, bit: int, u, sched: AngleSchedule = DEFAULT_SCHEDULE):
    """Level-i wedge profile at local coordinate u.

    Defined on [0,1] minus the open child gap; equals 1 at both ends of [0,1]
    and epsilon(i) at both edges of the gap.  The bit-0 wedge is the mirror
    image of the bit-1 wedge.
    """
    d = sched.delta(i)
    e = sched.epsilon(i)
    if bit == 0:
        u = 1 - u
    if u <= 0.5 + d:
        return -(1 - e) / (0.5 + d) * u + 1
    return (1 - e) / (0.5 - 2 * d) * u + (-0.5 - 2 * d + e) / (0.5 - 2 * d)


def wedge_slopes(i: int, bit: int, sched: AngleSchedule = DEFAULT_SCHEDULE):
    """(left branch, right branch) slopes of the level-i wedge."""
    if bit:
        return -sched.cot_base(i + 1), sched.cot_base(i)
    return -sched.cot_base(i), sched.cot_base(i + 1)


def lift_value(i: int, v, sched: AngleSchedule = DEFAULT_SCHEDULE):
    """Map a level-(i+1) value into the level-i scale: v -> delta(i)(v-1)+epsilon(i)."""
    return sched.delta(i) * (v - 1) + sched.epsilon(i)


# ---------------------------------------------------------------------------
# builders and evaluators
# ---------------------------------------------------------------------------


def build_r(bits: BitsLike, sched: AngleSchedule = DEFAULT_SCHEDULE) -> PiecewiseAffine1D:
    """Explicit piece table of r_b for a bit string b of length N >= 1.

    The table has 2N+3 breakpoints and 2N+4 pieces including both tails.
    Piece slopes are the wedge branch slopes (so +-cot of schedule angles);
    breakpoint values are the lift-chain images of 1, shared by the two
    endpoints of each nested interval.
    """
    bits = as_bits(bits)
    N = len(bits)
    if N < 1:
        raise ValueError("need at least one bit")
    if sched.backend == "binary64" and N > DEPTH_CAP:
        raise ValueError(
            f"depth {N} exceeds the binary64 cap {DEPTH_CAP}; "
            "build with an extended-precision schedule"
        )
    one = 1.0 if sched.backend == "binary64" else sched._one

    with sched.context():
        # lift chain A_i(x) = a_i x + c_i, accumulated level by level
        a, c = one, one * 0
        level_values = [one]  # A_i(1) for i = 0..N
        for i in range(1, N + 1):
            d, e = sched.delta(i), sched.epsilon(i)
            c = a * (e - d) + c
            a = a * d
            level_values.append(a + c)

        infs = [interval(bits[:i], sched).lo for i in range(1, N + 1)]
        sups = [interval(bits[:i], sched).hi for i in range(1, N + 1)]
        x_mid = (infs[-1] + sups[-1]) / 2
        cot = sched.cot_base(N + 1)
        r_min = level_values[N] - cot * a / 2  # a = prod of deltas

        breakpoints = [one * 0] + infs + [x_mid] + sups[::-1] + [one]
        values = [one] + level_values[1:] + [r_min] + level_values[1:][::-1] + [one]
        slopes = [-one]
        for i in range(N):
            slopes.append(wedge_slopes(i + 1, bits[i], sched)[0])
        slopes += [-cot, cot]
        for i in range(N - 1, -1, -1):
            slopes.append(wedge_slopes(i + 1, bits[i], sched)[1])
        slopes.append(one)
    return PiecewiseAffine1D(breakpoints, values, slopes)


def eval_r(bits: BitsLike, x, sched: AngleSchedule = DEFAULT_SCHEDULE):
    """Evaluate r_b by recursive prefix descent.

    Maintains the local coordinate level by level and lifts the wedge value
    back out, so precision does not degrade with depth the way the absolute
    piece table does near the deepest breakpoints.
    """
    bits = as_bits(bits)
    N = len(bits)
    if x < 0:
        return 1 - x
    if x > 1:
        return x * 1
    depth, u = descend(x, bits, sched)
    with sched.context():
        if depth < N:
            v = wedge_value(depth + 1, bits[depth], u, sched)
        else:
            cot = sched.cot_base(N + 1)
            v = 1 - cot * u if u <= 0.5 else 1 - cot * (1 - u)
        for j in range(depth, 0, -1):
            v = lift_value(j, v, sched)
    return v


def subdiff_r(bits: BitsLike, x, sched: AngleSchedule = DEFAULT_SCHEDULE):
    """Slope interval of r_b at x (singleton off breakpoints).

    Convenience wrapper that builds the piece table; hold a table from
    build_r when querying in bulk.
    """
    return build_r(bits, sched).subdiff(x)


def build_hbar(bits: BitsLike, sched: AngleSchedule = DEFAULT_SCHEDULE):
    """Shifted table hbar = r_b + 2 - r_b(x_mid) and its minimizer.

    Returns (table, x_star).  The minimum value is exactly 2 at the x_mid
    breakpoint by construction of the shift.
    """
    r = build_r(bits, sched)
    N = len(as_bits(bits))
    r_min = r.values[N + 1]
    values = [(v - r_min) + 2 for v in r.values]
    return PiecewiseAffine1D(list(r.breakpoints), values, list(r.slopes)), r.breakpoints[N + 1]


# ---------------------------------------------------------------------------
# parameter schedules
# ---------------------------------------------------------------------------


class ScheduleParams(NamedTuple):
    log2_inv_rho: float
    k: int
    N: int


def schedule_params(
    T: Optional[int] = None,
    gamma: Optional[float] = None,
    mode: str = "theory",
    k: Optional[int] = None,
    rho: Optional[float] = None,
    log_base: float = 2.0,
) -> ScheduleParams:
    """Resolve (log2(1/rho), k, N) for an experiment.

    theory mode: log(1/rho) = 256 T^2 / gamma^2 held in log space (rho itself
    is astronomically small and never materialized), k = floor(sqrt(log)/4)
    clamped to >= 1, N = k + 1.  The log base is 2 by default; pass
    log_base=math.e to read the budget as a natural log.

    desk mode: caller supplies k and a representable rho directly; they are
    passed through with N = k + 1.
    """
    if mode == "theory":
        if T is None or not isinstance(T, int) or T < 1:
            raise ValueError(f"T must be an integer >= 1, got {T!r}")
        if gamma is None or not (0 < gamma <= 1):
            raise ValueError(f"gamma must be in (0, 1], got {gamma!r}")
        log_inv_rho = 256.0 * T * T / (gamma * gamma)
        kk = separation_depth(log_inv_rho)
        log2_inv_rho = log_inv_rho * np.log2(log_base) if log_base != 2.0 else log_inv_rho
        return ScheduleParams(log2_inv_rho, kk, kk + 1)
    if mode == "desk":
        if k is None or not isinstance(k, int) or k < 1:
            raise ValueError(f"desk mode needs an integer k >= 1, got {k!r}")
        if rho is None or not (0 < rho < 1):
            raise ValueError(f"desk mode needs rho in (0, 1), got {rho!r}")
        return ScheduleParams(-float(np.log2(rho)), k, k + 1)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# one-dimensional oracle instance
# ---------------------------------------------------------------------------


@dataclass
class OneDimInstance:
    """A built 1D table exposed through the local first-order oracle protocol."""

    pwa: PiecewiseAffine1D
    bits: Bits
    x_star: float

    @property
    def d(self) -> int:
        return 1

    def eval(self, x) -> float:
        return float(self.pwa(float(np.asarray(x).reshape(-1)[0])))

    def value_and_subgrad(self, x):
        x0 = float(np.asarray(x, dtype=float).reshape(-1)[0])
        return float(self.pwa(x0)), np.array([self.pwa.min_norm_slope(x0)])


def build_1d_instance(bits: BitsLike, sched: AngleSchedule = DEFAULT_SCHEDULE) -> OneDimInstance:
    pwa, x_star = build_hbar(bits, sched)
    return OneDimInstance(pwa=pwa, bits=as_bits(bits), x_star=float(x_star))


# ---------------------------------------------------------------------------
# profile dumps
# ---------------------------------------------------------------------------


def profile_rows(pwa: PiecewiseAffine1D, lo: float = -1.0, hi: float = 2.0, n: int = 3001):
    xs = np.linspace(lo, hi, n)
    vals = pwa.eval_batch(xs)
    los, his = pwa.subdiff_batch(xs)
    return [(float(x), float(v), float(a), float(b)) for x, v, a, b in zip(xs, vals, los, his)]


def write_profile_csv(path, pwa: PiecewiseAffine1D, lo: float = -1.0, hi: float = 2.0, n: int = 3001):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value", "lo_slope", "hi_slope"])
        for row in profile_rows(pwa, lo, hi, n):
            w.writerow([repr(c) for c in row])
