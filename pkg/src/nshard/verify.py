"""Experiments and numerical certification of the construction.

Three kinds of artifact live here:

* Monte-Carlo experiments with their probability bounds: the progress process
  of nested-interval depths, hitting-probability estimates, and the
  concentration of a random cap direction against trajectory directions.
* The subgradient-flow certifier: forward-Euler integration of the normalized
  minimal-norm-subgradient flow, which converts a pointwise lower bound on
  subgradient norms into a certified function decrease over a ball.
* The invariant suite: one callable that re-checks every structural property
  of the schedule, intervals, 1D tables, and embedded instances, and reports
  per-check pass/fail rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import hard1d
from .embed import build_h, build_instance
from .hard1d import build_1d_instance, build_r, eval_r
from .intervals import as_bits, interval, locate, phi, random_bits, separation_margins
from .oracles import run
from .schedule import DEFAULT_SCHEDULE, AngleSchedule


def wilson_interval(successes: int, n: int, z: float = 1.96) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _split_seeds(seed: int, n: int):
    return np.random.SeedSequence(seed).spawn(n)


# ---------------------------------------------------------------------------
# progress process
# ---------------------------------------------------------------------------


@dataclass
class ProgressProcess:
    """Deepest nested-interval prefix entered by time t; Z[0] = 0."""

    Z: np.ndarray

    @property
    def jumps(self) -> np.ndarray:
        return np.diff(self.Z)

    @property
    def final(self) -> int:
        return int(self.Z[-1])


def progress_process(trajectory, bits=None, sched: AngleSchedule = DEFAULT_SCHEDULE) -> ProgressProcess:
    """Z_t from a trajectory, located on the last coordinate of each iterate."""
    inst_bits = getattr(trajectory.instance, "bits", None)
    if bits is None:
        bits = inst_bits
        if bits is None:
            raise ValueError("trajectory instance carries no bit string; pass bits explicitly")
    bits = as_bits(bits)
    if inst_bits is not None and as_bits(inst_bits) != bits:
        raise ValueError("bit string does not match the trajectory's instance")
    Z = np.zeros(trajectory.T + 1, dtype=int)
    for t, x in enumerate(trajectory.points, start=1):
        depth = locate(float(np.atleast_1d(x)[-1]), bits, sched)
        Z[t] = max(Z[t - 1], depth)
    return ProgressProcess(Z)


# ---------------------------------------------------------------------------
# Monte-Carlo experiments
# ---------------------------------------------------------------------------


@dataclass
class HittingReport:
    T: int
    k: int
    N: int
    n_runs: int
    log2_inv_rho: float
    hit_freq: float
    hit_wilson: Tuple[float, float]
    hit_bound: float
    hit_vacuous: bool
    deep_freq: float
    deep_wilson: Tuple[float, float]
    deep_bound: float
    deep_vacuous: bool
    jump_stats: Dict[int, dict]  # m -> {freq, se, bound, n}

    def rows(self):
        out = [
            {
                "check": "hit_within_rho",
                "estimate": self.hit_freq,
                "wilson_lo": self.hit_wilson[0],
                "wilson_hi": self.hit_wilson[1],
                "bound": self.hit_bound,
                "vacuous": self.hit_vacuous,
            },
            {
                "check": f"depth_ge_{self.k}",
                "estimate": self.deep_freq,
                "wilson_lo": self.deep_wilson[0],
                "wilson_hi": self.deep_wilson[1],
                "bound": self.deep_bound,
                "vacuous": self.deep_vacuous,
            },
        ]
        for m, st in sorted(self.jump_stats.items()):
            out.append(
                {
                    "check": f"jump_ge_{m}",
                    "estimate": st["freq"],
                    "wilson_lo": max(0.0, st["freq"] - 3 * st["se"]),
                    "wilson_hi": min(1.0, st["freq"] + 3 * st["se"]),
                    "bound": st["bound"],
                    "vacuous": st["bound"] >= 1.0,
                }
            )
        return out


def mc_hitting(
    algorithm,
    T: int,
    k: int,
    N: int,
    n_runs: int,
    seed: int = 0,
    rho: Optional[float] = None,
    log2_inv_rho: Optional[float] = None,
    m_max: int = 6,
    x0: float = 0.0,
    sched: AngleSchedule = DEFAULT_SCHEDULE,
) -> HittingReport:
    """Estimate hitting and progress probabilities over fresh random bit draws.

    Each run draws a fresh bit string, builds the shifted 1D hard function,
    runs the algorithm for T oracle steps from x0, and records whether any
    iterate came within rho of the minimizer and how deep the progress
    process got.  Estimates come with Wilson intervals and are compared to
    the analytic bounds 16 T / sqrt(log2(1/rho)) and min(1, 4T/k); bounds
    that exceed 1 are flagged vacuous rather than failed.
    """
    if n_runs < 100:
        raise ValueError("n_runs must be at least 100")
    if rho is None and log2_inv_rho is None:
        raise ValueError("pass rho or log2_inv_rho")
    if log2_inv_rho is None:
        log2_inv_rho = -math.log2(rho)
    rho_eval = rho if rho is not None else (2.0 ** (-log2_inv_rho) if log2_inv_rho < 1060 else 0.0)

    hits = 0
    deep = 0
    jump_counts = {m: 0 for m in range(1, m_max + 1)}
    jump_trials = 0
    for child in _split_seeds(seed, n_runs):
        bits_seed, algo_seed = (int(s) for s in child.generate_state(2))
        bits = random_bits(N, np.random.default_rng(bits_seed))
        inst = build_1d_instance(bits, sched)
        traj = run(algorithm, inst, np.array([x0]), T, seed=algo_seed)
        dists = np.abs(traj.points[:, -1] - inst.x_star)
        if np.any(dists <= rho_eval):
            hits += 1
        proc = progress_process(traj, bits, sched)
        if proc.final >= k:
            deep += 1
        for j in proc.jumps:
            jump_trials += 1
            for m in range(1, m_max + 1):
                if j >= m:
                    jump_counts[m] += 1

    hit_bound = 16.0 * T / math.sqrt(log2_inv_rho)
    deep_bound = 4.0 * T / k
    jump_stats = {}
    for m in range(1, m_max + 1):
        freq = jump_counts[m] / jump_trials
        se = math.sqrt(max(freq * (1 - freq), 1.0 / jump_trials) / jump_trials)
        jump_stats[m] = {"freq": freq, "se": se, "bound": 2.0 ** (-(m - 1)), "n": jump_trials}
    return HittingReport(
        T=T,
        k=k,
        N=N,
        n_runs=n_runs,
        log2_inv_rho=log2_inv_rho,
        hit_freq=hits / n_runs,
        hit_wilson=wilson_interval(hits, n_runs),
        hit_bound=hit_bound,
        hit_vacuous=hit_bound >= 1.0,
        deep_freq=deep / n_runs,
        deep_wilson=wilson_interval(deep, n_runs),
        deep_bound=min(1.0, deep_bound),
        deep_vacuous=deep_bound >= 1.0,
        jump_stats=jump_stats,
    )


@dataclass
class ConcentrationReport:
    d: int
    T: int
    n_runs: int
    exceed_freq: float
    wilson: Tuple[float, float]
    bound: float
    vacuous: bool
    max_alignment: float

    def rows(self):
        return [
            {
                "check": f"alignment_ge_third_d{self.d}",
                "estimate": self.exceed_freq,
                "wilson_lo": self.wilson[0],
                "wilson_hi": self.wilson[1],
                "bound": self.bound,
                "vacuous": self.vacuous,
            }
        ]


def concentration_check(
    d: int,
    T: int,
    n_runs: int,
    seed: int = 0,
    algorithm=None,
    N: int = 5,
    sched: AngleSchedule = DEFAULT_SCHEDULE,
) -> ConcentrationReport:
    """Frequency of a fresh random direction aligning with any iterate.

    Runs the algorithm on the cap-free objective, then draws an independent
    unit vector supported on the leading d-1 coordinates and measures
    max_t <u, (x_t - x_star)/||x_t - x_star||>.  The exceedance probability
    of 1/3 is compared against T exp(-d/36); for small d the bound exceeds 1
    and is flagged vacuous.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    from .oracles import PerturbedGD

    if algorithm is None:
        algorithm = PerturbedGD()
    exceed = 0
    max_align = -np.inf
    for child in _split_seeds(seed, n_runs):
        bits_seed, algo_seed, w_seed = (int(s) for s in child.generate_state(3))
        bits = random_bits(N, np.random.default_rng(bits_seed))
        inst = build_h(d, bits, sched)
        traj = run(algorithm, inst, np.zeros(d), T, seed=algo_seed)
        wrng = np.random.default_rng(w_seed)
        u = wrng.standard_normal(d - 1)
        u /= np.linalg.norm(u)
        w_unit = np.zeros(d)
        w_unit[:-1] = u
        diffs = traj.points - inst.x_star
        norms = np.linalg.norm(diffs, axis=1)
        ok = norms > 0
        if not np.any(ok):
            continue
        align = float(np.max((diffs[ok] @ w_unit) / norms[ok]))
        max_align = max(max_align, align)
        if align >= 1.0 / 3.0:
            exceed += 1
    bound = T * math.exp(-d / 36.0)
    return ConcentrationReport(
        d=d,
        T=T,
        n_runs=n_runs,
        exceed_freq=exceed / n_runs,
        wilson=wilson_interval(exceed, n_runs),
        bound=bound,
        vacuous=bound >= 1.0,
        max_alignment=float(max_align),
    )


# ---------------------------------------------------------------------------
# subgradient flow and local decrease certificates
# ---------------------------------------------------------------------------


@dataclass
class FlowResult:
    endpoint: np.ndarray
    end_value: float
    decrease: float
    status: str  # "ok" or "stalled"
    best_point: np.ndarray
    best_value: float
    steps: int


def subgradient_flow(fn, x0, delta: float, eta: Optional[float] = None, halt_threshold: float = 1e-3) -> FlowResult:
    """Forward-Euler integration of dx/dt = -g(x)/||g(x)|| for arc length delta.

    g is the minimal-norm subgradient returned by fn.value_and_subgrad.  The
    step is re-queried every iteration, which handles sliding along valleys
    without event detection.  Halts with status "stalled" if a subgradient
    norm below halt_threshold is encountered (on a hard instance with value
    at least 1 inside the ball this cannot happen).
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must be in (0, 1]")
    if eta is None:
        eta = delta / 1000.0
    if eta > delta / 100.0:
        raise ValueError("eta must be at most delta/100")
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    f0, g = fn.value_and_subgrad(x)
    best_point, best_value = x.copy(), f0
    steps = int(round(delta / eta))
    status = "ok"
    taken = 0
    for _ in range(steps):
        gn = float(np.linalg.norm(g))
        if gn < halt_threshold:
            status = "stalled"
            break
        x = x - eta * (g / gn)
        taken += 1
        v, g = fn.value_and_subgrad(x)
        if v < best_value:
            best_point, best_value = x.copy(), v
    end_value = fn.value_and_subgrad(x)[0]
    return FlowResult(
        endpoint=x,
        end_value=float(end_value),
        decrease=float(f0 - end_value),
        status=status,
        best_point=best_point,
        best_value=float(best_value),
        steps=taken,
    )


@dataclass
class CertResult:
    ok: bool
    witness: np.ndarray
    witness_value: float
    start_value: float
    target: float
    flow_status: str


def local_decrease_certificate(
    instance,
    x,
    delta: float,
    c: float = 0.01,
    eta: Optional[float] = None,
    n_samples: int = 1000,
    seed: int = 0,
) -> CertResult:
    """Witness that min over B(x, delta) of f drops below f(x) - delta * c.

    One-sided: the flow endpoint (and the best point along the flow path,
    which stays inside the ball) plus uniform ball samples give an upper
    bound on the minimum, which is all the certificate needs.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must be in (0, 1]")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    f_x = float(instance.value_and_subgrad(x)[0])
    target = f_x - delta * c
    flow = subgradient_flow(instance, x, delta, eta)
    best_point, best_value = flow.best_point, flow.best_value
    if best_value >= target and n_samples > 0:
        rng = np.random.default_rng(seed)
        d = x.shape[0]
        U = rng.standard_normal((n_samples, d))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        R = delta * rng.uniform(size=n_samples) ** (1.0 / d)
        pts = x[None, :] + R[:, None] * U
        if hasattr(instance, "eval_f_batch"):
            vals = instance.eval_f_batch(pts)
        else:
            vals = np.array([instance.value_and_subgrad(p)[0] for p in pts])
        j = int(np.argmin(vals))
        if vals[j] < best_value:
            best_point, best_value = pts[j], float(vals[j])
    return CertResult(
        ok=bool(best_value < target),
        witness=best_point,
        witness_value=float(best_value),
        start_value=f_x,
        target=target,
        flow_status=flow.status,
    )


# ---------------------------------------------------------------------------
# invariant suite
# ---------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    measured: float
    bound: float
    tol: float
    detail: str = ""


@dataclass
class CertificateReport:
    checks: List[Check] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, measured, bound, tol, detail="") -> None:
        self.checks.append(Check(name, bool(passed), float(measured), float(bound), float(tol), detail))

    def failed(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["check", "passed", "measured", "bound", "tol", "detail"])
            for c in self.checks:
                w.writerow([c.name, int(c.passed), repr(c.measured), repr(c.bound), repr(c.tol), c.detail])

    def write_jsonl(self, path) -> None:
        import json

        with open(path, "w") as fh:
            for c in self.checks:
                fh.write(
                    json.dumps(
                        {
                            "check": c.name,
                            "passed": c.passed,
                            "measured": c.measured,
                            "bound": c.bound,
                            "tol": c.tol,
                            "detail": c.detail,
                        }
                    )
                    + "\n"
                )

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            lines.append(f"[{mark}] {c.name}: measured={c.measured:.6g} bound={c.bound:.6g} {c.detail}")
        n_fail = len(self.failed())
        lines.append(f"{len(self.checks) - n_fail}/{len(self.checks)} checks passed")
        return "\n".join(lines)


@dataclass
class SuiteParams:
    n_instances: int = 20
    max_depth: int = 10
    interval_depth: int = 6
    separation_draws: int = 100
    dual_points: int = 2000
    dims: Sequence[int] = (2, 5, 10)
    lipschitz_pairs: int = 5000
    stationarity_points: int = 5000
    fd_points: int = 12
    fd_dirs: int = 8
    rho: float = 1e-3


def _mutate_slope(pwa):
    """Bump the first slope of an equal-slope adjacent pair by 1e-3.

    Such a pair always exists (a tail continues collinearly into the first
    wedge branch on one side), and the bump inverts the slope order there.
    """
    slopes = list(pwa.slopes)
    for j in range(len(slopes) - 1):
        if slopes[j] == slopes[j + 1]:
            slopes[j] = slopes[j] + 1e-3
            break
    else:
        slopes[0] = slopes[0] + 1e-3
    return hard1d.PiecewiseAffine1D(list(pwa.breakpoints), list(pwa.values), slopes)


def invariant_suite(
    seed: int = 0,
    params: Optional[SuiteParams] = None,
    mutate: Optional[str] = None,
    sched: AngleSchedule = DEFAULT_SCHEDULE,
) -> CertificateReport:
    """Re-check every structural invariant on fresh random instances.

    ``mutate="slope"`` injects a slope fault into one 1D table to demonstrate
    that the suite detects broken convexity.
    """
    if mutate not in (None, "slope"):
        raise ValueError(f"unknown mutation {mutate!r}")
    p = params or SuiteParams()
    rng = np.random.default_rng(seed)
    rep = CertificateReport()

    # schedule ranges
    atan8 = math.atan(8.0)
    atan1 = math.atan(1.0)
    thetas = [sched.theta_base(i) for i in range(1, 61)]
    rep.add(
        "schedule-theta-range",
        all(atan1 <= t <= atan8 for t in thetas) and all(b >= a for a, b in zip(thetas, thetas[1:])),
        max(thetas),
        atan8,
        0.0,
        "monotone, within [atan 1, atan 8], indices 1..60",
    )
    deltas = [sched.delta(i) for i in range(1, 61)]
    rep.add("schedule-delta-range", all(0 < d <= 7 / 32 for d in deltas), max(deltas), 7 / 32, 0.0)
    epss = [sched.epsilon(i) for i in range(1, 61)]
    rep.add("schedule-epsilon-range", all(0.5 <= e < 1 for e in epss), min(epss), 0.5, 0.0)
    lower_ok = all(sched.delta(i) >= math.tan(sched.theta_shift(i)) / 12 for i in range(1, 61))
    rep.add("schedule-delta-lower", lower_ok, min(deltas), 0.0, 0.0, "delta >= tan(shift)/12")

    # interval combinatorics, compared in the local frame of the common prefix
    depth = p.interval_depth
    worst_nest = np.inf
    for k in range(1, depth + 1):
        for code in range(2 ** k):
            bits = tuple((code >> (k - 1 - j)) & 1 for j in range(k))
            child = interval(bits[-1:], sched, base_level=k)
            worst_nest = min(worst_nest, child.lo - 0.0, 1.0 - child.hi)
    rep.add("interval-nesting", worst_nest > 1e-12, worst_nest, 1e-12, 1e-12, f"depth <= {depth}, local frames")
    worst_gap = np.inf
    for k in range(1, depth + 1):
        # disjointness at the first differing level: bands around 1/2 separated by 2 delta
        m0 = phi(k, 0, sched)
        m1 = phi(k, 1, sched)
        worst_gap = min(worst_gap, m1.image()[0] - m0.image()[1])
    rep.add("interval-disjointness", worst_gap > 1e-12, worst_gap, 1e-12, 1e-12, "local band gap 2*delta")

    log2_inv_rho = 256.0
    k_sep, N_sep = 4, 5
    rho_sep = 2.0 ** (-log2_inv_rho)
    worst_sep = np.inf
    for _ in range(p.separation_draws):
        bits = random_bits(N_sep, rng)
        gi, gs = separation_margins(bits, k_sep, sched)
        worst_sep = min(worst_sep, gi, gs)
    rep.add("interval-separation", worst_sep > rho_sep, worst_sep, rho_sep, 0.0, "k=4, N=5, log2(1/rho)=256")

    # 1D tables
    worst_cont = 0.0
    worst_mono = np.inf
    worst_merge = np.inf
    slope_lo, slope_hi = np.inf, 0.0
    worst_dual = 0.0
    worst_growth = np.inf
    hbar_zero_max = 0.0
    pieces_ok = True
    r_at_zero_ok = True
    for i in range(p.n_instances):
        N = int(rng.integers(1, p.max_depth + 1))
        bits = random_bits(N, rng)
        table = build_r(bits, sched)
        if mutate == "slope" and i == 0:
            table = _mutate_slope(table)
        worst_cont = max(worst_cont, max(table.continuity_residuals()))
        sl = np.asarray(table.slopes, dtype=float)
        worst_mono = min(worst_mono, float(np.min(np.diff(sl))))
        merged = table.merged()
        if merged.piece_count > 1:
            worst_merge = min(worst_merge, float(np.min(np.diff(np.asarray(merged.slopes)))))
        slope_lo = min(slope_lo, float(np.min(np.abs(sl))))
        slope_hi = max(slope_hi, float(np.max(np.abs(sl))))
        pieces_ok &= table.piece_count == 2 * N + 4
        r_at_zero_ok &= table(0.0) == 1.0
        xs = rng.uniform(-0.5, 1.5, size=p.dual_points)
        dual = np.abs(table.eval_batch(xs) - np.array([eval_r(bits, float(x), sched) for x in xs]))
        worst_dual = max(worst_dual, float(np.max(dual / np.maximum(1.0, np.abs(table.eval_batch(xs))))))
        hbar, x_mid = hard1d.build_hbar(bits, sched)
        hbar_zero_max = max(hbar_zero_max, float(hbar(0.0)))
        grid = rng.uniform(-1.0, 2.0, size=500)
        slack = hbar.eval_batch(grid) - (2.0 + np.abs(grid - x_mid) / 8.0)
        worst_growth = min(worst_growth, float(np.min(slack)))
    rep.add("r-continuity", worst_cont <= 1e-9, worst_cont, 1e-9, 1e-9, f"{p.n_instances} tables, N <= {p.max_depth}")
    rep.add("r-convexity", worst_mono >= -1e-12, worst_mono, 0.0, 1e-12, "slope sequence nondecreasing")
    rep.add("r-convexity-strict-merged", worst_merge > 1e-12, worst_merge, 0.0, 1e-12, "after merging collinear pieces")
    rep.add("r-slope-range", (slope_lo >= 0.125) and (slope_hi <= 1.0), slope_lo, 0.125, 0.0, f"max |slope| {slope_hi}")
    rep.add("r-piece-count", pieces_ok, float(pieces_ok), 1.0, 0.0, "2N+4 pieces")
    rep.add("r-at-zero", r_at_zero_ok, float(r_at_zero_ok), 1.0, 0.0, "r(0) = 1")
    rep.add("r-dual-representation", worst_dual <= 1e-9, worst_dual, 1e-9, 1e-9, "descent vs table")
    rep.add("hbar-at-zero", hbar_zero_max <= 3.0, hbar_zero_max, 3.0, 0.0)
    rep.add("hbar-growth", worst_growth >= -1e-9, worst_growth, 0.0, 1e-9, "hbar >= 2 + |x - x_mid|/8")

    # embedded instances
    worst_lip = 0.0
    min_f = np.inf
    min_stat = np.inf
    worst_fd = 0.0
    cap_inactive_ok = True
    for d in p.dims:
        bits = random_bits(5, rng)
        inst = build_instance(d, bits, rho=p.rho, seed=int(rng.integers(2**32)), sched=sched)
        X = rng.uniform(-3.0, 3.0, size=(p.lipschitz_pairs, d))
        X /= np.maximum(1.0, np.linalg.norm(X, axis=1, keepdims=True) / 3.0)
        Y = X + rng.normal(scale=0.5, size=X.shape)
        fx, fy = inst.eval_f_batch(X), inst.eval_f_batch(Y)
        dist = np.linalg.norm(X - Y, axis=1)
        ok = dist > 0
        worst_lip = max(worst_lip, float(np.max(np.abs(fx - fy)[ok] / dist[ok])))
        min_f = min(min_f, float(np.min(fx)))
        S = rng.uniform(-3.0, 3.0, size=(p.stationarity_points, d))
        vals = inst.eval_f_batch(S)
        norms = inst.min_subgrad_norm_batch(S)
        active = vals > 1e-6
        if np.any(active):
            min_stat = min(min_stat, float(np.min(norms[active])))
        for _ in range(p.fd_points):
            x = rng.uniform(-1.0, 2.0, size=d)
            worst_fd = max(worst_fd, _fd_gap(inst, x, p.fd_dirs, rng))
        far = inst.x_star + np.concatenate([np.zeros(d - 1), [0.4]])
        cap_inactive_ok &= inst.eval_f(far) == inst.eval_h(far)
    rep.add("f-lipschitz", worst_lip <= 1.0 + 1e-9, worst_lip, 1.0, 1e-9, f"dims {tuple(p.dims)}")
    rep.add("f-nonnegative", min_f >= 0.0, min_f, 0.0, 0.0)
    rep.add("f-stationarity", min_stat >= 0.02 - 1e-9, min_stat, 0.02, 1e-9, "min-norm subgradient where f > 1e-6")
    rep.add("f-directional-derivative", worst_fd <= 1e-4, worst_fd, 1e-4, 0.0, "forward difference vs support function")

    # engineered kink points: the forward step must stay small against the
    # cap scale 1000*mu, hence the coarser rho here
    kink_inst = build_instance(6, random_bits(3, rng), rho=0.25, seed=int(rng.integers(2**32)), sched=sched)
    kink_pts = [kink_inst.x_star.copy()]
    for off in (0.07, -0.07):
        q = kink_inst.x_star.copy()
        q[-1] += off
        kink_pts.append(q)
    for bp in kink_inst.hbar.breakpoints[1:-1]:
        q = rng.uniform(-0.5, 0.5, size=6)
        q[-1] = float(bp)
        kink_pts.append(q)
    worst_kink = max(_fd_gap(kink_inst, x, p.fd_dirs, rng) for x in kink_pts)
    rep.add("f-directional-derivative-kinks", worst_kink <= 1e-4, worst_kink, 1e-4, 0.0,
            "axis and valley-breakpoint points")
    rep.add("f-cap-inactive", cap_inactive_ok, float(cap_inactive_ok), 1.0, 0.0, "f == h off the cap cone")
    return rep


def _fd_gap(inst, x, n_dirs: int, rng, h: float = 1e-6) -> float:
    """Max gap between forward differences and the support function at x."""
    s = inst.subgrad(x)
    f0 = inst.eval_f(x)
    worst = 0.0
    for _ in range(n_dirs):
        v = rng.standard_normal(x.shape[0])
        v /= np.linalg.norm(v)
        fd = (inst.eval_f(x + h * v) - f0) / h
        worst = max(worst, abs(fd - s.support(v)))
    return worst
