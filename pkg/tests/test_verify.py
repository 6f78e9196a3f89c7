import numpy as np
import pytest

from nshard.embed import build_instance
from nshard.hard1d import build_1d_instance
from nshard.oracles import PerturbedGD, RandomSearch, SubgradientDescent, Trajectory, query, run
from nshard.verify import (
    SuiteParams,
    concentration_check,
    invariant_suite,
    local_decrease_certificate,
    mc_hitting,
    progress_process,
    subgradient_flow,
    wilson_interval,
)


class NormOracle:
    """||x|| with its radial gradient; 0 at the origin."""

    def value_and_subgrad(self, x):
        x = np.asarray(x, dtype=float)
        n = float(np.linalg.norm(x))
        return n, (x / n if n > 0 else np.zeros_like(x))


class FlatOracle:
    def value_and_subgrad(self, x):
        return 5.0, np.zeros_like(np.asarray(x, dtype=float))


def manual_trajectory(inst, points):
    pts = np.asarray(points, dtype=float)
    return Trajectory(
        algorithm="manual",
        seed=0,
        points=pts,
        responses=[query(inst, p) for p in pts],
        instance=inst,
    )


def test_wilson_interval_values():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0
    assert hi == pytest.approx(3.8415 / 103.8415, rel=1e-3)
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert lo == pytest.approx(1.0 - wilson_interval(50, 100)[1], abs=1e-12)
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


def test_progress_process_zero_outside():
    inst = build_1d_instance("0101")
    traj = manual_trajectory(inst, [[-0.5], [2.0], [0.5]])
    proc = progress_process(traj)
    assert list(proc.Z) == [0, 0, 0, 0]


def test_progress_process_reaches_full_depth_at_minimizer():
    inst = build_1d_instance("0101")
    traj = manual_trajectory(inst, [[0.0], [inst.x_star]])
    proc = progress_process(traj)
    assert proc.final == 4
    assert np.all(np.diff(proc.Z) >= 0)


def test_progress_process_monotone_random():
    inst = build_1d_instance("010101")
    traj = run(RandomSearch(radius=1.0), inst, np.array([0.0]), 60, seed=1)
    proc = progress_process(traj)
    assert np.all(np.diff(proc.Z) >= 0)
    assert proc.Z[0] == 0
    assert proc.final <= 6


def test_progress_process_rejects_mismatched_bits():
    inst = build_1d_instance("0101")
    traj = manual_trajectory(inst, [[0.0]])
    with pytest.raises(ValueError):
        progress_process(traj, bits="1111")


def test_progress_process_embedded_instance_uses_last_axis():
    inst = build_instance(3, "01", rho=1e-3, seed=0)
    x = np.zeros(3)
    x[-1] = float(inst.x_star[-1])
    traj = manual_trajectory(inst, [np.zeros(3), x])
    assert progress_process(traj).final == 2


def test_mc_hitting_small():
    rep = mc_hitting(RandomSearch(radius=1.0), T=20, k=4, N=5, n_runs=200, seed=0, rho=1e-4)
    assert rep.hit_freq <= 0.05
    assert rep.deep_freq <= rep.deep_bound + 3 * 0.05
    for m, st in rep.jump_stats.items():
        assert st["freq"] <= st["bound"] + 3 * st["se"]
    assert rep.jump_stats[1]["bound"] == 1.0
    assert len(rep.rows()) == 2 + 6


def test_mc_hitting_vacuous_flag():
    # 16 T / sqrt(256) = T: already vacuous at T = 1
    rep = mc_hitting(RandomSearch(), T=1, k=4, N=5, n_runs=100, seed=1, log2_inv_rho=256.0)
    assert rep.hit_bound >= 1.0
    assert rep.hit_vacuous


def test_mc_hitting_rejects_small_n():
    with pytest.raises(ValueError):
        mc_hitting(RandomSearch(), T=5, k=4, N=5, n_runs=10, rho=1e-4)
    with pytest.raises(ValueError):
        mc_hitting(RandomSearch(), T=5, k=4, N=5, n_runs=100)


def test_concentration_monotone_in_dimension():
    rng = np.random.default_rng(0)
    freqs = []
    for d in (10, 50, 200):
        hits = 0
        for _ in range(2000):
            u = rng.standard_normal(d)
            u /= np.linalg.norm(u)
            if u[0] >= 1.0 / 3.0:
                hits += 1
        freqs.append(hits / 2000)
    assert freqs[0] >= freqs[1] >= freqs[2]


def test_concentration_check_small():
    rep = concentration_check(d=120, T=15, n_runs=100, seed=3)
    assert rep.exceed_freq <= max(rep.bound, 0.02) + 0.05
    assert not rep.vacuous
    assert rep.max_alignment < 1.0 / 3.0
    rows = rep.rows()
    assert rows[0]["check"].endswith("d120")


def test_concentration_vacuous_for_small_d():
    rep = concentration_check(d=2, T=10, n_runs=100, seed=4)
    assert rep.vacuous


def test_flow_radial_decrease():
    fn = NormOracle()
    x0 = np.array([0.8, 0.0])
    res = subgradient_flow(fn, x0, delta=0.5)
    assert res.status == "ok"
    assert res.decrease == pytest.approx(0.5, abs=1e-9)
    assert np.linalg.norm(res.endpoint - x0) <= 0.5 + 10 * 0.0005
    assert res.endpoint[0] == pytest.approx(0.3, abs=1e-9)


def test_flow_overshoot_caps_at_distance_to_min():
    fn = NormOracle()
    res = subgradient_flow(fn, np.array([0.8, 0.0]), delta=1.0)
    assert res.decrease >= 0.8 - 10 * 0.001
    assert res.decrease <= 0.8 + 10 * 0.001


def test_flow_unit_speed_bound():
    fn = NormOracle()
    delta, eta = 0.7, 0.7 / 500
    res = subgradient_flow(fn, np.array([5.0, 1.0]), delta=delta, eta=eta)
    assert np.linalg.norm(res.endpoint - np.array([5.0, 1.0])) <= delta + 10 * eta


def test_flow_stalls_on_flat():
    res = subgradient_flow(FlatOracle(), np.array([1.0]), delta=0.5)
    assert res.status == "stalled"
    assert res.steps == 0


def test_flow_rejects_coarse_step():
    with pytest.raises(ValueError):
        subgradient_flow(NormOracle(), np.array([1.0]), delta=0.5, eta=0.1)
    with pytest.raises(ValueError):
        subgradient_flow(NormOracle(), np.array([1.0]), delta=1.5)


def test_certificate_on_hard_instance():
    inst = build_instance(5, "0101", rho=1e-3, seed=5)
    traj = run(PerturbedGD(), inst, np.zeros(5), 5, seed=6)
    for delta in (0.1, 0.5, 1.0):
        for t in range(traj.T):
            if traj.values[t] >= 1.0:
                cert = local_decrease_certificate(inst, traj.points[t], delta, inst.c, seed=7)
                assert cert.ok
                assert cert.witness_value < cert.start_value - delta * inst.c
                assert np.linalg.norm(cert.witness - traj.points[t]) <= delta * (1 + 1e-9)


def test_certificate_false_on_zero_plateau():
    inst = build_instance(5, "0101", rho=1e-3, seed=5)
    x = inst.x_star + 40.0 * inst.w_unit - inst.w
    assert inst.eval_f(x) == 0.0
    cert = local_decrease_certificate(inst, x, 1.0, inst.c, seed=8)
    assert not cert.ok


def test_certificate_rejects_bad_delta():
    inst = build_instance(3, "01", rho=1e-3, seed=0)
    with pytest.raises(ValueError):
        local_decrease_certificate(inst, np.zeros(3), 0.0)


@pytest.fixture(scope="module")
def suite_report():
    return invariant_suite(seed=0)


def test_invariant_suite_passes(suite_report):
    assert suite_report.all_passed, suite_report.summary()


def test_invariant_suite_check_names(suite_report):
    names = {c.name for c in suite_report.checks}
    expected = {
        "schedule-theta-range",
        "schedule-delta-range",
        "interval-nesting",
        "interval-disjointness",
        "interval-separation",
        "r-continuity",
        "r-convexity",
        "r-dual-representation",
        "f-lipschitz",
        "f-stationarity",
        "f-directional-derivative",
    }
    assert expected <= names


def test_invariant_suite_mutation_breaks_convexity():
    rep = invariant_suite(seed=0, mutate="slope", params=SuiteParams(n_instances=4))
    assert not rep.all_passed
    failed = {c.name for c in rep.failed()}
    assert "r-convexity" in failed


def test_invariant_suite_rejects_unknown_mutation():
    with pytest.raises(ValueError):
        invariant_suite(mutate="values")


def test_report_writers(tmp_path, suite_report):
    cp = tmp_path / "report.csv"
    jp = tmp_path / "report.jsonl"
    suite_report.write_csv(cp)
    suite_report.write_jsonl(jp)
    lines = cp.read_text().splitlines()
    assert lines[0] == "check,passed,measured,bound,tol,detail"
    assert len(lines) == len(suite_report.checks) + 1
    import json

    recs = [json.loads(l) for l in jp.read_text().splitlines()]
    assert len(recs) == len(suite_report.checks)
    assert all(r["passed"] for r in recs)
    text = suite_report.summary()
    assert "checks passed" in text
