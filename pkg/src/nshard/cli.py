"""Command-line surface: build instances, run algorithms, certify, experiment.

All randomness flows from one root seed: each command derives independent
streams via numpy SeedSequence.spawn in a fixed order (bit string, cap
vector, algorithm, certificates), so identical configs replay bit-identically.
Data files carry no timestamps.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from .embed import build_h, build_instance, save_instance
from .hard1d import schedule_params, write_profile_csv
from .intervals import bits_to_str, random_bits
from .oracles import make_algorithm, run
from .schedule import AngleSchedule
from .verify import (
    concentration_check,
    invariant_suite,
    local_decrease_certificate,
    mc_hitting,
    progress_process,
)

DEFAULTS = {
    "mode": "desk",
    "T": 30,
    "d": 10,
    "gamma": 1.0,
    "k": 4,
    "rho": 1e-3,
    "algo": "pgd",
    "eta": 0.1,
    "noise": 0.01,
    "runs": 200,
    "seed": 0,
    "out": ".",
    "precision": "binary64",
    "delta": 1.0,
    "resolution": 0.25,
    "radius": 1.0,
}


@dataclass
class RunConfig:
    mode: str
    T: int
    d: int
    gamma: float
    k: int
    rho: float
    algo: str
    eta: float
    noise: float
    runs: int
    seed: int
    out: str
    precision: str
    delta: float
    resolution: float
    radius: float
    mutate: bool = False


def _resolve_config(args) -> RunConfig:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["T"] = int(cfg["T"])
    cfg["d"] = int(cfg["d"])
    cfg["k"] = int(cfg["k"])
    cfg["runs"] = int(cfg["runs"])
    cfg["seed"] = int(cfg["seed"])
    return RunConfig(mutate=bool(getattr(args, "mutate", False)), **cfg)


def _require_out(cfg: RunConfig) -> str:
    if not os.path.isdir(cfg.out):
        raise FileNotFoundError(f"output directory does not exist: {cfg.out}")
    return cfg.out


def _params(cfg: RunConfig):
    if cfg.mode == "theory":
        return schedule_params(T=cfg.T, gamma=cfg.gamma, mode="theory")
    return schedule_params(mode="desk", k=cfg.k, rho=cfg.rho)


def _instance(cfg: RunConfig):
    """Instance derived from the root seed: spawn order is (bits, cap)."""
    params = _params(cfg)
    sched = AngleSchedule(cfg.precision)
    bits_ss, w_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    bits = random_bits(params.N, np.random.default_rng(bits_ss))
    if cfg.mode == "theory":
        # rho exists only in log space here; the cap cannot be represented.
        inst = build_h(cfg.d, bits, sched)
    else:
        inst = build_instance(cfg.d, bits, cfg.rho, seed=int(w_ss.generate_state(1)[0]), sched=sched)
    return inst, params


def _write_config(cfg: RunConfig, params, path) -> None:
    payload = asdict(cfg)
    payload.update({"log2_inv_rho": params.log2_inv_rho, "resolved_k": params.k, "resolved_N": params.N})
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def cmd_build(cfg: RunConfig) -> int:
    out = _require_out(cfg)
    inst, params = _instance(cfg)
    save_instance(inst, os.path.join(out, "instance.txt"))
    write_profile_csv(os.path.join(out, "hbar_profile.csv"), inst.hbar)
    _write_slices(inst, os.path.join(out, "f_slices.csv"))
    _write_config(cfg, params, os.path.join(out, "config.json"))
    cap = "capped" if inst.has_cap else "cap-free"
    print(f"built {cap} instance: d={inst.d} N={len(inst.bits)} bits={bits_to_str(inst.bits)} "
          f"k={params.k} log2(1/rho)={params.log2_inv_rho:g}")
    return 0


def _write_slices(inst, path, n: int = 2001) -> None:
    xs = np.linspace(-1.0, 2.0, n)
    last = np.tile(inst.x_star, (n, 1))
    last[:, -1] = xs
    first = np.tile(inst.x_star, (n, 1))
    first[:, 0] = xs
    f_last = inst.eval_f_batch(last)
    f_first = inst.eval_f_batch(first)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["coord", "f_along_last_axis", "f_along_first_axis"])
        for x, a, b in zip(xs, f_last, f_first):
            w.writerow([repr(float(x)), repr(float(a)), repr(float(b))])


def cmd_check(cfg: RunConfig) -> int:
    out = _require_out(cfg)
    report = invariant_suite(seed=cfg.seed, mutate="slope" if cfg.mutate else None,
                             sched=AngleSchedule(cfg.precision))
    report.write_csv(os.path.join(out, "report.csv"))
    report.write_jsonl(os.path.join(out, "report.jsonl"))
    print(report.summary())
    return 0 if report.all_passed else 1


def cmd_run(cfg: RunConfig) -> int:
    out = _require_out(cfg)
    inst, params = _instance(cfg)
    algo_kwargs = {
        "sgd": {"eta0": cfg.eta},
        "pgd": {"eta0": cfg.eta, "noise_scale": cfg.noise},
        "random": {"radius": cfg.radius},
        "grid": {"resolution": cfg.resolution},
    }.get(cfg.algo, {})
    algo = make_algorithm(cfg.algo, **algo_kwargs)
    algo_ss, cert_ss = np.random.SeedSequence(cfg.seed).spawn(4)[2:]
    traj = run(algo, inst, np.zeros(inst.d), cfg.T, seed=int(algo_ss.generate_state(1)[0]))
    proc = progress_process(traj)
    certified, witness_vals = [], []
    cert_seed = int(cert_ss.generate_state(1)[0])
    for t in range(traj.T):
        if cfg.delta > 0:
            cert = local_decrease_certificate(inst, traj.points[t], cfg.delta, inst.c, seed=cert_seed + t)
            certified.append(int(cert.ok))
            witness_vals.append(cert.witness_value)
        else:
            certified.append(-1)
            witness_vals.append(float("nan"))
    traj.write_jsonl(os.path.join(out, "trajectory.jsonl"))
    traj.write_summary_csv(
        os.path.join(out, "summary.csv"),
        extra_columns={
            "f_ge_1": [int(v >= 1.0) for v in traj.values],
            "depth": [int(z) for z in proc.Z[1:]],
            "certified": certified,
            "witness_value": witness_vals,
        },
    )
    _write_config(cfg, params, os.path.join(out, "config.json"))
    n_cert = sum(1 for c in certified if c == 1)
    print(f"ran {cfg.algo} for T={cfg.T}: min f={traj.values.min():.6g} "
          f"final depth={proc.final} certified={n_cert}/{traj.T}")
    return 0


def cmd_mc(cfg: RunConfig) -> int:
    out = _require_out(cfg)
    params = _params(cfg)
    algo = make_algorithm(cfg.algo, **({"eta0": cfg.eta, "noise_scale": cfg.noise} if cfg.algo == "pgd" else {}))
    hit_ss, conc_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    hit = mc_hitting(
        algo,
        T=cfg.T,
        k=params.k,
        N=params.N,
        n_runs=cfg.runs,
        seed=int(hit_ss.generate_state(1)[0]),
        log2_inv_rho=params.log2_inv_rho,
        sched=AngleSchedule(cfg.precision),
    )
    conc = concentration_check(
        d=cfg.d,
        T=cfg.T,
        n_runs=cfg.runs,
        seed=int(conc_ss.generate_state(1)[0]),
        algorithm=algo,
        N=params.N,
        sched=AngleSchedule(cfg.precision),
    )
    rows = hit.rows() + conc.rows()
    with open(os.path.join(out, "mc_report.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check", "estimate", "wilson_lo", "wilson_hi", "bound", "vacuous"])
        for r in rows:
            w.writerow([r["check"], repr(r["estimate"]), repr(r["wilson_lo"]),
                        repr(r["wilson_hi"]), repr(r["bound"]), int(r["vacuous"])])
    with open(os.path.join(out, "mc_report.jsonl"), "w") as fh:
        for r in rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    _write_config(cfg, params, os.path.join(out, "config.json"))
    for r in rows:
        flag = " (vacuous bound)" if r["vacuous"] else ""
        print(f"{r['check']}: estimate={r['estimate']:.6g} bound={r['bound']:.6g}{flag}")
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its entries")
    p.add_argument("--mode", choices=["theory", "desk"])
    p.add_argument("--T", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--algo", choices=["sgd", "pgd", "random", "grid"])
    p.add_argument("--eta", type=float)
    p.add_argument("--noise", type=float)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--precision", choices=["binary64", "extended"])
    p.add_argument("--delta", type=float)
    p.add_argument("--resolution", type=float)
    p.add_argument("--radius", type=float)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nshard", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("build", "check", "run", "mc"):
        sp = sub.add_parser(name)
        _add_common(sp)
        if name == "check":
            sp.add_argument("--mutate", action="store_true", help="inject a slope fault (suite must fail)")
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        handler = {"build": cmd_build, "check": cmd_check, "run": cmd_run, "mc": cmd_mc}[args.command]
        return handler(cfg)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
