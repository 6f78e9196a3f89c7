"""Walk through the one-dimensional construction.

Build the random piecewise-affine hard function for a few bit strings, print
its piece structure, verify the headline numbers by hand, and dump a profile
CSV that can be plotted with any tool.
"""

import os

import numpy as np

from nshard import (
    DEFAULT_SCHEDULE,
    build_hbar,
    build_r,
    eval_r,
    interval,
    locate,
    write_profile_csv,
)

OUT = os.path.join(os.path.dirname(__file__), "out")


def main():
    os.makedirs(OUT, exist_ok=True)
    s = DEFAULT_SCHEDULE

    print("== schedule ==")
    for i in range(1, 6):
        base, shift = s.theta(i)
        print(f"  level {i}: theta_base={base:.6f} shift={shift:.6f} "
              f"delta={s.delta(i):.6f} epsilon={s.epsilon(i):.6f} cot={s.cot_base(i):.6f}")
    print(f"  deltas stay in (0, 7/32], slopes (cotangents) in [1/8, 1]")

    print("\n== nested intervals ==")
    for bits in ("0", "01", "0110"):
        iv = interval(bits)
        print(f"  prefix {bits!r}: ({iv.lo:.10f}, {iv.hi:.10f}) width {iv.width:.3e}")
    print(f"  locate(0.5, '0110') = {locate(0.5, '0110')} (the gap between the two depth-1 intervals)")
    mid = interval("0110").mid
    print(f"  locate(midpoint, '0110') = {locate(mid, '0110')}")

    print("\n== hard function tables ==")
    for bits in ("10", "0101"):
        r = build_r(bits)
        print(f"  bits {bits!r}: {r.piece_count} pieces, r(0)={r(0.0)}, r(-2)={r(-2.0)}, r(2)={r(2.0)}")
        print(f"    slopes: {[round(float(x), 5) for x in r.slopes]}")
        hbar, x_star = build_hbar(bits)
        print(f"    shifted: min {hbar(x_star)} at x*={x_star:.10f}, value at 0: {hbar(0.0):.6f}")

    print("\n== dual representation spot check ==")
    rng = np.random.default_rng(0)
    bits = "0110101"
    table = build_r(bits)
    xs = rng.uniform(-0.5, 1.5, size=5)
    for x in xs:
        print(f"  x={x:+.6f}: table {table(float(x)):.12f}  descent {eval_r(bits, float(x)):.12f}")

    hbar, _ = build_hbar("01011")
    path = os.path.join(OUT, "hbar_profile.csv")
    write_profile_csv(path, hbar)
    print(f"\nwrote {path} (columns x, value, lo_slope, hi_slope)")


if __name__ == "__main__":
    main()
