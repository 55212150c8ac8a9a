"""Peak structure of the exact density at large N_A, N_B.

Same Sigma_B as exact_vs_mc.py, but N_A = 350 and N_B = 400.  Each
eigenvalue of Sigma_B then produces its own peak near N_A sA + N_B sBj.
Close pairs (2.25/2.27 and 4.05/4.13) repel: the lower maximum moves down
and the upper one moves up.  The limiting (saddle-point) density is shown for
comparison; at N = 9 it smooths neighbouring peaks together.

Run:  python demos/peak_repulsion.py
"""
import numpy as np
from scipy.signal import argrelmax

from wishart_sum import halfdeg, saddle
from wishart_sum.sampler import CovariancePair

SIGMA_B = (0.02, 0.20, 0.30, 1.50, 2.01, 2.25, 2.27, 4.05, 4.13)


def main():
    m = halfdeg.HalfDegenerateModel(9, 350, 400, 1.0, SIGMA_B)
    grid = halfdeg.auto_grid(m, 2048)
    exact = halfdeg.density(m, grid=grid)
    peaks = grid[argrelmax(exact.values)[0]]
    det = m.N_A * m.sigma_A + m.N_B * np.asarray(SIGMA_B)
    print(f"integral of the exact density: {exact.integral():.6f}")
    print(f"\n{'sigma_Bj':>8} {'N_A sA + N_B sBj':>17} {'exact max':>10} {'shift':>8}")
    for s, d, p in zip(SIGMA_B, det, peaks):
        print(f"{s:8.2f} {d:17.1f} {p:10.1f} {p - d:+8.1f}")

    pair = CovariancePair.diagonal(m.sigma_A, m.sigma_B, m.N_A, m.N_B)
    approx = saddle.density_saddle(pair, grid)
    pa = grid[argrelmax(approx.values)[0]]
    print(f"\nsaddle-point density: {pa.size} maxima at " + ", ".join(f"{p:.1f}" for p in pa))
    dist = np.min(np.abs(pa[:, None] - peaks[None, :]) / peaks[None, :], axis=1)
    print("relative distance to the nearest exact maximum: " + ", ".join(f"{d:.3f}" for d in dist))


if __name__ == "__main__":
    main()
