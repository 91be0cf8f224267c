"""Quadratic and cubic averages on Z_N: the Gauss-sum value and the product bound."""

import numpy as np

from osclab import compose as cp
from osclab import dynamics as dy

P = dy.IntPolynomial.univariate


def main():
    for N in (31, 101, 257):
        g = cp.gauss_checkpoint(N)
        print(f"N={N:4d}  sup|A_N e(x/N)| = {g['sup_abs_average']:.12f}   N^-1/2 = {g['expected']:.12f}")

    N = 101
    rng = np.random.default_rng(0)
    f = rng.standard_normal((N, N))
    f -= f.mean(axis=0, keepdims=True)
    f -= f.mean(axis=1, keepdims=True)
    squares, cubes = P([0, 0, 1]), P([0, 0, 0, 1])
    rep = cp.dz_product_bound(f, [squares, cubes])
    print(f"\nd=2, P=(m^2, m^3), N={N}: one-parameter constants {np.round(rep['constants'], 6).tolist()}")
    print(f"  deviation {rep['deviation']:.3e}  bound {rep['bound']:.3e}")
    print("  cubes permute Z_101, so the cubic multiplier vanishes off zero and both numbers are at rounding level")

    g = rng.standard_normal((N, N))
    g -= g.mean()
    probe = cp.dz_convergence_probe(g, [squares, P([0, 1])], [1, 4, 16, 64, N], epsilon=0.05)
    for M, dev in zip(probe["schedule"], probe["deviations"]):
        print(f"  M={M}: sup|A_M g - mean| = {dev:.4f}")
    print(f"  decay exponent {probe['decay_exponent']:.3f}, certified: {probe['certificate']['certified']}")


if __name__ == "__main__":
    main()
