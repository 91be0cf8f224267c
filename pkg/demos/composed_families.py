"""Two-parameter families built from commuting one-parameter pieces."""

import numpy as np

from osclab import compose as cp
from osclab import dynamics as dy
from osclab import projections as pj

P = dy.IntPolynomial.univariate


def main():
    rng = np.random.default_rng(3)
    K = 5
    mart = cp.ComposedFamily([cp.ProjectionFactor(pj.MartingaleFamily(K), 0, 2),
                              cp.ProjectionFactor(pj.MartingaleFamily(K), 1, 2)])
    f = rng.standard_normal(mart.shape)
    seq = [(0, 0), (1, 2), (3, 3), (5, 5)]
    osc = cp.multiparam_oscillation(mart, f, seq)
    chain = cp.multiparam_chain_check(mart, f, seq)
    print(f"dyadic martingales in both axes of a {mart.shape} grid")
    print(f"  oscillation along {seq}: {osc.value:.4f}  (||f||_2 = {np.sqrt(np.mean(f**2)):.4f})")
    print(f"  box sup against axis-by-axis bound: worst excess {chain['max_excess']:.2e}")
    tele = cp.telescoping_identity_check(mart, (4, 5), (1, 2), f)
    print(f"  telescoping identity deviation: {tele['max_deviation']:.2e}")

    N = 41
    avg = cp.ComposedFamily([cp.AverageFactor(P([0, 1]), (-1, 0), N, range(1, 11)),
                             cp.AverageFactor(P([0, 0, 1]), (0, -1), N, range(1, 11))])
    g = rng.standard_normal(avg.shape)
    print(f"\nlinear x quadratic averages on Z_{N}^2, commutation defect {avg.check_commutation():.2e}")
    for J in (1, 2, 4, 8):
        pts = np.linspace(1, 10, J + 1).astype(int)
        seq = [(int(a), int(a)) for a in pts]
        print(f"  J={J}: diagonal oscillation {cp.multiparam_oscillation(avg, g, seq).value:.4f}")


if __name__ == "__main__":
    main()
