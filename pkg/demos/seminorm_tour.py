"""Seminorms of a few small families, with the chains that realize them."""

from fractions import Fraction

import numpy as np

from osclab import seminorms as sm
from osclab.seminorms import ParamFamily


def show(label, fam, r=2.0, lam=0.5):
    print(f"\n{label}: values {np.round(fam.values, 3).tolist()}")
    v = sm.variation(fam, r)
    print(f"  V^{r:g}               = {v.value:.4f}  via {v.witness}")
    s = sm.sup_oscillation(fam, r)
    print(f"  sup oscillation     = {s.value:.4f}  via {s.witness}")
    print(f"  N_lambda ({lam:g})      = {sm.jump_count(fam, lam).value:.0f}")
    print(f"  overlapping N ({lam:g}) = {sm.overlap_jump_count(fam, lam).value:.0f}")


def main():
    show("alternating", ParamFamily.from_sequence([0, 1, 0, 1, 0]))
    show("monotone ramp", ParamFamily.from_sequence([0, 1, 2, 3]), r=1)
    rng = np.random.default_rng(1)
    walk = np.cumsum(rng.standard_normal(10)) / 3
    show("random walk on rational times", ParamFamily([Fraction(k, 3) for k in range(10)], walk))

    fam = ParamFamily.from_sequence([0.0, 3.0, 1.0, 2.0, 0.5])
    for seq in ([0, 2, 4], [0, 1, 2, 3, 4], [0, 4]):
        print(f"\noscillation along {seq}: {sm.oscillation(fam, seq, 2).value:.4f}")

    axis = list(range(1, 9))
    grid = ParamFamily.from_grid([axis, axis], [[1 / (a * b) for b in axis] for a in axis])
    cert = sm.convergence_certificate(grid, 0.1)
    print(f"\n1/(t1 t2) on [1..8]^2 settles within 0.1 from level {cert.N}")
    print(f"two-parameter sup oscillation: {sm.sup_oscillation_multiparam(grid, 2).value:.4f}")


if __name__ == "__main__":
    main()
