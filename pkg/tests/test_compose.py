import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from osclab import compose as cp
from osclab import dynamics as dy
from osclab import projections as pj
from osclab.seminorms import DomainError, ParamFamily, diagonal_embed, oscillation, sup_oscillation_multiparam

P = dy.IntPolynomial.univariate


def martingale_pair(K=4):
    return cp.ComposedFamily([cp.ProjectionFactor(pj.MartingaleFamily(K), 0, 2),
                              cp.ProjectionFactor(pj.MartingaleFamily(K), 1, 2)])


def average_pair(N=23, top=8):
    return cp.ComposedFamily([cp.AverageFactor(P([0, 1]), (-1, 0), N, range(1, top + 1)),
                              cp.AverageFactor(P([0, 0, 1]), (0, -1), N, range(1, top + 1))])


def test_identity_factor_reduces_to_first_factor():
    fam1 = pj.CutoffFamily(16)
    fam = cp.ComposedFamily([cp.ProjectionFactor(fam1, 0, 1), cp.IdentityFactor([0, 1, 2])])
    rng = np.random.default_rng(0)
    f = rng.standard_normal(16)
    assert np.array_equal(fam.apply((3, 1), f), fam1.apply(3, f))


def test_identity_factor_degeneration_is_bit_identical():
    base = pj.MartingaleFamily(5)
    fam = cp.ComposedFamily([cp.ProjectionFactor(base, 0, 1), cp.IdentityFactor([0, 1, 2, 3])])
    rng = np.random.default_rng(1)
    f = rng.standard_normal(32)
    one = base.oscillation_field(f, [0, 2, 5], 2)
    two = cp.multiparam_oscillation_field(fam, f, [(0, 0), (2, 1), (5, 3)], 2)
    assert np.array_equal(one, two)


def test_factor_order_does_not_matter():
    rng = np.random.default_rng(2)
    N = 17
    a = cp.AverageFactor(P([0, 1]), (-1, 0), N, range(1, 6))
    b = cp.AverageFactor(P([0, 0, 1]), (0, -1), N, range(1, 6))
    f = rng.standard_normal((N, N))
    ab = cp.ComposedFamily([a, b]).apply((3, 4), f)
    ba = cp.ComposedFamily([b, a]).apply((4, 3), f)
    assert np.max(np.abs(ab - ba)) <= 1e-12


def test_noncommuting_factors_rejected():
    rng = np.random.default_rng(3)
    Q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
    system = pj.OrthonormalSystem(Q.T)
    with pytest.raises(cp.NonCommutingError):
        cp.ComposedFamily([cp.ProjectionFactor(pj.CutoffFamily(8), 0, 1),
                           cp.ProjectionFactor(pj.PartialSumFamily(system), 0, 1)])


def test_mismatched_spaces_rejected():
    with pytest.raises(DomainError):
        cp.ComposedFamily([cp.ProjectionFactor(pj.MartingaleFamily(3), 0, 1),
                           cp.ProjectionFactor(pj.MartingaleFamily(4), 0, 1)])


def test_composition_matches_direct_double_sum():
    rng = np.random.default_rng(4)
    N = 19
    for _ in range(10):
        M1, M2 = (int(v) for v in rng.integers(1, 10, 2))
        f1 = cp.AverageFactor(P([0, 1]), (-1, 0), N, [M1])
        f2 = cp.AverageFactor(P([0, 0, 1]), (0, -1), N, [M2])
        h = rng.standard_normal((N, N))
        composed = cp.ComposedFamily([f1, f2]).apply((M1, M2), h)
        direct = dy.ergodic_average(dy.LatticeFunction(h, "cyclic"),
                                    dy.product_spec([f1.spec(M1), f2.spec(M2)]), "direct").values
        assert np.max(np.abs(composed - direct)) <= 1e-12


def test_telescoping_identity_vacuous_case():
    fam = martingale_pair()
    f = np.random.default_rng(5).standard_normal(fam.shape)
    rep = cp.telescoping_identity_check(fam, (2, 3), (2, 3), f)
    assert rep["lhs_max"] == 0.0 and rep["max_deviation"] == 0.0


def test_telescoping_identity_martingales_and_averages():
    rng = np.random.default_rng(6)
    fam = martingale_pair(6)
    f = rng.standard_normal(fam.shape)
    assert cp.telescoping_identity_check(fam, (5, 6), (1, 2), f)["max_deviation"] <= 1e-12
    avg = average_pair(101, 6)
    g = rng.standard_normal(avg.shape)
    assert cp.telescoping_identity_check(avg, (6, 5), (2, 1), g)["max_deviation"] <= 1e-11
    with pytest.raises(DomainError):
        cp.telescoping_identity_check(avg, (1, 5), (2, 1), g)


def test_multiparam_oscillation_constant_and_invariant_inputs():
    fam = average_pair()
    assert cp.multiparam_oscillation(fam, np.full(fam.shape, 2.5), [(1, 1), (3, 3), (8, 8)]).value <= 1e-14
    rng = np.random.default_rng(7)
    f = rng.standard_normal(fam.shape)
    assert cp.multiparam_oscillation(fam, f, [(1, 1), (4, 2), (8, 8)]).value > 0


def test_multiparam_oscillation_matches_pointwise_seminorm():
    fam = martingale_pair(3)
    rng = np.random.default_rng(8)
    f = rng.standard_normal(fam.shape)
    seq = [(0, 1), (2, 2), (3, 3)]
    field = cp.multiparam_oscillation_field(fam, f, seq, 2)
    pts, stack = fam.grid_stack(f)
    for x in [(0, 0), (3, 5), (7, 7)]:
        pf = ParamFamily(pts, np.array([s[x] for s in stack]))
        assert field[x] == pytest.approx(oscillation(pf, seq, 2).value, rel=1e-13)


def test_chain_check_needs_positive_factors():
    fam = cp.ComposedFamily([cp.ProjectionFactor(pj.CutoffFamily(8), 0, 2),
                             cp.ProjectionFactor(pj.CutoffFamily(8), 1, 2)])
    with pytest.raises(DomainError):
        cp.multiparam_chain_check(fam, np.zeros(fam.shape), [(0, 0), (2, 2)])
    mart = martingale_pair(4)
    rep = cp.multiparam_chain_check(mart, np.random.default_rng(9).standard_normal(mart.shape),
                                    [(0, 0), (2, 1), (4, 4)])
    assert rep["max_excess"] <= 1e-12


def test_gauss_checkpoint():
    g = cp.gauss_checkpoint(101)
    assert g["deviation"] <= 1e-10
    assert cp.gauss_checkpoint(31, xi=5)["deviation"] <= 1e-10


def test_dz_probe_constant_function():
    rep = cp.dz_convergence_probe(np.full((13, 13), 4.0), [P([0, 0, 1]), P([0, 0, 0, 1])], [13, 26])
    assert max(rep["deviations"]) <= 1e-13


def test_dz_probe_one_dimensional_character():
    N = 101
    f = np.exp(2j * np.pi * np.arange(N) / N)
    rep = cp.dz_convergence_probe(f, [P([0, 0, 1])], [N])
    assert rep["deviations"][0] == pytest.approx(N**-0.5, abs=1e-12)


def test_dz_product_bound_holds_for_fiber_mean_zero():
    rng = np.random.default_rng(10)
    N = 31
    f = rng.standard_normal((N, N))
    f -= f.mean(axis=0, keepdims=True)
    f -= f.mean(axis=1, keepdims=True)
    rep = cp.dz_product_bound(f, [P([0, 0, 1]), P([0, 0, 0, 1])])
    assert rep["deviation"] <= rep["bound"] * (1 + 1e-9) + 1e-15


def test_dz_certificate_reported():
    rng = np.random.default_rng(11)
    f = rng.standard_normal((13, 13))
    f -= f.mean()
    rep = cp.dz_convergence_probe(f, [P([0, 1]), P([0, 0, 1])], [1, 2, 4, 13, 26], epsilon=10.0)
    assert rep["certificate"]["certified"]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.data())
def test_telescoping_identity_property(seed, data):
    fam = martingale_pair(4)
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(fam.shape)
    I_j = (data.draw(st.integers(0, 4)), data.draw(st.integers(0, 4)))
    n = (data.draw(st.integers(I_j[0], 4)), data.draw(st.integers(I_j[1], 4)))
    assert cp.telescoping_identity_check(fam, n, I_j, f)["relative_deviation"] <= 1e-11


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_diagonal_oscillation_below_grid_sup(seed):
    fam = martingale_pair(2)
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(fam.shape)
    pts, stack = fam.grid_stack(f)
    x = (int(rng.integers(4)), int(rng.integers(4)))
    pf = ParamFamily(pts, np.array([s[x] for s in stack]))
    sup = sup_oscillation_multiparam(pf, 2).value
    assert oscillation(pf, diagonal_embed([0, 1, 2], 2), 2).value <= sup + 1e-12
