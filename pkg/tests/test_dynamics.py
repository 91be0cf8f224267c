import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from osclab import dynamics as dy
from osclab.seminorms import DomainError

P = dy.IntPolynomial.univariate


def test_polynomial_basics():
    p = P([1, 2, 0, 3])
    assert p.degree == 3
    assert p(2) == 1 + 4 + 24
    q = dy.IntPolynomial.from_json(p.to_json(), num_vars=1)
    assert q(5) == p(5)
    big = P([0, 0, 0, 0, 0, 0, 0, 1])
    vals = big.evaluate_box((500,))
    assert int(vals[-1]) == 500**7


def test_polynomial_mod_matches_exact():
    p = P([3, -5, 0, 7])
    exact = np.array([p(m) for m in range(1, 40)], dtype=object)
    assert list(p.evaluate_box_mod((39,), 101)) == [int(v % 101) for v in exact]


def test_delta_translates():
    f = dy.LatticeFunction.delta((0,))
    a = dy.ergodic_average(f, dy.AverageSpec([P([0, 1])], (3,)))
    assert [a((x,)) for x in range(-1, 5)] == pytest.approx([0, 0, 1 / 3, 1 / 3, 1 / 3, 0])
    b = dy.ergodic_average(f, dy.AverageSpec([P([0, 0, 1])], (2,)))
    assert b((1,)) == pytest.approx(0.5) and b((4,)) == pytest.approx(0.5)
    assert b.total() == pytest.approx(1.0)


def test_two_dimensional_delta():
    f = dy.LatticeFunction.delta((0, 0))
    a = dy.ergodic_average(f, dy.AverageSpec([P([0, 1]), P([0, 0, 1])], (2,)))
    assert a((1, 1)) == pytest.approx(0.5) and a((2, 4)) == pytest.approx(0.5)
    assert a.total() == pytest.approx(1.0)


def test_exact_rationals_with_object_arrays():
    f = dy.LatticeFunction(np.array([Fraction(1), Fraction(2)], dtype=object))
    a = dy.ergodic_average(f, dy.AverageSpec([P([0, 1])], (3,)))
    assert all(isinstance(v, Fraction) for v in a.values)
    assert a.total() == Fraction(3)


@pytest.mark.parametrize("strategy", ["direct", "sparse", "fft"])
def test_strategies_agree(strategy):
    rng = np.random.default_rng(4)
    f = dy.LatticeFunction.cyclic(rng.standard_normal(53))
    spec = dy.AverageSpec([P([0, 1, 2])], (9,))
    ref = dy.ergodic_average(f, spec, "direct")
    assert dy.max_deviation(dy.ergodic_average(f, spec, strategy), ref) <= 1e-13


def test_cyclic_two_dimensional_average_matches_loop():
    rng = np.random.default_rng(1)
    N = 11
    vals = rng.standard_normal((N, N))
    spec = dy.AverageSpec([P([0, 1]), P([0, 0, 1])], (4,))
    out = dy.ergodic_average(dy.LatticeFunction.cyclic(vals), spec).values
    ref = np.zeros_like(vals)
    for m in range(1, 5):
        ref += np.roll(vals, (m, m * m), axis=(0, 1))
    assert np.max(np.abs(out - ref / 4)) <= 1e-13


def test_empty_box_rejected():
    with pytest.raises(DomainError):
        dy.ergodic_average(dy.LatticeFunction.delta((0,)), dy.AverageSpec([P([0, 1])], (0,)))


def test_multiparam_average_is_composition():
    rng = np.random.default_rng(2)
    N = 13
    f = dy.LatticeFunction.cyclic(rng.standard_normal((N, N)))
    s1 = dy.AverageSpec([P([0, 1])], (3,), [(-1, 0)])
    s2 = dy.AverageSpec([P([0, 0, 1])], (4,), [(0, -1)])
    direct = dy.ergodic_average(f, dy.product_spec([s1, s2]), "direct")
    composed = dy.multiparam_average(f, [s1, s2])
    assert dy.max_deviation(direct, composed) <= 1e-12


def test_telescoping_frozen():
    rep = dy.telescoping_check(dy.LatticeFunction.delta((0,)), (1,), 4)
    assert rep.max_deviation == 0.0
    rep = dy.telescoping_check(dy.LatticeFunction.cyclic(np.full(7, 3.0)), (1,), 5)
    assert rep.max_deviation == 0.0 and np.max(np.abs(rep.lhs.values)) == 0.0
    rng = np.random.default_rng(0)
    rep = dy.telescoping_check(dy.LatticeFunction.cyclic(rng.standard_normal(101)), (1,), 10)
    assert rep.max_deviation <= 1e-13


def test_birkhoff_decomposition():
    N = 16
    x = np.arange(N)
    ch = dy.LatticeFunction.cyclic(np.exp(2j * np.pi * x / N))
    dec = dy.birkhoff_decomposition(ch, (1,))
    assert np.max(np.abs(dec.invariant.values)) <= 1e-12
    assert dec.residual <= 1e-10
    # shift by 4 on Z_16 has orbits of length 4; orbit-constant functions are invariant
    inv = dy.LatticeFunction.cyclic(np.tile([1.0, -2.0, 0.5, 3.0], 4))
    dec = dy.birkhoff_decomposition(inv, (4,))
    assert np.max(np.abs(dec.invariant.values - inv.values)) <= 1e-12
    assert np.max(np.abs(dec.coboundary.values)) <= 1e-12


def test_averages_converge_to_invariant_part():
    rng = np.random.default_rng(3)
    f = dy.LatticeFunction.cyclic(rng.standard_normal(24))
    dec = dy.birkhoff_decomposition(f, (6,))
    spec = dy.AverageSpec([P([0, 1])], (400,), [(6,)])
    assert np.max(np.abs(dy.ergodic_average(f, spec).values - dec.invariant.values)) <= 1e-12


def test_average_family_running_sum_matches_direct():
    rng = np.random.default_rng(5)
    f = dy.LatticeFunction.cyclic(rng.standard_normal(29))
    spec = dy.AverageSpec([P([0, 0, 1])], (1,))
    Ms = [1, 2, 5, 9, 20]
    fam = dy.average_family(f, spec, Ms)
    for i, M in enumerate(Ms):
        assert dy.max_deviation(fam.field(i), dy.ergodic_average(f, spec.with_M((M,)), "direct")) <= 1e-13
    pf = fam.at((3,))
    assert len(pf) == len(Ms)
    with pytest.raises(DomainError):
        dy.average_family(f, spec, [3, 2])


def test_average_family_on_small_cyclic_group():
    # delta on Z_8, P(m) = m: A_M f(0) vanishes until the orbit wraps around
    f = dy.LatticeFunction.delta((0,), kind="cyclic", N=8)
    fam = dy.average_family(f, dy.AverageSpec([P([0, 1])], (1,)), [1, 2, 4, 8])
    assert list(fam.at((0,)).values) == pytest.approx([0, 0, 0, 0.125])


def test_lacunary():
    assert dy.lacunary(1.5, 100) == [1, 2, 3, 5, 7, 11, 17, 25, 38, 57, 86]
    assert dy.lacunary(2, 40) == [1, 2, 4, 8, 16, 32]
    with pytest.raises(DomainError):
        dy.lacunary(1, 10)


def test_multiplier_of_squares_is_gauss_sum():
    N = 101
    mult = dy.average_multiplier(dy.AverageSpec([P([0, 0, 1])], (N,)), N)
    assert np.max(np.abs(np.abs(mult[1:]) - N**-0.5)) <= 1e-12
    assert mult[0] == pytest.approx(1.0)


def test_json_roundtrip():
    rng = np.random.default_rng(0)
    f = dy.LatticeFunction.cyclic(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    g = dy.LatticeFunction.from_json(json.dumps(f.to_json()))
    assert dy.max_deviation(f, g) == 0.0
    spec = dy.AverageSpec([P([0, 1]), P([0, 0, 1])], (3,))
    again = dy.AverageSpec.from_json(json.dumps(spec.to_json()))
    assert again.M == spec.M and again.d == 2


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 40), st.integers(1, 30), st.lists(st.integers(-4, 4), min_size=1, max_size=4))
def test_average_preserves_mean_and_contracts(N, M, coeffs):
    rng = np.random.default_rng(N * 1000 + M)
    f = dy.LatticeFunction.cyclic(rng.standard_normal(N))
    a = dy.ergodic_average(f, dy.AverageSpec([P([0] + coeffs)], (M,)))
    assert np.mean(a.values) == pytest.approx(np.mean(f.values), abs=1e-12)
    assert np.max(np.abs(a.values)) <= np.max(np.abs(f.values)) + 1e-12
    assert a.norm(2) <= f.norm(2) + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(5, 60), st.integers(1, 50), st.integers(1, 59))
def test_telescoping_identity_property(N, M, step):
    rng = np.random.default_rng(N + 97 * M)
    g = dy.LatticeFunction.cyclic(rng.standard_normal(N))
    assert dy.telescoping_check(g, (step % N or 1,), M).relative_deviation <= 1e-13
