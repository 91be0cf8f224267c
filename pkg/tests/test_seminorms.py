import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from osclab import seminorms as sm
from osclab.seminorms import DomainError, IncreasingSequence, ParamFamily


def fam(values):
    return ParamFamily.from_sequence([float(v) for v in values])


# ---------------------------------------------------------------------------
# frozen values
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("values, r, expected", [
    ((1, 1, 1, 1), 2, 0.0),
    ((0, 1), 2, 1.0),
    ((0, 1, 0, 1, 0), 2, 2.0),
    ((0, 1, 2), 2, 2.0),
    ((0, 1, 0), 1, 2.0),
    ((3, 3), 5, 0.0),
])
def test_variation_frozen(values, r, expected):
    assert sm.variation(fam(values), r).value == pytest.approx(expected, abs=1e-15)
    assert sm.variation_bruteforce(fam(values), r).value == pytest.approx(expected, abs=1e-15)


def test_variation_witness_realizes_value():
    f = fam([0, 3, 1, 4, 1, 5, 9, 2, 6])
    v = sm.variation(f, 2)
    pts = [f.position(Fraction(w)) for w in v.witness]
    vals = f.values[pts]
    assert math.sqrt(np.sum(np.diff(vals) ** 2)) == pytest.approx(v.value, rel=1e-14)


def test_variation_errors():
    with pytest.raises(DomainError):
        sm.variation(fam([0, 1]), 0.5)
    with pytest.raises(DomainError):
        ParamFamily.from_sequence([1.0])
    with pytest.raises(DomainError):
        sm.variation_bruteforce(fam(range(21)), 2)


def test_oscillation_frozen():
    f = ParamFamily([0, 1, 2, 3], [0.0, 1.0, 0.0, 2.0])
    assert sm.oscillation(f, [0, 2, 3], 2).value == pytest.approx(1.0)
    # blocks are half-open: the value at I_{j+1} belongs to the next block
    g = fam([0, 0, 5, 0])
    assert sm.oscillation(g, [0, 2, 3], 2).value == 0.0
    assert sm.oscillation(fam([0, 1, 0, 1, 0]), [0, 2, 4], 2).value == pytest.approx(math.sqrt(2))


def test_oscillation_single_block_and_constant():
    f = fam([2, -1, 4, 0, 7])
    expected = np.max(np.abs(f.values[:4] - f.values[0]))
    assert sm.oscillation(f, [0, 4], 3).value == pytest.approx(expected)
    assert sm.oscillation(fam([5] * 6), [0, 2, 5], 1.5).value == 0.0


def test_oscillation_empty_block_contributes_zero():
    f = fam([0, 3, 1, 2])
    assert sm.oscillation(f, [0, 2, 3], 2, subdomain=[0, 3]).value == 0.0


def test_oscillation_rejects_non_strict_sequences():
    with pytest.raises(DomainError):
        sm.oscillation(fam([0, 1, 2]), [0, 1, 1], 2)
    with pytest.raises(DomainError):
        IncreasingSequence([(0, 0), (1, 0)])
    with pytest.raises(DomainError):
        IncreasingSequence([3])


def test_oscillation_rational_indices():
    f = ParamFamily([Fraction(1, 3), Fraction(1, 2), Fraction(2, 3)], [0.0, 2.0, 1.0])
    assert sm.oscillation(f, ["1/3", "2/3"], 2).value == pytest.approx(2.0)


@pytest.mark.parametrize("values, r, expected", [
    ((0, 1, 0, 1), 2, 1.0),
    ((0, 1, 2, 3), 1, 2.0),
    ((4, 4, 4), 2, 0.0),
])
def test_sup_oscillation_frozen(values, r, expected):
    # half-open blocks [I_j, I_{j+1}) give 1 and 2 for the first two rows
    assert sm.sup_oscillation(fam(values), r, J_max=3).value == pytest.approx(expected)
    assert sm.sup_oscillation_bruteforce(fam(values), r, J_max=3).value == pytest.approx(expected)


def test_sup_oscillation_multiparam_frozen():
    grid = ParamFamily.from_grid([[0, 1, 2], [0, 1, 2]], [[0, 0, 0], [0, 1, 0], [0, 0, 0]])
    v = sm.sup_oscillation_multiparam(grid, 2)
    assert v.value == pytest.approx(1.0) and v.exact
    const = ParamFamily.from_grid([[0, 1], [0, 1]], np.ones((2, 2)))
    v = sm.sup_oscillation_multiparam(const, 2)
    assert v.value == 0.0 and v.exact


def test_sup_oscillation_multiparam_stochastic_fallback_flagged():
    rng = np.random.default_rng(0)
    axes = [range(24), range(24)]
    big = ParamFamily.from_grid(axes, rng.standard_normal((24, 24)))
    v = sm.sup_oscillation_multiparam(big, 2, J_max=3, trials=16, seed=1)
    assert not v.exact
    assert v.value == sm.sup_oscillation_multiparam(big, 2, J_max=3, trials=16, seed=1).value


@pytest.mark.parametrize("values, lam, expected", [
    ((2, 2, 2), 0.5, 0),
    ((0, 1, 0, 1, 0), 1, 4),
    ((0, 0.5, 1), 1, 1),
])
def test_jump_count_frozen(values, lam, expected):
    assert sm.jump_count(fam(values), lam).value == expected
    assert sm.jump_count_bruteforce(fam(values), lam).value == expected


def test_overlap_jump_count_frozen():
    assert sm.overlap_jump_count(fam([0, 1, 0, 1, 0]), 1).value == 4
    assert sm.overlap_jump_count(fam([3, 3, 3]), 1).value == 0
    f = fam([0, 0.6, 1.2])
    assert sm.jump_count(f, 1).value == 1
    assert sm.overlap_jump_count(f, 1).value == 1
    assert sm.jump_count(f, 0.5).value == 2


def test_jump_count_rejects_nonpositive_lambda():
    with pytest.raises(DomainError):
        sm.jump_count(fam([0, 1]), 0)


def test_diagonal_embed():
    assert sm.diagonal_embed([1, 2, 3], 2).entries == ((1, 1), (2, 2), (3, 3))
    with pytest.raises(DomainError):
        sm.diagonal_embed([1], 2)


def test_convergence_certificate_frozen():
    axis = list(range(1, 17))
    vals = np.array([[1 / (a * b) for b in axis] for a in axis])
    rep = sm.convergence_certificate(ParamFamily.from_grid([axis, axis], vals), 0.25)
    assert rep.N == 2
    assert not sm.convergence_certificate(fam([(-1) ** t for t in range(10)]), 1).certified
    assert sm.convergence_certificate(ParamFamily(range(3, 9), np.full(6, 2.0)), 0.1).N == 3


def test_csv_and_json_readers():
    f = sm.read_family_csv("t_1,value\n0,1.5\n1/2,2\n1,-1\n")
    assert f.coords == (0, Fraction(1, 2), 1)
    assert list(f.values) == [1.5, 2.0, -1.0]
    g = sm.read_family_json('[{"t": [0, 0], "value": 1}, {"t": ["1/2", 1], "value": [0, 2]}]')
    assert g.k == 2 and g.values[1] == 2j
    with pytest.raises(DomainError):
        sm.read_family_csv("x,value\n0,1\n")


def test_seminorm_value_json_roundtrip():
    v = sm.variation(fam([0, 2, 1]), 2)
    import json
    d = json.loads(v.to_json())
    assert d["kind"] == "variation" and d["value"] == pytest.approx(v.value)


# ---------------------------------------------------------------------------
# property tests
# ---------------------------------------------------------------------------

values_st = st.lists(st.floats(-10, 10, allow_nan=False, width=32), min_size=2, max_size=9)
r_st = st.sampled_from([1.0, 1.5, 2.0, 3.0])
lam_st = st.sampled_from([0.25, 0.5, 1.0])


@settings(max_examples=120, deadline=None)
@given(values_st, r_st)
def test_variation_matches_bruteforce(values, r):
    f = fam(values)
    a, b = sm.variation(f, r).value, sm.variation_bruteforce(f, r).value
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


@settings(max_examples=120, deadline=None)
@given(values_st, r_st)
def test_sup_oscillation_matches_bruteforce(values, r):
    f = fam(values)
    a, b = sm.sup_oscillation(f, r).value, sm.sup_oscillation_bruteforce(f, r).value
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


@settings(max_examples=120, deadline=None)
@given(values_st, lam_st)
def test_jump_counts_match_bruteforce(values, lam):
    f = fam(values)
    assert sm.jump_count(f, lam).value == sm.jump_count_bruteforce(f, lam).value
    assert sm.overlap_jump_count(f, lam).value == sm.overlap_jump_count_bruteforce(f, lam).value


@settings(max_examples=150, deadline=None)
@given(values_st, r_st, st.data())
def test_oscillation_chain_and_crude_bound(values, r, data):
    f = fam(values)
    n = len(values)
    pos = sorted(data.draw(st.sets(st.integers(0, n - 1), min_size=2, max_size=n)))
    O = sm.oscillation(f, pos, r).value
    V = sm.variation(f, r).value
    norm = float(np.sum(np.abs(f.values) ** r) ** (1 / r))
    assert O <= sm.sup_oscillation(f, r).value + 1e-10
    assert sm.sup_oscillation(f, r).value <= V + 1e-10
    assert V <= 2 * norm + 1e-10


@settings(max_examples=150, deadline=None)
@given(values_st, r_st, lam_st)
def test_jump_bridge_and_sandwich(values, r, lam):
    f = fam(values)
    N = sm.jump_count(f, lam).value
    NN = sm.overlap_jump_count(f, lam).value
    assert lam * N ** (1 / r) <= sm.variation(f, r).value + 1e-10
    assert N <= NN <= sm.jump_count(f, lam / 2).value


@settings(max_examples=100, deadline=None)
@given(values_st, st.floats(1, 4), st.floats(0.01, 3))
def test_variation_decreases_in_r(values, r, dr):
    f = fam(values)
    assert sm.variation(f, r + dr).value <= sm.variation(f, r).value + 1e-10


@settings(max_examples=100, deadline=None)
@given(values_st, r_st, st.data())
def test_oscillation_subadditive(values, r, data):
    n = len(values)
    other = data.draw(st.lists(st.floats(-10, 10, allow_nan=False, width=32), min_size=n, max_size=n))
    pos = sorted(data.draw(st.sets(st.integers(0, n - 1), min_size=2, max_size=n)))
    a, b = fam(values), fam(other)
    s = fam(np.asarray(values, dtype=float) + np.asarray(other, dtype=float))
    assert sm.oscillation(s, pos, r).value <= sm.oscillation(a, pos, r).value + sm.oscillation(b, pos, r).value + 1e-9


@settings(max_examples=100, deadline=None)
@given(values_st, st.floats(-100, 100, allow_nan=False))
def test_seminorms_invariant_under_constant_shift(values, c):
    f, g = fam(values), fam(np.asarray(values) + c)
    assert sm.variation(g, 2).value == pytest.approx(sm.variation(f, 2).value, abs=1e-9)
    assert sm.sup_oscillation(g, 2).value == pytest.approx(sm.sup_oscillation(f, 2).value, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False, width=32), min_size=9, max_size=9), r_st)
def test_multiparam_sup_matches_enumeration_on_3x3(values, r):
    grid = ParamFamily.from_grid([[0, 1, 2], [0, 1, 2]], np.reshape(values, (3, 3)))
    a = sm.sup_oscillation_multiparam(grid, r).value
    b = sm.sup_oscillation_multiparam_bruteforce(grid, r).value
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False, width=32), min_size=9, max_size=9), r_st)
def test_diagonal_oscillation_below_multiparam_sup(values, r):
    grid = ParamFamily.from_grid([[0, 1, 2], [0, 1, 2]], np.reshape(values, (3, 3)))
    sup = sm.sup_oscillation_multiparam(grid, r).value
    for seq in ([0, 1], [0, 2], [1, 2], [0, 1, 2]):
        assert sm.oscillation(grid, sm.diagonal_embed(seq, 2), r).value <= sup + 1e-12


def test_mutations_change_behaviour():
    with sm.mutation("block_off_by_one"):
        assert sm.oscillation(fam([0, 0, 5, 0]), [0, 2, 3], 2).value > 0
    with sm.mutation("non_strict_sequence"):
        IncreasingSequence([0, 1, 1])
    with sm.mutation("empty_sup"):
        assert sm.oscillation(fam([0, 3, 1, 2]), [0, 2, 3], 2, subdomain=[0, 3]).value != 0.0
    with pytest.raises(ValueError):
        with sm.mutation("no_such_mutation"):
            pass
