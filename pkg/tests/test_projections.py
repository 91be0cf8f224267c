import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from osclab import projections as pj
from osclab.seminorms import DomainError, ParamFamily, oscillation


def test_martingale_frozen():
    f = np.array([1.0, 3.0, 5.0, 7.0])
    assert list(pj.martingale_projection(f, 1, 2)) == [2, 2, 6, 6]
    assert list(pj.martingale_projection(f, 2, 2)) == list(f)
    assert list(pj.martingale_projection(f, 0, 2)) == [4, 4, 4, 4]


def test_martingale_exact_for_rationals():
    from fractions import Fraction
    f = np.array([Fraction(1), Fraction(2), Fraction(4), Fraction(8)], dtype=object)
    assert list(pj.martingale_projection(f, 1, 2)) == [Fraction(3, 2)] * 2 + [Fraction(6)] * 2


def test_cutoff_frozen():
    f = np.zeros(8)
    f[0] = 1.0
    x = np.arange(8)
    assert np.max(np.abs(pj.fourier_cutoff(f, 1) - (1 + 2 * np.cos(2 * np.pi * x / 8)) / 8)) <= 1e-15
    rng = np.random.default_rng(0)
    g = rng.standard_normal(9)
    assert np.max(np.abs(pj.fourier_cutoff(g, 4) - g)) <= 1e-14


def test_bump_profile():
    chi = pj.SmoothBump()
    vals = chi(np.array([-2.0, -1.0, 0.0, 1.0, 1.5, 2.0, 3.0]))
    assert list(vals[:4]) == [0.0, 1.0, 1.0, 1.0]
    assert vals[4] == pytest.approx(0.5)
    assert list(vals[5:]) == [0.0, 0.0]


def test_bump_fixes_band_limited_functions():
    N = 64
    x = np.arange(N)
    f = np.cos(2 * np.pi * 3 * x / N)
    assert np.max(np.abs(pj.smooth_dilate_multiplier(f, 2) - f)) <= 1e-13


def test_smooth_bump_is_not_a_projection():
    fam = pj.SmoothBumpFamily(64)
    rng = np.random.default_rng(1)
    f = rng.standard_normal(64)
    assert not fam.is_projection
    assert max(pj.lattice_identity_residual(fam, f, t, t) for t in fam.indices) > 1e-3


@pytest.mark.parametrize("system", [
    pj.OrthonormalSystem.fourier(12),
    pj.OrthonormalSystem.haar(4),
    pj.OrthonormalSystem.random(10, seed=3),
    pj.OrthonormalSystem.random(8, seed=3, complex_=True),
])
def test_orthonormal_systems(system):
    assert system.gram_error() <= 1e-12
    N = system.size
    rng = np.random.default_rng(2)
    f = rng.standard_normal(N)
    assert np.max(np.abs(pj.partial_sum_projection(f, system, N - 1) - f)) <= 1e-12
    assert np.max(np.abs(pj.partial_sum_projection(system.vectors[3], system, 2))) <= 1e-12


def test_nonorthonormal_rejected():
    with pytest.raises(DomainError):
        pj.OrthonormalSystem(np.array([[1.0, 0.0], [1.0, 1.0]]))


def test_decomposition_frozen_cases():
    rng = np.random.default_rng(5)
    f = rng.standard_normal(16)
    rep = pj.thm31_decomposition_check(pj.MartingaleFamily(4), f, [1, 3], 2)
    assert rep["max_deviation"] <= 1e-15
    g = rng.standard_normal(64)
    assert pj.thm31_decomposition_check(pj.CutoffFamily(64), g, [3, 9], 5)["max_deviation"] <= 1e-12
    with pytest.raises(DomainError):
        pj.thm31_decomposition_check(pj.CutoffFamily(64), g, [3, 9], 3)


def test_block_square_function_single_block():
    rng = np.random.default_rng(6)
    f = rng.standard_normal(32)
    fam = pj.MartingaleFamily(5)
    field, _ = pj.block_square_function(fam, f, [1, 4])
    ref = np.abs(pj.martingale_projection(f, 4, 5) - pj.martingale_projection(f, 1, 5))
    assert np.max(np.abs(field - ref)) <= 1e-14


def test_block_square_function_haar_sparse_hand_sum():
    # f = h_a + 2 h_b with h_a at level 1 and h_b at level 2 of the Haar basis on 8 points
    ha = np.array([1, 1, -1, -1, 0, 0, 0, 0]) / 2.0
    hb = np.array([0, 0, 0, 0, 1, -1, 0, 0]) / np.sqrt(2)
    f = ha + 2 * hb
    field, _ = pj.block_square_function(pj.MartingaleFamily(3), f, [0, 2, 3])
    assert np.max(np.abs(field - np.sqrt(ha**2 + 4 * hb**2))) <= 1e-14


def test_maximal_function_single_index():
    rng = np.random.default_rng(7)
    f = rng.standard_normal(16)
    fam = pj.MartingaleFamily(4, [2])
    field, _ = pj.maximal_function(fam, f)
    assert np.max(np.abs(field - np.abs(pj.martingale_projection(f, 2, 4)))) == 0.0


def test_doob_and_rademacher_menshov_reports():
    rep = pj.doob_ratio(10, 20, seed=0)
    assert 1.0 <= rep["max_ratio"] <= 2.0
    curve = pj.rademacher_menshov_curve([8, 16, 32], 4, seed=0)
    assert len(curve["ratios"]) == 3 and curve["slope"] == curve["slope"]


def test_smooth_sharp_constant_is_finite():
    rng = np.random.default_rng(8)
    rep = pj.smooth_sharp_comparison(rng.standard_normal(1 << 10))
    assert 0 < rep["constant"] < 2


def test_haar_filtration_fast_path_matches_stack():
    rng = np.random.default_rng(9)
    fam = pj.HaarFiltrationFamily(6)
    f = rng.standard_normal(fam.size)
    seq = [0, 3, 10, 11, 40, 63]
    fast = fam.oscillation_field(f, seq, 2)
    slow = pj.ProjectionFamily.oscillation_field(fam, f, seq, 2)
    assert np.max(np.abs(fast - slow)) <= 1e-12
    coeffs = pj.haar_coefficients(f)
    ref = pj.OrthonormalSystem.haar(6).coefficients(f)
    assert np.max(np.abs(coeffs - ref)) <= 1e-12


def test_oscillation_field_matches_scalar_seminorm():
    rng = np.random.default_rng(10)
    fam = pj.CutoffFamily(21)
    f = rng.standard_normal(21)
    stack = fam.stack(f)
    seq = [0, 2, 7, 10]
    field = fam.oscillation_field(f, seq, 1.5)
    for x in (0, 5, 17):
        pf = ParamFamily(fam.indices, stack[:, x])
        assert field[x] == pytest.approx(oscillation(pf, seq, 1.5).value, rel=1e-13)


def _families():
    return [pj.MartingaleFamily(5), pj.CutoffFamily(32), pj.PartialSumFamily(pj.OrthonormalSystem.haar(5)),
            pj.PartialSumFamily(pj.OrthonormalSystem.fourier(32)), pj.HaarFiltrationFamily(5)]


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 4), st.integers(0, 2**31 - 1), st.data())
def test_projection_family_invariants(which, seed, data):
    fam = _families()[which]
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(fam.size)
    idx = [int(t) for t in fam.indices]
    s, t = data.draw(st.sampled_from(idx)), data.draw(st.sampled_from(idx))
    assert pj.lattice_identity_residual(fam, f, s, t) <= 1e-12
    seq = sorted(data.draw(st.sets(st.sampled_from(idx), min_size=2, max_size=8)))
    _, deltas = pj._delta_blocks(fam, f, seq)
    assert np.sum(np.abs(deltas) ** 2) <= np.sum(f**2) + 1e-12
    chain = pj.oscillation_chain(fam, f, seq, 2)
    assert chain["link1_excess"] <= 1e-10 and chain["link2_excess"] <= 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_martingale_preserves_mean(K, seed):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(1 << K)
    for n in range(K + 1):
        assert np.mean(pj.martingale_projection(f, n, K)) == pytest.approx(np.mean(f), abs=1e-12)
