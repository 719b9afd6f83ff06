from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wzwmps import _exact
from wzwmps.affine_module import ModeMonomial, TruncationError, build_module
from wzwmps.intertwiner import (
    FusionForbidden,
    LaurentElem,
    NoInvariant,
    build_intertwiner,
    check_intertwiner,
    fusion_allowed,
    matrix_element,
    mode_matrix,
    solve_g_intertwiner,
    zero_mode_matches,
)
from wzwmps.lie_core import LieError, sl

E, F, H = 0, 1, 2
PLUS, MINUS = 0, 1


def frac(x):
    return Fraction(int(x.p), int(x.q))


def test_singlet_gmap(a1):
    W = solve_g_intertwiner(a1, 1, 1, 0, 1)
    assert W.W[PLUS][MINUS][0] == 1
    assert W.W[MINUS][PLUS][0] == -1
    assert W.W[PLUS][PLUS][0] == 0 and W.W[MINUS][MINUS][0] == 0
    assert W.tau == Fraction(1, 2)
    assert W.is_equivariant()


def test_solver_errors(a1):
    with pytest.raises(NoInvariant):
        solve_g_intertwiner(a1, 1, 0, 2, 1)
    with pytest.raises(FusionForbidden):
        solve_g_intertwiner(a1, 1, 1, 2, 1)
    with pytest.raises(LieError):
        solve_g_intertwiner(a1, 3, 3, 0, 2)


@given(st.integers(0, 4), st.integers(0, 4), st.integers(0, 4), st.integers(1, 4))
def test_solver_matches_fusion_rule(l3, l2, l1, k):
    spec = sl(2)
    cg = abs(l3 - l2) <= l1 <= l3 + l2 and (l3 + l2 + l1) % 2 == 0
    try:
        W = solve_g_intertwiner(spec, l3, l2, l1, k)
    except NoInvariant:
        assert not cg
        return
    except FusionForbidden:
        assert cg and not fusion_allowed(spec, l3, l2, l1, k)
        return
    except LieError:
        assert max(l3, l2, l1) > k
        return
    assert cg and fusion_allowed(spec, l3, l2, l1, k)
    assert W.is_equivariant()
    first = next(x for p3 in W.W for p2 in p3 for x in p2 if x)
    assert first == 1


def test_matrix_element_top_level(a1):
    W = solve_g_intertwiner(a1, 1, 1, 0, 1)
    val = matrix_element(W, PLUS, ModeMonomial((), 0), ModeMonomial((), MINUS))
    assert val == LaurentElem(Fraction(1), Fraction(-1, 2))


def test_matrix_element_left_descendant(a1):
    # <a(-m) phi1, Y(phi3, z) phi2> = z^(m - tau) <phi1, W(eta(a) phi3 (x) phi2)>
    W = solve_g_intertwiner(a1, 1, 1, 0, 1)
    for m in (1, 2):
        val = matrix_element(W, MINUS, ModeMonomial(((F, -m),), 0), ModeMonomial((), MINUS))
        # eta(f) = e and e phi_- = phi_+, W(phi_+ (x) phi_-) = 1
        assert val == LaurentElem(Fraction(1), m - Fraction(1, 2))


def test_matrix_element_right_descendant(a1):
    # <phi1, Y(phi3, z) a(-1) phi2> = -z^(-1-tau) <phi1, W(a phi3 (x) phi2)>
    W = solve_g_intertwiner(a1, 1, 1, 0, 1)
    val = matrix_element(W, MINUS, ModeMonomial((), 0), ModeMonomial(((E, -1),), MINUS))
    assert val == LaurentElem(Fraction(-1), Fraction(-3, 2))


def test_matrix_element_rejects_non_negative_modes(a1):
    W = solve_g_intertwiner(a1, 1, 1, 0, 1)
    with pytest.raises(ValueError):
        matrix_element(W, 0, ModeMonomial(((E, 0),), 0), ModeMonomial((), 0))


def test_laurent_call():
    val = LaurentElem(Fraction(2), Fraction(-1, 2))
    assert abs(val(4.0) - 1.0) < 1e-15
    assert LaurentElem(Fraction(0), Fraction(1))(3.0) == 0


@pytest.mark.parametrize("k,types", [(1, [(1, 1, 0), (1, 0, 1)]), (2, [(1, 1, 2), (1, 2, 1), (2, 2, 0), (2, 1, 1)])])
def test_blocks_match_word_recursion(a1, k, types):
    # matrix recursion vs the symbolic left/right peeling recursion
    for t3 in types:
        inter = build_intertwiner(a1, k, *t3, 2)
        W = inter.gmap
        for (t, p, n), inner in inter.inner.items():
            cw, bw = inter.C.basis_words(p), inter.B.basis_words(n)
            for i, c in enumerate(cw):
                for j, b in enumerate(bw):
                    ref = matrix_element(W, t, c, b)
                    assert frac(inner[i, j]) == ref.coeff
                    assert ref.power == p - n - W.tau


def test_mode_matrix_shapes(a1):
    inter = build_intertwiner(a1, 1, 1, 1, 0, 3)
    blk = mode_matrix(inter, 0, 1)
    assert (blk.block(1).nrows(), blk.block(1).ncols()) == (1, 2)
    for m in (2, 3):
        blk = mode_matrix(inter, 0, m)
        for n in range(m):
            assert _exact.is_zero(blk.block(n))
    with pytest.raises(TruncationError):
        mode_matrix(inter, 0, 4)


def test_level_shift_purity(a1):
    inter = build_intertwiner(a1, 2, 1, 1, 2, 3)
    for (t, p, n), Y in inter.Y.items():
        assert (Y.nrows(), Y.ncols()) == (inter.C.dim(p), inter.B.dim(n))
    blk = inter.mode(1, 1)
    for n, b in blk.blocks.items():
        assert (b.nrows(), b.ncols()) == (inter.C.dim(n - 1), inter.B.dim(n))


@pytest.mark.parametrize("k,t3", [(1, (1, 1, 0)), (1, (1, 0, 1)), (2, (2, 1, 1)), (2, (0, 2, 2))])
def test_zero_mode_correspondence(a1, k, t3):
    assert zero_mode_matches(build_intertwiner(a1, k, *t3, 2))


def test_check_intertwiner_type_c_11_10(a1):
    rep = check_intertwiner(build_intertwiner(a1, 1, 1, 0, 1, 3))
    assert rep.passed and rep.checked > 0


def test_vacuum_charge_reduces_to_identity(a1):
    inter = build_intertwiner(a1, 1, 0, 1, 1, 3)
    for n in range(4):
        Y = inter.block(0, n, n)
        assert Y == _exact.identity(inter.B.dim(n))
        for p in range(4):
            if p != n:
                assert _exact.is_zero(inter.block(0, p, n))
    assert check_intertwiner(inter).passed


def test_check_intertwiner_detects_corruption(a1):
    import dataclasses

    inter = build_intertwiner(a1, 1, 1, 1, 0, 2)
    Y = dict(inter.Y)
    Y[(0, 0, 1)] = Y[(0, 0, 1)] * 3
    bad = dataclasses.replace(inter, Y=Y, cache={})
    rep = check_intertwiner(bad)
    assert not rep.passed and rep.failures


@given(st.integers(-2, 2), st.integers(-2, 2))
def test_matrix_element_linear_in_charge(c0, c1):
    W = solve_g_intertwiner(sl(2), 1, 0, 1, 1)
    left = ModeMonomial(((E, -1),), 1)
    right = ModeMonomial((), 0)
    combo = matrix_element(W, {0: c0, 1: c1}, left, right).coeff
    parts = c0 * matrix_element(W, 0, left, right).coeff + c1 * matrix_element(W, 1, left, right).coeff
    assert combo == parts


def test_build_needs_fusion(a1):
    with pytest.raises(FusionForbidden):
        build_intertwiner(a1, 1, 1, 1, 2, 2)
    mod = build_module(a1, 1, 1, 2)
    assert build_intertwiner(a1, 1, 1, 0, 1, 2).B.level_dims == build_module(a1, 1, 0, 2).level_dims
    assert build_intertwiner(a1, 1, 1, 0, 1, 2).C.level_dims == mod.level_dims
