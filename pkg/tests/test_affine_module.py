from fractions import Fraction

import pytest
from flint import fmpq_mat
from hypothesis import given
from hypothesis import strategies as st

from wzwmps import _exact
from wzwmps.affine_module import (
    ModeMonomial,
    TruncationError,
    build_module,
    candidate_gram,
    check_adjointness,
    check_commutators,
    check_gram_psd,
    commutator_defect,
    gram_entry,
    mode_action,
    normal_order,
    spanning_monomials,
)
from wzwmps.bounds import multipartition_count
from wzwmps.lie_core import LieError, irrep, sl

E, F, H = 0, 1, 2


def free_boson_dims(levels, half):
    """Level dimensions of su(2)_1 modules from the self-dual free boson."""
    out = []
    for n in range(levels + 1):
        total = 0
        m = 0
        while True:
            # momentum shifts: m^2 (vacuum) or m^2 + m (spin 1/2), m integer
            shift = m * m + m if half else m * m
            if shift > n:
                break
            mult = 2 if (m > 0 or half) else 1
            total += mult * multipartition_count(n - shift, 1)
            m += 1
        out.append(total)
    return out


def test_free_boson_oracle_itself():
    assert free_boson_dims(4, False) == [1, 3, 4, 7, 13]
    assert free_boson_dims(3, True) == [2, 2, 6, 8]


def test_normal_order_examples(a1):
    assert normal_order(a1, 1, [(E, -1)]) == {((E, -1),): 1}
    assert normal_order(a1, 1, [(E, 1)]) == {}
    k = Fraction(3)
    assert normal_order(a1, k, [(E, 1), (F, -1)]) == {((H, 0),): 1, (): k}


@given(st.lists(st.tuples(st.integers(0, 2), st.integers(-2, 1)), max_size=4))
def test_normal_order_output_is_ordered(word):
    for w in normal_order(sl(2), 1, word):
        modes = [(n, a) for a, n in w]
        assert modes == sorted(modes)
        assert all(n <= 0 for n, _ in modes)


def test_gram_entry_examples(a1):
    vac = irrep(a1, 0)
    half = irrep(a1, 1)
    assert gram_entry(ModeMonomial((), 0), ModeMonomial((), 0), vac, 1) == 1
    e1 = ModeMonomial(((E, -1),), 0)
    assert gram_entry(e1, e1, vac, 1) == 1
    assert gram_entry(e1, e1, half, 1) == 0
    assert gram_entry(e1, e1, half, 2) == 1


@pytest.mark.parametrize("lam,M,dims", [(0, 0, [1]), (0, 3, [1, 3, 4, 7]), (1, 2, [2, 2, 6])])
def test_build_module_examples(a1, lam, M, dims):
    mod = build_module(a1, 1, lam, M)
    assert mod.level_dims == dims
    assert mod.gram_ranks == dims


@pytest.mark.parametrize("lam", [0, 1])
def test_dims_match_free_boson(a1, lam):
    mod = build_module(a1, 1, lam, 7)
    assert mod.level_dims == free_boson_dims(7, lam == 1)
    assert mod.cumulative_dim(7) == sum(mod.level_dims)


def test_build_module_rejects_non_integrable(a1):
    with pytest.raises(LieError):
        build_module(a1, 1, 2, 1)


def test_word_level_gram_rank_oracle(a1):
    # independent path: symbolic Gram of all spanning monomials
    for lam, k, M in [(0, 1, 3), (1, 1, 3), (2, 2, 2), (1, 2, 2)]:
        rep = irrep(a1, lam)
        mod = build_module(a1, k, lam, M)
        for L in range(M + 1):
            mons = spanning_monomials(a1, rep.dim, L)
            G = _exact.mat([[gram_entry(x, y, rep, k) for y in mons] for x in mons])
            assert G.rank() == mod.dim(L)


def test_candidate_gram_rank(a1):
    mod = build_module(a1, 2, 1, 3)
    for L in range(1, 4):
        assert candidate_gram(mod, L).rank() == mod.dim(L)


def test_mode_matrices_match_word_level(a1):
    # <w_i, a(n) w_j> from the matrices equals the symbolic inner product
    for lam, k in [(0, 1), (1, 1), (2, 2)]:
        rep = irrep(a1, lam)
        mod = build_module(a1, k, lam, 3)
        for a in range(3):
            for n in (-2, -1, 0, 1, 2):
                for L in range(4):
                    if not 0 <= L - n <= 3:
                        continue
                    A = mod.mode(a, n, L)
                    lhs = mod.gram(L - n) * A
                    src, tgt = mod.basis_words(L), mod.basis_words(L - n)
                    for i, wi in enumerate(tgt):
                        for j, wj in enumerate(src):
                            ref = gram_entry(wi, ModeMonomial(((a, n),) + wj.word, wj.top), rep, k)
                            assert Fraction(int(lhs[i, j].p), int(lhs[i, j].q)) == ref


def test_mode_action_examples(a1):
    vac = build_module(a1, 1, 0, 2)
    half = build_module(a1, 1, 1, 1)
    for a in range(3):
        for t in range(2):
            v = [int(s == t) for s in range(2)]
            assert mode_action(half, a, 0, v, 0) == [half.rep.rho[a][s][t] for s in range(2)]
    # e(-1) 1 in the level-1 basis
    e1 = [Fraction(0)] * 3
    e1[[w.word for w in vac.basis_words(1)].index(((E, -1),))] = Fraction(1)
    assert mode_action(vac, H, 1, e1, 1) == [0]
    assert mode_action(vac, F, 1, e1, 1) == [1]


def test_mode_action_out_of_range(a1):
    mod = build_module(a1, 1, 0, 2)
    with pytest.raises(TruncationError):
        mode_action(mod, E, -1, [1, 0, 0, 0], 2)
    with pytest.raises(TruncationError):
        mode_action(mod, E, 1, [1], 0)
    with pytest.raises(ValueError):
        mode_action(mod, E, 0, [1, 0], 0)


@pytest.mark.parametrize("k,lam", [(1, 0), (1, 1), (2, 0), (2, 1), (2, 2)])
def test_module_invariants(a1, k, lam):
    mod = build_module(a1, k, lam, 4)
    assert check_gram_psd(mod)
    assert mod.level_dims[0] == irrep(a1, lam).dim
    assert check_commutators(mod) == []
    assert check_adjointness(mod) == []


def test_checks_detect_corrupted_mode(a1):
    import dataclasses

    mod = build_module(a1, 1, 0, 2)
    assert commutator_defect(mod, E, F, 1, -1, 1)
    bad = dataclasses.replace(mod, _modes=dict(mod._modes), _floats={})
    bad._modes[(E, 1, 1)] = mod.mode(E, 1, 1) * 2
    assert not commutator_defect(bad, E, F, 1, -1, 1)
    assert check_commutators(bad)
    assert check_adjointness(bad)


@given(st.integers(0, 2), st.integers(-3, 3), st.integers(0, 4))
def test_grading_shapes(a, n, level):
    mod = build_module(sl(2), 1, 1, 4)
    if 0 <= level - n <= 4:
        A = mod.mode(a, n, level)
        assert (A.nrows(), A.ncols()) == (mod.dim(level - n), mod.dim(level))
    else:
        with pytest.raises(TruncationError):
            mod.mode(a, n, level)


@given(st.integers(1, 3), st.sampled_from([0, 1]))
def test_dimension_bound_with_cv(C_V, lam):
    mod = build_module(sl(2), 1, lam, 6)
    for n, d in enumerate(mod.level_dims):
        if C_V >= 3:
            assert d <= mod.level_dims[0] * multipartition_count(n, C_V)


def test_ldl_pivots_non_negative(a1):
    mod = build_module(a1, 2, 2, 3)
    for L in range(4):
        assert all(p > 0 for p in _exact.ldl_pivots(mod.gram(L)))
    assert isinstance(mod.gram(1), fmpq_mat)
