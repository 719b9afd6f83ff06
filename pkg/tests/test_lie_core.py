from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wzwmps.lie_core import (
    LieError,
    casimir_matrix,
    central_charge,
    conformal_weight,
    irrep,
    lie_algebra,
    sl,
)

E, F, H = 0, 1, 2


def matmul(a, b):
    return [[sum(a[i][l] * b[l][j] for l in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def bracket_vec(spec, x, y):
    """[x, y] for sparse coefficient dicts."""
    out = {}
    for i, a in x.items():
        for j, b in y.items():
            for l, c in spec.bracket[i][j]:
                out[l] = out.get(l, 0) + a * b * c
    return {l: c for l, c in out.items() if c}


def test_structure_examples(a1):
    assert a1.structure("h", "h") == ({}, 2)
    assert a1.structure("e", "f") == ({H: 1}, 1)
    assert a1.structure("h", "e") == ({E: 2}, 0)


def test_structure_index_out_of_range(a1):
    with pytest.raises(LieError):
        a1.structure(3, 0)
    with pytest.raises(LieError):
        a1.structure("x", "e")


def test_irrep_examples(a1):
    triv = irrep(a1, 0)
    assert triv.dim == 1
    assert all(m == ((0,),) for m in triv.rho)
    half = irrep(a1, 1)
    assert half.dim == 2
    assert half.rho[H] == ((1, 0), (0, -1))
    one = irrep(a1, 2)
    assert [one.rho[H][i][i] for i in range(3)] == [2, 0, -2]


def test_irrep_rejects_non_dominant(a1):
    with pytest.raises(LieError):
        irrep(a1, -1)


def test_conformal_weight_examples(a1):
    assert conformal_weight(a1, 0, 3) == 0
    assert conformal_weight(a1, 1, 1) == Fraction(1, 4)
    assert conformal_weight(a1, 2, 2) == Fraction(1, 2)
    with pytest.raises(LieError):
        conformal_weight(a1, 2, 1)


def test_central_charge_examples(a1):
    assert central_charge(a1, 1) == 1
    assert central_charge(a1, 2) == Fraction(3, 2)
    assert abs(float(central_charge(a1, 10**6)) - 3) < 1e-5


def test_unsupported_algebra():
    with pytest.raises(LieError):
        lie_algebra("B2")


@pytest.mark.parametrize("name", ["A1", "A2"])
def test_antisymmetry_and_jacobi(name):
    spec = lie_algebra(name)
    n = spec.dim
    for i in range(n):
        for j in range(n):
            assert dict(spec.bracket[i][j]) == {l: -c for l, c in spec.bracket[j][i]}
            for l in range(n):
                total = {}
                for a, b, c in ((i, j, l), (j, l, i), (l, i, j)):
                    for key, v in bracket_vec(spec, bracket_vec(spec, {a: 1}, {b: 1}), {c: 1}).items():
                        total[key] = total.get(key, 0) + v
                assert not any(total.values())


@pytest.mark.parametrize("name", ["A1", "A2"])
def test_form_invariance_and_involution(name):
    spec = lie_algebra(name)
    n = spec.dim
    for a in range(n):
        j, s = spec.involution[a]
        assert spec.involution[j] == (a, s)
        for b in range(n):
            for c in range(n):
                lhs = sum(x * spec.form[l][c] for l, x in spec.bracket[a][b])
                rhs = sum(x * spec.form[b][l] for l, x in spec.bracket[a][c])
                assert lhs + rhs == 0


def test_highest_root_length(a1):
    # theta = alpha for sl(2); its coroot h has (h, h) = 2
    assert a1.form[H][H] == 2


@given(st.integers(min_value=0, max_value=6))
def test_irrep_homomorphism_and_adjoint(two_j):
    spec = sl(2)
    rep = irrep(spec, two_j)
    d = rep.dim
    for i in range(3):
        for j in range(3):
            comm = [[x - y for x, y in zip(r1, r2)] for r1, r2 in zip(matmul(rep.rho[i], rep.rho[j]), matmul(rep.rho[j], rep.rho[i]))]
            expect = [[Fraction(0)] * d for _ in range(d)]
            for l, c in spec.bracket[i][j]:
                for r in range(d):
                    for s in range(d):
                        expect[r][s] += c * rep.rho[l][r][s]
            assert comm == expect
    # adjoint w.r.t. the diagonal weight-basis Gram: G rho(eta a) = rho(a)^T G
    for a in range(3):
        b, sign = spec.involution[a]
        lhs = matmul(rep.gram, [[sign * x for x in row] for row in rep.rho[b]])
        rhs = matmul([list(r) for r in zip(*rep.rho[a])], rep.gram)
        assert lhs == rhs


@given(st.integers(min_value=0, max_value=6))
def test_casimir_scalar(two_j):
    rep = irrep(sl(2), two_j)
    cas = casimir_matrix(rep)
    j = Fraction(two_j, 2)
    for r in range(rep.dim):
        for s in range(rep.dim):
            assert cas[r][s] == (2 * j * (j + 1) if r == s else 0)


def test_a2_defining_casimir_scalar():
    spec = lie_algebra("A2")
    cas = casimir_matrix(irrep(spec, (1, 0)))
    assert all(cas[r][s] == (cas[0][0] if r == s else 0) for r in range(3) for s in range(3))
    assert cas[0][0] == Fraction(8, 3)


@given(st.integers(min_value=1, max_value=12), st.integers(min_value=0, max_value=12))
def test_conformal_weight_formula(k, two_j):
    if two_j > k:
        with pytest.raises(LieError):
            conformal_weight(sl(2), two_j, k)
        return
    j = Fraction(two_j, 2)
    assert conformal_weight(sl(2), two_j, k) == j * (j + 1) / (k + 2)
