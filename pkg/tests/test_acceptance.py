"""Acceptance criteria, one test per criterion; each prints a PASS/FAIL line."""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from wzwmps import _exact
from wzwmps.affine_module import ModeMonomial, build_module, gram_entry, spanning_monomials
from wzwmps.bounds import (
    bond_dimension,
    character_exact,
    error_budget,
    multipartition_count,
    partition_bound,
    polylog_bound,
    theta_defining_rep,
)
from wzwmps.full_cft import (
    FullInsertion,
    FullRequest,
    FullSpace,
    fcs_assemble,
    fcs_evaluate,
    full_correlator,
    full_partition,
    full_scaled_truncated,
    iota,
    transfer_map,
    upsilon,
    upsilon_inverse,
)
from wzwmps.intertwiner import build_intertwiner, check_intertwiner, zero_mode_matches
from wzwmps.lie_core import conformal_weight, irrep, sl
from wzwmps.transfer import (
    CorrRequest,
    Geometry,
    Insertion,
    genus0_correlator,
    genus1_correlator,
    mps_extract,
    scaled_truncated,
)

A1 = sl(2)
Q_GRID = [round(0.05 * i, 2) for i in range(1, 20)]


def lattice_dims(levels, half):
    """Level dimensions of the rank-one lattice theory at radius sqrt(2)."""
    dims = []
    for L in range(levels + 1):
        total = 0
        for m2 in range(-20, 21):
            rest = L - (m2 * (m2 + 1) if half else m2 * m2)
            if rest >= 0:
                total += multipartition_count(rest, 1)
        dims.append(total)
    return dims


def two_point_ratio_exponent(g12, g13, q, wt_scale):
    f12 = g12 / q ** ((1.5 + 2.5) * wt_scale)
    f13 = g13 / q ** ((1.5 + 3.5) * wt_scale)
    return -math.log(abs(f12 / f13)) / math.log((q - q**2) / (q - q**3))


def test_criterion_1_module_construction(criterion):
    start = time.perf_counter()
    vac = build_module(A1, 1, 0, 3)
    half = build_module(A1, 1, 1, 2)
    ok = vac.level_dims == [1, 3, 4, 7] and half.level_dims == [2, 2, 6]
    ok &= vac.level_dims == lattice_dims(3, False) and half.level_dims == lattice_dims(2, True)
    for mod, lam in ((vac, 0), (half, 1)):
        rep = irrep(A1, lam)
        for L in range(mod.M + 1):
            mons = spanning_monomials(A1, rep.dim, L)
            G = _exact.mat([[gram_entry(x, y, rep, 1) for y in mons] for x in mons])
            ok &= G.rank() == mod.dim(L) == mod.gram_ranks[L]
    null = ModeMonomial(((0, -1),), 0)
    ok &= gram_entry(null, null, irrep(A1, 1), 1) == 0
    elapsed = time.perf_counter() - start
    ok &= elapsed < 10
    assert criterion(1, ok, f"dims {vac.level_dims} / {half.level_dims}, null norm 0, {elapsed:.1f} s")


def test_criterion_2_commutation(criterion):
    start = time.perf_counter()
    types = [(1, (1, 1, 0)), (1, (1, 0, 1)), (2, (1, 1, 0)), (2, (1, 0, 1)), (2, (1, 1, 2)), (2, (1, 2, 1))]
    checked, failures = 0, []
    for k, t in types:
        rep = check_intertwiner(build_intertwiner(A1, k, *t, 4), max_n=2)
        checked += rep.checked
        if not rep.passed:
            failures.append((k, t))
    elapsed = time.perf_counter() - start
    ok = not failures and checked > 0 and elapsed < 60
    assert criterion(2, ok, f"{len(types)} types, {checked} identities, {elapsed:.1f} s")


def test_criterion_3_zero_mode(criterion):
    types = [(1, (1, 1, 0)), (1, (1, 0, 1)), (1, (0, 1, 1)), (2, (1, 1, 0)), (2, (1, 0, 1)), (2, (1, 1, 2)), (2, (1, 2, 1)), (2, (2, 1, 1)), (2, (2, 0, 2))]
    ok = all(zero_mode_matches(build_intertwiner(A1, k, *t, 2)) for k, t in types)
    assert criterion(3, ok, f"{len(types)} intertwiners")


def test_criterion_4_truncation_bound(criterion):
    start = time.perf_counter()
    q, z, ambient = 0.25, 1.1 * np.exp(0.3j), 12
    ok, worst_ratio = True, 0.0
    for t in ((1, 1, 0), (1, 0, 1)):
        inter = build_intertwiner(A1, 1, *t, ambient)
        theta = theta_defining_rep(math.sqrt(q), z, float(inter.C.h), float(inter.B.h), float(conformal_weight(A1, 1, 1)))
        for s in range(2):
            charge = [1 if i == s else 0 for i in range(2)]
            full = scaled_truncated(inter, charge, q, z, None, ambient)
            measured = []
            for N in range(1, 7):
                trunc = scaled_truncated(inter, charge, q, z, N, ambient)
                # source levels whose full image stays below the cutoff
                cols = full.src_offsets[ambient - N + 1]
                diff = float(np.linalg.norm((full.matrix - trunc.matrix)[:, :cols], 2))
                bound = math.sqrt(3) * theta * q ** (N / 4) / (1 - math.sqrt(q))
                ok &= diff < bound + 1e-9
                measured.append(diff)
            ratios = [b / a for a, b in zip(measured, measured[1:])]
            worst_ratio = max(worst_ratio, *ratios)
    ok &= worst_ratio < 0.75
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120
    assert criterion(4, ok, f"worst decay ratio {worst_ratio:.3f}, {elapsed:.1f} s")


def test_criterion_5_conformal_covariance(criterion):
    q, N = 0.5, 10
    g = Geometry(-math.log(q), 0.0, 0.2)
    a, b = Insertion(1, 0, 0), Insertion(1, 1, 1)
    g12 = genus0_correlator(CorrRequest(insertions=(a, b), geometry=g, N=N, ambient=N)).raw
    g13 = genus0_correlator(CorrRequest(insertions=(a, Insertion(0, 0, 1), b), geometry=g, N=N, ambient=N)).raw
    two_h = two_point_ratio_exponent(g12, g13, q, 0.25)
    assert criterion(5, abs(two_h - 0.5) <= 1e-3, f"2h = {two_h:.6f}")


def test_criterion_6_mps_exactness(criterion):
    ok = True
    a, b = Insertion(1, 0, 0), Insertion(1, 1, 1)
    for genus in (0, 1):
        g = Geometry(math.log(4), 0.1 if genus else 0.0, 0.3, 0.5)
        req = CorrRequest(genus=genus, insertions=(a, b), geometry=g, N=2, M=2)
        bundle = mps_extract(req)
        direct = (genus0_correlator if genus == 0 else genus1_correlator)(
            CorrRequest(genus=genus, insertions=(a, b), geometry=g, N=2, M=2, ambient=6)
        ).raw
        ok &= abs(bundle.contract([np.eye(2)[0], np.eye(2)[1]]) - direct) < 1e-12
        D = max(build_module(A1, 1, lab, 6).cumulative_dim(6) for lab in bundle.channel_path)
        ok &= bundle.D == D
    vac = mps_extract(CorrRequest(genus=1, insertions=(Insertion(0), Insertion(0)), geometry=Geometry(1.0, 0.1), N=1, M=0))
    ok &= vac.D == 8 == bond_dimension(build_module(A1, 1, 0, 2), 0, 2, 1)[0]
    assert criterion(6, ok, f"vacuum D = {vac.D}")


def test_criterion_7_genus1_consistency(criterion):
    ok = True
    r = Fraction(1, 2)
    for lam in (0, 1):
        mod = build_module(A1, 1, lam, 4)
        for M in range(5):
            res = genus1_correlator(CorrRequest(genus=1, geometry=Geometry(1.0, 0.1, 0.0, float(r)), M=M, channel=lam))
            exact = float(character_exact(mod, r, M)) * float(r) ** float(mod.h)
            ok &= abs(res.raw - exact) < 1e-13
    g = Geometry(math.log(4), 0.1, 0.3, 0.5)
    ins = (Insertion(1, 0, 0), Insertion(1, 1, 1))
    worst = 0.0
    for M, N in ((0, 1), (1, 1)):
        small = genus1_correlator(CorrRequest(genus=1, insertions=ins, geometry=g, N=N, M=M, budget=True))
        big = genus1_correlator(CorrRequest(genus=1, insertions=ins, geometry=g, N=N + 2, M=M + 2))
        diff = abs(small.raw - big.raw)
        ok &= diff <= small.budget.eps_mps1
        worst = max(worst, diff / small.budget.eps_mps1)
    assert criterion(7, ok, f"largest difference/budget {worst:.1e}")


def test_criterion_8_series_lemmas(criterion):
    start = time.perf_counter()
    ok = all(partition_bound(n, k).holds for n in range(1, 61) for k in range(1, 7))
    ok &= all(polylog_bound(a, b, q, corrected=True).holds for a in range(1, 5) for b in range(1, 5) for q in Q_GRID)
    for m in range(21):
        for k1 in range(1, 4):
            for k2 in range(1, 4):
                conv = sum(multipartition_count(n, k1) * multipartition_count(m - n, k2) for n in range(m + 1))
                ok &= conv == multipartition_count(m, k1 + k2)
    elapsed = time.perf_counter() - start
    ok &= elapsed < 5
    assert criterion(8, ok, f"partition bound, corrected polylog grid, convolution; {elapsed:.2f} s")


@pytest.mark.xfail(strict=True, reason="the stated polylog inequality is false for some b >= 3")
def test_criterion_8_literal_polylog_grid(criterion):
    bad = [(a, b, q) for a in range(1, 5) for b in range(1, 5) for q in Q_GRID if not polylog_bound(a, b, q).holds]
    criterion("8 (literal polylog grid)", not bad, f"{len(bad)} of {4 * 4 * len(Q_GRID)} grid points violate it, all with b >= 3")
    assert not bad


def test_criterion_9_full_cft(criterion):
    space = FullSpace.diagonal(A1, 1, 1)
    D = space.matrix_dim()
    rng = np.random.default_rng(7)

    def block_diag_random():
        X = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
        return upsilon(space, upsilon_inverse(space, X))

    identity = fcs_assemble(transfer_map(space, np.diag(space.r_power(1.0))), D)
    ok = all(np.allclose(identity.apply(iota(P)), iota(P), atol=1e-12) for P in (block_diag_random() for _ in range(3)))
    q, z, r = 0.3, 1.1 * np.exp(0.4j), 0.6
    W = full_scaled_truncated(space, 1, np.array([[0.7, 0.1j], [0.2, -0.3]]), q, z, 1)
    R = np.diag(space.r_power(r))
    F1 = fcs_assemble(transfer_map(space, W), D)
    Fr = fcs_assemble(transfer_map(space, R), D)
    min_eig = min(cp.choi_min_eigenvalue() for cp in (identity, F1, Fr))
    ok &= min_eig >= -1e-10
    P1, P2 = block_diag_random(), block_diag_random()
    direct = upsilon_inverse(space, P1).conj() @ W @ R @ upsilon_inverse(space, P2)
    ok &= abs(fcs_evaluate([F1, Fr], P1, P2) - direct) < 1e-10

    qe, N = 0.5, 10
    g = Geometry(-math.log(qe), 0.0, 0.2)
    a = FullInsertion(1, np.eye(2) / math.sqrt(2))
    g12 = full_correlator(FullRequest(insertions=(a, a), geometry=g, N=N)).raw
    g13 = full_correlator(FullRequest(insertions=(a, FullInsertion(0, [[1]]), a), geometry=g, N=N)).raw
    four_h = two_point_ratio_exponent(g12, g13, qe, 0.5)
    ok &= abs(four_h - 1) <= 1e-3

    # sum of squared truncated characters, from the level dimensions
    zz = full_partition(A1, 1, [(0,), (1,)], 0.5, 1)
    hand = (2 ** (1 / 24) * (1 + 3 / 2)) ** 2 + (2 ** (1 / 24 - 1 / 4) * (2 + 2 / 2)) ** 2
    ok &= abs(zz - hand) < 1e-3
    assert criterion(9, ok, f"Choi min {min_eig:.1e}, 4h = {four_h:.6f}, partition {zz:.6f}")


@pytest.mark.xfail(strict=True, reason="the quoted partition value 10.414 contains an arithmetic slip; the sum is 13.364")
def test_criterion_9_quoted_partition_value(criterion):
    zz = full_partition(A1, 1, [(0,), (1,)], 0.5, 1)
    ok = abs(zz - 10.414) < 1e-3
    criterion("9 (quoted partition value 10.414)", ok, f"computed {zz:.6f}")
    assert ok


def test_criterion_10_budgets(criterion):
    spot = error_budget(2, 0.25, 1.0, 8, [2.0, 2.0], kappa=math.sqrt(3)).eps_mps0
    ok = abs(spot - 32 * math.sqrt(3) / 16) < 1e-9
    # accuracy sweep: eps_MPS0 shrinks geometrically in N while log D stays sub-linear
    mod = build_module(A1, 1, 0, 12)
    eps = [error_budget(2, 0.25, 1.0, N, [2.0, 2.0]).eps_mps0 for N in range(1, 7)]
    ok &= all(math.isclose(b / a, 0.25 ** 0.25) for a, b in zip(eps, eps[1:]))
    curve = []
    for N in range(1, 7):
        D, envelope = bond_dimension(mod, 0, 2, N, C_V=3)
        ok &= D <= envelope
        curve.append(math.log(D))
    steps = [b - a for a, b in zip(curve, curve[1:])]
    ok &= all(b < a for a, b in zip(steps, steps[1:]))
    assert criterion(10, ok, f"spot {spot:.10f}, log D steps {[round(s, 3) for s in steps]}")
