"""Intertwining operators between WZW modules with top-level charges.

An intertwiner of type ``(C; A, B)`` is fixed by a g-equivariant map
``W: A_top (x) B_top -> C_top``.  Its modes ``y(phi)_m`` (level ``n`` of ``B``
to level ``n - m`` of ``C``) are generated from ``W`` by the relation

    [a(n), y(phi)_m] = y(a(0) phi)_{m+n}

together with ``<a(n) u, v> = <u, eta(a)(-n) v>``.  Two evaluations are
provided: :func:`matrix_element` works on mode words and is kept as a
reference, while :class:`Intertwiner` builds every block by a matrix
recursion over the module bases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

from flint import fmpq_mat

from . import _exact
from .affine_module import ModeMonomial, TruncModule, TruncationError, Word, build_module, reduce_on_top
from .lie_core import Irrep, LieError, LieSpec, conformal_weight, dynkin_label, irrep, label_level

__all__ = [
    "GMap",
    "LaurentElem",
    "ModeBlock",
    "Intertwiner",
    "IntertwinerReport",
    "NoInvariant",
    "FusionForbidden",
    "fusion_allowed",
    "solve_g_intertwiner",
    "matrix_element",
    "build_intertwiner",
    "mode_matrix",
    "check_intertwiner",
    "zero_mode_matches",
]

Charge = Mapping[int, Fraction]


class NoInvariant(LieError):
    """The tensor product contains no copy of the target representation."""


class FusionForbidden(LieError):
    """The channel is allowed for the Lie algebra but not at level ``k``."""


@dataclass(frozen=True, eq=False)
class GMap:
    """Equivariant map ``W[p3][p2][p1]`` from ``V3 (x) V2`` to ``V1``."""

    spec: LieSpec
    k: int
    labels: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]
    W: tuple[tuple[tuple[Fraction, ...], ...], ...]
    normalization: str = "first-nonzero-1"

    @property
    def reps(self) -> tuple[Irrep, Irrep, Irrep]:
        return tuple(irrep(self.spec, lab) for lab in self.labels)  # type: ignore[return-value]

    @property
    def tau(self) -> Fraction:
        h3, h2, h1 = (conformal_weight(self.spec, lab, self.k) for lab in self.labels)
        return h3 + h2 - h1

    def apply(self, phi3: Charge, phi2: Charge) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for p3, c3 in phi3.items():
            for p2, c2 in phi2.items():
                for p1, w in enumerate(self.W[p3][p2]):
                    if w:
                        out[p1] = out.get(p1, Fraction(0)) + c3 * c2 * w
        return {p: v for p, v in out.items() if v}

    def is_equivariant(self) -> bool:
        r3, r2, r1 = self.reps
        for a in range(self.spec.dim):
            for p3 in range(r3.dim):
                for p2 in range(r2.dim):
                    lhs = _apply_mat(r1.rho[a], self.apply({p3: Fraction(1)}, {p2: Fraction(1)}))
                    rhs = self.apply(r3.apply(a, {p3: Fraction(1)}), {p2: Fraction(1)})
                    for p, v in self.apply({p3: Fraction(1)}, r2.apply(a, {p2: Fraction(1)})).items():
                        rhs[p] = rhs.get(p, Fraction(0)) + v
                    if {p: v for p, v in lhs.items() if v} != {p: v for p, v in rhs.items() if v}:
                        return False
        return True


def _apply_mat(mat, vec: Mapping[int, Fraction]) -> dict[int, Fraction]:
    out: dict[int, Fraction] = {}
    for t, c in vec.items():
        for s in range(len(mat)):
            if mat[s][t]:
                out[s] = out.get(s, Fraction(0)) + c * mat[s][t]
    return out


def fusion_allowed(spec: LieSpec, l3: int | Sequence[int], l2: int | Sequence[int], l1: int | Sequence[int], k: int) -> bool:
    """Level-``k`` fusion rule.  Only implemented for A1; other algebras return True."""
    a, b, c = (dynkin_label(spec, x) for x in (l3, l2, l1))
    if spec.rank != 1:
        return True
    a, b, c = a[0], b[0], c[0]
    return abs(a - b) <= c <= min(a + b, 2 * k - a - b) and (a + b + c) % 2 == 0


def solve_g_intertwiner(spec: LieSpec, lam3, lam2, lam1, k: int) -> GMap:
    """Solve the equivariance constraints for ``W: V(lam3) (x) V(lam2) -> V(lam1)``.

    >>> from wzwmps.lie_core import sl
    >>> solve_g_intertwiner(sl(2), 1, 1, 0, 1).W
    (((Fraction(0, 1),), (Fraction(1, 1),)), ((Fraction(-1, 1),), (Fraction(0, 1),)))
    """
    labs = tuple(dynkin_label(spec, x) for x in (lam3, lam2, lam1))
    r3, r2, r1 = (irrep(spec, lab) for lab in labs)
    d3, d2, d1 = r3.dim, r2.dim, r1.dim
    nvar = d3 * d2 * d1

    def var(p3: int, p2: int, p1: int) -> int:
        return (p3 * d2 + p2) * d1 + p1

    rows: list[list[Fraction]] = []
    for a in range(spec.dim):
        for p3 in range(d3):
            for p2 in range(d2):
                for p1 in range(d1):
                    row = [Fraction(0)] * nvar
                    for q1 in range(d1):
                        row[var(p3, p2, q1)] += r1.rho[a][p1][q1]
                    for q3 in range(d3):
                        row[var(q3, p2, p1)] -= r3.rho[a][q3][p3]
                    for q2 in range(d2):
                        row[var(p3, q2, p1)] -= r2.rho[a][q2][p2]
                    if any(row):
                        rows.append(row)
    kernel = _exact.nullspace(_exact.mat(rows, nvar)) if rows else _exact.nullspace(_exact.zeros(0, nvar))
    if not kernel:
        raise NoInvariant(f"no invariant map {labs[0]} (x) {labs[1]} -> {labs[2]} for {spec.name}")
    if not fusion_allowed(spec, *labs, k):
        raise FusionForbidden(f"channel {labs[0]} x {labs[1]} -> {labs[2]} is forbidden at level k = {k}")
    for lab in labs:
        if label_level(lab) > k:
            raise LieError(f"lambda(theta) = {label_level(lab)} exceeds level k = {k}")
    if len(kernel) > 1:
        raise NotImplementedError("fusion multiplicity > 1 is not supported")
    v = kernel[0]
    lead = next(x for x in v if x)
    v = [x / lead for x in v]
    W = tuple(tuple(tuple(v[var(p3, p2, p1)] for p1 in range(d1)) for p2 in range(d2)) for p3 in range(d3))
    return GMap(spec, k, labs, W)


@dataclass(frozen=True)
class LaurentElem:
    """``coeff * z**power``; the power differs from ``-tau`` by an integer."""

    coeff: Fraction
    power: Fraction

    def __call__(self, z: complex) -> complex:
        import cmath

        if self.coeff == 0:
            return 0j
        return float(self.coeff) * cmath.exp(float(self.power) * cmath.log(z))


def _as_charge(phi: int | Charge) -> dict[int, Fraction]:
    if isinstance(phi, int):
        return {phi: Fraction(1)}
    return {int(t): Fraction(c) for t, c in phi.items() if c}


def matrix_element(W: GMap, phi3: int | Charge, left: ModeMonomial, right: ModeMonomial) -> LaurentElem:
    """Exact ``<left, Y(phi3, z) right>`` for negative-mode words on top vectors.

    ``left`` lives in the module with top ``lambda_1`` and ``right`` in the one
    with top ``lambda_2``.  The result is ``coeff * z**(level(left) - level(right) - tau)``.
    """
    if any(n >= 0 for _, n in left.word) or any(n >= 0 for _, n in right.word):
        raise ValueError("matrix_element expects words of strictly negative modes")
    phi = _as_charge(phi3)
    total = Fraction(0)
    for t, c in phi.items():
        total += c * _coef(W, left.word, left.top, right.word, right.top, t)
    return LaurentElem(total, Fraction(left.level - right.level) - W.tau)


@lru_cache(maxsize=500_000)
def _coef(W: GMap, lw: Word, p1: int, rw: Word, p2: int, t: int) -> Fraction:
    spec = W.spec
    r3, r2, r1 = W.reps
    if lw:
        (a, r), rest = lw[0], lw[1:]
        b, sign = spec.involution[a]
        total = Fraction(0)
        for (neg, t2), c in reduce_on_top(r2, W.k, ((b, -r),) + rw, p2).items():
            total += c * _coef(W, rest, p1, neg, t2, t)
        for t3, c in r3.apply(b, {t: Fraction(1)}).items():
            total += c * _coef(W, rest, p1, rw, p2, t3)
        return sign * total
    if rw:
        (a, _), rest = rw[0], rw[1:]
        total = Fraction(0)
        for t3, c in r3.apply(a, {t: Fraction(1)}).items():
            total -= c * _coef(W, (), p1, rest, p2, t3)
        return total
    return sum((r1.gram[p1][q] * W.W[t][p2][q] for q in range(r1.dim)), Fraction(0))


@dataclass
class ModeBlock:
    """Exact matrices of ``y(phi)_{tau, m}``: ``blocks[n]`` maps level ``n`` of B to level ``n - m`` of C."""

    phi: dict[int, Fraction]
    m: int
    tau: Fraction
    blocks: dict[int, fmpq_mat]
    shapes: dict[int, tuple[int, int]]

    def block(self, n: int) -> fmpq_mat:
        if n in self.blocks:
            return self.blocks[n]
        rows, cols = self.shapes[n]
        return _exact.zeros(rows, cols)


@dataclass
class Intertwiner:
    """All mode blocks of an intertwiner of type ``(C; A, B)`` on levels ``<= M``.

    ``Y[(t, p, n)]`` is the block from level ``n`` of B to level ``p`` of C for
    charge ``phi_t`` (a top-level basis vector of A), i.e. mode ``m = n - p``.
    ``inner[(t, p, n)]`` holds the same block as inner products
    ``<c_i, y b_j>`` against the level bases.
    """

    gmap: GMap
    B: TruncModule
    C: TruncModule
    M: int
    Y: dict[tuple[int, int, int], fmpq_mat] = field(default_factory=dict, repr=False)
    inner: dict[tuple[int, int, int], fmpq_mat] = field(default_factory=dict, repr=False)
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def tau(self) -> Fraction:
        return self.gmap.tau

    @property
    def charge_dim(self) -> int:
        return len(self.gmap.W)

    def block(self, phi: int | Charge, p: int, n: int) -> fmpq_mat:
        """Block from level ``n`` of B to level ``p`` of C (zero outside ``0..M``)."""
        if not (0 <= p <= self.M and 0 <= n <= self.M):
            return _exact.zeros(self.C.dim(p), self.B.dim(n))
        out = _exact.zeros(self.C.dim(p), self.B.dim(n))
        for t, c in _as_charge(phi).items():
            out += self.Y[(t, p, n)] * _exact.q(c)
        return out

    def mode(self, phi: int | Charge, m: int) -> ModeBlock:
        blocks = {}
        shapes = {}
        for n in range(self.M + 1):
            p = n - m
            if 0 <= p <= self.M:
                blocks[n] = self.block(phi, p, n)
            shapes[n] = (self.C.dim(p), self.B.dim(n))
        return ModeBlock(_as_charge(phi), m, self.tau, blocks, shapes)


def build_intertwiner(spec: LieSpec, k: int, lam3, lam2, lam1, M: int, gmap: GMap | None = None) -> Intertwiner:
    """Solve ``W`` and generate every block ``y(phi_t)`` between levels ``<= M``."""
    W = gmap if gmap is not None else solve_g_intertwiner(spec, lam3, lam2, lam1, k)
    return _build_intertwiner(W, M)


@lru_cache(maxsize=32)
def _build_intertwiner(W: GMap, M: int) -> Intertwiner:
    spec, k = W.spec, W.k
    lab3, lab2, lab1 = W.labels
    B = build_module(spec, k, lab2, M)
    C = build_module(spec, k, lab1, M)
    r3, r2, r1 = W.reps
    d3 = r3.dim
    rho3 = [_exact.mat(r3.rho[a]) if d3 else _exact.zeros(0, 0) for a in range(spec.dim)]
    Mt: dict[tuple[int, int, int], fmpq_mat] = {}

    def get(t: int, p: int, n: int) -> fmpq_mat:
        if p < 0 or n < 0:
            return _exact.zeros(C.dim(p), B.dim(n))
        return Mt[(t, p, n)]

    for t in range(d3):
        g = _exact.zeros(r1.dim, r2.dim)
        for p1 in range(r1.dim):
            for p2 in range(r2.dim):
                s = sum((r1.gram[p1][q] * W.W[t][p2][q] for q in range(r1.dim)), Fraction(0))
                if s:
                    g[p1, p2] = _exact.q(s)
        Mt[(t, 0, 0)] = g

    def mix(a: int, p: int, n: int, t: int) -> fmpq_mat:
        # sum_t' rho3(a)[t', t] M^{t'}_{p, n}
        out = _exact.zeros(C.dim(p), B.dim(n))
        for t2 in range(d3):
            c = rho3[a][t2, t]
            if c != 0:
                out += get(t2, p, n) * c
        return out

    for n in range(1, M + 1):
        lv = B.levels[n]
        for t in range(d3):
            out = _exact.zeros(C.dim(0), lv.dim)
            for j, (a, s) in enumerate(lv.parents):
                col = mix(a, 0, n - 1, t)
                for i in range(C.dim(0)):
                    x = col[i, s]
                    if x != 0:
                        out[i, j] = -x
            Mt[(t, 0, n)] = out
    for p in range(1, M + 1):
        lv = C.levels[p]
        for n in range(M + 1):
            for t in range(d3):
                out = _exact.zeros(lv.dim, B.dim(n))
                for i, (a, s) in enumerate(lv.parents):
                    b, sign = spec.involution[a]
                    row = _exact.sub(mix(b, p - 1, n, t), [s], range(B.dim(n)))
                    if n >= 1:
                        row += _exact.sub(get(t, p - 1, n - 1), [s], range(B.dim(n - 1))) * B.mode(b, 1, n)
                    if sign != 1:
                        row = row * _exact.q(sign)
                    for _, j, x in _exact.iter_nonzero(row):
                        out[i, j] = x
                Mt[(t, p, n)] = out
    Y = {key: C.levels[key[1]].gram_inv * val for key, val in Mt.items()}
    return Intertwiner(W, B, C, M, Y, Mt)


def mode_matrix(inter: Intertwiner, phi3: int | Charge, m: int) -> ModeBlock:
    """The mode ``y(phi3)_{tau, m}`` as exact blocks between level bases."""
    if abs(m) > inter.M:
        raise TruncationError(f"|m| = {abs(m)} exceeds cutoff {inter.M}")
    return inter.mode(phi3, m)


@dataclass
class IntertwinerReport:
    passed: bool
    checked: int
    failures: list[tuple[int, int, int, int]]


def check_intertwiner(inter: Intertwiner, max_n: int = 2) -> IntertwinerReport:
    """Verify ``v(n) y(phi)_m - y(phi)_m v(n) = y(v phi)_{m+n}`` on representable levels.

    Failures are reported as ``(v, n, m, level)`` with ``level`` the source
    level in B.  Charges run over the top-level basis of A.
    """
    spec = inter.gmap.spec
    B, C, M = inter.B, inter.C, inter.M
    r3 = inter.gmap.reps[0]
    failures: list[tuple[int, int, int, int]] = []
    checked = 0

    for t in range(r3.dim):
        for v in range(spec.dim):
            vphi = r3.apply(v, {t: Fraction(1)})
            for n in range(-max_n, max_n + 1):
                for m in range(-M, M + 1):
                    for L in range(M + 1):
                        final = L - m - n
                        if final < 0 or final > M:
                            continue
                        mid_c = L - m
                        mid_b = L - n
                        if mid_c > M or mid_b > M:
                            continue
                        lhs = _exact.zeros(C.dim(final), B.dim(L))
                        if mid_c >= 0:
                            lhs += C.mode(v, n, mid_c) * inter.block(t, mid_c, L)
                        if mid_b >= 0:
                            lhs -= inter.block(t, final, mid_b) * B.mode(v, n, L)
                        rhs = inter.block(vphi, final, L) if vphi else _exact.zeros(C.dim(final), B.dim(L))
                        checked += 1
                        if lhs != rhs:
                            failures.append((v, n, m, L))
    return IntertwinerReport(not failures, checked, failures)


def zero_mode_matches(inter: Intertwiner) -> bool:
    """Exact check that the top-to-top block of every charge reproduces ``W``."""
    W = inter.gmap
    for t in range(inter.charge_dim):
        blk = inter.block(t, 0, 0)
        for i in range(blk.nrows()):
            for j in range(blk.ncols()):
                if blk[i, j] != _exact.q(W.W[t][j][i]):
                    return False
    return True
