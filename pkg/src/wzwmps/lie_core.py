"""Exact data for simple Lie algebras of type A and their irreducible representations.

All scalars are :class:`fractions.Fraction`.  The invariant form is normalised
so that the highest root has squared length 2, the basis is of Chevalley type
(``e``, ``f``, ``h`` for sl(2)) and the involution used for adjoints is
``e <-> f``, ``h -> h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Sequence

from . import _exact

Rational = Fraction
Matrix = tuple[tuple[Fraction, ...], ...]

__all__ = [
    "Rational",
    "LieSpec",
    "Irrep",
    "LieError",
    "lie_algebra",
    "sl",
    "irrep",
    "conformal_weight",
    "central_charge",
    "casimir_matrix",
    "dynkin_label",
    "label_level",
]


class LieError(ValueError):
    """Raised for invalid Lie-algebra input (bad index, non-dominant weight, ...)."""


def _zeros(n: int, m: int | None = None) -> list[list[Fraction]]:
    m = n if m is None else m
    return [[Fraction(0)] * m for _ in range(n)]


def _matmul(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    n, k, m = len(a), len(b), len(b[0]) if b else 0
    out = _zeros(n, m)
    for i in range(n):
        ai = a[i]
        for t in range(k):
            x = ai[t]
            if x:
                bt = b[t]
                row = out[i]
                for j in range(m):
                    if bt[j]:
                        row[j] += x * bt[j]
    return out


def _freeze(mat: Sequence[Sequence[Fraction]]) -> Matrix:
    return tuple(tuple(Fraction(x) for x in row) for row in mat)


@dataclass(frozen=True, eq=False)
class LieSpec:
    """Structure data of a simple Lie algebra in a fixed basis.

    Attributes
    ----------
    name:
        Cartan label such as ``"A1"``.
    basis:
        Names of the basis elements, e.g. ``("e", "f", "h")``.
    bracket:
        ``bracket[i][j]`` is a tuple of ``(l, c)`` with ``[e_i, e_j] = sum c e_l``.
    form:
        Invariant symmetric form ``form[i][j] = (e_i, e_j)``.
    involution:
        ``involution[i] = (j, s)`` meaning ``eta(e_i) = s * e_j``.
    dual_coxeter:
        Dual Coxeter number.
    rank:
        Rank of the algebra (number of Dynkin labels).
    """

    name: str
    basis: tuple[str, ...]
    bracket: tuple[tuple[tuple[tuple[int, Fraction], ...], ...], ...]
    form: Matrix
    involution: tuple[tuple[int, Fraction], ...]
    dual_coxeter: int
    rank: int
    fundamental: tuple[Matrix, ...] = field(repr=False, default=())

    @property
    def dim(self) -> int:
        return len(self.basis)

    def index(self, name: str | int) -> int:
        if isinstance(name, int):
            if not 0 <= name < self.dim:
                raise LieError(f"basis index {name} out of range for {self.name}")
            return name
        try:
            return self.basis.index(name)
        except ValueError:
            raise LieError(f"unknown basis element {name!r} for {self.name}") from None

    def structure(self, i: int | str, j: int | str) -> tuple[dict[int, Fraction], Fraction]:
        """Return ``([e_i, e_j]`` as ``{l: coeff}``, ``(e_i, e_j))``."""
        i, j = self.index(i), self.index(j)
        return dict(self.bracket[i][j]), self.form[i][j]

    def eta(self, i: int) -> tuple[int, Fraction]:
        return self.involution[i]

    @property
    def inverse_form(self) -> Matrix:
        return _inverse_form(self)


@lru_cache(maxsize=None)
def _inverse_form(spec: LieSpec) -> Matrix:
    inv = _exact.mat(spec.form).inv()
    return _freeze(_exact.to_fractions(inv))


def _decompose(target: list[list[Fraction]], mats: list[list[list[Fraction]]]) -> dict[int, Fraction]:
    """Expand a matrix in the span of ``mats`` (exact, must succeed)."""
    n = len(target)
    rows = n * n
    a = _exact.mat([[mats[c][r // n][r % n] for c in range(len(mats))] for r in range(rows)])
    b = _exact.mat([[target[r // n][r % n]] for r in range(rows)])
    # exact solve through the normal equations; verified below
    at = a.transpose()
    x = (at * a).solve(at * b)
    out = {c: _exact.frac(x[c, 0]) for c in range(len(mats)) if x[c, 0] != 0}
    check = _zeros(n)
    for c, v in out.items():
        for r in range(n):
            for s in range(n):
                check[r][s] += v * mats[c][r][s]
    if check != target:
        raise LieError("matrix not in the span of the basis")
    return out


@lru_cache(maxsize=None)
def sl(n: int) -> LieSpec:
    """The algebra sl(n) = A_{n-1} in the matrix-unit Chevalley basis."""
    if n < 2:
        raise LieError("sl(n) requires n >= 2")
    names: list[str] = []
    mats: list[list[list[Fraction]]] = []
    if n == 2:
        order = [("e", 0, 1), ("f", 1, 0)]
    else:
        order = [(f"E{i + 1}{j + 1}", i, j) for i in range(n) for j in range(n) if i != j]
    for name, i, j in order:
        m = _zeros(n)
        m[i][j] = Fraction(1)
        names.append(name)
        mats.append(m)
    for i in range(n - 1):
        m = _zeros(n)
        m[i][i] = Fraction(1)
        m[i + 1][i + 1] = Fraction(-1)
        names.append("h" if n == 2 else f"h{i + 1}")
        mats.append(m)
    dim = len(mats)
    bracket = []
    form = []
    for a in range(dim):
        brow = []
        frow = []
        for b in range(dim):
            ab = _matmul(mats[a], mats[b])
            ba = _matmul(mats[b], mats[a])
            comm = [[ab[r][s] - ba[r][s] for s in range(n)] for r in range(n)]
            coeffs = _decompose(comm, mats) if any(any(r) for r in comm) else {}
            brow.append(tuple(sorted(coeffs.items())))
            frow.append(sum((ab[r][r] for r in range(n)), Fraction(0)))
        bracket.append(tuple(brow))
        form.append(tuple(frow))
    involution = []
    for a in range(dim):
        t = [list(r) for r in zip(*mats[a])]
        involution.append((next(b for b in range(dim) if mats[b] == t), Fraction(1)))
    return LieSpec(
        name=f"A{n - 1}",
        basis=tuple(names),
        bracket=tuple(bracket),
        form=_freeze(form),
        involution=tuple(involution),
        dual_coxeter=n,
        rank=n - 1,
        fundamental=tuple(_freeze(m) for m in mats),
    )


def lie_algebra(name: str) -> LieSpec:
    """Look up an algebra by Cartan label (``"A1"``, ``"A2"``, ...)."""
    if len(name) >= 2 and name[0] == "A" and name[1:].isdigit() and int(name[1:]) >= 1:
        return sl(int(name[1:]) + 1)
    raise LieError(f"unsupported algebra {name!r}; only type A is implemented")


@dataclass(frozen=True, eq=False)
class Irrep:
    """Irreducible highest-weight representation on a weight basis.

    ``rho[i]`` is the exact action matrix of basis element ``i``.  ``gram`` is the
    diagonal inner product on the weight basis; it is the identity whenever
    the representation admits a rational orthonormal weight basis.
    """

    spec: LieSpec
    label: tuple[int, ...]
    rho: tuple[Matrix, ...]
    gram: Matrix
    weights: tuple[tuple[Fraction, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.gram)

    def apply(self, i: int, vec: dict[int, Fraction]) -> dict[int, Fraction]:
        """Act with basis element ``i`` on a sparse coefficient vector."""
        out: dict[int, Fraction] = {}
        mat = self.rho[i]
        for t, c in vec.items():
            for s in range(self.dim):
                x = mat[s][t]
                if x:
                    out[s] = out.get(s, Fraction(0)) + c * x
        return {s: v for s, v in out.items() if v}


def dynkin_label(spec: LieSpec, lam: int | Sequence[int]) -> tuple[int, ...]:
    """Normalise a Dynkin label given as an int (rank 1) or a sequence."""
    if isinstance(lam, int):
        lab: tuple[int, ...] = (lam,) + (0,) * (spec.rank - 1)
    else:
        lab = tuple(int(x) for x in lam)
    if len(lab) != spec.rank:
        raise LieError(f"Dynkin label {lam!r} has wrong length for {spec.name}")
    if any(x < 0 for x in lab):
        raise LieError(f"Dynkin label {lam!r} is not dominant")
    return lab


def label_level(lab: tuple[int, ...]) -> int:
    """lambda(theta) for type A, where all comarks equal one."""
    return sum(lab)


@lru_cache(maxsize=None)
def _irrep(spec: LieSpec, lab: tuple[int, ...]) -> Irrep:
    if spec.rank == 1:
        return _irrep_sl2(spec, lab[0])
    n = spec.rank + 1
    if all(x == 0 for x in lab):
        zero = ((Fraction(0),),)
        return Irrep(spec, lab, tuple(zero for _ in range(spec.dim)), ((Fraction(1),),), ((Fraction(0),) * spec.rank,))
    if lab == (1,) + (0,) * (spec.rank - 1):
        ident = tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))
        h_idx = [spec.basis.index(f"h{i + 1}") for i in range(spec.rank)]
        weights = tuple(tuple(spec.fundamental[h][r][r] for h in h_idx) for r in range(n))
        return Irrep(spec, lab, spec.fundamental, ident, weights)
    raise LieError(f"irrep {lab} of {spec.name} not implemented (trivial and defining only)")


def _irrep_sl2(spec: LieSpec, two_j: int) -> Irrep:
    # basis v_r = f^r v_top, r = 0..2j; e v_r = r(2j-r+1) v_{r-1}; norms |v_r|^2 = prod of those
    d = two_j + 1
    e, f, h = _zeros(d), _zeros(d), _zeros(d)
    for r in range(d):
        h[r][r] = Fraction(two_j - 2 * r)
        if r + 1 < d:
            f[r + 1][r] = Fraction(1)
        if r >= 1:
            e[r - 1][r] = Fraction(r * (two_j - r + 1))
    norms = [Fraction(1)]
    for r in range(1, d):
        norms.append(norms[-1] * r * (two_j - r + 1))
    gram = _zeros(d)
    for r in range(d):
        gram[r][r] = norms[r]
    by_name = {"e": e, "f": f, "h": h}
    rho = tuple(_freeze(by_name[name]) for name in spec.basis)
    weights = tuple((Fraction(two_j - 2 * r),) for r in range(d))
    return Irrep(spec, (two_j,), rho, _freeze(gram), weights)


def irrep(spec: LieSpec, lam: int | Sequence[int]) -> Irrep:
    """Irreducible representation with Dynkin label ``lam``.

    The weight basis is ordered from the highest weight downward.
    """
    return _irrep(spec, dynkin_label(spec, lam))


def casimir_matrix(rep: Irrep) -> list[list[Fraction]]:
    """Quadratic Casimir sum_ij form^{ij} rho(e_i) rho(e_j)."""
    spec = rep.spec
    inv = spec.inverse_form
    d = rep.dim
    out = _zeros(d)
    for i, j in product(range(spec.dim), repeat=2):
        c = inv[i][j]
        if c:
            prod_ = _matmul(rep.rho[i], rep.rho[j])
            for r in range(d):
                for s in range(d):
                    out[r][s] += c * prod_[r][s]
    return out


def conformal_weight(spec: LieSpec, lam: int | Sequence[int], k: int) -> Fraction:
    """Lowest conformal weight Casimir(lambda) / (2 (k + g)).

    >>> conformal_weight(sl(2), 1, 1)
    Fraction(1, 4)
    """
    lab = dynkin_label(spec, lam)
    if k < 1:
        raise LieError("level k must be a positive integer")
    if label_level(lab) > k:
        raise LieError(f"lambda(theta) = {label_level(lab)} exceeds level k = {k}")
    cas = casimir_matrix(irrep(spec, lab))[0][0]
    return cas / (2 * (k + spec.dual_coxeter))


def central_charge(spec: LieSpec, k: int | Fraction) -> Fraction:
    """Sugawara central charge k dim(g) / (k + g)."""
    k = Fraction(k)
    if k <= 0:
        raise LieError("level k must be positive")
    return k * spec.dim / (k + spec.dual_coxeter)
