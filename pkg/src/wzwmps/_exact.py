"""Thin helpers around ``flint.fmpq_mat`` for exact rational linear algebra."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from flint import fmpq, fmpq_mat


def q(x: Fraction | int) -> fmpq:
    if isinstance(x, Fraction):
        return fmpq(x.numerator, x.denominator)
    return fmpq(x)


def frac(x: fmpq) -> Fraction:
    return Fraction(int(x.p), int(x.q))


def mat(rows: Sequence[Sequence[Fraction | int]], ncols: int | None = None) -> fmpq_mat:
    n = len(rows)
    m = len(rows[0]) if n else (ncols or 0)
    return fmpq_mat(n, m, [q(x) for r in rows for x in r])


def zeros(n: int, m: int) -> fmpq_mat:
    return fmpq_mat(n, m)


def identity(n: int) -> fmpq_mat:
    out = fmpq_mat(n, n)
    for i in range(n):
        out[i, i] = 1
    return out


def scalar(n: int, c: Fraction | int) -> fmpq_mat:
    out = fmpq_mat(n, n)
    cq = q(c)
    for i in range(n):
        out[i, i] = cq
    return out


def sub(a: fmpq_mat, rows: Sequence[int], cols: Sequence[int]) -> fmpq_mat:
    out = fmpq_mat(len(rows), len(cols))
    for i, r in enumerate(rows):
        for j, c in enumerate(cols):
            x = a[r, c]
            if x != 0:
                out[i, j] = x
    return out


def hstack(blocks: Sequence[fmpq_mat], nrows: int) -> fmpq_mat:
    ncols = sum(b.ncols() for b in blocks)
    out = fmpq_mat(nrows, ncols)
    off = 0
    for b in blocks:
        for i in range(nrows):
            for j in range(b.ncols()):
                x = b[i, j]
                if x != 0:
                    out[i, off + j] = x
        off += b.ncols()
    return out


def vstack(blocks: Sequence[fmpq_mat], ncols: int) -> fmpq_mat:
    nrows = sum(b.nrows() for b in blocks)
    out = fmpq_mat(nrows, ncols)
    off = 0
    for b in blocks:
        for i in range(b.nrows()):
            for j in range(ncols):
                x = b[i, j]
                if x != 0:
                    out[off + i, j] = x
        off += b.nrows()
    return out


def is_zero(a: fmpq_mat) -> bool:
    return all(x == 0 for x in a.entries())


def to_float(a: fmpq_mat) -> np.ndarray:
    n, m = a.nrows(), a.ncols()
    if n == 0 or m == 0:
        return np.zeros((n, m))
    return np.array([float(x) for x in a.entries()], dtype=float).reshape(n, m)


def to_fractions(a: fmpq_mat) -> list[list[Fraction]]:
    return [[frac(a[i, j]) for j in range(a.ncols())] for i in range(a.nrows())]


def pivot_columns(a: fmpq_mat) -> list[int]:
    """Indices of the first maximal set of linearly independent columns."""
    if a.nrows() == 0 or a.ncols() == 0:
        return []
    red, rank = a.rref()
    cols: list[int] = []
    row = 0
    for j in range(a.ncols()):
        if row < rank and red[row, j] != 0:
            cols.append(j)
            row += 1
    return cols


def ldl_pivots(a: fmpq_mat) -> list[Fraction]:
    """Diagonal pivots of a symmetric LDL^T elimination without pivoting.

    Zero pivots are skipped (their row and column must then vanish for a PSD
    input); the returned list therefore certifies positive semi-definiteness
    when all entries are ``>= 0``.
    """
    n = a.nrows()
    work = [[frac(a[i, j]) for j in range(n)] for i in range(n)]
    pivots: list[Fraction] = []
    for k in range(n):
        p = work[k][k]
        pivots.append(p)
        if p == 0:
            continue
        rowk = work[k]
        for i in range(k + 1, n):
            f = work[i][k]
            if f:
                f = f / p
                wi = work[i]
                for j in range(k + 1, n):
                    if rowk[j]:
                        wi[j] -= f * rowk[j]
    return pivots


def iter_nonzero(a: fmpq_mat) -> Iterable[tuple[int, int, fmpq]]:
    m = a.ncols()
    for idx, x in enumerate(a.entries()):
        if x != 0:
            yield idx // m, idx % m, x


def nullspace(a: fmpq_mat) -> list[list[Fraction]]:
    """Basis of the right kernel, one vector per free column of the rref."""
    n = a.ncols()
    if a.nrows() == 0:
        return [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]
    red, rank = a.rref()
    piv = pivot_columns(a)
    free = [j for j in range(n) if j not in set(piv)]
    out = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for r, p in enumerate(piv):
            v[p] = -frac(red[r, f])
        out.append(v)
    return out


def congruence_frame(g: fmpq_mat) -> tuple[fmpq_mat, list[fmpq]]:
    """Exact ``T`` and diagonal ``D`` with ``T g T^T = diag(D)`` for positive definite ``g``.

    Block elimination on Schur complements keeps all arithmetic in flint.
    """
    n = g.nrows()
    if n == 0:
        return fmpq_mat(0, 0), []
    if n == 1:
        return identity(1), [g[0, 0]]
    h = n // 2
    a = sub(g, range(h), range(h))
    b = sub(g, range(h), range(h, n))
    c = sub(g, range(h, n), range(h, n))
    aib = a.solve(b)
    ta, da = congruence_frame(a)
    ts, ds = congruence_frame(c - b.transpose() * aib)
    low = ts * aib.transpose()
    t = fmpq_mat(n, n)
    for i, j, x in iter_nonzero(ta):
        t[i, j] = x
    for i, j, x in iter_nonzero(low):
        t[h + i, j] = -x
    for i, j, x in iter_nonzero(ts):
        t[h + i, h + j] = x
    return t, da + ds
