"""Level-truncated irreducible highest-weight modules of an affine Lie algebra.

Two independent constructions live here.

* Word level: :func:`normal_order` and :func:`gram_entry` manipulate mode
  monomials ``a1(n1) ... ar(nr) phi_t`` symbolically.  They are slow but
  transparent and serve as a reference.
* Matrix level: :func:`build_module` produces, for every level ``L <= M``, an
  independent basis, its exact Gram matrix and exact matrices for all modes.
  Level ``L`` is spanned by ``a(-1) s`` with ``s`` running over the basis of
  level ``L - 1``, because the ``a(-1)`` generate all negative modes.

Inner products are real: ``<a(n) u, v> = <u, eta(a)(-n) v>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

from flint import fmpq_mat

from . import _exact
from .lie_core import Irrep, LieError, LieSpec, central_charge, conformal_weight, dynkin_label, irrep, label_level

Word = tuple[tuple[int, int], ...]
TermList = dict[Word, Fraction]

__all__ = [
    "Word",
    "TermList",
    "ModeMonomial",
    "TruncModule",
    "TruncationError",
    "normal_order",
    "reduce_on_top",
    "gram_entry",
    "spanning_monomials",
    "build_module",
    "mode_action",
    "candidate_gram",
    "commutator_defect",
    "check_commutators",
    "check_adjointness",
    "check_gram_psd",
]


class TruncationError(IndexError):
    """A mode action would leave the range of built levels."""


@dataclass(frozen=True)
class ModeMonomial:
    """The vector ``a1(n1) ... ar(nr) phi_top``; modes are read left to right."""

    word: Word
    top: int = 0

    @property
    def level(self) -> int:
        return -sum(n for _, n in self.word)


def _key(mode: tuple[int, int]) -> tuple[int, int]:
    return mode[1], mode[0]


def normal_order(spec: LieSpec, k: int | Fraction, word: Sequence[tuple[int, int]]) -> TermList:
    """Rewrite a word of modes acting on a top-level vector in normal order.

    Output words have modes ``n1 <= n2 <= ... <= 0`` (ties by basis index).
    Terms whose rightmost mode is positive are dropped, since such modes
    annihilate the top level.

    >>> from wzwmps.lie_core import sl
    >>> normal_order(sl(2), 1, [(0, 1), (1, -1)])
    {((2, 0),): Fraction(1, 1), (): Fraction(1, 1)}
    """
    return dict(_normal_order(spec, Fraction(k), tuple(word)))


@lru_cache(maxsize=200_000)
def _normal_order(spec: LieSpec, k: Fraction, word: Word) -> tuple[tuple[Word, Fraction], ...]:
    if word and word[-1][1] > 0:
        return ()
    pos = -1
    for i in range(len(word) - 2, -1, -1):
        if _key(word[i]) > _key(word[i + 1]):
            pos = i
            break
    if pos < 0:
        return ((word, Fraction(1)),)
    (x, n), (y, m) = word[pos], word[pos + 1]
    head, tail = word[:pos], word[pos + 2 :]
    acc: dict[Word, Fraction] = {}

    def add(terms: tuple[tuple[Word, Fraction], ...], c: Fraction) -> None:
        for w, v in terms:
            acc[w] = acc.get(w, Fraction(0)) + c * v

    add(_normal_order(spec, k, head + ((y, m), (x, n)) + tail), Fraction(1))
    for l, c in spec.bracket[x][y]:
        add(_normal_order(spec, k, head + ((l, n + m),) + tail), c)
    if n + m == 0 and spec.form[x][y]:
        add(_normal_order(spec, k, head + tail), n * spec.form[x][y] * k)
    return tuple((w, v) for w, v in acc.items() if v)


def reduce_on_top(rep: Irrep, k: int | Fraction, word: Sequence[tuple[int, int]], top: int) -> dict[tuple[Word, int], Fraction]:
    """Expand ``word . phi_top`` as a combination of negative-mode words on top vectors."""
    out: dict[tuple[Word, int], Fraction] = {}
    for w, c in _normal_order(rep.spec, Fraction(k), tuple(word)):
        cut = len(w)
        while cut > 0 and w[cut - 1][1] == 0:
            cut -= 1
        vec = {top: Fraction(1)}
        for a, _ in reversed(w[cut:]):
            vec = rep.apply(a, vec)
            if not vec:
                break
        neg = w[:cut]
        for t, v in vec.items():
            key = (neg, t)
            out[key] = out.get(key, Fraction(0)) + c * v
    return {key: v for key, v in out.items() if v}


def gram_entry(m1: ModeMonomial, m2: ModeMonomial, rep: Irrep, k: int | Fraction) -> Fraction:
    """Exact inner product of two monomial vectors of the module with top level ``rep``.

    The leftmost mode of ``m1`` is moved to the right as its adjoint until the
    left vector is a top-level vector.
    """
    if m1.level != m2.level:
        return Fraction(0)
    return _gram(rep, Fraction(k), m1.word, m1.top, m2.word, m2.top)


@lru_cache(maxsize=200_000)
def _gram(rep: Irrep, k: Fraction, w1: Word, s: int, w2: Word, t: int) -> Fraction:
    if not w1:
        total = Fraction(0)
        for (neg, t2), c in reduce_on_top(rep, k, w2, t).items():
            if not neg:
                total += c * rep.gram[s][t2]
        return total
    (a, n), rest = w1[0], w1[1:]
    b, sign = rep.spec.involution[a]
    level = -sum(m for _, m in rest)
    total = Fraction(0)
    for (neg, t2), c in reduce_on_top(rep, k, ((b, -n),) + w2, t).items():
        if -sum(m for _, m in neg) == level:
            total += c * _gram(rep, k, rest, s, neg, t2)
    return sign * total


def _colored_partitions(level: int, colors: int, max_part: int | None = None, min_color: int = 0) -> Iterator[Word]:
    # parts as (color, -size), sizes non-increasing left to right, ties by color
    if level == 0:
        yield ()
        return
    top = level if max_part is None else min(max_part, level)
    for size in range(top, 0, -1):
        first = min_color if (max_part is not None and size == max_part) else 0
        for c in range(first, colors):
            for rest in _colored_partitions(level - size, colors, size, c):
                yield ((c, -size),) + rest


def spanning_monomials(spec: LieSpec, top_dim: int, level: int) -> list[ModeMonomial]:
    """Normal-ordered monomials of a given level over every top-level vector."""
    return [ModeMonomial(w, t) for w in _colored_partitions(level, spec.dim) for t in range(top_dim)]


@dataclass
class _Level:
    parents: list[tuple[int, int]]
    gram: fmpq_mat
    gram_inv: fmpq_mat
    rank: int
    candidates: int
    words: list[ModeMonomial]

    @property
    def dim(self) -> int:
        return self.gram.nrows()


@dataclass
class TruncModule:
    """Irreducible module ``M_{k, lambda}`` truncated at level ``M``.

    ``levels[L].parents[j] = (a, s)`` records that basis vector ``j`` of level
    ``L`` is ``a(-1)`` applied to basis vector ``s`` of level ``L - 1``.  At
    level 0, ``parents[j] = (-1, j)`` labels the top-level weight vectors.
    """

    spec: LieSpec
    k: int
    label: tuple[int, ...]
    M: int
    rep: Irrep
    h: Fraction
    c: Fraction
    levels: list[_Level]
    _modes: dict[tuple[int, int, int], fmpq_mat] = field(default_factory=dict, repr=False)
    _floats: dict[str, object] = field(default_factory=dict, repr=False)

    @property
    def level_dims(self) -> list[int]:
        return [lv.dim for lv in self.levels]

    @property
    def gram_ranks(self) -> list[int]:
        return [lv.rank for lv in self.levels]

    def dim(self, level: int) -> int:
        return self.levels[level].dim if 0 <= level <= self.M else 0

    def cumulative_dim(self, cutoff: int) -> int:
        """d_B(cutoff), the number of states at levels ``<= cutoff``."""
        if cutoff > self.M:
            raise TruncationError(f"cutoff {cutoff} exceeds built level {self.M}")
        return sum(self.level_dims[: cutoff + 1])

    def gram(self, level: int) -> fmpq_mat:
        return self.levels[level].gram

    def basis_words(self, level: int) -> list[ModeMonomial]:
        return self.levels[level].words

    def mode(self, a: int, n: int, level: int) -> fmpq_mat:
        """Exact matrix of ``a(n)`` from level ``level`` to level ``level - n``."""
        target = level - n
        if not (0 <= level <= self.M and 0 <= target <= self.M):
            raise TruncationError(f"mode {n} from level {level} leaves levels 0..{self.M}")
        key = (a, n, level)
        hit = self._modes.get(key)
        if hit is not None:
            return hit
        if n > 0:
            out = self._positive(a, n, level)
        elif n == 0:
            out = self._zero(a, level)
        else:
            b, sign = self.spec.involution[a]
            pos = self.mode(b, -n, target)
            out = self.levels[target].gram_inv * (pos.transpose() * self.levels[level].gram)
            if sign != 1:
                out = out * _exact.q(sign)
        self._modes[key] = out
        return out

    def _creation(self, a: int, level: int) -> fmpq_mat:
        return self.mode(a, -1, level - 1)

    def _zero(self, b: int, level: int) -> fmpq_mat:
        if level == 0:
            return _exact.mat(self.rep.rho[b]) if self.rep.dim else _exact.zeros(0, 0)
        lv = self.levels[level]
        d = lv.dim
        prev = self.levels[level - 1].dim
        out = _exact.zeros(d, d)
        for a, cols, parents in _group_parents(lv.parents):
            block = self._creation(a, level) * _exact.sub(self.mode(b, 0, level - 1), range(prev), parents)
            for l, c in self.spec.bracket[b][a]:
                block += _exact.sub(self._creation(l, level), range(d), parents) * _exact.q(c)
            _place(out, block, cols)
        return out

    def _positive(self, b: int, n: int, level: int) -> fmpq_mat:
        lv = self.levels[level]
        d_tgt = self.dim(level - n)
        d_prev = self.dim(level - 1)
        out = _exact.zeros(d_tgt, lv.dim)
        for a, cols, parents in _group_parents(lv.parents):
            block = _exact.zeros(d_tgt, len(parents))
            if level - 1 - n >= 0:
                block += self._creation(a, level - n) * _exact.sub(self.mode(b, n, level - 1), range(self.dim(level - 1 - n)), parents)
            for l, c in self.spec.bracket[b][a]:
                block += _exact.sub(self.mode(l, n - 1, level - 1), range(d_tgt), parents) * _exact.q(c)
            if n == 1 and self.spec.form[b][a]:
                block += _exact.sub(_exact.identity(d_prev), range(d_prev), parents) * _exact.q(self.spec.form[b][a] * self.k)
            _place(out, block, cols)
        return out


def _group_parents(parents: list[tuple[int, int]]) -> list[tuple[int, list[int], list[int]]]:
    groups: dict[int, tuple[list[int], list[int]]] = {}
    for j, (a, s) in enumerate(parents):
        cols, ss = groups.setdefault(a, ([], []))
        cols.append(j)
        ss.append(s)
    return [(a, cols, ss) for a, (cols, ss) in sorted(groups.items())]


def _place(out: fmpq_mat, block: fmpq_mat, cols: list[int]) -> None:
    for i, j, x in _exact.iter_nonzero(block):
        out[i, cols[j]] = x


def _candidate_gram(mod: TruncModule, level: int) -> fmpq_mat:
    """Gram matrix of all ``a(-1) s`` with ``s`` in the basis of ``level - 1``."""
    spec = mod.spec
    prev = mod.levels[level - 1]
    d = prev.dim
    # X[b][a] = b(1) a(-1) restricted to level - 1
    xs: dict[tuple[int, int], fmpq_mat] = {}
    for b in range(spec.dim):
        for a in range(spec.dim):
            x = _exact.zeros(d, d)
            if level - 1 >= 1:
                x += mod._creation(a, level - 1) * mod.mode(b, 1, level - 1)
            for l, c in spec.bracket[b][a]:
                x += mod.mode(l, 0, level - 1) * _exact.q(c)
            if spec.form[b][a]:
                x += _exact.scalar(d, spec.form[b][a] * mod.k)
            xs[(b, a)] = x
    n = spec.dim
    blocks = []
    for a in range(n):
        b, sign = spec.involution[a]
        row = [prev.gram * xs[(b, a2)] * _exact.q(sign) for a2 in range(n)]
        blocks.append(_exact.hstack(row, d))
    mod._floats[f"x{level}"] = xs
    return _exact.vstack(blocks, n * d)


def build_module(spec: LieSpec, k: int, lam: int | Sequence[int], M: int) -> TruncModule:
    """Construct the irreducible level-``k`` module with top weight ``lam`` up to level ``M``."""
    return _build(spec, int(k), dynkin_label(spec, lam), int(M))


@lru_cache(maxsize=64)
def _build(spec: LieSpec, k: int, lab: tuple[int, ...], M: int) -> TruncModule:
    if M < 0:
        raise ValueError("cutoff M must be non-negative")
    if k < 1:
        raise LieError("level k must be a positive integer")
    if label_level(lab) > k:
        raise LieError(f"lambda(theta) = {label_level(lab)} exceeds level k = {k}; module does not exist")
    rep = irrep(spec, lab)
    g0 = _exact.mat(rep.gram)
    top = _Level(
        parents=[(-1, t) for t in range(rep.dim)],
        gram=g0,
        gram_inv=g0.inv(),
        rank=g0.rank(),
        candidates=rep.dim,
        words=[ModeMonomial((), t) for t in range(rep.dim)],
    )
    mod = TruncModule(spec, k, lab, M, rep, conformal_weight(spec, lab, k), central_charge(spec, k), [top])
    for level in range(1, M + 1):
        _grow(mod, level)
    return mod


def _grow(mod: TruncModule, level: int) -> None:
    spec = mod.spec
    prev = mod.levels[level - 1]
    d = prev.dim
    K = _candidate_gram(mod, level)
    piv = _exact.pivot_columns(K)
    G = _exact.sub(K, piv, piv)
    Ginv = G.inv() if piv else _exact.zeros(0, 0)
    parents = [(c // d, c % d) for c in piv]
    words = [ModeMonomial(((a, -1),) + prev.words[s].word, prev.words[s].top) for a, s in parents]
    mod.levels.append(_Level(parents, G, Ginv, len(piv), K.nrows(), words))
    # creation matrices a(-1): level - 1 -> level, from coordinates of the candidates
    for a in range(spec.dim):
        cols = list(range(a * d, (a + 1) * d))
        mod._modes[(a, -1, level - 1)] = Ginv * _exact.sub(K, piv, cols)
    # b(1) on the new level reuses the X matrices of the candidate Gram
    xs = mod._floats.pop(f"x{level}")
    for b in range(spec.dim):
        out = _exact.zeros(d, len(piv))
        for a, cols, ss in _group_parents(parents):
            _place(out, _exact.sub(xs[(b, a)], range(d), ss), cols)
        mod._modes[(b, 1, level)] = out


def candidate_gram(mod: TruncModule, level: int) -> fmpq_mat:
    """Full (rank-deficient) Gram matrix of the candidate spanning set at ``level >= 1``."""
    K = _candidate_gram(mod, level)
    mod._floats.pop(f"x{level}", None)
    return K


def mode_action(module: TruncModule, a: int, n: int, v: Sequence[Fraction | int], level: int) -> list[Fraction]:
    """Apply ``a(n)`` to the coordinate vector ``v`` of a level-``level`` state.

    Raises :class:`TruncationError` when the target level is outside ``0..M``.
    """
    A = module.mode(a, n, level)
    if len(v) != A.ncols():
        raise ValueError(f"vector of length {len(v)} does not match level {level} dimension {A.ncols()}")
    out = A * _exact.mat([[x] for x in v], 1)
    return [_exact.frac(out[i, 0]) for i in range(out.nrows())]


def _mode_or_zero(mod: TruncModule, a: int, n: int, level: int) -> fmpq_mat:
    if level - n < 0:
        return _exact.zeros(0, mod.dim(level))
    return mod.mode(a, n, level)


def commutator_defect(mod: TruncModule, a: int, b: int, n: int, m: int, level: int) -> bool:
    """True when ``[a(n), b(m)] = [a,b](n+m) + n delta (a,b) k`` holds exactly on ``level``.

    Every intermediate level must lie within the cutoff.
    """
    spec = mod.spec
    tgt = level - n - m
    for lv in (level - n, level - m, tgt):
        if lv > mod.M:
            raise TruncationError(f"intermediate level {lv} exceeds cutoff {mod.M}")
    if tgt < 0:
        return True
    lhs = _exact.zeros(mod.dim(tgt), mod.dim(level))
    if level - m >= 0:
        lhs += mod.mode(a, n, level - m) * mod.mode(b, m, level)
    if level - n >= 0:
        lhs -= mod.mode(b, m, level - n) * mod.mode(a, n, level)
    rhs = _exact.zeros(mod.dim(tgt), mod.dim(level))
    for l, c in spec.bracket[a][b]:
        rhs += mod.mode(l, n + m, level) * _exact.q(c)
    if n + m == 0 and spec.form[a][b]:
        rhs += _exact.scalar(mod.dim(level), spec.form[a][b] * n * mod.k)
    return lhs == rhs


def check_commutators(mod: TruncModule, max_n: int = 2) -> list[tuple[int, int, int, int, int]]:
    """All ``(a, b, n, m, level)`` where the commutator relation fails; empty when it holds."""
    bad = []
    dim = mod.spec.dim
    for a in range(dim):
        for b in range(dim):
            for n in range(-max_n, max_n + 1):
                for m in range(-max_n, max_n + 1):
                    for level in range(mod.M + 1):
                        if max(level - n, level - m, level - n - m) > mod.M:
                            continue
                        if not commutator_defect(mod, a, b, n, m, level):
                            bad.append((a, b, n, m, level))
    return bad


def check_adjointness(mod: TruncModule) -> list[tuple[int, int, int]]:
    """All ``(a, n, level)`` with ``a(n)^T G_tgt != s G_src eta(a)(-n)``; empty when adjointness holds."""
    bad = []
    for a in range(mod.spec.dim):
        j, s = mod.spec.involution[a]
        for level in range(mod.M + 1):
            for n in range(level - mod.M, level + 1):
                A = mod.mode(a, n, level)
                B = mod.mode(j, -n, level - n)
                if A.transpose() * mod.gram(level - n) != mod.gram(level) * B * _exact.q(s):
                    bad.append((a, n, level))
    return bad


def check_gram_psd(mod: TruncModule) -> bool:
    """Exact check that every level Gram matrix is symmetric with non-negative ``LDL^T`` pivots."""
    for lv in mod.levels:
        if lv.gram != lv.gram.transpose():
            return False
        if any(p < 0 for p in _exact.ldl_pivots(lv.gram)):
            return False
    return True
