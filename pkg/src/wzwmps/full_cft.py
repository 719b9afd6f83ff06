"""Diagonal full CFT built from chiral WZW data, and its finitely correlated state form.

The Hilbert space is ``H = sum_j A_j (x) A_j`` with one copy per integrable
channel.  A full insertion of channel ``lam`` carries a matrix ``Psi`` on
``S (x) S`` (``S`` the top level of ``A_lam``); its scaled truncated operator
is ``sum d * W(e_a, z) (x) W(e_a', zbar)`` weighted by ``Psi[a, a']``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .affine_module import TruncModule, build_module
from .bounds import KAPPA, character_truncated
from .intertwiner import FusionForbidden, Intertwiner, NoInvariant, build_intertwiner
from .lie_core import LieSpec, central_charge, conformal_weight, dynkin_label, label_level, lie_algebra
from .transfer import (
    ChannelError,
    DomainError,
    Geometry,
    check_domain,
    cpow,
    measure_theta,
    r_power_L0,
    scaled_truncated,
)

__all__ = [
    "FullSpace",
    "FullInsertion",
    "FullRequest",
    "FullResult",
    "CPMap",
    "integrable_labels",
    "default_couplings",
    "full_scaled_truncated",
    "full_compose",
    "full_correlator",
    "full_partition",
    "full_theta",
    "full_error_bound",
    "upsilon",
    "upsilon_inverse",
    "transfer_map",
    "fcs_assemble",
    "fcs_evaluate",
    "iota",
    "iota_inverse",
]

Label = tuple[int, ...]


def integrable_labels(spec: LieSpec, k: int) -> list[Label]:
    """Dominant labels with ``lambda(theta) <= k`` among those with an implemented top level."""
    if spec.rank == 1:
        return [(l,) for l in range(k + 1)]
    out = [dynkin_label(spec, 0)]
    for i in range(spec.rank):
        lab = tuple(int(i == j) for j in range(spec.rank))
        if label_level(lab) <= k and i == 0:
            out.append(lab)
    return out


@dataclass
class FullSpace:
    """``sum_j A_j (x) A_j`` on levels ``<= M`` in each factor."""

    spec: LieSpec
    k: int
    M: int
    channels: list[Label]
    modules: dict[Label, TruncModule] = field(default_factory=dict)

    def __post_init__(self) -> None:
        vac = dynkin_label(self.spec, 0)
        if self.channels.count(vac) != 1:
            raise ValueError("exactly one vacuum channel is required")
        for lab in self.channels:
            self.modules[lab] = build_module(self.spec, self.k, lab, self.M)

    @classmethod
    def diagonal(cls, spec: LieSpec, k: int, M: int) -> "FullSpace":
        return cls(spec, k, M, integrable_labels(spec, k))

    def chiral_dim(self, lab: Label, M: int | None = None) -> int:
        return self.modules[lab].cumulative_dim(self.M if M is None else M)

    @property
    def offsets(self) -> dict[Label, int]:
        out, off = {}, 0
        for lab in self.channels:
            out[lab] = off
            off += self.chiral_dim(lab) ** 2
        return out

    @property
    def dim(self) -> int:
        return sum(self.chiral_dim(lab) ** 2 for lab in self.channels)

    def matrix_dim(self) -> int:
        return sum(self.chiral_dim(lab) for lab in self.channels)

    def projector(self, M: int) -> np.ndarray:
        """Boolean mask of basis states with both levels ``<= M``."""
        mask = []
        for lab in self.channels:
            mod = self.modules[lab]
            lv = np.concatenate([np.full(mod.dim(L), L) for L in range(self.M + 1)])
            mask.append(((lv[:, None] <= M) & (lv[None, :] <= M)).ravel())
        return np.concatenate(mask)

    def r_power(self, r: float) -> np.ndarray:
        """Diagonal of ``r^(L0 + L0bar)``."""
        out = []
        for lab in self.channels:
            d = r_power_L0(self.modules[lab], r, self.M)
            out.append(np.outer(d, d).ravel())
        return np.concatenate(out)

    def vacuum_vector(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.offsets[dynkin_label(self.spec, 0)]] = 1.0
        return v


def default_couplings(spec: LieSpec, k: int, channels: Sequence[Label]) -> dict[tuple[Label, Label, Label], complex]:
    """Coupling 1 on every allowed ``(lam3; src -> tgt)`` channel, 0 otherwise."""
    out = {}
    for l3 in channels:
        for src in channels:
            for tgt in channels:
                out[(l3, src, tgt)] = 1.0 + 0j if _allowed(spec, k, l3, src, tgt) else 0j
    return out


def _allowed(spec: LieSpec, k: int, l3: Label, src: Label, tgt: Label) -> bool:
    try:
        from .intertwiner import solve_g_intertwiner

        solve_g_intertwiner(spec, l3, src, tgt, k)
        return True
    except (NoInvariant, FusionForbidden):
        return False


def _chiral_ops(spec: LieSpec, k: int, l3: Label, src: Label, tgt: Label, M: int, q: float, z: complex, N: int) -> list[np.ndarray]:
    inter = build_intertwiner(spec, k, l3, src, tgt, M)
    dS = len(inter.gmap.W)
    return [scaled_truncated(inter, _unit(dS, a), q, z, N, M).matrix for a in range(dS)]


def _unit(d: int, a: int) -> list[complex]:
    v = [0j] * d
    v[a] = 1.0 + 0j
    return v


def _psi_matrix(Psi, dS: int) -> np.ndarray:
    if isinstance(Psi, tuple) and len(Psi) == 2 and all(isinstance(x, int) for x in Psi):
        out = np.zeros((dS, dS), dtype=complex)
        out[Psi] = 1.0
        return out
    out = np.asarray(Psi, dtype=complex)
    if out.shape != (dS, dS):
        raise ValueError(f"charge matrix must be {dS}x{dS}")
    return out


def full_scaled_truncated(
    space: FullSpace,
    lam3,
    Psi,
    q: float,
    z: complex,
    N: int,
    couplings: Mapping[tuple[Label, Label, Label], complex] | None = None,
) -> np.ndarray:
    """Dense ``W_q^[N](Psi, (z, zbar))`` on the whole ambient space."""
    check_domain(q, z)
    spec, k, M = space.spec, space.k, space.M
    l3 = dynkin_label(spec, lam3)
    cpl = couplings if couplings is not None else default_couplings(spec, k, space.channels)
    off = space.offsets
    out = np.zeros((space.dim, space.dim), dtype=complex)
    zbar = complex(z).conjugate()
    for src in space.channels:
        for tgt in space.channels:
            d = cpl.get((l3, src, tgt), 0j)
            if d == 0:
                continue
            left = _chiral_ops(spec, k, l3, src, tgt, M, q, z, N)
            right = _chiral_ops(spec, k, l3, src, tgt, M, q, zbar, N)
            P = _psi_matrix(Psi, len(left))
            blk = np.zeros((space.chiral_dim(tgt) ** 2, space.chiral_dim(src) ** 2), dtype=complex)
            for a, b in itertools.product(range(len(left)), repeat=2):
                if P[a, b] != 0:
                    blk += P[a, b] * np.kron(left[a], right[b])
            i0, j0 = off[tgt], off[src]
            out[i0 : i0 + blk.shape[0], j0 : j0 + blk.shape[1]] = d * blk
    return out


def full_compose(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = out @ m
    return out


@dataclass(frozen=True)
class FullInsertion:
    """Full charge in channel ``lam``: ``Psi`` is a ``dim S x dim S`` matrix or an index pair."""

    lam: int | Label
    Psi: object = (0, 0)


@dataclass
class FullRequest:
    algebra: str = "A1"
    k: int = 1
    genus: int = 0
    insertions: tuple[FullInsertion, ...] = ()
    geometry: Geometry = field(default_factory=lambda: Geometry(d=math.log(2)))
    N: int = 2
    M: int = 0
    ambient: int | None = None
    couplings: dict | None = None
    kappa: float = KAPPA

    @property
    def spec(self) -> LieSpec:
        return lie_algebra(self.algebra)


@dataclass
class FullResult:
    raw: complex
    value: complex
    corrected: complex
    q: float
    z: complex
    nontrivial: int
    bound: float | None = None

    def as_dict(self) -> dict:
        return {
            "raw": [self.raw.real, self.raw.imag],
            "value": [self.value.real, self.value.imag],
            "corrected": [self.corrected.real, self.corrected.imag],
            "q": self.q,
            "z": [self.z.real, self.z.imag],
            "nontrivial_insertions": self.nontrivial,
            "truncation_bound": self.bound,
        }


def _chiral_amplitudes(
    spec: LieSpec, k: int, labs: Sequence[Label], path: Sequence[Label], M: int, q: float, z: complex, N: int, genus: int, trace_M: int, r: float
) -> np.ndarray:
    """Tensor over charge indices of ``<1, W_1 ... W_n 1>`` or ``Tr P W_1 ... W_n r^L0``."""
    ops = [_chiral_ops(spec, k, labs[j], path[j + 1], path[j], M, q, z, N) for j in range(len(labs))]
    shape = tuple(len(o) for o in ops)
    out = np.zeros(shape, dtype=complex)
    mod = build_module(spec, k, path[-1], M)
    d = mod.cumulative_dim(trace_M)
    rl = r_power_L0(mod, r, trace_M)
    for idx in itertools.product(*(range(s) for s in shape)):
        T = ops[0][idx[0]]
        for j in range(1, len(ops)):
            T = T @ ops[j][idx[j]]
        out[idx] = T[0, 0] if genus == 0 else np.sum(np.diag(T)[:d] * rl)
    return out


def _paths(spec: LieSpec, k: int, labs: Sequence[Label], channels: Sequence[Label], genus: int) -> list[list[Label]]:
    vac = dynkin_label(spec, 0)
    n = len(labs)
    starts = [vac] if genus == 0 else list(channels)
    out = []
    for start in starts:
        for mid in itertools.product(channels, repeat=max(n - 1, 0)):
            path = [start, *mid, vac if genus == 0 else start]
            if n == 0:
                path = [start]
            if all(_allowed(spec, k, labs[j], path[j + 1], path[j]) for j in range(n)):
                out.append(path)
    return out


def full_correlator(req: FullRequest) -> FullResult:
    """Full correlator on equispaced points, summed over channel paths.

    Genus 0: ``value = |z|^(sum wt) q^(-sum wt/2) <1, T 1>`` with ``wt = h + hbar``.
    Genus 1: ``raw = Tr P^[M] T r^(L0 + L0bar)``, ``corrected = raw p^(-c/12)``.
    """
    spec, k = req.spec, req.k
    q = req.geometry.q
    z = req.geometry.z(req.genus)
    check_domain(q, z)
    if req.genus == 1 and abs(z) <= 1:
        raise DomainError("genus-1 correlator needs |z| > 1")
    labs = [dynkin_label(spec, ins.lam) for ins in req.insertions]
    for lab in labs:
        if label_level(lab) > k:
            raise ValueError(f"lambda(theta) = {label_level(lab)} exceeds level k = {k}")
    n = len(labs)
    channels = integrable_labels(spec, k)
    cpl = req.couplings if req.couplings is not None else default_couplings(spec, k, channels)
    vac = dynkin_label(spec, 0)
    nontrivial = sum(lab != vac for lab in labs)
    wt = sum(2 * float(conformal_weight(spec, lab, k)) for lab in labs)
    c = float(central_charge(spec, k))
    if req.genus == 0:
        ambient = req.ambient if req.ambient is not None else (max(req.N * min(j, n - j) for j in range(n + 1)) if n else 0)
    else:
        ambient = req.ambient if req.ambient is not None else req.M + n * req.N
    r = req.geometry.r
    raw = 0j
    if n == 0:
        if req.genus == 0:
            raw = 1.0 + 0j
        else:
            raw = complex(sum(float(np.sum(r_power_L0(build_module(spec, k, ch, req.M), r, req.M))) ** 2 for ch in channels))
    else:
        zbar = complex(z).conjugate()
        for path in _paths(spec, k, labs, channels, req.genus):
            weight = 1.0 + 0j
            for j in range(n):
                weight *= cpl.get((labs[j], path[j + 1], path[j]), 0j)
            if weight == 0:
                continue
            EL = _chiral_amplitudes(spec, k, labs, path, ambient, q, z, req.N, req.genus, req.M, r)
            ER = _chiral_amplitudes(spec, k, labs, path, ambient, q, zbar, req.N, req.genus, req.M, r)
            Ps = [_psi_matrix(ins.Psi, EL.shape[j]) for j, ins in enumerate(req.insertions)]
            total = 0j
            for a in itertools.product(*(range(s) for s in EL.shape)):
                for b in itertools.product(*(range(s) for s in ER.shape)):
                    coef = np.prod([Ps[j][a[j], b[j]] for j in range(n)])
                    if coef != 0:
                        total += coef * EL[a] * ER[b]
            raw += weight * total
    if req.genus == 0:
        corrected = raw
        value = abs(z) ** wt * q ** (-wt / 2) * raw
    else:
        p = r * q**n
        corrected = raw * p ** (-c / 12)
        value = abs(z) ** wt * q ** (-wt / 2) * corrected
    return FullResult(raw, value, corrected, q, z, nontrivial)


def full_partition(spec: LieSpec, k: int, channels: Sequence, r: float, M: int) -> float:
    """``sum_j Z_j(r)^2`` with truncated chiral characters."""
    return sum(character_truncated(build_module(spec, k, lab, M), r, M) ** 2 for lab in channels)


def full_theta(space: FullSpace, q: float, z: complex) -> float:
    """Constituent bound ``sqrt(sum_j (dim S_j sum_{k,l} theta theta')^2)`` from measured chiral norms."""
    total = 0.0
    zbar = complex(z).conjugate()
    for l3 in space.channels:
        acc = 0.0
        dS = 0
        for src in space.channels:
            for tgt in space.channels:
                if not _allowed(space.spec, space.k, l3, src, tgt):
                    continue
                inter = build_intertwiner(space.spec, space.k, l3, src, tgt, space.M)
                dS = len(inter.gmap.W)
                acc += measure_theta(inter, q, z) * measure_theta(inter, q, zbar)
        total += (dS * acc) ** 2
    return math.sqrt(total)


def full_error_bound(space: FullSpace, m: int, q: float, z: complex, N: int, kappa: float = KAPPA) -> float:
    """``q^(N/4) m Gamma (Theta(sqrt q)/(1 - sqrt q)^2)^m`` with ``Gamma = 2 kappa sqrt(dim S) |J|^(5/2)``."""
    dim_s = sum(build_module(space.spec, space.k, lab, 0).level_dims[0] ** 2 for lab in space.channels)
    gamma = 2 * kappa * math.sqrt(dim_s) * len(space.channels) ** 2.5
    theta = full_theta(space, math.sqrt(q), z)
    return q ** (N / 4) * m * gamma * (theta / (1 - math.sqrt(q)) ** 2) ** m


def upsilon(space: FullSpace, vec: np.ndarray) -> np.ndarray:
    """Vector of ``H`` to the block-diagonal matrix ``sum_j sum c_ab |a><b|``."""
    D = space.matrix_dim()
    out = np.zeros((D, D), dtype=complex)
    off_v, off_m = 0, 0
    for lab in space.channels:
        d = space.chiral_dim(lab)
        out[off_m : off_m + d, off_m : off_m + d] = vec[off_v : off_v + d * d].reshape(d, d)
        off_v += d * d
        off_m += d
    return out


def upsilon_inverse(space: FullSpace, mat: np.ndarray) -> np.ndarray:
    parts = []
    off = 0
    for lab in space.channels:
        d = space.chiral_dim(lab)
        parts.append(mat[off : off + d, off : off + d].ravel())
        off += d
    return np.concatenate(parts)


def transfer_map(space: FullSpace, op: np.ndarray) -> np.ndarray:
    """Matrix of ``X -> upsilon(op upsilon^-1(X))`` on row-major ``vec(X)``."""
    D = space.matrix_dim()
    F = np.zeros((D * D, D * D), dtype=complex)
    for i in range(D):
        for j in range(D):
            E = np.zeros((D, D), dtype=complex)
            E[i, j] = 1.0
            F[:, i * D + j] = upsilon(space, op @ upsilon_inverse(space, E)).ravel()
    return F


@dataclass
class CPMap:
    """``E(Y) = V^* (Y (x) I_K) V`` with ``V = V1 (x) |0><0| + V2 (x) |1><1|`` on ``Mat(C^2) (x) Mat(C^d)``."""

    A: list[np.ndarray]
    B: list[np.ndarray]
    d_in: int
    d_out: int
    singular_values: np.ndarray

    @property
    def V1(self) -> np.ndarray:
        return np.concatenate([a.conj().T for a in self.A], axis=0) if self.A else np.zeros((0, self.d_out))

    @property
    def V2(self) -> np.ndarray:
        return np.concatenate([b.conj().T for b in self.B], axis=0) if self.B else np.zeros((0, self.d_out))

    @property
    def dilation(self) -> int:
        return len(self.A)

    def apply_F(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros((self.d_out, self.d_out), dtype=complex)
        for a, b in zip(self.A, self.B):
            out += a @ X @ b.conj().T
        return out

    def apply(self, Y: np.ndarray) -> np.ndarray:
        """Act on a ``2 d_in x 2 d_in`` matrix ordered as ``Mat(C^2) (x) Mat(C^d_in)``."""
        V = [self.V1, self.V2]
        K = self.dilation
        out = np.zeros((2 * self.d_out, 2 * self.d_out), dtype=complex)
        if K == 0:
            return out
        for s in range(2):
            for t in range(2):
                X = Y[s * self.d_in : (s + 1) * self.d_in, t * self.d_in : (t + 1) * self.d_in]
                if not X.any():
                    continue
                big = _stack_apply(X, K)
                out[s * self.d_out : (s + 1) * self.d_out, t * self.d_out : (t + 1) * self.d_out] = V[s].conj().T @ big @ V[t]
        return out

    def kraus(self) -> list[np.ndarray]:
        """Operators ``K_k`` with ``E(Y) = sum_k K_k^* Y K_k``."""
        K = self.dilation
        V1, V2 = self.V1, self.V2
        out = []
        for k in range(K):
            Kk = np.zeros((2 * self.d_in, 2 * self.d_out), dtype=complex)
            Kk[: self.d_in, : self.d_out] = V1[k * self.d_in : (k + 1) * self.d_in]
            Kk[self.d_in :, self.d_out :] = V2[k * self.d_in : (k + 1) * self.d_in]
            out.append(Kk)
        return out

    def choi_min_eigenvalue(self, explicit_limit: int = 1024) -> float:
        """Smallest eigenvalue of the Choi matrix of ``E``."""
        kr = self.kraus()
        n_in, n_out = 2 * self.d_in, 2 * self.d_out
        if n_in * n_out <= explicit_limit:
            C = np.zeros((n_in * n_out, n_in * n_out), dtype=complex)
            for i in range(n_in):
                for j in range(n_in):
                    E = np.zeros((n_in, n_in), dtype=complex)
                    E[i, j] = 1.0
                    C[i * n_out : (i + 1) * n_out, j * n_out : (j + 1) * n_out] = sum(k.conj().T @ E @ k for k in kr)
            return float(np.linalg.eigvalsh((C + C.conj().T) / 2).min())
        vecs = np.array([k.ravel() for k in kr])
        gram = vecs.conj() @ vecs.T
        ev = np.linalg.eigvalsh((gram + gram.conj().T) / 2)
        return float(min(ev.min(), 0.0)) if len(ev) < n_in * n_out else float(ev.min())


def _stack_apply(X: np.ndarray, K: int) -> np.ndarray:
    # (I_K (x) X) matches the k-major stacking of V1, V2
    return np.kron(np.eye(K), X)


def iota(Phi: np.ndarray) -> np.ndarray:
    """``|0><1| (x) Phi``."""
    d = Phi.shape[0]
    out = np.zeros((2 * d, 2 * d), dtype=complex)
    out[:d, d:] = Phi
    return out


def iota_inverse(Y: np.ndarray) -> np.ndarray:
    d = Y.shape[0] // 2
    return Y[:d, d:]


def fcs_assemble(F: np.ndarray | Callable[[np.ndarray], np.ndarray], d_in: int, d_out: int | None = None, rtol: float = 1e-14) -> CPMap:
    """Factor the Choi matrix of ``F`` into generalized Kraus pairs ``F(X) = sum A_k X B_k^*``.

    ``F`` is either the ``d_out^2 x d_in^2`` matrix acting on row-major
    ``vec(X)`` or a callable on matrices.
    """
    d_out = d_in if d_out is None else d_out
    if callable(F):
        apply = F
    else:
        Fm = np.asarray(F)
        if Fm.shape != (d_out * d_out, d_in * d_in):
            raise ValueError(f"map matrix has shape {Fm.shape}, expected {(d_out * d_out, d_in * d_in)}")

        def apply(X: np.ndarray) -> np.ndarray:
            return (Fm @ X.ravel()).reshape(d_out, d_out)

    C = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            E = np.zeros((d_in, d_in), dtype=complex)
            E[i, j] = 1.0
            C[i * d_out : (i + 1) * d_out, j * d_out : (j + 1) * d_out] = apply(E)
    U, s, Vh = np.linalg.svd(C)
    keep = s > rtol * (s[0] if s.size and s[0] > 0 else 1.0)
    A, B = [], []
    for k in np.nonzero(keep)[0]:
        w = math.sqrt(s[k])
        A.append(w * U[:, k].reshape(d_in, d_out).T)
        B.append(w * Vh[k].conj().reshape(d_in, d_out).T)
    return CPMap(A, B, d_in, d_out, s[keep])


def fcs_evaluate(maps: Sequence[CPMap], Phi1: np.ndarray, Phi2: np.ndarray) -> complex:
    """``Tr[iota(Phi1)^* E_1 o ... o E_last (iota(Phi2))]``; the last map is the boundary one."""
    Y = iota(np.asarray(Phi2, dtype=complex))
    for cp in reversed(maps):
        Y = cp.apply(Y)
    return complex(np.trace(iota(np.asarray(Phi1, dtype=complex)).conj().T @ Y))
