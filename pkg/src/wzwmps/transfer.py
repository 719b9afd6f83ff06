"""Scaled truncated intertwiners, transfer operators, correlators and MPS tensors.

Exact blocks are moved to orthonormal level coordinates through an exact
congruence ``T G T^T = D``; only ``D^(-1/2)`` and the final entries are
rounded to floating point.  All fractional powers use the principal branch.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _exact
from .affine_module import TruncModule, build_module
from .bounds import KAPPA, ErrorBudget, error_budget, theta_defining_rep
from .intertwiner import Intertwiner, build_intertwiner
from .lie_core import LieError, LieSpec, conformal_weight, dynkin_label, label_level, lie_algebra

__all__ = [
    "ChannelError",
    "DomainError",
    "Geometry",
    "Insertion",
    "CorrRequest",
    "CorrResult",
    "ScaledOp",
    "TransferBundle",
    "level_frame",
    "orthonormal_block",
    "scaled_truncated",
    "transfer_compose",
    "genus0_correlator",
    "genus1_correlator",
    "mps_extract",
    "measure_theta",
    "r_power_L0",
    "slot_intertwiners",
]


class DomainError(ValueError):
    """Geometry parameters outside the convergence domain."""


class ChannelError(ValueError):
    """Inconsistent channel path."""


def cpow(z: complex, power: float) -> complex:
    """Principal-branch ``z**power``."""
    if power == 0:
        return 1.0 + 0j
    return cmath.exp(power * cmath.log(complex(z)))


def level_frame(mod: TruncModule, level: int) -> tuple:
    """Exact ``T`` and float ``D^(-1/2)`` with ``T G T^T = D`` on one level."""
    key = ("frame", level)
    hit = mod._floats.get(key)
    if hit is None:
        T, D = _exact.congruence_frame(mod.gram(level))
        hit = (T, np.array([1 / math.sqrt(float(d)) for d in D]))
        mod._floats[key] = hit
    return hit


def orthonormal_block(inner, tgt: TruncModule, p: int, src: TruncModule, n: int) -> np.ndarray:
    """Convert an exact inner-product block ``<c_i, X b_j>`` to orthonormal coordinates."""
    Tt, st = level_frame(tgt, p)
    Ts, ss = level_frame(src, n)
    X = _exact.to_float(Tt * inner * Ts.transpose())
    return X * st[:, None] * ss[None, :]


def _offsets(mod: TruncModule, M: int) -> list[int]:
    out = [0]
    for L in range(M + 1):
        out.append(out[-1] + mod.dim(L))
    return out


def _on_intertwiner_block(inter: Intertwiner, t: int, p: int, n: int) -> np.ndarray:
    key = ("on", t, p, n)
    hit = inter.cache.get(key)
    if hit is None:
        hit = orthonormal_block(inter.inner[(t, p, n)], inter.C, p, inter.B, n)
        inter.cache[key] = hit
    return hit


def charge_coefficients(inter: Intertwiner, a: int | Sequence[complex]) -> np.ndarray:
    """Coefficients on the weight basis ``phi_t`` for a unit top-level basis vector or an orthonormal coefficient vector."""
    r3 = inter.gmap.reps[0]
    norms = np.array([math.sqrt(float(r3.gram[t][t])) for t in range(r3.dim)])
    if isinstance(a, (int, np.integer)):
        if not 0 <= a < r3.dim:
            raise IndexError(f"top vector index {a} out of range for dimension {r3.dim}")
        c = np.zeros(r3.dim, dtype=complex)
        c[a] = 1.0
    else:
        c = np.asarray(a, dtype=complex)
        if c.shape != (r3.dim,):
            raise ValueError(f"charge vector must have length {r3.dim}")
    return c / norms


@dataclass
class ScaledOp:
    """Dense matrix of ``W_q^[N](a, z)`` from ``B`` (levels ``<= M``) to ``C`` (levels ``<= M``)."""

    matrix: np.ndarray
    q: float
    z: complex
    N: int
    M: int
    source: tuple[int, ...]
    target: tuple[int, ...]
    charge: tuple[int, ...]
    tau: Fraction
    wt: Fraction
    src_offsets: list[int]
    tgt_offsets: list[int]

    def block(self, p: int, n: int) -> np.ndarray:
        return self.matrix[self.tgt_offsets[p] : self.tgt_offsets[p + 1], self.src_offsets[n] : self.src_offsets[n + 1]]

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2)) if self.matrix.size else 0.0


def check_domain(q: float, z: complex) -> None:
    az = abs(z)
    if not (0 < q < 1) or az == 0 or not (q < min(az * az, 1 / (az * az))):
        raise DomainError(f"need 0 < q < min(|z|^2, 1/|z|^2); got q={q}, |z|={az}")


def scaled_truncated(inter: Intertwiner, a: int | Sequence[complex], q: float, z: complex, N: int | None = None, M: int | None = None) -> ScaledOp:
    """``q^(wt a/2) sum_{|m| <= N} q^(L0/2) y(a)_m q^(L0/2) z^(-m-tau)`` on levels ``<= M``.

    ``N = None`` keeps every mode representable within the ambient cutoff.
    """
    check_domain(q, z)
    M = inter.M if M is None else M
    if M > inter.M:
        raise ValueError(f"ambient cutoff {M} exceeds intertwiner cutoff {inter.M}")
    N = M if N is None else N
    if N < 0:
        raise ValueError("N must be non-negative")
    B, C = inter.B, inter.C
    coeffs = charge_coefficients(inter, a)
    wt = _h(inter, 0)
    hB, hC = float(B.h), float(C.h)
    tau = float(inter.tau)
    so, to = _offsets(B, M), _offsets(C, M)
    out = np.zeros((to[-1], so[-1]), dtype=complex)
    ztau = cpow(z, -tau)
    pref = q ** (float(wt) / 2)
    for n in range(M + 1):
        for p in range(max(0, n - N), min(M, n + N) + 1):
            m = n - p
            blk = sum(
                (coeffs[t] * _on_intertwiner_block(inter, t, p, n) for t in range(len(coeffs)) if coeffs[t] != 0),
                np.zeros((C.dim(p), B.dim(n)), dtype=complex),
            )
            scale = pref * q ** ((hC + p) / 2) * q ** ((hB + n) / 2) * ztau * complex(z) ** (-m)
            out[to[p] : to[p + 1], so[n] : so[n + 1]] = scale * blk
    lab = inter.gmap.labels
    return ScaledOp(out, q, complex(z), N, M, lab[1], lab[2], lab[0], inter.tau, wt, so, to)


def _h(inter: Intertwiner, slot: int) -> Fraction:
    return conformal_weight(inter.gmap.spec, inter.gmap.labels[slot], inter.gmap.k)


def transfer_compose(ops: Sequence[ScaledOp]) -> np.ndarray:
    """``W_1 W_2 ... W_n``; adjacent operators must share their channel module."""
    if not ops:
        raise ValueError("need at least one operator")
    for left, right in zip(ops, ops[1:]):
        if left.source != right.target or left.M != right.M:
            raise ChannelError(f"channel mismatch: {left.source} (M={left.M}) vs {right.target} (M={right.M})")
    out = ops[0].matrix
    for op in ops[1:]:
        out = out @ op.matrix
    return out


def r_power_L0(mod: TruncModule, r: float, M: int) -> np.ndarray:
    """Diagonal of ``r^L0`` on levels ``<= M`` (``L0 = h + level``)."""
    h = float(mod.h)
    return np.concatenate([np.full(mod.dim(L), r ** (h + L)) for L in range(M + 1)]) if M >= 0 else np.zeros(0)


@dataclass(frozen=True)
class Insertion:
    """Charge ``lam`` with top vector (index or orthonormal coefficients) mapping into ``channel_to``."""

    lam: int | tuple[int, ...]
    vector: int | tuple[complex, ...] = 0
    channel_to: int | tuple[int, ...] = 0


@dataclass(frozen=True)
class Geometry:
    d: float
    d0: float = 0.0
    theta: float = 0.0
    r: float = 1.0

    @property
    def q(self) -> float:
        return math.exp(-self.d)

    def z(self, genus: int) -> complex:
        if genus == 0:
            return cmath.exp(complex(-self.d0, self.theta))
        return cmath.exp(complex(self.d0, self.theta))


@dataclass
class CorrRequest:
    algebra: str = "A1"
    k: int = 1
    genus: int = 0
    insertions: tuple[Insertion, ...] = ()
    geometry: Geometry = field(default_factory=lambda: Geometry(d=math.log(2)))
    N: int = 2
    M: int = 0
    ambient: int | None = None
    kappa: float = KAPPA
    C_V: int | None = None
    budget: bool = False
    channel: int | tuple[int, ...] = 0

    @property
    def spec(self) -> LieSpec:
        return lie_algebra(self.algebra)


@dataclass
class CorrResult:
    raw: complex
    value: complex
    corrected: complex
    q: float
    z: complex
    ambient: int
    channel_path: list[tuple[int, ...]]
    budget: ErrorBudget | None = None

    def as_dict(self) -> dict:
        return {
            "raw": [self.raw.real, self.raw.imag],
            "value": [self.value.real, self.value.imag],
            "corrected": [self.corrected.real, self.corrected.imag],
            "q": self.q,
            "z": [self.z.real, self.z.imag],
            "ambient": self.ambient,
            "channel_path": [list(c) for c in self.channel_path],
            "budget": self.budget.as_dict() if self.budget else None,
        }


def channel_path(req: CorrRequest) -> list[tuple[int, ...]]:
    """``[B_0, ..., B_n]`` with ``B_{j-1}`` the ``channel_to`` of insertion ``j``."""
    spec = req.spec
    vac = dynkin_label(spec, 0)
    path = [dynkin_label(spec, ins.channel_to) for ins in req.insertions]
    if req.genus == 0:
        path.append(vac)
        if path[0] != vac:
            raise ChannelError("genus-0 channel path must start and end at the vacuum module")
    elif req.genus == 1:
        path.append(path[0] if path else dynkin_label(spec, req.channel))
    else:
        raise ValueError("genus must be 0 or 1")
    for lab in path + [dynkin_label(spec, ins.lam) for ins in req.insertions]:
        if label_level(lab) > req.k:
            raise LieError(f"lambda(theta) = {label_level(lab)} exceeds level k = {req.k}; module is not integrable")
    return path


def _default_ambient(req: CorrRequest) -> int:
    n = len(req.insertions)
    if req.genus == 0:
        # intermediate levels reachable from both vacuum ends
        return max(req.N * min(j, n - j) for j in range(n + 1)) if n else 0
    return req.M + n * req.N


def slot_intertwiners(req: CorrRequest, ambient: int) -> list[Intertwiner]:
    spec = req.spec
    path = channel_path(req)
    return [
        build_intertwiner(spec, req.k, dynkin_label(spec, ins.lam), path[j + 1], path[j], ambient)
        for j, ins in enumerate(req.insertions)
    ]


def _vector_arg(v):
    return v if isinstance(v, int) else list(v)


def _slot_ops(req: CorrRequest, ambient: int, q: float, z: complex) -> list[ScaledOp]:
    inters = slot_intertwiners(req, ambient)
    return [scaled_truncated(it, _vector_arg(ins.vector), q, z, req.N, ambient) for it, ins in zip(inters, req.insertions)]


def _slot_theta(inter: Intertwiner, q: float, z: complex) -> tuple[float, str]:
    spec = inter.gmap.spec
    lab3 = inter.gmap.labels[0]
    h1, h2, h3 = float(inter.C.h), float(inter.B.h), float(_h(inter, 0))
    if label_level(lab3) == 0:
        return 1.0, "vacuum"
    defining = spec.rank >= 1 and lab3 == dynkin_label(spec, (1,) + (0,) * (spec.rank - 1))
    if defining and abs(z) > 1 and q * abs(z) ** 2 < 1:
        return theta_defining_rep(q, z, h1, h2, h3), "analytic"
    return measure_theta(inter, q, z), "empirical"


def _budget(req: CorrRequest, ambient: int, q: float, z: complex, module: TruncModule | None) -> ErrorBudget:
    sq = math.sqrt(q)
    inters = slot_intertwiners(req, ambient)
    pairs = [_slot_theta(it, sq, z) for it in inters]
    n = len(req.insertions)
    return error_budget(
        n, q, z, req.N, [p[0] for p in pairs], M=req.M, r=req.geometry.r, kappa=req.kappa,
        module=module, C_V=req.C_V, theta_kind=[p[1] for p in pairs],
    )


def genus0_correlator(req: CorrRequest) -> CorrResult:
    """Vacuum-to-vacuum transfer matrix element and the strip correlator it encodes.

    ``value = (-z)^(sum wt) q^(-sum wt / 2) <1, T^[N] 1>``.
    """
    q = req.geometry.q
    z = req.geometry.z(0)
    check_domain(q, z)
    path = channel_path(req)
    ambient = _default_ambient(req) if req.ambient is None else req.ambient
    if not req.insertions:
        return CorrResult(1.0 + 0j, 1.0 + 0j, 1.0 + 0j, q, z, ambient, path)
    ops = _slot_ops(req, ambient, q, z)
    T = transfer_compose(ops)
    raw = complex(T[0, 0])
    wt = float(sum(op.wt for op in ops))
    value = cpow(-z, wt) * q ** (-wt / 2) * raw
    budget = _budget(req, ambient, q, z, None) if req.budget else None
    return CorrResult(raw, value, raw, q, z, ambient, path, budget)


def genus1_correlator(req: CorrRequest) -> CorrResult:
    """``Tr P^[M] T^[N] r^L0`` and the torus correlator with ``p = r q^n``.

    ``corrected = raw p^(-c/24)`` and ``value = z^(sum wt) q^(-sum wt/2) corrected``.
    """
    q = req.geometry.q
    z = req.geometry.z(1)
    r = req.geometry.r
    if abs(z) <= 1:
        raise DomainError("genus-1 correlator needs |z| > 1 (d0 > 0)")
    check_domain(q, z)
    if not 0 < r <= 1:
        raise DomainError("need 0 < r <= 1")
    path = channel_path(req)
    ambient = _default_ambient(req) if req.ambient is None else req.ambient
    if ambient < req.M:
        raise ValueError("ambient cutoff must be at least M")
    ops = _slot_ops(req, ambient, q, z)
    mod = build_module(req.spec, req.k, path[-1], ambient)
    d = mod.cumulative_dim(req.M)
    T = transfer_compose(ops) if ops else np.eye(d)
    rl = r_power_L0(mod, r, req.M)
    raw = complex(np.sum(np.diag(T)[:d] * rl))
    n = len(ops)
    c = float(mod.c)
    p = r * q**n
    corrected = raw * p ** (-c / 24)
    wt = float(sum(op.wt for op in ops))
    value = cpow(z, wt) * q ** (-wt / 2) * corrected
    budget = _budget(req, ambient, q, z, build_module(req.spec, req.k, path[0], ambient)) if req.budget else None
    return CorrResult(raw, value, corrected, q, z, ambient, path, budget)


def trace_character(spec: LieSpec, k: int, lam, r: float, M: int) -> float:
    """``Tr P^[M] r^L0`` on the module itself (the ``n = 0`` torus transfer trace)."""
    mod = build_module(spec, k, lam, M)
    return float(np.sum(r_power_L0(mod, r, M)))


@dataclass
class TransferBundle:
    """MPS data: ``tensors[j][s]`` is the ``D x D`` matrix for orthonormal charge ``s`` at slot ``j``."""

    tensors: list[np.ndarray]
    X: np.ndarray
    boundary: tuple[np.ndarray, np.ndarray] | None
    D: int
    site_dims: list[int]
    genus: int
    channel_path: list[tuple[int, ...]]
    meta: dict

    def contract(self, charges: Sequence[np.ndarray | Sequence[complex]]) -> complex:
        """Evaluate the MPS for one coefficient vector per slot."""
        mats = [np.tensordot(np.asarray(c, dtype=complex), A, axes=(0, 0)) for c, A in zip(charges, self.tensors)]
        prod = np.eye(self.D, dtype=complex)
        for m in mats:
            prod = prod @ m
        if self.genus == 1:
            return complex(np.trace(prod @ self.X))
        v0, vn = self.boundary
        return complex(v0.conj() @ prod @ vn)


def _charge_basis_vector(dim: int, s: int) -> list[complex]:
    v = [0j] * dim
    v[s] = 1.0 + 0j
    return v


def mps_extract(req: CorrRequest) -> TransferBundle:
    """Site tensors ``P W_j P`` padded to ``D = max_j d_{B_j}(M + nN)`` plus the boundary data."""
    q = req.geometry.q
    z = req.geometry.z(req.genus)
    check_domain(q, z)
    path = channel_path(req)
    n = len(req.insertions)
    L = req.M + n * req.N
    ambient = max(L, req.ambient or 0)
    inters = slot_intertwiners(req, ambient)
    spec = req.spec
    mods = [build_module(spec, req.k, lab, ambient) for lab in path]
    D = max(m.cumulative_dim(L) for m in mods)
    tensors = []
    site_dims = []
    for it in inters:
        dS = len(it.gmap.W)
        A = np.zeros((dS, D, D), dtype=complex)
        for s in range(dS):
            op = scaled_truncated(it, _charge_basis_vector(dS, s), q, z, req.N, ambient)
            dt, ds = it.C.cumulative_dim(L), it.B.cumulative_dim(L)
            A[s, :dt, :ds] = op.matrix[:dt, :ds]
        tensors.append(A)
        site_dims.append(dS)
    X = np.zeros((D, D), dtype=complex)
    boundary = None
    if req.genus == 1:
        dM = mods[0].cumulative_dim(req.M)
        X[:dM, :dM] = np.diag(r_power_L0(mods[0], req.geometry.r, req.M))
    else:
        v0 = np.zeros(D, dtype=complex)
        v0[0] = 1.0
        boundary = (v0, v0.copy())
    meta = {
        "algebra": req.algebra,
        "k": req.k,
        "q": q,
        "z": [z.real, z.imag],
        "N": req.N,
        "M": req.M,
        "channel_path": [list(c) for c in path],
        "normalization": "first-nonzero-1",
        "branch": "principal",
    }
    return TransferBundle(tensors, X, boundary, D, site_dims, req.genus, path, meta)


def insertion_coefficients(req: CorrRequest, inters: Sequence[Intertwiner]) -> list[np.ndarray]:
    """Orthonormal coefficient vectors of the requested charges."""
    out = []
    for ins, it in zip(req.insertions, inters):
        dS = len(it.gmap.W)
        if isinstance(ins.vector, int):
            v = np.zeros(dS, dtype=complex)
            v[ins.vector] = 1.0
        else:
            v = np.asarray(ins.vector, dtype=complex)
        out.append(v)
    return out


def measure_theta(inter: Intertwiner, q: float, z: complex, M: int | None = None) -> float:
    """Largest operator norm of the untruncated scaled intertwiner over an orthonormal charge basis."""
    M = inter.M if M is None else M
    dS = len(inter.gmap.W)
    best = 0.0
    for s in range(dS):
        op = scaled_truncated(inter, _charge_basis_vector(dS, s), q, z, None, M)
        best = max(best, op.norm())
    return best


def vacuum_intertwiner(spec: LieSpec, k: int, lam, M: int) -> Intertwiner:
    """The intertwiner ``Y(1, z)`` of type ``(B; V, B)``, which is the identity."""
    return build_intertwiner(spec, k, dynkin_label(spec, 0), lam, lam, M)
