"""Analytic constants and inequality checks for the truncation error budgets."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Sequence

from .affine_module import TruncModule

__all__ = [
    "KAPPA",
    "BoundCheck",
    "ErrorBudget",
    "multipartition_count",
    "partition_bound",
    "polylog_bound",
    "theta_defining_rep",
    "character_truncated",
    "character_exact",
    "character_upper",
    "bond_dimension",
    "error_budget",
]

KAPPA = math.sqrt(3.0)


class BoundCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


@lru_cache(maxsize=None)
def _multipartition_table(n: int, k: int) -> tuple[int, ...]:
    coeffs = [1] + [0] * n
    for _ in range(k):
        for part in range(1, n + 1):
            for i in range(part, n + 1):
                coeffs[i] += coeffs[i - part]
    return tuple(coeffs)


def multipartition_count(n: int, k: int) -> int:
    """Number of ``k``-coloured partitions of ``n``, the coefficient of ``q^n`` in ``prod (1-q^m)^-k``.

    >>> multipartition_count(4, 1), multipartition_count(2, 2)
    (5, 5)
    """
    if n < 0 or k < 1:
        raise ValueError("need n >= 0 and k >= 1")
    return _multipartition_table(n, k)[n]


def partition_bound(n: int, k: int) -> BoundCheck:
    """``P(n, k) < exp(2 pi sqrt(k n / 6))``."""
    if n < 1:
        raise ValueError("need n >= 1")
    count = multipartition_count(n, k)
    bound = math.exp(2 * math.pi * math.sqrt(k * n / 6))
    return BoundCheck(float(count), bound, count < bound)


def polylog_bound(a: int, b: int, q: float, tail_tol: float = 1e-15, corrected: bool = False) -> BoundCheck:
    """``sum_n q^(a n) (n+1)^b <= a^(-b-1) b! q^(-a) log(1/q)^(-b-1)``.

    The left side is summed until a geometric bound on the remaining tail
    drops below ``tail_tol``.  The plain right side omits the derivative term
    of the Euler-Maclaurin estimate and is violated for some ``b >= 3``;
    ``corrected=True`` adds ``b (b-1)! q^(-a) (a log(1/q))^(-b)``, which makes
    the bound valid.

    >>> polylog_bound(1, 3, 0.5).holds, polylog_bound(1, 3, 0.5, corrected=True).holds
    (False, True)
    """
    if a < 1 or b < 1 or not 0 < q < 1:
        raise ValueError("need integers a, b >= 1 and 0 < q < 1")
    x = q**a
    total = 0.0
    n = 0
    while True:
        total += x**n * (n + 1) ** b
        n += 1
        # later term ratios never exceed this one
        ratio = x * ((n + 2) / (n + 1)) ** b
        if ratio < 1 and x**n * (n + 1) ** b / (1 - ratio) < tail_tol:
            break
    L = a * math.log(1 / q)
    rhs = math.factorial(b) * q ** (-a) * L ** (-b - 1)
    if corrected:
        rhs += math.factorial(b) * q ** (-a) * L ** (-b)
    return BoundCheck(total, rhs, total <= rhs)


def theta_defining_rep(q: float, z: complex, h1: float, h2: float, h3: float) -> float:
    """Explicit bound on the scaled intertwiner norm for a defining-representation charge.

    ``q^((h1+h2+h3)/2) |z|^(-tau) sqrt(1/((1-q^2)(1-|z|^2 q)) + q/(1-q)^2)`` with
    ``tau = h2 + h3 - h1``.  The bound is established for ``|z| > 1`` and
    ``q < 1/|z|^2``; for ``|z| <= 1`` it is returned as an empirical surrogate
    and a warning is issued.
    """
    az = abs(z)
    if not 0 < q < 1 or az == 0 or az * az * q >= 1:
        raise ValueError(f"theta bound needs 0 < q < 1/|z|^2, got q={q}, |z|={az}")
    if az <= 1:
        warnings.warn("theta_defining_rep used outside |z| > 1; value is an empirical surrogate", stacklevel=2)
    tau = h2 + h3 - h1
    inner = 1 / ((1 - q * q) * (1 - az * az * q)) + q / (1 - q) ** 2
    return q ** ((h1 + h2 + h3) / 2) * az ** (-tau) * math.sqrt(inner)


def character_exact(module: TruncModule, r: Fraction, M: int) -> Fraction:
    """``sum_{m <= M} d_m r^m`` as an exact rational (the character without ``r^(h - c/24)``)."""
    if M > module.M:
        raise ValueError(f"M = {M} exceeds module cutoff {module.M}")
    r = Fraction(r)
    return sum((Fraction(d) * r**m for m, d in enumerate(module.level_dims[: M + 1])), Fraction(0))


def character_truncated(module: TruncModule, r: float, M: int) -> float:
    """``sum_{m <= M} d_m r^(h + m - c/24)``."""
    if not 0 < r <= 1:
        raise ValueError("need 0 < r <= 1")
    if M > module.M:
        raise ValueError(f"M = {M} exceeds module cutoff {module.M}")
    h, c = float(module.h), float(module.c)
    return sum(d * r ** (h + m - c / 24) for m, d in enumerate(module.level_dims[: M + 1]))


def character_upper(module: TruncModule, r: float, tol: float = 1e-16) -> float:
    """Upper bound on the full character ``Z_B(r)``.

    Exact dimensions are used up to the module cutoff; above it each level is
    bounded by ``d_0 P(n, dim g)``, the count of PBW monomials.
    """
    if not 0 < r < 1:
        return math.inf
    h, c = float(module.h), float(module.c)
    total = character_truncated(module, r, module.M)
    d0 = module.level_dims[0]
    dim = module.spec.dim
    n = module.M + 1
    while True:
        term = d0 * multipartition_count(n, dim) * r ** (h + n - c / 24)
        total += term
        if term < tol * total and n > module.M + 10:
            break
        n += 1
        if n > 5000:
            return math.inf
    return total


def bond_dimension(module: TruncModule, M: int, n: int, N: int, C_V: int | None = None) -> tuple[int, float | None]:
    """Exact ``D = d_B(M + nN)`` and, when ``C_V`` is given, the sub-exponential bound on it."""
    L = M + n * N
    if L > module.M:
        raise ValueError(f"module cutoff {module.M} is below M + nN = {L}")
    D = module.cumulative_dim(L)
    if C_V is None:
        return D, None
    bound = module.level_dims[0] * max(L, 1) * math.exp(2 * math.pi * math.sqrt(C_V * L / 6))
    if D > bound:
        raise AssertionError(f"bond dimension {D} exceeds analytic bound {bound}")
    return D, bound


@dataclass
class ErrorBudget:
    """Constants entering the truncation error estimates."""

    q: float
    z: complex
    n: int
    N: int
    M: int
    r: float
    thetas: list[float]
    kappa: float = KAPPA
    I_B: int = 1
    C_V: int | None = None
    c: float = 0.0
    theta_kind: list[str] = field(default_factory=list)
    delta: float = 0.0
    growth: float = 1.0
    eps_mps0: float = 0.0
    eps_mps1: float = math.inf
    char_r: float = math.inf
    char_sqrt_r: float = math.inf

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "z": [self.z.real, self.z.imag],
            "n": self.n,
            "N": self.N,
            "M": self.M,
            "r": self.r,
            "thetas": self.thetas,
            "theta_kind": self.theta_kind,
            "kappa": self.kappa,
            "I_B": self.I_B,
            "C_V": self.C_V,
            "Delta": self.delta,
            "eps_mps0": self.eps_mps0,
            "eps_mps1": self.eps_mps1,
            "Z_B_r": self.char_r,
            "Z_B_sqrt_r": self.char_sqrt_r,
        }


def error_budget(
    n: int,
    q: float,
    z: complex,
    N: int,
    thetas: Sequence[float],
    M: int = 0,
    r: float = 1.0,
    kappa: float = KAPPA,
    I_B: int = 1,
    module: TruncModule | None = None,
    C_V: int | None = None,
    theta_kind: Sequence[str] | None = None,
) -> ErrorBudget:
    """Evaluate ``Delta``, ``eps_MPS0`` and ``eps_MPS1``.

    ``thetas`` are the per-slot bounds already evaluated at ``(sqrt(q), z)``.
    ``module`` supplies ``c`` and the character ``Z_B`` for the genus-1 budget.

    >>> b = error_budget(2, 0.25, 1.0, 8, [2.0, 2.0])
    >>> round(b.eps_mps0, 4)
    3.4641
    """
    if not 0 < q < 1:
        raise ValueError("need 0 < q < 1")
    if not 0 < r <= 1:
        raise ValueError("need 0 < r <= 1")
    if len(thetas) != n:
        raise ValueError(f"expected {n} theta values, got {len(thetas)}")
    sq = math.sqrt(q)
    growth = max((math.sqrt(I_B) * t / (1 - sq) for t in thetas), default=0.0) ** n if n else 1.0
    delta = n * kappa * growth
    budget = ErrorBudget(
        q=q, z=complex(z), n=n, N=N, M=M, r=r, thetas=list(thetas), kappa=kappa, I_B=I_B, C_V=C_V,
        theta_kind=list(theta_kind or ["given"] * n), delta=delta, growth=growth, eps_mps0=q ** (N / 4) * delta,
    )
    if module is not None:
        c = float(module.c)
        budget.c = c
        budget.char_r = character_upper(module, r)
        budget.char_sqrt_r = character_upper(module, math.sqrt(r))
        budget.eps_mps1 = (
            n * kappa * q ** (N / 4) * r ** (c / 24) * budget.char_r + r ** (M / 2) * r ** (c / 12) * budget.char_sqrt_r
        ) * growth
    return budget
