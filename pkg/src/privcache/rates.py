"""Closed-form memory-rate analytics.

Centralized rates, the cut-set lower bound and the threshold ``M_0`` use exact
:class:`~fractions.Fraction` arithmetic; the decentralized rate is a float.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .centralized import _as_fraction, corner_points
from .errors import BelowThreshold, InvalidParams, OutOfRange


@dataclass(frozen=True)
class RatePoint:
    M: Fraction
    R: Fraction | float


@dataclass
class BoundResult:
    value: Fraction
    argmax_s: int
    terms: dict = field(default_factory=dict)  # s -> term value
    skipped: list = field(default_factory=list)  # s values with floor(N/s) == 1


@lru_cache(maxsize=None)
def _envelope(N: int, K: int) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    pts = corner_points(N, K)
    return tuple(p[1] for p in pts), tuple(p[2] for p in pts)


def _check_range(N: int, K: int, M: Fraction) -> None:
    if N < 1 or K < 2:
        raise InvalidParams("need N >= 1 and K >= 2")
    if M < 1 or M > N * (K - 1):
        raise OutOfRange(f"M={M} outside [1, {N * (K - 1)}]")


def rate_formula(N: int, K: int, M) -> Fraction:
    """K (N + M - 1) / (N + (K + 1)(M - 1)), exact at the T(t) corners."""
    M = _as_fraction(M)
    return K * (N + M - 1) / (N + (K + 1) * (M - 1))


def rate_centralized(N: int, K: int, M) -> Fraction:
    """Piecewise-linear envelope through the achievable corners."""
    M = _as_fraction(M)
    _check_range(N, K, M)
    ms, rs = _envelope(N, K)
    j = bisect.bisect_left(ms, M)
    if ms[j] == M:
        return rs[j]
    m_lo, m_hi, r_lo, r_hi = ms[j - 1], ms[j], rs[j - 1], rs[j]
    return r_lo + (r_hi - r_lo) * (M - m_lo) / (m_hi - m_lo)


def lower_bound(N: int, K: int, M) -> BoundResult:
    """Cut-set bound: max over s of (s*floor(N/s) - 1 - (s-1) M) / (floor(N/s) - 1)."""
    M = _as_fraction(M)
    _check_range(N, K, M)
    if N < 2:
        raise InvalidParams("the cut-set bound needs N >= 2")
    s_max = min(N // 2, K)
    terms, skipped = {}, []
    for s in range(1, s_max + 1):
        rounds = N // s
        if rounds == 1:
            skipped.append(s)
            continue
        terms[s] = (s * rounds - 1 - (s - 1) * M) / (rounds - 1)
    best = max(terms, key=lambda s: (terms[s], -s))
    return BoundResult(terms[best], best, terms, skipped)


def m_zero(N: int, K: int) -> Fraction:
    """Memory above which the order-optimality ratio is guaranteed."""
    if N < 2 or K < 2:
        raise InvalidParams("need N >= 2 and K >= 2")
    return 1 + max(Fraction(0), Fraction(N * (K - N), (N - 1) * K + N))


def optimality_ratio(N: int, K: int, M) -> Fraction:
    """R_C(M) over the best available lower bound (cut-set, floored at 1)."""
    M = _as_fraction(M)
    if M < m_zero(N, K):
        raise BelowThreshold(f"M={M} below M_0={m_zero(N, K)}")
    lb = lower_bound(N, K, M).value
    return rate_centralized(N, K, M) / max(lb, Fraction(1))


def q_prime(N: int, M) -> float:
    return float((_as_fraction(M) - 2) / (_as_fraction(M) + N - 2))


def rate_decentralized(N: int, K: int, M) -> float:
    M = _as_fraction(M)
    if M < 1:
        raise OutOfRange(f"M={M} below 1")
    if M <= 2:
        return float(K)
    q = q_prime(N, M)
    return (1 - (1 - q) ** K) / q


def _gap_regime_ok(N: int, K: int, M: Fraction) -> bool:
    return M >= 1 if N >= K else M >= Fraction(5, 2)


def dec_cent_gap(N: int, K: int, M) -> float:
    M = _as_fraction(M)
    if not _gap_regime_ok(N, K, M):
        raise BelowThreshold(f"M={M} outside the gap regime for N={N}, K={K}")
    return rate_decentralized(N, K, M) / float(rate_centralized(N, K, M))


def shifted_gap(N: int, K: int, M) -> float:
    """R_D(M) / R_C(M - 1) for M >= 2."""
    M = _as_fraction(M)
    if M < 2:
        raise BelowThreshold("needs M >= 2")
    return rate_decentralized(N, K, M) / float(rate_formula(N, K, M - 1))


def memory_grid(lo, hi, points: int) -> list[Fraction]:
    lo, hi = _as_fraction(lo), _as_fraction(hi)
    if points == 1:
        return [lo]
    return [lo + (hi - lo) * j / (points - 1) for j in range(points)]
