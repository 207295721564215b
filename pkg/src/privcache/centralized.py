"""Centralized private coded caching.

Corner ``T(t)`` for ``t in 0..K-2`` sits at ``M = N t / (K - t) + 1`` with rate
``K / (t + 1)``; ``EXTREME`` sits at ``M = N (K - 1)`` with rate 1.  Files and
users are numbered from 1, subsets of users are sorted tuples, and subsets are
always enumerated in lexicographic order.

Tape order for :func:`place`: ramp randomness per file (ascending), then key
symbols per (t+1)-subset in lexicographic order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Sequence

from .errors import InvalidParams, MalformedTransmission, OutOfRange, PlacementMissing
from .gf import FieldSpec, FieldSymbolVector, RandomnessTape, concat, tape_draw, xor
from .ramp import RampParams, ShareBundle, ramp_reconstruct, ramp_share

Subset = tuple[int, ...]
DemandVector = tuple[int, ...]


@dataclass(frozen=True)
class Corner:
    """Corner T(t) of the memory-rate curve, or the extreme point when ``t`` is None."""

    t: int | None = None

    @property
    def is_extreme(self) -> bool:
        return self.t is None

    def __str__(self):
        return "EXTREME" if self.t is None else f"T({self.t})"


EXTREME = Corner(None)


def T(t: int) -> Corner:
    return Corner(t)


def corner_memory(N: int, K: int, corner: Corner) -> Fraction:
    if corner.is_extreme:
        return Fraction(N * (K - 1))
    t = corner.t
    return Fraction(N * t, K - t) + 1


def corner_rate(K: int, corner: Corner) -> Fraction:
    return Fraction(1) if corner.is_extreme else Fraction(K, 1 + corner.t)


def corner_points(N: int, K: int) -> list[tuple[Corner, Fraction, Fraction]]:
    """All achievable corners ``(corner, M, R)`` by increasing memory."""
    if N < 1 or K < 2:
        raise InvalidParams("need N >= 1 and K >= 2")
    pts = [(T(t), corner_memory(N, K, T(t)), corner_rate(K, T(t))) for t in range(K - 1)]
    pts.append((EXTREME, corner_memory(N, K, EXTREME), Fraction(1)))
    # N = 1, K = 2 puts T(0) and EXTREME on the same memory; keep the cheaper one
    best: dict[Fraction, tuple[Corner, Fraction, Fraction]] = {}
    for p in pts:
        if p[1] not in best or p[2] < best[p[1]][2]:
            best[p[1]] = p
    return sorted(best.values(), key=lambda p: p[1])


def check_demand(d: Sequence[int], N: int, K: int) -> DemandVector:
    d = tuple(int(x) for x in d)
    if len(d) != K or any(not 1 <= x <= N for x in d):
        raise InvalidParams(f"demand {d} is not in [{N}]^{K}")
    return d


def all_demands(N: int, K: int) -> list[DemandVector]:
    return list(itertools.product(range(1, N + 1), repeat=K))


def subsets(K: int, size: int) -> list[Subset]:
    return list(itertools.combinations(range(1, K + 1), size))


@dataclass(frozen=True)
class CentralizedSystem:
    N: int
    K: int
    F: int
    spec: FieldSpec
    corner: Corner

    def __post_init__(self):
        N, K, F, w = self.N, self.K, self.F, self.spec.w
        if N < 1 or K < 2:
            raise InvalidParams("need N >= 1 and K >= 2")
        if F <= 0 or F % w:
            raise InvalidParams(f"file size F={F} must be a positive multiple of w={w}")
        if self.corner.is_extreme:
            if K > self.spec.order - 1:
                raise InvalidParams(f"{self.spec} cannot hold {K} shares per file")
        else:
            t = self.corner.t
            if not 0 <= t <= K - 2:
                raise InvalidParams(f"t={t} outside 0..{K - 2}")
            if t >= 1 and comb(K, t) > self.spec.order - 1:
                raise InvalidParams(f"{self.spec} cannot hold C({K},{t})={comb(K, t)} shares per file")

    @property
    def t(self) -> int | None:
        return self.corner.t

    @property
    def M(self) -> Fraction:
        return corner_memory(self.N, self.K, self.corner)

    @property
    def rate(self) -> Fraction:
        return corner_rate(self.K, self.corner)

    @property
    def file_symbols(self) -> int:
        return self.F // self.spec.w

    @property
    def n_shares(self) -> int:
        if self.corner.is_extreme:
            return self.K
        return comb(self.K, self.t) if self.t >= 1 else 0

    @property
    def m_priv(self) -> int:
        if self.corner.is_extreme:
            return self.K - 1
        return comb(self.K - 1, self.t - 1) if self.t >= 1 else 0

    @property
    def ramp(self) -> RampParams | None:
        if self.n_shares == 0:
            return None
        return RampParams(self.m_priv, self.n_shares, self.spec)

    @property
    def share_symbols(self) -> int:
        """Symbols per share (and per key at T(t >= 1)); equals F/w at T(0)."""
        if self.ramp is None:
            return self.file_symbols
        return self.ramp.block_len(self.file_symbols)

    @property
    def F_s(self) -> int:
        return self.share_symbols * self.spec.w

    @property
    def padded(self) -> bool:
        return self.ramp is not None and self.file_symbols % (self.n_shares - self.m_priv) != 0

    def share_labels(self) -> list[Subset]:
        if self.corner.is_extreme:
            return [(j,) for j in range(1, self.K + 1)]
        return subsets(self.K, self.t) if self.t >= 1 else []

    def key_labels(self) -> list[Subset]:
        if self.corner.is_extreme:
            return []
        return subsets(self.K, self.t + 1)

    def tape_budget(self) -> int:
        n_files = self.N
        ramp_part = 0
        if self.ramp is not None:
            ramp_part = n_files * self.ramp.tape_budget(self.file_symbols)
        return ramp_part + len(self.key_labels()) * self.share_symbols

    def expected_cache_bits(self) -> int:
        """Share bits plus key bits per cache (equals M F when nothing is padded)."""
        if self.corner.is_extreme:
            return self.N * (self.K - 1) * self.F_s
        if self.t == 0:
            return self.F
        return (self.N * self.m_priv + comb(self.K - 1, self.t)) * self.F_s

    def expected_transmission_bits(self) -> int:
        if self.corner.is_extreme:
            return self.F_s
        return len(self.key_labels()) * self.share_symbols * self.spec.w


@dataclass
class CacheContents:
    user: int
    shares: dict = field(default_factory=dict)  # (file, label) -> payload
    keys: dict = field(default_factory=dict)  # label -> payload
    coded: dict = field(default_factory=dict)  # label -> payload (2x2 scheme only)

    @property
    def used_bits(self) -> int:
        return sum(p.bit_length for d in (self.shares, self.keys, self.coded) for p in d.values())

    def payloads(self) -> list[FieldSymbolVector]:
        """Cache content in canonical order, for serialization and auditing."""
        out = []
        for d in (self.shares, self.keys, self.coded):
            out.extend(d[key] for key in sorted(d, key=repr))
        return out


@dataclass
class ServerState:
    sys: object
    library: list
    bundles: dict = field(default_factory=dict)  # file -> ShareBundle
    keys: dict = field(default_factory=dict)  # label -> payload


@dataclass
class Transmission:
    demand: DemandVector
    segments: dict  # label -> payload, insertion order is broadcast order

    @property
    def total_bits(self) -> int:
        return sum(p.bit_length for p in self.segments.values())

    def payloads(self) -> list[FieldSymbolVector]:
        return list(self.segments.values())


def _check_library(library: Sequence[FieldSymbolVector], n_files: int, F: int, spec: FieldSpec) -> list:
    if len(library) != n_files:
        raise InvalidParams(f"library needs {n_files} files, got {len(library)}")
    for f in library:
        if f.spec != spec or f.bit_length != F or len(f) != F // spec.w:
            raise InvalidParams(f"every file must be {F} bits over {spec}")
    return list(library)


def place(sys: CentralizedSystem, library: Sequence[FieldSymbolVector], tape: RandomnessTape):
    """Fill all K caches.  Returns ``(caches, server_state)`` with ``caches[k-1]`` for user k."""
    library = _check_library(library, sys.N, sys.F, sys.spec)
    server = ServerState(sys, library)
    caches = [CacheContents(k) for k in range(1, sys.K + 1)]

    if sys.ramp is not None:
        labels = sys.share_labels()
        for i, w_i in enumerate(library, start=1):
            bundle = ramp_share(w_i, sys.ramp, tape)
            server.bundles[i] = bundle
            for label, share in zip(labels, bundle.shares):
                holders = [k for k in range(1, sys.K + 1) if k != label[0]] if sys.corner.is_extreme else label
                for k in holders:
                    caches[k - 1].shares[i, label] = share

    for V in sys.key_labels():
        key = tape_draw(tape, sys.share_symbols)
        server.keys[V] = key
        for k in V:
            caches[k - 1].keys[V] = key
    return caches, server


def deliver(
    sys: CentralizedSystem,
    server: ServerState,
    d: Sequence[int],
    drop_key: Subset | None = None,
) -> Transmission:
    """Broadcast for demand ``d``.  ``drop_key`` omits one key (fault injection)."""
    if server is None or server.sys != sys or len(server.library) != sys.N:
        raise PlacementMissing("deliver needs the server state produced by place() for this system")
    d = check_demand(d, sys.N, sys.K)
    if drop_key is not None and tuple(drop_key) not in server.keys:
        raise InvalidParams(f"no key labelled {drop_key}")
    segments = {}
    if sys.corner.is_extreme:
        parts = [server.bundles[d[k - 1]].shares[k - 1] for k in range(1, sys.K + 1)]
        segments[tuple(range(1, sys.K + 1))] = xor(*parts)
    elif sys.t == 0:
        for (k,) in sys.key_labels():
            pad = [] if drop_key == (k,) else [server.keys[k,]]
            segments[k,] = xor(server.library[d[k - 1] - 1], *pad)
    else:
        labels = sys.share_labels()
        index = {L: j for j, L in enumerate(labels)}
        for V in sys.key_labels():
            parts = [] if drop_key == V else [server.keys[V]]
            for k in V:
                L = tuple(x for x in V if x != k)
                parts.append(server.bundles[d[k - 1]].shares[index[L]])
            segments[V] = xor(*parts)
    return Transmission(d, segments)


def _segment(X: Transmission, label: Subset, n_symbols: int) -> FieldSymbolVector:
    seg = X.segments.get(label)
    if seg is None or len(seg) != n_symbols:
        raise MalformedTransmission(f"segment {label} missing or of the wrong length")
    return seg


def decode(sys: CentralizedSystem, k: int, Z_k: CacheContents, X: Transmission) -> FieldSymbolVector:
    if not 1 <= k <= sys.K or Z_k.user != k:
        raise InvalidParams(f"cache of user {Z_k.user} used to decode for user {k}")
    try:
        d = check_demand(X.demand, sys.N, sys.K)
    except InvalidParams as exc:
        raise MalformedTransmission(str(exc)) from exc
    want = d[k - 1]

    if sys.t == 0:
        return xor(_segment(X, (k,), sys.file_symbols), Z_k.keys[k,])

    try:
        if sys.corner.is_extreme:
            seg = _segment(X, tuple(range(1, sys.K + 1)), sys.share_symbols)
            others = [Z_k.shares[d[j - 1], (j,)] for j in range(1, sys.K + 1) if j != k]
            shares = [
                xor(seg, *others) if j == k else Z_k.shares[want, (j,)]
                for j in range(1, sys.K + 1)
            ]
        else:
            shares = []
            for L in sys.share_labels():
                if k in L:
                    shares.append(Z_k.shares[want, L])
                    continue
                V = tuple(sorted(L + (k,)))
                parts = [_segment(X, V, sys.share_symbols), Z_k.keys[V]]
                for j in V:
                    if j != k:
                        parts.append(Z_k.shares[d[j - 1], tuple(x for x in V if x != j)])
                shares.append(xor(*parts))
    except KeyError as exc:
        raise MalformedTransmission(f"cache of user {k} lacks {exc.args[0]}") from exc
    bundle = ShareBundle(sys.ramp, shares, sys.share_symbols, sys.F)
    return ramp_reconstruct(bundle)


def accessible_shares(sys: CentralizedSystem, k: int, d: Sequence[int]) -> dict[int, set]:
    """Share labels of each file that user k holds after decoding demand ``d``."""
    d = check_demand(d, sys.N, sys.K)
    held = {i: set() for i in range(1, sys.N + 1)}
    for L in sys.share_labels():
        cached = (k not in L) if sys.corner.is_extreme else (k in L)
        for i in held:
            if cached:
                held[i].add(L)
        if not cached:
            held[d[k - 1]].add(L)
    return held


class CentralizedScheme:
    """Bundles place/deliver/decode behind one interface (used by the auditor and CLI)."""

    name = "centralized"

    def __init__(self, sys: CentralizedSystem):
        self.sys = sys
        self.N, self.K, self.F, self.spec = sys.N, sys.K, sys.F, sys.spec

    def __repr__(self):
        s = self.sys
        return f"centralized(N={s.N}, K={s.K}, F={s.F}, w={s.spec.w}, corner={s.corner})"

    def tape_budget(self) -> int:
        return self.sys.tape_budget()

    def key_labels(self) -> list:
        return list(self.sys.key_labels())

    def place(self, library, tape):
        return place(self.sys, library, tape)

    def deliver(self, server, d, drop_key=None):
        return deliver(self.sys, server, d, drop_key)

    def decode(self, k, cache, X):
        return decode(self.sys, k, cache, X)


class Optimal2x2Scheme:
    """The rate-1 scheme for two files, two users and M = 1.

    Files are split into halves ``W_i^1, W_i^2`` and two keys of F/2 bits are
    drawn (T_1 then T_2).  Caches::

        Z_1 = {T_1, W_1^1 + W_2^1 + T_2}
        Z_2 = {T_2, W_1^2 + W_2^2 + T_1}

    Distinct demands ``(a, b)`` get ``W_a^2 + T_1`` and ``W_b^1 + T_2``; equal
    demands get the file in the clear.
    """

    name = "2x2"
    N = 2
    K = 2

    def __init__(self, F: int, spec: FieldSpec):
        if F <= 0 or F % (2 * spec.w):
            raise InvalidParams(f"F={F} must be a positive multiple of 2w={2 * spec.w}")
        self.F = F
        self.spec = spec
        self.half = F // (2 * spec.w)

    def __repr__(self):
        return f"2x2(F={self.F}, w={self.spec.w})"

    @property
    def M(self) -> Fraction:
        return Fraction(1)

    def tape_budget(self) -> int:
        return 2 * self.half

    def key_labels(self) -> list:
        return [(1,), (2,)]

    def _halves(self, f: FieldSymbolVector):
        return f.slice(0, self.half), f.slice(self.half, 2 * self.half)

    def place(self, library, tape):
        library = _check_library(library, 2, self.F, self.spec)
        (w11, w12), (w21, w22) = (self._halves(f) for f in library)
        t1 = tape_draw(tape, self.half)
        t2 = tape_draw(tape, self.half)
        server = ServerState(self, library, keys={(1,): t1, (2,): t2})
        z1 = CacheContents(1, keys={(1,): t1}, coded={"mix": xor(w11, w21, t2)})
        z2 = CacheContents(2, keys={(2,): t2}, coded={"mix": xor(w12, w22, t1)})
        return [z1, z2], server

    def deliver(self, server, d, drop_key=None):
        a, b = check_demand(d, 2, 2)
        if drop_key is not None and tuple(drop_key) not in server.keys:
            raise InvalidParams(f"no key labelled {drop_key}")
        if a == b:
            return Transmission((a, b), {(): server.library[a - 1]})

        def pad(label):
            return [] if drop_key == label else [server.keys[label]]

        seg1 = xor(self._halves(server.library[a - 1])[1], *pad((1,)))
        seg2 = xor(self._halves(server.library[b - 1])[0], *pad((2,)))
        return Transmission((a, b), {(1,): seg1, (2,): seg2})

    def decode(self, k, cache, X):
        a, b = X.demand
        if a == b:
            return _segment(X, (), 2 * self.half)
        seg1 = _segment(X, (1,), self.half)
        seg2 = _segment(X, (2,), self.half)
        if k == 1:
            second = xor(seg1, cache.keys[1,])
            first = xor(cache.coded["mix"], seg2)
        else:
            first = xor(seg2, cache.keys[2,])
            second = xor(cache.coded["mix"], seg1)
        return concat(self.spec, [first, second])


def scheme_2x2_optimal(library, tape, d, spec: FieldSpec | None = None):
    """Run the 2x2 scheme end to end: returns ``(caches, transmission, decoded)``."""
    if len(library) != 2:
        raise InvalidParams("the optimal scheme needs exactly N = K = 2")
    if len(d) != 2:
        raise InvalidParams("the optimal scheme needs exactly N = K = 2")
    spec = spec or library[0].spec
    scheme = Optimal2x2Scheme(library[0].bit_length, spec)
    caches, server = scheme.place(library, tape)
    X = scheme.deliver(server, d)
    decoded = [scheme.decode(k, caches[k - 1], X) for k in (1, 2)]
    return caches, X, decoded


# -- memory sharing between corners --------------------------------------


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**9)
    return Fraction(x)


def memory_share_plan(N: int, K: int, M) -> list[tuple[Corner, Fraction]]:
    """Corners and weights ``alpha`` whose weighted memory is exactly ``M``.

    A weight applies to every file: that fraction of each file (a prefix for
    the first entry) is served by the corner's scheme.
    """
    M = _as_fraction(M)
    pts = corner_points(N, K)
    if M < pts[0][1] or M > pts[-1][1]:
        raise OutOfRange(f"M={M} outside [{pts[0][1]}, {pts[-1][1]}]")
    for corner, m_c, _ in pts:
        if m_c == M:
            return [(corner, Fraction(1))]
    for (lo, m_lo, _), (hi, m_hi, _) in zip(pts, pts[1:]):
        if m_lo < M < m_hi:
            alpha = (m_hi - M) / (m_hi - m_lo)
            return [(lo, alpha), (hi, 1 - alpha)]
    raise AssertionError("unreachable: M inside the corner range")


def plan_rate(N: int, K: int, plan) -> Fraction:
    return sum((a * corner_rate(K, c) for c, a in plan), Fraction(0))


class MemorySharedScheme:
    """Runs a memory-sharing plan by splitting every file into per-corner parts."""

    name = "memory-shared"

    def __init__(self, N: int, K: int, F: int, spec: FieldSpec, M):
        self.N, self.K, self.F, self.spec = N, K, F, spec
        self.plan = memory_share_plan(N, K, M)
        self.parts = []
        for corner, alpha in self.plan:
            bits = alpha * F
            if bits.denominator != 1:
                raise InvalidParams(f"alpha*F = {bits} is not a whole number of bits")
            self.parts.append(CentralizedSystem(N, K, int(bits), spec, corner))

    def tape_budget(self) -> int:
        return sum(p.tape_budget() for p in self.parts)

    def _split(self, library):
        out, start = [], 0
        for part in self.parts:
            n = part.file_symbols
            out.append([f.slice(start, start + n) for f in library])
            start += n
        return out

    def place(self, library, tape):
        library = _check_library(library, self.N, self.F, self.spec)
        placed = [place(part, sub, tape) for part, sub in zip(self.parts, self._split(library))]
        caches = [[p[0][k] for p in placed] for k in range(self.K)]
        return caches, [p[1] for p in placed]

    def deliver(self, servers, d):
        return [deliver(part, s, d) for part, s in zip(self.parts, servers)]

    def decode(self, k, caches, Xs):
        pieces = [decode(part, k, c, X) for part, c, X in zip(self.parts, caches, Xs)]
        return concat(self.spec, pieces)
