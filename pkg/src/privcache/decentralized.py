"""Decentralized private coded caching.

Every user independently caches a private key ``C_k`` of F bits and, when
``M > 2``, a random ``m``-subset of the ``G`` ramp shares of every file plus a
random subset of a shared key pool.  Delivery sends, for every non-empty user
set ``S``, the padded XOR of the share groups ``G_{d_k}^{S-k}`` masked with the
keys ``U^S`` cached exactly by ``S``.  If some ``S`` lacks key material (event
Q fails) the server falls back to ``W_{d_k} + C_k`` for every user.

Tape order for :func:`dec_place`: private keys by user, ramp randomness by
file, share subsets by (user, file), key pool payloads, key subsets by user.
Subsets are drawn with a partial Fisher-Yates shuffle, one tape symbol per
swap, swap index ``symbol mod (i + 1)``.

User sets are bitmasks internally (bit ``k-1`` for user ``k``); share and key
indices are 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from fractions import Fraction
from typing import Sequence

import numpy as np

from .centralized import Transmission, _as_fraction, _check_library, check_demand
from .errors import InvalidParams, MalformedTransmission
from .gf import FieldSpec, FieldSymbolVector, RandomnessTape, concat, splitmix64, tape_draw, tape_from_seed, xor
from .ramp import RampParams, ShareBundle, ramp_reconstruct, ramp_share

DEFAULT_R = Fraction(1, 10)


def mask_of(users: Sequence[int]) -> int:
    out = 0
    for k in users:
        out |= 1 << (k - 1)
    return out


@lru_cache(maxsize=1 << 16)
def users_of(mask: int) -> tuple[int, ...]:
    return tuple(k + 1 for k in range(mask.bit_length()) if mask >> k & 1)


@dataclass(frozen=True)
class DecParams:
    N: int
    K: int
    F: int
    spec: FieldSpec
    M: Fraction
    G: int
    r: Fraction
    shares_per_user: int
    key_pool_size: int
    keys_per_user: int

    @classmethod
    def from_memory(cls, N: int, K: int, F: int | None, M, G: int, r=DEFAULT_R, spec: FieldSpec | None = None) -> "DecParams":
        """Derive the integer share/key counts from the cache size.

        ``F=None`` picks the smallest file size that splits into whole-symbol
        shares, ``w * (G - shares_per_user)`` bits.
        """
        spec = spec or FieldSpec.of_width(16)
        M, r = _as_fraction(M), _as_fraction(r)
        if M < 1:
            raise InvalidParams(f"M={M} below 1")
        if r <= 0:
            raise InvalidParams("slack r must be positive")
        if M <= 2:
            return cls(N, K, F or spec.w, spec, M, G, r, 0, 0, 0)
        q = (M - 2) / (M + N + r - 2)
        shares = math.floor(q * G)
        if F is None:
            F = spec.w * (G - shares)
        pool = max(1, round(G * ((1 - q) / q + r)))
        per_user = min(pool, math.floor(((1 - q) + r * q) * G))
        p = cls(N, K, F, spec, M, G, r, shares, pool, per_user)
        if p.cache_bits() > M * F:
            raise InvalidParams(f"rounded placement needs {p.cache_bits()} bits > M F = {M * F}")
        return p

    def __post_init__(self):
        if self.N < 1 or self.K < 1:
            raise InvalidParams("need N >= 1 and K >= 1")
        if self.F <= 0 or self.F % self.spec.w:
            raise InvalidParams(f"F={self.F} must be a positive multiple of w={self.spec.w}")
        if self.keyed:
            if self.G < 1 or not 0 <= self.shares_per_user < self.G:
                raise InvalidParams("need 0 <= shares_per_user < G")
            if not 0 <= self.keys_per_user <= self.key_pool_size:
                raise InvalidParams("need 0 <= keys_per_user <= key_pool_size")

    @cached_property
    def keyed(self) -> bool:
        """Whether the share/key machinery is used (M > 2)."""
        return self.M > 2

    @property
    def q(self) -> Fraction:
        return (self.M - 2) / (self.M + self.N + self.r - 2)

    @property
    def q_prime(self) -> Fraction:
        return (self.M - 2) / (self.M + self.N - 2)

    @cached_property
    def file_symbols(self) -> int:
        return self.F // self.spec.w

    @cached_property
    def ramp(self) -> RampParams:
        return RampParams(self.shares_per_user, self.G, self.spec)

    @cached_property
    def share_symbols(self) -> int:
        if not self.keyed:
            return 0
        return -(-self.file_symbols // (self.G - self.shares_per_user))

    @cached_property
    def h(self) -> int:
        """Share and shared-key size in bits."""
        return self.share_symbols * self.spec.w

    def cache_bits(self) -> int:
        return self.F + (self.N * self.shares_per_user + self.keys_per_user) * self.h

    def pattern_budget(self) -> int:
        if not self.keyed:
            return 0
        return self.K * self.N * self.shares_per_user + self.K * self.keys_per_user

    def tape_budget(self, with_pattern: bool = True) -> int:
        budget = self.K * self.file_symbols
        if self.keyed:
            budget += self.N * self.shares_per_user * self.share_symbols
            budget += self.key_pool_size * self.share_symbols
            if with_pattern:
                budget += self.pattern_budget()
        return budget


@dataclass
class CachingPattern:
    share_sets: dict  # (user, file) -> sorted tuple of share indices
    key_sets: dict  # user -> sorted tuple of pool indices


def _fisher_yates_pick(n: int, count: int, tape: RandomnessTape) -> tuple[int, ...]:
    a = list(range(n))
    for step, s in enumerate(tape.draw_array(count).tolist()):
        i = n - 1 - step
        j = s % (i + 1)
        a[i], a[j] = a[j], a[i]
    return tuple(sorted(a[n - count :]))


def _sample_share_sets(params: DecParams, tape: RandomnessTape) -> dict:
    return {
        (k, i): _fisher_yates_pick(params.G, params.shares_per_user, tape)
        for k in range(1, params.K + 1)
        for i in range(1, params.N + 1)
    }


def _sample_key_sets(params: DecParams, tape: RandomnessTape) -> dict:
    return {k: _fisher_yates_pick(params.key_pool_size, params.keys_per_user, tape) for k in range(1, params.K + 1)}


def sample_pattern(params: DecParams, tape: RandomnessTape) -> CachingPattern:
    """Only the subset draws of :func:`dec_place`, in the same order."""
    if not params.keyed:
        return CachingPattern({}, {})
    return CachingPattern(_sample_share_sets(params, tape), _sample_key_sets(params, tape))


@dataclass
class DecPlacement:
    params: DecParams
    library: list
    private_keys: dict  # user -> payload
    share_bundles: dict  # file -> ShareBundle
    pattern: CachingPattern
    key_pool: list  # payloads

    @property
    def user_share_sets(self) -> dict:
        return self.pattern.share_sets

    @property
    def user_key_sets(self) -> dict:
        return self.pattern.key_sets

    def used_bits(self, k: int) -> int:
        bits = self.private_keys[k].bit_length
        for i in range(1, self.params.N + 1):
            for j in self.pattern.share_sets.get((k, i), ()):
                bits += self.share_bundles[i].shares[j].bit_length
        for j in self.pattern.key_sets.get(k, ()):
            bits += self.key_pool[j].bit_length
        return bits

    def cache_of(self, k: int) -> "DecCache":
        shares = {
            (i, j): self.share_bundles[i].shares[j]
            for i in range(1, self.params.N + 1)
            for j in self.pattern.share_sets.get((k, i), ())
        }
        keys = {j: self.key_pool[j] for j in self.pattern.key_sets.get(k, ())}
        return DecCache(k, self.private_keys[k], shares, keys)


@dataclass
class DecCache:
    user: int
    private_key: FieldSymbolVector
    shares: dict  # (file, share index) -> payload
    keys: dict  # pool index -> payload
    index: "ExclusivityIndex | None" = None  # public caching pattern, needed to decode

    @property
    def used_bits(self) -> int:
        return self.private_key.bit_length + sum(p.bit_length for p in self.shares.values()) + sum(
            p.bit_length for p in self.keys.values()
        )

    def payloads(self) -> list[FieldSymbolVector]:
        return [self.private_key] + [self.shares[x] for x in sorted(self.shares)] + [self.keys[x] for x in sorted(self.keys)]


def dec_place(
    params: DecParams,
    library: Sequence[FieldSymbolVector],
    tape: RandomnessTape,
    pattern: CachingPattern | None = None,
) -> DecPlacement:
    """Placement phase.  A supplied ``pattern`` replaces the two subset draws."""
    library = _check_library(library, params.N, params.F, params.spec)
    private = {k: tape_draw(tape, params.file_symbols) for k in range(1, params.K + 1)}
    if not params.keyed:
        return DecPlacement(params, library, private, {}, CachingPattern({}, {}), [])
    ramp = params.ramp
    bundles = {i: ramp_share(f, ramp, tape) for i, f in enumerate(library, start=1)}
    share_sets = pattern.share_sets if pattern else _sample_share_sets(params, tape)
    pool = [tape_draw(tape, params.share_symbols) for _ in range(params.key_pool_size)]
    key_sets = pattern.key_sets if pattern else _sample_key_sets(params, tape)
    return DecPlacement(params, library, private, bundles, CachingPattern(share_sets, key_sets), pool)


class ExclusivityIndex:
    """Groups share and key indices by the exact set of users caching them."""

    def __init__(self, params: DecParams, pattern: CachingPattern):
        self.params = params
        share_masks = np.zeros((params.N, params.G if params.keyed else 0), dtype=np.int64)
        key_masks = np.zeros(params.key_pool_size, dtype=np.int64)
        for (k, i), idx in pattern.share_sets.items():
            share_masks[i - 1, list(idx)] |= 1 << (k - 1)
        for k, idx in pattern.key_sets.items():
            key_masks[list(idx)] |= 1 << (k - 1)
        self.share_masks = share_masks
        self.key_masks = key_masks
        self._key_cells = np.unique(key_masks, return_counts=True)
        self._share_cells = [np.unique(row, return_counts=True) for row in share_masks]
        self._cells: dict = {}  # memo for G_cell / U_cell; masks never change after construction

    def G_size(self, i: int, S: int) -> int:
        masks, counts = self._share_cells[i - 1]
        j = np.searchsorted(masks, S)
        return int(counts[j]) if j < len(masks) and masks[j] == S else 0

    def U_size(self, S: int) -> int:
        masks, counts = self._key_cells
        j = np.searchsorted(masks, S)
        return int(counts[j]) if j < len(masks) and masks[j] == S else 0

    def G_cell(self, i: int, S: int) -> np.ndarray:
        key = (i, S)
        if key not in self._cells:
            self._cells[key] = np.flatnonzero(self.share_masks[i - 1] == S)
        return self._cells[key]

    def U_cell(self, S: int) -> np.ndarray:
        key = (0, S)
        if key not in self._cells:
            self._cells[key] = np.flatnonzero(self.key_masks == S)
        return self._cells[key]

    def G_map(self, i: int) -> dict[int, np.ndarray]:
        return {int(S): self.G_cell(i, int(S)) for S in self._share_cells[i - 1][0]}

    def U_map(self) -> dict[int, np.ndarray]:
        return {int(S): self.U_cell(int(S)) for S in self._key_cells[0]}

    def key_cell_sizes(self) -> dict[int, int]:
        return dict(zip(self._key_cells[0].tolist(), self._key_cells[1].tolist()))

    def q_violations(self, d: Sequence[int]) -> int:
        """Number of (S, k) pairs with |U^S| < |G_{d_k}^{S-k}|."""
        umasks, ucounts = self._key_cells
        bad = 0
        for k, want in enumerate(d, start=1):
            bit = 1 << (k - 1)
            masks, counts = self._share_cells[want - 1]
            sel = (masks & bit) == 0
            S = masks[sel] | bit
            j = np.minimum(np.searchsorted(umasks, S), len(umasks) - 1)
            u = np.where(umasks[j] == S, ucounts[j], 0)
            bad += int(np.count_nonzero(u < counts[sel]))
        return bad

    def keyed_bits(self) -> int:
        """Broadcast size of the keyed path: every key not cached by nobody, h bits each."""
        return (self.params.key_pool_size - self.U_size(0)) * self.params.h


def build_exclusivity(placement: DecPlacement | CachingPattern, params: DecParams | None = None) -> ExclusivityIndex:
    if isinstance(placement, DecPlacement):
        return ExclusivityIndex(placement.params, placement.pattern)
    if params is None:
        raise InvalidParams("a bare pattern needs its DecParams")
    return ExclusivityIndex(params, placement)


def check_Q(index: ExclusivityIndex, d: Sequence[int]) -> bool:
    if not index.params.keyed:
        return False
    d = check_demand(d, index.params.N, index.params.K)
    key = ("Q", d)
    if key not in index._cells:
        index._cells[key] = index.q_violations(d) == 0
    return index._cells[key]


@dataclass
class DecTransmission(Transmission):
    keyed: bool = False


def _operand(placement: DecPlacement, i: int, idx: np.ndarray) -> FieldSymbolVector:
    shares = placement.share_bundles[i].shares
    return concat(placement.params.spec, [shares[j] for j in idx.tolist()])


@lru_cache(maxsize=None)
def _subset_order(K: int) -> tuple[int, ...]:
    return tuple(sorted(range(1, 1 << K), key=users_of))


def dec_deliver(
    placement: DecPlacement,
    index: ExclusivityIndex,
    d: Sequence[int],
    drop_key: int | None = None,
) -> DecTransmission:
    """Broadcast for ``d``.  Keyed segments are labelled by the user tuple S;
    fallback segments by ``(k,)`` with a transmission flagged ``keyed=False``.

    ``drop_key`` (a pool index) leaves that shared key out of its segment.
    Sets with no exclusive keys carry nothing and get no segment.
    """
    params = placement.params
    d = check_demand(d, params.N, params.K)
    if not check_Q(index, d):
        segments = {(k,): xor(placement.library[d[k - 1] - 1], placement.private_keys[k]) for k in range(1, params.K + 1)}
        return DecTransmission(d, segments, keyed=False)
    segments = {}
    sizes = index.key_cell_sizes()
    blank = FieldSymbolVector.zeros(params.spec, params.share_symbols)
    for S in _subset_order(params.K):
        if not sizes.get(S):
            continue
        keys = [blank if j == drop_key else placement.key_pool[j] for j in index.U_cell(S).tolist()]
        parts = [concat(params.spec, keys)]
        for k in users_of(S):
            parts.append(_operand(placement, d[k - 1], index.G_cell(d[k - 1], S & ~(1 << (k - 1)))))
        segments[users_of(S)] = xor(*parts, pad=True)
    return DecTransmission(d, segments, keyed=True)


def dec_decode(
    k: int,
    params: DecParams,
    cache: DecCache,
    index: ExclusivityIndex,
    X: DecTransmission,
) -> FieldSymbolVector:
    d = check_demand(X.demand, params.N, params.K)
    want = d[k - 1]
    if not X.keyed:
        seg = X.segments.get((k,))
        if seg is None or len(seg) != params.file_symbols:
            raise MalformedTransmission(f"fallback segment for user {k} missing")
        return xor(seg, cache.private_key)

    bit = 1 << (k - 1)
    sh = params.share_symbols
    shares: list = [None] * params.G
    for (i, j), payload in cache.shares.items():
        if i == want:
            shares[j] = payload
    try:
        for S in _subset_order(params.K):
            if not S & bit:
                continue
            target = index.G_cell(want, S & ~bit)
            if not len(target):
                continue
            seg = X.segments.get(users_of(S))
            if seg is None:
                raise MalformedTransmission(f"segment {users_of(S)} missing")
            parts = [seg, concat(params.spec, [cache.keys[j] for j in index.U_cell(S).tolist()])]
            for other in users_of(S):
                if other == k:
                    continue
                idx = index.G_cell(d[other - 1], S & ~(1 << (other - 1)))
                parts.append(concat(params.spec, [cache.shares[d[other - 1], j] for j in idx.tolist()]))
            plain = xor(*parts, pad=True)
            for pos, j in enumerate(target.tolist()):
                shares[j] = plain.slice(pos * sh, (pos + 1) * sh)
    except KeyError as exc:
        raise MalformedTransmission(f"cache of user {k} lacks {exc.args[0]}") from exc
    bundle = ShareBundle(params.ramp, shares, sh, params.F)
    return ramp_reconstruct(bundle)


class DecentralizedScheme:
    """place/deliver/decode interface matching :class:`~privcache.centralized.CentralizedScheme`."""

    name = "decentralized"

    def __init__(self, params: DecParams, pattern: CachingPattern | None = None):
        self.params = params
        self.pattern = pattern
        self.N, self.K, self.F, self.spec = params.N, params.K, params.F, params.spec
        # a fixed pattern means a fixed index; rebuilding it per placement is wasted work
        self._index = ExclusivityIndex(params, pattern) if pattern is not None else None

    def __repr__(self):
        p = self.params
        return (
            f"decentralized(N={p.N}, K={p.K}, F={p.F}, w={p.spec.w}, M={p.M}, G={p.G}, "
            f"shares/user={p.shares_per_user}, pool={p.key_pool_size}, keys/user={p.keys_per_user})"
        )

    def tape_budget(self) -> int:
        return self.params.tape_budget(with_pattern=self.pattern is None)

    def key_labels(self) -> list:
        return list(range(self.params.key_pool_size))

    def place(self, library, tape):
        placement = dec_place(self.params, library, tape, self.pattern)
        index = self._index or build_exclusivity(placement)
        caches = [placement.cache_of(k) for k in range(1, self.K + 1)]
        for c in caches:
            c.index = index
        return caches, (placement, index)

    def deliver(self, server, d, drop_key=None):
        placement, index = server
        return dec_deliver(placement, index, d, drop_key)

    def decode(self, k, cache, X):
        return dec_decode(k, self.params, cache, cache.index, X)


# -- Monte-Carlo --------------------------------------------------------


def demand_round_robin(N: int, K: int) -> tuple[int, ...]:
    """All-distinct demands when N >= K, cycling through the files otherwise."""
    return tuple((k % N) + 1 for k in range(K))


def chebyshev_q_bound(params: DecParams) -> float:
    q = float(params.q)
    r = float(params.r)
    K = params.K
    return 1 - K * (2 * (1 - q) / q + r) / (q**K * (1 - q) ** (K - 1) * r**2 * params.G)


def expected_rate(N: int, K: int, M) -> float:
    """(1 - (1 - q')^K) / q' with q' = (M-2)/(M+N-2)."""
    qp = float((_as_fraction(M) - 2) / (_as_fraction(M) + N - 2))
    return (1 - (1 - qp) ** K) / qp


def trial_seed(seed: int, trial: int) -> int:
    return int(splitmix64(seed, 1, start=trial)[0])


def sample_trial(params: DecParams, seed: int) -> ExclusivityIndex:
    tape = tape_from_seed(seed, params.spec, params.pattern_budget())
    return ExclusivityIndex(params, sample_pattern(params, tape))


@dataclass
class QEstimate:
    trials: int
    q_hits: int
    bound: float
    rates: list = field(default_factory=list)  # delivered rate per trial
    keyed_rates: list = field(default_factory=list)  # keyed-path rate per trial, Q or not

    @property
    def probability(self) -> float:
        return self.q_hits / self.trials

    @property
    def stderr(self) -> float:
        p = self.probability
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def mean_rate(self) -> float:
        return float(np.mean(self.rates))

    @property
    def mean_keyed_rate(self) -> float:
        return float(np.mean(self.keyed_rates)) if self.keyed_rates else float("nan")


def estimate_Q_probability(params: DecParams, trials: int, seed: int, d: Sequence[int] | None = None) -> QEstimate:
    """Seeded placements; delivered rate is sum |U^S| h / F when Q holds, K otherwise."""
    if trials < 1:
        raise InvalidParams("need at least one trial")
    d = tuple(d) if d is not None else demand_round_robin(params.N, params.K)
    if not params.keyed:
        return QEstimate(trials, 0, float("nan"), [float(params.K)] * trials, [])
    est = QEstimate(trials, 0, chebyshev_q_bound(params))
    for t in range(trials):
        index = sample_trial(params, trial_seed(seed, t))
        keyed_rate = index.keyed_bits() / params.F
        ok = index.q_violations(d) == 0
        est.q_hits += ok
        est.keyed_rates.append(keyed_rate)
        est.rates.append(keyed_rate if ok else float(params.K))
    return est
