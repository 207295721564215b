"""Exhaustive leakage and error audits on small instances.

A *world* is one library realization together with one full randomness tape.
Audits run every world through a scheme's place/deliver/decode, tally exact
integer joint counts, and report

* ``I(W_{[N] - d_k}; X_d, Z_k)`` for every demand ``d`` and user ``k``,
* the probability that some user decodes the wrong file, per demand,
* ``I(W_{[N]}; X_d)`` as seen by an eavesdropper on the shared link.

A leakage of exactly ``0.0`` is only reported when the joint counts factor
exactly (``c(x, y) * T == c(x) * c(y)`` for every cell).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .centralized import all_demands, check_demand
from .errors import EnumerationTooLarge, InvalidParams, NotADistribution, PrivCacheError
from .gf import SYMBOL_DTYPE, FieldSpec, FieldSymbolVector, RandomnessTape

DEFAULT_CEILING = 1 << 26


def mutual_information(joint: Mapping) -> float:
    """I(X; Y) in bits for a joint given as ``{(x, y): weight}``.

    Integer or Fraction weights are normalized exactly; float weights must
    already sum to 1 within 1e-12.
    """
    if not joint:
        raise NotADistribution("empty joint distribution")
    weights = list(joint.values())
    if any(v < 0 for v in weights):
        raise NotADistribution("negative weight")
    exact = all(isinstance(v, (int, np.integer, Fraction)) for v in weights)
    if exact:
        total = sum(Fraction(v) for v in weights)
        if total <= 0:
            raise NotADistribution("weights sum to zero")
    else:
        total = math.fsum(float(v) for v in weights)
        if abs(total - 1) > 1e-12:
            raise NotADistribution(f"weights sum to {total}, not 1")
    px: dict = {}
    py: dict = {}
    for (x, y), v in joint.items():
        px[x] = px.get(x, 0) + v
        py[y] = py.get(y, 0) + v
    if exact:
        if all(Fraction(v) * total == Fraction(px[x]) * Fraction(py[y]) for (x, y), v in joint.items() if v):
            return 0.0
    terms = []
    for (x, y), v in joint.items():
        if v:
            ratio = Fraction(v) * total / (Fraction(px[x]) * Fraction(py[y])) if exact else v / (px[x] * py[y])
            terms.append(float(v) / float(total) * math.log2(ratio))
    return max(math.fsum(terms), 0.0)


def mutual_information_counts(xs: np.ndarray, ys: np.ndarray, weights: np.ndarray | None = None) -> float:
    """Exact-zero-aware I(X; Y) from per-world integer labels and integer weights."""
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    weights = np.ones(len(xs), dtype=np.int64) if weights is None else np.asarray(weights, dtype=np.int64)
    _, xi = np.unique(xs, return_inverse=True)
    _, yi = np.unique(ys, return_inverse=True)
    ny = int(yi.max()) + 1
    pairs, pi = np.unique(xi * ny + yi, return_inverse=True)
    c = np.bincount(pi, weights=weights).astype(np.int64)
    cx = np.bincount(xi, weights=weights).astype(np.int64)
    cy = np.bincount(yi, weights=weights).astype(np.int64)
    total = int(weights.sum())
    a, b = cx[pairs // ny], cy[pairs % ny]
    # counts stay below 2^26 * weight, so the products fit in int64 for audit sizes
    if np.array_equal(c * total, a * b):
        return 0.0
    nz = c > 0
    p = c[nz] / total
    return max(float(np.sum(p * np.log2(c[nz] * total / (a[nz].astype(float) * b[nz])))), 0.0)


class _Interner:
    def __init__(self):
        self.ids: dict = {}

    def __call__(self, key) -> int:
        return self.ids.setdefault(key, len(self.ids))


def _key(payloads: Iterable[FieldSymbolVector]) -> tuple:
    return tuple(p.symbols.tobytes() for p in payloads)


def _vectors(spec: FieldSpec, n_symbols: int) -> Iterable[np.ndarray]:
    for combo in itertools.product(range(spec.order), repeat=n_symbols):
        yield np.array(combo, dtype=SYMBOL_DTYPE)


def uniform_file_weight(symbols: np.ndarray) -> int:
    return 1


def skewed_file_weight(symbols: np.ndarray) -> int:
    """A fixed non-uniform file law: weight 1 + (first symbol)."""
    return 1 + int(symbols[0]) if len(symbols) else 1


@dataclass
class WorldEnumeration:
    """All (library, tape) pairs of a scheme, with integer library weights."""

    scheme: object
    file_weight: Callable[[np.ndarray], int] = uniform_file_weight
    ceiling: int = DEFAULT_CEILING

    def __post_init__(self):
        s = self.scheme
        if s.F % s.spec.w:
            raise InvalidParams("F must be a multiple of w")
        self.file_symbols = s.F // s.spec.w
        self.budget = s.tape_budget()
        self.count = s.spec.order ** (s.N * self.file_symbols + self.budget)
        if self.count > self.ceiling:
            raise EnumerationTooLarge(f"{self.count} worlds exceed the ceiling {self.ceiling}")

    def libraries(self):
        """Yields ``(library_index, files, weight)``; index packs the file symbols."""
        s = self.scheme
        files = list(_vectors(s.spec, self.file_symbols))
        weights = [self.file_weight(f) for f in files]
        for idx, combo in enumerate(itertools.product(range(len(files)), repeat=s.N)):
            lib = [FieldSymbolVector(s.spec, files[j]) for j in combo]
            yield idx, combo, lib, math.prod(weights[j] for j in combo)

    def tapes(self):
        return list(_vectors(self.scheme.spec, self.budget))


@dataclass
class AuditReport:
    scheme: str
    worlds: int
    leakage: dict = field(default_factory=dict)  # (d, k) -> bits
    error_probability: dict = field(default_factory=dict)  # d -> Fraction
    eavesdropper: dict = field(default_factory=dict)  # d -> bits
    transmission_bits: dict = field(default_factory=dict)  # d -> bits (max over worlds)
    notes: list = field(default_factory=list)

    @property
    def max_leakage(self) -> float:
        return max(self.leakage.values(), default=0.0)

    @property
    def P_e(self) -> Fraction:
        return max(self.error_probability.values(), default=Fraction(0))

    @property
    def max_eavesdropper(self) -> float:
        return max(self.eavesdropper.values(), default=0.0)

    @property
    def private(self) -> bool:
        return self.max_leakage == 0 and self.P_e == 0

    def lines(self) -> list[str]:
        out = [
            f"scheme: {self.scheme}",
            f"worlds: {self.worlds}",
            f"max_leakage_bits: {self.max_leakage:.6g}",
            f"error_probability: {float(self.P_e):.6g}",
            f"max_eavesdropper_bits: {self.max_eavesdropper:.6g}",
        ]
        for (d, k), v in sorted(self.leakage.items()):
            out.append(f"leakage[d={_fmt_d(d)},k={k}]: {v:.6g}")
        for d, v in sorted(self.error_probability.items()):
            out.append(f"error[d={_fmt_d(d)}]: {float(v):.6g}")
        for d, v in sorted(self.eavesdropper.items()):
            out.append(f"eavesdropper[d={_fmt_d(d)}]: {v:.6g}")
        for d, v in sorted(self.transmission_bits.items()):
            out.append(f"transmission_bits[d={_fmt_d(d)}]: {v}")
        out.extend(f"note: {n}" for n in self.notes)
        return out


def _fmt_d(d) -> str:
    return ",".join(map(str, d))


def run_audit(
    scheme,
    demands: Sequence[Sequence[int]] | None = None,
    *,
    drop_key=None,
    decode: bool = True,
    file_weight: Callable[[np.ndarray], int] = uniform_file_weight,
    ceiling: int = DEFAULT_CEILING,
) -> AuditReport:
    """Enumerate every world of ``scheme`` and tally exact joint counts."""
    worlds = WorldEnumeration(scheme, file_weight, ceiling)
    N, K = scheme.N, scheme.K
    demands = [check_demand(d, N, K) for d in (demands or all_demands(N, K))]
    tapes = worlds.tapes()
    n = worlds.count

    lib_ids = np.zeros(n, dtype=np.int64)
    other_ids = {(d, k): np.zeros(n, dtype=np.int64) for d in demands for k in range(1, K + 1)}
    view_ids = {(d, k): np.zeros(n, dtype=np.int64) for d in demands for k in range(1, K + 1)}
    link_ids = {d: np.zeros(n, dtype=np.int64) for d in demands}
    weights = np.zeros(n, dtype=np.int64)
    errors = {d: 0 for d in demands}
    tx_bits = {d: 0 for d in demands}
    views = _Interner()
    links = _Interner()

    w = 0
    n_files = scheme.spec.order ** worlds.file_symbols
    for lib_idx, combo, library, weight in worlds.libraries():
        others = {}
        for want in range(1, N + 1):
            packed = 0
            for i, j in enumerate(combo, start=1):
                if i != want:
                    packed = packed * n_files + j
            others[want] = packed
        for stream in tapes:
            caches, server = scheme.place(library, RandomnessTape(scheme.spec, stream))
            cache_keys = [_key(c.payloads()) for c in caches]
            lib_ids[w] = lib_idx
            weights[w] = weight
            for d in demands:
                X = scheme.deliver(server, d, drop_key) if drop_key is not None else scheme.deliver(server, d)
                x_key = _key(X.payloads())
                link_ids[d][w] = links((d, x_key))
                tx_bits[d] = max(tx_bits[d], X.total_bits)
                failed = False
                for k in range(1, K + 1):
                    other_ids[d, k][w] = others[d[k - 1]]
                    view_ids[d, k][w] = views((d, k, cache_keys[k - 1], x_key))
                    if decode and not failed:
                        try:
                            failed = scheme.decode(k, caches[k - 1], X) != library[d[k - 1] - 1]
                        except PrivCacheError:
                            failed = True
                if failed:
                    errors[d] += weight
            w += 1

    total = int(weights.sum())
    report = AuditReport(repr(scheme), n)
    for d in demands:
        for k in range(1, K + 1):
            report.leakage[d, k] = mutual_information_counts(other_ids[d, k], view_ids[d, k], weights)
        report.eavesdropper[d] = mutual_information_counts(lib_ids, link_ids[d], weights)
        report.transmission_bits[d] = tx_bits[d]
        if decode:
            report.error_probability[d] = Fraction(errors[d], total)
    if drop_key is not None:
        report.notes.append(f"fault injection: key {drop_key} dropped")
    return report


def audit_centralized(scheme, demands=None, *, drop_key=None, file_weight=uniform_file_weight, ceiling=DEFAULT_CEILING) -> AuditReport:
    """Leakage, error probability and eavesdropper leakage for every demand.

    ``scheme`` is a :class:`~privcache.centralized.CentralizedScheme`, an
    :class:`~privcache.centralized.Optimal2x2Scheme`, or a
    :class:`~privcache.centralized.CentralizedSystem` (wrapped automatically).
    """
    from .centralized import CentralizedScheme, CentralizedSystem

    if isinstance(scheme, CentralizedSystem):
        scheme = CentralizedScheme(scheme)
    return run_audit(scheme, demands, drop_key=drop_key, file_weight=file_weight, ceiling=ceiling)


def audit_eavesdropper(scheme, d: Sequence[int], *, ceiling=DEFAULT_CEILING) -> float:
    """I(W_[N]; X_d) in bits for a listener who sees only the shared link."""
    from .centralized import CentralizedScheme, CentralizedSystem

    if isinstance(scheme, CentralizedSystem):
        scheme = CentralizedScheme(scheme)
    d = check_demand(d, scheme.N, scheme.K)
    return run_audit(scheme, [d], decode=False, ceiling=ceiling).eavesdropper[d]


# -- decentralized ------------------------------------------------------


def _pick(n: int, count: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(n), count))


def all_patterns(params) -> list:
    """Every caching pattern of a (tiny) decentralized instance."""
    from .decentralized import CachingPattern

    if not params.keyed:
        return [CachingPattern({}, {})]
    N, K = params.N, params.K
    share_choices = _pick(params.G, params.shares_per_user)
    key_choices = _pick(params.key_pool_size, params.keys_per_user)
    cells = [(k, i) for k in range(1, K + 1) for i in range(1, N + 1)]
    out = []
    for shares in itertools.product(share_choices, repeat=len(cells)):
        for keys in itertools.product(key_choices, repeat=K):
            out.append(CachingPattern(dict(zip(cells, shares)), dict(zip(range(1, K + 1), keys))))
    return out


@dataclass
class DecentralizedAudit:
    reports: list = field(default_factory=list)  # (pattern, keyed per demand, AuditReport)

    @property
    def max_leakage(self) -> float:
        return max((r.max_leakage for _, _, r in self.reports), default=0.0)

    @property
    def P_e(self) -> Fraction:
        return max((r.P_e for _, _, r in self.reports), default=Fraction(0))

    @property
    def private(self) -> bool:
        return self.max_leakage == 0 and self.P_e == 0

    def paths(self) -> set:
        return {keyed for _, flags, _ in self.reports for keyed in flags.values()}

    def lines(self) -> list[str]:
        out = [
            f"patterns: {len(self.reports)}",
            f"max_leakage_bits: {self.max_leakage:.6g}",
            f"error_probability: {float(self.P_e):.6g}",
        ]
        for j, (pattern, flags, r) in enumerate(self.reports):
            paths = ",".join(f"{_fmt_d(d)}:{'keyed' if v else 'fallback'}" for d, v in sorted(flags.items()))
            out.append(f"pattern[{j}]: shares={sorted(pattern.share_sets.items())} keys={sorted(pattern.key_sets.items())}")
            out.append(f"pattern[{j}].paths: {paths}")
            out.append(f"pattern[{j}].max_leakage_bits: {r.max_leakage:.6g}")
            out.append(f"pattern[{j}].error_probability: {float(r.P_e):.6g}")
        return out


def audit_decentralized_tiny(params, patterns=None, *, drop_key=None, ceiling=DEFAULT_CEILING) -> DecentralizedAudit:
    """Exact audit conditioned on each fixed caching pattern.

    Only the payload randomness (private keys, ramp coefficients, pool keys)
    and the library are enumerated; ``patterns`` defaults to every pattern.
    """
    from .decentralized import DecentralizedScheme, ExclusivityIndex, check_Q

    if patterns is None:
        patterns = all_patterns(params)
    audit = DecentralizedAudit()
    for pattern in patterns:
        scheme = DecentralizedScheme(params, pattern)
        index = ExclusivityIndex(params, pattern)
        flags = {d: check_Q(index, d) for d in all_demands(params.N, params.K)}
        report = run_audit(scheme, drop_key=drop_key, ceiling=ceiling)
        audit.reports.append((pattern, flags, report))
    return audit
