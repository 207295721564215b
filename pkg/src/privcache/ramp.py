"""(m, n) ramp secret sharing over GF(2^w).

Any ``m`` shares are independent of the secret, all ``n`` shares recover it,
and every share is ``ceil(len(secret) / (n - m))`` symbols long.

Per symbol position the share values are evaluations of a polynomial whose
``m`` low coefficients come from the tape and whose ``n - m`` high
coefficients are the secret blocks::

    share_j[p] = sum_i c_i[p] * alpha_j ** i,   alpha_j = j + 1

Privacy of any m shares reduces to invertibility of an m x m Vandermonde
matrix on distinct nonzero points.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import EnumerationTooLarge, InvalidParams, MissingShare
from .gf import (
    SYMBOL_DTYPE,
    FieldSpec,
    FieldSymbolVector,
    RandomnessTape,
    gf_matinv,
    gf_matmul,
    gf_pow,
)

DEFAULT_ENUMERATION_CEILING = 1 << 26


@dataclass(frozen=True)
class RampParams:
    m: int
    n: int
    spec: FieldSpec

    def __post_init__(self):
        if not 0 <= self.m < self.n:
            raise InvalidParams(f"need 0 <= m < n, got m={self.m}, n={self.n}")
        if self.n > self.spec.order - 1:
            raise InvalidParams(f"{self.spec} has only {self.spec.order - 1} nonzero evaluation points, n={self.n}")

    @property
    def eval_points(self) -> tuple[int, ...]:
        return tuple(range(1, self.n + 1))

    def block_len(self, secret_symbols: int) -> int:
        return -(-secret_symbols // (self.n - self.m))

    def tape_budget(self, secret_symbols: int) -> int:
        return self.m * self.block_len(secret_symbols)


@dataclass
class ShareBundle:
    params: RampParams
    shares: list  # list[FieldSymbolVector | None], None marks a missing share
    block_len: int
    secret_bit_length: int

    @property
    def share_bits(self) -> int:
        return self.block_len * self.params.spec.w


@lru_cache(maxsize=None)
def vandermonde(params: RampParams) -> np.ndarray:
    spec = params.spec
    return np.array(
        [[gf_pow(a, i, spec) for i in range(params.n)] for a in params.eval_points],
        dtype=SYMBOL_DTYPE,
    )


@lru_cache(maxsize=None)
def _vandermonde_inverse(params: RampParams) -> np.ndarray:
    return gf_matinv(vandermonde(params), params.spec)


def _coefficients(secret: FieldSymbolVector, params: RampParams, randomness: np.ndarray) -> np.ndarray:
    k = params.n - params.m
    block_len = params.block_len(len(secret))
    padded = np.zeros(k * block_len, dtype=SYMBOL_DTYPE)
    padded[: len(secret)] = secret.symbols
    # tape is position-major: m symbols for position 0, then position 1, ...
    rand = randomness.reshape(block_len, params.m).T
    return np.vstack([rand, padded.reshape(k, block_len)])


def ramp_share(secret: FieldSymbolVector, params: RampParams, tape: RandomnessTape) -> ShareBundle:
    if secret.spec != params.spec:
        raise InvalidParams("secret and ramp parameters use different fields")
    block_len = params.block_len(len(secret))
    randomness = tape.draw_array(params.m * block_len)
    coeffs = _coefficients(secret, params, randomness)
    values = gf_matmul(vandermonde(params), coeffs, params.spec)
    shares = [FieldSymbolVector._trusted(params.spec, row) for row in values]
    return ShareBundle(params, shares, block_len, secret.bit_length)


def ramp_reconstruct(bundle: ShareBundle) -> FieldSymbolVector:
    params = bundle.params
    if len(bundle.shares) != params.n or any(s is None for s in bundle.shares):
        raise MissingShare(f"all {params.n} shares are required")
    values = np.vstack([s.symbols for s in bundle.shares]).reshape(params.n, bundle.block_len)
    coeffs = gf_matmul(_vandermonde_inverse(params), values, params.spec)
    symbols = coeffs[params.m :].reshape(-1)
    n_symbols = -(-bundle.secret_bit_length // params.spec.w)
    return FieldSymbolVector._trusted(params.spec, symbols[:n_symbols], bundle.secret_bit_length)


def _all_vectors(spec: FieldSpec, length: int) -> Iterable[tuple[int, ...]]:
    return itertools.product(range(spec.order), repeat=length)


def subset_share_table(
    params: RampParams,
    secret_symbols: int,
    ceiling: int = DEFAULT_ENUMERATION_CEILING,
) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """Every (secret, tape) world and the n shares it produces.

    Returns the list of secrets and an array of shape
    ``(n_secrets, n_tapes, n, block_len)``.
    """
    spec = params.spec
    budget = params.tape_budget(secret_symbols)
    worlds = spec.order ** (secret_symbols + budget)
    if worlds > ceiling:
        raise EnumerationTooLarge(f"{worlds} worlds exceed the ceiling {ceiling}")
    secrets = list(_all_vectors(spec, secret_symbols))
    tapes = np.array(list(_all_vectors(spec, budget)), dtype=SYMBOL_DTYPE).reshape(spec.order**budget, budget)
    block_len = params.block_len(secret_symbols)
    out = np.zeros((len(secrets), len(tapes), params.n, block_len), dtype=SYMBOL_DTYPE)
    for si, s in enumerate(secrets):
        secret = FieldSymbolVector(spec, s)
        for ti, stream in enumerate(tapes):
            bundle = ramp_share(secret, params, RandomnessTape(spec, stream))
            out[si, ti] = np.vstack([sh.symbols for sh in bundle.shares])
    return secrets, out


def leakage_free_check(
    params: RampParams,
    subset: Sequence[int],
    secret_symbols: int,
    ceiling: int = DEFAULT_ENUMERATION_CEILING,
) -> float:
    """Exact I(W; S_A) in bits for a uniform secret and a uniform tape.

    ``subset`` holds 0-based share indices.
    """
    from .auditor import mutual_information

    if params.spec.w not in (2, 4):
        raise InvalidParams("exhaustive leakage checks run at w in {2, 4}")
    if secret_symbols > 2:
        raise InvalidParams("exhaustive leakage checks take secrets of at most 2 symbols")
    subset = sorted(set(subset))
    if any(not 0 <= j < params.n for j in subset):
        raise InvalidParams("share index out of range")
    secrets, table = subset_share_table(params, secret_symbols, ceiling)
    joint = Counter()
    for si in range(len(secrets)):
        for ti in range(table.shape[1]):
            joint[si, table[si, ti, subset].tobytes()] += 1
    return mutual_information(joint)


def share_size_lower_bound_bits(secret_bits: int, params: RampParams) -> float:
    """Smallest share size compatible with m-privacy and full recovery."""
    return secret_bits / (params.n - params.m)


def is_tight(bundle: ShareBundle) -> bool:
    bound = share_size_lower_bound_bits(bundle.secret_bit_length, bundle.params)
    return bundle.share_bits < bound + bundle.params.spec.w and bundle.share_bits >= math.ceil(bound)
