"""GF(2^w) arithmetic, symbol vectors and randomness tapes.

Every payload in the package (files, shares, keys, transmissions) is a
:class:`FieldSymbolVector`.  Randomized procedures never touch a system RNG;
they consume symbols from a :class:`RandomnessTape` handed in by the caller,
which is what lets the auditor enumerate every possible tape exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParams, TapeExhausted, ZeroInverse

PRIMITIVE_POLYS = {2: 0x7, 4: 0x13, 8: 0x11B, 16: 0x1100B}

SYMBOL_DTYPE = np.int64


@dataclass(frozen=True)
class FieldSpec:
    w: int
    primitive_poly: int

    def __post_init__(self):
        if self.w not in PRIMITIVE_POLYS:
            raise InvalidParams(f"unsupported field width w={self.w}")
        if self.primitive_poly != PRIMITIVE_POLYS[self.w]:
            raise InvalidParams(
                f"w={self.w} requires polynomial {PRIMITIVE_POLYS[self.w]:#x}, "
                f"got {self.primitive_poly:#x}"
            )

    @classmethod
    def of_width(cls, w: int) -> "FieldSpec":
        if w not in PRIMITIVE_POLYS:
            raise InvalidParams(f"unsupported field width w={w}")
        return cls(w, PRIMITIVE_POLYS[w])

    @property
    def order(self) -> int:
        return 1 << self.w

    def __str__(self):
        return f"GF(2^{self.w})"


def clmul_reduce(a: int, b: int, spec: FieldSpec) -> int:
    """Shift-and-add product of ``a`` and ``b`` reduced modulo the field polynomial."""
    top = 1 << spec.w
    res = 0
    while b:
        if b & 1:
            res ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= spec.primitive_poly
    return res


class _Tables:
    __slots__ = ("exp", "log", "generator", "group")

    def __init__(self, spec: FieldSpec):
        group = spec.order - 1
        gen = None
        for g in range(2, spec.order):
            x, order = g, 1
            while x != 1:
                x = clmul_reduce(x, g, spec)
                order += 1
            if order == group:
                gen = g
                break
        if gen is None:
            raise InvalidParams(f"{spec.primitive_poly:#x} does not define a field")
        exp = np.zeros(2 * group, dtype=SYMBOL_DTYPE)
        log = np.zeros(spec.order, dtype=SYMBOL_DTYPE)
        x = 1
        for i in range(group):
            exp[i] = x
            log[x] = i
            x = clmul_reduce(x, gen, spec)
        exp[group:] = exp[:group]
        self.exp = exp
        self.log = log
        self.generator = gen
        self.group = group


@lru_cache(maxsize=None)
def tables(spec: FieldSpec) -> _Tables:
    return _Tables(spec)


def _check_symbol(x: int, spec: FieldSpec) -> None:
    if not 0 <= x < spec.order:
        raise InvalidParams(f"{x} is not a symbol of {spec}")


def gf_add(a: int, b: int, spec: FieldSpec | None = None) -> int:
    if spec is not None:
        _check_symbol(a, spec)
        _check_symbol(b, spec)
    return a ^ b


def gf_mul(a: int, b: int, spec: FieldSpec) -> int:
    _check_symbol(a, spec)
    _check_symbol(b, spec)
    if a == 0 or b == 0:
        return 0
    t = tables(spec)
    return int(t.exp[int(t.log[a]) + int(t.log[b])])


def gf_inv(a: int, spec: FieldSpec) -> int:
    _check_symbol(a, spec)
    if a == 0:
        raise ZeroInverse(f"0 has no inverse in {spec}")
    t = tables(spec)
    return int(t.exp[(t.group - int(t.log[a])) % t.group])


def gf_pow(a: int, e: int, spec: FieldSpec) -> int:
    if e == 0:
        return 1
    if a == 0:
        return 0
    t = tables(spec)
    return int(t.exp[(int(t.log[a]) * e) % t.group])


def gf_scale(values: np.ndarray, c: int, spec: FieldSpec) -> np.ndarray:
    """Multiply every entry of ``values`` by the scalar ``c``."""
    values = np.asarray(values, dtype=SYMBOL_DTYPE)
    if c == 0:
        return np.zeros_like(values)
    if c == 1:
        return values.copy()
    t = tables(spec)
    out = t.exp[t.log[values] + int(t.log[c])]
    return np.where(values == 0, 0, out)


def gf_matmul(a: np.ndarray, b: np.ndarray, spec: FieldSpec) -> np.ndarray:
    """Matrix product over the field: (r, n) @ (n, L) -> (r, L)."""
    a = np.asarray(a, dtype=SYMBOL_DTYPE)
    b = np.asarray(b, dtype=SYMBOL_DTYPE)
    t = tables(spec)
    la = t.log[a][:, :, None]
    lb = t.log[b][None, :, :]
    prod = t.exp[la + lb]
    prod = np.where((a[:, :, None] == 0) | (b[None, :, :] == 0), 0, prod)
    if prod.shape[1] == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=SYMBOL_DTYPE)
    return np.bitwise_xor.reduce(prod, axis=1)


def gf_matinv(matrix: Sequence[Sequence[int]], spec: FieldSpec) -> np.ndarray:
    """Gauss-Jordan inverse of a square matrix; raises ZeroInverse if singular."""
    a = [list(map(int, row)) for row in matrix]
    n = len(a)
    inv = [[int(i == j) for j in range(n)] for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col]), None)
        if pivot is None:
            raise ZeroInverse("singular matrix")
        a[col], a[pivot] = a[pivot], a[col]
        inv[col], inv[pivot] = inv[pivot], inv[col]
        p = gf_inv(a[col][col], spec)
        a[col] = [gf_mul(x, p, spec) for x in a[col]]
        inv[col] = [gf_mul(x, p, spec) for x in inv[col]]
        for r in range(n):
            f = a[r][col]
            if r != col and f:
                a[r] = [x ^ gf_mul(f, y, spec) for x, y in zip(a[r], a[col])]
                inv[r] = [x ^ gf_mul(f, y, spec) for x, y in zip(inv[r], inv[col])]
    return np.array(inv, dtype=SYMBOL_DTYPE).reshape(n, n)


class FieldSymbolVector:
    """A payload as a sequence of field symbols plus its unpadded bit length."""

    __slots__ = ("spec", "symbols", "bit_length")

    def __init__(self, spec: FieldSpec, symbols: Iterable[int] | np.ndarray, bit_length: int | None = None):
        arr = np.array(symbols, dtype=SYMBOL_DTYPE).reshape(-1)
        if arr.size and (arr.min() < 0 or arr.max() >= spec.order):
            raise InvalidParams(f"symbol out of range for {spec}")
        if bit_length is None:
            bit_length = spec.w * arr.size
        if not 0 <= bit_length <= spec.w * arr.size:
            raise InvalidParams("bit_length exceeds the symbol capacity")
        self.spec = spec
        self.symbols = arr
        self.bit_length = bit_length

    @classmethod
    def _trusted(cls, spec: FieldSpec, arr: np.ndarray, bit_length: int | None = None) -> "FieldSymbolVector":
        # skips validation: only for symbols already known to lie in the field
        out = cls.__new__(cls)
        out.spec = spec
        out.symbols = arr
        out.bit_length = spec.w * arr.size if bit_length is None else bit_length
        return out

    @classmethod
    def zeros(cls, spec: FieldSpec, n_symbols: int) -> "FieldSymbolVector":
        return cls(spec, np.zeros(n_symbols, dtype=SYMBOL_DTYPE))

    def __len__(self):
        return int(self.symbols.size)

    def __eq__(self, other):
        if not isinstance(other, FieldSymbolVector):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.bit_length == other.bit_length
            and np.array_equal(self.symbols, other.symbols)
        )

    def __hash__(self):
        return hash((self.spec, self.bit_length, self.symbols.tobytes()))

    def __repr__(self):
        body = ",".join(str(int(x)) for x in self.symbols[:8])
        more = ",..." if len(self) > 8 else ""
        return f"FieldSymbolVector({self.spec}, [{body}{more}], bits={self.bit_length})"

    def __xor__(self, other: "FieldSymbolVector") -> "FieldSymbolVector":
        return xor(self, other)

    def slice(self, start: int, stop: int) -> "FieldSymbolVector":
        return FieldSymbolVector._trusted(self.spec, self.symbols[start:stop])

    def pad_to(self, n_symbols: int) -> "FieldSymbolVector":
        if n_symbols < len(self):
            raise InvalidParams("cannot pad to a shorter length")
        out = np.zeros(n_symbols, dtype=SYMBOL_DTYPE)
        out[: len(self)] = self.symbols
        return FieldSymbolVector._trusted(self.spec, out)

    def to_int(self) -> int:
        """Canonical integer packing: symbol 0 in the most significant position."""
        acc = 0
        w = self.spec.w
        for x in self.symbols.tolist():
            acc = (acc << w) | x
        return acc


def xor(*vectors: FieldSymbolVector, pad: bool = False) -> FieldSymbolVector:
    """Symbolwise sum.  With ``pad`` shorter operands are zero-extended on the right."""
    if not vectors:
        raise InvalidParams("xor needs at least one operand")
    spec = vectors[0].spec
    length = max(len(v) for v in vectors)
    acc = np.zeros(length, dtype=SYMBOL_DTYPE)
    for v in vectors:
        if v.spec != spec:
            raise InvalidParams("operands live in different fields")
        if len(v) != length and not pad:
            raise InvalidParams("operand lengths differ")
        acc[: len(v)] ^= v.symbols
    return FieldSymbolVector._trusted(spec, acc)


def concat(spec: FieldSpec, vectors: Sequence[FieldSymbolVector]) -> FieldSymbolVector:
    if not vectors:
        return FieldSymbolVector(spec, [])
    return FieldSymbolVector._trusted(spec, np.concatenate([v.symbols for v in vectors]))


class RandomnessTape:
    """A finite stream of field symbols consumed front to back."""

    def __init__(self, spec: FieldSpec, stream: Iterable[int] | np.ndarray):
        arr = np.array(stream, dtype=SYMBOL_DTYPE).reshape(-1)
        if arr.size and (arr.min() < 0 or arr.max() >= spec.order):
            raise InvalidParams(f"tape symbol out of range for {spec}")
        self.spec = spec
        self.stream = arr
        self.cursor = 0

    def __len__(self):
        return int(self.stream.size)

    @property
    def remaining(self) -> int:
        return int(self.stream.size) - self.cursor

    def draw(self, count: int) -> FieldSymbolVector:
        return tape_draw(self, count)

    def draw_array(self, count: int) -> np.ndarray:
        if count < 0:
            raise InvalidParams("negative draw")
        if self.cursor + count > self.stream.size:
            raise TapeExhausted(
                f"need {count} symbols, {self.remaining} left on a tape of {self.stream.size}"
            )
        out = self.stream[self.cursor : self.cursor + count]
        self.cursor += count
        return out


def tape_draw(tape: RandomnessTape, count: int) -> FieldSymbolVector:
    return FieldSymbolVector._trusted(tape.spec, tape.draw_array(count))


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Outputs ``start .. start+count-1`` of the splitmix64 sequence for ``seed``."""
    steps = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + steps * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        z = z ^ (z >> np.uint64(31))
    return z


def tape_from_seed(seed: int, spec: FieldSpec, length: int, start: int = 0) -> RandomnessTape:
    """Convenience tape: low ``w`` bits of one splitmix64 step per symbol."""
    z = splitmix64(seed, length, start)
    return RandomnessTape(spec, (z & np.uint64(spec.order - 1)).astype(SYMBOL_DTYPE))
