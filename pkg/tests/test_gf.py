from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import schoolbook_mul, splitmix64_ref
from privcache.errors import InvalidParams, TapeExhausted, ZeroInverse
from privcache.gf import (
    PRIMITIVE_POLYS,
    FieldSpec,
    FieldSymbolVector,
    RandomnessTape,
    concat,
    gf_add,
    gf_inv,
    gf_matinv,
    gf_matmul,
    gf_mul,
    splitmix64,
    tape_draw,
    tape_from_seed,
    xor,
)

# inverses of 1..15 in GF(16) mod x^4 + x + 1, found by exhaustive search
GF16_INVERSES = [1, 9, 14, 13, 11, 7, 6, 15, 2, 12, 5, 10, 4, 3, 8]


def test_fixed_polynomials():
    assert PRIMITIVE_POLYS == {2: 0x7, 4: 0x13, 8: 0x11B, 16: 0x1100B}
    for w, poly in PRIMITIVE_POLYS.items():
        assert FieldSpec(w, poly).order == 1 << w


@pytest.mark.parametrize("w, poly", [(3, 0xB), (8, 0x11D), (2, 0x13)])
def test_other_fields_rejected(w, poly):
    with pytest.raises(InvalidParams):
        FieldSpec(w, poly)


def test_add_examples(gf8):
    assert gf_add(0, 0x3C, gf8) == 0x3C
    assert gf_add(0x3C, 0x3C, gf8) == 0
    assert gf_add(0x57, 0x83, gf8) == 0xD4


def test_mul_examples(gf8):
    assert gf_mul(1, 0x9A, gf8) == 0x9A
    assert gf_mul(0, 0x9A, gf8) == 0
    assert gf_mul(0x57, 0x83, gf8) == 0xC1


@pytest.mark.parametrize("w", [2, 4])
def test_mul_matches_schoolbook_exhaustively(w):
    spec = FieldSpec.of_width(w)
    for a, b in itertools.product(range(spec.order), repeat=2):
        assert gf_mul(a, b, spec) == schoolbook_mul(a, b, spec.primitive_poly, w)


@given(st.sampled_from([8, 16]), st.data())
def test_mul_matches_schoolbook_wide(w, data):
    spec = FieldSpec.of_width(w)
    a = data.draw(st.integers(0, spec.order - 1))
    b = data.draw(st.integers(0, spec.order - 1))
    assert gf_mul(a, b, spec) == schoolbook_mul(a, b, spec.primitive_poly, w)


def test_inverse_table_gf16(gf4):
    assert [gf_inv(a, gf4) for a in range(1, 16)] == GF16_INVERSES
    assert gf_inv(1, gf4) == 1


@pytest.mark.parametrize("w", [2, 4, 8, 16])
def test_inverse_defining_property(w):
    spec = FieldSpec.of_width(w)
    step = max(1, spec.order // 997)
    for a in range(1, spec.order, step):
        assert gf_mul(a, gf_inv(a, spec), spec) == 1


def test_zero_has_no_inverse(gf4):
    with pytest.raises(ZeroInverse):
        gf_inv(0, gf4)


@pytest.mark.parametrize("w", [2, 4])
def test_field_axioms_exhaustive(w):
    spec = FieldSpec.of_width(w)
    elems = range(spec.order)
    for a, b, c in itertools.product(elems, repeat=3):
        assert gf_mul(gf_mul(a, b, spec), c, spec) == gf_mul(a, gf_mul(b, c, spec), spec)
        assert gf_add(gf_add(a, b), c) == gf_add(a, gf_add(b, c))
        assert gf_mul(a, gf_add(b, c), spec) == gf_add(gf_mul(a, b, spec), gf_mul(a, c, spec))
    for a, b in itertools.product(elems, repeat=2):
        assert gf_mul(a, b, spec) == gf_mul(b, a, spec)
        assert gf_add(a, b) == gf_add(b, a)


@given(st.integers(0, 0xFFFF), st.integers(0, 0xFFFF))
def test_add_is_involution(x, k):
    assert gf_add(gf_add(x, k), k) == x


@given(st.lists(st.integers(0, 15), min_size=1, max_size=12), st.data())
def test_vector_xor_involution(symbols, data):
    spec = FieldSpec.of_width(4)
    key = data.draw(st.lists(st.integers(0, 15), min_size=len(symbols), max_size=len(symbols)))
    v, k = FieldSymbolVector(spec, symbols), FieldSymbolVector(spec, key)
    assert (v ^ k) ^ k == v


def test_vector_invariants(gf4):
    with pytest.raises(InvalidParams):
        FieldSymbolVector(gf4, [16])
    with pytest.raises(InvalidParams):
        FieldSymbolVector(gf4, [1, 2], bit_length=9)
    v = FieldSymbolVector(gf4, [0xA, 0xB, 0xC], bit_length=10)
    assert len(v) == 3 and v.bit_length == 10
    assert v.to_int() == 0xABC
    assert concat(gf4, [v.slice(0, 1), v.slice(1, 3)]).symbols.tolist() == [0xA, 0xB, 0xC]


def test_xor_length_mismatch(gf4):
    a, b = FieldSymbolVector(gf4, [1, 2]), FieldSymbolVector(gf4, [3])
    with pytest.raises(InvalidParams):
        xor(a, b)
    assert xor(a, b, pad=True).symbols.tolist() == [2, 2]


def test_tape_draw_examples(gf4):
    tape = RandomnessTape(gf4, [3, 1, 2])
    assert len(tape_draw(tape, 0)) == 0 and tape.cursor == 0
    assert tape_draw(tape, 2).symbols.tolist() == [3, 1] and tape.cursor == 2
    with pytest.raises(TapeExhausted):
        tape_draw(tape, 2)


def test_tape_stream_semantics(gf4):
    a, b = RandomnessTape(gf4, [3, 1, 2]), RandomnessTape(gf4, [3, 1, 2])
    split = concat(gf4, [tape_draw(a, 1), tape_draw(a, 2)])
    assert split == tape_draw(b, 3)


def test_splitmix_matches_reference():
    assert splitmix64(0, 3).tolist() == splitmix64_ref(0, 3)
    assert splitmix64(12345, 5).tolist() == splitmix64_ref(12345, 5)
    assert splitmix64(7, 2, start=3).tolist() == splitmix64_ref(7, 5)[3:]
    assert int(splitmix64(0, 1)[0]) == 0xE220A8397B1DCDAF


def test_seed_tape_takes_low_bits():
    spec = FieldSpec.of_width(16)
    tape = tape_from_seed(0, spec, 3)
    assert tape.stream.tolist() == [x & 0xFFFF for x in splitmix64_ref(0, 3)]
    assert tape.stream[0] == 52655


def test_matinv_roundtrip(gf8):
    rng = np.random.default_rng(5)
    for _ in range(20):
        a = rng.integers(0, 256, size=(4, 4))
        try:
            inv = gf_matinv(a, gf8)
        except ZeroInverse:
            continue
        assert np.array_equal(gf_matmul(a, inv, gf8), np.eye(4, dtype=np.int64))
    with pytest.raises(ZeroInverse):
        gf_matinv([[1, 2], [1, 2]], gf8)
