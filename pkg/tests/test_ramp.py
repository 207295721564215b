from __future__ import annotations

import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privcache.errors import EnumerationTooLarge, InvalidParams, MissingShare, TapeExhausted
from privcache.gf import FieldSpec, FieldSymbolVector, RandomnessTape, gf_add, gf_inv, gf_mul
from privcache.ramp import (
    RampParams,
    is_tight,
    leakage_free_check,
    ramp_reconstruct,
    ramp_share,
    share_size_lower_bound_bits,
)


def share(secret, m, n, spec, tape):
    return ramp_share(FieldSymbolVector(spec, secret), RampParams(m, n, spec), RandomnessTape(spec, tape))


def test_params_invariants(gf2, gf4):
    assert RampParams(1, 3, gf2).eval_points == (1, 2, 3)
    with pytest.raises(InvalidParams):
        RampParams(1, 4, gf2)  # GF(4) has only 3 nonzero points
    with pytest.raises(InvalidParams):
        RampParams(2, 2, gf4)
    with pytest.raises(InvalidParams):
        RampParams(-1, 2, gf4)


def test_zero_secret_shares_equal_randomness(gf4):
    bundle = share([0, 0, 0], 1, 2, gf4, [7, 9, 4])
    for s in bundle.shares:
        assert s.symbols.tolist() == [7, 9, 4]


def test_single_share_marginal_uniform(gf2):
    for secret in range(4):
        for j in range(2):
            seen = Counter(int(share([secret], 1, 2, gf2, [r]).shares[j].symbols[0]) for r in range(4))
            assert seen == Counter({v: 1 for v in range(4)})


def test_block_len_for_k3_t1(gf8):
    # (m, n) = (C(2,0), C(3,1)) = (1, 3): shares are F/2 bits
    F = 64
    bundle = share(list(range(F // 8)), 1, 3, gf8, [1] * 4)
    assert bundle.share_bits == F // 2
    assert all(len(s) == F // 16 for s in bundle.shares)


def test_padding_and_tightness(gf4):
    bundle = share([1, 2, 3], 1, 3, gf4, [5, 6])
    assert bundle.block_len == 2
    assert share_size_lower_bound_bits(12, bundle.params) == 6
    assert is_tight(bundle)
    assert ramp_reconstruct(bundle).symbols.tolist() == [1, 2, 3]


def test_closed_form_two_share_solve(gf8):
    # share_j = r + s * alpha_j, so s = (share_1 + share_2) / (alpha_1 + alpha_2)
    for s, r in [(0x57, 0x13), (0xFF, 0), (1, 0xA0)]:
        b = share([s], 1, 2, gf8, [r])
        s1, s2 = (int(x.symbols[0]) for x in b.shares)
        assert gf_mul(gf_add(s1, s2), gf_inv(gf_add(1, 2), gf8), gf8) == s
        assert ramp_reconstruct(b).symbols.tolist() == [s]


def test_degenerate_split(gf4):
    b = share([3, 14], 0, 1, gf4, [])
    assert b.shares[0].symbols.tolist() == [3, 14]
    assert ramp_reconstruct(b).symbols.tolist() == [3, 14]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([4, 8, 16]), st.data())
def test_roundtrip(w, data):
    spec = FieldSpec.of_width(w)
    n = data.draw(st.integers(1, min(spec.order - 1, 7)))
    m = data.draw(st.integers(0, n - 1))
    secret = data.draw(st.lists(st.integers(0, spec.order - 1), min_size=0, max_size=9))
    params = RampParams(m, n, spec)
    tape = data.draw(
        st.lists(st.integers(0, spec.order - 1), min_size=params.tape_budget(len(secret)), max_size=params.tape_budget(len(secret)))
    )
    bundle = ramp_share(FieldSymbolVector(spec, secret), params, RandomnessTape(spec, tape))
    assert ramp_reconstruct(bundle) == FieldSymbolVector(spec, secret)


def test_short_tape_and_missing_share(gf4):
    with pytest.raises(TapeExhausted):
        share([1, 2], 2, 3, gf4, [1])
    b = share([1, 2], 1, 3, gf4, [1])
    b.shares[1] = None
    with pytest.raises(MissingShare):
        ramp_reconstruct(b)


def test_leakage_examples(gf2):
    params = RampParams(1, 3, gf2)
    assert leakage_free_check(params, [1], 1) == 0.0
    assert leakage_free_check(params, [0, 1], 1) > 0
    assert leakage_free_check(RampParams(0, 2, gf2), [], 1) == 0.0


def test_full_set_reveals_secret(gf2):
    # all n shares carry the whole secret: I = H(W) = 2 bits for one GF(4) symbol
    assert leakage_free_check(RampParams(1, 2, gf2), [0, 1], 1) == pytest.approx(2.0)


def test_leakage_check_guards(gf2, gf8):
    with pytest.raises(InvalidParams):
        leakage_free_check(RampParams(1, 2, gf8), [0], 1)
    with pytest.raises(InvalidParams):
        leakage_free_check(RampParams(1, 2, gf2), [2], 1)
    with pytest.raises(EnumerationTooLarge):
        leakage_free_check(RampParams(2, 3, gf2), [0, 1], 2, ceiling=100)


def test_determinism(gf8):
    a = share([1, 2, 3, 4], 2, 5, gf8, list(range(4)))
    b = share([1, 2, 3, 4], 2, 5, gf8, list(range(4)))
    assert all(x == y for x, y in zip(a.shares, b.shares))


def test_any_n_minus_m_plus_m_shares_are_required(gf4):
    # dropping to m shares leaves every secret equally likely: exhaustive over the tape
    params = RampParams(2, 3, gf4)
    views = {}
    for secret in range(16):
        views[secret] = Counter(
            share([secret], 2, 3, gf4, list(t)).shares[0].symbols.tobytes()
            + share([secret], 2, 3, gf4, list(t)).shares[2].symbols.tobytes()
            for t in itertools.product(range(16), repeat=params.tape_budget(1))
        )
    assert all(v == views[0] for v in views.values())
