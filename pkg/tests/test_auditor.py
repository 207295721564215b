from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from privcache.auditor import (
    WorldEnumeration,
    all_patterns,
    audit_centralized,
    audit_decentralized_tiny,
    audit_eavesdropper,
    mutual_information,
    mutual_information_counts,
    skewed_file_weight,
)
from privcache.centralized import EXTREME, CentralizedScheme, CentralizedSystem, Optimal2x2Scheme, T, all_demands
from privcache.decentralized import CachingPattern, DecParams
from privcache.errors import EnumerationTooLarge, NotADistribution


def test_mi_examples():
    assert mutual_information({(x, y): 1 for x in range(2) for y in range(3)}) == 0.0
    assert mutual_information({(x, x): 1 for x in range(4)}) == 2.0
    assert mutual_information({(0, 0): 0.5, (1, 1): 0.5}) == pytest.approx(1.0)
    assert mutual_information({(0, 0): Fraction(1, 2), (1, 1): Fraction(1, 2), (1, 0): 0}) == pytest.approx(1.0)


def test_mi_against_entropy_formula():
    joint = {(0, 0): 3, (0, 1): 1, (1, 0): 1, (1, 1): 3}
    # I = 1 - H(1/4) for a binary symmetric pair with crossover 1/4
    h = -(0.25 * math.log2(0.25) + 0.75 * math.log2(0.75))
    assert mutual_information(joint) == pytest.approx(1 - h, abs=1e-15)


def test_mi_rejects_non_distributions():
    with pytest.raises(NotADistribution):
        mutual_information({})
    with pytest.raises(NotADistribution):
        mutual_information({(0, 0): 0.5, (1, 1): 0.4})
    with pytest.raises(NotADistribution):
        mutual_information({(0, 0): -1, (1, 1): 2})


def test_counts_variant_agrees():
    rng = np.random.default_rng(3)
    xs, ys = rng.integers(0, 3, 500), rng.integers(0, 4, 500)
    ys[:250] = xs[:250]
    joint = Counter(zip(xs.tolist(), ys.tolist()))
    assert mutual_information_counts(xs, ys) == pytest.approx(mutual_information(dict(joint)), abs=1e-12)
    # a product grid is exactly independent
    xs, ys = np.repeat(np.arange(4), 3), np.tile(np.arange(3), 4)
    assert mutual_information_counts(xs, ys) == 0.0


def test_world_count_and_ceiling(gf2):
    sch = CentralizedScheme(CentralizedSystem(2, 3, 4, gf2, T(1)))
    assert WorldEnumeration(sch).count == (2**4) ** 2 * 4 ** sch.tape_budget()
    with pytest.raises(EnumerationTooLarge):
        WorldEnumeration(sch, ceiling=1000)
    with pytest.raises(EnumerationTooLarge):
        audit_centralized(sch, ceiling=1000)


@pytest.mark.parametrize("corner", [T(0), EXTREME])
def test_tiny_centralized_audits(corner, gf2):
    report = audit_centralized(CentralizedSystem(2, 2, 2, gf2, corner))
    assert len(report.leakage) == 4 * 2
    assert all(v == 0.0 for v in report.leakage.values())
    assert report.P_e == 0 and report.private


def test_2x2_audit(gf2):
    report = audit_centralized(Optimal2x2Scheme(4, gf2))
    assert report.max_leakage == 0.0 and report.P_e == 0
    assert set(report.transmission_bits.values()) == {4}


def test_non_uniform_library(gf2):
    for scheme in (Optimal2x2Scheme(4, gf2), CentralizedScheme(CentralizedSystem(2, 2, 2, gf2, T(0)))):
        report = audit_centralized(scheme, file_weight=skewed_file_weight)
        assert report.max_leakage == 0.0 and report.P_e == 0


def test_eavesdropper_contrast(gf2):
    t0 = CentralizedSystem(2, 2, 2, gf2, T(0))
    assert all(audit_eavesdropper(t0, d) == 0.0 for d in all_demands(2, 2))
    extreme = CentralizedSystem(2, 2, 2, gf2, EXTREME)
    # S_1^1 + S_1^2 cancels the share randomness when both users want file 1
    assert audit_eavesdropper(extreme, (1, 1)) == pytest.approx(2.0)
    # distinct demands mix two independent randomness terms, so nothing leaks
    assert audit_eavesdropper(extreme, (1, 2)) == 0.0
    assert audit_eavesdropper(Optimal2x2Scheme(4, gf2), (1, 1)) == pytest.approx(4.0)


@pytest.mark.parametrize("key", [(1,), (2,)])
def test_fault_injection_detected(key, gf2):
    for scheme in (CentralizedSystem(2, 2, 2, gf2, T(0)), Optimal2x2Scheme(4, gf2)):
        report = audit_centralized(scheme, drop_key=key)
        assert report.max_leakage > 0


def test_report_lines_are_deterministic(gf2):
    a = audit_centralized(CentralizedSystem(2, 2, 2, gf2, T(0))).lines()
    b = audit_centralized(CentralizedSystem(2, 2, 2, gf2, T(0))).lines()
    assert a == b
    assert a[0].startswith("scheme: centralized(N=2, K=2")
    assert "leakage[d=1,2,k=1]: 0" in a


def test_decentralized_fallback_audit(gf2):
    p = DecParams.from_memory(2, 2, 2, Fraction(3, 2), 2, spec=gf2)
    audit = audit_decentralized_tiny(p)
    assert audit.paths() == {False}
    assert audit.private


def test_decentralized_pattern_enumeration(gf2):
    p = DecParams.from_memory(2, 2, 2, Fraction(41, 10), 2, r=Fraction(1, 10), spec=gf2)
    assert (p.shares_per_user, p.key_pool_size, p.keys_per_user, p.h) == (1, 2, 1, 2)
    assert len(all_patterns(p)) == 2**4 * 2**2


def test_decentralized_mixed_pattern_audit(gf2):
    # Q holds only for d = (2, 2), so the keyed and fallback paths are both exercised
    p = DecParams.from_memory(2, 2, 2, Fraction(41, 10), 2, r=Fraction(1, 10), spec=gf2)
    pattern = CachingPattern({(1, 1): (0,), (1, 2): (1,), (2, 1): (1,), (2, 2): (1,)}, {1: (0,), 2: (1,)})
    audit = audit_decentralized_tiny(p, [pattern])
    (_, flags, report), = audit.reports
    assert flags == {(1, 1): False, (1, 2): False, (2, 1): False, (2, 2): True}
    assert report.worlds == 4**8
    assert report.max_leakage == 0.0 and report.P_e == 0
