"""Private coded caching over GF(2^w): ramp sharing, centralized and
decentralized schemes, rate analytics and exhaustive leakage audits."""

from __future__ import annotations

from .auditor import AuditReport, audit_centralized, audit_decentralized_tiny, audit_eavesdropper, mutual_information
from .centralized import (
    EXTREME,
    CentralizedScheme,
    CentralizedSystem,
    Corner,
    MemorySharedScheme,
    Optimal2x2Scheme,
    T,
    decode,
    deliver,
    place,
    scheme_2x2_optimal,
)
from .decentralized import DecentralizedScheme, DecParams, check_Q, dec_decode, dec_deliver, dec_place, estimate_Q_probability
from .errors import PrivCacheError
from .gf import FieldSpec, FieldSymbolVector, RandomnessTape, tape_from_seed
from .ramp import RampParams, ramp_reconstruct, ramp_share
from .rates import dec_cent_gap, lower_bound, m_zero, optimality_ratio, rate_centralized, rate_decentralized

__version__ = "0.1.0"
