"""
Verification algorithms and group tokens
"""

from src.tokens.group import (
    EncAuthVeriToken,
    EncGroupAuthenticator,
    GroupVerification,
    HmChainToken,
    build_group_authenticator,
    homomorphic_group_verify,
    verify_against_nonces,
)
from src.tokens.verification import en_veri, hm_fold, hm_gen, hm_veri, id_veri, ts_veri

__all__ = [
    "EncAuthVeriToken",
    "EncGroupAuthenticator",
    "GroupVerification",
    "HmChainToken",
    "build_group_authenticator",
    "en_veri",
    "hm_fold",
    "hm_gen",
    "hm_veri",
    "homomorphic_group_verify",
    "id_veri",
    "ts_veri",
    "verify_against_nonces",
]
