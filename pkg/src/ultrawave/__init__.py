"""Exact wavelet orthonormal bases on local fields and related groups."""

from .groups import (
    Automorphism,
    CarryRule,
    GroupElement,
    LaurentField,
    PiExtension,
    PrimeField,
    Product,
    UnitRoot,
    coset_reps,
    expansive_report,
    pairing,
    parse_element,
    format_element,
    q2sqrt2,
)

__version__ = "0.1.0"

__all__ = [
    "Automorphism",
    "CarryRule",
    "GroupElement",
    "LaurentField",
    "PiExtension",
    "PrimeField",
    "Product",
    "UnitRoot",
    "coset_reps",
    "expansive_report",
    "pairing",
    "parse_element",
    "format_element",
    "q2sqrt2",
]
