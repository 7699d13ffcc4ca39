"""Loop homology of spheres: ring structure, BV operator and critical levels."""

from .algebra import INTEGERS, CoefficientSpec, LoopRing, RingElement, RingMismatchError
from .tables import (
    CheckResult,
    CriticalEntry,
    CriticalTable,
    InsufficientDepthError,
    IntervalCheck,
    MeanLevel,
    MuLimits,
    ResonanceReport,
    cohomology_level,
    consecutive_coefficient_check,
    delta_level_check,
    exactness_check,
    duality_check,
    interval_check,
    mean_level,
    morse_bott_classes,
    mu_limits,
    product_level_check,
    rank_check,
    resonance_report,
    round_critical_table,
)

__all__ = [
    "INTEGERS",
    "CheckResult",
    "CoefficientSpec",
    "CriticalEntry",
    "CriticalTable",
    "InsufficientDepthError",
    "IntervalCheck",
    "LoopRing",
    "MeanLevel",
    "MuLimits",
    "ResonanceReport",
    "RingElement",
    "RingMismatchError",
    "cohomology_level",
    "consecutive_coefficient_check",
    "delta_level_check",
    "exactness_check",
    "duality_check",
    "interval_check",
    "mean_level",
    "morse_bott_classes",
    "mu_limits",
    "product_level_check",
    "rank_check",
    "resonance_report",
    "round_critical_table",
]
