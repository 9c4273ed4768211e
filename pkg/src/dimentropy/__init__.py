"""Bowen, packing and upper-capacity entropies of subsets of dynamical systems.

Finite systems (a metric on finitely many points and a self-map) are solved
exactly at every fixed scale; shifts of finite type are solved exactly on
cylinder sets by dynamic programming on the word tree.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .capacity import capacity_entropy_estimate, max_separated_exact, min_spanning_exact
from .caratheodory import (
    Decomposition,
    bowen_entropy_estimate,
    bowen_outer_measure,
    build_increasing_sequence,
    critical_exponent,
    packing_entropy_estimate,
    packing_premeasure,
)
from .core import FiniteSystem, SubsetRef, bowen_ball, bowen_distance, example_extension, product_system
from .estimates import EntropyEstimate, ScaleSchedule
from .symbolic import CylinderSet, SftSpec, count_words, sft_entropy_exact

__all__ = [
    "CylinderSet",
    "Decomposition",
    "EntropyEstimate",
    "FiniteSystem",
    "ScaleSchedule",
    "SftSpec",
    "SubsetRef",
    "bowen_ball",
    "bowen_distance",
    "bowen_entropy_estimate",
    "bowen_outer_measure",
    "build_increasing_sequence",
    "capacity_entropy_estimate",
    "count_words",
    "critical_exponent",
    "example_extension",
    "max_separated_exact",
    "min_spanning_exact",
    "packing_entropy_estimate",
    "packing_premeasure",
    "product_system",
    "sft_entropy_exact",
]
