"""Finite tube and prism arrangement laboratory."""

from tubelab._core import (
    CheckError,
    Family,
    IoError,
    StatisticalError,
    ValidationError,
    acceptance,
    doubling_ratio,
    generate,
    is_broad,
    katz_tao,
    load,
    run_experiments,
    slab_wolff,
    union_volume,
)

__all__ = [
    "CheckError",
    "Family",
    "IoError",
    "StatisticalError",
    "ValidationError",
    "acceptance",
    "doubling_ratio",
    "generate",
    "is_broad",
    "katz_tao",
    "load",
    "run_experiments",
    "slab_wolff",
    "union_volume",
]
