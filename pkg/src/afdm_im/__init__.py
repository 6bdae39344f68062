"""Link-level simulation of CDD-AFDM with index modulation."""

from .core_types import (
    AfdmParams,
    BitBudget,
    ChannelConfig,
    DetectorOptions,
    DopplerMode,
    ImConfig,
    Scheme,
    derive_bit_budget,
    gray_constellation,
)
from .transform import DafVector, TimeVector, add_cpp, daft, idaft, remove_cpp

__all__ = [
    "AfdmParams",
    "BitBudget",
    "ChannelConfig",
    "DafVector",
    "DetectorOptions",
    "DopplerMode",
    "ImConfig",
    "Scheme",
    "TimeVector",
    "add_cpp",
    "daft",
    "derive_bit_budget",
    "gray_constellation",
    "idaft",
    "remove_cpp",
]
