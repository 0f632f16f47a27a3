"""Frequency entanglement of cascaded biphotons under cavity and phase modulation."""

__version__ = "0.1.0"

from .errors import (CascadeError, ConfigError, ContractError, DegenerateFieldError, DSLError,
                     NumericalError)
from .grid import (FrequencyGrid, PhysicalParams, SpectralField, base_spectral, make_grid,
                   superradiant_rate)
from .modulation import (SchemePreset, apply_factor, build_preset, cavity_transfer, combine,
                         swap_arguments)
from .netlang import evaluate, parse, preset_expr, to_text
from .schmidt import (SchmidtResult, decompose, decompose_kernel, decompose_svd, entropy,
                      normalize, purity)

__all__ = [
    "CascadeError", "ConfigError", "ContractError", "DegenerateFieldError", "DSLError",
    "NumericalError", "FrequencyGrid", "PhysicalParams", "SpectralField", "base_spectral",
    "make_grid", "superradiant_rate", "SchemePreset", "apply_factor", "build_preset",
    "cavity_transfer", "combine", "swap_arguments", "evaluate", "parse", "preset_expr",
    "to_text", "SchmidtResult", "decompose", "decompose_kernel", "decompose_svd", "entropy",
    "normalize", "purity",
]
