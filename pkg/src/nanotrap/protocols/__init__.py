from .cooling import (
    CoolingResult,
    cooling_closed_form,
    cooling_simulate,
    cooling_sweep,
    minimum_formula,
    optimize_cooling,
)
from .entangle import EntangleResult, ProtocolNoise, run_entangle_protocol, swap_pulse
from .secular import SecularResult, classical_secular_check, drive_scale_for_q

__all__ = [
    "CoolingResult",
    "cooling_closed_form",
    "cooling_simulate",
    "cooling_sweep",
    "minimum_formula",
    "optimize_cooling",
    "EntangleResult",
    "ProtocolNoise",
    "run_entangle_protocol",
    "swap_pulse",
    "SecularResult",
    "classical_secular_check",
    "drive_scale_for_q",
]
