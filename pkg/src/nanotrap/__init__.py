"""Ions trapped between nanomechanical electrodes: effective model, noise and dynamics."""

from .beam import BeamMode, beam_mode, clamped_mode_roots, mode_frequency, mode_shape_eval
from .coupling import EffectiveModel, build_effective_model
from .params import CONSTANTS, DeviceParams, IonParams, RunOptions, load_config, validate

__version__ = "0.1.0"

__all__ = [
    "BeamMode",
    "beam_mode",
    "clamped_mode_roots",
    "mode_frequency",
    "mode_shape_eval",
    "EffectiveModel",
    "build_effective_model",
    "CONSTANTS",
    "DeviceParams",
    "IonParams",
    "RunOptions",
    "load_config",
    "validate",
]
