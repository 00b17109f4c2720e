"""Physical inputs, constants and the JSON config format.

Everything is SI. Frequencies and rates are stored as angular quantities
(rad/s); the config file speaks Hz and the conversion happens here, once.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import scipy.constants as sc

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "AMU",
    "DeviceParams",
    "IonParams",
    "RunOptions",
    "Issue",
    "ValidationReport",
    "ConfigError",
    "validate",
    "load_config",
    "parse_config",
    "dump_config",
    "bundled_config",
    "to_hz",
]

AMU = sc.physical_constants["atomic mass constant"][0]


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = sc.hbar
    boltzmann: float = sc.k
    elem_charge: float = sc.e
    eps0: float = sc.epsilon_0
    planck_h: float = sc.h

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be positive")


CONSTANTS = PhysicalConstants()


def to_hz(omega):
    """Angular frequency (rad/s) to cycles per second."""
    return omega / (2.0 * math.pi)


@dataclass(frozen=True)
class DeviceParams:
    """Electrode geometry, material, drive and bath.

    ``gap`` is the half-separation d0 (electrodes sit at x = +-d0) and
    ``half_length`` is L0 (electrodes span y in [-L0, L0]).
    """

    r0: float
    half_length: float
    gap: float
    height: float
    youngs_modulus: float
    volumetric_density: float
    drive_voltage: float
    drive_freq: float  # rad/s
    channels: int = 4
    quality: float = 1e5
    temperature: float = 4.0
    n_modes: int = 8
    correlated_electrodes: bool = False

    @property
    def cross_section(self):
        return math.pi * self.r0**2

    @property
    def second_moment(self):
        """Area moment of inertia I2 of a solid cylinder."""
        return math.pi * self.r0**4 / 4.0

    @property
    def linear_density(self):
        return self.volumetric_density * self.cross_section

    @property
    def electrode_mass(self):
        return self.linear_density * 2.0 * self.half_length

    @property
    def com_mass(self):
        """Mass M_p = 2 M_i of the centre-of-mass flexural mode."""
        return 2.0 * self.electrode_mass


@dataclass(frozen=True)
class IonParams:
    charge: float = CONSTANTS.elem_charge
    mass: float = 40.0 * AMU
    rabi: float = 2 * math.pi * 300e6
    linewidth: float = 2 * math.pi * 5e6
    laser_wavevector: float = 2 * math.pi / 729e-9


@dataclass(frozen=True)
class RunOptions:
    method: str = "gaussian"
    ion_cutoff: int = 10
    resonator_cutoff: int = 15
    t_final: float | None = None  # s; None picks a multiple of the slowest decay time
    n_times: int = 201
    sweep_gamma: tuple[float, float, int] | None = None  # (lo, hi, n) in units of lambda
    psi: str = "1"
    chi: str = "0"
    noise_mhz: float = 0.0
    drive_scale: float = 1.0
    periods: int = 400
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.method not in ("gaussian", "fock", "closed_form"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.ion_cutoff < 4 or self.resonator_cutoff < 4:
            raise ValueError("cutoffs must be >= 4")
        if self.n_times < 2:
            raise ValueError("n_times must be >= 2")
        if self.t_final is not None and not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if self.sweep_gamma is not None:
            lo, hi, n = self.sweep_gamma
            if not (0 < lo < hi) or n < 1:
                raise ValueError("sweep grid must satisfy 0 < lo < hi and n >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclass(frozen=True)
class Issue:
    field: str
    message: str

    def __str__(self):
        return f"{self.field}: {self.message}"


@dataclass
class ValidationReport:
    errors: list[Issue] = field(default_factory=list)
    warnings: list[Issue] = field(default_factory=list)

    @property
    def ok(self):
        return not self.errors


def validate(params: DeviceParams, ion: IonParams) -> ValidationReport:
    """Check hard invariants (errors) and soft modelling assumptions (warnings)."""
    rep = ValidationReport()
    err = lambda k, m: rep.errors.append(Issue(k, m))  # noqa: E731
    warn = lambda k, m: rep.warnings.append(Issue(k, m))  # noqa: E731

    positive = {
        "r0": "electrode radius",
        "half_length": "half length",
        "gap": "gap",
        "height": "height",
        "youngs_modulus": "Young's modulus",
        "volumetric_density": "density",
        "drive_freq": "drive frequency",
    }
    for key, label in positive.items():
        if not getattr(params, key) > 0:
            err(key, f"{label} must be positive")
    if params.drive_voltage < 0:
        err("drive_voltage", "drive voltage must be non-negative")
    if params.channels < 1:
        err("channels", "channels must be a positive integer")
    if not params.quality >= 1:
        err("quality", "quality factor must be >= 1")
    if params.temperature < 0:
        err("temperature", "temperature must be non-negative")
    if params.n_modes < 1:
        err("n_modes", "n_modes must be >= 1")
    if not ion.charge > 0:
        err("charge", "ion charge must be positive")
    if not ion.mass > 0:
        err("mass", "ion mass must be positive")
    if ion.rabi < 0:
        err("rabi", "Rabi frequency must be non-negative")
    if ion.linewidth < 0:
        err("linewidth", "linewidth must be non-negative")
    if ion.laser_wavevector < 0:
        err("laser_wavevector", "laser wavevector must be non-negative")
    if rep.errors:
        return rep

    if params.gap >= params.half_length:
        err("gap", "gap d0 must be smaller than the half length L0")
    if params.r0 >= params.gap:
        err("r0", "electrode radius must be smaller than the gap")
    if rep.errors:
        return rep

    if params.height > params.half_length:
        warn(
            "height",
            f"h0 = {params.height:.3g} m exceeds L0 = {params.half_length:.3g} m "
            "(model assumes h0 <= L0)",
        )
    if params.gap / params.half_length > 0.5:
        warn("gap", "d0/L0 is not small; single-mode reduction is questionable")

    from .coupling import lamb_dicke, trap_frequency

    if params.drive_voltage > 0:
        eta = lamb_dicke(ion, trap_frequency(params, ion))
        if eta > 0.3:
            warn("laser_wavevector", f"Lamb-Dicke parameter {eta:.3g} > 0.3")
    return rep


class ConfigError(Exception):
    """Bad config file; ``key`` is the dotted path of the offending entry."""

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


# (json key, attribute, scale to SI, required)
_DEVICE_KEYS = [
    ("r0_m", "r0", 1.0, True),
    ("half_length_m", "half_length", 1.0, True),
    ("gap_m", "gap", 1.0, True),
    ("height_m", "height", 1.0, True),
    ("youngs_modulus_pa", "youngs_modulus", 1.0, True),
    ("density_kgm3", "volumetric_density", 1.0, True),
    ("v0_volts", "drive_voltage", 1.0, True),
    ("f_ac_hz", "drive_freq", 2 * math.pi, True),
    ("channels", "channels", None, False),
    ("quality", "quality", 1.0, False),
    ("temperature_k", "temperature", 1.0, False),
    ("n_modes", "n_modes", None, False),
    ("correlated_electrodes", "correlated_electrodes", None, False),
]
_ION_KEYS = [
    ("mass_amu", "mass", AMU, False),
    ("charge_e", "charge", CONSTANTS.elem_charge, False),
    ("rabi_hz", "rabi", 2 * math.pi, False),
    ("linewidth_hz", "linewidth", 2 * math.pi, False),
    ("laser_wavelength_m", "laser_wavevector", "wavelength", False),
]
_RUN_KEYS = {
    "method": str,
    "ion_cutoff": int,
    "resonator_cutoff": int,
    "t_final_s": float,
    "n_times": int,
    "sweep_gamma": list,
    "psi": str,
    "chi": str,
    "noise_mhz": float,
    "drive_scale": float,
    "periods": int,
    "seed": int,
}
_INT_ATTRS = {"channels", "n_modes"}


def _number(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", key)
    return value


def _from_json(value, scale, key):
    if scale is None:
        return value
    value = _number(value, key)
    if scale == "wavelength":
        if value <= 0:
            raise ConfigError("must be positive", key)
        return 2 * math.pi / value
    return value * scale


def _to_json(value, scale):
    if scale is None:
        return value
    if scale == "wavelength":
        return _invert(value, 2 * math.pi / value, lambda x: 2 * math.pi / x)
    return _invert(value, value / scale, lambda x: x * scale)


def _invert(stored, guess, forward):
    """Nudge ``guess`` by a few ulps until ``forward(guess) == stored``."""
    if forward(guess) == stored:
        return guess
    lo = hi = guess
    for _ in range(8):
        lo = math.nextafter(lo, -math.inf)
        hi = math.nextafter(hi, math.inf)
        for cand in (lo, hi):
            if forward(cand) == stored:
                return cand
    return guess


def _section(raw, name, required=True):
    sec = raw.get(name)
    if sec is None:
        if required:
            raise ConfigError("missing section", name)
        return {}
    if not isinstance(sec, dict):
        raise ConfigError("expected an object", name)
    return sec


def _read_keys(sec, spec, prefix):
    known = {k for k, *_ in spec}
    for k in sec:
        if k not in known:
            raise ConfigError("unknown key", f"{prefix}.{k}")
    out = {}
    for key, attr, scale, required in spec:
        path = f"{prefix}.{key}"
        if key not in sec:
            if required:
                raise ConfigError("missing required key", path)
            continue
        value = sec[key]
        if attr in _INT_ATTRS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"expected an integer, got {value!r}", path)
        elif attr == "correlated_electrodes":
            if not isinstance(value, bool):
                raise ConfigError(f"expected a boolean, got {value!r}", path)
        out[attr] = _from_json(value, scale, path)
    return out


def _read_run(sec):
    out = {}
    for k, v in sec.items():
        path = f"run.{k}"
        if k not in _RUN_KEYS:
            raise ConfigError("unknown key", path)
        typ = _RUN_KEYS[k]
        if typ is float:
            v = float(_number(v, path))
        elif typ is int and (isinstance(v, bool) or not isinstance(v, int)):
            raise ConfigError(f"expected an integer, got {v!r}", path)
        elif typ is str and not isinstance(v, str):
            raise ConfigError(f"expected a string, got {v!r}", path)
        elif typ is list:
            if not (isinstance(v, list) and len(v) == 3):
                raise ConfigError("expected [lo, hi, n]", path)
            v = (float(_number(v[0], path)), float(_number(v[1], path)), int(v[2]))
        if k == "t_final_s":
            k = "t_final"
        out[k] = v
    try:
        return RunOptions(**out)
    except ValueError as exc:
        raise ConfigError(str(exc), "run") from None


def parse_config(raw: dict, strict: bool = True, check: bool = True):
    """Build parameter records from an already-decoded config mapping.

    With ``check=False`` physical validation is left to the caller.
    """
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object")
    if strict:
        for k in raw:
            if k not in ("device", "ion", "run"):
                raise ConfigError("unknown key", k)
    device = DeviceParams(**_read_keys(_section(raw, "device"), _DEVICE_KEYS, "device"))
    ion = IonParams(**_read_keys(_section(raw, "ion", False), _ION_KEYS, "ion"))
    run = _read_run(_section(raw, "run", False))

    report = validate(device, ion) if check else None
    if report is not None and report.errors:
        first = report.errors[0]
        raise ConfigError(first.message, _json_path(first.field))
    return device, ion, run


def _json_path(attr):
    for section, spec in (("device", _DEVICE_KEYS), ("ion", _ION_KEYS)):
        for key, a, *_ in spec:
            if a == attr:
                return f"{section}.{key}"
    return attr


def load_config(path, strict: bool = True, check: bool = True):
    """Read a JSON config file -> (DeviceParams, IonParams, RunOptions).

    Raises OSError when the file cannot be read and ConfigError on any
    parse, schema or validation problem.
    """
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_config(raw, strict=strict, check=check)


def dump_config(device: DeviceParams, ion: IonParams, run: RunOptions | None = None) -> dict:
    """Inverse of :func:`parse_config`; values reload to identical floats."""
    out = {"device": {}, "ion": {}}
    for key, attr, scale, _ in _DEVICE_KEYS:
        out["device"][key] = _to_json(getattr(device, attr), scale)
    for key, attr, scale, _ in _ION_KEYS:
        out["ion"][key] = _to_json(getattr(ion, attr), scale)
    if run is not None:
        r = {}
        defaults = RunOptions()
        for k in _RUN_KEYS:
            attr = "t_final" if k == "t_final_s" else k
            v = getattr(run, attr)
            if v != getattr(defaults, attr):
                r[k] = list(v) if isinstance(v, tuple) else v
        out["run"] = r
    return out


def bundled_config(name: str = "cnt_1ghz.json") -> Path:
    return Path(__file__).with_name("data") / name
