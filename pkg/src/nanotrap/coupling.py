"""From device geometry to the effective ion-resonator model and its noise budget.

All returned rates are angular (rad/s). Energies that the underlying
formulas express in joules (coupling, noise spectral densities, k_B T/Q)
are divided by hbar where they act as rates.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .beam import BeamMode, beam_mode, integrate
from .params import CONSTANTS, DeviceParams, IonParams

__all__ = [
    "GeometryError",
    "FormulaValidityWarning",
    "EffectiveModel",
    "NeglectReport",
    "DecoherenceResult",
    "effective_voltages",
    "trap_frequency",
    "mathieu_q",
    "zero_point_length",
    "lamb_dicke",
    "coupling_rate",
    "ion_resonator_coupling",
    "johnson_factor",
    "line_charge_density",
    "g_overlap_integral",
    "contact_resistance",
    "beta_g",
    "voltage_noise_rates",
    "thermal_rate",
    "decoherence_sum",
    "motional_decoherence",
    "laser_cooling_rate",
    "neglect_checks",
    "thermal_occupation",
    "build_effective_model",
]

C = CONSTANTS


class GeometryError(ValueError):
    pass


class FormulaValidityWarning(UserWarning):
    """A closed-form expression is being used outside its stated regime."""


def _log_or_raise(arg, what):
    if not arg > 1.0:
        raise GeometryError(f"log argument for {what} is {arg:.3g} <= 1")
    return math.log(arg)


def effective_voltages(params: DeviceParams, ion: IonParams) -> tuple[float, float]:
    """Trap voltage amplitude V~0 and the static image-charge term V~q (volts)."""
    h0, d0, r0 = params.height, params.gap, params.r0
    geo = _log_or_raise(2 * h0 * math.sqrt(h0 * h0 + d0 * d0) / (r0 * d0), "trap voltage")
    v_eff = 2.0 * params.drive_voltage / geo
    alpha_g = 1.0
    v_image = -alpha_g * ion.charge / (2 * math.pi * C.eps0 * d0 * _log_or_raise(d0 / r0, "image charge"))
    return v_eff, v_image


def trap_frequency(params: DeviceParams, ion: IonParams) -> float:
    """Secular frequency q0 V~0 / (sqrt(2) d0^2 m w_ac)."""
    v_eff, _ = effective_voltages(params, ion)
    return ion.charge * v_eff / (math.sqrt(2) * params.gap**2 * ion.mass * params.drive_freq)


def mathieu_q(params: DeviceParams, ion: IonParams) -> float:
    """Mathieu drive parameter 2 q0 V~0 / (m d0^2 w_ac^2)."""
    v_eff, _ = effective_voltages(params, ion)
    return 2 * ion.charge * v_eff / (ion.mass * params.gap**2 * params.drive_freq**2)


def zero_point_length(ion: IonParams, omega_nu: float) -> float:
    if not omega_nu > 0:
        raise GeometryError("no secular motion: trap frequency must be positive")
    return math.sqrt(C.hbar / (2 * ion.mass * omega_nu))


def lamb_dicke(ion: IonParams, omega_nu: float) -> float:
    return ion.laser_wavevector * zero_point_length(ion, omega_nu)


def coupling_rate(omega_nu, u_center, mass_ratio):
    """lambda/hbar = w_nu u(0) sqrt(m/M_p)."""
    return omega_nu * u_center * math.sqrt(mass_ratio)


def ion_resonator_coupling(params: DeviceParams, ion: IonParams, beam: BeamMode) -> tuple[float, float]:
    """Direct and parametrically up-converted coupling rates (rad/s)."""
    w_nu = trap_frequency(params, ion)
    u0 = beam.center_value
    ratio = ion.mass / params.com_mass
    lam = coupling_rate(w_nu, u0, ratio)
    lam_up = w_nu * u0 * math.sqrt(ratio * params.drive_freq**2 / (beam.omega * w_nu))
    return lam, lam_up


def line_charge_density(params: DeviceParams) -> float:
    """Drive-induced charge per length (C/m), wire-over-ground capacitance."""
    c_l = 2 * math.pi * C.eps0 / _log_or_raise(2 * params.height / params.r0, "line capacitance")
    return c_l * params.drive_voltage


class GOverlap(NamedTuple):
    total: float
    line_term: float
    image_term: float


def g_overlap_integral(params: DeviceParams, ion: IonParams, beam: BeamMode, rtol=1e-10) -> GOverlap:
    """Amplitude g_in (N/m) of the ion-electrode bilinear coupling.

    Negative for the fundamental mode: the region |y| < sqrt(2) d0, where
    the kernel is negative, dominates.
    """
    d0, L0, q0 = params.gap, params.half_length, ion.charge
    rho_v = line_charge_density(params)
    pref = q0 * rho_v / (4 * math.pi * C.eps0)

    def integrand(y):
        return pref * (y * y - 2 * d0 * d0) * beam.shape(y) / (d0 * d0 + y * y) ** 2.5

    scale = integrate(lambda y: np.abs(integrand(y)), -L0, L0, rtol=1e-6)
    line = integrate(integrand, -L0, L0, rtol=rtol, atol=1e-13 * scale) if scale > 0 else 0.0
    if abs(line) <= 1e-12 * scale:
        line = 0.0
    _, v_image = effective_voltages(params, ion)
    image = q0 * v_image * beam.center_value / (2 * d0 * d0 * math.log(d0 / params.r0))
    return GOverlap(line + image, line, image)


def contact_resistance(params: DeviceParams) -> float:
    """R_c = h / (2 N e^2), ohms."""
    return C.planck_h / (2 * params.channels * C.elem_charge**2)


def beta_g(params: DeviceParams) -> float:
    return 2 * math.log(2 * params.height / params.r0) / math.log(2 * params.gap / params.r0)


def johnson_factor(omega: float, temperature: float) -> float:
    """coth(hbar*omega / 2 k_B T); 1 at zero temperature."""
    if temperature <= 0:
        return 1.0
    return 1.0 / math.tanh(C.hbar * omega / (2 * C.boltzmann * temperature))


def voltage_noise_rates(params: DeviceParams, ion: IonParams, omega: float) -> tuple[float, float]:
    """(gamma_1, gamma_m): parametric and linear voltage-noise rates at ``omega``.

    Per-electrode Johnson density (hbar*omega*R_c/2) coth(hbar*omega / 2 k_B T)
    in V^2 s. It reduces to hbar*omega*R_c/2 at T = 0 and to k_B T R_c in the
    classical limit. The ion's zero-point length is taken at its own trap
    frequency.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    dx0 = zero_point_length(ion, trap_frequency(params, ion))
    s_single = C.hbar * omega * contact_resistance(params) / 2 * johnson_factor(omega, params.temperature)
    total = 2 * s_single
    s_par = total / 4
    s_lin = 0.0 if params.correlated_electrodes else beta_g(params) ** 2 * total / 4
    x = dx0 / params.gap
    to_rate = ion.charge**2 / (4 * C.hbar**2)
    return x**4 * s_par * to_rate, x**2 * s_lin * to_rate


def thermal_rate(params: DeviceParams) -> float:
    """k_B T / (hbar Q) in rad/s."""
    return C.boltzmann * params.temperature / (C.hbar * params.quality)


def decoherence_sum(omega_nu, terms, mass_ratio, rate_T, electrodes=2):
    """Off-resonant motional decoherence rate.

    ``terms`` is an iterable of (omega_in, u_in(0)) pairs pooled over all
    electrodes; the result is averaged over ``electrodes`` so that two
    identical electrodes give the same rate as one.
    """
    acc = 0.0
    for w_in, u in terms:
        den = (omega_nu**2 - w_in**2) ** 2 + 4 * w_in**2 * rate_T**2
        acc += u * u * omega_nu**3 * w_in / den
    return rate_T * mass_ratio * acc / electrodes


@dataclass(frozen=True)
class DecoherenceResult:
    Gamma_m: float
    tau_res_inv: float
    near_resonant: bool
    message: str = ""


def motional_decoherence(params: DeviceParams, ion: IonParams, omega_nu: float) -> DecoherenceResult:
    rate_T = thermal_rate(params)
    modes = [beam_mode(params, n) for n in range(1, params.n_modes + 1)]
    terms = []
    for _ in range(2):  # symmetric electrodes
        terms += [(m.omega, m.center_value) for m in modes]
    ratio = ion.mass / params.com_mass
    gamma = decoherence_sum(omega_nu, terms, ratio, rate_T)
    close = [m.index for m in modes if abs(m.center_value) > 1e-12 and abs(omega_nu - m.omega) < rate_T]
    msg = ""
    if close:
        msg = f"near-resonant with mode(s) {close}; off-resonant formula invalid"
    return DecoherenceResult(gamma, rate_T, bool(close), msg)


class LaserCooling(NamedTuple):
    gamma_a: float
    eta: float


def laser_cooling_rate(params: DeviceParams, ion: IonParams, omega_nu: float) -> LaserCooling:
    """eta^2 Omega^2 / Gamma_e; warns when Gamma_e <= eta Omega."""
    if not ion.linewidth > 0:
        raise ValueError("linewidth must be positive")
    eta = lamb_dicke(ion, omega_nu)
    if ion.linewidth <= eta * ion.rabi:
        warnings.warn(
            f"Gamma_e = {ion.linewidth:.3g} <= eta*Omega = {eta * ion.rabi:.3g}: "
            "cooling-rate formula out of validity",
            FormulaValidityWarning,
            stacklevel=2,
        )
    return LaserCooling(eta**2 * ion.rabi**2 / ion.linewidth, eta)


@dataclass(frozen=True)
class NeglectReport:
    kappa_bound: float  # N/m
    spring_scale: float  # N/m
    kappa_ratio: float
    Q_c_electrons: float

    @property
    def flagged(self):
        return self.kappa_ratio > 0.1


def neglect_checks(params: DeviceParams, ion: IonParams) -> NeglectReport:
    q_c = 2 * params.half_length * line_charge_density(params)
    w_b = beam_mode(params, 1).omega
    bound = (q_c / ion.charge) * (params.drive_freq / w_b) * ion.mass * w_b**2
    spring = params.com_mass * w_b**2
    return NeglectReport(bound, spring, bound / spring, q_c / C.elem_charge)


def thermal_occupation(temperature, omega):
    """Classical k_B T / (hbar omega)."""
    return C.boltzmann * temperature / (C.hbar * omega)


@dataclass(frozen=True)
class EffectiveModel:
    omega_nu: float
    omega_b: float
    lambda_rate: float
    lambda_up: float
    Gamma_nu: float
    n_B: float
    M_p: float
    u1_center: float
    eta: float
    gamma_a: float
    gamma_m: float
    gamma_1: float
    V_eff: float
    V_image: float
    dx0: float
    n_f: float = 0.0
    warnings: tuple[str, ...] = field(default=(), compare=False)


def build_effective_model(params: DeviceParams, ion: IonParams) -> EffectiveModel:
    """Everything the dynamics layer needs, for the fundamental mode."""
    caught = []
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        v_eff, v_image = effective_voltages(params, ion)
        w_nu = trap_frequency(params, ion)
        if not w_nu > 0:
            raise GeometryError("no secular motion: trap frequency must be positive")
        mode = beam_mode(params, 1)
        lam, lam_up = ion_resonator_coupling(params, ion, mode)
        gamma_a, eta = laser_cooling_rate(params, ion, w_nu) if ion.linewidth > 0 else (0.0, lamb_dicke(ion, w_nu))
        gamma_1, gamma_m = voltage_noise_rates(params, ion, w_nu)
    caught = tuple(str(w.message) for w in rec)
    return EffectiveModel(
        omega_nu=w_nu,
        omega_b=mode.omega,
        lambda_rate=lam,
        lambda_up=lam_up,
        Gamma_nu=mode.omega / params.quality,
        n_B=thermal_occupation(params.temperature, mode.omega),
        M_p=params.com_mass,
        u1_center=mode.center_value,
        eta=eta,
        gamma_a=gamma_a,
        gamma_m=gamma_m,
        gamma_1=gamma_1,
        V_eff=v_eff,
        V_image=v_image,
        dx0=zero_point_length(ion, w_nu),
        warnings=caught,
    )
