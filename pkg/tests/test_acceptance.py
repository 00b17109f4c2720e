"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py`` (the lines are collected in the
"acceptance criteria" terminal section) or directly as a script.
Tolerances are pinned; nothing here is loosened to make a line pass.
"""
import math
import sys
import time
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

import conftest
from conftest import make_device
from nanotrap.beam import beam_mode, peak_effective_mass_fraction
from nanotrap.coupling import (
    beta_g,
    build_effective_model,
    coupling_rate,
    decoherence_sum,
    thermal_rate,
    trap_frequency,
    voltage_noise_rates,
    zero_point_length,
)
from nanotrap.lindblad import Dissipator, MasterEquationModel, evolve
from nanotrap.params import AMU, IonParams
from nanotrap.protocols.cooling import (
    cooling_closed_form,
    cooling_simulate,
    cooling_sweep,
    minimum_formula,
    optimize_cooling,
)
from nanotrap.protocols.entangle import ProtocolNoise, run_entangle_protocol, swap_pulse
from nanotrap.protocols.secular import classical_secular_check, drive_scale_for_q
from nanotrap.quantum import DensityState, Operator, SpaceLayout, Superposition, embed, fidelity, ket, ladder_ops

TWO_PI = 2 * math.pi


def record(n, ok, detail):
    conftest.ACCEPTANCE_LINES[n] = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    assert ok, detail


@pytest.fixture
def eff(bundled):
    return build_effective_model(*bundled)


def _quoted_rates(eff):
    return replace(
        eff,
        Gamma_nu=TWO_PI * 10e3,
        n_B=83.3,
        lambda_rate=TWO_PI * 10e6,
        gamma_a=TWO_PI * 2e6,
        gamma_m=0.0,
        n_f=0.0,
    )


def test_criterion_1_mode_frequency():
    t0 = time.perf_counter()
    f1 = beam_mode(make_device(), 1).omega / TWO_PI
    dt = time.perf_counter() - t0
    ok = 0.3e9 <= f1 <= 3e9 and dt < 1.0
    record(1, ok, f"f1 = {f1 / 1e9:.4g} GHz in [0.3, 3] GHz, {dt:.3f} s < 1 s")


def test_criterion_2_trap_frequency(device):
    t0 = time.perf_counter()
    freqs = {u: trap_frequency(device, IonParams(mass=u * AMU)) / TWO_PI for u in (40, 62.5, 70)}
    dt = time.perf_counter() - t0
    ok = all(0.5e9 <= f <= 2e9 for f in freqs.values()) and dt < 1.0
    text = ", ".join(f"{u} u -> {f / 1e9:.4g} GHz" for u, f in freqs.items())
    record(2, ok, f"f_nu in [0.5, 2] GHz: {text}; {dt:.3f} s < 1 s")


def test_criterion_3_coupling_timescale(device):
    t0 = time.perf_counter()
    u0 = beam_mode(device, 1).center_value
    lam = coupling_rate(TWO_PI * 1e9, u0, 1e-4)
    t_swap = math.pi / lam
    dt = time.perf_counter() - t0
    ok = 25e-9 <= t_swap <= 100e-9 and dt < 1.0
    record(3, ok, f"pi/lambda = {t_swap * 1e9:.4g} ns in [25, 100] ns, {dt:.3f} s < 1 s")


def test_criterion_4_cooling_closed_form(eff):
    val = cooling_closed_form(_quoted_rates(eff)).steady_bdagb
    # hand evaluation in exact rationals (rates in kHz)
    G, g, lam, nB = Fraction(10), Fraction(2000), Fraction(10000), Fraction(833, 10)
    hand = float((G * g * (g + G) + 4 * G * lam**2) * nB / ((G + g) * (g * G + 4 * lam**2)))
    ok = abs(val - 0.42) <= 0.02 and abs(val - hand) <= 1e-12 * hand
    record(4, ok, f"<b+b>_f = {val:.5f} (hand {hand:.5f}), target 0.42 +- 0.02")


def test_criterion_5_solver_cross_validation(eff):
    t0 = time.perf_counter()
    e = _quoted_rates(eff)
    gammas = e.lambda_rate * np.logspace(-1, 1, 20)
    num = cooling_sweep(e, gammas, "gaussian")
    ref = cooling_sweep(e, gammas, "closed_form")
    gap_gauss = float(np.max(np.abs(num - ref) / ref))
    scaled = replace(eff, lambda_rate=10.0, gamma_a=20.0, Gamma_nu=1.0, n_B=2.0, gamma_m=0.0, n_f=0.0)
    fock = cooling_simulate(scaled, "fock", cutoffs=(12, 12)).steady_bdagb
    gauss = cooling_simulate(scaled, "gaussian").steady_bdagb
    gap_fock = abs(fock - gauss) / gauss
    dt = time.perf_counter() - t0
    ok = gap_gauss < 0.05 and gap_fock < 0.02 and dt < 120
    record(
        5,
        ok,
        f"gaussian vs closed form max gap {gap_gauss:.2e} < 5% over 20 points; "
        f"fock vs gaussian {gap_fock:.2e} < 2% (n_B = 2, cutoffs 12); {dt:.2f} s < 120 s",
    )


def test_criterion_6_optimal_cooling(eff):
    e = _quoted_rates(eff)
    assert e.Gamma_nu <= 1e-3 * e.lambda_rate
    g_star, v_star = optimize_cooling(e, (0.1 * e.lambda_rate, 10 * e.lambda_rate))
    arg_err = abs(g_star - 2 * e.lambda_rate) / (2 * e.lambda_rate)
    v_ref = minimum_formula(e)
    v_err = abs(v_star - v_ref) / v_ref
    ok = arg_err < 0.01 and v_err < 0.02
    record(6, ok, f"gamma*/2lambda - 1 = {arg_err:.2e} < 1e-2; min {v_star:.5f} vs formula {v_ref:.5f} ({v_err:.2e} < 2%)")


def test_criterion_7_entanglement():
    t0 = time.perf_counter()
    lam = math.pi / 100e-9
    clean = run_entangle_protocol(lam, lam, 1, 0, cutoff=6)
    noisy = run_entangle_protocol(lam, lam, 1, 0, ProtocolNoise.total_rate(TWO_PI * 1e6), cutoff=6)
    dt = time.perf_counter() - t0
    f_clean = min(o.fidelity for o in clean.outcomes)
    p_err = max(abs(o.probability - 0.5) for o in clean.outcomes)
    f_noisy = min(o.fidelity for o in noisy.outcomes)
    ok = f_clean >= 1 - 1e-6 and p_err <= 1e-6 and f_noisy >= 0.85 and dt < 30
    record(
        7,
        ok,
        f"noiseless F = {f_clean:.9f}, |p - 1/2| = {p_err:.1e}; "
        f"2pi 1 MHz over {noisy.total_time * 1e9:.0f} ns F = {f_noisy:.4f} >= 0.85; {dt:.2f} s < 30 s",
    )


def test_criterion_8_decoherence_rates(device, ion):
    # Gamma_m at the quoted point: fundamental at 2pi 500 MHz, ion at 2pi 1 GHz, m/M_p = 1e-4
    modes = [beam_mode(device, n) for n in range(1, device.n_modes + 1)]
    w1 = TWO_PI * 500e6
    terms = [(w1 * (m.root / modes[0].root) ** 2, m.center_value) for m in modes] * 2
    rate_T = thermal_rate(device)
    Gamma_m = decoherence_sum(TWO_PI * 1e9, terms, 1e-4, rate_T)
    ok_G = 1 / 3 <= Gamma_m / (TWO_PI * 100) <= 3
    ok_tau = 0.5 <= rate_T / (TWO_PI * 1e6) <= 2

    w_nu = trap_frequency(device, ion)
    g1, gm = voltage_noise_rates(device, ion, w_nu)
    ok_gm = 0.1 <= gm / (TWO_PI * 0.5e6) <= 10
    ratio = (zero_point_length(ion, w_nu) / device.gap) ** 2 / beta_g(device) ** 2
    ratio_err = abs(g1 / gm - ratio) / ratio
    ok_ratio = ratio_err <= 1e-6

    record(
        8,
        ok_G and ok_tau and ok_gm and ok_ratio,
        f"Gamma_m = 2pi {Gamma_m / TWO_PI:.4g} Hz (x3 of 2pi 100 Hz: {'ok' if ok_G else 'no'}); "
        f"tau^-1 = 2pi {rate_T / TWO_PI / 1e6:.4g} MHz (x2 of 2pi 1 MHz: {'ok' if ok_tau else 'no'}); "
        f"gamma_m = 2pi {gm / TWO_PI / 1e6:.4g} MHz (x10 of 2pi 0.5 MHz: {'ok' if ok_gm else 'no'}); "
        f"gamma_1/gamma_m rel err {ratio_err:.1e} <= 1e-6",
    )


def test_criterion_9_secular(device, ion):
    t0 = time.perf_counter()
    small = classical_secular_check(device, ion, drive_scale_for_q(device, ion, 0.1))
    bundled = classical_secular_check(device, ion)
    dt = time.perf_counter() - t0
    ok = (
        small.rel_error is not None
        and small.rel_error < 0.02
        and 0.7 <= bundled.q_M <= 1.1
        and bundled.stability_flag == "marginal"
        and dt < 30
    )
    record(
        9,
        ok,
        f"q = 0.1 secular rel err {small.rel_error:.2e} < 2%; "
        f"unscaled q_M = {bundled.q_M:.4f} flag '{bundled.stability_flag}'; {dt:.2f} s < 30 s",
    )


def _lindblad_invariants(n_models=5):
    worst = 0.0
    for seed in range(n_models):
        rng = np.random.default_rng(seed)
        lay = SpaceLayout((3, 3))
        a = embed(ladder_ops(3).lower, lay, 0)
        b = embed(ladder_ops(3).lower, lay, 1)
        X = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
        H = Operator(lay, 0.5 * (X + X.conj().T))
        r, n = rng.uniform(0, 2, 2), rng.uniform(0, 1, 2)
        model = MasterEquationModel(H, [Dissipator(a, r[0], n[0]), Dissipator(b, r[1], n[1])])
        Y = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
        rho = Y @ Y.conj().T
        traj = evolve(model, DensityState(lay, rho / np.trace(rho)), 2.0, n_times=5, monitor=False)
        for s in traj.states:
            m = s.matrix
            worst = max(worst, abs(np.trace(m) - 1), np.max(np.abs(m - m.conj().T)), -np.linalg.eigvalsh(m)[0])
    return worst


def _swap_parity_error():
    worst = 0.0
    N = 5
    lay = SpaceLayout((N, N))
    for n, m in [(1, 1), (0, 2), (2, 1), (1, 3)]:
        psi = ket(lay, Superposition([(1, (0, 0)), (1, (n, m))]))
        out = swap_pulse(DensityState.from_ket(lay, psi), 1.0, math.pi / 2)
        target = ket(lay, Superposition([(1, (0, 0)), ((-1) ** m, (m, n))]))
        worst = max(worst, 1 - fidelity(out, target))
    return worst


def test_criterion_10_property_suites():
    lindblad = _lindblad_invariants()
    parity = _swap_parity_error()
    mode = beam_mode(make_device(), 1)
    frac = peak_effective_mass_fraction(mode)
    lam_int = coupling_rate(TWO_PI * 1e9, mode.center_value, 1e-4)
    lam_peak = coupling_rate(TWO_PI * 1e9, 1.0, 1e-4 / frac)
    norm_err = abs(lam_peak - lam_int) / lam_int
    ok = lindblad < 1e-8 and parity < 1e-10 and norm_err < 0.01 and abs(frac - 0.396) < 1e-3
    record(
        10,
        ok,
        f"Lindblad trace/Hermiticity/positivity worst {lindblad:.1e}; swap parity law worst {parity:.1e}; "
        f"lambda normalization gap {norm_err:.1e} < 1% (mass fraction {frac:.4f})",
    )


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
