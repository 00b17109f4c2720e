"""Entangling two resonators through the ion's motion.

Layout: (internal, ion motion, resonator 1, resonator 2). The ion is
swapped with resonator 1, re-entangled with its internal state by an ideal
controlled preparation, swapped with resonator 2, and finally the internal
state is rotated and measured. Outcome "+" ("-") leaves the resonators in
|psi_1 chi_2> + |chi_1 psi_2> (resp. minus).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from ..lindblad import Dissipator, MasterEquationModel, propagate
from ..quantum import (
    DensityState,
    Operator,
    SpaceLayout,
    embed,
    fidelity,
    ket,
    ladder_ops,
    partial_trace,
    Fock,
)

__all__ = [
    "Swap",
    "InternalRotation",
    "IdealPrep",
    "MeasureInternal",
    "ProtocolNoise",
    "Outcome",
    "EntangleResult",
    "swap_pulse",
    "run_entangle_protocol",
    "HALF_PI_PULSE",
    "parse_state_spec",
]

INTERNAL, ION, RES1, RES2 = 0, 1, 2, 3

# |up> -> |up> + |down>, |down> -> |up> - |down> (normalized); columns are images
HALF_PI_PULSE = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


@dataclass(frozen=True)
class Swap:
    target: int  # 1 or 2
    duration: float  # s
    detuning: float = 0.0

    def __post_init__(self):
        if self.target not in (1, 2):
            raise ValueError("swap target must be resonator 1 or 2")
        if not self.duration > 0:
            raise ValueError("durations must be positive")


@dataclass(frozen=True)
class InternalRotation:
    """Instantaneous internal-state unitary; ``angle``/``axis`` are descriptive."""

    angle: float
    axis: str
    matrix: np.ndarray = field(default_factory=lambda: HALF_PI_PULSE, compare=False)


@dataclass(frozen=True)
class IdealPrep:
    """Conditional motional preparation |0_x> -> |up_state> or |down_state>."""

    up_state: np.ndarray
    down_state: np.ndarray


@dataclass(frozen=True)
class MeasureInternal:
    pass


ProtocolStep = Union[Swap, InternalRotation, IdealPrep, MeasureInternal]


@dataclass(frozen=True)
class ProtocolNoise:
    """Thermal channels (rate rad/s, occupancy) active during timed steps."""

    ion: tuple[float, float] = (0.0, 0.0)
    res1: tuple[float, float] = (0.0, 0.0)
    res2: tuple[float, float] = (0.0, 0.0)

    @classmethod
    def total_rate(cls, rate: float) -> "ProtocolNoise":
        """Split a total energy-relaxation rate evenly over both resonators."""
        return cls(res1=(rate / 2, 0.0), res2=(rate / 2, 0.0))

    @classmethod
    def from_models(cls, eff1, eff2) -> "ProtocolNoise":
        return cls(
            ion=(eff1.gamma_m, eff1.n_B),
            res1=(eff1.Gamma_nu, eff1.n_B),
            res2=(eff2.Gamma_nu, eff2.n_B),
        )


def _lowering(layout: SpaceLayout, slot: int) -> Operator:
    return embed(ladder_ops(layout[slot]).lower, layout, slot)


def _beam_splitter(layout, ion_slot, res_slot, lam, detuning):
    a = _lowering(layout, ion_slot)
    b = _lowering(layout, res_slot)
    H = 1j * lam * (b.dag() @ a - a.dag() @ b)
    if detuning:
        H = H + detuning * (a.dag() @ a)
    return Operator(layout, 0.5 * (H.matrix + H.matrix.conj().T))


def swap_pulse(
    state: DensityState,
    lambda_rate: float,
    duration: float,
    detuning: float = 0.0,
    ion_slot: int = 0,
    res_slot: int = 1,
    dissipators=(),
) -> DensityState:
    """Evolve under detuning*a^dag a + i lambda (b^dag a - a^dag b) for ``duration``.

    At resonance and duration pi/(2 lambda) this maps |n, m> -> (-1)^m |m, n>.
    """
    H = _beam_splitter(state.layout, ion_slot, res_slot, lambda_rate, detuning)
    return propagate(MasterEquationModel(H, dissipators), state, duration)


def _prep_unitary(target: np.ndarray) -> np.ndarray:
    """Unitary whose first column is ``target`` (Householder completion)."""
    s = np.asarray(target, complex)
    s = s / np.linalg.norm(s)
    phase = s[0] / abs(s[0]) if abs(s[0]) > 1e-15 else 1.0
    s1 = s / phase
    e0 = np.zeros_like(s1)
    e0[0] = 1
    w = e0 - s1
    nw = np.vdot(w, w).real
    U = np.eye(len(s1), dtype=complex)
    if nw > 1e-30:
        U -= 2 * np.outer(w, w.conj()) / nw
    return phase * U


class Outcome(NamedTuple):
    label: str
    probability: float
    state: DensityState | None  # two-resonator state after detection
    fidelity: float | None


@dataclass
class EntangleResult:
    outcomes: list[Outcome]
    total_time: float

    @property
    def probability_sum(self):
        return sum(o.probability for o in self.outcomes)

    def outcome(self, label) -> Outcome:
        return next(o for o in self.outcomes if o.label == label)


def _noise_dissipators(layout, noise: ProtocolNoise | None):
    if noise is None:
        return []
    out = []
    for slot, (rate, occ) in ((ION, noise.ion), (RES1, noise.res1), (RES2, noise.res2)):
        if rate > 0:
            out.append(Dissipator(_lowering(layout, slot), rate, occ))
    return out


_SPEC = re.compile(r"^\s*\d+(\s*[+-]\s*\d+)*\s*$")


def parse_state_spec(text: str, cutoff: int) -> np.ndarray:
    """Equal-weight superposition of Fock levels, e.g. "1", "0+1", "0-2"."""
    if not isinstance(text, str) or not _SPEC.match(text):
        raise ValueError(f"bad state spec {text!r}: expected Fock levels joined by + or -")
    v = np.zeros(cutoff, complex)
    for sign, level in re.findall(r"([+-]?)\s*(\d+)", text.replace(" ", "")):
        n = int(level)
        if n >= cutoff:
            raise ValueError(f"bad state spec {text!r}: level {n} outside cutoff {cutoff}")
        v[n] += -1 if sign == "-" else 1
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError(f"bad state spec {text!r}: amplitudes cancel")
    return v / norm


def _motional_vector(spec, cutoff):
    if isinstance(spec, str):
        return parse_state_spec(spec, cutoff)
    if isinstance(spec, np.ndarray):
        v = np.asarray(spec, complex)
        if v.shape != (cutoff,):
            raise ValueError("state vector length must equal the cutoff")
        return v / np.linalg.norm(v)
    if isinstance(spec, (int, np.integer)):
        spec = Fock(int(spec))
    return ket((cutoff,), spec)


def _apply_local(rho, layout, slots, U):
    """rho -> V rho V^dag with V = U on ``slots`` (contiguous) and identity elsewhere."""
    dims = layout.factor_dims
    before = math.prod(dims[: slots[0]])
    after = math.prod(dims[slots[-1] + 1 :])
    V = np.kron(np.kron(np.eye(before), U), np.eye(after))
    return V @ rho @ V.conj().T


def run_entangle_protocol(
    eff1,
    eff2,
    psi,
    chi,
    noise: ProtocolNoise | None = None,
    cutoff: int = 6,
    initial_resonators: tuple[int, int] = (0, 0),
) -> EntangleResult:
    """Run the four-step protocol and return both detection outcomes.

    ``eff1``/``eff2`` are EffectiveModels (or bare coupling rates in rad/s)
    for the two resonators. ``psi``/``chi`` are motional states of the ion:
    an int (Fock level), a pure state spec, or a vector of length ``cutoff``.
    """
    lambda1 = getattr(eff1, "lambda_rate", eff1)
    lambda2 = getattr(eff2, "lambda_rate", eff2)
    if tuple(initial_resonators) != (0, 0):
        raise NotImplementedError("protocol is defined for resonators starting in vacuum")
    layout = SpaceLayout((2, cutoff, cutoff, cutoff))
    psi_v = _motional_vector(psi, cutoff)
    chi_v = _motional_vector(chi, cutoff)
    vac = np.zeros(cutoff, complex)
    vac[0] = 1
    up, down = np.array([1, 0], complex), np.array([0, 1], complex)

    # ideal preparation of (|up, psi_x> + |down, chi_x>)|0, 0>
    internal_motion = np.kron(up, psi_v) + np.kron(down, chi_v)
    v0 = np.kron(internal_motion, np.kron(vac, vac))
    rho = DensityState.from_ket(layout, v0)

    diss = _noise_dissipators(layout, noise)
    steps: list[ProtocolStep] = [
        Swap(1, math.pi / (2 * lambda1)),
        IdealPrep(up_state=chi_v, down_state=psi_v),
        Swap(2, math.pi / (2 * lambda2)),
        InternalRotation(math.pi / 2, "y"),
        MeasureInternal(),
    ]
    total = 0.0
    outcomes = None
    for step in steps:
        if isinstance(step, Swap):
            lam = lambda1 if step.target == 1 else lambda2
            res = RES1 if step.target == 1 else RES2
            rho = swap_pulse(rho, lam, step.duration, step.detuning, ION, res, diss)
            total += step.duration
        elif isinstance(step, IdealPrep):
            U = np.zeros((2 * cutoff, 2 * cutoff), complex)
            U[:cutoff, :cutoff] = _prep_unitary(step.up_state)
            U[cutoff:, cutoff:] = _prep_unitary(step.down_state)
            rho = DensityState(layout, _apply_local(rho.matrix, layout, (INTERNAL, ION), U))
        elif isinstance(step, InternalRotation):
            rho = DensityState(layout, _apply_local(rho.matrix, layout, (INTERNAL,), step.matrix))
        elif isinstance(step, MeasureInternal):
            outcomes = _measure(rho, layout, psi_v, chi_v)
    return EntangleResult(outcomes, total)


def _measure(rho: DensityState, layout, psi_v, chi_v):
    d = layout.dim // 2
    res_layout = SpaceLayout((layout[RES1], layout[RES2]))
    out = []
    for label, block in (("+", slice(0, d)), ("-", slice(d, 2 * d))):
        sub = rho.matrix[block, block]
        p = float(np.trace(sub).real)
        target = np.kron(psi_v, chi_v) + (1 if label == "+" else -1) * np.kron(chi_v, psi_v)
        if p < 1e-14:
            out.append(Outcome(label, max(p, 0.0), None, None))
            continue
        motion = DensityState(SpaceLayout(layout.factor_dims[1:]), 0.5 * (sub + sub.conj().T) / p)
        pair = partial_trace(motion, [1, 2])
        pair = DensityState(res_layout, pair.matrix)
        f = fidelity(pair, target) if np.linalg.norm(target) > 1e-12 else None
        out.append(Outcome(label, p, pair, f))
    return out
