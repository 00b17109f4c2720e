"""The ion-resonator master equation in the interaction picture.

Two modes: the ion's secular motion (a, slot 0) and the resonator's COM
flexural mode (b, slot 1), coupled by i*lambda*(b^dag a - a^dag b), with

    L^d(a, gamma_a, n_f) + L^d(b, Gamma_nu, n_B) + L^d(a, gamma_m, n_B).
"""
from __future__ import annotations

import numpy as np

from .coupling import EffectiveModel
from .gaussian import GaussianModel, gaussian_model, gaussian_steady_state
from .lindblad import Dissipator, MasterEquationModel, SolverError
from .quantum import Operator, SpaceLayout, embed, ladder_ops

__all__ = ["CutoffError", "mode_matrix", "channels", "build_eq4_model", "fock_operators"]

TAIL_LIMIT = 1e-3


class CutoffError(SolverError):
    pass


def mode_matrix(lam: float, detuning: float = 0.0) -> np.ndarray:
    """h in H = sum h_jk a_j^dag a_k for (a, b)."""
    return np.array([[detuning, -1j * lam], [1j * lam, 0.0]])


def channels(eff: EffectiveModel, gamma_a: float | None = None):
    """Per-mode (rate, occupancy) lists: [ion channels, resonator channels]."""
    ga = eff.gamma_a if gamma_a is None else gamma_a
    return [
        [(ga, eff.n_f), (eff.gamma_m, eff.n_B)],
        [(eff.Gamma_nu, eff.n_B)],
    ]


def fock_operators(cutoffs):
    layout = SpaceLayout(tuple(cutoffs))
    a = embed(ladder_ops(cutoffs[0]).lower, layout, 0)
    b = embed(ladder_ops(cutoffs[1]).lower, layout, 1)
    return layout, a, b


def build_eq4_model(
    eff: EffectiveModel,
    representation: str = "gaussian",
    cutoffs=(10, 15),
    gamma_a: float | None = None,
    detuning: float = 0.0,
):
    """Return a GaussianModel or a MasterEquationModel for the two-mode problem."""
    chans = channels(eff, gamma_a)
    h = mode_matrix(eff.lambda_rate, detuning)
    g = gaussian_model(h, chans)
    if representation == "gaussian":
        return g
    if representation != "fock":
        raise ValueError(f"unknown representation {representation!r}")

    _check_cutoffs(g, cutoffs)
    layout, a, b = fock_operators(cutoffs)
    H = Operator(layout, h[0, 0] * (a.dag() @ a).matrix + h[0, 1] * (a.dag() @ b).matrix + h[1, 0] * (b.dag() @ a).matrix)
    diss = [Dissipator(a, r, n) for r, n in chans[0] if r > 0]
    diss += [Dissipator(b, r, n) for r, n in chans[1] if r > 0]
    return MasterEquationModel(H, diss)


def _check_cutoffs(g: GaussianModel, cutoffs):
    # judge truncation on the occupations the model will actually settle to
    try:
        occ = gaussian_steady_state(g).occupations
    except ArithmeticError:
        occ = None
    if occ is None:
        return
    for name, n, N in zip(("ion", "resonator"), occ, cutoffs):
        n = max(float(n), 0.0)
        tail = (n / (n + 1)) ** N
        if tail > TAIL_LIMIT:
            raise CutoffError(
                f"{name} cutoff {N} too small: thermal tail {tail:.2e} at <n> = {n:.3g}; "
                "raise the cutoff or use the Gaussian path"
            )
