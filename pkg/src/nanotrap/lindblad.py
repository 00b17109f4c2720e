"""Open-system dynamics on truncated Fock spaces.

Hamiltonians are in angular units (H / hbar, rad/s). Density matrices are
vectorized row-major, so vec(A rho B) = kron(A, B.T) vec(rho).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .quantum import DensityState, Operator, SpaceLayout, check_truncation

__all__ = [
    "SolverError",
    "StiffnessError",
    "DegenerateSteadyStateError",
    "SolverCapError",
    "PositivityError",
    "Dissipator",
    "MasterEquationModel",
    "Trajectory",
    "dissipator_action",
    "lindblad_rhs",
    "liouvillian",
    "evolve",
    "propagate",
    "steady_state",
]

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class StiffnessError(SolverError):
    pass


class DegenerateSteadyStateError(SolverError):
    pass


class SolverCapError(SolverError):
    pass


class PositivityError(SolverError):
    pass


@dataclass(frozen=True)
class Dissipator:
    """Thermal Lindblad channel for a lowering-type operator ``op``."""

    op: Operator
    rate: float
    occupancy: float = 0.0

    def __post_init__(self):
        if self.rate < 0 or self.occupancy < 0:
            raise ValueError("rate and occupancy must be non-negative")


@dataclass(frozen=True)
class MasterEquationModel:
    hamiltonian: Operator
    dissipators: Sequence[Dissipator] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.hamiltonian.is_hermitian():
            raise ValueError("Hamiltonian is not Hermitian")
        object.__setattr__(self, "dissipators", tuple(self.dissipators))
        for d in self.dissipators:
            if d.op.layout != self.hamiltonian.layout:
                raise ValueError("dissipator layout differs from Hamiltonian layout")

    @property
    def layout(self) -> SpaceLayout:
        return self.hamiltonian.layout


def dissipator_action(d: Dissipator, rho) -> np.ndarray:
    """L^d(A, gamma, n) rho as a dense matrix."""
    r = rho.matrix if isinstance(rho, DensityState) else np.asarray(rho)
    if isinstance(rho, DensityState) and rho.layout != d.op.layout:
        raise ValueError("layout mismatch")
    A = d.op.matrix
    Ad = A.conj().T
    out = np.zeros_like(r, dtype=complex)
    if d.rate == 0:
        return out
    if d.occupancy:
        AAd = A @ Ad
        out += 0.5 * d.rate * d.occupancy * (2 * Ad @ r @ A - AAd @ r - r @ AAd)
    AdA = Ad @ A
    out += 0.5 * d.rate * (d.occupancy + 1) * (2 * A @ r @ Ad - AdA @ r - r @ AdA)
    return out


def lindblad_rhs(model: MasterEquationModel, rho) -> np.ndarray:
    r = rho.matrix if isinstance(rho, DensityState) else np.asarray(rho)
    H = model.hamiltonian.matrix
    out = -1j * (H @ r - r @ H)
    for d in model.dissipators:
        out += dissipator_action(d, r)
    return out


def _lr(A, B):
    """Superoperator for rho -> A rho B (sparse inputs)."""
    return sp.kron(A, B.T, format="csr")


def liouvillian(model: MasterEquationModel) -> sp.csr_matrix:
    d = model.layout.dim
    eye = sp.identity(d, dtype=complex, format="csr")
    H = sp.csr_matrix(model.hamiltonian.matrix)
    L = -1j * (_lr(H, eye) - _lr(eye, H))
    for dis in model.dissipators:
        if dis.rate == 0:
            continue
        A = sp.csr_matrix(dis.op.matrix)
        Ad = A.conj().T.tocsr()
        AdA = (Ad @ A).tocsr()
        L = L + 0.5 * dis.rate * (dis.occupancy + 1) * (2 * _lr(A, Ad) - _lr(AdA, eye) - _lr(eye, AdA))
        if dis.occupancy:
            AAd = (A @ Ad).tocsr()
            L = L + 0.5 * dis.rate * dis.occupancy * (2 * _lr(Ad, A) - _lr(AAd, eye) - _lr(eye, AAd))
    L = L.tocsr()
    L.eliminate_zeros()
    return L


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    trace_drift: float = 0.0

    @property
    def final(self) -> DensityState:
        return self.states[-1]

    def expect(self, op: Operator) -> np.ndarray:
        m = op.matrix
        return np.array([np.sum(s.matrix.T * m) for s in self.states])


TRACE_RENORM_LIMIT = 1e-9
TRACE_ACCEPT_LIMIT = 1e-8
POSITIVITY_LIMIT = -1e-6


def _accept(rho: np.ndarray, layout: SpaceLayout, t: float, monitor: bool):
    drift = abs(np.trace(rho) - 1)
    if drift > TRACE_ACCEPT_LIMIT:
        raise SolverError(f"trace drift {drift:.2e} at t={t:.3g} exceeds {TRACE_ACCEPT_LIMIT:g}")
    if drift > TRACE_RENORM_LIMIT:
        log.warning("trace drift %.2e at t=%.3g left uncorrected", drift, t)
    else:
        rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < POSITIVITY_LIMIT:
        raise PositivityError(f"negative eigenvalue {lo:.2e} at t={t:.3g}; reduce the step size")
    if monitor:
        check_truncation(rho, layout)
    return rho, drift


def _states(rhos, layout):
    # tiny negative eigenvalues from rounding are tolerated by DensityState
    return [DensityState(layout, r) for r in rhos]


def evolve(
    model: MasterEquationModel,
    rho0: DensityState,
    t_final: float,
    dt_hint: float | None = None,
    n_times: int = 101,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    monitor: bool = True,
) -> Trajectory:
    """Integrate the master equation with an adaptive RK4(5) scheme."""
    if rho0.layout != model.layout:
        raise ValueError("layout mismatch")
    if not t_final > 0:
        raise ValueError("t_final must be positive")
    times = np.linspace(0.0, t_final, n_times)
    d = model.layout.dim
    L = liouvillian(model)
    if L.nnz == 0:
        return Trajectory(times, [rho0] * n_times)
    kw = {"first_step": dt_hint} if dt_hint else {}
    sol = solve_ivp(
        lambda t, y: L @ y,
        (0.0, t_final),
        rho0.matrix.ravel().astype(complex),
        method="RK45",
        t_eval=times,
        rtol=rtol,
        atol=atol,
        **kw,
    )
    if sol.status != 0:
        raise StiffnessError(f"integration failed ({sol.message}); try the Gaussian path for this model")
    out, worst = [], 0.0
    for k, t in enumerate(sol.t):
        rho, drift = _accept(sol.y[:, k].reshape(d, d), model.layout, t, monitor)
        worst = max(worst, drift)
        out.append(rho)
    return Trajectory(sol.t, _states(out, model.layout), worst)


def propagate(model: MasterEquationModel, rho0: DensityState, duration: float, monitor: bool = True) -> DensityState:
    """Exact propagation over one piecewise-constant step, exp(L t) rho0."""
    if rho0.layout != model.layout:
        raise ValueError("layout mismatch")
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if duration == 0:
        return rho0
    d = model.layout.dim
    L = liouvillian(model)
    v = spla.expm_multiply(L * duration, rho0.matrix.ravel().astype(complex))
    rho, _ = _accept(v.reshape(d, d), model.layout, duration, monitor)
    return DensityState(model.layout, rho)


DENSE_SVD_MAX = 1600  # Liouvillian side length handled by full SVD
UNIQUENESS_RATIO = 1e3


def steady_state(model: MasterEquationModel, max_dim: int = 400) -> DensityState:
    """Unique fixed point of the Liouvillian.

    Small problems use a dense SVD null vector; larger ones a sparse solve
    with the trace condition replacing one equation, guarded by a
    shift-invert eigenvalue check for a one-dimensional kernel.
    """
    d = model.layout.dim
    if d > max_dim:
        raise SolverCapError(
            f"Hilbert dimension {d} exceeds cap {max_dim}; use the Gaussian path for quadratic models"
        )
    L = liouvillian(model)
    n = d * d
    if n <= DENSE_SVD_MAX:
        _, s, vh = np.linalg.svd(L.toarray())
        smallest, second = s[-1], s[-2]
        if not second > UNIQUENESS_RATIO * max(smallest, np.finfo(float).tiny):
            raise DegenerateSteadyStateError(
                f"Liouvillian kernel is not one-dimensional (singular values {second:.2e}, {smallest:.2e})"
            )
        v = vh[-1].conj()
    else:
        scale = abs(L).sum(axis=1).max()
        try:
            ev = spla.eigs(L.tocsc(), k=2, sigma=1e-9 * scale, which="LM", return_eigenvectors=False, tol=1e-12)
        except (RuntimeError, spla.ArpackError) as exc:  # pragma: no cover - ARPACK failure
            raise DegenerateSteadyStateError(f"kernel check failed: {exc}") from None
        mags = np.sort(np.abs(ev))
        if not mags[1] > UNIQUENESS_RATIO * max(mags[0], 1e-14 * scale):
            raise DegenerateSteadyStateError(f"Liouvillian kernel is not one-dimensional (|eigs| {mags})")
        trace_row = sp.csr_matrix(np.eye(d).ravel()[None, :].astype(complex))
        A = sp.vstack([trace_row, L[1:]]).tocsc()
        b = np.zeros(n, complex)
        b[0] = 1.0
        v = spla.spsolve(A, b)
    rho = v.reshape(d, d)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    return DensityState(model.layout, rho)
