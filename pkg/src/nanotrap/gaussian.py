"""Exact moment dynamics for quadratic Hamiltonians with thermal damping.

Quadratures per mode are x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)),
ordered (x_1, p_1, x_2, p_2, ...). The covariance is the symmetrized
second moment, so the vacuum has variance 1/2 and <n> = (s_xx + s_pp - 1)/2.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_continuous_lyapunov

__all__ = [
    "UnstableDriftError",
    "GaussianModel",
    "GaussianSteady",
    "GaussianTrajectory",
    "gaussian_model",
    "gaussian_steady_state",
    "gaussian_evolve",
    "mode_occupations",
    "thermal_covariance",
]


class UnstableDriftError(ArithmeticError):
    pass


@dataclass(frozen=True)
class GaussianModel:
    drift: np.ndarray
    diffusion: np.ndarray
    first_moments: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.drift, float)
        D = np.asarray(self.diffusion, float)
        m = np.asarray(self.first_moments, float)
        k = A.shape[0]
        if A.shape != (k, k) or D.shape != (k, k) or m.shape != (k,) or k % 2:
            raise ValueError("drift/diffusion must be 2N x 2N and first moments length 2N")
        if np.max(np.abs(D - D.T), initial=0) > 1e-12 * max(1.0, np.max(np.abs(D))):
            raise ValueError("diffusion matrix is not symmetric")
        w = np.linalg.eigvalsh(0.5 * (D + D.T))
        if w[0] < -1e-12 * max(1.0, abs(w[-1])):
            raise ValueError("diffusion matrix is not positive semidefinite")
        for name, v in (("drift", A), ("diffusion", D), ("first_moments", m)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def n_modes(self):
        return self.drift.shape[0] // 2

    @property
    def is_stable(self):
        return bool(np.max(np.linalg.eigvals(self.drift).real) < 0)


def gaussian_model(h: np.ndarray, damping: Sequence[Sequence[tuple[float, float]]], first_moments=None) -> GaussianModel:
    """Drift/diffusion for H = sum h_jk a_j^dag a_k and per-mode thermal channels.

    ``h`` is Hermitian (rad/s); ``damping[j]`` lists (rate, occupancy) pairs
    acting on mode j.
    """
    h = np.asarray(h, complex)
    N = h.shape[0]
    if h.shape != (N, N) or np.max(np.abs(h - h.conj().T), initial=0) > 1e-12 * max(1.0, np.max(np.abs(h))):
        raise ValueError("mode matrix must be square and Hermitian")
    hr, hi = h.real, h.imag
    A = np.zeros((2 * N, 2 * N))
    # da/dt = -i h a  ->  dx/dt = hi x + hr p,  dp/dt = -hr x + hi p
    A[0::2, 0::2] = hi
    A[0::2, 1::2] = hr
    A[1::2, 0::2] = -hr
    A[1::2, 1::2] = hi
    D = np.zeros((2 * N, 2 * N))
    for j, chans in enumerate(damping):
        for rate, occ in chans:
            if rate < 0 or occ < 0:
                raise ValueError("rates and occupancies must be non-negative")
            A[2 * j, 2 * j] -= rate / 2
            A[2 * j + 1, 2 * j + 1] -= rate / 2
            D[2 * j, 2 * j] += rate * (occ + 0.5)
            D[2 * j + 1, 2 * j + 1] += rate * (occ + 0.5)
    m = np.zeros(2 * N) if first_moments is None else first_moments
    return GaussianModel(A, D, m)


def thermal_covariance(occupations: Sequence[float]) -> np.ndarray:
    return np.diag(np.repeat(np.asarray(occupations, float) + 0.5, 2))


def mode_occupations(sigma: np.ndarray, mean=None) -> np.ndarray:
    """<a^dag a> per mode, including the coherent part when ``mean`` is given."""
    n = (np.diag(sigma)[0::2] + np.diag(sigma)[1::2] - 1) / 2
    if mean is not None:
        mean = np.asarray(mean)
        n = n + (mean[0::2] ** 2 + mean[1::2] ** 2) / 2
    return n


class GaussianSteady(NamedTuple):
    covariance: np.ndarray
    occupations: np.ndarray


def gaussian_steady_state(g: GaussianModel) -> GaussianSteady:
    ev = np.linalg.eigvals(g.drift)
    worst = ev[np.argmax(ev.real)]
    if not worst.real < 0:
        raise UnstableDriftError(f"drift has eigenvalue {worst:.4g} with non-negative real part")
    sigma = solve_continuous_lyapunov(g.drift, -g.diffusion)
    sigma = 0.5 * (sigma + sigma.T)
    return GaussianSteady(sigma, mode_occupations(sigma))


class GaussianTrajectory(NamedTuple):
    times: np.ndarray
    covariances: np.ndarray  # (T, 2N, 2N)
    means: np.ndarray  # (T, 2N)

    def occupations(self):
        return np.array([mode_occupations(s, m) for s, m in zip(self.covariances, self.means)])


def gaussian_evolve(g: GaussianModel, sigma0: np.ndarray, times, mean0=None, rtol=1e-10, atol=1e-12, method="LSODA") -> GaussianTrajectory:
    """Integrate d(sigma)/dt = A sigma + sigma A^T + D and d(mean)/dt = A mean."""
    A, D = g.drift, g.diffusion
    k = A.shape[0]
    mean0 = g.first_moments if mean0 is None else np.asarray(mean0, float)
    times = np.asarray(times, float)

    def rhs(t, y):
        s = y[: k * k].reshape(k, k)
        m = y[k * k :]
        ds = A @ s + s @ A.T + D
        return np.concatenate([ds.ravel(), A @ m])

    y0 = np.concatenate([np.asarray(sigma0, float).ravel(), mean0])
    sol = solve_ivp(rhs, (times[0], times[-1]), y0, t_eval=times, method=method, rtol=rtol, atol=atol)
    if sol.status != 0:
        raise ArithmeticError(f"moment integration failed: {sol.message}")
    covs = sol.y[: k * k].T.reshape(-1, k, k)
    return GaussianTrajectory(sol.t, 0.5 * (covs + covs.transpose(0, 2, 1)), sol.y[k * k :].T)
