"""Clamped-clamped Euler-Bernoulli flexural modes of the electrodes.

Coordinates are centred: the electrode occupies y in [-L0, L0]. Mode n has
dimensionless root r_n = q_n * 2L0, a solution of cos(r) cosh(r) = 1.
Odd n are symmetric about y = 0, even n antisymmetric. Shapes are
normalized so that the integral of u_n^2 over the electrode equals 2L0,
which makes the modal mass equal to the electrode mass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .params import DeviceParams

__all__ = [
    "BeamMode",
    "QuadratureError",
    "clamped_mode_roots",
    "mode_frequency",
    "beam_mode",
    "mode_shape_eval",
    "integrate",
    "peak_effective_mass_fraction",
]


class QuadratureError(ArithmeticError):
    pass


def _characteristic(r):
    # same zeros as cos(r) cosh(r) - 1, but O(1) in size
    return math.cos(r) - 1.0 / math.cosh(r)


@lru_cache(maxsize=None)
def _root(n: int) -> float:
    # the n-th nonzero root sits within a hair of (n + 1/2) pi
    a, b = n * math.pi, (n + 1) * math.pi
    return brentq(_characteristic, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def clamped_mode_roots(n_max: int) -> list[float]:
    """First ``n_max`` positive roots of cos(r) cosh(r) = 1."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return [_root(n) for n in range(1, n_max + 1)]


_GL_NODES = np.polynomial.legendre.leggauss(16)


def _gauss_panels(f, a, b, panels):
    x0, w0 = _GL_NODES
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    x = (mid + half * x0).ravel()
    w = (half * w0).ravel()
    return float(np.dot(w, f(x)))


def integrate(f, a, b, rtol=1e-12, atol=0.0, panels=8, max_panels=1 << 14):
    """Composite 16-point Gauss-Legendre quadrature with panel doubling.

    ``f`` must accept a numpy array. Doubling stops when two successive
    estimates agree within ``max(atol, rtol * |I|)``; otherwise
    QuadratureError is raised.
    """
    prev = _gauss_panels(f, a, b, panels)
    while panels < max_panels:
        panels *= 2
        cur = _gauss_panels(f, a, b, panels)
        if abs(cur - prev) <= max(atol, rtol * abs(cur)):
            return cur
        prev = cur
    raise QuadratureError(f"no convergence after {panels} panels")


@dataclass(frozen=True)
class BeamMode:
    index: int
    root: float
    wavevector: float  # 1/m
    omega: float  # rad/s
    parity: str  # "even" | "odd"
    norm_const: float
    half_length: float

    def shape(self, y):
        """Normalized displacement profile u_n(y); |y| <= L0."""
        y = np.asarray(y, dtype=float)
        if np.any(np.abs(y) > self.half_length * (1 + 1e-12)):
            raise ValueError("y outside the electrode [-L0, L0]")
        return self.norm_const * _raw_shape(self.parity, self.wavevector, self.half_length, y)

    def slope(self, y):
        y = np.asarray(y, dtype=float)
        q, L = self.wavevector, self.half_length
        qy, qL = q * y, q * L
        if self.parity == "even":
            d = -np.sin(qy) - np.sinh(qy) / np.cosh(qL) * math.cos(qL)
        else:
            d = np.cos(qy) - np.cosh(qy) / np.sinh(qL) * math.sin(qL)
        return self.norm_const * q * d

    @property
    def center_value(self):
        return float(self.shape(0.0))


def _raw_shape(parity, q, L, y):
    # cosh/sinh of q y divided by those of q L stays bounded for large n
    qy, qL = q * y, q * L
    if parity == "even":
        return np.cos(qy) - np.cosh(qy) / np.cosh(qL) * math.cos(qL)
    return np.sin(qy) - np.sinh(qy) / np.sinh(qL) * math.sin(qL)


def _flexural_speed(params: DeviceParams):
    """sqrt(E I2 / mu) in m^2/s, mu being the linear mass density."""
    return math.sqrt(params.youngs_modulus * params.second_moment / params.linear_density)


def mode_frequency(params: DeviceParams, n: int) -> float:
    """Angular frequency of flexural mode ``n`` (rad/s)."""
    q = _root(n) / (2.0 * params.half_length)
    return _flexural_speed(params) * q * q


@lru_cache(maxsize=256)
def _norm(parity, root):
    # normalization depends only on the dimensionless root; use L = 1
    q = root / 2.0
    sq = integrate(lambda y: _raw_shape(parity, q, 1.0, y) ** 2, -1.0, 1.0, rtol=1e-14)
    return math.sqrt(2.0 / sq)


def beam_mode(params: DeviceParams, n: int) -> BeamMode:
    if n < 1:
        raise ValueError("mode index must be >= 1")
    r = _root(n)
    parity = "even" if n % 2 == 1 else "odd"
    return BeamMode(
        index=n,
        root=r,
        wavevector=r / (2.0 * params.half_length),
        omega=mode_frequency(params, n),
        parity=parity,
        norm_const=_norm(parity, r),
        half_length=params.half_length,
    )


def mode_shape_eval(params: DeviceParams, n: int, y):
    """u_n(y) for the electrode described by ``params``."""
    return beam_mode(params, n).shape(y)


def peak_effective_mass_fraction(mode: BeamMode) -> float:
    """Effective mass / electrode mass when the shape is rescaled to unit peak."""
    return 1.0 / mode.center_value**2
