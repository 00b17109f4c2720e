"""Sympathetic cooling of the resonator through the laser-cooled ion."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from ..coupling import EffectiveModel
from ..eq4 import CutoffError, build_eq4_model
from ..gaussian import gaussian_steady_state
from ..lindblad import steady_state
from ..quantum import expectation

__all__ = [
    "CoolingResult",
    "cooling_closed_form",
    "closed_form_bdagb",
    "minimum_formula",
    "cooling_simulate",
    "optimize_cooling",
    "cooling_sweep",
]


@dataclass(frozen=True)
class CoolingResult:
    steady_bdagb: float
    closed_form_bdagb: float
    gamma_eff: float
    n_f_eff: float
    method: str
    min_formula_bdagb: float = math.nan

    @property
    def relative_gap(self):
        return abs(self.steady_bdagb - self.closed_form_bdagb) / self.closed_form_bdagb


def closed_form_bdagb(lam, gamma_eff, Gamma, n_B, n_f_eff):
    """Stationary resonator occupation of the two-mode model."""
    num = (Gamma * gamma_eff * (gamma_eff + Gamma) + 4 * Gamma * lam**2) * n_B + 4 * gamma_eff * lam**2 * n_f_eff
    den = (Gamma + gamma_eff) * (gamma_eff * Gamma + 4 * lam**2)
    if den == 0:
        return n_B
    return num / den


def minimum_formula(eff: EffectiveModel) -> float:
    """Optimum at gamma_a = 2 lambda; k_B T/(hbar Q) equals Gamma_nu * n_B."""
    lam, G = eff.lambda_rate, eff.Gamma_nu
    return G * eff.n_B * (4 * lam + G) / (2 * lam + G) ** 2


def _effective(eff, gamma_a):
    ga = eff.gamma_a if gamma_a is None else gamma_a
    g_eff = ga + eff.gamma_m
    n_eff = (ga * eff.n_f + eff.gamma_m * eff.n_B) / g_eff if g_eff > 0 else 0.0
    return g_eff, n_eff


def cooling_closed_form(eff: EffectiveModel, gamma_a: float | None = None) -> CoolingResult:
    g_eff, n_eff = _effective(eff, gamma_a)
    val = closed_form_bdagb(eff.lambda_rate, g_eff, eff.Gamma_nu, eff.n_B, n_eff)
    return CoolingResult(val, val, g_eff, n_eff, "closed_form", minimum_formula(eff))


def cooling_simulate(eff: EffectiveModel, method: str = "gaussian", gamma_a: float | None = None, cutoffs=(12, 12)) -> CoolingResult:
    """Steady resonator occupation from the master equation."""
    ref = cooling_closed_form(eff, gamma_a)
    if method == "closed_form":
        return ref
    if method == "gaussian":
        g = build_eq4_model(eff, "gaussian", gamma_a=gamma_a)
        val = float(gaussian_steady_state(g).occupations[1])
    elif method == "fock":
        if eff.n_B > 3:
            raise CutoffError(f"Fock path limited to n_B <= 3 (got {eff.n_B:.3g}); use the Gaussian path")
        model = build_eq4_model(eff, "fock", cutoffs=cutoffs, gamma_a=gamma_a)
        rho = steady_state(model)
        b = model.dissipators[-1].op
        val = float(expectation(rho, b.dag() @ b).real)
    else:
        raise ValueError(f"unknown method {method!r}")
    return replace(ref, steady_bdagb=val, method=method)


def cooling_sweep(eff: EffectiveModel, gammas, method="closed_form") -> np.ndarray:
    return np.array([cooling_simulate(eff, method, g).steady_bdagb for g in gammas])


def optimize_cooling(eff: EffectiveModel, gamma_range: tuple[float, float], grid: int = 65) -> tuple[float, float]:
    """Golden-section minimization of the closed form over gamma_a."""
    lo, hi = gamma_range
    if not 0 < lo < hi:
        raise ValueError("gamma range must satisfy 0 < lo < hi")

    def f(s):
        return cooling_closed_form(eff, math.exp(s)).steady_bdagb

    s = np.linspace(math.log(lo), math.log(hi), grid)
    vals = np.array([f(x) for x in s])
    k = int(np.argmin(vals))
    if k == 0 or k == grid - 1:
        raise ValueError("no interior minimum inside the gamma range")
    res = minimize_scalar(f, bracket=(s[k - 1], s[k], s[k + 1]), method="golden", tol=1e-10)
    return math.exp(res.x), float(res.fun)
