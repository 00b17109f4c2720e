import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nanotrap.eq4 import CutoffError, build_eq4_model, mode_matrix
from nanotrap.gaussian import (
    GaussianModel,
    UnstableDriftError,
    gaussian_evolve,
    gaussian_model,
    gaussian_steady_state,
    thermal_covariance,
)
from nanotrap.lindblad import (
    DegenerateSteadyStateError,
    Dissipator,
    MasterEquationModel,
    SolverCapError,
    evolve,
    lindblad_rhs,
    liouvillian,
    propagate,
    steady_state,
)
from nanotrap.quantum import (
    DensityState,
    Fock,
    Operator,
    SpaceLayout,
    embed,
    expectation,
    fidelity,
    ket,
    ladder_ops,
    make_state,
    product_state,
)


def _two_mode(cut=(6, 6)):
    lay = SpaceLayout(cut)
    a = embed(ladder_ops(cut[0]).lower, lay, 0)
    b = embed(ladder_ops(cut[1]).lower, lay, 1)
    return lay, a, b


def test_thermal_relaxation_closed_form():
    N, gamma, n_th, n0 = 18, 1.0, 0.5, 3
    a = ladder_ops(N).lower
    model = MasterEquationModel(Operator(a.layout, np.zeros((N, N))), [Dissipator(a, gamma, n_th)])
    rho0 = make_state((N,), Fock(n0))
    traj = evolve(model, rho0, 3.0, n_times=31)
    n = traj.expect(a.dag() @ a).real
    exact = n_th + (n0 - n_th) * np.exp(-gamma * traj.times)
    assert np.max(np.abs(n - exact)) < 1e-6


def test_propagate_matches_evolve():
    lay, a, b = _two_mode((4, 4))
    H = 0.7 * (a.dag() @ b + b.dag() @ a) + 0.3 * (a.dag() @ a)
    model = MasterEquationModel(H, [Dissipator(a, 0.2, 0.1), Dissipator(b, 0.05, 0.3)])
    rho0 = product_state([make_state((4,), Fock(1)), make_state((4,), Fock(0))])
    r1 = evolve(model, rho0, 2.0, n_times=3, monitor=False).final
    r2 = propagate(model, rho0, 2.0, monitor=False)
    assert np.max(np.abs(r1.matrix - r2.matrix)) < 1e-8


def test_liouvillian_matches_dense_rhs():
    rng = np.random.default_rng(1)
    lay, a, b = _two_mode((3, 4))
    X = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    H = Operator(lay, X + X.conj().T)
    model = MasterEquationModel(H, [Dissipator(a, 0.4, 0.7), Dissipator(b, 1.3, 0.0)])
    Y = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    rho = Y @ Y.conj().T
    rho /= np.trace(rho)
    dense = lindblad_rhs(model, rho)
    sparse = (liouvillian(model) @ rho.ravel()).reshape(12, 12)
    assert np.allclose(dense, sparse, atol=1e-12)


def test_beam_splitter_swaps_excitation():
    lay, a, b = _two_mode((3, 3))
    lam = 2.0
    H = 1j * lam * (b.dag() @ a - a.dag() @ b)
    model = MasterEquationModel(Operator(lay, 0.5 * (H.matrix + H.matrix.conj().T)))
    rho = DensityState.from_ket(lay, ket(lay, Fock((1, 0))))
    out = propagate(model, rho, math.pi / (2 * lam))
    assert fidelity(out, ket(lay, Fock((0, 1)))) == pytest.approx(1.0, abs=1e-10)


def _random_model(seed, cut=(3, 3)):
    rng = np.random.default_rng(seed)
    lay, a, b = _two_mode(cut)
    d = lay.dim
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    H = Operator(lay, 0.5 * (X + X.conj().T))
    rates = rng.uniform(0.0, 2.0, size=2)
    occ = rng.uniform(0.0, 1.0, size=2)
    diss = [Dissipator(a, rates[0], occ[0]), Dissipator(b, rates[1], occ[1])]
    Y = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = Y @ Y.conj().T
    return MasterEquationModel(H, diss), DensityState(lay, rho / np.trace(rho))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), t=st.floats(0.05, 3.0))
def test_trace_hermiticity_positivity(seed, t):
    model, rho0 = _random_model(seed)
    traj = evolve(model, rho0, t, n_times=6, monitor=False)
    for s in traj.states:
        m = s.matrix
        assert abs(np.trace(m) - 1) < 1e-9
        assert np.max(np.abs(m - m.conj().T)) < 1e-12
        assert np.linalg.eigvalsh(m)[0] > -1e-9
    assert traj.trace_drift < 1e-8


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), p=st.floats(0.0, 1.0))
def test_propagation_is_linear(seed, p):
    model, rho1 = _random_model(seed)
    _, rho2 = _random_model(seed + 1)
    mix = DensityState(rho1.layout, p * rho1.matrix + (1 - p) * rho2.matrix)
    lhs = propagate(model, mix, 0.8, monitor=False).matrix
    rhs = p * propagate(model, rho1, 0.8, monitor=False).matrix + (1 - p) * propagate(model, rho2, 0.8, monitor=False).matrix
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_steady_state_thermal_single_mode():
    N, n_th = 20, 0.4
    a = ladder_ops(N).lower
    model = MasterEquationModel(Operator(a.layout, np.zeros((N, N))), [Dissipator(a, 1.0, n_th)])
    rho = steady_state(model)
    x = n_th / (1 + n_th)
    p = (1 - x) * x ** np.arange(N)
    assert np.allclose(np.diag(rho.matrix).real, p / p.sum(), atol=1e-12)


def test_steady_state_degenerate_without_dissipation():
    lay, a, b = _two_mode((3, 3))
    with pytest.raises(DegenerateSteadyStateError):
        steady_state(MasterEquationModel(a.dag() @ a + b.dag() @ b))


def test_steady_state_cap():
    lay, a, b = _two_mode((25, 25))
    with pytest.raises(SolverCapError, match="Gaussian"):
        steady_state(MasterEquationModel(a.dag() @ a, [Dissipator(a, 1.0)]))


class _Eff:
    """Minimal stand-in for an EffectiveModel in scaled units."""

    def __init__(self, lam, gamma_a, Gamma, n_B, gamma_m=0.0, n_f=0.0):
        self.lambda_rate, self.gamma_a, self.Gamma_nu, self.n_B = lam, gamma_a, Gamma, n_B
        self.gamma_m, self.n_f = gamma_m, n_f


def test_sparse_steady_state_matches_gaussian():
    eff = _Eff(lam=3.0, gamma_a=4.0, Gamma=1.0, n_B=0.5, gamma_m=0.2)
    model = build_eq4_model(eff, "fock", cutoffs=(7, 8))  # Liouvillian side 3136 > dense limit
    rho = steady_state(model)
    a, b = model.dissipators[0].op, model.dissipators[-1].op
    occ = gaussian_steady_state(build_eq4_model(eff, "gaussian")).occupations
    assert expectation(rho, a.dag() @ a).real == pytest.approx(occ[0], rel=2e-3)
    assert expectation(rho, b.dag() @ b).real == pytest.approx(occ[1], rel=2e-3)


def test_fock_and_gaussian_trajectories_agree():
    eff = _Eff(lam=2.0, gamma_a=3.0, Gamma=0.5, n_B=0.3)
    cut = (9, 9)
    model = build_eq4_model(eff, "fock", cutoffs=cut)
    rho0 = product_state([make_state((9,), Fock(1)), make_state((9,), Fock(2))])
    traj = evolve(model, rho0, 4.0, n_times=41)
    a, b = model.dissipators[0].op, model.dissipators[-1].op
    g = build_eq4_model(eff, "gaussian")
    # Fock states are not Gaussian, but second moments obey the same linear ODE
    sigma0 = thermal_covariance([1.0, 2.0])
    gt = gaussian_evolve(g, sigma0, traj.times).occupations()
    assert np.max(np.abs(traj.expect(a.dag() @ a).real - gt[:, 0])) < 1e-5
    assert np.max(np.abs(traj.expect(b.dag() @ b).real - gt[:, 1])) < 1e-5


def test_lyapunov_matches_long_integration():
    eff = _Eff(lam=5.0, gamma_a=2.0, Gamma=0.05, n_B=20.0, gamma_m=0.1, n_f=0.01)
    g = build_eq4_model(eff, "gaussian")
    steady = gaussian_steady_state(g)
    slow = np.min(-np.linalg.eigvals(g.drift).real)
    t_end = 50 / slow
    traj = gaussian_evolve(g, thermal_covariance([0.0, eff.n_B]), [0.0, t_end], method="LSODA")
    assert np.max(np.abs(traj.covariances[-1] - steady.covariance)) / np.max(np.abs(steady.covariance)) < 1e-6


def test_gaussian_model_validation():
    with pytest.raises(ValueError):
        GaussianModel(np.zeros((2, 2)), np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros(2))
    with pytest.raises(ValueError):
        GaussianModel(np.zeros((2, 2)), -np.eye(2), np.zeros(2))
    undamped = gaussian_model(mode_matrix(1.0), [[], []])
    assert not undamped.is_stable
    with pytest.raises(UnstableDriftError):
        gaussian_steady_state(undamped)


def test_fock_cutoff_refusal():
    eff = _Eff(lam=1.0, gamma_a=0.1, Gamma=1.0, n_B=50.0)
    with pytest.raises(CutoffError, match="Gaussian"):
        build_eq4_model(eff, "fock", cutoffs=(12, 12))
