"""Dense operators and states on small composite Hilbert spaces.

A factor of dimension 2 is a two-level internal state (index 0 = up,
index 1 = down); any other factor is a truncated Fock space.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import reduce
from typing import NamedTuple, Sequence, Union

import numpy as np

__all__ = [
    "TruncationWarning",
    "SpaceLayout",
    "Operator",
    "DensityState",
    "Ladder",
    "ladder_ops",
    "pauli",
    "identity",
    "embed",
    "Fock",
    "Superposition",
    "Coherent",
    "Thermal",
    "ket",
    "make_state",
    "product_state",
    "expectation",
    "fidelity",
    "purity",
    "partial_trace",
    "top_level_population",
    "check_truncation",
]

TOP_LEVEL_LIMIT = 1e-4


class TruncationWarning(UserWarning):
    """Population near the Fock cutoff is large enough to bias results."""


@dataclass(frozen=True)
class SpaceLayout:
    factor_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError("factor dimensions must be positive integers")
        object.__setattr__(self, "factor_dims", dims)

    @property
    def dim(self):
        return math.prod(self.factor_dims)

    def __len__(self):
        return len(self.factor_dims)

    def __getitem__(self, i):
        return self.factor_dims[i]


def _layout(x) -> SpaceLayout:
    return x if isinstance(x, SpaceLayout) else SpaceLayout(tuple(x))


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Operator:
    layout: SpaceLayout
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "layout", _layout(self.layout))
        m = _frozen(self.matrix)
        d = self.layout.dim
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match layout dimension {d}")
        object.__setattr__(self, "matrix", m)

    def dag(self):
        return Operator(self.layout, self.matrix.conj().T)

    def _check(self, other):
        if other.layout != self.layout:
            raise ValueError("layout mismatch")

    def __matmul__(self, other):
        self._check(other)
        return Operator(self.layout, self.matrix @ other.matrix)

    def __add__(self, other):
        self._check(other)
        return Operator(self.layout, self.matrix + other.matrix)

    def __sub__(self, other):
        self._check(other)
        return Operator(self.layout, self.matrix - other.matrix)

    def __mul__(self, c):
        return Operator(self.layout, c * self.matrix)

    __rmul__ = __mul__

    def __neg__(self):
        return Operator(self.layout, -self.matrix)

    def is_hermitian(self, tol=1e-10):
        m = self.matrix
        return np.max(np.abs(m - m.conj().T), initial=0.0) <= tol * max(1.0, np.max(np.abs(m), initial=0.0))


@dataclass(frozen=True, eq=False)
class DensityState:
    layout: SpaceLayout
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "layout", _layout(self.layout))
        m = _frozen(self.matrix)
        d = self.layout.dim
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match layout dimension {d}")
        if abs(np.trace(m) - 1) > 1e-10:
            raise ValueError(f"trace {np.trace(m).real:.12g} != 1")
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        lo = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
        if lo < -1e-8:
            raise ValueError(f"density matrix has negative eigenvalue {lo:.3g}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_ket(cls, layout, psi):
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(layout, np.outer(psi, psi.conj()))


class Ladder(NamedTuple):
    lower: Operator
    raising: Operator
    number: Operator


def ladder_ops(cutoff: int) -> Ladder:
    if cutoff < 2:
        raise ValueError("Fock cutoff must be >= 2")
    a = np.diag(np.sqrt(np.arange(1, cutoff)), 1)
    lay = SpaceLayout((cutoff,))
    lower = Operator(lay, a)
    raising = lower.dag()
    return Ladder(lower, raising, raising @ lower)


def pauli():
    """(sigma_plus, sigma_minus, sigma_z, sigma_x) with |up> = index 0."""
    lay = SpaceLayout((2,))
    sp = Operator(lay, [[0, 1], [0, 0]])
    sz = Operator(lay, [[1, 0], [0, -1]])
    sx = Operator(lay, [[0, 1], [1, 0]])
    return sp, sp.dag(), sz, sx


def identity(layout) -> Operator:
    layout = _layout(layout)
    return Operator(layout, np.eye(layout.dim))


def embed(op: Operator, layout, slot: int) -> Operator:
    """kron(I, ..., op, ..., I) with ``op`` acting on factor ``slot``."""
    layout = _layout(layout)
    m = op.matrix if isinstance(op, Operator) else np.asarray(op)
    if not 0 <= slot < len(layout):
        raise IndexError(f"slot {slot} out of range")
    if m.shape != (layout[slot], layout[slot]):
        raise ValueError(f"operator of dimension {m.shape[0]} cannot act on factor of dimension {layout[slot]}")
    mats = [np.eye(d) if i != slot else m for i, d in enumerate(layout.factor_dims)]
    return Operator(layout, reduce(np.kron, mats))


# state specifications -------------------------------------------------------

class Fock(NamedTuple):
    n: Union[int, tuple]


class Superposition(NamedTuple):
    terms: Sequence  # (amplitude, label) with label an int or per-factor tuple


class Coherent(NamedTuple):
    alpha: complex


class Thermal(NamedTuple):
    nbar: float


StateSpec = Union[Fock, Superposition, Coherent, Thermal]

_TAIL_WARN = 1e-6


def _label_index(layout: SpaceLayout, label):
    label = (label,) if np.isscalar(label) else tuple(label)
    if len(label) != len(layout):
        raise ValueError(f"basis label {label} does not match layout {layout.factor_dims}")
    for n, d in zip(label, layout.factor_dims):
        if not 0 <= n < d:
            raise ValueError(f"Fock level {n} outside cutoff {d}")
    return int(np.ravel_multi_index(label, layout.factor_dims))


def ket(layout, spec: StateSpec) -> np.ndarray:
    """Normalized state vector for a pure specification."""
    layout = _layout(layout)
    if isinstance(spec, Fock):
        v = np.zeros(layout.dim, complex)
        v[_label_index(layout, spec.n)] = 1
        return v
    if isinstance(spec, Superposition):
        v = np.zeros(layout.dim, complex)
        for amp, label in spec.terms:
            v[_label_index(layout, label)] += amp
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("superposition amplitudes are all zero")
        return v / norm
    if isinstance(spec, Coherent):
        if len(layout) != 1:
            raise ValueError("coherent state needs a single-mode layout")
        N = layout.dim
        n = np.arange(N)
        logfact = np.array([math.lgamma(k + 1) for k in n])
        alpha = complex(spec.alpha)
        amp = np.exp(-abs(alpha) ** 2 / 2 - 0.5 * logfact) * alpha**n if alpha != 0 else (n == 0).astype(complex)
        kept = float(np.sum(np.abs(amp) ** 2))
        if 1 - kept > _TAIL_WARN:
            warnings.warn(f"coherent state truncated: {1 - kept:.2e} of population above cutoff", TruncationWarning, stacklevel=2)
        return amp / math.sqrt(kept)
    raise TypeError(f"{type(spec).__name__} is not a pure state specification")


def make_state(layout, spec: StateSpec) -> DensityState:
    layout = _layout(layout)
    if isinstance(spec, Thermal):
        if len(layout) != 1:
            raise ValueError("thermal state needs a single-mode layout")
        nbar = float(spec.nbar)
        if nbar < 0:
            raise ValueError("mean occupation must be non-negative")
        N = layout.dim
        if nbar == 0:
            p = (np.arange(N) == 0).astype(float)
        else:
            x = nbar / (nbar + 1)
            p = (1 - x) * x ** np.arange(N)
            tail = x**N
            if tail > _TAIL_WARN:
                warnings.warn(f"thermal state truncated: {tail:.2e} of population above cutoff", TruncationWarning, stacklevel=2)
            p = p / p.sum()
        return DensityState(layout, np.diag(p))
    return DensityState.from_ket(layout, ket(layout, spec))


def product_state(specs_or_states: Sequence, layout=None) -> DensityState:
    """Tensor product of single-factor states, given as DensityStates or (dim, spec)."""
    mats, dims = [], []
    for item in specs_or_states:
        if isinstance(item, DensityState):
            st = item
        else:
            dim, spec = item
            st = make_state((dim,), spec)
        mats.append(st.matrix)
        dims.extend(st.layout.factor_dims)
    rho = reduce(np.kron, mats)
    lay = _layout(layout) if layout is not None else SpaceLayout(tuple(dims))
    return DensityState(lay, rho)


def _mat(x):
    return x.matrix if isinstance(x, (Operator, DensityState)) else np.asarray(x)


def expectation(state: DensityState, op: Operator) -> complex:
    if isinstance(op, Operator) and op.layout != state.layout:
        raise ValueError("layout mismatch")
    # Tr(rho A) without forming the product
    return complex(np.sum(state.matrix.T * _mat(op)))


def _psd_sqrt(m):
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def fidelity(state: DensityState, target) -> float:
    """Uhlmann fidelity (squared convention); ``target`` may be a ket or a DensityState."""
    if isinstance(target, DensityState):
        if target.layout != state.layout:
            raise ValueError("layout mismatch")
        sq = _psd_sqrt(state.matrix)
        inner = sq @ target.matrix @ sq
        w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
        f = float(np.sum(np.sqrt(np.clip(w, 0, None))) ** 2)
    else:
        psi = np.asarray(target, dtype=complex)
        if psi.shape != (state.layout.dim,):
            raise ValueError("layout mismatch")
        psi = psi / np.linalg.norm(psi)
        f = float(np.real(psi.conj() @ state.matrix @ psi))
    return min(max(f, 0.0), 1.0)


def purity(state: DensityState) -> float:
    m = state.matrix
    return float(np.real(np.sum(m * m.T)))


def partial_trace(state: DensityState, keep: Sequence[int]) -> DensityState:
    dims = state.layout.factor_dims
    keep = sorted(keep)
    n = len(dims)
    t = state.matrix.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = [letters[i] for i in range(n)]
    col = [letters[i + n] if i in keep else letters[i] for i in range(n)]
    out = [letters[i] for i in keep] + [letters[i + n] for i in keep]
    r = np.einsum("".join(row) + "".join(col) + "->" + "".join(out), t)
    kd = tuple(dims[i] for i in keep)
    d = math.prod(kd)
    m = r.reshape(d, d)
    m = 0.5 * (m + m.conj().T)
    return DensityState(SpaceLayout(kd), m / np.trace(m).real)


def top_level_population(rho: np.ndarray, layout: SpaceLayout, slot: int) -> float:
    dims = layout.factor_dims
    diag = np.real(np.diag(_mat(rho))).reshape(dims)
    return float(np.sum(np.take(diag, dims[slot] - 1, axis=slot)))


def check_truncation(rho, layout: SpaceLayout, limit=TOP_LEVEL_LIMIT) -> list[int]:
    """Warn (and return the slots) where the top Fock level holds > ``limit``."""
    bad = [i for i, d in enumerate(layout.factor_dims) if d != 2 and top_level_population(rho, layout, i) > limit]
    if bad:
        warnings.warn(f"top Fock level population above {limit:g} in slot(s) {bad}", TruncationWarning, stacklevel=2)
    return bad
