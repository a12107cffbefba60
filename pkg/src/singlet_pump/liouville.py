"""Quantum channels and Lindblad generators as dense superoperators.

Vectorization stacks columns: ``vec(A X B) = (B^T kron A) vec(X)``.  The
same convention is used everywhere in the package.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import config
from .linalg import (DensityMatrix, DimensionError, HilbertSpace, Operator,
                     eig_general, expm_array)


class NotCPTPError(ValueError):
    """Raised when a unitary or Kraus set fails its completeness check."""


class SuperOperator:
    """Linear map on operators of a ``d``-dimensional space, as a d^2 x d^2 matrix."""

    __slots__ = ("space", "data")

    def __init__(self, data, space: HilbertSpace | Sequence[int]):
        space = space if isinstance(space, HilbertSpace) else HilbertSpace(space)
        arr = np.array(data, dtype=complex, copy=True)
        d2 = space.size ** 2
        if arr.shape != (d2, d2):
            raise DimensionError(f"superoperator on dims {space.dims} must be {d2}x{d2}, got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("SuperOperator is immutable")

    @property
    def dim(self) -> int:
        return self.space.size

    def __matmul__(self, other):
        if isinstance(other, SuperOperator):
            return compose(self, other)
        return NotImplemented

    def trace_dual_residual(self) -> float:
        """max |S^dagger(I) - I|; zero for a trace-preserving map."""
        d = self.dim
        dual = devectorize(self.data.conj().T @ vectorize(np.eye(d)))
        return float(np.max(np.abs(dual - np.eye(d))))

    def choi(self) -> np.ndarray:
        """Choi matrix sum_ij |i><j| (x) S(|i><j|), with the input factor first."""
        d = self.dim
        c = np.zeros((d * d, d * d), dtype=complex)
        for j in range(d):
            for i in range(d):
                e = np.zeros((d, d))
                e[i, j] = 1.0
                block = devectorize(self.data @ vectorize(e))
                c[i * d:(i + 1) * d, j * d:(j + 1) * d] = block
        return c

    def is_cptp(self, tp_tol: float = config.KRAUS_TOL, cp_tol: float = config.CHOI_TOL) -> bool:
        if self.trace_dual_residual() > tp_tol:
            return False
        c = self.choi()
        return float(np.linalg.eigvalsh(0.5 * (c + c.conj().T)).min()) >= -cp_tol

    @classmethod
    def identity(cls, space) -> "SuperOperator":
        space = space if isinstance(space, HilbertSpace) else HilbertSpace(space)
        return cls(np.eye(space.size ** 2), space)


@dataclass(frozen=True)
class KrausChannel:
    elements: tuple[Operator, ...]

    def __post_init__(self):
        els = tuple(self.elements)
        if not els:
            raise ValueError("a Kraus channel needs at least one element")
        space = els[0].space
        for e in els[1:]:
            if e.space != space:
                raise DimensionError("Kraus elements act on different spaces")
        object.__setattr__(self, "elements", els)

    @property
    def space(self) -> HilbertSpace:
        return self.elements[0].space

    def completeness_residual(self) -> float:
        d = self.space.size
        acc = sum(e.data.conj().T @ e.data for e in self.elements)
        return float(np.max(np.abs(acc - np.eye(d))))


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian (angular frequency) and jump operators (units of sqrt(rate))."""

    hamiltonian: Operator
    jumps: tuple[Operator, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "jumps", tuple(self.jumps))
        if not self.hamiltonian.is_hermitian():
            raise ValueError("Lindblad Hamiltonian is not Hermitian")
        for j in self.jumps:
            if j.space != self.hamiltonian.space:
                raise DimensionError("jump operator space differs from Hamiltonian space")


@dataclass
class SpectralResult:
    """Spectrum of a discrete map or generator plus its steady state.

    ``eigenvalues`` are sorted by descending modulus (``kind="discrete"``)
    or descending real part (``kind="generator"``).  ``gap`` is ``-ln|l2|``
    or ``-Re l2`` respectively.  When the top eigenvalue is degenerate,
    ``degenerate`` is set and ``steady_states`` holds one state per top
    eigenvector; ``steady_state`` is then the first of them.
    """

    kind: str
    eigenvalues: np.ndarray
    steady_state: DensityMatrix
    gap: float
    degenerate: bool = False
    steady_states: list = field(default_factory=list)

    @property
    def second(self) -> complex:
        """Eigenvalue setting the convergence rate."""
        return complex(self.eigenvalues[1]) if len(self.eigenvalues) > 1 else 0j

    def to_json(self) -> str:
        rho = self.steady_state
        return json.dumps({
            "kind": self.kind,
            "eigenvalues": [{"re": float(z.real), "im": float(z.imag)} for z in self.eigenvalues],
            "gap": float(self.gap),
            "degenerate": bool(self.degenerate),
            "steady_state": {"dims": list(rho.dims), "re": rho.data.real.tolist(),
                             "im": rho.data.imag.tolist()},
        })


# ---------------------------------------------------------------------------

def vectorize(rho) -> np.ndarray:
    """Column-stacked vector of a matrix (Operator or ndarray)."""
    a = rho.data if isinstance(rho, Operator) else np.asarray(rho)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"cannot vectorize shape {a.shape}")
    return a.reshape(-1, order="F")


def devectorize(v, dims: Sequence[int] | None = None):
    """Inverse of :func:`vectorize`.  Returns an ndarray, or an Operator if dims is given."""
    v = np.asarray(v)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionError(f"vector of length {v.size} is not a vectorized square matrix")
    m = v.reshape(d, d, order="F")
    return m if dims is None else Operator(m, dims)


def _check_dense(space: HilbertSpace) -> None:
    if space.size > config.DENSE_SUPEROP_MAX_D:
        raise DimensionError(
            f"dense superoperators are capped at d={config.DENSE_SUPEROP_MAX_D}, got d={space.size}")


def superop_from_unitary(u: Operator, tol: float = config.UNITARY_TOL) -> SuperOperator:
    _check_dense(u.space)
    if not u.is_unitary(tol):
        raise NotCPTPError("operator is not unitary")
    return SuperOperator(np.kron(u.data.conj(), u.data), u.space)


def superop_from_kraus(channel: KrausChannel | Sequence[Operator],
                       tol: float = config.KRAUS_TOL) -> SuperOperator:
    if not isinstance(channel, KrausChannel):
        channel = KrausChannel(tuple(channel))
    _check_dense(channel.space)
    res = channel.completeness_residual()
    if res > tol:
        raise NotCPTPError(f"Kraus set incomplete (residual {res:.2e})")
    s = sum(np.kron(e.data.conj(), e.data) for e in channel.elements)
    return SuperOperator(s, channel.space)


def compose(s2: SuperOperator, s1: SuperOperator) -> SuperOperator:
    """Map applying ``s1`` first, then ``s2``."""
    if s1.space != s2.space:
        raise DimensionError("cannot compose superoperators on different spaces")
    return SuperOperator(s2.data @ s1.data, s1.space)


def apply(s: SuperOperator, rho: Operator) -> DensityMatrix:
    """Apply a map to a state, cleaning round-off above a small drift threshold."""
    if rho.space != s.space:
        raise DimensionError("state and superoperator live on different spaces")
    out = devectorize(s.data @ vectorize(rho))
    if np.max(np.abs(out - out.conj().T)) > config.APPLY_DRIFT_TOL:
        out = 0.5 * (out + out.conj().T)
    tr = np.trace(out).real
    if abs(tr - 1.0) > config.APPLY_DRIFT_TOL:
        out = out / tr
    return DensityMatrix(out, rho.space, validate=False)


def _to_state(v: np.ndarray, space: HilbertSpace) -> DensityMatrix:
    m = devectorize(v)
    m = 0.5 * (m + m.conj().T)
    tr = np.trace(m).real
    if abs(tr) < 1e-14:
        # traceless top eigenvector; return its positive part, normalized
        w, u = np.linalg.eigh(m)
        m = (u * np.clip(w, 0, None)) @ u.conj().T
        tr = np.trace(m).real
    return DensityMatrix(m / tr, space, validate=False)


def spectral_analysis(s, kind: str = "discrete", *, method: str = "qr",
                      tie_tol: float = config.DEGENERACY_TOL) -> SpectralResult:
    """Eigen-decompose a cycle map or a generator and extract its steady state."""
    if kind not in ("discrete", "generator"):
        raise ValueError(f"kind must be 'discrete' or 'generator', got {kind!r}")
    space = s.space
    eig = eig_general(s.data, method=method)
    w, v = eig.values, eig.vectors
    key = -np.abs(w) if kind == "discrete" else -w.real
    order = np.lexsort((np.abs(w.imag), key))
    w, v = w[order], v[:, order]
    if kind == "discrete":
        top = np.abs(w[0])
        tied = np.abs(np.abs(w) - top) <= tie_tol
        rest = np.abs(w[~tied])
        second = rest[0] if rest.size else 0.0
        gap = np.inf if second == 0 else float(-np.log(second))
    else:
        top = w[0].real
        tied = np.abs(w.real - top) <= tie_tol
        rest = w[~tied].real
        gap = float(-rest[0]) if rest.size else np.inf
    n_top = int(tied.sum())
    states = [_to_state(v[:, k], space) for k in range(n_top)]
    return SpectralResult(kind=kind, eigenvalues=w, steady_state=states[0], gap=gap,
                          degenerate=n_top > 1, steady_states=states)


def liouvillian(model: LindbladModel) -> SuperOperator:
    """Dense generator of the Lindblad master equation."""
    space = model.hamiltonian.space
    _check_dense(space)
    d = space.size
    ident = np.eye(d)
    h = model.hamiltonian.data
    gen = -1j * (np.kron(ident, h) - np.kron(h.T, ident))
    for jump in model.jumps:
        l = jump.data
        ldl = l.conj().T @ l
        gen += np.kron(l.conj(), l) - 0.5 * np.kron(ident, ldl) - 0.5 * np.kron(ldl.T, ident)
    return SuperOperator(gen, space)


def propagator(generator: SuperOperator, t: float) -> SuperOperator:
    """exp(L t) for a dense generator."""
    return SuperOperator(expm_array(generator.data * t), generator.space)
