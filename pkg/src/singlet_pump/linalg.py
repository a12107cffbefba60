"""Dense complex linear algebra: tagged operators, Kronecker products,
partial traces, the matrix exponential and a general eigensolver.

Operators carry the subsystem dimensions of the space they act on so that
tensor products and partial traces can be checked.  Data arrays are made
read-only on construction; every operation returns a new object.
"""
from __future__ import annotations

import json
from math import prod
from typing import NamedTuple, Sequence

import numpy as np

from . import config


class DimensionError(ValueError):
    """Raised for incompatible or oversized Hilbert spaces."""


class NonFiniteError(ValueError):
    """Raised when an input matrix contains NaN or inf."""


class EigenConvergenceError(RuntimeError):
    """Raised when the QR iteration fails to deflate within its sweep cap."""


class HilbertSpace:
    """Ordered list of subsystem dimensions, e.g. ``(3, 3)`` for two qutrits."""

    __slots__ = ("dims",)

    def __init__(self, dims: Sequence[int], max_dim: int | None = None):
        dims = tuple(int(d) for d in dims)
        if not dims:
            raise DimensionError("a Hilbert space needs at least one subsystem")
        if any(d < 2 for d in dims):
            raise DimensionError(f"every subsystem dimension must be >= 2, got {dims}")
        cap = config.MAX_DIM if max_dim is None else max_dim
        if prod(dims) > cap:
            raise DimensionError(f"total dimension {prod(dims)} exceeds cap {cap}")
        object.__setattr__(self, "dims", dims)

    def __setattr__(self, name, value):
        raise AttributeError("HilbertSpace is immutable")

    @property
    def size(self) -> int:
        return prod(self.dims)

    def __len__(self) -> int:
        return len(self.dims)

    def __eq__(self, other) -> bool:
        return isinstance(other, HilbertSpace) and self.dims == other.dims

    def __hash__(self) -> int:
        return hash(self.dims)

    def __repr__(self) -> str:
        return f"HilbertSpace({list(self.dims)})"


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex, copy=True)
    arr.flags.writeable = False
    return arr


class Operator:
    """Square complex matrix on a :class:`HilbertSpace`."""

    __slots__ = ("space", "data")

    def __init__(self, data, dims: Sequence[int] | HilbertSpace | None = None):
        arr = _frozen(data)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"operator must be square, got shape {arr.shape}")
        if dims is None:
            space = HilbertSpace([arr.shape[0]])
        elif isinstance(dims, HilbertSpace):
            space = dims
        else:
            space = HilbertSpace(dims)
        if space.size != arr.shape[0]:
            raise DimensionError(f"dims {space.dims} do not match matrix size {arr.shape[0]}")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @property
    def dims(self) -> tuple[int, ...]:
        return self.space.dims

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def _check(self, other: "Operator") -> None:
        if self.space != other.space:
            raise DimensionError(f"space mismatch: {self.space} vs {other.space}")

    def _wrap(self, data) -> "Operator":
        return Operator(data, self.space)

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return self._wrap(self.data + other.data)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return self._wrap(self.data - other.data)
        return NotImplemented

    def __neg__(self):
        return self._wrap(-self.data)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return self._wrap(self.data * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if np.isscalar(scalar):
            return self._wrap(self.data / scalar)
        return NotImplemented

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return self._wrap(self.data @ other.data)
        return NotImplemented

    def dag(self) -> "Operator":
        return self._wrap(self.data.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def apply(self, ket) -> np.ndarray:
        """Matrix-vector product with a state vector."""
        return self.data @ np.asarray(ket)

    def expect(self, rho: "Operator") -> float:
        """Tr(self @ rho), real part."""
        self._check(rho)
        return float(np.einsum("ij,ji->", self.data, rho.data).real)

    def is_hermitian(self, tol: float = config.HERMITIAN_TOL) -> bool:
        return float(np.max(np.abs(self.data - self.data.conj().T))) <= tol

    def is_unitary(self, tol: float = config.UNITARY_TOL) -> bool:
        n = self.shape[0]
        return float(np.max(np.abs(self.data.conj().T @ self.data - np.eye(n)))) <= tol

    def to_json(self) -> str:
        return json.dumps({
            "dims": list(self.dims),
            "re": self.data.real.tolist(),
            "im": self.data.imag.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "Operator":
        obj = json.loads(text)
        return cls(np.array(obj["re"]) + 1j * np.array(obj["im"]), obj["dims"])

    @classmethod
    def identity(cls, dims: Sequence[int]) -> "Operator":
        space = HilbertSpace(dims)
        return cls(np.eye(space.size), space)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dims={list(self.dims)})\n{self.data!r}"


class DensityMatrix(Operator):
    """Operator checked to be Hermitian, unit-trace and positive semidefinite."""

    __slots__ = ()

    def __init__(self, data, dims=None, *, validate: bool = True):
        if isinstance(data, Operator):
            dims = data.space if dims is None else dims
            data = data.data
        super().__init__(data, dims)
        if validate:
            herm = float(np.max(np.abs(self.data - self.data.conj().T)))
            if herm > config.HERMITIAN_TOL:
                raise ValueError(f"density matrix not Hermitian (residual {herm:.2e})")
            tr = np.trace(self.data).real
            if abs(tr - 1.0) > config.TRACE_TOL:
                raise ValueError(f"density matrix trace {tr!r} differs from 1")
            lo = float(np.linalg.eigvalsh(self.data).min())
            if lo < -config.POSITIVITY_TOL:
                raise ValueError(f"density matrix has negative eigenvalue {lo:.2e}")

    def _wrap(self, data) -> Operator:
        # arithmetic on a state generally leaves the state set
        return Operator(data, self.space)

    @classmethod
    def from_ket(cls, ket, dims=None) -> "DensityMatrix":
        v = np.asarray(ket, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), dims if dims is not None else [v.size])

    def purity(self) -> float:
        return float(np.einsum("ij,ji->", self.data, self.data).real)


# ---------------------------------------------------------------------------
# tensor structure

def kron(*ops: Operator, max_dim: int | None = None) -> Operator:
    """Kronecker product; the result's space concatenates the input spaces."""
    if not ops:
        raise ValueError("kron needs at least one operator")
    dims: list[int] = []
    for op in ops:
        dims.extend(op.dims)
    space = HilbertSpace(dims, max_dim=max_dim)
    out = ops[0].data
    for op in ops[1:]:
        out = np.kron(out, op.data)
    return Operator(out, space)


def partial_trace(rho: Operator, keep: Sequence[int]) -> Operator:
    """Trace out every subsystem not listed in ``keep``.

    Kept subsystems retain their original order.  A :class:`DensityMatrix`
    input gives a :class:`DensityMatrix` output.
    """
    dims = rho.dims
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    if any(k < 0 or k >= len(dims) for k in keep):
        raise IndexError(f"subsystem index out of range for dims {dims}: {keep}")
    n = len(dims)
    t = rho.data.reshape(dims + dims)
    # einsum labels: row index i_k, column index j_k; traced ones share a label
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = list(letters[:n])
    cols = [rows[k] if k not in keep else letters[n + k] for k in range(n)]
    out_labels = "".join(rows[k] for k in keep) + "".join(cols[k] for k in keep)
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out_labels, t)
    kdims = [dims[k] for k in keep]
    m = prod(kdims)
    reduced = reduced.reshape(m, m)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(reduced, kdims, validate=False)
    return Operator(reduced, kdims)


# ---------------------------------------------------------------------------
# matrix exponential: scaling and squaring with diagonal Pade approximants

_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1,
          7: 9.504178996162932e-1, 9: 2.097847961257068e0,
          13: 5.371920351148152e0}


def _pade_uv(a: np.ndarray, m: int):
    b = _PADE[m]
    ident = np.eye(a.shape[0], dtype=a.dtype)
    a2 = a @ a
    if m < 13:
        powers = [ident, a2]
        while len(powers) <= m // 2:
            powers.append(powers[-1] @ a2)
        u = sum(b[2 * k + 1] * powers[k] for k in range(m // 2 + 1))
        v = sum(b[2 * k] * powers[k] for k in range(m // 2 + 1))
        return a @ u, v
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
    return u, v


def expm_array(a) -> np.ndarray:
    """Matrix exponential of a square ndarray."""
    a = np.asarray(a, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("expm input contains non-finite entries")
    norm1 = float(np.abs(a).sum(axis=0).max()) if a.size else 0.0
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            u, v = _pade_uv(a, m)
            return np.linalg.solve(v - u, v + u)
    s = max(0, int(np.ceil(np.log2(norm1 / _THETA[13])))) if norm1 > 0 else 0
    u, v = _pade_uv(a / 2.0 ** s, 13)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def expm(a: Operator) -> Operator:
    return Operator(expm_array(a.data), a.space)


# ---------------------------------------------------------------------------
# general eigensolver: Householder Hessenberg reduction, shifted QR to Schur
# form, eigenvectors by inverse iteration on the triangular factor

class Eigen(NamedTuple):
    values: np.ndarray   # shape (N,)
    vectors: np.ndarray  # columns are unit right eigenvectors, or None


def hessenberg(a) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(H, Q)`` with ``a = Q H Q^dagger`` and ``H`` upper Hessenberg."""
    h = np.array(a, dtype=complex, copy=True)
    n = h.shape[0]
    q = np.eye(n, dtype=complex)
    for k in range(n - 2):
        x = h[k + 1:, k]
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        x0 = x[0]
        phase = x0 / abs(x0) if x0 != 0 else 1.0
        v = x.copy()
        v[0] += phase * nx
        v /= np.linalg.norm(v)
        h[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h, q


def _wilkinson(a, b, c, d) -> complex:
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    mu1 = 0.5 * (a + d) + disc
    mu2 = 0.5 * (a + d) - disc
    return mu1 if abs(mu1 - d) < abs(mu2 - d) else mu2


def schur(a, max_sweeps: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Complex Schur decomposition ``a = Q T Q^dagger`` by shifted QR.

    Each sweep is one explicit single-shift QR step on the active block of
    the Hessenberg matrix, carried out with Givens rotations.
    """
    h, q = hessenberg(a)
    n = h.shape[0]
    if n == 1:
        return h, q
    cap = (config.EIG_SWEEPS_PER_DIM if max_sweeps is None else max_sweeps) * n
    eps = np.finfo(float).eps
    floor = eps * max(np.linalg.norm(h), np.finfo(float).tiny)
    hi = n - 1
    its = 0
    total = 0
    while hi > 0:
        lo = hi
        while lo > 0:
            sub = abs(h[lo, lo - 1])
            if sub <= eps * (abs(h[lo, lo]) + abs(h[lo - 1, lo - 1])) or sub <= floor:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            its = 0
            continue
        total += 1
        its += 1
        if total > cap:
            raise EigenConvergenceError(f"QR iteration did not converge in {cap} sweeps")
        if its % 11 == 10:
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])
        else:
            mu = _wilkinson(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        idx = np.arange(lo, hi + 1)
        h[idx, idx] -= mu
        rots = []
        for k in range(lo, hi):
            x, y = h[k, k], h[k + 1, k]
            r = np.hypot(abs(x), abs(y))
            if r == 0.0:
                g = np.eye(2, dtype=complex)
            else:
                c, s = x / r, y / r
                g = np.array([[c.conjugate(), s.conjugate()], [-s, c]])
            h[k:k + 2, k:] = g @ h[k:k + 2, k:]
            rots.append(g)
        for k, g in zip(range(lo, hi), rots):
            gh = g.conj().T
            top = min(k + 2, hi) + 1
            h[:top, k:k + 2] = h[:top, k:k + 2] @ gh
            q[:, k:k + 2] = q[:, k:k + 2] @ gh
        h[idx, idx] += mu
    return np.triu(h), q


def _triangular_eigenvectors(t: np.ndarray) -> np.ndarray:
    """Right eigenvectors of upper-triangular ``t``, one per diagonal entry.

    Column k is one step of inverse iteration with shift t[k, k] started from
    e_k, i.e. back-substitution on (T - t_kk I) y = 0 with y_k = 1.  Near-zero
    pivots are floored so that repeated eigenvalues still give finite vectors.
    """
    n = t.shape[0]
    lam = np.diag(t).copy()
    eps = np.finfo(float).eps
    smin = max(eps * np.abs(t).max(), np.finfo(float).tiny * n / eps)
    big = 1e150
    y = np.eye(n, dtype=complex)
    for i in range(n - 2, -1, -1):
        cols = slice(i + 1, n)
        num = t[i, i + 1:] @ y[i + 1:, cols]
        den = t[i, i] - lam[i + 1:]
        small = np.abs(den) < smin
        den = np.where(small, smin, den)
        y[i, cols] = -num / den
        colmax = np.abs(y[i:, cols]).max(axis=0)
        over = np.nonzero(colmax > big)[0]
        if over.size:
            y[:, i + 1 + over] /= colmax[over]
    return y / np.linalg.norm(y, axis=0)


def eig_general(a, *, vectors: bool = True, method: str = "qr",
                max_dim: int = config.EIG_MAX_DIM,
                max_sweeps: int | None = None) -> Eigen:
    """All eigenvalues (and right eigenvectors) of a general complex matrix.

    ``method="qr"`` runs the Hessenberg/shifted-QR/inverse-iteration solver
    in this module; ``method="lapack"`` delegates to ``numpy.linalg.eig`` and
    exists for inner loops of parameter scans.
    """
    if isinstance(a, Operator):
        a = a.data
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"eig_general needs a square matrix, got {a.shape}")
    if a.shape[0] > max_dim:
        raise DimensionError(f"matrix size {a.shape[0]} exceeds eigensolver cap {max_dim}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("eigensolver input contains non-finite entries")
    if method == "lapack":
        if vectors:
            w, v = np.linalg.eig(a)
            return Eigen(w, v)
        return Eigen(np.linalg.eigvals(a), None)
    if method != "qr":
        raise ValueError(f"unknown eigensolver method {method!r}")
    t, q = schur(a, max_sweeps=max_sweeps)
    w = np.diag(t).copy()
    if not vectors:
        return Eigen(w, None)
    v = q @ _triangular_eigenvectors(t)
    v /= np.linalg.norm(v, axis=0)
    return Eigen(w, v)
