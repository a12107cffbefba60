"""Independent reference computations used to check the package.

Nothing here imports from singlet_pump; each helper is a deliberately
simple route to the same quantity.
"""
from __future__ import annotations

import math

import numpy as np


def jacobi_eigvalsh(a, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations."""
    a = np.array(a, dtype=complex, copy=True)
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = math.sqrt(sum(abs(a[p, q]) ** 2 for p in range(n) for q in range(n) if p != q))
        if off < tol * max(1.0, np.abs(np.diag(a)).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                # phase out apq so the 2x2 block is real symmetric, then rotate
                phase = apq / abs(apq)
                app, aqq = a[p, p].real, a[q, q].real
                tau = (aqq - app) / (2 * abs(apq))
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1 + tau * tau))
                c = 1 / math.sqrt(1 + t * t)
                s = t * c
                g = np.eye(n, dtype=complex)
                g[p, p], g[q, q] = c, c
                g[p, q], g[q, p] = s * phase, -s * np.conj(phase)
                a = g.conj().T @ a @ g
    return np.sort(np.diag(a).real)


def kron_elementwise(a, b) -> np.ndarray:
    """(A (x) B)[i nB + k, j nB + l] = A[i, j] B[k, l], written out as loops."""
    a, b = np.asarray(a), np.asarray(b)
    na, nb = a.shape[0], b.shape[0]
    out = np.zeros((na * nb, na * nb), dtype=complex)
    for i in range(na):
        for j in range(na):
            for k in range(nb):
                for l in range(nb):
                    out[i * nb + k, j * nb + l] = a[i, j] * b[k, l]
    return out


def coherent_ket(alpha: complex, n: int) -> np.ndarray:
    """Fock amplitudes of |alpha> truncated to n levels."""
    k = np.arange(n)
    logfact = np.array([math.lgamma(m + 1) for m in k])
    amps = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * logfact) * alpha ** k
    return amps.astype(complex)


def coherent_overlap(a: complex, b: complex, n: int = 80) -> complex:
    """<a|b> by a brute-force Fock sum."""
    return complex(np.vdot(coherent_ket(a, n), coherent_ket(b, n)))


def taylor_expm(a, terms: int = 60) -> np.ndarray:
    """exp(A) by scaling, a plain Taylor series and squaring."""
    a = np.asarray(a, dtype=complex)
    norm = np.abs(a).sum(axis=0).max() if a.size else 0.0
    s = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0.5 else 0
    b = a / 2 ** s
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ b / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def trace_distance(a, b) -> float:
    d = np.asarray(a) - np.asarray(b)
    d = 0.5 * (d + d.conj().T)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(d)).sum())


def random_density(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def apply_kraus(ks, rho) -> np.ndarray:
    return sum(k @ rho @ k.conj().T for k in ks)
