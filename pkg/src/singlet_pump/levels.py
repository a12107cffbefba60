"""Three-level ion basis and the two-ion operators built from it.

Single-ion ordering is down = 0, up = 1, e = 2; two-ion index is 3*i + j
with ion 1 as the left tensor factor.
"""
from __future__ import annotations

import numpy as np

from .linalg import DensityMatrix, Operator

DOWN, UP, EXC = 0, 1, 2
QUTRIT = (3,)
TWO_IONS = (3, 3)
GROUND = (DOWN, UP)
# indices of |dd>, |du>, |ud>, |uu> inside the 9-dim space
GROUND_IDX = np.array([3 * a + b for a in GROUND for b in GROUND])


def ket(*labels: int) -> np.ndarray:
    v = np.zeros(3 ** len(labels), dtype=complex)
    idx = 0
    for lab in labels:
        idx = 3 * idx + lab
    v[idx] = 1.0
    return v


def proj(i: int, j: int | None = None) -> np.ndarray:
    """Single-ion |i><j| (|i><i| if j is omitted)."""
    m = np.zeros((3, 3), dtype=complex)
    m[i, i if j is None else j] = 1.0
    return m


I3 = np.eye(3, dtype=complex)
SX_DE = proj(EXC, DOWN) + proj(DOWN, EXC)
SY_DE = -1j * proj(EXC, DOWN) + 1j * proj(DOWN, EXC)
SZ_DE = proj(DOWN) - proj(EXC)
SX_DU = proj(UP, DOWN) + proj(DOWN, UP)
SY_DU = -1j * proj(UP, DOWN) + 1j * proj(DOWN, UP)
SZ_DU = proj(UP) - proj(DOWN)


def collective(single: np.ndarray) -> np.ndarray:
    """single (x) 1 + 1 (x) single on the two-ion space."""
    return np.kron(single, I3) + np.kron(I3, single)


SINGLET = (ket(UP, DOWN) - ket(DOWN, UP)) / np.sqrt(2)
TRIPLET0 = (ket(UP, DOWN) + ket(DOWN, UP)) / np.sqrt(2)


def singlet_state() -> DensityMatrix:
    return DensityMatrix.from_ket(SINGLET, TWO_IONS)


def product_state(a: int, b: int) -> DensityMatrix:
    return DensityMatrix.from_ket(ket(a, b), TWO_IONS)


def ground_mixture() -> DensityMatrix:
    """Maximally mixed state on the four ground levels."""
    m = np.zeros((9, 9), dtype=complex)
    m[GROUND_IDX, GROUND_IDX] = 0.25
    return DensityMatrix(m, TWO_IONS)


def embed_ground(rho4) -> np.ndarray:
    """Place a 4x4 ground-manifold matrix into the 9-dim space."""
    m = np.zeros((9, 9), dtype=complex)
    m[np.ix_(GROUND_IDX, GROUND_IDX)] = np.asarray(rho4)
    return m


def restrict_ground(rho) -> np.ndarray:
    a = rho.data if isinstance(rho, Operator) else np.asarray(rho)
    return a[np.ix_(GROUND_IDX, GROUND_IDX)]
