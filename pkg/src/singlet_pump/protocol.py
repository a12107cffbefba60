"""Discrete three-drive pumping cycle into the two-ion singlet.

One cycle applies, in order: collective excitation (drive A), repumping
with branching angle gamma (drive B), and a symmetric Zeeman rotation
(drive C).  The singlet is dark to all three, so it is the fixed point.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar

from . import levels as lv
from .linalg import DensityMatrix, Operator, eig_general, expm_array
from .liouville import (KrausChannel, SuperOperator, apply, compose, spectral_analysis,
                        superop_from_kraus, superop_from_unitary)


# ---------------------------------------------------------------------------
# parameters

@dataclass(frozen=True)
class Constant:
    theta: float

    def theta_for(self, cycle: int) -> float:
        return self.theta

    @property
    def period(self) -> int:
        return 1


@dataclass(frozen=True)
class Alternating:
    """Rotation angle theta_odd on cycles 1, 3, 5, ... and theta_even on 2, 4, ..."""

    theta_odd: float = math.pi
    theta_even: float = math.pi / 2

    def theta_for(self, cycle: int) -> float:
        return self.theta_odd if cycle % 2 == 1 else self.theta_even

    @property
    def period(self) -> int:
        return 2


Schedule = Union[Constant, Alternating]


@dataclass(frozen=True)
class ProtocolParams:
    phi: float
    gamma: float
    schedule: Schedule

    def __post_init__(self):
        angles = [self.phi, self.gamma]
        if isinstance(self.schedule, Constant):
            angles.append(self.schedule.theta)
        elif isinstance(self.schedule, Alternating):
            angles += [self.schedule.theta_odd, self.schedule.theta_even]
        else:
            raise TypeError(f"unknown schedule {self.schedule!r}")
        if not all(math.isfinite(a) for a in angles):
            raise ValueError("protocol angles must be finite")
        _check_gamma(self.gamma)

    @classmethod
    def constant(cls, phi, gamma, theta) -> "ProtocolParams":
        return cls(phi, gamma, Constant(theta))

    @classmethod
    def alternating(cls, phi, gamma, theta_odd=math.pi, theta_even=math.pi / 2) -> "ProtocolParams":
        return cls(phi, gamma, Alternating(theta_odd, theta_even))


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma < math.pi / 2:
        raise ValueError(f"gamma must lie in (0, pi/2), got {gamma!r}")


IDEAL = ProtocolParams.constant(math.pi / 4, math.pi / 4, 3 * math.pi / 4)


# ---------------------------------------------------------------------------
# drives

def drive_A_unitary(phi: float) -> Operator:
    s = lv.collective(lv.SX_DE)
    return Operator(expm_array(-1j * phi * (s @ s)), lv.TWO_IONS)


def branching(gamma: float) -> tuple[float, float]:
    """(p_e->down, p_e->up)."""
    _check_gamma(gamma)
    return math.sin(gamma) ** 2, math.cos(gamma) ** 2


def single_ion_repump(gamma: float) -> list[np.ndarray]:
    p_down, p_up = branching(gamma)
    return [lv.proj(lv.DOWN) + lv.proj(lv.UP),
            math.sqrt(p_down) * lv.proj(lv.DOWN, lv.EXC),
            math.sqrt(p_up) * lv.proj(lv.UP, lv.EXC)]


def drive_B_kraus(gamma: float) -> KrausChannel:
    one = single_ion_repump(gamma)
    return KrausChannel(tuple(Operator(np.kron(a, b), lv.TWO_IONS) for a in one for b in one))


def zeeman_rotation(theta: float) -> np.ndarray:
    """Single-ion exp(i theta/2 sigma_x) on the ground pair; identity on e."""
    return expm_array(0.5j * theta * lv.SX_DU)


def drive_C_unitary(theta: float) -> Operator:
    u = zeeman_rotation(theta)
    return Operator(np.kron(u, u), lv.TWO_IONS)


def single_cycle_superop(phi: float, gamma: float, theta: float) -> SuperOperator:
    s_a = superop_from_unitary(drive_A_unitary(phi))
    s_b = superop_from_kraus(drive_B_kraus(gamma))
    s_c = superop_from_unitary(drive_C_unitary(theta))
    return compose(s_c, compose(s_b, s_a))


def cycle_maps(params: ProtocolParams) -> list[SuperOperator]:
    """One map per distinct cycle of the schedule, in application order."""
    sch = params.schedule
    return [single_cycle_superop(params.phi, params.gamma, sch.theta_for(k))
            for k in range(1, sch.period + 1)]


def cycle_superop(params: ProtocolParams) -> SuperOperator:
    """Single-cycle map, or the two-cycle map S_even S_odd for an alternating schedule."""
    maps = cycle_maps(params)
    out = maps[0]
    for m in maps[1:]:
        out = compose(m, out)
    return out


# ---------------------------------------------------------------------------
# ground-manifold reduction

# column-stacked positions of ground-manifold matrix elements inside a 9-dim vec
GROUND_VEC_IDX = np.array([r + 9 * c for c in lv.GROUND_IDX for r in lv.GROUND_IDX])


def reduced_single_cycle(phi: float, gamma: float, theta: float) -> np.ndarray:
    """16x16 map on the ground manifold, excitation and repump merged.

    Ground basis is (dd, du, ud, uu).  Starting from a ground state, drive A
    only couples |dd> to |ee>, with amplitudes c and s below, and the
    repump then sends |ee> incoherently to the four ground states.
    """
    p_down, p_up = branching(gamma)
    z = np.exp(-4j * phi)
    c, s = 0.5 * (z + 1), 0.5 * (z - 1)
    ks = [np.diag([c, np.exp(-1j * phi), np.exp(-1j * phi), 1.0])]
    amps = [math.sqrt(p_down), math.sqrt(p_up)]
    for ia, pa in enumerate(amps):
        for ib, pb in enumerate(amps):
            k = np.zeros((4, 4), dtype=complex)
            k[2 * ia + ib, 0] = pa * pb * s
            ks.append(k)
    ab = sum(np.kron(k.conj(), k) for k in ks)
    u = expm_array(0.5j * theta * np.array([[0, 1], [1, 0]], dtype=complex))
    uc = np.kron(u, u)
    return np.kron(uc.conj(), uc) @ ab


def reduced_cycle_superop(params: ProtocolParams) -> SuperOperator:
    sch = params.schedule
    out = np.eye(16, dtype=complex)
    for k in range(1, sch.period + 1):
        out = reduced_single_cycle(params.phi, params.gamma, sch.theta_for(k)) @ out
    return SuperOperator(out, (2, 2))


# ---------------------------------------------------------------------------
# trajectories

def singlet_fidelity(rho) -> float:
    """<Psi-|rho|Psi-> for a 9-dim state or a 4-dim ground-manifold state."""
    a = rho.data if isinstance(rho, Operator) else np.asarray(rho)
    if a.shape == (9, 9):
        v = lv.SINGLET
    elif a.shape == (4, 4):
        v = np.array([0, 1, -1, 0]) / math.sqrt(2)
    else:
        raise ValueError(f"expected a 9x9 or 4x4 state, got {a.shape}")
    return float(np.real(v.conj() @ a @ v))


@dataclass
class Trajectory:
    states: list = field(default_factory=list)
    fidelities: list = field(default_factory=list)

    def populations(self, k: int) -> dict:
        d = np.real(np.diag(self.states[k].data))
        ix = lambda a, b: 3 * a + b
        return {"p_dd": float(d[ix(lv.DOWN, lv.DOWN)]),
                "p_uu": float(d[ix(lv.UP, lv.UP)]),
                "p_mixed": float(d[ix(lv.UP, lv.DOWN)] + d[ix(lv.DOWN, lv.UP)])}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cycle", "fidelity", "p_dd", "p_uu", "p_mixed", "purity"])
        for k, (rho, f) in enumerate(zip(self.states, self.fidelities)):
            p = self.populations(k)
            w.writerow([k] + [repr(float(x)) for x in (f, p["p_dd"], p["p_uu"], p["p_mixed"],
                                                        rho.purity())])
        return buf.getvalue()


def run_protocol(rho0: Operator, params: ProtocolParams, n_cycles: int, *,
                 maps: Sequence[SuperOperator] | None = None) -> Trajectory:
    """Apply ``n_cycles`` cycles, recording the state after each.

    ``maps`` overrides the per-cycle maps (cycle k uses maps[(k-1) % len]);
    the error module uses this to insert perturbations.
    """
    if n_cycles < 0:
        raise ValueError("n_cycles must be non-negative")
    if maps is None:
        maps = cycle_maps(params)
    rho = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(rho0.data, rho0.space)
    traj = Trajectory([rho], [singlet_fidelity(rho)])
    for k in range(1, n_cycles + 1):
        rho = apply(maps[(k - 1) % len(maps)], rho)
        traj.states.append(rho)
        traj.fidelities.append(singlet_fidelity(rho))
    return traj


# ---------------------------------------------------------------------------
# rates

class DegenerateSpectrumError(RuntimeError):
    pass


def second_modulus(s: SuperOperator | np.ndarray, method: str = "qr") -> float:
    """Second-largest eigenvalue modulus of a map."""
    a = s.data if isinstance(s, SuperOperator) else s
    w = np.sort(np.abs(eig_general(a, vectors=False, method=method).values))[::-1]
    return float(w[1])


def convergence_rate(params: ProtocolParams, *, reduced: bool = True, method: str = "qr") -> float:
    """N0 in cycles: fidelity error decays as exp(-N/N0)."""
    s = reduced_cycle_superop(params) if reduced else cycle_superop(params)
    lam = second_modulus(s, method)
    if lam >= 1 - 1e-9:
        raise DegenerateSpectrumError("top eigenvalue is degenerate; no unique steady state")
    if lam == 0.0:
        return 0.0
    return params.schedule.period / -math.log(lam)


def lambda_plus_closed_form(gamma: float) -> tuple[float, float]:
    """Nonzero non-unit eigenvalues of the two-cycle map for the {pi, pi/2} schedule at Phi = pi/4."""
    _check_gamma(gamma)
    root = math.sqrt(1 - 2 / 9 * (2 + math.cos(gamma) ** 4) * math.sin(2 * gamma) ** 2)
    return 0.25 * (1 + 3 * root), 0.25 * (1 - 3 * root)


# ---------------------------------------------------------------------------
# optimization

@dataclass(frozen=True)
class GridSpec:
    schedule: str = "constant"           # "constant" or "alternating"
    n_theta: int = 64
    n_gamma: int = 64
    phi: float = math.pi / 4
    theta_range: tuple = (0.0, math.pi)
    gamma_range: tuple = (0.0, math.pi / 2)
    fixed_theta: float | None = None
    fixed_gamma: float | None = None
    alternating: Alternating = Alternating()
    method: str = "qr"


@dataclass(frozen=True)
class Optimum:
    theta: float | tuple
    gamma: float
    n0: float
    lam: float


def _cell_centres(lo, hi, n):
    return lo + (hi - lo) * (np.arange(n) + 0.5) / n


def optimize_params(spec: GridSpec = GridSpec()) -> Optimum:
    """Grid minimum of the second eigenvalue modulus, then golden-section polish per axis."""
    if spec.schedule not in ("constant", "alternating"):
        raise ValueError(f"unknown schedule {spec.schedule!r}")
    alt = spec.schedule == "alternating"

    def make(theta, gamma):
        if alt:
            return ProtocolParams(spec.phi, gamma, spec.alternating)
        return ProtocolParams.constant(spec.phi, gamma, theta)

    def objective(theta, gamma):
        if not 0 < gamma < math.pi / 2:
            return 1.0
        return second_modulus(reduced_cycle_superop(make(theta, gamma)), spec.method)

    thetas = (np.array([0.0]) if alt else
              np.array([spec.fixed_theta]) if spec.fixed_theta is not None else
              _cell_centres(*spec.theta_range, spec.n_theta))
    gammas = (np.array([spec.fixed_gamma]) if spec.fixed_gamma is not None else
              _cell_centres(*spec.gamma_range, spec.n_gamma))
    grid = np.array([[objective(t, g) for g in gammas] for t in thetas])
    it, ig = np.unravel_index(np.argmin(grid), grid.shape)
    theta, gamma = float(thetas[it]), float(gammas[ig])

    axes = []
    if len(thetas) > 1:
        axes.append(("theta", (thetas[1] - thetas[0]), spec.theta_range))
    if len(gammas) > 1:
        axes.append(("gamma", (gammas[1] - gammas[0]), spec.gamma_range))
    for _ in range(4 if len(axes) > 1 else 1):
        moved = 0.0
        for name, h, (lo, hi) in axes:
            x0 = theta if name == "theta" else gamma
            f = (lambda x: objective(x, gamma)) if name == "theta" else (lambda x: objective(theta, x))
            x1 = _golden(f, x0, h, lo, hi)
            moved = max(moved, abs(x1 - x0))
            if name == "theta":
                theta = x1
            else:
                gamma = x1
        if moved < 1e-9:
            break
    lam = objective(theta, gamma)
    period = 2 if alt else 1
    n0 = period / -math.log(lam)
    return Optimum(spec.alternating if alt else theta, gamma, n0, lam)


def _golden(f, x0, h, lo, hi) -> float:
    a, c = max(lo + 1e-12, x0 - h), min(hi - 1e-12, x0 + h)
    try:
        res = minimize_scalar(f, bracket=(a, x0, c), method="golden", options={"xtol": 1e-10})
        x = float(res.x)
        if a <= x <= c and f(x) <= f(x0):
            return x
    except ValueError:
        pass
    res = minimize_scalar(f, bounds=(a, c), method="bounded", options={"xatol": 1e-10})
    return float(res.x) if f(res.x) <= f(x0) else x0


# ---------------------------------------------------------------------------
# estimators

class UnphysicalParityWarning(UserWarning):
    pass


def fidelity_from_parities(xx: float, yy: float, zz: float) -> float:
    """Singlet fidelity (1 - xx - yy - zz)/4.

    Parity triples outside the set reachable by any two-qubit state are
    accepted but raise :class:`UnphysicalParityWarning`.
    """
    for v in (xx, yy, zz):
        if not -1 - 1e-12 <= v <= 1 + 1e-12:
            raise ValueError(f"parity {v!r} outside [-1, 1]")
    if not parities_physical(xx, yy, zz):
        warnings.warn(f"parities ({xx}, {yy}, {zz}) are not attainable by a two-qubit state",
                      UnphysicalParityWarning, stacklevel=2)
    return 0.25 * (1 - xx - yy - zz)


def parities_physical(xx: float, yy: float, zz: float, tol: float = 1e-12) -> bool:
    """True iff the Bell-diagonal weights implied by the parities are non-negative."""
    w = [1 - xx - yy - zz, 1 + xx + yy - zz, 1 + xx - yy + zz, 1 - xx + yy + zz]
    return min(w) >= -tol


_PAULI2 = {"x": np.array([[0, 1], [1, 0]], dtype=complex),
           "y": np.array([[0, -1j], [1j, 0]]),
           "z": np.diag([1.0 + 0j, -1.0])}


def parities(rho) -> tuple[float, float, float]:
    """<XX>, <YY>, <ZZ> on the ground manifold of a two-ion state."""
    a = rho.data if isinstance(rho, Operator) else np.asarray(rho)
    g = lv.restrict_ground(a) if a.shape == (9, 9) else a
    return tuple(float(np.real(np.trace(np.kron(_PAULI2[k], _PAULI2[k]) @ g))) for k in "xyz")


def readout_correction(p1_obs: float, p2_obs: float, p: float, q: float) -> tuple[float, float]:
    """Crosstalk-corrected (P_uu, P_ud + P_du) from observed one- and two-bright probabilities.

    p: one bright ion recorded as two; q: two bright ions recorded as one.
    Both expressions are kept in their reference form; only the first one
    inverts the forward model in :func:`readout_forward`.
    """
    if p + q >= 1:
        raise ValueError("readout correction needs p + q < 1")
    den = 1 - p - q
    p_uu = ((1 - p) * p2_obs - p * p1_obs) / den
    p_mixed = ((1 - q) * p2_obs - q * p1_obs) / den
    return p_uu, p_mixed


def readout_forward(p1: float, p2: float, p: float, q: float) -> tuple[float, float]:
    """Observed (P(1), P(2)) given true one- and two-bright probabilities."""
    return (1 - p) * p1 + q * p2, p * p1 + (1 - q) * p2


def expected_scatter_count(gamma: float) -> float:
    """Mean photons scattered per ion before landing in the ground manifold, 4 csc^2(2 gamma)."""
    s = math.sin(2 * gamma)
    if abs(s) < 2e-6:
        return math.inf
    return 4.0 / s ** 2
