"""Error channels injected into the pumping cycle and steady-state error analysis."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence, Union

import numpy as np

from . import levels as lv
from .linalg import Operator, expm_array
from .liouville import (KrausChannel, SuperOperator, compose, spectral_analysis,
                        superop_from_kraus, superop_from_unitary)
from .protocol import (ProtocolParams, drive_A_unitary, drive_B_kraus, singlet_fidelity,
                       zeeman_rotation)

SLOPE_GRID = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2)
# reference working point for error analysis: echo schedule at its optimal branching
REFERENCE_PARAMS = ProtocolParams.alternating(math.pi / 4, 0.23 * math.pi)

_SIGMA_DE = {"0": lv.I3, "x": lv.SX_DE, "y": lv.SY_DE, "z": lv.SZ_DE}


# ---------------------------------------------------------------------------
# channel kinds

@dataclass(frozen=True)
class PauliPair:
    i: str
    j: str
    p: float

    def __post_init__(self):
        if self.i not in _SIGMA_DE or self.j not in _SIGMA_DE:
            raise ValueError(f"Pauli indices must be in 0/x/y/z, got ({self.i!r}, {self.j!r})")
        _check_prob(self.p, 1.0)

    @property
    def label(self) -> str:
        return f"M_{self.i}{self.j}"


@dataclass(frozen=True)
class CorrelatedRotation:
    axis: str
    eps: float

    def __post_init__(self):
        if self.axis not in ("x", "z"):
            raise ValueError(f"rotation axis must be 'x' or 'z', got {self.axis!r}")
        if not math.isfinite(self.eps):
            raise ValueError("rotation angle must be finite")

    @property
    def label(self) -> str:
        return f"U_{self.axis}"


@dataclass(frozen=True)
class SpinMotionKraus:
    p: float

    def __post_init__(self):
        _check_prob(self.p, 0.5)

    label = "spin_motion"


@dataclass(frozen=True)
class StarkPhase:
    phi: float

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise ValueError("phase must be finite")

    label = "stark"


@dataclass(frozen=True)
class DriveCImbalance:
    eps: float

    def __post_init__(self):
        if not abs(self.eps) <= 0.2:
            raise ValueError(f"imbalance must satisfy |eps| <= 0.2, got {self.eps!r}")

    label = "drive_c_imbalance"


ErrorKind = Union[PauliPair, CorrelatedRotation, SpinMotionKraus, StarkPhase, DriveCImbalance]
INSERTION_POINTS = ("after_A", "after_B", "after_C")


@dataclass(frozen=True)
class ErrorChannelSpec:
    kind: ErrorKind
    insertion: str = "after_A"

    def __post_init__(self):
        if self.insertion not in INSERTION_POINTS:
            raise ValueError(f"insertion must be one of {INSERTION_POINTS}")

    @property
    def label(self) -> str:
        return self.kind.label


def _check_prob(p, upper):
    if not 0.0 <= p <= upper:
        raise ValueError(f"probability must lie in [0, {upper}], got {p!r}")


def at_probability(kind: ErrorKind, p: float) -> ErrorKind:
    """Same channel type re-parametrized so its error probability per cycle is p."""
    if isinstance(kind, PauliPair):
        return replace(kind, p=p)
    if isinstance(kind, CorrelatedRotation):
        return replace(kind, eps=math.sqrt(2 * p))
    if isinstance(kind, SpinMotionKraus):
        return replace(kind, p=p)
    if isinstance(kind, StarkPhase):
        return replace(kind, phi=2 * math.asin(math.sqrt(p)))
    raise TypeError(f"{type(kind).__name__} has no probability parametrization")


# ---------------------------------------------------------------------------
# operators

def error_operator(i: str, j: str) -> Operator:
    """exp(-i pi/2 sigma_i (x) sigma_j) on the down/e pair; index 0 is the qutrit identity."""
    if i not in _SIGMA_DE or j not in _SIGMA_DE:
        raise ValueError(f"Pauli indices must be in 0/x/y/z, got ({i!r}, {j!r})")
    g = np.kron(_SIGMA_DE[i], _SIGMA_DE[j])
    return Operator(expm_array(-0.5j * math.pi * g), lv.TWO_IONS)


def depolarizing_injection(m: Operator, p: float) -> KrausChannel:
    _check_prob(p, 1.0)
    if not m.is_unitary():
        raise ValueError("injected operator must be unitary")
    ident = Operator.identity(m.dims)
    return KrausChannel((ident * math.sqrt(1 - p), m * math.sqrt(p)))


def correlated_rotation(axis: str, eps: float) -> Operator:
    CorrelatedRotation(axis, eps)  # validates
    u = expm_array(0.5j * eps * _SIGMA_DE[axis])
    return Operator(np.kron(u, u), lv.TWO_IONS)


def spin_motion_kraus(p: float) -> KrausChannel:
    """Correlated bit-flip from residual spin-motion entanglement.

    The flip element is sqrt(p/2) (I X + X I), so |dd> leaks with
    probability p; the no-flip element is the Cholesky factor of the
    remainder I - K1^dag K1.
    """
    _check_prob(p, 0.5)
    x = lv.SX_DE
    k1 = math.sqrt(p / 2) * (np.kron(lv.I3, x) + np.kron(x, lv.I3))
    rest = np.eye(9) - k1.conj().T @ k1
    rest = 0.5 * (rest + rest.conj().T)
    try:
        k0 = np.linalg.cholesky(rest).conj().T
    except np.linalg.LinAlgError:
        # p = 1/2 makes the remainder singular; fall back to the PSD square root
        w, v = np.linalg.eigh(rest)
        k0 = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    return KrausChannel((Operator(k0, lv.TWO_IONS), Operator(k1, lv.TWO_IONS)))


def stark_phase_operator(phi: float) -> Operator:
    """Relative phase phi between |ud> and |du> from a differential level shift of |d>."""
    d = lv.proj(lv.DOWN)
    return Operator(np.kron(expm_array(-0.5j * phi * d), expm_array(0.5j * phi * d)), lv.TWO_IONS)


def stark_phase_error(eps: float, delta: float, t: float) -> Operator:
    """Phase 2*eps*delta*t from a fractional intensity imbalance eps on a Stark shift delta."""
    return stark_phase_operator(2 * eps * delta * t)


def flip_probability(phi: float) -> float:
    return math.sin(phi / 2) ** 2


def drive_C_imbalance(theta: float, eps: float) -> Operator:
    DriveCImbalance(eps)
    return Operator(np.kron(zeeman_rotation(theta), zeeman_rotation(theta * (1 + eps))), lv.TWO_IONS)


def imbalance_leak_probability(theta: float, eps: float) -> float:
    """Probability one imbalanced drive-C pulse moves the singlet out of the singlet."""
    u = drive_C_imbalance(theta, eps).data
    return 1.0 - abs(lv.SINGLET.conj() @ u @ lv.SINGLET) ** 2


def fit_imbalance_coefficient(theta: float = 0.75 * math.pi,
                              eps_grid: Sequence[float] = (0.005, 0.01, 0.02, 0.03, 0.04, 0.05)) -> float:
    """Least-squares c in p = c eps^2."""
    x = np.asarray(eps_grid) ** 2
    y = np.array([imbalance_leak_probability(theta, e) for e in eps_grid])
    return float(x @ y / (x @ x))


def error_superop(kind: ErrorKind) -> SuperOperator:
    if isinstance(kind, PauliPair):
        return superop_from_kraus(depolarizing_injection(error_operator(kind.i, kind.j), kind.p))
    if isinstance(kind, CorrelatedRotation):
        return superop_from_unitary(correlated_rotation(kind.axis, kind.eps))
    if isinstance(kind, SpinMotionKraus):
        return superop_from_kraus(spin_motion_kraus(kind.p))
    if isinstance(kind, StarkPhase):
        return superop_from_unitary(stark_phase_operator(kind.phi))
    raise TypeError(f"{type(kind).__name__} is not an inserted channel")


# ---------------------------------------------------------------------------
# perturbed protocol

def perturbed_cycle_maps(params: ProtocolParams, spec: ErrorChannelSpec) -> list[SuperOperator]:
    """Per-cycle maps with the error applied once per cycle."""
    s_a = superop_from_unitary(drive_A_unitary(params.phi))
    s_b = superop_from_kraus(drive_B_kraus(params.gamma))
    sch = params.schedule
    maps = []
    for k in range(1, sch.period + 1):
        theta = sch.theta_for(k)
        if isinstance(spec.kind, DriveCImbalance):
            u_c = drive_C_imbalance(theta, spec.kind.eps)
            maps.append(compose(superop_from_unitary(u_c), compose(s_b, s_a)))
            continue
        s_c = superop_from_unitary(Operator(np.kron(zeeman_rotation(theta), zeeman_rotation(theta)),
                                            lv.TWO_IONS))
        err = error_superop(spec.kind)
        chain = {"after_A": [s_a, err, s_b, s_c],
                 "after_B": [s_a, s_b, err, s_c],
                 "after_C": [s_a, s_b, s_c, err]}[spec.insertion]
        m = chain[0]
        for nxt in chain[1:]:
            m = compose(nxt, m)
        maps.append(m)
    return maps


def perturbed_cycle_superop(params: ProtocolParams, spec: ErrorChannelSpec) -> SuperOperator:
    maps = perturbed_cycle_maps(params, spec)
    out = maps[0]
    for m in maps[1:]:
        out = compose(m, out)
    return out


def steady_state_error(spec: ErrorChannelSpec, params: ProtocolParams = REFERENCE_PARAMS,
                       *, method: str = "qr") -> float:
    """1 - singlet fidelity of the steady state of the perturbed cycle.

    For an alternating schedule this is the state after each even cycle.
    """
    res = spectral_analysis(perturbed_cycle_superop(params, spec), method=method)
    return 1.0 - singlet_fidelity(res.steady_state)


@dataclass(frozen=True)
class SlopeFit:
    label: str
    p: tuple
    errors: tuple
    slope: float
    intercept: float
    r2: float

    @property
    def rounded(self) -> int:
        return int(round(self.slope))

    @property
    def nonlinear(self) -> bool:
        return self.r2 < 0.99


def steady_state_error_slope(kind: ErrorKind, p_grid: Iterable[float] = SLOPE_GRID,
                             params: ProtocolParams = REFERENCE_PARAMS, *,
                             insertion: str = "after_A", method: str = "qr") -> SlopeFit:
    """Least-squares line through (p, steady-state error) for one channel type."""
    p = np.array(sorted(p_grid), dtype=float)
    if p.size < 2 or p.max() > 0.01 + 1e-15:
        raise ValueError("slope grid needs at least two probabilities, all at most 0.01")
    errs = np.array([steady_state_error(ErrorChannelSpec(at_probability(kind, x), insertion),
                                        params, method=method) for x in p])
    slope, intercept = np.polyfit(p, errs, 1)
    resid = errs - (slope * p + intercept)
    ss_tot = float(np.sum((errs - errs.mean()) ** 2))
    # an error curve flat at round-off level is trivially linear
    flat = float(np.max(np.abs(errs))) < 1e-12
    r2 = 1.0 if flat or ss_tot == 0 else 1.0 - float(resid @ resid) / ss_tot
    return SlopeFit(kind.label, tuple(p), tuple(errs), float(slope), float(intercept), r2)


def slopes_to_csv(fits: Sequence[SlopeFit]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["channel", "p", "steady_state_error", "slope_fit"])
    for f in fits:
        for p, e in zip(f.p, f.errors):
            w.writerow([f.label, repr(float(p)), repr(float(e)), repr(float(f.slope))])
    return buf.getvalue()


def all_pauli_pairs(p: float) -> list[PauliPair]:
    return [PauliPair(i, j, p) for i in "0xyz" for j in "0xyz" if (i, j) != ("0", "0")]


def phenomenological_fidelity(p: float, coefficient: float = 3.2) -> float:
    """Linear correlated bit-flip model 1 - c p."""
    return 1.0 - coefficient * p
