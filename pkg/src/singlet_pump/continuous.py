"""Continuous version of the pumping scheme: all three drives on at once.

Rates and frequencies are in units of the collective-excitation frequency
J unless a physical J is supplied.  The convergence rate is the Liouvillian
gap of the 9-level two-ion master equation.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from . import levels as lv
from .linalg import Operator
from .liouville import LindbladModel, liouvillian, spectral_analysis

# Nominal collective-excitation frequency, read as J/2pi in Hz.
J_PHYSICAL_HZ = 580.0
EMPIRICAL_FACTOR = 2.4


class DegenerateSteadyStateError(ArithmeticError):
    pass


class EffectiveRegimeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ContinuousParams:
    """Drive strengths of the continuous scheme.

    ``beta`` defaults to ``J``, which puts the drives back on resonance
    after the light shift of the collective excitation.
    """

    omega_c: float
    kappa: float
    gamma: float
    J: float = 1.0
    beta: float | None = None

    def __post_init__(self):
        if not self.J > 0:
            raise ValueError(f"J must be positive, got {self.J}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not 0 < self.gamma < math.pi / 2:
            raise ValueError(f"gamma must lie in (0, pi/2), got {self.gamma}")
        if self.beta is None:
            object.__setattr__(self, "beta", self.J)

    @property
    def effective_regime(self) -> bool:
        """True when Omega_C + kappa exceeds J, where the rate formula applies."""
        return self.omega_c + self.kappa > self.J


def build_continuous_model(p: ContinuousParams) -> LindbladModel:
    s = lv.collective(lv.SX_DE)
    h = (p.J * s @ s + 0.5 * p.omega_c * lv.collective(lv.SX_DU)
         + p.beta * lv.collective(lv.proj(lv.UP, lv.UP)))
    to_down = math.sqrt(math.sin(p.gamma) ** 2 * p.kappa) * lv.proj(lv.DOWN, lv.EXC)
    to_up = math.sqrt(math.cos(p.gamma) ** 2 * p.kappa) * lv.proj(lv.UP, lv.EXC)
    jumps = [np.kron(to_down, lv.I3), np.kron(to_up, lv.I3),
             np.kron(lv.I3, to_down), np.kron(lv.I3, to_up)]
    return LindbladModel(Operator(h, lv.TWO_IONS), [Operator(j, lv.TWO_IONS) for j in jumps])


def continuous_spectrum(p: ContinuousParams, method: str = "qr"):
    return spectral_analysis(liouvillian(build_continuous_model(p)), "generator", method=method)


def continuous_gap(p: ContinuousParams, method: str = "qr") -> float:
    """Liouvillian gap in units of J."""
    res = continuous_spectrum(p, method)
    if res.degenerate:
        raise DegenerateSteadyStateError(
            f"steady state is not unique at omega_c={p.omega_c}, kappa={p.kappa}, gamma={p.gamma}")
    return res.gap / p.J


def rate_hz(gap_over_j: float, j_hz: float = J_PHYSICAL_HZ) -> dict:
    """Convergence rate in Hz under the two readings of a nominal J.

    ``"j_over_2pi"`` takes the nominal number as J/2pi and reports R/2pi;
    ``"j_angular"`` takes it as J in rad/s and reports R/2pi.
    """
    return {"j_over_2pi": gap_over_j * j_hz, "j_angular": gap_over_j * j_hz / (2 * math.pi)}


def fidelity_curve(p: ContinuousParams, times: Sequence[float], initial=None) -> np.ndarray:
    """Singlet fidelity of the continuous evolution at the given times (units of 1/J)."""
    gen = liouvillian(build_continuous_model(p)).data
    rho = np.outer(lv.ket(lv.DOWN, lv.DOWN), lv.ket(lv.DOWN, lv.DOWN)) if initial is None \
        else np.asarray(initial, dtype=complex)
    w, v = np.linalg.eig(gen)
    c = np.linalg.solve(v, rho.reshape(-1, order="F"))
    target = np.outer(lv.SINGLET, lv.SINGLET.conj()).reshape(-1, order="F").conj()
    proj = target @ v
    out = [float(np.real(np.sum(proj * c * np.exp(w * t)))) for t in times]
    return np.array(out)


# ---------------------------------------------------------------------------
# dressed basis and effective model

def dressed_states() -> dict:
    dd, uu = lv.ket(lv.DOWN, lv.DOWN), lv.ket(lv.UP, lv.UP)
    psi_p = (lv.ket(lv.DOWN, lv.UP) + lv.ket(lv.UP, lv.DOWN)) / math.sqrt(2)
    return {
        "chi0": (dd - uu) / math.sqrt(2),
        "chi+": 0.5 * (dd + uu + math.sqrt(2) * psi_p),
        "chi-": 0.5 * (dd + uu - math.sqrt(2) * psi_p),
        "singlet": lv.SINGLET,
    }


def dressed_transform() -> Operator:
    """Columns are chi+, chi0, chi-, singlet written in the (dd, du, ud, uu) basis."""
    st = dressed_states()
    cols = [st[k][lv.GROUND_IDX] for k in ("chi+", "chi0", "chi-", "singlet")]
    return Operator(np.stack(cols, axis=1), (2, 2))


@dataclass
class EffectiveModel:
    hamiltonian: np.ndarray
    jumps: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    valid: bool = True

    def lindblad(self, gamma: float, kappa: float) -> LindbladModel:
        """Effective dynamics on the two-ion space.

        The effective jumps land in single-excitation states; these are
        emptied again by the bare repump jumps, which do nothing on the
        ground manifold.
        """
        to_down = math.sqrt(math.sin(gamma) ** 2 * kappa) * lv.proj(lv.DOWN, lv.EXC)
        to_up = math.sqrt(math.cos(gamma) ** 2 * kappa) * lv.proj(lv.UP, lv.EXC)
        bare = [np.kron(to_down, lv.I3), np.kron(to_up, lv.I3),
                np.kron(lv.I3, to_down), np.kron(lv.I3, to_up)]
        ops = [Operator(j, lv.TWO_IONS) for j in list(self.jumps) + bare]
        return LindbladModel(Operator(self.hamiltonian, lv.TWO_IONS), ops)


def effective_model(J: float, omega_c: float, kappa: float, gamma: float) -> EffectiveModel:
    """Ground-manifold Hamiltonian and jumps after eliminating |ee>."""
    valid = omega_c + kappa > J
    if not valid:
        warnings.warn(f"omega_c + kappa = {omega_c + kappa} does not exceed J = {J}",
                      EffectiveRegimeWarning, stacklevel=2)
    st = dressed_states()
    cp, c0, cm = st["chi+"], st["chi0"], st["chi-"]

    def out(a, b):
        return np.outer(a, b.conj())

    h = omega_c * (1 + J ** 2 / (kappa ** 2 + omega_c ** 2)) * (out(cp, cp) - out(cm, cm))
    x = 0.5 * omega_c * math.sqrt(2) * J ** 2 / (kappa ** 2 - 1j * kappa * omega_c) * out(c0, cp)
    y = -0.5 * omega_c * math.sqrt(2) * J ** 2 / (kappa ** 2 + 1j * kappa * omega_c) * out(c0, cm)
    h = h + x + x.conj().T + y + y.conj().T
    # the printed form lists the conjugate pairs; symmetrize once more and insist on it
    if np.max(np.abs(h - h.conj().T)) > 1e-12:
        raise ArithmeticError("effective Hamiltonian is not Hermitian")
    h = 0.5 * (h + h.conj().T)

    c_0 = math.sqrt(2) * J / (-1j * kappa)
    c_p = J / (-omega_c - 1j * kappa)
    c_m = J / (omega_c - 1j * kappa)
    bra = c_p * cp.conj() + c_0 * c0.conj() + c_m * cm.conj()
    up, dn = math.sqrt(math.cos(gamma) ** 2 * kappa), math.sqrt(math.sin(gamma) ** 2 * kappa)
    jumps = [up * np.outer(lv.ket(lv.UP, lv.EXC), bra),
             up * np.outer(lv.ket(lv.EXC, lv.UP), bra),
             dn * np.outer(lv.ket(lv.DOWN, lv.EXC), bra),
             dn * np.outer(lv.ket(lv.EXC, lv.DOWN), bra)]
    return EffectiveModel(h, jumps, {"C0": c_0, "C+": c_p, "C-": c_m}, valid)


def effective_gap(J: float, omega_c: float, kappa: float, gamma: float) -> float:
    model = effective_model(J, omega_c, kappa, gamma).lindblad(gamma, kappa)
    return spectral_analysis(liouvillian(model), "generator").gap / J


def empirical_rate(J: float, omega_c: float, kappa: float, gamma: float, *,
                   factor: float = EMPIRICAL_FACTOR) -> float:
    """Slowest-process rate estimate, scaled by the fitted proportionality factor."""
    c2, s2 = math.cos(gamma) ** 2, math.sin(gamma) ** 2
    denom = kappa ** 2 + omega_c ** 2
    second_order = (c2 ** 2 + s2 ** 2) * kappa * (0.5 * omega_c * J / denom) ** 2
    first_order = s2 * c2 * kappa * J ** 2 / denom
    return factor * (second_order + first_order)


# ---------------------------------------------------------------------------
# optimisation and scans

@dataclass(frozen=True)
class ContinuousOptimum:
    omega_c: float          # units of J
    kappa: float            # units of J
    gamma: float            # radians
    gap: float              # units of J
    evaluations: int

    def to_dict(self) -> dict:
        return {"omega_c_over_J": self.omega_c, "kappa_over_J": self.kappa,
                "gamma_over_pi": self.gamma / math.pi, "gap_over_J": self.gap,
                "rate_hz": rate_hz(self.gap), "evaluations": self.evaluations}


DEFAULT_BOUNDS = ((0.5, 10.0), (0.5, 10.0), (0.05 * math.pi, 0.45 * math.pi))


def optimize_continuous(bounds=DEFAULT_BOUNDS, *, grid: int = 5, starts: int = 3,
                        max_iter: int = 2000, fixed_gamma: float | None = None) -> ContinuousOptimum:
    """Maximise the numeric gap over (omega_c, kappa, gamma).

    A coarse grid seeds Nelder-Mead runs from its best ``starts`` points.
    """
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    calls = [0]

    def gap_at(x):
        g = fixed_gamma if fixed_gamma is not None else x[2]
        if np.any(x[:2] < lo[:2]) or np.any(x[:2] > hi[:2]) or not lo[2] <= g <= hi[2]:
            return 0.0
        calls[0] += 1
        try:
            return continuous_gap(ContinuousParams(float(x[0]), float(x[1]), float(g)))
        except DegenerateSteadyStateError:
            return 0.0

    ndim = 2 if fixed_gamma is not None else 3
    axes = [np.linspace(lo[k], hi[k], grid) for k in range(ndim)]
    mesh = np.array(np.meshgrid(*axes, indexing="ij")).reshape(ndim, -1).T
    scores = np.array([gap_at(x) for x in mesh])
    seeds = mesh[np.argsort(-scores, kind="stable")[:starts]]
    best = None
    for x0 in seeds:
        res = minimize(lambda x: -gap_at(x), x0, method="Nelder-Mead",
                       bounds=list(zip(lo[:ndim], hi[:ndim])),
                       options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": max_iter})
        if not res.success:
            raise RuntimeError(f"Nelder-Mead did not converge from {x0}: {res.message}")
        if best is None or res.fun < best.fun:
            best = res
    x = best.x
    g = fixed_gamma if fixed_gamma is not None else float(x[2])
    return ContinuousOptimum(float(x[0]), float(x[1]), g, float(-best.fun), calls[0])


GAP_HEADER = ["omega_c_over_J", "kappa_over_J", "gamma_over_pi", "gap_over_J", "empirical_over_J"]


@dataclass(frozen=True)
class GapRow:
    omega_c: float
    kappa: float
    gamma_over_pi: float
    gap: float
    empirical: float


def gap_row(omega_c: float, kappa: float, gamma_over_pi: float) -> GapRow:
    g = gamma_over_pi * math.pi
    return GapRow(omega_c, kappa, gamma_over_pi,
                  continuous_gap(ContinuousParams(omega_c, kappa, g)),
                  empirical_rate(1.0, omega_c, kappa, g))


def kappa_scan(omega_c: float = 6.0, gammas_over_pi: Sequence[float] = (0.15, 0.25),
               kappas: Sequence[float] | None = None) -> list[GapRow]:
    kappas = np.geomspace(0.5, 20.0, 25) if kappas is None else kappas
    return [gap_row(omega_c, float(k), g) for g in gammas_over_pi for k in kappas]


def gap_surface(omegas: Sequence[float], kappas: Sequence[float],
                gammas_over_pi: Sequence[float]) -> list[GapRow]:
    return [gap_row(float(o), float(k), float(g))
            for g in gammas_over_pi for o in omegas for k in kappas]


def gap_to_csv(rows: Sequence[GapRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GAP_HEADER)
    for r in rows:
        w.writerow([repr(float(x)) for x in (r.omega_c, r.kappa, r.gamma_over_pi, r.gap,
                                              r.empirical)])
    return buf.getvalue()
