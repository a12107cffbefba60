"""Time-dependent simulation of the collective excitation drive with a truncated oscillator.

The spin-dependent force is

    H(t) = g S_phi(t) (x) (a e^{i theta(t)} + a^dag e^{-i theta(t)}),

with g = eta * Omega / 2, S_phi = sum_ions (e^{i phi}|e><d| + h.c.),
phi(t) = phi_s + eps_q t and theta(t) = (delta + eps_m) t + phi_m.  Time
is global: a pulse starting at t0 is integrated over [t0, t0 + duration].
The joint space is (ion 1, ion 2, oscillator) with dims (3, 3, fock_dim).
Frequencies are angular (rad/s), times in seconds.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from . import config
from . import levels as lv
from .integrate import dopri5
from .linalg import DensityMatrix, Operator
from .liouville import superop_from_kraus, superop_from_unitary
from .protocol import Alternating, drive_B_kraus, drive_C_unitary, singlet_fidelity

DELTA = 2 * math.pi * 15e3
ETA = 0.028
SPIN_DIM = 9
BELL_TARGET = (lv.ket(lv.DOWN, lv.DOWN) - 1j * lv.ket(lv.EXC, lv.EXC)) / math.sqrt(2)
SWEEP_KINDS = ("qubit_freq", "motional_freq", "rabi", "dephasing")
# a state entering drive A must keep this many top Fock levels (nearly) empty,
# since one loop displaces by up to |2 alpha| = 2 eta Omega / delta = 1
GUARD_LEVELS = 5


class TruncationError(RuntimeError):
    """Oscillator population reached the top of the truncated Fock space."""


@dataclass(frozen=True)
class PulseSpec:
    eta: float = ETA
    omega: float | None = None          # defaults to delta / (2 eta)
    delta: float = DELTA
    eps_q: float = 0.0
    eps_m: float = 0.0
    phi_s: float = 0.0
    phi_m: float = 0.0
    duration: float | None = None       # defaults to one loop, 2 pi / delta
    fock_dim: int = 12
    t0: float = 0.0

    def __post_init__(self):
        if self.omega is None:
            object.__setattr__(self, "omega", self.delta / (2 * self.eta))
        if self.duration is None:
            object.__setattr__(self, "duration", 2 * math.pi / self.delta)
        if self.fock_dim < 4:
            raise ValueError("fock_dim must be at least 4")
        if not self.duration > 0:
            raise ValueError("pulse duration must be positive")
        if not math.isfinite(self.eta * self.omega / self.delta):
            raise ValueError("eta * omega / delta must be finite")

    @property
    def g(self) -> float:
        return 0.5 * self.eta * self.omega

    @property
    def t1(self) -> float:
        return self.t0 + self.duration


@dataclass
class EvolutionResult:
    state: DensityMatrix                  # spin (x) spin (x) oscillator
    spin_state: DensityMatrix             # oscillator traced out
    alpha: complex                        # residual displacement from the probe state
    phi: float                            # accumulated collective phase from the probe state
    ket: np.ndarray | None = None

    @property
    def abs_alpha(self) -> float:
        return abs(self.alpha)


# ---------------------------------------------------------------------------
# operators

def annihilation(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)


_SP = lv.collective(lv.proj(lv.EXC, lv.DOWN))  # sum over ions of |e><d|


class _Force:
    """Precomputed pieces of H(t) for one pulse.

    H(t) = c1 A + c2 B + h.c. with A = g S+ (x) a and B = g S+ (x) a^dag;
    products with H are taken through sparse factors.
    """

    def __init__(self, spec: PulseSpec):
        a = annihilation(spec.fock_dim)
        self.spec = spec
        self.A = spec.g * np.kron(_SP, a)
        self.B = spec.g * np.kron(_SP, a.conj().T)
        self._sp = [sparse.csr_matrix(m) for m in (self.A, self.B, self.A.conj().T, self.B.conj().T)]

    def coefficients(self, t: float) -> tuple[complex, complex]:
        s = self.spec
        ph = s.phi_s + s.eps_q * t
        th = (s.delta + s.eps_m) * t + s.phi_m
        return np.exp(1j * (ph + th)), np.exp(1j * (ph - th))

    def __call__(self, t: float) -> np.ndarray:
        c1, c2 = self.coefficients(t)
        m = c1 * self.A + c2 * self.B
        return m + m.conj().T

    def apply(self, t: float, x: np.ndarray) -> np.ndarray:
        """H(t) @ x."""
        c1, c2 = self.coefficients(t)
        a, b, ad, bd = self._sp
        return c1 * (a @ x) + c2 * (b @ x) + np.conj(c1) * (ad @ x) + np.conj(c2) * (bd @ x)


def ms_hamiltonian(spec: PulseSpec, t: float) -> Operator:
    return Operator(_Force(spec)(t), (3, 3, spec.fock_dim))


def spin_probe_ket(phi_s: float = 0.0) -> np.ndarray:
    """Spin state with S_phi = +2: both ions in (|d> + e^{i phi}|e>)/sqrt(2)."""
    one = (lv.ket(lv.DOWN) + np.exp(1j * phi_s) * lv.ket(lv.EXC)) / math.sqrt(2)
    return np.kron(one, one)


def vacuum_ket(spin_ket: np.ndarray, fock_dim: int) -> np.ndarray:
    vac = np.zeros(fock_dim, dtype=complex)
    vac[0] = 1.0
    return np.kron(spin_ket, vac)


def fock_populations(y: np.ndarray, fock_dim: int) -> np.ndarray:
    """Oscillator level populations of a joint ket, or summed over the columns of a matrix of kets."""
    if y.ndim == 1:
        return np.sum(np.abs(y.reshape(SPIN_DIM, fock_dim)) ** 2, axis=0)
    return np.sum(np.abs(y.reshape(SPIN_DIM, fock_dim, -1)) ** 2, axis=(0, 2))


def rho_fock_populations(rho: np.ndarray, fock_dim: int) -> np.ndarray:
    return np.real(np.diag(rho)).reshape(SPIN_DIM, fock_dim).sum(axis=0)


def _breach_check(fock_dim: int, columns: np.ndarray | None = None):
    def check(t, y):
        yy = y if columns is None else y[:, columns]
        pops = fock_populations(yy, fock_dim)
        if columns is not None:
            pops = pops / max(len(columns), 1)
        top = float(pops[-2:].sum())
        if top > config.FOCK_BREACH_TOL:
            raise TruncationError(
                f"population {top:.2e} in the top two of {fock_dim} Fock levels at t={t:.3e} s")
    return check


def _headroom_check(y: np.ndarray, fock_dim: int, is_rho: bool) -> None:
    pops = rho_fock_populations(y, fock_dim) if is_rho else fock_populations(y, fock_dim)
    high = float(pops[fock_dim - 3:].sum())
    if high > config.FOCK_HEADROOM_TOL:
        raise TruncationError(
            f"initial population {high:.2e} above level {fock_dim - 3} leaves no truncation headroom")


def _as_list(pulses) -> list[PulseSpec]:
    pulses = [pulses] if isinstance(pulses, PulseSpec) else list(pulses)
    if not pulses:
        raise ValueError("need at least one pulse")
    if len({p.fock_dim for p in pulses}) != 1:
        raise ValueError("all pulses must share fock_dim")
    return pulses


def _lift_jumps(jumps, fock_dim: int) -> list[np.ndarray]:
    d = SPIN_DIM * fock_dim
    out = []
    for j in jumps:
        m = j.data if isinstance(j, Operator) else np.asarray(j, dtype=complex)
        if m.shape == (SPIN_DIM, SPIN_DIM):
            m = np.kron(m, np.eye(fock_dim))
        if m.shape != (d, d):
            raise ValueError(f"jump operator of shape {m.shape} does not fit dimension {d}")
        out.append(m)
    return out


def _dissipator(jumps: list[np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    diag = [np.diag(l) for l in jumps if np.count_nonzero(l - np.diag(np.diag(l))) == 0]
    if len(diag) == len(jumps):
        # diagonal jumps act elementwise: (l_i l_j^* - (|l_i|^2 + |l_j|^2)/2) rho_ij
        w = sum(np.outer(l, l.conj()) - 0.5 * (np.abs(l)[:, None] ** 2 + np.abs(l)[None, :] ** 2)
                for l in diag)
        return lambda rho: w * rho
    pairs = [(l, l.conj().T, l.conj().T @ l) for l in jumps]

    def d(rho):
        out = np.zeros_like(rho)
        for l, ld, ldl in pairs:
            out += l @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl)
        return out
    return d


# ---------------------------------------------------------------------------
# evolution

def _integrate_ket(pulses: list[PulseSpec], y: np.ndarray, check_columns=None,
                   rtol=config.ODE_RTOL, atol=config.ODE_ATOL) -> np.ndarray:
    n = pulses[0].fock_dim
    for p in pulses:
        h = _Force(p)
        y = dopri5(lambda t, v: -1j * h.apply(t, v), p.t0, y, p.t1, rtol=rtol, atol=atol,
                   on_step=_breach_check(n, check_columns) if y.ndim == 2 else _breach_check(n))
    return y


def _integrate_rho(pulses: list[PulseSpec], rho: np.ndarray, jumps: list[np.ndarray],
                   rtol=config.ODE_RTOL, atol=config.ODE_ATOL) -> np.ndarray:
    n = pulses[0].fock_dim
    diss = _dissipator(jumps) if jumps else (lambda r: 0.0)

    def check(t, y):
        pops = rho_fock_populations(y, n)
        if pops[-2:].sum() > config.FOCK_BREACH_TOL:
            raise TruncationError(
                f"population {pops[-2:].sum():.2e} in the top two of {n} Fock levels at t={t:.3e} s")

    for p in pulses:
        h = _Force(p)

        def rhs(t, r):
            hr = h.apply(t, r)
            return -1j * (hr - hr.conj().T) + diss(r)

        rho = dopri5(rhs, p.t0, rho, p.t1, rtol=rtol, atol=atol, on_step=check)
    return rho


def _probe(pulses: list[PulseSpec], rtol=config.ODE_RTOL, atol=config.ODE_ATOL) -> tuple[complex, float]:
    n = pulses[0].fock_dim
    psi0 = vacuum_ket(spin_probe_ket(pulses[0].phi_s), n)
    psi = _integrate_ket(pulses, psi0, rtol=rtol, atol=atol)
    return probe_readout(psi, psi0, n)


def probe_readout(psi: np.ndarray, psi0: np.ndarray, fock_dim: int) -> tuple[complex, float]:
    """alpha and Phi from the evolved S = +2 probe state.

    For U = D(alpha S) exp(-i Phi S^2) the probe picks up a coherent state
    of amplitude 2 alpha and overlap e^{-4 i Phi} e^{-2 |alpha|^2} with its
    initial value.
    """
    a = np.kron(np.eye(SPIN_DIM), annihilation(fock_dim))
    alpha = complex(psi.conj() @ (a @ psi)) / 2
    ov = complex(psi0.conj() @ psi)
    phi = float((-np.angle(ov)) % (2 * math.pi)) / 4
    return alpha, phi


def evolve(pulses, initial, jumps: Sequence = (), *, probe: bool = True,
           rtol: float = config.ODE_RTOL, atol: float = config.ODE_ATOL) -> EvolutionResult:
    """Evolve a joint spin-oscillator state through one or more pulses.

    ``initial`` is a ket or a density matrix on the joint space.  With
    ``jumps`` (spin-space or joint-space operators) the Lindblad equation is
    integrated on the density matrix; otherwise the ket (or density matrix)
    evolves unitarily.  ``pulses`` may also be a callable ``H(t)`` together
    with a single PulseSpec giving the time window (see ``evolve_hamiltonian``).
    """
    pulses = _as_list(pulses)
    n = pulses[0].fock_dim
    d = SPIN_DIM * n
    init = initial.data if isinstance(initial, Operator) else np.asarray(initial, dtype=complex)
    is_rho = init.ndim == 2
    if init.shape not in ((d,), (d, d)):
        raise ValueError(f"initial state shape {init.shape} does not match dimension {d}")
    _headroom_check(init, n, is_rho)
    ljs = _lift_jumps(jumps, n)
    ket = None
    if ljs or is_rho:
        rho0 = init if is_rho else np.outer(init, init.conj())
        rho = _integrate_rho(pulses, rho0, ljs, rtol, atol)
    else:
        ket = _integrate_ket(pulses, init, rtol=rtol, atol=atol)
        rho = np.outer(ket, ket.conj())
    alpha, phi = _probe(pulses, rtol, atol) if probe else (complex("nan"), float("nan"))
    state = DensityMatrix(0.5 * (rho + rho.conj().T), (3, 3, n), validate=False)
    return EvolutionResult(state, spin_reduced(rho, n), alpha, phi, ket)


def evolve_hamiltonian(h: Callable[[float], np.ndarray], y0, t0: float, t1: float,
                       jumps: Sequence[np.ndarray] = (), *, rtol=config.ODE_RTOL,
                       atol=config.ODE_ATOL) -> np.ndarray:
    """Generic engine: Schroedinger (ket) or Lindblad (matrix) evolution under H(t)."""
    y0 = np.asarray(y0, dtype=complex)
    if y0.ndim == 1 and not jumps:
        return dopri5(lambda t, v: -1j * (h(t) @ v), t0, y0, t1, rtol=rtol, atol=atol)
    rho = y0 if y0.ndim == 2 else np.outer(y0, y0.conj())
    ljs = [np.asarray(j, dtype=complex) for j in jumps]
    diss = _dissipator(ljs) if ljs else (lambda r: 0.0)

    def rhs(t, r):
        hr = h(t) @ r
        return -1j * (hr - r @ h(t)) + diss(r)
    return dopri5(rhs, t0, rho, t1, rtol=rtol, atol=atol)


def spin_reduced(rho: np.ndarray, fock_dim: int) -> DensityMatrix:
    r = np.trace(rho.reshape(SPIN_DIM, fock_dim, SPIN_DIM, fock_dim), axis1=1, axis2=3)
    return DensityMatrix(0.5 * (r + r.conj().T), lv.TWO_IONS, validate=False)


def propagator(pulses, *, rtol=config.ODE_RTOL, atol=config.ODE_ATOL,
               watched_inputs: int = 1) -> np.ndarray:
    """Joint unitary of a pulse sequence on the truncated space.

    The breach check watches the columns whose oscillator input is below
    ``watched_inputs`` (vacuum only by default).  Inputs near the cutoff
    are never trustworthy in a truncated model; callers propagating
    general states should keep them in a guard band (see GUARD_LEVELS).
    """
    pulses = _as_list(pulses)
    n = pulses[0].fock_dim
    d = SPIN_DIM * n
    cols = np.array([s * n + m for s in range(SPIN_DIM) for m in range(watched_inputs)])
    return _integrate_ket(pulses, np.eye(d, dtype=complex), check_columns=cols, rtol=rtol, atol=atol)


def spin_kraus(u: np.ndarray, fock_dim: int, n_in: int = 0) -> list[np.ndarray]:
    """Spin channel K_n = <n|U|n_in> of a joint unitary."""
    r = u.reshape(SPIN_DIM, fock_dim, SPIN_DIM, fock_dim)
    return [r[:, k, :, n_in] for k in range(fock_dim)]


def alpha_phi_closed_form(t, eta: float, omega: float, delta: float):
    """Displacement alpha(t) and collective phase Phi(t) of a single ideal pulse from t = 0."""
    if delta == 0:
        raise ValueError("delta must be nonzero")
    t = np.asarray(t, dtype=float)
    alpha = -1j * (eta * omega / delta) * np.exp(-0.5j * delta * t) * np.sin(0.5 * delta * t)
    phi = (eta * omega / delta) ** 2 / 4 * (delta * t - np.sin(delta * t))
    return alpha, phi


def probe_alpha_phi(spec: PulseSpec, times: Sequence[float], *,
                    rtol=config.ODE_RTOL, atol=config.ODE_ATOL) -> tuple[np.ndarray, np.ndarray]:
    """alpha(t), Phi(t) from the integrated probe state at the given times inside one pulse."""
    n = spec.fock_dim
    psi0 = vacuum_ket(spin_probe_ket(spec.phi_s), n)
    psi, t_prev = psi0, spec.t0
    alphas, phis = [], []
    h = _Force(spec)
    for t in sorted(times):
        if t > t_prev:
            psi = dopri5(lambda s, v: -1j * h.apply(s, v), t_prev, psi, t, rtol=rtol, atol=atol)
            t_prev = t
        a, p = probe_readout(psi, psi0, n)
        alphas.append(a)
        phis.append(p)
    return np.array(alphas), np.array(phis)


# ---------------------------------------------------------------------------
# pulse sequences

@dataclass(frozen=True)
class MotionErrors:
    eps_q: float = 0.0        # qubit frequency error, rad/s
    eps_m: float = 0.0        # motional frequency error, rad/s
    eps_rabi: float = 0.0     # fractional Rabi error: Omega = (1 + eps) delta / (2 eta)
    dephasing: float = 0.0    # Gamma in L = sqrt(Gamma) (sz1 + sz2), 1/s

    def __post_init__(self):
        if self.dephasing < 0:
            raise ValueError("dephasing rate must be non-negative")


def _base(errors: MotionErrors, fock_dim: int, delta: float, duration: float) -> PulseSpec:
    return PulseSpec(eta=ETA, omega=(1 + errors.eps_rabi) * DELTA / (2 * ETA), delta=delta,
                     eps_q=errors.eps_q, eps_m=errors.eps_m, duration=duration, fock_dim=fock_dim)


def two_loop_pulses(first: PulseSpec) -> list[PulseSpec]:
    """Two back-to-back loops, the second with its motional phase advanced to flip the force."""
    t_loop = first.duration
    second = replace(first, t0=first.t0 + t_loop, phi_s=0.0,
                     phi_m=math.pi - first.delta * t_loop)
    return [first, second]


def drive_A_pulses(errors: MotionErrors = MotionErrors(), fock_dim: int = 12) -> list[PulseSpec]:
    """Collective excitation as two single-loop pulses, total phase pi/4."""
    return two_loop_pulses(_base(errors, fock_dim, DELTA, 2 * math.pi / DELTA))


def gate_pulses(loops: int, errors: MotionErrors = MotionErrors(), fock_dim: int = 12) -> list[PulseSpec]:
    """Pulses of an MS gate targeting (|dd> - i|ee>)/sqrt(2).

    One loop: duration 2 pi/delta.  Two loops: detuning sqrt(2) delta,
    each loop 2 pi/(sqrt(2) delta) long, so the total time is sqrt(2)
    times the single loop at the same Rabi frequency.
    """
    if loops == 1:
        return [_base(errors, fock_dim, DELTA, 2 * math.pi / DELTA)]
    if loops == 2:
        d2 = math.sqrt(2) * DELTA
        return two_loop_pulses(_base(errors, fock_dim, d2, 2 * math.pi / d2))
    raise ValueError("loops must be 1 or 2")


def dephasing_jump(gamma_rate: float) -> np.ndarray:
    return math.sqrt(gamma_rate) * lv.collective(lv.SZ_DE)


@dataclass
class DriveAResult:
    evolution: EvolutionResult
    kraus: list                           # spin channel for vacuum oscillator input
    unitary: np.ndarray | None = None

    def spin_superop(self) -> np.ndarray:
        return sum(np.kron(k.conj(), k) for k in self.kraus)


def drive_A_pulse_sequence(errors: MotionErrors = MotionErrors(), initial=None, *,
                           fock_dim: int = 12) -> DriveAResult:
    """Drive A from ``initial`` (default |dd>|0>), with its spin channel for vacuum input."""
    return with_fock_retry(lambda n: _drive_A(errors, initial, n), fock_dim)


def _drive_A(errors: MotionErrors, initial, n: int) -> DriveAResult:
    pulses = drive_A_pulses(errors, n)
    if initial is None:
        initial = vacuum_ket(lv.ket(lv.DOWN, lv.DOWN), n)
    if errors.dephasing > 0:
        ev = evolve(pulses, initial, [dephasing_jump(errors.dephasing)])
        return DriveAResult(ev, [], None)
    u = propagator(pulses)
    init = np.asarray(initial.data if isinstance(initial, Operator) else initial, dtype=complex)
    _headroom_check(init, n, init.ndim == 2)
    final = u @ init if init.ndim == 1 else u @ init @ u.conj().T
    rho = np.outer(final, final.conj()) if final.ndim == 1 else final
    psi0 = vacuum_ket(spin_probe_ket(pulses[0].phi_s), n)
    alpha, phi = probe_readout(u @ psi0, psi0, n)
    ev = EvolutionResult(DensityMatrix(rho, (3, 3, n), validate=False), spin_reduced(rho, n),
                         alpha, phi, final if final.ndim == 1 else None)
    return DriveAResult(ev, spin_kraus(u, n), u)


def channel_distance(superop: np.ndarray, u: np.ndarray) -> float:
    """Largest trace distance between ``superop`` and the unitary ``u`` over probe inputs.

    Probes are the 9 basis states and every (|i> + |j>)/sqrt(2) pair, which
    is enough to expose relative phases between spin sectors.
    """
    d = u.shape[0]
    probes = [np.eye(d)[i] for i in range(d)]
    probes += [(np.eye(d)[i] + np.eye(d)[j]) / math.sqrt(2) for i in range(d) for j in range(i + 1, d)]
    worst = 0.0
    for v in probes:
        rho = np.outer(v, v.conj())
        out = (superop @ rho.reshape(-1, order="F")).reshape(d, d, order="F")
        ref = u @ rho @ u.conj().T
        diff = out - ref
        worst = max(worst, 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))).sum()))
    return worst


def with_fock_retry(fn: Callable[[int], object], fock_dim: int, extra: int = 5, max_retries: int = 4):
    """Run fn(fock_dim); on a truncation breach retry with fock_dim + extra, a few times."""
    n = fock_dim
    for attempt in range(max_retries + 1):
        try:
            return fn(n)
        except TruncationError:
            if attempt == max_retries:
                raise
            n += extra


def bell_error(spin_state) -> float:
    r = spin_state.data if isinstance(spin_state, Operator) else spin_state
    return 1.0 - float(np.real(BELL_TARGET.conj() @ r @ BELL_TARGET))


def ms_gate_fidelity(loops: int, errors: MotionErrors = MotionErrors(), *, fock_dim: int = 12) -> float:
    """Bell-state error of an MS gate from |dd>|0>.  (Despite the name, returns 1 - F.)"""
    def run(n):
        pulses = gate_pulses(loops, errors, n)
        psi0 = vacuum_ket(lv.ket(lv.DOWN, lv.DOWN), n)
        jumps = [dephasing_jump(errors.dephasing)] if errors.dephasing > 0 else []
        return evolve(pulses, psi0, jumps, probe=False)
    return bell_error(with_fock_retry(run, fock_dim).spin_state)


# ---------------------------------------------------------------------------
# protocol with motion

def _spin_kraus_on_joint(rho: np.ndarray, ks: Sequence[np.ndarray], n: int) -> np.ndarray:
    r = rho.reshape(SPIN_DIM, n, SPIN_DIM, n)
    k = np.stack(ks)
    out = np.einsum("mik,kalb,mjl->iajb", k, r, k.conj(), optimize=True)
    return out.reshape(SPIN_DIM * n, SPIN_DIM * n)


@dataclass
class MotionProtocolResult:
    error: float                      # 1 - singlet fidelity after the last cycle
    fidelities: list
    fock_dim: int
    trace_drift: float


def drive_A_spin_channel(errors: MotionErrors = MotionErrors(), fock_dim: int = 12) -> np.ndarray:
    """81x81 column-stacked spin superoperator of drive A for an oscillator starting in vacuum.

    Unitary cases use the Kraus elements <n|U|0>; with dephasing the
    Lindblad equation is integrated for every input |i><j| (x) |0><0|,
    grouped by spin sector, and the oscillator is traced out.
    """
    return with_fock_retry(lambda n: _spin_channel(errors, n), fock_dim)


def _spin_channel(errors: MotionErrors, n: int) -> np.ndarray:
    pulses = drive_A_pulses(errors, n)
    if errors.dephasing == 0:
        ks = spin_kraus(propagator(pulses), n)
        return sum(np.kron(k.conj(), k) for k in ks)
    return _dephased_spin_channel(pulses, errors.dephasing, n)


# Which ions sit in |u> is conserved by the force and by the dephasing
# jump, so the spin space splits into four invariant sectors.
_SECTORS = [np.array([3 * a + b for a in ia for b in ib])
            for ia, ib in [((0, 2), (0, 2)), ((1,), (0, 2)), ((0, 2), (1,)), ((1,), (1,))]]


def _dephased_spin_channel(pulses: list[PulseSpec], rate: float, n: int) -> np.ndarray:
    """Spin channel with dephasing, one block of sector pairs at a time.

    An input |i><j| (x) |0><0| stays inside the (sector(i), sector(j))
    block of the joint density matrix, so each block is integrated as a
    batch of its own inputs.
    """
    z = np.real(np.diag(lv.collective(lv.SZ_DE)))
    a = annihilation(n)
    sup = np.zeros((SPIN_DIM ** 2, SPIN_DIM ** 2), dtype=complex)
    for si in _SECTORS:
        for sj in _SECTORS:
            zi, zj = np.repeat(z[si], n), np.repeat(z[sj], n)
            w = -0.5 * rate * (zi[:, None] - zj[None, :]) ** 2
            inputs = [(i, j) for i in si for j in sj]
            batch = np.zeros((len(inputs), len(si) * n, len(sj) * n), dtype=complex)
            for b, (i, j) in enumerate(inputs):
                batch[b, list(si).index(i) * n, list(sj).index(j) * n] = 1.0
            for p in pulses:
                fi, fj = _SectorForce(p, si, a), _SectorForce(p, sj, a)
                diag_inputs = [b for b, (i, j) in enumerate(inputs) if i == j]

                def rhs(t, x, fi=fi, fj=fj):
                    return -1j * (fi(t) @ x - x @ fj(t)) + w * x

                def check(t, x, diag_inputs=diag_inputs):
                    for b in diag_inputs:
                        pops = np.real(np.diag(x[b])).reshape(-1, n).sum(axis=0)
                        if pops[-2:].sum() > config.FOCK_BREACH_TOL:
                            raise TruncationError(
                                f"population in the top two of {n} Fock levels at t={t:.3e} s")

                batch = dopri5(rhs, p.t0, batch, p.t1, on_step=check)
            red = np.trace(batch.reshape(len(inputs), len(si), n, len(sj), n), axis1=2, axis2=4)
            for b, (i, j) in enumerate(inputs):
                img = np.zeros((SPIN_DIM, SPIN_DIM), dtype=complex)
                img[np.ix_(si, sj)] = red[b]
                sup[:, i + SPIN_DIM * j] = img.reshape(-1, order="F")
    return sup


class _SectorForce:
    """H(t) restricted to one spin sector (x) oscillator, as a dense matrix."""

    def __init__(self, spec: PulseSpec, sector: np.ndarray, a: np.ndarray):
        sp = _SP[np.ix_(sector, sector)]
        self.full = _Force.__new__(_Force)
        self.full.spec = spec
        self.A = spec.g * np.kron(sp, a)
        self.B = spec.g * np.kron(sp, a.conj().T)

    def __call__(self, t: float) -> np.ndarray:
        c1, c2 = _Force.coefficients(self.full, t)
        m = c1 * self.A + c2 * self.B
        return m + m.conj().T


def protocol_with_motion(errors: MotionErrors = MotionErrors(), n_cycles: int = 80, *,
                         gamma: float = 0.23 * math.pi, schedule: Alternating = Alternating(),
                         fock_dim: int = 12, max_fock: int = 120) -> MotionProtocolResult:
    """Pumping cycles with drive A simulated on the joint state, from |dd>|0>.

    The oscillator is carried across cycles; repump and Zeeman drive act
    on the spins only.  Whenever more than FOCK_BREACH_TOL of population
    sits in the top GUARD_LEVELS Fock levels before a cycle, or the top
    two levels are reached during drive A, the state is embedded into a
    space 5 levels larger and the cycle is redone there.
    """
    n = fock_dim
    psi0 = vacuum_ket(lv.ket(lv.DOWN, lv.DOWN), n)
    rho = np.outer(psi0, psi0.conj())
    kb = [e.data for e in drive_B_kraus(gamma).elements]
    uc = {k: drive_C_unitary(schedule.theta_for(k)).data for k in (1, 2)}
    step = _cycle_drive(errors, n)
    fids = [singlet_fidelity(spin_reduced(rho, n))]
    for k in range(1, n_cycles + 1):
        while True:
            if float(rho_fock_populations(rho, n)[n - GUARD_LEVELS:].sum()) <= config.FOCK_BREACH_TOL:
                try:
                    out = step(rho)
                    break
                except TruncationError:
                    pass
            if n + 5 > max_fock:
                raise TruncationError(f"cycle {k}: oscillator needs more than {max_fock} Fock levels")
            rho = embed_fock(rho, n, n + 5)
            n += 5
            step = _cycle_drive(errors, n)
        rho = _spin_kraus_on_joint(out, kb, n)
        rho = _spin_kraus_on_joint(rho, [uc[2 - k % 2]], n)
        fids.append(singlet_fidelity(spin_reduced(rho, n)))
    drift = abs(float(np.real(np.trace(rho))) - 1.0)
    return MotionProtocolResult(1.0 - fids[-1], fids, n, drift)


def _cycle_drive(errors: MotionErrors, n: int) -> Callable[[np.ndarray], np.ndarray]:
    pulses = drive_A_pulses(errors, n)
    if errors.dephasing > 0:
        jumps = [np.kron(dephasing_jump(errors.dephasing), np.eye(n))]
        return lambda rho: _integrate_rho(pulses, rho, jumps)
    u = propagator(pulses)
    ud = u.conj().T
    return lambda rho: u @ rho @ ud


def embed_fock(rho: np.ndarray, n_old: int, n_new: int) -> np.ndarray:
    """Zero-pad a joint density matrix to a larger oscillator truncation."""
    r = rho.reshape(SPIN_DIM, n_old, SPIN_DIM, n_old)
    out = np.zeros((SPIN_DIM, n_new, SPIN_DIM, n_new), dtype=complex)
    out[:, :n_old, :, :n_old] = r
    return out.reshape(SPIN_DIM * n_new, SPIN_DIM * n_new)


# ---------------------------------------------------------------------------
# sweeps

def default_grid(kind: str, points: int = 9) -> np.ndarray:
    top = {"qubit_freq": DELTA / 10, "motional_freq": DELTA / 10, "rabi": 0.1,
           "dephasing": DELTA / 100}
    if kind not in top:
        raise ValueError(f"unknown sweep kind {kind!r}; expected one of {SWEEP_KINDS}")
    return np.linspace(0.0, top[kind], points)


def errors_for(kind: str, value: float) -> MotionErrors:
    if kind == "qubit_freq":
        return MotionErrors(eps_q=value)
    if kind == "motional_freq":
        return MotionErrors(eps_m=value)
    if kind == "rabi":
        return MotionErrors(eps_rabi=value)
    if kind == "dephasing":
        return MotionErrors(dephasing=value)
    raise ValueError(f"unknown sweep kind {kind!r}; expected one of {SWEEP_KINDS}")


@dataclass(frozen=True)
class SweepRow:
    error_kind: str
    error_value: float
    gate1_error: float
    gate2_error: float
    protocol_error: float


def protocol_reset(errors: MotionErrors = MotionErrors(), n_cycles: int = 80, *,
                   gamma: float = 0.23 * math.pi, schedule: Alternating = Alternating(),
                   fock_dim: int = 12) -> MotionProtocolResult:
    """Pumping cycles with the oscillator returned to vacuum before every drive A.

    Drive A then acts on the spins as a fixed channel (see
    drive_A_spin_channel), so the run is an iteration of 81x81 maps.
    """
    sa = drive_A_spin_channel(errors, fock_dim)
    sb = superop_from_kraus(drive_B_kraus(gamma)).data
    maps = {k: superop_from_unitary(drive_C_unitary(schedule.theta_for(k))).data @ sb @ sa
            for k in (1, 2)}
    v = np.zeros(SPIN_DIM ** 2, dtype=complex)
    v[0] = 1.0
    fids = [singlet_fidelity(v.reshape(SPIN_DIM, SPIN_DIM, order="F"))]
    for k in range(1, n_cycles + 1):
        v = maps[2 - k % 2] @ v
        fids.append(singlet_fidelity(v.reshape(SPIN_DIM, SPIN_DIM, order="F")))
    drift = abs(float(np.real(np.trace(v.reshape(SPIN_DIM, SPIN_DIM, order="F")))) - 1.0)
    return MotionProtocolResult(1.0 - fids[-1], fids, fock_dim, drift)


PROTOCOL_MODES = ("reset", "carry")


def sweep_point(kind: str, value: float, *, n_cycles: int = 80, fock_dim: int = 12,
                mode: str = "reset") -> SweepRow:
    """Gate and protocol errors at one grid point.

    ``mode="reset"`` puts the oscillator back in vacuum every cycle;
    ``mode="carry"`` keeps the joint spin-oscillator state across cycles.
    """
    if mode not in PROTOCOL_MODES:
        raise ValueError(f"unknown protocol mode {mode!r}; expected one of {PROTOCOL_MODES}")
    errs = errors_for(kind, value)
    run = protocol_reset if mode == "reset" else protocol_with_motion
    return SweepRow(kind, float(value),
                    ms_gate_fidelity(1, errs, fock_dim=fock_dim),
                    ms_gate_fidelity(2, errs, fock_dim=fock_dim),
                    run(errs, n_cycles, fock_dim=fock_dim).error)


def error_sweep(kind: str, grid: Sequence[float] | None = None, *, n_cycles: int = 80,
                fock_dim: int = 12, mode: str = "reset") -> list[SweepRow]:
    grid = default_grid(kind) if grid is None else grid
    return [sweep_point(kind, v, n_cycles=n_cycles, fock_dim=fock_dim, mode=mode) for v in grid]


SWEEP_HEADER = ["error_kind", "error_value", "gate1_error", "gate2_error", "protocol_error"]


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([r.error_kind] + [repr(float(x)) for x in (r.error_value, r.gate1_error,
                                                              r.gate2_error, r.protocol_error)])
    return buf.getvalue()
