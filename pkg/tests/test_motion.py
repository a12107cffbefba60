import math

import numpy as np
import pytest

from oracles import trace_distance

from singlet_pump import levels as lv
from singlet_pump import motion as M
from singlet_pump import protocol as proto
from singlet_pump.linalg import expm_array
from singlet_pump.liouville import spectral_analysis, SuperOperator

PI = math.pi
S_XE = lv.collective(lv.SX_DE)


def entanglement_entropy(psi, fock_dim):
    r = psi.reshape(M.SPIN_DIM, fock_dim)
    w = np.linalg.eigvalsh(r @ r.conj().T)
    w = w[w > 1e-300]
    return float(-(w * np.log(w)).sum())


# ---------------------------------------------------------------------------
# pulse spec and Hamiltonian

def test_pulse_spec_defaults_and_validation():
    s = M.PulseSpec()
    assert s.omega == pytest.approx(M.DELTA / (2 * M.ETA))
    assert s.duration == pytest.approx(2 * PI / M.DELTA)
    with pytest.raises(ValueError):
        M.PulseSpec(fock_dim=3)
    with pytest.raises(ValueError):
        M.PulseSpec(duration=-1.0)


def test_hamiltonian_phase_free_instant():
    s = M.PulseSpec(fock_dim=6)
    a = M.annihilation(6)
    ref = s.g * np.kron(S_XE, a + a.conj().T)
    np.testing.assert_allclose(M.ms_hamiltonian(s, 0.0).data, ref, atol=1e-9)


def test_hamiltonian_hermitian_random():
    rng = np.random.default_rng(0)
    for _ in range(100):
        s = M.PulseSpec(fock_dim=5, eps_q=rng.normal() * 1e3, eps_m=rng.normal() * 1e3,
                        phi_s=rng.uniform(0, 2 * PI), phi_m=rng.uniform(0, 2 * PI),
                        eta=rng.uniform(0.01, 0.1))
        h = M.ms_hamiltonian(s, rng.uniform(0, 1e-3))
        scale = np.abs(h.data).max()
        assert np.abs(h.data - h.data.conj().T).max() <= 1e-12 * scale


def test_hamiltonian_ladder_element():
    n, fock = 3, 6
    s = M.PulseSpec(fock_dim=fock)
    h = M.ms_hamiltonian(s, 0.0).data
    row = (3 * lv.EXC + lv.DOWN) * fock + (n - 1)
    col = (3 * lv.DOWN + lv.DOWN) * fock + n
    assert abs(h[row, col]) == pytest.approx(0.5 * s.eta * s.omega * math.sqrt(n), rel=1e-12)


# ---------------------------------------------------------------------------
# evolution engine

def test_evolve_zero_hamiltonian():
    y0 = np.array([0.6, 0.8j])
    out = M.evolve_hamiltonian(lambda t: np.zeros((2, 2)), y0, 0.0, 3.0)
    np.testing.assert_allclose(out, y0, atol=1e-14)


def test_evolve_pure_dephasing():
    rate, t = 0.4, 1.7
    rho0 = np.full((2, 2), 0.5, dtype=complex)
    sz = np.diag([1.0, -1.0])
    out = M.evolve_hamiltonian(lambda s: np.zeros((2, 2)), rho0, 0.0, t,
                               jumps=[math.sqrt(rate) * sz])
    assert out[0, 1].real == pytest.approx(0.5 * math.exp(-2 * rate * t), rel=1e-7)
    np.testing.assert_allclose(np.diag(out).real, [0.5, 0.5], atol=1e-12)


def test_single_loop_gives_half_phase():
    spec = M.PulseSpec()
    res = M.evolve(spec, M.vacuum_ket(lv.ket(0, 0), spec.fock_dim))
    ref = expm_array(-1j * PI / 8 * S_XE @ S_XE) @ lv.ket(0, 0)
    assert trace_distance(res.spin_state.data, np.outer(ref, ref.conj())) <= 1e-6
    assert res.phi == pytest.approx(PI / 8, abs=1e-7)
    assert res.abs_alpha <= 1e-7


def test_evolve_headroom_and_shape_checks():
    spec = M.PulseSpec(fock_dim=6)
    top = np.zeros(9 * 6, dtype=complex)
    top[5] = 1.0
    with pytest.raises(M.TruncationError):
        M.evolve(spec, top)
    with pytest.raises(ValueError):
        M.evolve(spec, np.ones(7))


def test_evolve_density_matrix_matches_ket():
    spec = M.PulseSpec(fock_dim=8)
    psi = M.vacuum_ket(lv.ket(0, 1), 8)
    a = M.evolve(spec, psi, probe=False)
    b = M.evolve(spec, np.outer(psi, psi.conj()), probe=False)
    np.testing.assert_allclose(a.state.data, b.state.data, atol=1e-7)


# ---------------------------------------------------------------------------
# closed form

def test_closed_form_cases():
    eta, delta = 0.028, M.DELTA
    omega = delta / (2 * eta)
    a, _ = M.alpha_phi_closed_form(2 * PI / delta, eta, omega, delta)
    assert abs(a) < 1e-15
    _, phi = M.alpha_phi_closed_form(4 * PI / delta, eta, omega, delta)
    assert phi == pytest.approx(PI / 4, rel=1e-14)
    a, _ = M.alpha_phi_closed_form(PI / delta, eta, omega, delta)
    assert abs(a) == pytest.approx(eta * omega / delta, rel=1e-14)
    with pytest.raises(ValueError):
        M.alpha_phi_closed_form(1.0, eta, omega, 0.0)


def test_closed_form_matches_integration():
    spec = M.PulseSpec()
    times = np.linspace(0, spec.duration, 11)[1:]
    alpha, phi = M.probe_alpha_phi(spec, times)
    ca, cp = M.alpha_phi_closed_form(times, spec.eta, spec.omega, spec.delta)
    assert np.abs(alpha - ca).max() <= 1e-6
    assert np.abs(phi - cp).max() <= 1e-6


# ---------------------------------------------------------------------------
# drive A

def test_drive_a_zero_errors():
    res = M.drive_A_pulse_sequence()
    rho = res.evolution.spin_state.data
    assert rho[8, 8].real == pytest.approx(1.0, abs=1e-6)
    assert res.evolution.abs_alpha <= 1e-9
    assert res.evolution.phi == pytest.approx(PI / 4, abs=1e-6)


def test_drive_a_channel_is_minus_sign_exponential():
    sup = M.drive_A_pulse_sequence().spin_superop()
    minus = expm_array(-1j * PI / 4 * S_XE @ S_XE)
    plus = expm_array(1j * PI / 4 * S_XE @ S_XE)
    assert M.channel_distance(sup, minus) <= 1e-6
    assert M.channel_distance(sup, plus) > 0.5


def test_drive_a_singlet_input():
    psi = M.vacuum_ket(lv.SINGLET, 12)
    res = M.drive_A_pulse_sequence(initial=psi)
    assert proto.singlet_fidelity(res.evolution.spin_state) == pytest.approx(1.0, abs=1e-8)


def test_motional_error_flip_probability():
    res = M.drive_A_pulse_sequence(M.MotionErrors(eps_m=2 * PI * 200))
    alpha = res.evolution.abs_alpha
    assert alpha > 0
    sup = res.spin_superop()
    out = (sup @ np.outer(lv.SINGLET, lv.SINGLET).reshape(-1, order="F")).reshape(9, 9, order="F")
    flip = 1 - proto.singlet_fidelity(out)
    assert flip == pytest.approx(alpha ** 2, rel=0.10)


def test_spin_channel_is_trace_preserving():
    # trace preservation is limited by the integrator tolerance, about 1e-8
    sup = M.drive_A_spin_channel(M.MotionErrors(eps_q=500.0))
    assert SuperOperator(sup, lv.TWO_IONS).is_cptp(tp_tol=1e-7)


def test_factorization_in_default_truncation():
    # every Fock input up to n_max - 5 in the default 12-level space
    u = M.propagator(M.drive_A_pulses())
    rng = np.random.default_rng(1)
    spin = rng.normal(size=9) + 1j * rng.normal(size=9)
    spin /= np.linalg.norm(spin)
    for n in range(12 - 5 + 1):
        f = np.zeros(12)
        f[n] = 1
        assert entanglement_entropy(u @ np.kron(spin, f), 12) <= 1e-8


def test_factorization_with_headroom():
    fock = 30
    u = M.propagator(M.drive_A_pulses(fock_dim=fock))
    rng = np.random.default_rng(1)
    spin = rng.normal(size=9) + 1j * rng.normal(size=9)
    spin /= np.linalg.norm(spin)
    for n in range(7):
        f = np.zeros(fock)
        f[n] = 1
        assert entanglement_entropy(u @ np.kron(spin, f), fock) <= 1e-8


# ---------------------------------------------------------------------------
# gates

@pytest.mark.parametrize("loops", [1, 2])
def test_gate_zero_errors(loops):
    assert M.ms_gate_fidelity(loops) <= 1e-6


def test_gate_loops_validated():
    with pytest.raises(ValueError):
        M.gate_pulses(3)


def test_two_loop_gate_at_or_below_single_loop_for_qubit_error():
    for eps in (2 * PI * 50, 2 * PI * 150):
        errs = M.MotionErrors(eps_q=eps)
        assert M.ms_gate_fidelity(2, errs) <= M.ms_gate_fidelity(1, errs)


def test_two_loop_gate_suppresses_motional_error():
    for eps in (2 * PI * 50, 2 * PI * 200, 2 * PI * 500):
        errs = M.MotionErrors(eps_m=eps)
        assert M.ms_gate_fidelity(2, errs) < 0.25 * M.ms_gate_fidelity(1, errs)


def test_two_loop_timing():
    p1 = M.gate_pulses(1)
    p2 = M.gate_pulses(2)
    assert sum(p.duration for p in p2) == pytest.approx(math.sqrt(2) * p1[0].duration)
    assert p2[1].t0 == pytest.approx(p2[0].t1)


# ---------------------------------------------------------------------------
# protocol with motion

def test_protocol_zero_errors_after_80_cycles():
    assert M.protocol_reset().error <= 1e-5


def test_protocol_reset_matches_discrete_protocol():
    res = M.protocol_reset(n_cycles=30)
    params = proto.ProtocolParams.alternating(PI / 4, 0.23 * PI)
    ref = proto.run_protocol(lv.product_state(0, 0), params, 30)
    np.testing.assert_allclose(res.fidelities, ref.fidelities, atol=1e-6)
    assert res.trace_drift <= 1e-6


def test_carry_mode_matches_reset_without_errors():
    carry = M.protocol_with_motion(n_cycles=4)
    reset = M.protocol_reset(n_cycles=4)
    np.testing.assert_allclose(carry.fidelities, reset.fidelities, atol=1e-7)
    assert carry.trace_drift <= 1e-6


def test_rabi_error_only_slows_convergence():
    errs = M.MotionErrors(eps_rabi=0.1)
    sa = M.drive_A_spin_channel(errs)
    from singlet_pump.liouville import superop_from_kraus, superop_from_unitary
    sb = superop_from_kraus(proto.drive_B_kraus(0.23 * PI)).data
    maps = [superop_from_unitary(proto.drive_C_unitary(t)).data @ sb @ sa for t in (PI, PI / 2)]
    res = spectral_analysis(SuperOperator(maps[1] @ maps[0], lv.TWO_IONS))
    assert proto.singlet_fidelity(res.steady_state) >= 1 - 1e-9
    ideal = spectral_analysis(proto.cycle_superop(proto.ProtocolParams.alternating(PI / 4, 0.23 * PI)))
    assert res.gap < ideal.gap
    result = M.protocol_reset(errs)
    assert result.trace_drift <= 1e-6


def test_protocol_beats_gate_for_qubit_error():
    row = M.sweep_point("qubit_freq", 2 * PI * 300)
    assert row.protocol_error < row.gate1_error


# ---------------------------------------------------------------------------
# fock handling and sweep plumbing

def test_fock_retry_escalates():
    seen = []

    def fn(n):
        seen.append(n)
        if n < 22:
            raise M.TruncationError("too small")
        return n

    assert M.with_fock_retry(fn, 12) == 22
    assert seen == [12, 17, 22]
    with pytest.raises(M.TruncationError):
        M.with_fock_retry(fn, 2, max_retries=1)


def test_embed_fock_preserves_state():
    rng = np.random.default_rng(2)
    psi = rng.normal(size=9 * 4) + 0j
    rho = np.outer(psi, psi)
    big = M.embed_fock(rho, 4, 6)
    assert np.trace(big) == pytest.approx(np.trace(rho))
    np.testing.assert_allclose(M.spin_reduced(big, 6).data, M.spin_reduced(rho, 4).data, atol=1e-14)


def test_grid_and_kind_validation():
    g = M.default_grid("dephasing", 9)
    assert g[0] == 0 and g[-1] == pytest.approx(M.DELTA / 100) and len(g) == 9
    with pytest.raises(ValueError):
        M.default_grid("heating")
    with pytest.raises(ValueError):
        M.errors_for("heating", 1.0)
    with pytest.raises(ValueError):
        M.sweep_point("rabi", 0.0, mode="other")
    with pytest.raises(ValueError):
        M.MotionErrors(dephasing=-1.0)


def test_sweep_csv_format():
    rows = [M.SweepRow("rabi", 0.05, 1e-3, 2e-4, 3e-5)]
    lines = M.sweep_to_csv(rows).splitlines()
    assert lines[0] == "error_kind,error_value,gate1_error,gate2_error,protocol_error"
    assert lines[1] == "rabi,0.05,0.001,0.0002,3e-05"


def test_dephasing_channel_continuity():
    # a vanishing rate must reproduce the unitary channel
    a = M.drive_A_spin_channel(M.MotionErrors(dephasing=1e-6))
    b = M.drive_A_spin_channel()
    assert np.abs(a - b).max() <= 1e-6
