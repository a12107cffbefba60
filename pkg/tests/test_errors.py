import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import apply_kraus

from singlet_pump import errors as err
from singlet_pump import levels as lv
from singlet_pump import protocol as proto
from singlet_pump.liouville import apply, superop_from_kraus

PI = math.pi
DD = np.outer(lv.ket(0, 0), lv.ket(0, 0))


# ---------------------------------------------------------------------------
# operators

def test_m00_is_global_phase():
    m = err.error_operator("0", "0").data
    assert abs(abs(m[0, 0]) - 1) < 1e-15
    np.testing.assert_allclose(m / m[0, 0], np.eye(9), atol=1e-15)


def test_mxx_maps_dd_to_ee():
    m = err.error_operator("x", "x").data
    out = m @ DD @ m.conj().T
    np.testing.assert_allclose(out, np.outer(lv.ket(2, 2), lv.ket(2, 2)), atol=1e-15)


def test_mz0_is_phase_on_ion_one():
    m = err.error_operator("z", "0").data
    rho = np.full((9, 9), 1 / 9, dtype=complex)
    out = m @ rho @ m.conj().T
    np.testing.assert_allclose(np.diag(out), np.diag(rho), atol=1e-15)
    # coherence between |d,x> and |e,x> on ion 1 flips sign
    assert out[0, 6].real == pytest.approx(-rho[0, 6].real)


@pytest.mark.parametrize("i", "0xyz")
@pytest.mark.parametrize("j", "0xyz")
def test_error_operator_unitary_and_up_untouched(i, j):
    m = err.error_operator(i, j)
    assert m.is_unitary()
    uu = lv.ket(lv.UP, lv.UP)
    assert abs(abs(uu @ m.data @ uu) - 1) < 1e-14


def test_error_operator_bad_index():
    with pytest.raises(ValueError):
        err.error_operator("w", "0")


def test_depolarizing_injection_limits():
    m = err.error_operator("x", "0")
    s0 = superop_from_kraus(err.depolarizing_injection(m, 0.0))
    np.testing.assert_allclose(s0.data, np.eye(81), atol=1e-15)
    ch = err.depolarizing_injection(m, 1.0)
    ref = m.data @ DD @ m.data.conj().T
    np.testing.assert_allclose(apply_kraus([k.data for k in ch.elements], DD), ref, atol=1e-15)
    with pytest.raises(ValueError):
        err.depolarizing_injection(m, 1.5)


def test_correlated_rotation():
    np.testing.assert_allclose(err.correlated_rotation("x", 0.0).data, np.eye(9), atol=1e-15)
    assert err.correlated_rotation("z", 0.2).is_unitary()
    with pytest.raises(ValueError):
        err.correlated_rotation("y", 0.1)


def test_correlated_rotation_flip_probability():
    # eps = sqrt(2p) moves |dd> out with probability close to p for small p
    p = 1e-4
    u = err.correlated_rotation("x", math.sqrt(2 * p)).data
    leak = 1 - abs(lv.ket(0, 0) @ u @ lv.ket(0, 0)) ** 2
    assert leak == pytest.approx(p, rel=0.01)


def test_spin_motion_kraus():
    ch = err.spin_motion_kraus(0.0)
    out = apply_kraus([k.data for k in ch.elements], DD)
    np.testing.assert_allclose(out, DD, atol=1e-15)
    ch = err.spin_motion_kraus(0.005)
    assert ch.completeness_residual() < 1e-12
    out = apply_kraus([k.data for k in ch.elements], DD)
    assert 1 - out[0, 0].real == pytest.approx(0.005, rel=1e-12)
    # the p = 1/2 edge needs the square-root fallback
    assert err.spin_motion_kraus(0.5).completeness_residual() < 1e-12
    with pytest.raises(ValueError):
        err.spin_motion_kraus(0.6)


def test_spin_motion_on_singlet_targets_single_excitations():
    ch = err.spin_motion_kraus(0.01)
    flip = ch.elements[1].data @ lv.SINGLET
    single_e = [3 * a + b for a in range(3) for b in range(3) if (a == 2) != (b == 2)]
    other = np.setdiff1d(np.arange(9), single_e)
    assert np.abs(flip[other]).max() < 1e-15
    assert np.abs(flip[single_e]).max() > 0


def test_stark_phase():
    np.testing.assert_allclose(err.stark_phase_operator(0.0).data, np.eye(9), atol=1e-15)
    assert err.flip_probability(PI / 2) == pytest.approx(0.5)
    phi = 0.83
    u = err.stark_phase_operator(phi).data
    out = u @ lv.SINGLET
    assert abs(lv.TRIPLET0.conj() @ out) ** 2 == pytest.approx(err.flip_probability(phi), abs=1e-14)
    ratio = out[3 * lv.UP + lv.DOWN] / -out[3 * lv.DOWN + lv.UP]
    assert np.angle(ratio) == pytest.approx(phi)


def test_stark_phase_from_intensity_imbalance():
    u = err.stark_phase_error(0.05, 2 * PI * 25e3, 1e-4).data
    np.testing.assert_allclose(u, err.stark_phase_operator(2 * 0.05 * 2 * PI * 25e3 * 1e-4).data)


@given(st.floats(min_value=-10, max_value=10, allow_nan=False))
@settings(max_examples=30, deadline=None)
def test_stark_flip_functional_form(phi):
    out = err.stark_phase_operator(phi).data @ lv.SINGLET
    assert 1 - abs(lv.SINGLET.conj() @ out) ** 2 == pytest.approx(math.sin(phi / 2) ** 2, abs=1e-12)


def test_drive_c_imbalance():
    np.testing.assert_allclose(err.drive_C_imbalance(0.75 * PI, 0.0).data,
                               proto.drive_C_unitary(0.75 * PI).data, atol=1e-15)
    assert err.imbalance_leak_probability(0.75 * PI, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert err.imbalance_leak_probability(0.75 * PI, 0.01) == pytest.approx(1.4e-4, rel=0.1)
    with pytest.raises(ValueError):
        err.drive_C_imbalance(1.0, 0.3)


def test_imbalance_coefficient_against_overlap_oracle():
    # oracle: u (x) u leaves the singlet alone, so only the relative rotation
    # v = exp(i theta eps sigma_x / 2) on ion 2 matters, and <S|1 (x) v|S> = Tr(v)/2;
    # the leak is therefore sin^2(theta eps / 2), about (theta^2 / 4) eps^2
    theta = 0.75 * PI
    for eps in (0.005, 0.02, 0.05):
        ref = math.sin(theta * eps / 2) ** 2
        assert err.imbalance_leak_probability(theta, eps) == pytest.approx(ref, rel=1e-10)
    assert err.fit_imbalance_coefficient(theta) == pytest.approx(1.4, abs=0.15)


# ---------------------------------------------------------------------------
# injection and steady states

def test_spec_validation():
    with pytest.raises(ValueError):
        err.ErrorChannelSpec(err.PauliPair("x", "0", 0.1), insertion="before_A")
    with pytest.raises(ValueError):
        err.PauliPair("x", "0", 1.5)
    with pytest.raises(ValueError):
        err.StarkPhase(math.nan)
    with pytest.raises(TypeError):
        err.at_probability(err.DriveCImbalance(0.01), 0.1)


@pytest.mark.parametrize("kind", [err.PauliPair("x", "0", 0.0), err.CorrelatedRotation("x", 0.0),
                                  err.SpinMotionKraus(0.0), err.StarkPhase(0.0)])
@pytest.mark.parametrize("insertion", err.INSERTION_POINTS)
def test_zero_strength_reproduces_ideal_trajectory(kind, insertion):
    params = err.REFERENCE_PARAMS
    spec = err.ErrorChannelSpec(kind, insertion)
    rho0 = lv.product_state(lv.DOWN, lv.DOWN)
    ideal = proto.run_protocol(rho0, params, 12)
    noisy = proto.run_protocol(rho0, params, 12, maps=err.perturbed_cycle_maps(params, spec))
    for a, b in zip(ideal.states, noisy.states):
        np.testing.assert_allclose(a.data, b.data, atol=1e-14, rtol=0)


@pytest.mark.parametrize("i", "xyz")
@pytest.mark.parametrize("j", "xyz")
def test_global_pauli_pairs_leave_singlet(i, j):
    e = err.steady_state_error(err.ErrorChannelSpec(err.PauliPair(i, j, 0.05)))
    assert abs(e) <= 1e-9


def test_local_pauli_slopes_positive_and_symmetric():
    slopes = {}
    for a in "xyz":
        for pair in ((a, "0"), ("0", a)):
            slopes[pair] = err.steady_state_error_slope(err.PauliPair(*pair, 0.0)).slope
    assert all(s > 0 for s in slopes.values())
    for a in "xyz":
        assert slopes[(a, "0")] == pytest.approx(slopes[("0", a)], rel=0.01)


def test_uncorrelated_bit_flip_at_half_percent():
    p = 0.005
    e = err.steady_state_error(err.ErrorChannelSpec(err.PauliPair("x", "0", p)))
    assert e == pytest.approx(5.2 * p, rel=0.10)


def test_correlated_bit_flip_at_half_percent():
    p = 0.005
    e = err.steady_state_error(err.ErrorChannelSpec(err.CorrelatedRotation("x", math.sqrt(2 * p))))
    assert e == pytest.approx(3.2 * p, rel=0.10)


@pytest.mark.parametrize("eps", [0.01, 0.1, 0.3])
def test_correlated_phase_flip_is_harmless(eps):
    e = err.steady_state_error(err.ErrorChannelSpec(err.CorrelatedRotation("z", eps)))
    assert abs(e) <= 1e-6


def test_spin_motion_matches_correlated_rotation():
    p = 0.005
    a = err.steady_state_error(err.ErrorChannelSpec(err.SpinMotionKraus(p)))
    b = err.steady_state_error(err.ErrorChannelSpec(err.CorrelatedRotation("x", math.sqrt(2 * p))))
    assert a == pytest.approx(b, rel=0.05)


def test_slope_fit_rounding_and_flags():
    fit = err.steady_state_error_slope(err.PauliPair("x", "0", 0.0))
    assert fit.rounded == 5 and not fit.nonlinear
    flat = err.steady_state_error_slope(err.PauliPair("x", "x", 0.0))
    assert abs(flat.slope) < 1e-9 and flat.r2 == 1.0
    with pytest.raises(ValueError):
        err.steady_state_error_slope(err.PauliPair("x", "0", 0.0), p_grid=(0.01, 0.05))


def test_slopes_csv():
    fit = err.steady_state_error_slope(err.CorrelatedRotation("x", 0.0), p_grid=(1e-3, 1e-2))
    lines = err.slopes_to_csv([fit]).splitlines()
    assert lines[0] == "channel,p,steady_state_error,slope_fit"
    assert lines[1].startswith("U_x,0.001,")
    assert "np." not in "".join(lines)


def test_insertion_point_changes_result():
    kind = err.PauliPair("x", "0", 0.005)
    a = err.steady_state_error(err.ErrorChannelSpec(kind, "after_A"))
    b = err.steady_state_error(err.ErrorChannelSpec(kind, "after_C"))
    assert a > 0 and b > 0 and a != pytest.approx(b, rel=1e-6)


def test_phenomenological_model():
    assert 0.92 <= err.phenomenological_fidelity(0.02) <= 0.94


def test_echo_under_stark_phase():
    params = err.REFERENCE_PARAMS
    spec = err.ErrorChannelSpec(err.StarkPhase(1.3))
    e = err.steady_state_error(spec, params)
    assert abs(e) <= 1e-9
    # odd cycles carry the singlet into the triplet and back
    maps = err.perturbed_cycle_maps(params, spec)
    mid = apply(maps[0], lv.singlet_state())
    assert proto.singlet_fidelity(mid) < 0.9
