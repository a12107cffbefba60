import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from singlet_pump import continuous as C
from singlet_pump import levels as lv
from singlet_pump import protocol as proto

PI = math.pi
NAMED_POINT = C.ContinuousParams(1.95, 2.58, 0.29 * PI)


@pytest.fixture(scope="module")
def global_optimum():
    return C.optimize_continuous()


# ---------------------------------------------------------------------------
# model

def test_params_validation_and_default_detuning():
    p = C.ContinuousParams(1.0, 2.0, 0.3, J=1.7)
    assert p.beta == 1.7
    assert C.ContinuousParams(1.0, 2.0, 0.3, beta=0.0).beta == 0.0
    for bad in (dict(J=0.0), dict(kappa=-1.0), dict(gamma=PI / 2)):
        kw = dict(omega_c=1.0, kappa=2.0, gamma=0.3)
        kw.update(bad)
        with pytest.raises(ValueError):
            C.ContinuousParams(**kw)
    assert C.ContinuousParams(0.2, 0.3, 0.3).effective_regime is False
    assert NAMED_POINT.effective_regime


def test_model_structure():
    p = C.ContinuousParams(1.3, 2.2, 0.27 * PI)
    m = C.build_continuous_model(p)
    assert m.hamiltonian.is_hermitian()
    assert len(m.jumps) == 4
    # branching fraction into |d> is sin^2 gamma
    j_down = m.jumps[0].data
    assert abs(j_down[3 * lv.DOWN, 3 * lv.EXC]) ** 2 == pytest.approx(
        math.sin(p.gamma) ** 2 * p.kappa, rel=1e-14)


def test_undriven_model_is_degenerate():
    with pytest.raises(C.DegenerateSteadyStateError):
        C.continuous_gap(C.ContinuousParams(0.0, 2.0, 0.3 * PI))
    assert C.continuous_spectrum(C.ContinuousParams(0.0, 2.0, 0.3 * PI)).degenerate


def test_detuning_compensates_light_shift():
    # the drive-C resonance sits at beta = J; moving beta away slows pumping
    g = [C.continuous_gap(C.ContinuousParams(1.95, 2.58, 0.29 * PI, beta=b)) for b in (0.5, 1.0, 1.5)]
    assert g[1] > g[0] and g[1] > g[2]


def test_named_point_steady_state():
    res = C.continuous_spectrum(NAMED_POINT)
    assert not res.degenerate
    assert proto.singlet_fidelity(res.steady_state) >= 1 - 1e-8


@given(st.floats(0.1 * PI + 1e-3, 0.4 * PI - 1e-3), st.floats(0.5, 20.0), st.floats(0.5, 20.0))
@settings(max_examples=25, deadline=None)
def test_steady_state_is_singlet(gamma, omega_c, kappa):
    res = C.continuous_spectrum(C.ContinuousParams(omega_c, kappa, gamma))
    assert proto.singlet_fidelity(res.steady_state) >= 1 - 1e-8


# ---------------------------------------------------------------------------
# gap

def test_gap_at_named_point():
    assert C.continuous_gap(NAMED_POINT) == pytest.approx(0.061, rel=0.05)


def test_overdamped_gap_is_smaller():
    slow = C.continuous_gap(C.ContinuousParams(6.0, 100.0, 0.25 * PI))
    fast = C.continuous_gap(C.ContinuousParams(6.0, 2.58, 0.25 * PI))
    assert slow < fast


def test_gap_matches_time_domain_fit():
    gap = C.continuous_gap(NAMED_POINT)
    t = np.linspace(3 / gap, 12 / gap, 40)
    infid = 1 - C.fidelity_curve(NAMED_POINT, t)
    slope = np.polyfit(t, np.log(infid), 1)[0]
    assert -slope == pytest.approx(gap, rel=0.05)


def test_fidelity_curve_starts_at_zero_and_rises():
    f = C.fidelity_curve(NAMED_POINT, [0.0, 10.0, 100.0])
    assert f[0] == pytest.approx(0.0, abs=1e-12)
    assert f[0] < f[1] < f[2] <= 1 + 1e-12


def test_gap_scales_with_j():
    a = C.continuous_gap(C.ContinuousParams(1.95, 2.58, 0.29 * PI))
    b = C.continuous_gap(C.ContinuousParams(3.9, 5.16, 0.29 * PI, J=2.0))
    assert a == pytest.approx(b, rel=1e-9)


def test_rate_in_hz_readings(global_optimum):
    r = C.rate_hz(global_optimum.gap)
    assert r["j_over_2pi"] == pytest.approx(72.0, rel=0.05)
    assert r["j_angular"] == pytest.approx(r["j_over_2pi"] / (2 * PI))


# ---------------------------------------------------------------------------
# dressed basis and effective model

def test_dressed_transform_unitary():
    u = C.dressed_transform()
    assert np.abs(u.data.conj().T @ u.data - np.eye(4)).max() <= 1e-14


def test_dressed_states_orthonormal_and_sum():
    s = C.dressed_states()
    assert abs(np.vdot(s["chi+"], s["chi-"])) < 1e-15
    assert abs(np.vdot(s["chi0"], s["chi+"])) < 1e-15
    assert abs(np.vdot(s["chi0"], s["chi-"])) < 1e-15
    np.testing.assert_allclose(s["chi+"] + s["chi-"], lv.ket(0, 0) + lv.ket(1, 1), atol=1e-15)
    np.testing.assert_array_equal(s["singlet"], lv.SINGLET)


def test_effective_constants():
    J, om, ka = 1.0, 6.0, 5.0
    em = C.effective_model(J, om, ka, 0.25 * PI)
    c = em.constants
    assert abs(c["C0"]) ** 2 == pytest.approx(2 * J ** 2 / ka ** 2, rel=1e-14)
    assert abs(c["C-"]) ** 2 == pytest.approx(J ** 2 / (ka ** 2 + om ** 2), rel=1e-14)
    assert np.abs(em.hamiltonian - em.hamiltonian.conj().T).max() == 0.0
    assert len(em.jumps) == 4


def test_effective_constants_vanish_for_strong_repump():
    prev = None
    for ka in (10.0, 100.0, 1000.0):
        c = C.effective_model(1.0, 6.0, ka, 0.3).constants
        mags = np.array([abs(v) for v in c.values()])
        if prev is not None:
            assert np.all(mags < prev)
        prev = mags
        # prefactors fall off as J/kappa
        assert mags.max() * ka <= math.sqrt(2) + 1e-12
    assert prev.max() < 2e-3


def test_second_rate_term_from_constants():
    J, om, ka, g = 1.0, 6.0, 3.0, 0.27 * PI
    c_m = C.effective_model(J, om, ka, g).constants["C-"]
    term = ka * math.sin(g) ** 2 * math.cos(g) ** 2 * abs(c_m) ** 2
    assert term == pytest.approx(math.sin(g) ** 2 * math.cos(g) ** 2 * ka * J ** 2 / (ka ** 2 + om ** 2))


def test_effective_regime_warning():
    with pytest.warns(C.EffectiveRegimeWarning):
        em = C.effective_model(1.0, 0.2, 0.3, 0.3)
    assert em.valid is False


def test_effective_gap_close_to_full():
    full = C.continuous_gap(C.ContinuousParams(6.0, 5.0, 0.25 * PI))
    eff = C.effective_gap(1.0, 6.0, 5.0, 0.25 * PI)
    assert eff == pytest.approx(full, rel=0.20)


# ---------------------------------------------------------------------------
# empirical rate

def second_order_term(om, ka, g):
    return (math.cos(g) ** 4 + math.sin(g) ** 4) * ka * (0.5 * om / (ka ** 2 + om ** 2)) ** 2


def first_order_term(om, ka, g):
    return math.sin(g) ** 2 * math.cos(g) ** 2 * ka / (ka ** 2 + om ** 2)


def test_empirical_rate_at_quarter_pi():
    om, ka = 6.0, 3.0
    r = C.empirical_rate(1.0, om, ka, 0.25 * PI)
    assert r == pytest.approx(2.4 * (0.25 * ka / (ka ** 2 + om ** 2) + second_order_term(om, ka, PI / 4)))


def test_empirical_rate_small_gamma_limit():
    om, ka = 6.0, 3.0
    for g in (1e-3, 1e-5):
        r = C.empirical_rate(1.0, om, ka, g)
        assert r - 2.4 * second_order_term(om, ka, g) <= 2.4 * g ** 2 * ka / (ka ** 2 + om ** 2) * 1.01
    assert C.empirical_rate(1.0, om, ka, 1e-8) == pytest.approx(2.4 * second_order_term(om, ka, 0.0))


@pytest.mark.parametrize("ka", [0.5, 2.0, 8.0, 20.0])
def test_empirical_two_regimes(ka):
    om = 6.0
    assert first_order_term(om, ka, 0.25 * PI) > second_order_term(om, ka, 0.25 * PI)
    assert second_order_term(om, ka, 0.04 * PI) > first_order_term(om, ka, 0.04 * PI)


def test_empirical_rate_tracks_gap_over_kappa_sweep():
    for ka in np.geomspace(0.5, 20.0, 12):
        gap = C.continuous_gap(C.ContinuousParams(6.0, float(ka), 0.25 * PI))
        assert C.empirical_rate(1.0, 6.0, float(ka), 0.25 * PI) == pytest.approx(gap, rel=0.25)


# ---------------------------------------------------------------------------
# optimisation

def test_fixed_gamma_optimum_close_to_global(global_optimum):
    fixed = C.optimize_continuous(fixed_gamma=0.25 * PI)
    assert fixed.gamma == 0.25 * PI
    assert fixed.gap >= 0.85 * global_optimum.gap
    assert fixed.gap <= global_optimum.gap * (1 + 1e-6)


def test_global_optimum_beats_neighbours(global_optimum):
    o = global_optimum
    for d in ((0.1, 0, 0), (-0.1, 0, 0), (0, 0.1, 0), (0, -0.1, 0), (0, 0, 0.02), (0, 0, -0.02)):
        p = C.ContinuousParams(o.omega_c + d[0], o.kappa + d[1], o.gamma + d[2])
        assert C.continuous_gap(p) <= o.gap + 1e-9


def test_overdamped_optimum_is_slow():
    o = C.optimize_continuous(((0.5, 10.0), (50.0, 200.0), (0.05 * PI, 0.45 * PI)))
    assert o.kappa >= 50.0
    assert o.gap < 0.01


def test_optimum_to_dict(global_optimum):
    d = global_optimum.to_dict()
    assert set(d["rate_hz"]) == {"j_over_2pi", "j_angular"}
    assert d["gamma_over_pi"] == pytest.approx(global_optimum.gamma / PI)


# ---------------------------------------------------------------------------
# export

def test_gap_csv():
    rows = C.kappa_scan(6.0, (0.25,), kappas=[1.0, 4.0])
    lines = C.gap_to_csv(rows).splitlines()
    assert lines[0] == ",".join(C.GAP_HEADER)
    assert len(lines) == 3
    fields = lines[1].split(",")
    assert float(fields[0]) == 6.0 and float(fields[1]) == 1.0 and float(fields[2]) == 0.25
    assert float(fields[3]) == pytest.approx(C.continuous_gap(C.ContinuousParams(6.0, 1.0, PI / 4)))


def test_gap_surface_shape():
    rows = C.gap_surface([1.0, 2.0], [2.0, 3.0, 4.0], [0.2])
    assert len(rows) == 6
    assert all(r.gap > 0 for r in rows)
