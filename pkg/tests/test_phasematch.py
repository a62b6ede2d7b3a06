"""Pair kinematics, longitudinal mismatch, and the degenerate-ring solve."""

import math

import numpy as np
import pytest

from spdcmaps import crystal, phasematch, vecgeom
from spdcmaps.errors import KinematicsError, NoSolutionError
from spdcmaps.phasematch import EmissionCoord, PumpConfig
from spdcmaps.solvers import bisect_secant

BBO = crystal.get_material("BBO")
LIIO3 = crystal.get_material("LiIO3")
BBO_SPEC = crystal.CrystalSpec(BBO, 0.6, math.radians(29.3), 0.0)
LIIO3_SPEC = crystal.CrystalSpec(LIIO3, 0.59, math.radians(51.95), 0.0)
PUMP_405 = PumpConfig(405.0)
PUMP_351 = PumpConfig(351.1)


# ------------------------------------------------------------- conjugate

def test_conjugate_degenerate_mirrors_azimuth():
    w_half = 0.5 * PUMP_405.omega
    for phi_deg in (0.0, 37.0, 90.0, 180.0, 270.0):
        s = EmissionCoord(w_half, math.radians(2.5), math.radians(phi_deg))
        i = phasematch.conjugate(s, PUMP_405)
        assert i.theta == pytest.approx(s.theta, abs=1e-12)
        dphi = (i.phi - s.phi) % (2.0 * math.pi)
        assert dphi == pytest.approx(math.pi, abs=1e-12)


def test_conjugate_energy_split():
    w_p = PUMP_405.omega
    s = EmissionCoord(0.6 * w_p, math.radians(2.0), 0.0)
    i = phasematch.conjugate(s, PUMP_405)
    assert i.omega == pytest.approx(0.4 * w_p, rel=1e-15)
    assert s.omega + i.omega == w_p


def test_conjugate_transverse_momentum_with_tilted_pump():
    pump = PumpConfig(405.0, theta_p=math.radians(7.0), phi_p=math.radians(25.0))
    k_p = pump.omega / crystal.C_NM_FS
    rng = np.random.default_rng(5)
    for _ in range(500):
        w_s = pump.omega * rng.uniform(0.42, 0.58)
        s = EmissionCoord(w_s, rng.uniform(0.0, 0.08),
                          rng.uniform(-math.pi, math.pi))
        i = phasematch.conjugate(s, pump)
        qs = s.transverse_q()
        qi = i.transverse_q()
        qp = pump.transverse_q()
        resid = math.hypot(qs[0] + qi[0] - qp[0], qs[1] + qi[1] - qp[1])
        assert resid < 1e-12 * k_p


def test_conjugate_involution():
    rng = np.random.default_rng(13)
    for _ in range(1000):
        w_s = PUMP_405.omega * rng.uniform(0.4, 0.6)
        s = EmissionCoord(w_s, rng.uniform(0.0, 0.06),
                          rng.uniform(-math.pi, math.pi))
        back = phasematch.conjugate(phasematch.conjugate(s, PUMP_405), PUMP_405)
        assert back.omega == pytest.approx(s.omega, rel=1e-15)
        assert np.max(np.abs(back.direction() - s.direction())) < 1e-12


def test_conjugate_rejects_nonpositive_partner_frequency():
    with pytest.raises(KinematicsError):
        phasematch.conjugate(
            EmissionCoord(PUMP_405.omega * 1.01, 0.01, 0.0), PUMP_405)


def test_conjugate_rejects_evanescent_partner():
    # strongly red signal at wide angle forces |q_i| c > omega_i
    w_s = PUMP_405.omega * 0.7
    with pytest.raises(KinematicsError):
        phasematch.conjugate(EmissionCoord(w_s, math.radians(80.0), 0.0),
                             PUMP_405)


def test_emission_coord_validates_polar_angle():
    with pytest.raises(ValueError):
        EmissionCoord(2.0, math.pi / 2, 0.0)
    with pytest.raises(ValueError):
        EmissionCoord(2.0, -0.01, 0.0)


# ---------------------------------------------------------- pump internal

def test_pump_internal_normal_incidence():
    for spec, pump in ((BBO_SPEC, PUMP_405), (LIIO3_SPEC, PUMP_351)):
        state = phasematch.pump_internal_state(pump, spec)
        assert np.allclose(state.wavevector, [0.0, 0.0, 1.0], atol=1e-14)
        assert state.alpha == pytest.approx(spec.axis_theta, abs=1e-12)
        assert state.index == pytest.approx(
            crystal.n_e_angle(spec.material, pump.omega, spec.axis_theta),
            abs=1e-12)


def test_pump_internal_tilt_is_compressed():
    pump = PumpConfig(405.0, theta_p=math.radians(7.0), phi_p=0.0)
    state = phasematch.pump_internal_state(pump, BBO_SPEC)
    internal = math.acos(float(state.wavevector[2]))
    assert internal < math.radians(7.0)
    # close to the ordinary-index Snell estimate
    approx = math.asin(math.sin(math.radians(7.0)) / state.index)
    assert internal == pytest.approx(approx, abs=1e-6)


# -------------------------------------------------------------- mismatch

def test_mismatch_zero_at_solved_ring_and_grows_away():
    delta = phasematch.degenerate_emission_angle(BBO_SPEC, PUMP_405)
    w_half = 0.5 * PUMP_405.omega

    def dk(theta):
        return phasematch.delta_kappa(
            EmissionCoord(w_half, theta, 0.0), PUMP_405, BBO_SPEC)

    assert abs(dk(delta)) < 1e-6
    lo, hi = dk(delta - 1e-3), dk(delta + 1e-3)
    assert lo * hi < 0.0
    assert min(abs(lo), abs(hi)) > 0.05


def test_mismatch_sign_at_axis_agrees_with_scan():
    w_half = 0.5 * PUMP_405.omega

    def dk(theta):
        return phasematch.delta_kappa(
            EmissionCoord(w_half, float(theta), 0.0), PUMP_405, BBO_SPEC)

    at_axis = dk(0.0)
    assert at_axis != 0.0
    # dense scan: the mismatch keeps the axis sign all the way to the ring
    thetas = np.linspace(1e-5, math.radians(3.0), 2000)
    vals = np.array([dk(t) for t in thetas])
    assert np.all(np.sign(vals) == np.sign(at_axis))
    # and crosses zero within the published search bracket
    wide = np.linspace(1e-5, math.radians(15.0), 4000)
    wvals = np.array([dk(t) for t in wide])
    crossings = np.nonzero(np.diff(np.sign(wvals)))[0]
    assert len(crossings) == 1
    lo, hi = wide[crossings[0]], wide[crossings[0] + 1]
    root = phasematch.degenerate_emission_angle(BBO_SPEC, PUMP_405)
    assert lo <= root <= hi


def test_mismatch_is_continuous_on_fine_grid():
    w_half = 0.5 * PUMP_405.omega
    h = 1e-4

    def dk(theta):
        return phasematch.delta_kappa(
            EmissionCoord(w_half, theta, 0.0), PUMP_405, BBO_SPEC)

    for theta in np.linspace(0.01, 0.2, 60):
        slope = abs(dk(theta + h) - dk(theta - h)) / (2.0 * h)
        jump = abs(dk(theta + h) - dk(theta))
        assert jump < 1e-2 * slope + 1e-9


def test_mismatch_oblique_pump_finite():
    pump = PumpConfig(405.0, theta_p=math.radians(7.0), phi_p=math.radians(90.0))
    w_half = 0.5 * pump.omega
    v = phasematch.delta_kappa(EmissionCoord(w_half, 0.05, 1.0), pump, BBO_SPEC)
    assert math.isfinite(v)


# ------------------------------------------------------- amplitude weight

def test_amplitude_weight_perfect_matching():
    w = phasematch.amplitude_weight(0.0, 0.6)
    assert w.magnitude == 1.0 and w.phase == 0.0


def test_amplitude_weight_first_null():
    w = phasematch.amplitude_weight(math.pi, 2.0)   # x = pi
    assert w.magnitude < 1e-12


def test_amplitude_weight_half_lobe():
    w = phasematch.amplitude_weight(math.pi, 1.0)   # x = pi/2
    assert w.magnitude == pytest.approx(2.0 / math.pi, abs=1e-15)
    assert w.phase == pytest.approx(math.pi / 2, abs=1e-15)


def test_amplitude_weight_parity():
    for dk in (0.3, 1.7, 2.9):
        plus = phasematch.amplitude_weight(dk, 1.0)
        minus = phasematch.amplitude_weight(-dk, 1.0)
        assert minus.magnitude == plus.magnitude
        if plus.magnitude > 0 and abs(dk) < math.pi:
            assert minus.phase == -plus.phase


# ------------------------------------------------- degenerate ring solve

def test_degenerate_angle_bbo_frozen():
    delta = phasematch.degenerate_emission_angle(BBO_SPEC, PUMP_405)
    assert math.degrees(delta) == pytest.approx(3.217150150351431, abs=1e-6)


def test_degenerate_angle_liio3_frozen():
    delta = phasematch.degenerate_emission_angle(LIIO3_SPEC, PUMP_351)
    assert math.degrees(delta) == pytest.approx(2.5547143268718444, abs=1e-6)


def test_degenerate_angle_azimuth_independent_at_normal_incidence():
    a = phasematch.degenerate_emission_angle(BBO_SPEC, PUMP_405, phi_target=0.0)
    b = phasematch.degenerate_emission_angle(BBO_SPEC, PUMP_405,
                                             phi_target=math.radians(123.0))
    assert a == pytest.approx(b, abs=1e-10)


def test_degenerate_angle_collinear_cut_returns_zero():
    # cut solving n_e(pump, alpha) = n_o(half frequency) matches on axis
    target = crystal.n_o(BBO, crystal.omega_from_nm(810.0))
    cut = bisect_secant(
        lambda a: crystal.n_e_angle(BBO, PUMP_405.omega, a) - target,
        math.radians(5.0), math.radians(85.0), xtol=1e-14)
    spec = crystal.CrystalSpec(BBO, 0.6, cut, 0.0)
    delta = phasematch.degenerate_emission_angle(spec, PUMP_405)
    assert abs(delta) < 1e-6


def test_degenerate_angle_no_crossing_raises():
    # a cut far from matching leaves the bracket sign-definite
    spec = crystal.CrystalSpec(BBO, 0.6, math.radians(5.0), 0.0)
    with pytest.raises(NoSolutionError):
        phasematch.degenerate_emission_angle(spec, PUMP_405)


def test_degenerate_search_bracket_exposed():
    lo, hi = phasematch.DEGENERATE_SEARCH_BRACKET
    assert math.degrees(lo) == pytest.approx(0.1)
    assert math.degrees(hi) == pytest.approx(15.0)
