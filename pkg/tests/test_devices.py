import math

import numpy as np
import pytest

from memdpe.devices import (
    CELL_ROLES,
    ConductionShape,
    MemristorParams,
    MemristorState,
    MosfetParams,
    memristor_resistance,
    mosfet_drain_current,
    sample_variation,
    set_dynamics_step,
    state_for_resistance,
)


def test_cutoff_returns_zero():
    p = MosfetParams(vth=0.45, kp=1e-3)
    assert mosfet_drain_current(p, 0.3, 0.7) == 0.0
    assert mosfet_drain_current(p, 0.45, 1.0) == 0.0


def test_zero_vds_returns_zero():
    p = MosfetParams(vth=0.45, kp=1e-3)
    for vgs in (0.0, 0.6, 1.2, 3.0):
        assert mosfet_drain_current(p, vgs, 0.0) == 0.0


def test_saturation_value():
    # (kp/2) * (vgs - vth)^2 with lam = 0
    p = MosfetParams(vth=0.45, kp=1e-3, lam=0.0)
    i = mosfet_drain_current(p, 1.2, 1.0)
    assert i == pytest.approx(0.5e-3 * 0.75**2, rel=1e-12)
    assert i == pytest.approx(281.25e-6, rel=1e-9)


def test_region_boundary_continuity():
    rng = np.random.default_rng(7)
    for _ in range(200):
        vth = rng.uniform(0.2, 1.0)
        kp = 10 ** rng.uniform(-4.5, -2)
        lam = rng.uniform(0, 0.5)
        vgs = vth + rng.uniform(0.05, 1.0)
        p = MosfetParams(vth=vth, kp=kp, lam=lam)
        vov = vgs - vth
        i_tri = kp * (vov * vov - 0.5 * vov * vov) * (1 + lam * vov)
        i_sat = 0.5 * kp * vov * vov * (1 + lam * vov)
        i_model = mosfet_drain_current(p, vgs, vov)
        assert abs(i_tri - i_sat) < 1e-15 * max(1.0, abs(i_model))
        # approaching the boundary from both sides
        eps = 1e-9
        below = mosfet_drain_current(p, vgs, vov - eps)
        above = mosfet_drain_current(p, vgs, vov + eps)
        assert abs(below - above) < 1e-6 * max(i_model, 1e-12)


def test_monotone_in_vgs():
    p = MosfetParams(vth=0.5, kp=2e-3, lam=0.1)
    for vds in (0.0, 0.05, 0.3, 1.0):
        last = -1.0
        for vgs in np.linspace(0, 2, 101):
            i = mosfet_drain_current(p, vgs, vds)
            assert i >= last - 1e-18
            last = i


def test_pmos_negated_evaluation():
    p = MosfetParams(polarity="p", vth=0.6, kp=1e-3, lam=0.0)
    # conducting PMOS: source 1.5 V, gate 0, drain 0.5 -> vgs=-1.5, vds=-1.0
    i = mosfet_drain_current(p, -1.5, -1.0)
    assert i < 0
    n = MosfetParams(vth=0.6, kp=1e-3, lam=0.0)
    assert i == pytest.approx(-mosfet_drain_current(n, 1.5, 1.0), rel=1e-12)


def test_rejects_nonfinite():
    p = MosfetParams()
    with pytest.raises(ValueError):
        mosfet_drain_current(p, float("nan"), 0.5)


def test_resistance_endpoints_and_midpoint():
    mem = MemristorParams(r_on=1e3, r_off=100e3)
    assert memristor_resistance(MemristorState(mem, 0.0)) == pytest.approx(100e3)
    assert memristor_resistance(MemristorState(mem, 1.0)) == pytest.approx(1e3)
    # log-linear interpolation: geometric mean at w = 0.5
    assert memristor_resistance(MemristorState(mem, 0.5)) == pytest.approx(10e3, rel=1e-12)


def test_resistance_strictly_decreasing_and_bounded():
    mem = MemristorParams()
    ws = np.linspace(0, 1, 101)
    rs = [memristor_resistance(MemristorState(mem, w)) for w in ws]
    assert all(a > b for a, b in zip(rs, rs[1:]))
    assert all(mem.r_on - 1e-9 <= r <= mem.r_off + 1e-9 for r in rs)


def test_state_for_resistance_roundtrip():
    mem = MemristorParams()
    for r in (1e3, 5e3, 9e3, 20e3, 100e3):
        st = state_for_resistance(mem, r)
        assert memristor_resistance(st) == pytest.approx(r, rel=1e-12)


def test_set_step_below_threshold_unchanged():
    mem = MemristorParams()
    m = MemristorState(mem, 0.3)
    assert set_dynamics_step(m, 0.5, 1e-6).w == m.w
    assert set_dynamics_step(m, mem.set_threshold_v, 1e-3).w == m.w


def test_set_step_zero_dt_unchanged():
    m = MemristorState(MemristorParams(), 0.2)
    assert set_dynamics_step(m, 1.0, 0.0).w == m.w


def test_set_step_two_halves_equal_one_double():
    # explicit update at fixed applied voltage
    m = MemristorState(MemristorParams(), 0.1)
    dt = 1e-4
    one = set_dynamics_step(m, 0.76, 2 * dt)
    two = set_dynamics_step(set_dynamics_step(m, 0.76, dt), 0.76, dt)
    assert two.w == pytest.approx(one.w, rel=1e-6)


def test_set_step_never_decreases_and_clamps():
    mem = MemristorParams()
    m = MemristorState(mem, 0.0)
    for v in np.linspace(0, 2.0, 41):
        m2 = set_dynamics_step(m, v, 1e-3)
        assert m2.w >= m.w
        m = m2
    assert m.w <= 1.0
    # a huge step clamps at 1
    assert set_dynamics_step(MemristorState(mem, 0.99), 2.0, 10.0).w == 1.0


def test_set_step_monotone_in_drive_and_dt():
    m = MemristorState(MemristorParams(), 0.2)
    w_lo = set_dynamics_step(m, 0.75, 1e-5).w
    w_hi = set_dynamics_step(m, 0.80, 1e-5).w
    assert w_hi >= w_lo
    assert set_dynamics_step(m, 0.75, 2e-5).w >= w_lo


def test_conduction_flux_strictly_increasing():
    shape = ConductionShape()
    vs = np.linspace(1e-4, 2.5, 2000)
    flux = np.array([shape.flux(v) for v in vs])
    assert np.all(np.diff(flux) > 0)
    # analytic derivative agrees with finite differences
    for v in (0.05, 0.3, 0.44, 0.54, 0.58, 0.7, 1.2):
        h = 1e-7
        fd = (shape.flux(v + h) - shape.flux(v - h)) / (2 * h)
        assert shape.dflux(v) == pytest.approx(fd, rel=1e-4)


def test_sample_variation_zero_sigma_nominal(cfg):
    mosfets = {r: MosfetParams(vth=0.5, kp=1e-3) for r in CELL_ROLES["3t1r"]}
    s = sample_variation("3t1r", seed=5, index=17, mosfets=mosfets)
    for role in CELL_ROLES["3t1r"]:
        assert s.vth_offset[role] == 0.0
        assert s.kp_factor[role] == 1.0


def test_sample_variation_deterministic(cfg):
    mosfets = cfg.mosfets("3t1r")
    a = sample_variation("3t1r", seed=42, index=999, mosfets=mosfets)
    b = sample_variation("3t1r", seed=42, index=999, mosfets=mosfets)
    assert a == b
    c = sample_variation("3t1r", seed=42, index=1000, mosfets=mosfets)
    assert c != a


def test_sample_variation_statistics():
    sigma = 0.02
    mosfets = {"mn1": MosfetParams(vth=0.5, kp=1e-3, sigma_vth=sigma,
                                   sigma_kp_rel=0.05)}
    n = 100_000
    vals = np.array([sample_variation("1t1r", 3, i, mosfets).vth_offset["mn1"]
                     for i in range(n)])
    assert abs(vals.std() - sigma) / sigma < 0.02
    assert abs(vals.mean()) < 3 * sigma / math.sqrt(n) * 1.5 + 1e-4


def test_kp_realizations_positive():
    mosfets = {"mn1": MosfetParams(vth=0.5, kp=1e-3, sigma_kp_rel=0.5)}
    for i in range(2000):
        s = sample_variation("1t1r", 11, i, mosfets)
        assert s.kp_factor["mn1"] > 0


def test_lrs_multiplier_uses_drive_dependent_sigma():
    mem = MemristorParams()
    mosfets = {"mn1": MosfetParams()}
    s = sample_variation("1t1r", 1, 2, mosfets)
    lo_v = s.lrs_multiplier(mem, 0.7)
    hi_v = s.lrs_multiplier(mem, 1.3)
    # same z draw, larger sigma at low drive -> farther from 1
    assert abs(math.log(lo_v)) > abs(math.log(hi_v))


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        MosfetParams(kp=0.0)
    with pytest.raises(ValueError):
        MosfetParams(polarity="x")
    with pytest.raises(ValueError):
        MemristorParams(r_on=10e3, r_off=5e3)
    with pytest.raises(ValueError):
        MemristorState(MemristorParams(), 1.5)
