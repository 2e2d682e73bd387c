"""DC operating-point solver for the two fixed cell topologies, plus the
transient SET engine.

The netlists are hard-coded. 1T1R has one unknown internal node (memristor
bottom / access-transistor drain); 3T1R has two (memristor top and bottom).
Newton iteration with a damped step is tried first; a monotone bisection
fallback handles anything Newton misses. Every converged solution satisfies
KCL to tol_kcl at each internal node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .devices import (
    MemristorParams,
    MemristorState,
    MosfetParams,
    VariationSample,
    memristor_branch_conductance,
    memristor_branch_current,
    memristor_resistance,
    mosfet_drain_current,
    nominal_sample,
    set_growth_rate,
    state_for_resistance,
)

TOL_KCL = 1e-12        # amps
MAX_NEWTON_ITERS = 200
NEWTON_STEP_CLAMP = 0.1  # volts per node per iteration
R_MIN, R_MAX = 100.0, 10e6


class NoOperatingPoint(Exception):
    """Both Newton and the bisection fallback failed (malformed parameters)."""


@dataclass(frozen=True)
class CellTopology:
    """A 1T1R or 3T1R cell with its rail values and realized devices.

    1T1R wiring: memristor top = v_in rail, bottom = MN1 drain; MN1 gate =
    v_g, source = column rail. 3T1R wiring: MP3 source = vdd, gate =
    v_read_b, drain = memristor top; memristor bottom = MN1 drain = MN2
    gate; MN1 source = ground; MN2 source = ground, drain = column rail.
    """

    kind: str  # "1t1r" | "3t1r"
    mem: MemristorParams
    mosfets: dict  # role -> MosfetParams (already variation-applied)
    rails: dict    # rail name -> volts

    def with_rails(self, **changes) -> "CellTopology":
        rails = dict(self.rails)
        rails.update(changes)
        return CellTopology(kind=self.kind, mem=self.mem, mosfets=self.mosfets,
                            rails=rails)


def build_topology(kind: str, mem: MemristorParams, mosfets: dict, rails: dict,
                   vars: VariationSample | None = None) -> CellTopology:
    vars = vars or nominal_sample(kind)
    realized = {role: vars.apply(role, p) for role, p in mosfets.items()}
    return CellTopology(kind=kind, mem=mem, mosfets=realized, rails=dict(rails))


@dataclass
class DcSolution:
    node_voltages: dict
    branch_currents: dict
    converged: bool
    iterations: int
    residual_norm: float
    used_fallback: bool = False

    @property
    def v_mem(self) -> float:
        return self.node_voltages["mem_top"] - self.node_voltages["mem_bottom"]


# ---------------------------------------------------------------------------
# residual functions
# ---------------------------------------------------------------------------

def _residual_1t1r(top: CellTopology, r: float, v1: float) -> float:
    """KCL at the memristor-bottom node (current in minus current out)."""
    v_in = top.rails["v_in"]
    v_g = top.rails["v_g"]
    v_col = top.rails.get("v_col", 0.0)
    i_mem = memristor_branch_current(top.mem, v_in - v1, r)
    # MN1: drain = v1, source = column rail
    i_t = mosfet_drain_current(top.mosfets["mn1"], v_g - v_col, v1 - v_col)
    return i_mem - i_t


def _residual_3t1r(top: CellTopology, r: float, va: float, vb: float):
    vdd = top.rails["vdd"]
    v_read_b = top.rails["v_read_b"]
    v_in = top.rails["v_in"]
    # MP3 (pmos): source = vdd, gate = v_read_b, drain = node A.
    # mosfet_drain_current returns a negative drain current for a conducting
    # PMOS; current INTO node A is its negation.
    i_p = -mosfet_drain_current(top.mosfets["mp3"], v_read_b - vdd, va - vdd)
    i_mem = memristor_branch_current(top.mem, va - vb, r)
    i_n = mosfet_drain_current(top.mosfets["mn1"], v_in, vb)
    return i_p - i_mem, i_mem - i_n


def _branches_1t1r(top: CellTopology, r: float, v1: float) -> dict:
    v_in = top.rails["v_in"]
    i_mem = memristor_branch_current(top.mem, v_in - v1, r)
    return {"i_mem": i_mem, "i_mn1": i_mem, "i_out": i_mem, "i_in": 0.0}


def _branches_3t1r(top: CellTopology, r: float, va: float, vb: float) -> dict:
    vdd = top.rails["vdd"]
    v_col = top.rails.get("v_col", vdd)
    i_mem = memristor_branch_current(top.mem, va - vb, r)
    i2 = mosfet_drain_current(top.mosfets["mn2"], vb, v_col)
    return {"i_mem": i_mem, "i_mp3": i_mem, "i_mn1": i_mem, "i_in": i_mem,
            "i_out": i2, "i2": i2}


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def _newton(fun, x0, lo, hi, n_unknowns):
    """Damped Newton with numeric Jacobian. Returns (x, iters, ok)."""
    x = list(x0)
    h = 1e-8
    for it in range(1, MAX_NEWTON_ITERS + 1):
        f = fun(x)
        fmax = max(abs(v) for v in f)
        if fmax < TOL_KCL * 0.5:
            return x, it, True
        # numeric Jacobian (central differences)
        jac = [[0.0] * n_unknowns for _ in range(n_unknowns)]
        for j in range(n_unknowns):
            xp = list(x)
            xm = list(x)
            xp[j] += h
            xm[j] -= h
            fp = fun(xp)
            fm = fun(xm)
            for i in range(n_unknowns):
                jac[i][j] = (fp[i] - fm[i]) / (2 * h)
        try:
            if n_unknowns == 1:
                if jac[0][0] == 0.0:
                    return x, it, False
                dx = [-f[0] / jac[0][0]]
            else:
                det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]
                if det == 0.0:
                    return x, it, False
                dx = [(-f[0] * jac[1][1] + f[1] * jac[0][1]) / det,
                      (-f[1] * jac[0][0] + f[0] * jac[1][0]) / det]
        except (ZeroDivisionError, OverflowError):
            return x, it, False
        for j in range(n_unknowns):
            step = max(-NEWTON_STEP_CLAMP, min(NEWTON_STEP_CLAMP, dx[j]))
            x[j] = min(max(x[j] + step, lo[j]), hi[j])
    return x, MAX_NEWTON_ITERS, False


def _bisect(fun, lo, hi, max_iter=200):
    """Root of a decreasing scalar function on [lo, hi] by bisection."""
    flo = fun(lo)
    fhi = fun(hi)
    if flo < 0.0:
        return lo
    if fhi > 0.0:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo < 1e-15:
            return mid
        fm = fun(mid)
        if abs(fm) < TOL_KCL * 0.25:
            return mid
        if fm > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _solve_1t1r(top: CellTopology, r: float) -> DcSolution:
    v_in = top.rails["v_in"]
    v_col = top.rails.get("v_col", 0.0)
    lo = min(v_col, v_in) - 0.2
    hi = max(v_col, v_in) + 0.2

    def fun(x):
        return (_residual_1t1r(top, r, x[0]),)

    x, iters, ok = _newton(fun, [0.5 * (lo + hi)], [lo], [hi], 1)
    used_fallback = False
    if not ok:
        # residual is strictly decreasing in v1
        v1 = _bisect(lambda v: _residual_1t1r(top, r, v), lo, hi)
        x = [v1]
        used_fallback = True
    res = abs(_residual_1t1r(top, r, x[0]))
    sol = DcSolution(
        node_voltages={"mem_top": v_in, "mem_bottom": x[0]},
        branch_currents=_branches_1t1r(top, r, x[0]),
        converged=res < TOL_KCL, iterations=iters,
        residual_norm=res, used_fallback=used_fallback)
    if not sol.converged:
        raise NoOperatingPoint(
            f"1t1r solve failed (residual {res:.3e} A at v1={x[0]:.6f} V)")
    return sol


def _inner_vb(top: CellTopology, r: float, va: float) -> float:
    """Given node A, solve the memristor/MN1 series balance for node B."""

    def f(vb):
        i_mem = memristor_branch_current(top.mem, va - vb, r)
        i_n = mosfet_drain_current(top.mosfets["mn1"], top.rails["v_in"], vb)
        return i_mem - i_n  # decreasing in vb

    return _bisect(f, -0.2, max(va, 0.0) + 0.2)


def _solve_3t1r(top: CellTopology, r: float) -> DcSolution:
    vdd = top.rails["vdd"]
    lo = [-0.2, -0.2]
    hi = [vdd + 0.2, vdd + 0.2]

    def fun(x):
        return _residual_3t1r(top, r, x[0], x[1])

    x, iters, ok = _newton(fun, [0.5 * vdd, 0.25 * vdd], lo, hi, 2)
    used_fallback = False
    if not ok:
        # nested bisection: outer on node A, inner on node B
        def outer(va):
            vb = _inner_vb(top, r, va)
            i_p = -mosfet_drain_current(top.mosfets["mp3"],
                                        top.rails["v_read_b"] - vdd, va - vdd)
            i_mem = memristor_branch_current(top.mem, va - vb, r)
            return i_p - i_mem  # decreasing in va

        va = _bisect(outer, lo[0], hi[0])
        x = [va, _inner_vb(top, r, va)]
        used_fallback = True
    f = _residual_3t1r(top, r, x[0], x[1])
    res = max(abs(f[0]), abs(f[1]))
    sol = DcSolution(
        node_voltages={"mem_top": x[0], "mem_bottom": x[1]},
        branch_currents=_branches_3t1r(top, r, x[0], x[1]),
        converged=res < TOL_KCL, iterations=iters,
        residual_norm=res, used_fallback=used_fallback)
    if not sol.converged:
        raise NoOperatingPoint(
            f"3t1r solve failed (residual {res:.3e} A at {x})")
    return sol


def solve_dc(top: CellTopology, r: float) -> DcSolution:
    """DC operating point of the cell with the memristor at label r ohms."""
    if not (R_MIN <= r <= R_MAX):
        raise ValueError(f"resistance {r} outside [{R_MIN}, {R_MAX}] ohm")
    for v in top.rails.values():
        if not math.isfinite(v):
            raise ValueError("non-finite rail value")
    if top.kind == "1t1r":
        return _solve_1t1r(top, r)
    if top.kind == "3t1r":
        return _solve_3t1r(top, r)
    raise ValueError(f"unknown cell kind {top.kind!r}")


# ---------------------------------------------------------------------------
# exhaustive sweep oracle (independent of Newton; used by tests)
# ---------------------------------------------------------------------------

def _sweep_min(metric, lo: float, hi: float, resolution: float) -> float:
    """Multi-resolution exhaustive sweep minimizing a scalar metric."""
    while True:
        n = 81
        step = (hi - lo) / (n - 1)
        best_i = min(range(n), key=lambda i: metric(lo + i * step))
        best = lo + best_i * step
        if step <= resolution:
            return best
        lo, hi = best - step, best + step


def sweep_oracle(top: CellTopology, r: float, resolution: float = 1e-6) -> dict:
    """Locate the operating point by exhaustive multi-resolution sweeps of
    the internal node voltages (one sweep per node, nested for the 3T1R
    cell), minimizing the |KCL| residual down to `resolution` volts per
    node. Slow but entirely independent of the Newton path.
    """
    if top.kind == "1t1r":
        v_in = top.rails["v_in"]
        v_col = top.rails.get("v_col", 0.0)
        lo, hi = min(v_col, v_in) - 0.2, max(v_col, v_in) + 0.2
        best = _sweep_min(lambda v1: abs(_residual_1t1r(top, r, v1)),
                          lo, hi, resolution)
        return {"mem_top": v_in, "mem_bottom": best}

    vdd = top.rails["vdd"]

    def vb_for(va: float, res: float) -> float:
        # node-B balance between the memristor and the current sink
        return _sweep_min(lambda vb: abs(_residual_3t1r(top, r, va, vb)[1]),
                          -0.2, vdd + 0.2, res)

    def outer(va: float, res: float) -> float:
        return abs(_residual_3t1r(top, r, va, vb_for(va, res))[0])

    # coarse pass with a relaxed inner resolution, then the final pass
    va0 = _sweep_min(lambda va: outer(va, 1e-4), -0.2, vdd + 0.2, 1e-4)
    va = _sweep_min(lambda va: outer(va, resolution),
                    va0 - 2e-4, va0 + 2e-4, resolution)
    return {"mem_top": va, "mem_bottom": vb_for(va, resolution)}


# ---------------------------------------------------------------------------
# transient SET engine
# ---------------------------------------------------------------------------

@dataclass
class TransientResult:
    final_state: MemristorState
    final_resistance: float  # after the LRS noise multiplier and clamping
    peak_current: float
    solves: int


def transient_set(top: CellTopology, pulse_amplitude: float, pulse_width: float,
                  m0: MemristorState, vars: VariationSample | None = None,
                  dt: float = 10e-9, w_step_cap: float = 0.004) -> TransientResult:
    """Integrate the memristor state under a rectangular drive pulse.

    The drive rail (v_in for both kinds) is set to pulse_amplitude; the DC
    point is re-solved as the state moves, with the explicit state update
    applied at the solved memristor voltage. Steps are sized so no step
    moves w by more than w_step_cap (tightened close to the SET threshold,
    where the state self-terminates), which keeps the result insensitive to
    dt refinement; dt bounds the coarsest step taken on slow trajectories.
    Integration stops at the pulse end, at w = 1, or when the device voltage
    falls below the SET threshold.

    Returns the final label resistance multiplied by the sample's lognormal
    LRS factor, clamped to [r_on, r_off].
    """
    if pulse_width < 0:
        raise ValueError("pulse_width must be nonnegative")
    if dt <= 0:
        raise ValueError("dt must be positive")
    vars = vars or nominal_sample(top.kind)
    drive = top.with_rails(v_in=pulse_amplitude)
    mem = m0.params
    state = m0
    t = 0.0
    peak = 0.0
    solves = 0
    # width-independent ceiling so a longer pulse replays the same step
    # sequence over the shared interval
    h_max = max(dt, min(pulse_width / 50.0, 2e-4))
    while t < pulse_width:
        r = memristor_resistance(state)
        sol = solve_dc(drive, r)
        solves += 1
        peak = max(peak, abs(sol.branch_currents["i_mem"]))
        v_mem = sol.v_mem
        rate = set_growth_rate(mem, v_mem)
        if rate <= 0.0 or state.w >= 1.0:
            break  # below threshold or fully set: state frozen for the rest
        # smaller state steps near the threshold so the stall point is not
        # overshot; dt only limits how coarse the accelerated steps may get
        cap = w_step_cap if v_mem - mem.set_threshold_v > 0.05 else w_step_cap / 8.0
        h = min(cap / rate, h_max, pulse_width - t)
        new_w = min(1.0, state.w + h * rate)
        state = MemristorState(params=mem, w=new_w)
        t += h
    r_final = memristor_resistance(state)
    r_noisy = r_final * vars.lrs_multiplier(mem, pulse_amplitude)
    r_noisy = min(max(r_noisy, mem.r_on), mem.r_off)
    return TransientResult(final_state=state, final_resistance=r_noisy,
                           peak_current=peak, solves=solves)


def dc_set(top: CellTopology, drive: float, m0: MemristorState,
           vars: VariationSample | None = None,
           pulse_width: float = 10e-3, dt: float = 10e-9) -> TransientResult:
    """Source-meter style DC programming, modeled as one long pulse.

    In the regime where DC programming is meaningful (self-terminating
    drives: all of them for the compliance-programmed 3T1R cell, >= 0.9 V
    for the 1T1R cell) the no-noise result changes by <0.1% when the width
    is doubled. The 1T1R cell below 0.9 V never self-terminates within the
    window; its continued drift with time is the same behavior seen in the
    pulse-width sensitivity data.
    """
    if not math.isfinite(drive):
        raise ValueError("drive must be finite")
    return transient_set(top, drive, pulse_width, m0, vars=vars, dt=dt)
