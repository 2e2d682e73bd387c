"""Cell-level operations on top of the DC solver: READ current, SET
programming, power/energy accounting, drive->resistance inversion and Monte
Carlo statistics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .devices import (
    VariationSample,
    nominal_sample,
    sample_variation,
    state_for_resistance,
)
from .params import SimConfig
from .solver import CellTopology, build_topology, dc_set, solve_dc, transient_set

ACCOUNTING_MODES = ("full", "final-stage")


class TargetUnreachable(Exception):
    """The requested resistance cannot be bracketed by the drive range."""


@dataclass(frozen=True)
class CellInstance:
    kind: str
    resistance: float  # programmed label resistance (ohm)


@dataclass(frozen=True)
class ReadResult:
    i_out: float   # column-side current (A): 1T1R chain current, 3T1R I2
    i_in: float    # 3T1R first-stage current (A); 0 for 1T1R
    power: float   # W, per the selected accounting mode
    energy: float  # J over the READ window


def read_topology(cfg: SimConfig, kind: str,
                  vars: VariationSample | None = None) -> CellTopology:
    """Cell topology with the READ bias rails applied."""
    if kind == "1t1r":
        c = cfg.one_t1r
        rails = {"v_in": c.v_read_in, "v_g": c.v_read_g, "v_col": c.v_column}
    elif kind == "3t1r":
        c = cfg.three_t1r
        rails = {"vdd": c.vdd, "v_in": c.v_read_in, "v_read_b": c.v_read_b,
                 "v_col": c.vdd}
    else:
        raise ValueError(f"unknown cell kind {kind!r}")
    return build_topology(kind, cfg.memristor, cfg.mosfets(kind), rails, vars)


def cell_power(cfg: SimConfig, kind: str, i_out: float, i_in: float,
               accounting: str = "full") -> float:
    """READ power accounting. 1T1R: drive rail times the cell current.
    3T1R: supply times both stage currents ('full') or the output stage
    only ('final-stage')."""
    if accounting not in ACCOUNTING_MODES:
        raise ValueError(f"accounting must be one of {ACCOUNTING_MODES}")
    if kind == "1t1r":
        return cfg.one_t1r.v_read_in * abs(i_out)
    if accounting == "full":
        return cfg.three_t1r.vdd * (abs(i_in) + abs(i_out))
    return cfg.three_t1r.vdd * abs(i_out)


def read_current(cfg: SimConfig, cell: CellInstance,
                 vars: VariationSample | None = None,
                 accounting: str = "full",
                 v_in: float | None = None) -> ReadResult:
    """Solve the READ operating point and return currents, power and energy.

    A zero v_in override models a spike-less row: the cell contributes
    nothing to its column (the array's ideal-isolation contract; physically
    the cell is parked in its hold state).
    """
    top = read_topology(cfg, cell.kind, vars)
    if v_in is not None:
        if v_in == 0.0:
            return ReadResult(0.0, 0.0, 0.0, 0.0)
        top = top.with_rails(v_in=v_in)
    sol = solve_dc(top, cell.resistance)
    i_out = sol.branch_currents["i_out"]
    i_in = sol.branch_currents["i_in"]
    p = cell_power(cfg, cell.kind, i_out, i_in, accounting)
    return ReadResult(i_out=i_out, i_in=i_in, power=p, energy=p * cfg.t_read_s)


def program(cfg: SimConfig, cell: CellInstance, drive: float,
            pulse_width: float, vars: VariationSample | None = None) -> CellInstance:
    """SET-program the cell with a rectangular pulse; returns the new cell.

    SET only lowers resistance, so programming continues from the cell's
    current state (a zero-width pulse leaves it unchanged).
    """
    if not (0.0 <= drive <= cfg.programming.drive_max_v):
        raise ValueError(f"drive {drive} outside [0, {cfg.programming.drive_max_v}] V")
    top = read_topology(cfg, cell.kind, vars)
    m0 = state_for_resistance(cfg.memristor, cell.resistance)
    res = transient_set(top, drive, pulse_width, m0, vars=vars,
                        dt=cfg.programming.dt_s)
    return replace(cell, resistance=res.final_resistance)


def erased_cell(cfg: SimConfig, kind: str) -> CellInstance:
    return CellInstance(kind=kind, resistance=cfg.memristor.r_off)


def set_current(cfg: SimConfig, kind: str, drive: float,
                vars: VariationSample | None = None) -> float:
    """Peak memristor-branch current during a SET transient from the
    erased (100 kOhm) state.

    The 1T1R sweep uses a short pulse (the device is pulse-programmed); the
    3T1R cell is compliance-programmed in a DC environment, so its sweep
    runs to the self-terminated stall.
    """
    top = read_topology(cfg, kind, vars)
    m0 = state_for_resistance(cfg.memristor, cfg.memristor.r_off)
    width = (cfg.programming.set_current_pulse_s if kind == "1t1r"
             else cfg.programming.dc_pulse_s)
    res = transient_set(top, drive, width, m0, vars=vars, dt=cfg.programming.dt_s)
    return res.peak_current


def dc_program_resistance(cfg: SimConfig, kind: str, drive: float,
                          vars: VariationSample | None = None) -> float:
    """Resistance reached by source-meter style DC programming from the
    erased state."""
    top = read_topology(cfg, kind, vars)
    m0 = state_for_resistance(cfg.memristor, cfg.memristor.r_off)
    return dc_set(top, drive, m0, vars=vars, pulse_width=cfg.programming.dc_pulse_s,
                  dt=cfg.programming.dt_s).final_resistance


# ---------------------------------------------------------------------------
# drive <-> resistance inversion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DriveMap:
    """Monotone map from SET drive to DC-programmed resistance."""

    kind: str
    drives: np.ndarray
    resistances: np.ndarray

    def drive_for(self, target_r: float) -> float:
        r = self.resistances
        if not (r.min() <= target_r <= r.max()):
            raise TargetUnreachable(
                f"{self.kind}: target {target_r:.0f} ohm outside programmable "
                f"window [{r.min():.0f}, {r.max():.0f}] ohm")
        # resistance falls with drive; interpolate on the reversed axis
        return float(np.interp(math.log(target_r), np.log(r[::-1]),
                               self.drives[::-1]))


def build_drive_map(cfg: SimConfig, kind: str, n: int = 41) -> DriveMap:
    lo = max(cfg.programming.drive_min_v, 0.72)
    hi = cfg.programming.drive_max_v
    drives = np.linspace(lo, hi, n)
    rs = np.array([dc_program_resistance(cfg, kind, d) for d in drives])
    # enforce strict monotonicity for interpolation (plateaus can produce ties)
    for i in range(1, len(rs)):
        if rs[i] >= rs[i - 1]:
            rs[i] = rs[i - 1] * (1 - 1e-9)
    return DriveMap(kind=kind, drives=drives, resistances=rs)


def refine_drive(cfg: SimConfig, kind: str, target_r: float, drive0: float,
                 rel_tol: float = 5e-3, max_iter: int = 24) -> float:
    """Bisection polish of the interpolated drive (noise off) so the
    realized resistance lands within rel_tol of the target."""
    d = drive0
    r = dc_program_resistance(cfg, kind, d)
    if abs(r - target_r) / target_r <= rel_tol:
        return d
    step = 0.02
    lo, hi = None, None
    # resistance decreases with drive
    if r > target_r:
        lo = d
        while hi is None:
            d += step
            if d > cfg.programming.drive_max_v:
                raise TargetUnreachable(f"{kind}: cannot reach {target_r:.0f} ohm")
            if dc_program_resistance(cfg, kind, d) <= target_r:
                hi = d
            else:
                lo = d
    else:
        hi = d
        while lo is None:
            d -= step
            if d < 0.0:
                raise TargetUnreachable(f"{kind}: cannot reach {target_r:.0f} ohm")
            if dc_program_resistance(cfg, kind, d) >= target_r:
                lo = d
            else:
                hi = d
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        r = dc_program_resistance(cfg, kind, mid)
        if abs(r - target_r) / target_r <= rel_tol:
            return mid
        if r > target_r:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class McStats:
    n: int
    mean: float
    std: float
    min: float
    max: float
    hist_counts: np.ndarray
    hist_edges: np.ndarray


def monte_carlo_read(cfg: SimConfig, kind: str, r: float, n: int, seed: int,
                     accounting: str = "full", bins: int = 40) -> McStats:
    """READ-current statistics over n transistor-mismatch samples.

    The memristor label stays fixed at r: the READ disturbance of an
    already-programmed cell is a transistor-mismatch effect; the stochastic
    LRS multiplier applies when cells are programmed, not here.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cell = CellInstance(kind=kind, resistance=r)
    mosfets = cfg.mosfets(kind)
    vals = np.empty(n)
    for i in range(n):
        vs = sample_variation(kind, seed, i, mosfets)
        vals[i] = read_current(cfg, cell, vars=vs, accounting=accounting).i_out
    counts, edges = np.histogram(vals, bins=bins)
    return McStats(n=n, mean=float(vals.mean()), std=float(vals.std(ddof=0)),
                   min=float(vals.min()), max=float(vals.max()),
                   hist_counts=counts, hist_edges=edges)
