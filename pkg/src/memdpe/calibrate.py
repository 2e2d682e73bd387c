"""Calibration of the free model parameters to the reported curve endpoints.

A target couples a named metric (a scalar simulator output) to its desired
value and weight; calibrate() runs a derivative-free Nelder-Mead search over
a declared set of config paths, minimizing the weighted relative squared
error. The shipped default config is the output of the staged run in
run_staged_calibration (see tools/run_calibration.py).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from . import cells
from .devices import state_for_resistance
from .params import SimConfig
from .solver import transient_set


class CalibrationDiverged(Exception):
    """Final weighted error exceeded the declared bound (model inadequacy)."""


# -- config path plumbing ----------------------------------------------------

def get_path(cfg, path: str):
    obj = cfg
    for part in path.split("."):
        obj = getattr(obj, part)
    return obj


def _set_parts(obj, parts, value):
    if len(parts) == 1:
        return replace(obj, **{parts[0]: value})
    child = getattr(obj, parts[0])
    return replace(obj, **{parts[0]: _set_parts(child, parts[1:], value)})


def set_path(cfg: SimConfig, path: str, value) -> SimConfig:
    return _set_parts(cfg, path.split("."), value)


# -- metrics ------------------------------------------------------------------

def _read(cfg, kind, r):
    return cells.read_current(cfg, cells.CellInstance(kind, r))


def _pulse_r(cfg, kind, drive, width):
    top = cells.read_topology(cfg, kind)
    m0 = state_for_resistance(cfg.memristor, cfg.memristor.r_off)
    return transient_set(top, drive, width, m0, dt=cfg.programming.dt_s).final_resistance


METRICS = {
    "read_1t1r_5k": lambda c: _read(c, "1t1r", 5e3).i_out,
    "read_1t1r_9k": lambda c: _read(c, "1t1r", 9e3).i_out,
    "read_1t1r_20k": lambda c: _read(c, "1t1r", 20e3).i_out,
    "read_3t1r_i2_5k": lambda c: _read(c, "3t1r", 5e3).i_out,
    "read_3t1r_i2_20k": lambda c: _read(c, "3t1r", 20e3).i_out,
    "read_3t1r_total_5k": lambda c: (lambda rr: rr.i_out + rr.i_in)(_read(c, "3t1r", 5e3)),
    "set_current_1t1r_0v8": lambda c: cells.set_current(c, "1t1r", 0.8),
    "set_current_1t1r_1v2": lambda c: cells.set_current(c, "1t1r", 1.2),
    "set_current_3t1r_0v8": lambda c: cells.set_current(c, "3t1r", 0.8),
    "set_current_3t1r_1v2": lambda c: cells.set_current(c, "3t1r", 1.2),
    "pulse_r_1t1r_0v8_100ns": lambda c: _pulse_r(c, "1t1r", 0.8, 100e-9),
    "pulse_r_1t1r_0v8_1ms": lambda c: _pulse_r(c, "1t1r", 0.8, 1e-3),
    "dc_r_1t1r_0v9": lambda c: cells.dc_program_resistance(c, "1t1r", 0.9),
    "dc_r_1t1r_1v2": lambda c: cells.dc_program_resistance(c, "1t1r", 1.2),
    "dc_r_3t1r_0v8": lambda c: cells.dc_program_resistance(c, "3t1r", 0.8),
    "table2_power_ratio": lambda c: (
        cells.cell_power(c, "1t1r", _read(c, "1t1r", 5e3).i_out, 0.0)
        / (lambda rr: cells.cell_power(c, "3t1r", rr.i_out, rr.i_in))(_read(c, "3t1r", 5e3))),
    "mc_std_1t1r_9k": lambda c: cells.monte_carlo_read(c, "1t1r", 9e3, 400, seed=20).std,
    "mc_std_3t1r_9k": lambda c: cells.monte_carlo_read(c, "3t1r", 9e3, 400, seed=21).std,
    "mc_mean_1t1r_9k": lambda c: cells.monte_carlo_read(c, "1t1r", 9e3, 400, seed=20).mean,
    "mc_mean_3t1r_9k": lambda c: cells.monte_carlo_read(c, "3t1r", 9e3, 400, seed=21).mean,
}


@dataclass(frozen=True)
class CalibrationTarget:
    metric: str
    desired: float
    weight: float = 1.0
    note: str = ""


@dataclass
class CalibrationResult:
    config: SimConfig
    weighted_error: float
    rows: list  # (metric, desired, achieved, rel_err, weight)

    def report_text(self) -> str:
        lines = ["metric,desired,achieved,rel_err,weight"]
        for m, d, a, e, w in self.rows:
            lines.append(f"{m},{d:.6g},{a:.6g},{e:.4g},{w:g}")
        return "\n".join(lines) + "\n"


def evaluate_targets(cfg: SimConfig, targets) -> CalibrationResult:
    rows = []
    err = 0.0
    wsum = 0.0
    for t in targets:
        a = METRICS[t.metric](cfg)
        rel = (a - t.desired) / t.desired
        rows.append((t.metric, t.desired, a, rel, t.weight))
        err += t.weight * rel * rel
        wsum += t.weight
    return CalibrationResult(config=cfg, weighted_error=err / max(wsum, 1e-300),
                             rows=rows)


def calibrate(cfg: SimConfig, targets, free_params, bounds=None,
              maxiter: int = 400, divergence_bound: float = 0.25,
              xatol: float = 1e-10, fatol: float = 1e-14) -> CalibrationResult:
    """Nelder-Mead fit of `free_params` (config paths) to `targets`.

    Raises CalibrationDiverged when the final normalized weighted error
    exceeds divergence_bound; a satisfied initial point returns immediately.
    """
    if not targets:
        raise ValueError("no calibration targets")
    base = evaluate_targets(cfg, targets)
    if base.weighted_error == 0.0:
        return base
    x0 = np.array([get_path(cfg, p) for p in free_params], dtype=float)
    scale = np.where(np.abs(x0) > 0, np.abs(x0), 1.0)

    def apply(x):
        c = cfg
        for p, v in zip(free_params, x * scale):
            c = set_path(c, p, float(v))
        return c

    def objective(x):
        try:
            return evaluate_targets(apply(x), targets).weighted_error
        except Exception:
            return 1e6

    nm_bounds = None
    if bounds is not None:
        nm_bounds = [(lo / s, hi / s) for (lo, hi), s in zip(bounds, scale)]
    res = minimize(objective, x0 / scale, method="Nelder-Mead", bounds=nm_bounds,
                   options={"maxiter": maxiter, "xatol": xatol, "fatol": fatol})
    out = evaluate_targets(apply(res.x), targets)
    if out.weighted_error > base.weighted_error:
        out = base  # keep the initial point if the search went backwards
    if out.weighted_error > divergence_bound:
        raise CalibrationDiverged(
            f"weighted error {out.weighted_error:.4g} > bound {divergence_bound}")
    return out


# -- staged default calibration ----------------------------------------------

STAGES = {
    "conduction_1t1r": dict(
        targets=[
            CalibrationTarget("read_1t1r_5k", 105.0e-6, 3.0),
            CalibrationTarget("read_1t1r_9k", 59.0e-6, 3.0),
            CalibrationTarget("read_1t1r_20k", 34.5e-6, 3.0),
            CalibrationTarget("set_current_1t1r_0v8", 7.0e-6, 2.0),
            CalibrationTarget("set_current_1t1r_1v2", 135.0e-6, 1.0),
            CalibrationTarget("dc_r_1t1r_0v9", 5.5e3, 0.3),
            CalibrationTarget("dc_r_1t1r_1v2", 4.9e3, 0.3),
        ],
        free_params=[
            "memristor.conduction.scale",
            "memristor.conduction.knee_v",
            "memristor.conduction.step_center_v",
            "memristor.conduction.step_width_v",
            "memristor.conduction.step_height",
            "one_t1r.mn1.vth",
            "one_t1r.mn1.kp",
            "one_t1r.mn1.lam",
        ],
        bounds=[(1.05, 1.35), (0.40, 0.47), (0.53, 0.57), (0.003, 0.009),
                (0.13, 0.19), (0.85, 0.95), (2.4e-3, 4.0e-3), (0.0, 0.06)],
    ),
    "three_t1r": dict(
        targets=[
            CalibrationTarget("read_3t1r_i2_5k", 3.10e-6, 3.0),
            CalibrationTarget("read_3t1r_i2_20k", 2.94e-6, 3.0),
            CalibrationTarget("read_3t1r_total_5k", 4.15e-6, 3.0),
            CalibrationTarget("set_current_3t1r_0v8", 36.5e-6, 2.0),
            CalibrationTarget("set_current_3t1r_1v2", 272.0e-6, 2.0),
            CalibrationTarget("dc_r_3t1r_0v8", 19.5e3, 0.5),
            CalibrationTarget("table2_power_ratio", 9.6, 1.0),
        ],
        free_params=[
            "three_t1r.mn1.vth",
            "three_t1r.mn1.kp",
            "three_t1r.mn1.lam",
            "three_t1r.mn2.vth",
            "three_t1r.mn2.kp",
        ],
        bounds=[(0.53, 0.60), (0.7e-3, 1.5e-3), (0.05, 0.45),
                (0.85, 1.15), (1.2e-5, 3.5e-5)],
    ),
    "variation": dict(
        targets=[
            CalibrationTarget("mc_std_1t1r_9k", 0.452e-6, 2.0),
            CalibrationTarget("mc_std_3t1r_9k", 0.181e-6, 2.0),
            CalibrationTarget("mc_mean_1t1r_9k", 59.0e-6, 0.5),
            CalibrationTarget("mc_mean_3t1r_9k", 3.02e-6, 0.5),
        ],
        free_params=[
            "one_t1r.mn1.sigma_vth",
            "one_t1r.mn1.sigma_kp_rel",
            "three_t1r.mn2.sigma_vth",
            "three_t1r.mn2.sigma_kp_rel",
        ],
        bounds=[(0.002, 0.04), (0.01, 0.15), (0.002, 0.03), (0.01, 0.12)],
    ),
    "dynamics": dict(
        targets=[
            CalibrationTarget("pulse_r_1t1r_0v8_1ms", 30.0e3, 2.0),
            CalibrationTarget("pulse_r_1t1r_0v8_100ns", 100.0e3, 1.0),
        ],
        free_params=["memristor.growth_rate_hz"],
        bounds=[(0.1, 20.0)],
    ),
}

STAGE_ORDER = ("conduction_1t1r", "three_t1r", "dynamics", "variation")


def run_staged_calibration(cfg: SimConfig, maxiter: int = 350,
                           verbose: bool = False) -> tuple[SimConfig, list]:
    """Run all calibration stages in order; returns (config, reports)."""
    reports = []
    for name in STAGE_ORDER:
        stage = STAGES[name]
        res = calibrate(cfg, stage["targets"], stage["free_params"],
                        bounds=stage["bounds"], maxiter=maxiter)
        cfg = res.config
        reports.append((name, res))
        if verbose:
            print(f"[{name}] weighted error {res.weighted_error:.3e}")
            for m, d, a, e, w in res.rows:
                print(f"    {m:28s} desired {d:11.5g} achieved {a:11.5g} "
                      f"rel {100 * e:+7.2f}%")
    return cfg, reports
