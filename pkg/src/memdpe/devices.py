"""Compact behavioral device models: square-law MOSFETs and a hafnium-oxide
memristor (static conduction master curve + SET dynamics + stochastic LRS).

All functions here are pure; process-variation sampling uses a counter-based
RNG so samples are reproducible and order-independent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

N_POLARITY = "n"
P_POLARITY = "p"

# roles present in each cell kind, in sampling order
CELL_ROLES = {
    "1t1r": ("mn1",),
    "3t1r": ("mn1", "mn2", "mp3"),
}


@dataclass(frozen=True)
class MosfetParams:
    """Square-law (level-1) transistor parameters, W/L folded into kp."""

    polarity: str = N_POLARITY
    vth: float = 0.5          # threshold voltage (V)
    kp: float = 1e-3          # transconductance factor (A/V^2)
    lam: float = 0.0          # channel-length modulation (1/V)
    sigma_vth: float = 0.0    # vth mismatch std dev (V)
    sigma_kp_rel: float = 0.0  # relative kp mismatch std dev

    def __post_init__(self):
        if self.polarity not in (N_POLARITY, P_POLARITY):
            raise ValueError(f"polarity must be 'n' or 'p', got {self.polarity!r}")
        if self.kp <= 0:
            raise ValueError("kp must be positive")
        if self.lam < 0 or self.sigma_vth < 0 or self.sigma_kp_rel < 0:
            raise ValueError("lam and variation sigmas must be nonnegative")


def _ids_n(vth: float, kp: float, lam: float, vgs: float, vds: float) -> float:
    # n-type square law; vds < 0 handled by source/drain swap (odd symmetry)
    if vds < 0.0:
        return -_ids_n(vth, kp, lam, vgs - vds, -vds)
    vov = vgs - vth
    if vov <= 0.0:
        return 0.0
    if vds < vov:
        return kp * (vov * vds - 0.5 * vds * vds) * (1.0 + lam * vds)
    return 0.5 * kp * vov * vov * (1.0 + lam * vds)


def mosfet_drain_current(p: MosfetParams, vgs: float, vds: float) -> float:
    """Drain current (A). Cutoff below vth, triode/saturation above, both
    multiplied by (1 + lam*vds); the two regions meet continuously at
    vds = vgs - vth.

    P-polarity devices are evaluated on source-referenced negated voltages,
    so a conducting PMOS returns a negative drain current.
    """
    if not (math.isfinite(vgs) and math.isfinite(vds)):
        raise ValueError("non-finite terminal voltage")
    if p.polarity == P_POLARITY:
        return -_ids_n(p.vth, p.kp, p.lam, -vgs, -vds)
    return _ids_n(p.vth, p.kp, p.lam, vgs, vds)


# ---------------------------------------------------------------------------
# memristor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConductionShape:
    """Master curve for the static branch current.

    The branch current for a device labelled R is sign(V) * flux(|V|) / R,
    i.e. the label is a pure scale factor and `flux` carries all the bias
    dependence. flux is strictly increasing: a saturating base (soft knee),
    a small guaranteed floor slope, and a logistic step that reproduces the
    mid-bias hump seen in the fitted data.
    """

    scale: float = 1.21           # low-field conductance boost (flux ~ scale*V)
    knee_v: float = 0.44          # base saturation knee (V)
    knee_sharpness: float = 30.0  # Lp exponent of the soft knee
    floor_slope: float = 0.02     # minimum dflux/dV, keeps the DC solve monotone
    step_height: float = 0.158    # logistic step amplitude
    step_center_v: float = 0.547
    step_width_v: float = 0.005

    def flux(self, v: float) -> float:
        """flux(V) = I(V) * R_label for V >= 0. Units: V (current*ohm)."""
        if v <= 0.0:
            return self.scale * v + self.floor_slope * v
        # base = scale * v * (1 + (v/knee)^p)^(-1/p), computed in log space
        t = self.knee_sharpness * math.log(v / self.knee_v)
        if t > 700.0:
            base = self.scale * self.knee_v
        else:
            base = self.scale * v * math.exp(-math.log1p(math.exp(t)) / self.knee_sharpness)
        x = (v - self.step_center_v) / self.step_width_v
        if x > 40.0:
            sig = 1.0
        elif x < -40.0:
            sig = 0.0
        else:
            sig = 1.0 / (1.0 + math.exp(-x))
        return base + self.floor_slope * v + self.step_height * sig

    def dflux(self, v: float) -> float:
        """Derivative of flux; strictly positive."""
        if v <= 0.0:
            return self.scale + self.floor_slope
        t = self.knee_sharpness * math.log(v / self.knee_v)
        if t > 700.0:
            dbase = 0.0
        else:
            q = math.exp(t)
            u = math.exp(-math.log1p(q) / self.knee_sharpness)
            dbase = self.scale * u / (1.0 + q)
        x = (v - self.step_center_v) / self.step_width_v
        if abs(x) > 40.0:
            dsig = 0.0
        else:
            s = 1.0 / (1.0 + math.exp(-x))
            dsig = s * (1.0 - s) / self.step_width_v
        return dbase + self.floor_slope + self.step_height * dsig


@dataclass(frozen=True)
class SigmaLrsTable:
    """Relative lognormal spread of the programmed resistance vs SET drive.

    Piecewise-linear in drive voltage, clamped at the end knots; the shape
    (large spread at low drive, small at high drive) follows the measured
    std-dev trends.
    """

    v_knots: tuple = (0.7, 0.8, 0.9, 1.0, 1.3)
    sigma_knots: tuple = (0.30, 0.18, 0.10, 0.05, 0.03)

    def sigma(self, v_drive: float) -> float:
        return float(np.interp(v_drive, self.v_knots, self.sigma_knots))


@dataclass(frozen=True)
class MemristorParams:
    r_on: float = 1_000.0
    r_off: float = 100_000.0
    set_threshold_v: float = 0.7
    growth_rate_hz: float = 36.0   # state growth prefactor (1/s)
    drive_scale_v: float = 0.0395  # exponential overdrive scale (V)
    conduction: ConductionShape = field(default_factory=ConductionShape)
    sigma_lrs: SigmaLrsTable = field(default_factory=SigmaLrsTable)

    def __post_init__(self):
        if not (0 < self.r_on < self.r_off):
            raise ValueError("need 0 < r_on < r_off")
        if self.set_threshold_v <= 0:
            raise ValueError("set_threshold_v must be positive")


@dataclass(frozen=True)
class MemristorState:
    """Filament state w in [0, 1] plus its device parameters."""

    params: MemristorParams
    w: float = 0.0

    def __post_init__(self):
        if not (-1e-12 <= self.w <= 1.0 + 1e-12):
            raise ValueError(f"state w={self.w} outside [0, 1]")


def memristor_resistance(m: MemristorState) -> float:
    """Log-linear interpolation between r_off (w=0) and r_on (w=1)."""
    p = m.params
    return p.r_off ** (1.0 - m.w) * p.r_on ** m.w


def state_for_resistance(params: MemristorParams, r: float) -> MemristorState:
    """Inverse of memristor_resistance, clamped to the state bounds."""
    r = min(max(r, params.r_on), params.r_off)
    w = math.log(params.r_off / r) / math.log(params.r_off / params.r_on)
    return MemristorState(params=params, w=min(max(w, 0.0), 1.0))


def memristor_branch_current(params: MemristorParams, v: float, r_label: float) -> float:
    """Static branch current through a device labelled r_label ohms."""
    if v >= 0.0:
        return params.conduction.flux(v) / r_label
    return -params.conduction.flux(-v) / r_label


def memristor_branch_conductance(params: MemristorParams, v: float, r_label: float) -> float:
    return params.conduction.dflux(abs(v)) / r_label


def set_growth_rate(params: MemristorParams, v_across: float) -> float:
    """dw/dt while the voltage across the device exceeds the SET threshold."""
    over = v_across - params.set_threshold_v
    if over <= 0.0:
        return 0.0
    return params.growth_rate_hz * math.exp(min(over / params.drive_scale_v, 60.0))


def set_dynamics_step(m: MemristorState, v_across: float, dt: float) -> MemristorState:
    """Explicit state update over dt seconds at a fixed applied voltage.

    Below the SET threshold the state is unchanged; above it w grows and is
    clamped at 1. RESET is out of scope, so w never decreases.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    rate = set_growth_rate(m.params, v_across)
    if rate == 0.0 or dt == 0.0:
        return m
    return replace(m, w=min(1.0, m.w + dt * rate))


# ---------------------------------------------------------------------------
# process variation sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VariationSample:
    """One realized set of device perturbations for a cell.

    vth_offset/kp_factor are keyed by transistor role. lrs_z is a standard
    normal draw; programming converts it into a lognormal resistance
    multiplier using the drive-dependent sigma table.
    """

    cell_kind: str
    vth_offset: dict
    kp_factor: dict
    lrs_z: float

    def apply(self, role: str, p: MosfetParams) -> MosfetParams:
        return replace(
            p,
            vth=p.vth + self.vth_offset.get(role, 0.0),
            kp=p.kp * self.kp_factor.get(role, 1.0),
        )

    def lrs_multiplier(self, params: MemristorParams, v_drive: float) -> float:
        sig = params.sigma_lrs.sigma(v_drive)
        return math.exp(self.lrs_z * sig)


NOMINAL = {
    kind: VariationSample(cell_kind=kind, vth_offset={}, kp_factor={}, lrs_z=0.0)
    for kind in CELL_ROLES
}


def nominal_sample(cell_kind: str) -> VariationSample:
    return NOMINAL[cell_kind]


def sample_variation(cell_kind: str, seed: int, index: int,
                     mosfets: dict) -> VariationSample:
    """Draw one variation sample, reproducible per (seed, index).

    `mosfets` maps role -> MosfetParams (for the sigma values). Uses the
    counter-based Philox generator so sampling order does not matter.
    """
    if cell_kind not in CELL_ROLES:
        raise ValueError(f"unknown cell kind {cell_kind!r}")
    bitgen = np.random.Philox(key=seed, counter=[0, 0, int(index), 0])
    rng = np.random.Generator(bitgen)
    vth_offset = {}
    kp_factor = {}
    for role in CELL_ROLES[cell_kind]:
        p = mosfets[role]
        z_v, z_k = rng.standard_normal(2)
        vth_offset[role] = float(z_v) * p.sigma_vth
        # multiplicative Gaussian, floored so kp realizations stay positive
        kp_factor[role] = max(1.0 + float(z_k) * p.sigma_kp_rel, 1e-3)
    lrs_z = float(rng.standard_normal())
    return VariationSample(cell_kind=cell_kind, vth_offset=vth_offset,
                           kp_factor=kp_factor, lrs_z=lrs_z)
