"""Produce the shipped calibrated default config (data/default_params.json)."""
import sys, time
from memdpe.devices import MemristorParams, MosfetParams, ConductionShape, SigmaLrsTable
from memdpe.params import (SimConfig, OneT1RConfig, ThreeT1RConfig, ProgrammingConfig,
                           MlConfig, save_config)
from memdpe.calibrate import run_staged_calibration

initial = SimConfig(
    memristor=MemristorParams(
        r_on=1e3, r_off=100e3, set_threshold_v=0.7,
        growth_rate_hz=1.0, drive_scale_v=0.015,
        conduction=ConductionShape(scale=1.21, knee_v=0.44, knee_sharpness=30.0,
                                   floor_slope=0.005, step_height=0.158,
                                   step_center_v=0.547, step_width_v=0.005),
        sigma_lrs=SigmaLrsTable()),
    one_t1r=OneT1RConfig(
        mn1=MosfetParams(vth=0.9, kp=3.125e-3, lam=0.02, sigma_vth=0.015,
                         sigma_kp_rel=0.07)),
    three_t1r=ThreeT1RConfig(
        mn1=MosfetParams(vth=0.565, kp=1.074e-3, lam=0.3, sigma_vth=0.010,
                         sigma_kp_rel=0.05),
        mn2=MosfetParams(vth=1.0, kp=21.9e-6, lam=0.1, sigma_vth=0.008,
                         sigma_kp_rel=0.04),
        mp3=MosfetParams(polarity="p", vth=0.6, kp=5e-3, lam=0.1, sigma_vth=0.010,
                         sigma_kp_rel=0.05),
        vdd=1.5),
    programming=ProgrammingConfig(),
    ml=MlConfig(),
)

t0 = time.time()
cfg, reports = run_staged_calibration(initial, verbose=True)
print(f"calibration took {time.time()-t0:.1f} s")
out = sys.argv[1] if len(sys.argv) > 1 else "src/memdpe/data/default_params.json"
save_config(cfg, out)
print("wrote", out)
