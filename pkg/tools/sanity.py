"""Scratch: check hand-derived initial params against target operating points."""
import time
from memdpe.devices import MemristorParams, MosfetParams, ConductionShape, state_for_resistance
from memdpe.solver import build_topology, solve_dc, transient_set, dc_set

mem = MemristorParams(conduction=ConductionShape(
    scale=1.21, knee_v=0.44, knee_sharpness=30.0, floor_slope=0.005,
    step_height=0.158, step_center_v=0.547, step_width_v=0.005))
mn1_1t = MosfetParams(vth=0.9, kp=3.125e-3, lam=0.02, sigma_vth=0.015, sigma_kp_rel=0.07)
rails_1t = {"v_in": 0.6, "v_g": 1.2, "v_col": 0.0}
top1 = build_topology("1t1r", mem, {"mn1": mn1_1t}, rails_1t)

for r in [5e3, 9e3, 20e3]:
    sol = solve_dc(top1, r)
    print(f"1T1R READ R={r/1e3:5.1f}k  I={sol.branch_currents['i_out']*1e6:8.3f} uA  v1={sol.node_voltages['mem_bottom']:.4f}")

VDD = 1.5
mn1_3t = MosfetParams(vth=0.565, kp=1.074e-3, lam=0.3, sigma_vth=0.010, sigma_kp_rel=0.05)
mn2_3t = MosfetParams(vth=1.0, kp=21.9e-6, lam=0.1, sigma_vth=0.008, sigma_kp_rel=0.04)
mp3_3t = MosfetParams(polarity="p", vth=0.6, kp=5e-3, lam=0.1, sigma_vth=0.010, sigma_kp_rel=0.05)
rails_3t = {"vdd": VDD, "v_in": 0.6, "v_read_b": 0.0, "v_col": VDD}
top3 = build_topology("3t1r", mem, {"mn1": mn1_3t, "mn2": mn2_3t, "mp3": mp3_3t}, rails_3t)
for r in [5e3, 9e3, 20e3]:
    sol = solve_dc(top3, r)
    bc = sol.branch_currents
    print(f"3T1R READ R={r/1e3:5.1f}k  I2={bc['i2']*1e6:7.4f} uA  Iin={bc['i_in']*1e6:7.4f} uA  c={(bc['i2']+bc['i_in'])*1e6:7.4f}  vB={sol.node_voltages['mem_bottom']:.4f}")

t0 = time.time()
for kind, top, width in [("1t1r", top1, 1e-6), ("3t1r", top3, 1e-2)]:
    for drive in [0.8, 1.0, 1.2]:
        m0 = state_for_resistance(mem, 100e3)
        res = transient_set(top, drive, width, m0)
        print(f"{kind} SET {drive} V: peak I={res.peak_current*1e6:8.2f} uA  finalR={res.final_resistance/1e3:8.2f} k  solves={res.solves}")
print("set sweep time:", time.time()-t0)

for width in [100e-9, 1e-6, 1e-5, 1e-4, 1e-3]:
    m0 = state_for_resistance(mem, 100e3)
    res = transient_set(top1, 0.8, width, m0)
    print(f"1T1R 0.8V width={width:8.1e}: finalR={res.final_resistance/1e3:8.2f} k solves={res.solves}")

for drive in [0.8, 1.0, 1.2]:
    rs = []
    for width in [100e-9, 1e-6, 1e-5, 1e-4, 1e-3]:
        m0 = state_for_resistance(mem, 100e3)
        rs.append(transient_set(top3, drive, width, m0).final_resistance)
    spread = (max(rs)-min(rs))/(sum(rs)/len(rs))
    print(f"3T1R drive={drive}: R range {min(rs)/1e3:.3f}-{max(rs)/1e3:.3f} k spread={spread*100:.2f}%")

t0 = time.time()
print("1T1R dc:", [round(dc_set(top1, d, state_for_resistance(mem, 100e3)).final_resistance/1e3, 2) for d in [0.72, 0.75, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3]])
print("3T1R dc:", [round(dc_set(top3, d, state_for_resistance(mem, 100e3)).final_resistance/1e3, 2) for d in [0.7, 0.75, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3]])
print("dc time:", time.time()-t0)
