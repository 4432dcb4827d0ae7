#!/usr/bin/env python3
"""Stochastic-mean check: conditional trajectories average to the
unconditional master equation, and the stationary feedback power respects
its Cauchy-Schwarz lower bound.

Smaller and faster than the acceptance run; tune n_traj/t_end as needed.
"""

import math

import numpy as np

from flywheel.engine import ControlSpec, EffectiveBath
from flywheel.energy import feedback_power_estimate
from flywheel.fock import FockSpace, displaced_thermal
from flywheel.lindblad import compose_from_params, propagate_with_moments
from flywheel.sme import TrajectoryConfig, run_ensemble, suggested_dt

bath = EffectiveBath.from_rates(Gamma_e=0.01, beta_e=-0.5, omega_o=1.0)
control = ControlSpec(eps_d=0.02, gamma_m=0.04, kappa_f=0.02)
space = FockSpace(40)
dt = suggested_dt(bath, control, space.dim)

gen = compose_from_params(bath, control, space)
rho0 = displaced_thermal(space, gen.beta * bath.omega_o, gen.c_inf)
cfg = TrajectoryConfig(bath=bath, control=control, space=space, dt=dt,
                       t_end=60.0, seed=2718, record_stride=50)

print(f"dt = {dt:.4g}, running 200 trajectories from the stationary state ...")
ens = run_ensemble(cfg, rho0, n_traj=200)
print(f"guard events: {len(ens.guard_events)}, "
      f"max trace drift {np.max(ens.trace_drift):.1e}")

n_rec = len(ens.times)
ck = [n_rec // 3 - 1, 2 * n_rec // 3 - 1, n_rec - 1]
me = propagate_with_moments(gen, rho0, ens.times[ck], dt=0.01)
mn, se_n = ens.mean_n()
for j, idx in enumerate(ck):
    print(f"t = {ens.times[idx]:6.2f}: ensemble <n> = {mn[idx]:.4f} "
          f"(ME {me.n[j]:.4f}, deviation {abs(mn[idx] - me.n[j]) / se_n[idx]:.2f} SE)")

est, se = feedback_power_estimate(ens, control.kappa_f, bath.omega_o)
bound = 2 * control.kappa_f * bath.omega_o * abs(gen.c_inf) ** 2
print(f"feedback power {est:.4f} +- {se:.4f}; bound magnitude {bound:.4f}")
print("bound satisfied:", abs(est) >= bound - 3 * se)
