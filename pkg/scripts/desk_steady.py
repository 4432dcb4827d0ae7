#!/usr/bin/env python3
"""Stationary flywheel at the desk-scale working point.

Compares the closed-form displaced-thermal prediction with the numerical
null-space steady state and prints the charging figures of merit.
"""

import numpy as np

from flywheel import fock
from flywheel.engine import ControlSpec, EffectiveBath
from flywheel.fock import FockSpace, displaced_thermal, trace_distance
from flywheel.lindblad import compose_from_params, steady_state
from flywheel.steady import optimal_monitoring, predict, threshold

bath = EffectiveBath.from_rates(Gamma_e=0.01, beta_e=-0.5, omega_o=1.0)
control = ControlSpec(eps_d=0.02, gamma_m=0.04, kappa_f=0.02)
space = FockSpace(34)

pred = predict(bath, control)
print(f"threshold kappa_f    : {threshold(bath):.6g}")
print(f"effective beta*omega : {pred.beta * bath.omega_o:.6f}")
print(f"n_o / c_inf          : {pred.n_o:.6f} / {pred.c_inf.real:.6f}")
print(f"work / energy / eta  : {pred.work:.6f} / {pred.internal_energy:.6f} / "
      f"{pred.efficiency:.6f}")

gen = compose_from_params(bath, control, space)
rho = steady_state(gen)
td = trace_distance(rho, displaced_thermal(space, pred.beta * bath.omega_o, pred.c_inf))
c_num = fock.expectation(rho, fock.annihilation(space))
print(f"numerical cross-check: trace distance {td:.2e}, "
      f"c rel err {abs(c_num - pred.c_inf) / abs(pred.c_inf):.2e}")

gamma_opt, n_o_min, eta_opt = optimal_monitoring(bath, control.kappa_f, control.eps_d)
print(f"optimal monitoring   : gamma_m = {gamma_opt:.4g} "
      f"(n_o_min = {n_o_min:.6f}, eta = {eta_opt:.6f})")
