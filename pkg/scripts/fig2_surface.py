#!/usr/bin/env python3
"""Charging-efficiency surface over measurement and feedback strength.

Reproduces the published operating map: a ridge at gamma_m = 2 kappa_f,
rising toward the feedback threshold.  Writes CSV plus a plot script.
"""

from pathlib import Path

from flywheel.cli import emit_figure_data
from flywheel.engine import EffectiveBath
from flywheel.steady import default_grid, efficiency_surface, threshold

OUT = Path("out")
OUT.mkdir(exist_ok=True)

bath = EffectiveBath.from_rates(Gamma_e=1e-6, beta_e=-0.1, omega_o=1.0)
eps_d = 9e-2
print(f"threshold kappa_f = {threshold(bath):.6g}")

kappas, ratios = default_grid(bath, n_kappa=16, n_ratio=33)
table = efficiency_surface(bath, eps_d, kappas, ratio_values=ratios)
cfg = {"bath": {"Gamma_e": bath.Gamma_e, "beta_e": bath.beta_e, "omega_o": bath.omega_o},
       "eps_d": eps_d}
csv_path, script_path = emit_figure_data(table, OUT, "fig2", cfg)
print(f"wrote {csv_path} and {script_path}")
print("render with: python", script_path)
