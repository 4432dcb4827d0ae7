"""Closed-form steady-state predictions for the stabilized flywheel.

Everything here is arithmetic on the composed rates: effective temperature,
displacement, occupation, extractable work, charging efficiency, and the
optimal monitoring-to-feedback ratio.  The numerical steady state of the
master equation (lindblad.steady_state) serves as the independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import ControlSpec, EffectiveBath
from .errors import BelowThreshold, InvariantViolation, UnstableNearThreshold
from .lindblad import composed_rates

# Points with kappa_f + kappa_e below this relative margin are reported as
# unstable instead of evaluated: the 1/(kappa_f+kappa_e) forms lose all
# significance there.
NEAR_THRESHOLD_REL = 1e-12


@dataclass(frozen=True)
class SteadyPrediction:
    """Closed-form stationary quantities of the composed dynamics."""

    Gamma: float
    beta: float
    c_inf: complex
    n_o: float
    work: float
    internal_energy: float
    efficiency: float
    omega_o: float
    kappa: float

    def validate(self):
        eff = 1.0 / (1.0 + self.n_o / abs(self.c_inf) ** 2)
        if eff != self.efficiency:
            raise InvariantViolation("efficiency inconsistent with n_o and c_inf")
        if self.work != self.omega_o * abs(self.c_inf) ** 2:
            raise InvariantViolation("work inconsistent with c_inf")
        return self


def threshold(bath: EffectiveBath) -> float:
    """Minimal feedback strength for stabilization: -kappa_e."""
    return -bath.kappa_e


def _kappa_total(bath: EffectiveBath, kappa_f: float) -> float:
    kap = kappa_f + bath.kappa_e
    if kap <= 0:
        raise BelowThreshold(
            f"kappa_f = {kappa_f:.6g} at or below threshold {-bath.kappa_e:.6g}"
        )
    scale = max(kappa_f, -bath.kappa_e, 1e-300)
    if kap < NEAR_THRESHOLD_REL * scale:
        raise UnstableNearThreshold(
            f"kappa_f + kappa_e = {kap:.3g} within roundoff of the threshold"
        )
    return kap


def predict(bath: EffectiveBath, control: ControlSpec) -> SteadyPrediction:
    """Full stationary prediction for a control setting above threshold."""
    kap = _kappa_total(bath, control.kappa_f)
    down, up = composed_rates(bath, control)
    omega = bath.omega_o
    if up > 0:
        beta = -math.log(up / down) / omega
        n_o = 1.0 / math.expm1(beta * omega)
    else:
        beta = math.inf
        n_o = 0.0
    c_inf = -control.eps_d / kap
    work = omega * abs(c_inf) ** 2
    energy = omega * (n_o + abs(c_inf) ** 2)
    if control.eps_d > 0:
        eff = 1.0 / (1.0 + n_o / abs(c_inf) ** 2)
    else:
        eff = 0.0
    return SteadyPrediction(
        Gamma=down, beta=beta, c_inf=complex(c_inf), n_o=n_o, work=work,
        internal_energy=energy, efficiency=eff, omega_o=omega, kappa=kap,
    )


def optimal_monitoring(bath: EffectiveBath, kappa_f: float, eps_d: float):
    """Monitoring strength minimizing the stationary thermal occupation.

    The minimum sits at gamma_m = 2*kappa_f, where
    n_o|min = 1 / [(1 + 2 kappa_f / Gamma_e) exp(beta_e omega_o) - 1].
    Returns (gamma_m_opt, n_o_min, eta_opt) with eta_opt evaluated through
    predict() at the optimum.
    """
    _kappa_total(bath, kappa_f)
    if bath.Gamma_e <= 0:
        raise InvariantViolation("optimal monitoring needs Gamma_e > 0")
    gamma_opt = 2.0 * kappa_f
    denom = (1.0 + 2.0 * kappa_f / bath.Gamma_e) * math.exp(bath.beta_e * bath.omega_o) - 1.0
    if denom <= 0:
        raise BelowThreshold(
            f"n_o|min denominator {denom:.3g} <= 0: engine dominates the feedback"
        )
    n_o_min = 1.0 / denom
    eta_opt = predict(bath, ControlSpec(eps_d=eps_d, gamma_m=gamma_opt, kappa_f=kappa_f)).efficiency
    return gamma_opt, n_o_min, eta_opt


@dataclass(frozen=True)
class SurfacePoint:
    kappa_f: float
    gamma_m: float
    eta: float | None
    work: float | None
    above_threshold: bool
    unstable: bool = False


@dataclass(frozen=True)
class SurfaceTable:
    """Charging-efficiency surface over a (gamma_m, kappa_f) grid."""

    points: tuple[SurfacePoint, ...]
    bath: EffectiveBath
    eps_d: float

    def rows_for(self, kappa_f: float):
        return [p for p in self.points if p.kappa_f == kappa_f]

    @property
    def kappa_values(self):
        seen = []
        for p in self.points:
            if p.kappa_f not in seen:
                seen.append(p.kappa_f)
        return seen


def default_grid(bath: EffectiveBath, n_kappa: int = 12, n_ratio: int = 25,
                 kappa_span: float = 100.0, ratio_span: float = 10.0):
    """Log-spaced grid: kappa_f in (threshold, kappa_span*threshold],
    gamma_m/kappa_f in [1/ratio_span, ratio_span]."""
    th = threshold(bath)
    if th <= 0:
        raise InvariantViolation("default grid needs an engine-regime bath (threshold > 0)")
    kappa_values = th * np.logspace(math.log10(1.02), math.log10(kappa_span), n_kappa)
    ratio_values = np.logspace(-math.log10(ratio_span), math.log10(ratio_span), n_ratio)
    return kappa_values, ratio_values


def efficiency_surface(bath: EffectiveBath, eps_d: float, kappa_f_values,
                       gamma_m_values=None, ratio_values=None) -> SurfaceTable:
    """Evaluate eta and the stored work over the grid.

    Either absolute gamma_m values (shared by all rows) or ratios
    gamma_m/kappa_f (scaled per row) may be given.  Work depends on kappa_f
    only, so it is constant along each row by construction; below-threshold
    or near-threshold points carry null entries.
    """
    if (gamma_m_values is None) == (ratio_values is None):
        raise InvariantViolation("give exactly one of gamma_m_values / ratio_values")
    points = []
    for kf in np.asarray(kappa_f_values, dtype=float):
        if ratio_values is not None:
            gammas = [float(r) * kf for r in ratio_values]
        else:
            gammas = [float(g) for g in gamma_m_values]
        for gm in gammas:
            try:
                pred = predict(bath, ControlSpec(eps_d=eps_d, gamma_m=gm, kappa_f=float(kf)))
            except BelowThreshold:
                points.append(SurfacePoint(float(kf), gm, None, None, False))
            except UnstableNearThreshold:
                points.append(SurfacePoint(float(kf), gm, None, None, True, unstable=True))
            else:
                points.append(SurfacePoint(float(kf), gm, pred.efficiency, pred.work, True))
    return SurfaceTable(points=tuple(points), bath=bath, eps_d=eps_d)
