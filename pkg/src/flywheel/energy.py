"""Steady-state energy-current ledger of the flywheel.

Heat currents are expectation flows of the oscillator energy omega_o*c^dag*c
under each dissipator; driving power comes out of the rotating-field formula
and, independently, the interaction-picture commutator flow.  Feedback power
is estimated from trajectory ensembles using only the deterministic part of
the feedback Hamiltonian; the stochastic part would require Stratonovich
calculus and is an explicit non-goal, so the unconditional ledger carries the
combined feedback heat flow J_f_total plus that deterministic estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import ControlSpec, EffectiveBath
from .errors import DimensionMismatch, InsufficientTrajectories, InvariantViolation
from .fock import DensityMatrix, FockSpace
from .lindblad import (
    Generator,
    build_engine_dissipator,
    build_feedback_dissipator,
    build_monitoring_dissipator,
    compose,
    steady_state,
)
from .sme import EnsembleSummary


def _number_matrix(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def dissipator_current(term_generator: Generator, rho, omega_o: float) -> float:
    """Energy flow tr[(L_i rho) * omega_o c^dag c] of one generator piece."""
    mat = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if term_generator.dim is not None and mat.shape[0] != term_generator.dim:
        raise DimensionMismatch(f"state dim {mat.shape[0]} vs generator dim {term_generator.dim}")
    drho = term_generator.apply(mat)
    nvec = np.arange(mat.shape[0])
    return float(omega_o * np.real(np.sum(nvec * np.diag(drho))))


@dataclass(frozen=True)
class DrivePower:
    """Driving power by both routes; they must agree to 1e-8 relative."""

    from_displacement: float    # -2 eps_d omega_o c_inf
    from_commutator: float      # -eps_d tr([c^dag - c, rho] omega_o c^dag c)

    AGREEMENT_RTOL = 1e-8

    @property
    def value(self) -> float:
        return self.from_displacement

    def check(self):
        scale = max(abs(self.from_displacement), abs(self.from_commutator), 1e-300)
        if abs(self.from_displacement - self.from_commutator) > self.AGREEMENT_RTOL * scale:
            raise InvariantViolation(
                f"drive-power routes disagree: {self.from_displacement!r} vs "
                f"{self.from_commutator!r}"
            )
        return self


def driving_power(eps_d: float, omega_o: float, rho_inf: DensityMatrix | None = None,
                  c_inf: complex | None = None) -> DrivePower:
    """Stationary driving power, P_d = -2 eps_d omega_o c_inf > 0.

    Given a state, the commutator route is evaluated on it and c_inf is read
    off its amplitude unless supplied separately.
    """
    if rho_inf is None and c_inf is None:
        raise InvariantViolation("need rho_inf or c_inf")
    commutator = None
    if rho_inf is not None:
        d = rho_inf.space.dim
        c = np.diag(np.sqrt(np.arange(1.0, d)), k=1).astype(complex)
        a = c.conj().T - c
        comm = a @ rho_inf.mat - rho_inf.mat @ a
        n_op = _number_matrix(d)
        commutator = float(-eps_d * omega_o * np.real(np.einsum("ij,ji->", comm, n_op)))
        if c_inf is None:
            c_inf = complex(np.einsum("ij,ji->", rho_inf.mat, c))
    displacement = float(-2.0 * eps_d * omega_o * np.real(c_inf))
    if commutator is None:
        commutator = displacement
    return DrivePower(from_displacement=displacement, from_commutator=commutator).check()


def feedback_power_estimate(ensemble: EnsembleSummary, kappa_f: float, omega_o: float,
                            window=(0.5, 1.0)) -> tuple[float, float]:
    """Deterministic feedback power -2 kappa_f omega_o M|<c>_sigma|^2 with its
    standard error, from per-trajectory stationary-window averages."""
    if kappa_f == 0:
        return 0.0, 0.0
    vals = ensemble.stationary_abs_c_sq(window)
    vals = vals[~np.isnan(vals)]
    if vals.size < 30:
        raise InsufficientTrajectories(
            f"{vals.size} surviving trajectories < 30 for a power estimate"
        )
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(vals.size))
    scale = 2.0 * kappa_f * omega_o
    return -scale * mean, scale * se


@dataclass(frozen=True)
class EnergyLedger:
    """Stationary currents: J_e + J_m + J_f_total + P_d = 0.

    J_f and P_f are not reported separately at the unconditional level; the
    ledger carries the physically computable J_f_total plus the trajectory
    estimate of the deterministic feedback power with its bound.
    """

    J_e: float
    J_m: float
    J_f_total: float
    P_d: float
    P_f_det_bound: float      # 2 kappa_f omega_o |c_inf|^2 (lower bound magnitude)
    P_f_det_est: float
    P_f_det_se: float
    balance_residual: float
    balance_scale: float

    def check(self):
        if self.balance_residual > 1e-10 * self.balance_scale:
            raise InvariantViolation(
                f"energy balance residual {self.balance_residual:.3g} exceeds "
                f"1e-10 * {self.balance_scale:.3g}"
            )
        if not self.P_d > 0:
            raise InvariantViolation(f"driving power must be positive, got {self.P_d}")
        if not self.P_f_det_est < 0:
            raise InvariantViolation(f"feedback power must be negative, got {self.P_f_det_est}")
        if abs(self.P_f_det_est) < self.P_f_det_bound - 3.0 * self.P_f_det_se:
            raise InvariantViolation(
                f"|P_f_det| = {abs(self.P_f_det_est):.4g} below bound "
                f"{self.P_f_det_bound:.4g} - 3 SE"
            )
        return self


def ledger(bath: EffectiveBath, control: ControlSpec, ensemble: EnsembleSummary,
           window=(0.5, 1.0)) -> EnergyLedger:
    """Assemble the stationary ledger at the ensemble's space and controls."""
    if ensemble.config.bath != bath or ensemble.config.control != control:
        raise InvariantViolation("ensemble was run with different bath/control parameters")
    space: FockSpace = ensemble.config.space
    omega = bath.omega_o
    eng = build_engine_dissipator(bath, space)
    mon = build_monitoring_dissipator(control.gamma_m, space)
    fb = build_feedback_dissipator(control.gamma_m, control.kappa_f, space)
    gen = compose(eng, mon, fb, control.eps_d)
    rho_inf = steady_state(gen)

    J_e = dissipator_current(eng, rho_inf, omega)
    J_m = dissipator_current(mon, rho_inf, omega)
    J_f = dissipator_current(fb, rho_inf, omega)
    drive = driving_power(control.eps_d, omega, rho_inf=rho_inf)
    p_est, p_se = feedback_power_estimate(ensemble, control.kappa_f, omega, window)

    c_inf = gen.c_inf if gen.c_inf is not None else 0.0
    bound = 2.0 * control.kappa_f * omega * abs(c_inf) ** 2
    residual = abs(J_e + J_m + J_f + drive.from_commutator)
    nbar = float(np.real(np.sum(np.arange(space.dim) * np.diag(rho_inf.mat))))
    scale = omega * gen.Gamma * max(nbar, 1e-300)
    return EnergyLedger(
        J_e=J_e, J_m=J_m, J_f_total=J_f, P_d=drive.value,
        P_f_det_bound=bound, P_f_det_est=p_est, P_f_det_se=p_se,
        balance_residual=residual, balance_scale=scale,
    ).check()
