"""Unconditional generators on the truncated Fock space.

Builds the engine, monitoring and feedback dissipators, composes them with
the resonant driving into the compact two-rate normal form, propagates
density matrices with fixed-step RK4, solves for steady states, and carries
the closed-form first/second moment flows.

All generators act in the interaction picture of the oscillator: driving is
a static Hamiltonian term and the fast phase rotation is applied analytically
at readout where needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engine import ControlSpec, EffectiveBath
from .errors import (
    DimensionMismatch,
    FeedbackWithoutMeasurement,
    InvariantViolation,
    NegativeCoefficientPropagation,
    NoSteadyState,
    StepTooLarge,
    TruncationBreached,
    TruncationInsufficient,
)
from .fock import TOP_LEVEL_TOL, DensityMatrix, FockSpace, annihilation

STEADY_RESIDUAL_TOL = 1e-10
RK4_STABILITY_LIMIT = 2.0


def dissipator_action(L: np.ndarray, Ld: np.ndarray, LdL: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """D[L] rho = L rho L^dag - (1/2){L^dag L, rho}."""
    LrLd = L @ rho @ Ld
    anti = LdL @ rho
    return LrLd - 0.5 * (anti + anti.conj().T)


@dataclass(frozen=True)
class DissipatorTerm:
    """Jump operator with its rate.

    Negative rates arise only for the standalone feedback dissipator in the
    regime kappa_f < gamma_m; such terms are never propagated on their own
    (compose() merges them into a nonnegative normal form first).
    """

    jump: np.ndarray
    rate: float


class Generator:
    """Sum of weighted dissipators plus an optional Hamiltonian commutator."""

    def __init__(self, terms, hamiltonian=None, picture="interaction",
                 pair_rates=None, omega_o=None):
        self.terms = tuple(terms)
        self.hamiltonian = hamiltonian
        self.picture = picture
        # (downward, upward) rate pair for single-mode thermal-type generators;
        # lets compose() merge components without inspecting matrices.
        self.pair_rates = pair_rates
        self.omega_o = omega_o
        dims = {t.jump.shape[0] for t in self.terms}
        if hamiltonian is not None:
            dims.add(hamiltonian.shape[0])
        if len(dims) > 1:
            raise DimensionMismatch(f"mixed operator dimensions {sorted(dims)}")
        self.dim = dims.pop() if dims else None
        self._Ld = [t.jump.conj().T for t in self.terms]
        self._LdL = [ld @ t.jump for ld, t in zip(self._Ld, self.terms)]
        self._super = None
        self._stiffness = None

    @property
    def is_zero(self) -> bool:
        return not self.terms and self.hamiltonian is None

    @property
    def has_negative_rate(self) -> bool:
        return any(t.rate < 0 for t in self.terms)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Generator action on a matrix; output symmetrized to keep the
        Hermitian-in/Hermitian-out property exact in floating point."""
        if self.dim is not None and rho.shape[0] != self.dim:
            raise DimensionMismatch(f"state dim {rho.shape[0]} vs generator dim {self.dim}")
        out = np.zeros_like(rho)
        for term, Ld, LdL in zip(self.terms, self._Ld, self._LdL):
            out += term.rate * dissipator_action(term.jump, Ld, LdL, rho)
        if self.hamiltonian is not None:
            out += -1j * (self.hamiltonian @ rho - rho @ self.hamiltonian)
        return 0.5 * (out + out.conj().T)

    def to_superoperator(self) -> np.ndarray:
        """Dense matrix acting on row-major vectorized states."""
        if self._super is None:
            d = self.dim
            if d is None:
                raise InvariantViolation("zero generator has no defined dimension")
            eye = np.eye(d)
            sup = np.zeros((d * d, d * d), dtype=complex)
            for term, Ld, LdL in zip(self.terms, self._Ld, self._LdL):
                sup += term.rate * (
                    np.kron(term.jump, term.jump.conj())
                    - 0.5 * np.kron(LdL, eye)
                    - 0.5 * np.kron(eye, LdL.T)
                )
            if self.hamiltonian is not None:
                h = self.hamiltonian
                sup += -1j * (np.kron(h, eye) - np.kron(eye, h.T))
            self._super = sup
        return self._super

    def stiffness(self) -> float:
        """Crude spectral-scale estimate used for the step-size bound."""
        if self._stiffness is None:
            s = 0.0
            for term, LdL in zip(self.terms, self._LdL):
                s += abs(term.rate) * float(np.linalg.eigvalsh(LdL)[-1])
            if self.hamiltonian is not None:
                s += 2.0 * float(np.linalg.norm(self.hamiltonian, 2))
            self._stiffness = s
        return self._stiffness


def _require_signal_for_feedback(gamma_m: float, kappa_f: float):
    if kappa_f > 0 and gamma_m <= 0:
        raise FeedbackWithoutMeasurement(
            f"kappa_f={kappa_f} requires gamma_m > 0 (got {gamma_m})"
        )


def build_engine_dissipator(bath: EffectiveBath, space: FockSpace) -> Generator:
    """Thermal-type dissipator of the engine bath: downward rate Gamma_e,
    upward rate Gamma_e exp(-beta_e omega_o)."""
    down = bath.Gamma_e
    up = bath.Gamma_e * bath.boltzmann_factor
    c = annihilation(space)
    terms = []
    if down > 0:
        terms.append(DissipatorTerm(c, down))
    if up > 0:
        terms.append(DissipatorTerm(c.conj().T, up))
    return Generator(terms, pair_rates=(down, up), omega_o=bath.omega_o)


def build_monitoring_dissipator(gamma_m: float, space: FockSpace) -> Generator:
    """Infinite-temperature dissipator of the two-quadrature monitor:
    symmetric up/down rates gamma_m/4."""
    if gamma_m < 0:
        raise InvariantViolation(f"gamma_m must be >= 0, got {gamma_m}")
    c = annihilation(space)
    r = gamma_m / 4.0
    terms = []
    if r > 0:
        terms = [DissipatorTerm(c, r), DissipatorTerm(c.conj().T, r)]
    return Generator(terms, pair_rates=(r, r))


def build_feedback_dissipator(gamma_m: float, kappa_f: float, space: FockSpace) -> Generator:
    """Feedback contribution: downward kappa_f^2/gamma_m + kappa_f, upward
    kappa_f^2/gamma_m - kappa_f.

    The upward coefficient is negative exactly when kappa_f < gamma_m; the
    returned generator is then only meaningful inside a composition and is
    rejected by propagate().
    """
    if kappa_f < 0:
        raise InvariantViolation(f"kappa_f must be >= 0, got {kappa_f}")
    _require_signal_for_feedback(gamma_m, kappa_f)
    if kappa_f == 0:
        return Generator([], pair_rates=(0.0, 0.0))
    down = kappa_f**2 / gamma_m + kappa_f
    up = kappa_f**2 / gamma_m - kappa_f
    c = annihilation(space)
    terms = [DissipatorTerm(c, down)]
    if up != 0:
        terms.append(DissipatorTerm(c.conj().T, up))
    return Generator(terms, pair_rates=(down, up))


class ComposedGenerator(Generator):
    """Compact normal form of engine + monitoring + feedback + driving.

    The summed rates always satisfy down >= up >= 0 above threshold; below
    threshold up > down and the effective temperature is negative (no steady
    state, but propagation is still legal).
    """

    def __init__(self, down: float, up: float, eps_d: float, omega_o: float, space: FockSpace):
        c = annihilation(space)
        terms = []
        if down > 0:
            terms.append(DissipatorTerm(c, down))
        if up > 0:
            terms.append(DissipatorTerm(c.conj().T, up))
        ham = -1j * eps_d * (c.conj().T - c) if eps_d != 0 else None
        super().__init__(terms, hamiltonian=ham, pair_rates=(down, up), omega_o=omega_o)
        self.space = space
        self.down_rate = down
        self.up_rate = up
        self.eps_d = eps_d
        self.Gamma = down
        self.kappa = 0.5 * (down - up)
        if up <= 0:
            self.beta = math.inf
        else:
            self.beta = -math.log(up / down) / omega_o
        self.c_inf = (-eps_d / self.kappa) if self.kappa > 0 else None


def compose(bath_gen: Generator, monitoring_gen: Generator, feedback_gen: Generator,
            eps_d: float) -> ComposedGenerator:
    """Merge the three dissipators and the driving into the two-rate form,
    reporting the effective (Gamma, beta)."""
    gens = (bath_gen, monitoring_gen, feedback_gen)
    dims = {g.dim for g in gens if g.dim is not None}
    if len(dims) > 1:
        raise DimensionMismatch(f"components on different spaces: {sorted(dims)}")
    if bath_gen.omega_o is None:
        raise InvariantViolation("bath component must carry omega_o")
    if eps_d < 0:
        raise InvariantViolation(f"eps_d must be >= 0, got {eps_d}")
    for g in gens:
        if g.pair_rates is None:
            raise InvariantViolation("compose() needs single-mode components with rate pairs")
    down = sum(g.pair_rates[0] for g in gens)
    up = sum(g.pair_rates[1] for g in gens)
    dim = dims.pop() if dims else None
    if dim is None:
        raise InvariantViolation("cannot compose three zero generators without a space")
    return ComposedGenerator(down, up, eps_d, bath_gen.omega_o, FockSpace(dim))


def compose_from_params(bath: EffectiveBath, control: ControlSpec,
                        space: FockSpace) -> ComposedGenerator:
    """Convenience builder from parameter records."""
    _require_signal_for_feedback(control.gamma_m, control.kappa_f)
    eng = build_engine_dissipator(bath, space)
    mon = build_monitoring_dissipator(control.gamma_m, space)
    fb = build_feedback_dissipator(control.gamma_m, control.kappa_f, space)
    return compose(eng, mon, fb, control.eps_d)


@dataclass
class GuardEvent:
    kind: str
    time: float
    value: float


@dataclass
class MomentRecord:
    """Moments sampled along a propagation; data stop at a guard event."""

    times: np.ndarray
    c: np.ndarray
    n: np.ndarray
    final_state: DensityMatrix | None
    guard_event: GuardEvent | None = None


def _check_step(gen: Generator, dt: float):
    stiff = gen.stiffness()
    if stiff > 0 and dt * stiff > RK4_STABILITY_LIMIT:
        raise StepTooLarge(
            f"dt={dt} exceeds stability bound {RK4_STABILITY_LIMIT / stiff:.3g} "
            f"(stiffness {stiff:.3g})"
        )


def _rk4_segment(gen: Generator, rho: np.ndarray, t0: float, t1: float, dt: float,
                 guard_tol: float):
    """Integrate over [t0, t1]; returns (rho, guard_event_or_None)."""
    span = t1 - t0
    if span <= 0:
        return rho, None
    n_steps = max(1, int(math.ceil(span / dt - 1e-12)))
    h = span / n_steps
    d = rho.shape[0]
    for k in range(n_steps):
        k1 = gen.apply(rho)
        k2 = gen.apply(rho + 0.5 * h * k1)
        k3 = gen.apply(rho + 0.5 * h * k2)
        k4 = gen.apply(rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if guard_tol is not None:
            pop = rho[d - 1, d - 1].real + rho[d - 2, d - 2].real
            if pop > guard_tol:
                return rho, GuardEvent("truncation", t0 + (k + 1) * h, pop)
    return rho, None


def propagate(gen: Generator, rho0: DensityMatrix, t: float, dt: float,
              guard_tol: float = TOP_LEVEL_TOL) -> DensityMatrix:
    """Fixed-step RK4 solution of d rho/dt = L rho over [0, t].

    Trace and Hermiticity are preserved by construction and re-checked on
    the result; population reaching the top Fock levels raises
    TruncationBreached (the expected outcome of instability demonstrations).
    """
    if gen.has_negative_rate:
        raise NegativeCoefficientPropagation(
            "refusing to propagate a standalone dissipator with negative rates; "
            "compose() it with its companions first"
        )
    if gen.is_zero:
        return rho0
    _check_step(gen, dt)
    rho, event = _rk4_segment(gen, rho0.mat.copy(), 0.0, t, dt, guard_tol)
    if event is not None:
        raise TruncationBreached(
            f"top-level population {event.value:.3g} > {guard_tol:.0e} at t={event.time:.4g}",
            time=event.time, population=event.value,
        )
    return DensityMatrix.from_matrix(rho, rho0.space)


def propagate_with_moments(gen: Generator, rho0: DensityMatrix, record_times,
                           dt: float, guard_tol: float = TOP_LEVEL_TOL) -> MomentRecord:
    """Propagate and sample <c>, <c^dag c> at the requested times.

    On a truncation breach the record holds the samples collected so far and
    carries the guard event instead of raising.
    """
    if gen.has_negative_rate:
        raise NegativeCoefficientPropagation("standalone negative-rate dissipator")
    _check_step(gen, dt)
    record_times = np.asarray(record_times, dtype=float)
    d = rho0.space.dim
    c_op = annihilation(rho0.space)
    nvec = np.arange(d)
    rho = rho0.mat.copy()
    t_prev = 0.0
    cs, ns, times = [], [], []
    event = None
    for t_k in record_times:
        rho, event = _rk4_segment(gen, rho, t_prev, float(t_k), dt, guard_tol)
        if event is not None:
            break
        times.append(float(t_k))
        cs.append(complex(np.einsum("ij,ji->", rho, c_op)))
        ns.append(float(np.real(np.sum(nvec * np.diag(rho)))))
        t_prev = float(t_k)
    final = None
    if event is None:
        final = DensityMatrix.from_matrix(rho, rho0.space)
    return MomentRecord(
        times=np.array(times), c=np.array(cs, dtype=complex), n=np.array(ns),
        final_state=final, guard_event=event,
    )


def steady_state(gen: ComposedGenerator, guard_tol: float = TOP_LEVEL_TOL) -> DensityMatrix:
    """Stationary state as the null vector of the vectorized generator
    (smallest singular value), cross-checkable against long propagation.

    Requires the composed effective temperature to be positive (feedback
    above threshold), otherwise the only finite-dimensional fixed point is a
    truncation artifact and NoSteadyState is raised.
    """
    if not hasattr(gen, "beta"):
        raise InvariantViolation("steady_state expects a composed generator")
    if not gen.beta > 0:
        raise NoSteadyState(
            f"composed beta*omega_o = {gen.beta * gen.omega_o:.4g} <= 0: "
            "feedback at or below threshold"
        )
    d = gen.dim
    sup = gen.to_superoperator()
    _, _, vh = np.linalg.svd(sup)
    rho = vh[-1].conj().reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise NoSteadyState("null vector is traceless; stationary state not unique")
    rho = rho / tr
    residual = float(np.linalg.norm(sup @ rho.reshape(-1)))
    if residual > STEADY_RESIDUAL_TOL:
        raise InvariantViolation(f"steady-state residual {residual:.3g} > {STEADY_RESIDUAL_TOL:.0e}")
    state = DensityMatrix.from_matrix(rho, FockSpace(d))
    pop = state.top_level_population()
    if pop > guard_tol:
        raise TruncationInsufficient(
            f"steady state occupies top levels (population {pop:.3g}); increase dim"
        )
    return state


def composed_rates(bath: EffectiveBath, control: ControlSpec) -> tuple[float, float]:
    """(downward, upward) total rates of the composed generator."""
    _require_signal_for_feedback(control.gamma_m, control.kappa_f)
    g, k = control.gamma_m, control.kappa_f
    extra = (g / 4.0 + k**2 / g) if g > 0 else 0.0
    down = bath.Gamma_e + extra + k
    up = bath.Gamma_e * bath.boltzmann_factor + extra - k
    return down, up


def moment_flow(bath: EffectiveBath, eps_d: float, kappa_f: float, gamma_m: float,
                c0: complex, n0: float, t, picture: str = "schroedinger"):
    """Closed-form first and second moments of the composed dynamics.

    Amplitude damps (or grows) at kappa = kappa_f + kappa_e; monitoring only
    heats (symmetric rates cancel in kappa).  The fluctuation occupation
    n - |<c>|^2 relaxes at 2*kappa toward up_rate/(2*kappa).  Returns
    (<c>_t, <n>_t); in the Schroedinger picture the amplitude carries the
    free rotation exp(-i omega_o t).
    """
    if picture not in ("schroedinger", "interaction"):
        raise InvariantViolation(f"unknown picture {picture!r}")
    control = ControlSpec(eps_d=eps_d, gamma_m=gamma_m, kappa_f=kappa_f)
    down, up = composed_rates(bath, control)
    kappa = 0.5 * (down - up)  # = kappa_f + kappa_e
    t = np.asarray(t, dtype=float)
    c0 = complex(c0)
    if kappa != 0:
        c_star = -eps_d / kappa
        decay = np.exp(-kappa * t)
        c_int = c_star + (c0 - c_star) * decay
        ntil_star = up / (2.0 * kappa)
        ntil0 = n0 - abs(c0) ** 2
        ntil = ntil_star + (ntil0 - ntil_star) * decay**2
    else:
        c_int = c0 - eps_d * t
        ntil = (n0 - abs(c0) ** 2) + up * t
    n_t = ntil + np.abs(c_int) ** 2
    if picture == "schroedinger":
        c_out = c_int * np.exp(-1j * bath.omega_o * t)
    else:
        c_out = c_int
    return c_out, n_t


def unstable_temperature(n_t: float, omega_o: float) -> float:
    """Instantaneous temperature of the runaway Gibbs solution:
    1/beta_t = omega_o / log(1 + 1/n_t)."""
    if not n_t > 0:
        raise InvariantViolation(f"occupation must be > 0, got {n_t}")
    return omega_o / math.log1p(1.0 / n_t)
