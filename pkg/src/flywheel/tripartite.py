"""Ground truth for the engine reduction.

Full two-qubit-plus-oscillator master equation on the composite space
(hot qubit) x (cold qubit) x (Fock ladder), used to validate the effective
single-bath picture numerically, and the classically driven two-qubit engine
whose stationary output power has a closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import EngineSpec, reduce as engine_reduce
from .errors import InvariantViolation, NoSteadyState
from .fock import DensityMatrix, FockSpace, trace_distance
from .lindblad import DissipatorTerm, Generator, build_engine_dissipator
from . import lindblad


@dataclass(frozen=True)
class TripartiteState:
    """Density matrix on qubit_h x qubit_c x Fock with recorded factors."""

    mat: np.ndarray
    fock_dim: int

    @property
    def dim(self) -> int:
        return 4 * self.fock_dim

    def validate(self):
        DensityMatrix.from_matrix(self.mat, FockSpace(self.dim))
        return self


@dataclass(frozen=True)
class ClassicalDriveSpec:
    """Two-qubit engine driven by a resonant classical field of amplitude eps.

    The closed-form power assumes weak driving, eps << Gamma_h, Gamma_c.
    """

    engine: EngineSpec
    eps: float

    def __post_init__(self):
        if not self.eps >= 0:
            raise InvariantViolation(f"eps must be >= 0, got {self.eps}")


_LOWER = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
_I2 = np.eye(2, dtype=complex)


def _composite_ops(dim: int):
    eye_f = np.eye(dim, dtype=complex)
    c = np.diag(np.sqrt(np.arange(1.0, dim)), k=1).astype(complex)
    a = np.kron(np.kron(_LOWER, _I2), eye_f)
    b = np.kron(np.kron(_I2, _LOWER), eye_f)
    cc = np.kron(np.kron(_I2, _I2), c)
    return a, b, cc


def thermal_qubit(n_occ: float) -> np.ndarray:
    """2x2 thermal state with excited population n_occ."""
    return np.diag([1.0 - n_occ, n_occ]).astype(complex)


def partial_trace_oscillator(mat: np.ndarray, fock_dim: int) -> np.ndarray:
    """Trace out both qubits from a composite matrix."""
    d = fock_dim
    resh = mat.reshape(2, 2, d, 2, 2, d)
    return np.einsum("abmabn->mn", resh)


def build_tripartite_generator(spec: EngineSpec, space: FockSpace) -> Generator:
    """Qubit thermalizers plus the resonant three-body coupling
    K = -i g a b^dag c^dag + h.c. in the interaction picture."""
    a, b, c = _composite_ops(space.dim)
    terms = [
        DissipatorTerm(a, spec.Gamma_h),
        DissipatorTerm(a.conj().T, spec.Gamma_h * math.exp(-spec.beta_h * spec.omega_h)),
        DissipatorTerm(b, spec.Gamma_c),
        DissipatorTerm(b.conj().T, spec.Gamma_c * math.exp(-spec.beta_c * spec.omega_c)),
    ]
    ham = None
    if spec.g != 0:
        coupling = a @ b.conj().T @ c.conj().T
        ham = -1j * spec.g * coupling
        ham = ham + ham.conj().T
    return Generator(terms, hamiltonian=ham)


@dataclass
class ReductionReport:
    """Trace distances between the traced-out oscillator and the
    effective-bath propagation, per coupling value."""

    g_values: tuple
    times: np.ndarray
    distances: dict            # g -> array of distances over times
    max_distance: dict         # g -> float
    monotone_in_g: bool
    occupation_slopes: dict    # g -> (full_route, reduced_route)


def validate_reduction(spec: EngineSpec, space: FockSpace, horizon: float,
                       g_factors=(1.0, 0.5, 0.25), n_samples: int = 16,
                       dt: float | None = None,
                       rho0: DensityMatrix | None = None) -> ReductionReport:
    """Evolve the composite state from (qubit Gibbs) x rho0 and compare the
    traced-out oscillator with the effective-bath propagation of rho0.

    The maximal trace distance over the horizon must shrink as g shrinks;
    occupation slopes over the second half of the horizon are reported for
    both routes.  With g = 0 both routes leave the oscillator untouched and
    every distance is zero.
    """
    if spec.g < 0:
        raise InvariantViolation("validate_reduction needs g >= 0")
    d = space.dim
    times = np.linspace(horizon / n_samples, horizon, n_samples)
    if rho0 is None:
        m = np.zeros((d, d), dtype=complex)
        m[0, 0] = 1.0
        rho0 = DensityMatrix(m, space)
    if dt is None:
        dt = 0.02 / max(spec.Gamma_h, spec.Gamma_c)
        dt = min(dt, times[0] / 4.0)

    distances = {}
    max_distance = {}
    slopes = {}
    nvec = np.arange(d)
    g_values = tuple(spec.g * f for f in g_factors)
    for g in g_values:
        sub = EngineSpec(
            omega_h=spec.omega_h, omega_c=spec.omega_c, beta_h=spec.beta_h,
            beta_c=spec.beta_c, Gamma_h=spec.Gamma_h, Gamma_c=spec.Gamma_c, g=g,
        )
        full_gen = build_tripartite_generator(sub, space)
        qubits = np.kron(thermal_qubit(sub.n_h), thermal_qubit(sub.n_c))
        DensityMatrix.from_matrix(np.kron(qubits, rho0.mat), FockSpace(4 * d))
        bath = engine_reduce(sub)
        red_gen = build_engine_dissipator(bath, space)

        dists = []
        full_n = []
        red_n = []
        rho_comp = np.kron(qubits, rho0.mat)
        rho_red = rho0.mat.copy()
        t_prev = 0.0
        for t_k in times:
            rho_comp, _ = lindblad._rk4_segment(full_gen, rho_comp, t_prev, float(t_k), dt, None)
            rho_red, _ = lindblad._rk4_segment(red_gen, rho_red, t_prev, float(t_k), dt, None)
            t_prev = float(t_k)
            osc = partial_trace_oscillator(rho_comp, d)
            dists.append(trace_distance(osc, rho_red))
            full_n.append(float(np.real(np.sum(nvec * np.diag(osc)))))
            red_n.append(float(np.real(np.sum(nvec * np.diag(rho_red)))))
        distances[g] = np.array(dists)
        max_distance[g] = float(np.max(dists))
        half = n_samples // 2
        slopes[g] = (
            _secant_slope(times[half:], np.array(full_n[half:])),
            _secant_slope(times[half:], np.array(red_n[half:])),
        )

    ordered = [max_distance[g] for g in g_values]
    monotone = all(ordered[k] > ordered[k + 1] or ordered[k] < 1e-14
                   for k in range(len(ordered) - 1))
    return ReductionReport(
        g_values=g_values, times=times, distances=distances,
        max_distance=max_distance, monotone_in_g=monotone,
        occupation_slopes=slopes,
    )


def _secant_slope(ts: np.ndarray, ys: np.ndarray) -> float:
    return float((ys[-1] - ys[0]) / (ts[-1] - ts[0]))


@dataclass(frozen=True)
class ClassicalPowerResult:
    """Stationary output power -P_inf of the classically driven engine by
    both routes (closed form and numerical steady state)."""

    closed_form: float
    steady_state_route: float

    AGREEMENT_RTOL = 1e-6
    AGREEMENT_ATOL = 1e-12  # absolute cushion for vanishing-power edge cases

    @property
    def value(self) -> float:
        return self.closed_form

    def check(self):
        scale = max(abs(self.closed_form), abs(self.steady_state_route), 1e-300)
        if abs(self.closed_form - self.steady_state_route) > \
                self.AGREEMENT_RTOL * scale + self.AGREEMENT_ATOL:
            raise InvariantViolation(
                f"classical power routes disagree: {self.closed_form!r} vs "
                f"{self.steady_state_route!r}"
            )
        return self


def classical_drive_power(spec: ClassicalDriveSpec) -> ClassicalPowerResult:
    """Stationary output power of the two-qubit engine driven by a resonant
    classical field, without any flywheel.

    Closed form:
        -P = 4 eps^2 omega_o (n_h - n_c) /
             [ 4 eps^2 ((1-n_h)/Gamma_h + (1-n_c)/Gamma_c)
               + Gamma_h (1+e^{-beta_h omega_h}) + Gamma_c (1+e^{-beta_c omega_c}) ]

    The numerical route evaluates the same power as the stationary
    expectation of the drive-energy flow, -2 eps omega_o Re <a b^dag>.
    """
    eng = spec.engine
    if not eng.omega_h > eng.omega_c:
        raise InvariantViolation("classical drive assumes omega_h > omega_c")
    omega_o = eng.omega_h - eng.omega_c
    eps = spec.eps
    if eps == 0:
        return ClassicalPowerResult(0.0, 0.0)
    n_h, n_c = eng.n_h, eng.n_c
    denom = (
        4.0 * eps**2 * ((1.0 - n_h) / eng.Gamma_h + (1.0 - n_c) / eng.Gamma_c)
        + eng.Gamma_h * (1.0 + math.exp(-eng.beta_h * eng.omega_h))
        + eng.Gamma_c * (1.0 + math.exp(-eng.beta_c * eng.omega_c))
    )
    closed = 4.0 * eps**2 * omega_o * (n_h - n_c) / denom

    a = np.kron(_LOWER, _I2)
    b = np.kron(_I2, _LOWER)
    terms = [
        DissipatorTerm(a, eng.Gamma_h),
        DissipatorTerm(a.conj().T, eng.Gamma_h * math.exp(-eng.beta_h * eng.omega_h)),
        DissipatorTerm(b, eng.Gamma_c),
        DissipatorTerm(b.conj().T, eng.Gamma_c * math.exp(-eng.beta_c * eng.omega_c)),
    ]
    # interaction-picture drive -i eps (a b^dag - a^dag b) as a Hamiltonian
    ham = -1j * eps * (a @ b.conj().T - a.conj().T @ b)
    gen = Generator(terms, hamiltonian=ham)
    sup = gen.to_superoperator()
    _, s, vh = np.linalg.svd(sup)
    if s[-2] < 1e-12:
        raise NoSteadyState("driven two-qubit generator has a degenerate null space")
    rho = vh[-1].conj().reshape(4, 4)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise NoSteadyState("null vector of the driven two-qubit generator is traceless")
    rho /= tr
    ab_dag = complex(np.einsum("ij,ji->", rho, a @ b.conj().T))
    numerical = float(-2.0 * eps * omega_o * ab_dag.real)
    return ClassicalPowerResult(closed_form=closed, steady_state_route=numerical).check()
