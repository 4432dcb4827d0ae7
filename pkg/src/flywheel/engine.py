"""Two-qubit heat engine and its reduction to an effective oscillator bath.

An engine specification (two qubit frequencies, two bath temperatures, two
damping rates, one coupling) maps to a single effective bath acting on the
flywheel oscillator: rate Gamma_e, inverse temperature beta_e (negative in
the engine regime) at the difference frequency omega_o = omega_h - omega_c.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .errors import InvalidFrequencies, InvariantViolation

# Operational reading of the weak-coupling "<<": the margin ratio should stay
# below this before the effective-bath picture is trusted.
WEAK_COUPLING_RATIO = 0.1


class WeakCouplingWarning(UserWarning):
    """Raised-through-warnings signal that the effective-bath reduction is
    being used outside its trusted regime."""


@dataclass(frozen=True)
class EngineSpec:
    """Two-qubit engine parameters.

    omega_h, omega_c : qubit frequencies (engine use expects omega_h > omega_c)
    beta_h, beta_c   : inverse bath temperatures
    Gamma_h, Gamma_c : qubit damping rates
    g                : qubit-pair to oscillator coupling
    """

    omega_h: float
    omega_c: float
    beta_h: float
    beta_c: float
    Gamma_h: float
    Gamma_c: float
    g: float = 0.0

    def __post_init__(self):
        for name in ("omega_h", "omega_c", "beta_h", "beta_c", "Gamma_h", "Gamma_c"):
            if not getattr(self, name) > 0:
                raise InvariantViolation(f"{name} must be > 0, got {getattr(self, name)}")
        if self.g < 0:
            raise InvariantViolation(f"g must be >= 0, got {self.g}")

    @property
    def n_h(self) -> float:
        return 1.0 / (math.exp(self.beta_h * self.omega_h) + 1.0)

    @property
    def n_c(self) -> float:
        return 1.0 / (math.exp(self.beta_c * self.omega_c) + 1.0)

    @property
    def p_10(self) -> float:
        """Population of |10> (hot excited, cold ground) in the free steady state."""
        return self.n_h * (1.0 - self.n_c)

    @property
    def p_01(self) -> float:
        """Population of |01>."""
        return self.n_c * (1.0 - self.n_h)

    @property
    def is_engine_regime(self) -> bool:
        """beta_h/beta_c < omega_c/omega_h < 1: population inversion present."""
        return self.beta_h / self.beta_c < self.omega_c / self.omega_h < 1.0


@dataclass(frozen=True)
class ControlSpec:
    """Driving amplitude, measurement strength and feedback strength."""

    eps_d: float
    gamma_m: float
    kappa_f: float

    def __post_init__(self):
        for name in ("eps_d", "gamma_m", "kappa_f"):
            if getattr(self, name) < 0:
                raise InvariantViolation(f"{name} must be >= 0, got {getattr(self, name)}")


def _kappa_from(Gamma_e: float, beta_e: float, omega_o: float) -> float:
    # 0.5*Gamma*(1 - exp(-beta*omega)) via expm1 to avoid cancellation near beta=0
    return -0.5 * Gamma_e * math.expm1(-beta_e * omega_o)


@dataclass(frozen=True)
class EffectiveBath:
    """Effective oscillator bath produced by the engine (or set directly).

    kappa_e = 0.5*Gamma_e*(1 - exp(-beta_e*omega_o)) is stored and re-checked;
    it is negative exactly when beta_e < 0 (amplitude anti-damping).
    """

    omega_o: float
    Gamma_e: float
    beta_e: float
    kappa_e: float
    provenance: str = field(default="direct", compare=False)

    def __post_init__(self):
        if not self.omega_o > 0:
            raise InvariantViolation(f"omega_o must be > 0, got {self.omega_o}")
        if self.Gamma_e < 0:
            raise InvariantViolation(f"Gamma_e must be >= 0, got {self.Gamma_e}")
        expected = _kappa_from(self.Gamma_e, self.beta_e, self.omega_o)
        if expected != self.kappa_e:
            raise InvariantViolation(
                f"kappa_e={self.kappa_e!r} inconsistent with rates (expected {expected!r})"
            )

    @classmethod
    def from_rates(cls, Gamma_e: float, beta_e: float, omega_o: float,
                   provenance: str = "direct") -> "EffectiveBath":
        return cls(
            omega_o=omega_o,
            Gamma_e=Gamma_e,
            beta_e=beta_e,
            kappa_e=_kappa_from(Gamma_e, beta_e, omega_o),
            provenance=provenance,
        )

    @property
    def boltzmann_factor(self) -> float:
        """exp(-beta_e * omega_o): upward/downward rate ratio of the bath."""
        return math.exp(-self.beta_e * self.omega_o)

    @property
    def regime(self) -> str:
        if self.beta_e < 0:
            return "engine"
        if self.beta_e == 0:
            return "degenerate"
        return "ordinary"


def reduce(spec: EngineSpec) -> EffectiveBath:
    """Effective negative-temperature bath seen by the oscillator.

    Gamma_e = (2g)^2 (1-n_h)^2 (1-n_c) n_c / [Gamma_h(1-n_c) + Gamma_c(1-n_h)]
    beta_e  = (beta_h omega_h - beta_c omega_c) / (omega_h - omega_c)

    beta_e = 0 (degenerate regime: the balance point where the effective
    temperature diverges) is returned as-is and flagged via bath.regime.
    """
    if not spec.omega_h > spec.omega_c:
        raise InvalidFrequencies(f"need omega_h > omega_c, got {spec.omega_h} <= {spec.omega_c}")
    omega_o = spec.omega_h - spec.omega_c
    n_h, n_c = spec.n_h, spec.n_c
    Gamma_e = (
        (2.0 * spec.g) ** 2
        * (1.0 - n_h) ** 2 * (1.0 - n_c) * n_c
        / (spec.Gamma_h * (1.0 - n_c) + spec.Gamma_c * (1.0 - n_h))
    )
    beta_e = (spec.beta_h * spec.omega_h - spec.beta_c * spec.omega_c) / omega_o
    return EffectiveBath.from_rates(Gamma_e, beta_e, omega_o, provenance="reduced")


def detailed_balance_ratio(spec: EngineSpec) -> float:
    """p_10/p_01; equals exp(-beta_e * omega_o) of the reduced bath."""
    return spec.p_10 / spec.p_01


def weak_coupling_margin(spec: EngineSpec, occupation: float) -> float:
    """Ratio g*sqrt(<n>+1) / min_l Gamma_l (1 + exp(-beta_l omega_l)).

    The effective-bath reduction is trusted while this stays well below 1;
    the default guidance threshold is WEAK_COUPLING_RATIO.
    """
    if occupation < 0:
        raise InvariantViolation(f"occupation must be >= 0, got {occupation}")
    denom = min(
        spec.Gamma_h * (1.0 + math.exp(-spec.beta_h * spec.omega_h)),
        spec.Gamma_c * (1.0 + math.exp(-spec.beta_c * spec.omega_c)),
    )
    return spec.g * math.sqrt(occupation + 1.0) / denom
