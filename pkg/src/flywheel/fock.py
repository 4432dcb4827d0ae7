"""Truncated Fock-space linear algebra.

Dense complex matrices on a finite ladder of oscillator levels: ladder and
quadrature operators, displacement, thermal and displaced-thermal states,
expectation values and trace distance.  Truncation is explicit and checked:
every constructed state must leave the top two levels essentially empty,
so that a runaway simulation is detected rather than silently saturated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import (
    DimensionMismatch,
    DisplacementTooLargeForTruncation,
    InvariantViolation,
    TruncationInsufficient,
)

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
EIGENVALUE_TOL = -1e-9
TOP_LEVEL_TOL = 1e-10
GIBBS_TAIL_TOL = 1e-12
DISPLACEMENT_UNITARITY_TOL = 1e-8


@dataclass(frozen=True)
class FockSpace:
    """Truncated oscillator Hilbert space with levels 0..dim-1."""

    dim: int

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 2:
            raise InvariantViolation(f"FockSpace needs integer dim >= 2, got {self.dim!r}")


def annihilation(space: FockSpace) -> np.ndarray:
    """Lowering operator: <n-1|c|n> = sqrt(n)."""
    d = space.dim
    return np.diag(np.sqrt(np.arange(1.0, d)), k=1).astype(complex)


def creation(space: FockSpace) -> np.ndarray:
    """Raising operator, adjoint of :func:`annihilation`."""
    return annihilation(space).conj().T


def number_operator(space: FockSpace) -> np.ndarray:
    """Diagonal occupation operator n = c^dag c."""
    return np.diag(np.arange(space.dim, dtype=float)).astype(complex)


def identity(space: FockSpace) -> np.ndarray:
    return np.eye(space.dim, dtype=complex)


def quadratures(space: FockSpace) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian pair (x, y) with x = (c^dag + c)/sqrt(2), y = i(c^dag - c)/sqrt(2)."""
    c = annihilation(space)
    cd = c.conj().T
    x = (cd + c) / np.sqrt(2.0)
    y = 1j * (cd - c) / np.sqrt(2.0)
    return x, y


def displacement(space: FockSpace, alpha: complex) -> np.ndarray:
    """Displacement unitary exp(alpha c^dag - alpha* c) on the truncated space.

    Guarded by |alpha|^2 < dim/4 so the rotated support stays far from the
    truncation edge; unitarity is then good to ~1e-8 on the lower half of
    the ladder (the breach always concentrates in the top levels).
    """
    d = space.dim
    alpha = complex(alpha)
    if abs(alpha) ** 2 >= d / 4.0:
        raise DisplacementTooLargeForTruncation(
            f"|alpha|^2 = {abs(alpha) ** 2:.4g} >= dim/4 = {d / 4.0:.4g}"
        )
    c = annihilation(space)
    gen = alpha * c.conj().T - np.conj(alpha) * c
    dop = expm(gen)
    if abs(alpha) > 0:
        k = d // 2
        defect = dop.conj().T @ dop - np.eye(d)
        err = np.linalg.norm(defect[:k, :k])
        if err > DISPLACEMENT_UNITARITY_TOL:
            raise DisplacementTooLargeForTruncation(
                f"displacement unitarity defect {err:.3g} on low levels (dim={d}, alpha={alpha})"
            )
    return dop


def thermal_populations(space: FockSpace, beta_omega: float) -> np.ndarray:
    """Normalized Gibbs weights exp(-beta*omega*n) on the retained levels.

    Raises TruncationInsufficient when the discarded tail of the full
    geometric distribution exceeds GIBBS_TAIL_TOL.
    """
    if not beta_omega > 0:
        raise InvariantViolation(f"beta_omega must be > 0, got {beta_omega}")
    d = space.dim
    q = np.exp(-beta_omega)
    tail = q**d  # mass above the top retained level of the untruncated Gibbs state
    if tail > GIBBS_TAIL_TOL:
        raise TruncationInsufficient(
            f"Gibbs tail {tail:.3g} > {GIBBS_TAIL_TOL:.0e} at beta_omega={beta_omega}, dim={d}"
        )
    p = q ** np.arange(d)
    return p / p.sum()


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix on a truncated Fock (or composite) space."""

    mat: np.ndarray
    space: FockSpace

    @classmethod
    def from_matrix(cls, mat: np.ndarray, space: FockSpace, eig_tol: float = EIGENVALUE_TOL):
        rho = cls(np.asarray(mat, dtype=complex), space)
        rho.validate(eig_tol=eig_tol)
        return rho

    def validate(self, eig_tol: float = EIGENVALUE_TOL):
        m = self.mat
        if m.shape != (self.space.dim, self.space.dim):
            raise DimensionMismatch(f"matrix shape {m.shape} vs space dim {self.space.dim}")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > HERMITICITY_TOL:
            raise InvariantViolation(f"not Hermitian: max |A - A^dag| = {herm:.3g}")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvariantViolation(f"trace {tr!r} deviates from 1 beyond {TRACE_TOL:.0e}")
        lo = np.linalg.eigvalsh(m)[0]
        if lo < eig_tol:
            raise InvariantViolation(f"min eigenvalue {lo:.3g} below tolerance {eig_tol:.0e}")
        return self

    def top_level_population(self) -> float:
        """Total population of the two highest retained levels."""
        d = self.space.dim
        return float(self.mat[d - 1, d - 1].real + self.mat[d - 2, d - 2].real)

    def require_truncation_ok(self, tol: float = TOP_LEVEL_TOL):
        pop = self.top_level_population()
        if pop > tol:
            raise TruncationInsufficient(
                f"top-two-level population {pop:.3g} > {tol:.0e} (dim={self.space.dim})"
            )
        return self

    def expect(self, op: np.ndarray) -> complex:
        return expectation(self, op)


def displaced_thermal(space: FockSpace, beta_omega: float, alpha: complex = 0.0) -> DensityMatrix:
    """Thermal state at inverse temperature beta (in units of the level
    spacing) conjugated by a displacement of amplitude alpha.

    The result is normalized and satisfies <c> = alpha and
    <c^dag c> = 1/(exp(beta*omega) - 1) + |alpha|^2 up to truncation error.
    """
    alpha = complex(alpha)
    if abs(alpha) ** 2 >= space.dim / 4.0:
        raise DisplacementTooLargeForTruncation(
            f"|alpha|^2 = {abs(alpha) ** 2:.4g} >= dim/4 = {space.dim / 4.0:.4g}"
        )
    p = thermal_populations(space, beta_omega)
    mat = np.diag(p).astype(complex)
    if alpha != 0:
        dop = displacement(space, alpha)
        mat = dop @ mat @ dop.conj().T
        mat = 0.5 * (mat + mat.conj().T)
        mat = mat / np.trace(mat).real
    rho = DensityMatrix.from_matrix(mat, space)
    rho.require_truncation_ok()
    return rho


def vacuum_state(space: FockSpace) -> DensityMatrix:
    mat = np.zeros((space.dim, space.dim), dtype=complex)
    mat[0, 0] = 1.0
    return DensityMatrix(mat, space)


def _as_matrix(state) -> np.ndarray:
    return state.mat if isinstance(state, DensityMatrix) else np.asarray(state)


def expectation(rho, op: np.ndarray) -> complex:
    """tr(rho op)."""
    m = _as_matrix(rho)
    if m.shape != op.shape:
        raise DimensionMismatch(f"state {m.shape} vs operator {op.shape}")
    return complex(np.einsum("ij,ji->", m, op))


def trace_distance(a, b) -> float:
    """(1/2) ||a - b||_1 via the eigenvalues of the Hermitian difference."""
    ma, mb = _as_matrix(a), _as_matrix(b)
    if ma.shape != mb.shape:
        raise DimensionMismatch(f"{ma.shape} vs {mb.shape}")
    diff = ma - mb
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))
