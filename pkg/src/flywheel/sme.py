"""Conditional stochastic master equation with monitoring and feedback.

Ito--Euler integration of the conditional state under simultaneous weak
measurement of both quadratures plus signal-proportional feedback, in the
interaction picture.  One step applies

    sigma' = sigma + dt * L_det(sigma)
             + sqrt(gamma_m)/2 * ({dc, sigma} dxi* + h.c.)          (innovation)
             - kappa_f/sqrt(gamma_m) * [c^dag dxi - c dxi*, sigma]  (feedback noise)

with dc = c - <c>_sigma and L_det the composed generator (engine bath +
monitoring + feedback dissipator + driving) in its two-rate normal form,
followed by trace renormalization.  The feedback unitary is implemented as
the already-expanded stochastic equation: the Ito cross term between the
feedback Hamiltonian and the measurement innovation supplies the +/-kappa_f
dissipator pieces and cancels the naive deterministic feedback drift, which
a unit test verifies against literal conjugation.

Noise streams are counter-based: trajectory k of a run draws from
Philox(key=(master seed, k)) through a Box-Muller transform, so every
trajectory is reproducible independently of chunking, batching and worker
count.

The per-step state update is a fused numba kernel: every operator involved
is banded on the Fock ladder, so the update is O(dim^2) shifts and scales
rather than dense matrix products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .engine import ControlSpec, EffectiveBath
from .errors import (
    DimensionMismatch,
    FeedbackWithoutMeasurement,
    InsufficientTrajectories,
    InvariantViolation,
    NonPositiveEigenvalueBeyondTolerance,
    StepTooLarge,
)
from .fock import TOP_LEVEL_TOL, DensityMatrix, FockSpace
from .lindblad import GuardEvent, composed_rates

CONDITIONAL_EIG_TOL = -1e-6
EULER_STABILITY_LIMIT = 0.5
BATCH_SIZE = 128  # fixed batch granularity so reductions are worker-count independent


# --------------------------------------------------------------------------
# noise
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseIncrement:
    """One complex Wiener increment: dxi = (dxi_x + i dxi_y)/sqrt(2)."""

    dxi_x: float
    dxi_y: float

    @property
    def dxi(self) -> complex:
        return (self.dxi_x + 1j * self.dxi_y) / math.sqrt(2.0)


def _trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    key = np.array([np.uint64(master_seed), np.uint64(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _gaussian_pairs(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Box-Muller transform of uniform pairs; deterministic, no rejection."""
    r = np.sqrt(-2.0 * np.log1p(-u[..., 0]))
    th = 2.0 * np.pi * u[..., 1]
    return r * np.cos(th), r * np.sin(th)


def _draw_dxi(rng: np.random.Generator, n: int, dt: float) -> np.ndarray:
    """n complex increments with M dxi = 0, M|dxi|^2 = dt."""
    z0, z1 = _gaussian_pairs(rng.random((n, 2)))
    return np.sqrt(dt / 2.0) * (z0 + 1j * z1)


def noise_stream(master_seed: int, index: int, n_steps: int, dt: float) -> np.ndarray:
    """Full complex-increment stream of one trajectory, identical however the
    draws are chunked during integration."""
    return _draw_dxi(_trajectory_rng(master_seed, index), n_steps, dt)


# --------------------------------------------------------------------------
# fused Euler step kernel
# --------------------------------------------------------------------------

@njit(cache=True)
def _run_steps(sig, active, sq, Kdiag, gd, gu, eps_d, dt, sgh, fbsg, dxi,
               c_pre, c_post, n_post, top2_max, mindiag_min, drift_sum):
    """Advance every active slice of sig by dxi.shape[0] Euler steps in place.

    K = 0.5*gd*N + 0.5*gu*M + eps_d*(c^dag - c) is tridiagonal (M is the
    truncated c c^dag, whose top diagonal entry is zero); the update reads
    the old state only and writes the Hermitian mirror, so states stay
    exactly Hermitian with a real diagonal.
    """
    n_sub, N = dxi.shape
    d = sig.shape[1]
    w = np.empty((d, d), np.complex128)
    s2 = np.empty((d, d), np.complex128)
    for n in range(N):
        if active[n] == 0:
            continue
        s = sig[n]
        top2m = 0.0
        mind = 1.0
        drift = 0.0
        for k in range(n_sub):
            cexp = 0.0 + 0.0j
            for i in range(d - 1):
                cexp += sq[i] * s[i + 1, i]
            if k == n_sub - 1:
                c_pre[n] = cexp
            dxc = dxi[k, n].conjugate()
            for i in range(d):
                for j in range(d):
                    a = sq[i] * s[i + 1, j] if i < d - 1 else 0.0j
                    b = s[i, j - 1] * sq[j - 1] if j > 0 else 0.0j
                    ks = Kdiag[i] * s[i, j]
                    if i < d - 1:
                        ks -= eps_d * sq[i] * s[i + 1, j]
                    if i > 0:
                        ks += eps_d * sq[i - 1] * s[i - 1, j]
                    w[i, j] = -dt * ks + dxc * (sgh * (a + b - 2.0 * cexp * s[i, j])
                                                + fbsg * (a - b))
            tr = 0.0
            for i in range(d):
                xii = sq[i] * sq[i] * s[i + 1, i + 1].real if i < d - 1 else 0.0
                yii = sq[i - 1] * sq[i - 1] * s[i - 1, i - 1].real if i > 0 else 0.0
                vii = s[i, i].real + dt * (gd * xii + gu * yii) + 2.0 * w[i, i].real
                s2[i, i] = complex(vii, 0.0)
                tr += vii
                for j in range(i + 1, d):
                    x = sq[i] * sq[j] * s[i + 1, j + 1] if (i < d - 1 and j < d - 1) else 0.0j
                    y = sq[i - 1] * sq[j - 1] * s[i - 1, j - 1] if (i > 0 and j > 0) else 0.0j
                    v = s[i, j] + dt * (gd * x + gu * y) + w[i, j] + w[j, i].conjugate()
                    s2[i, j] = v
                    s2[j, i] = v.conjugate()
            drift += abs(tr - 1.0)
            inv = 1.0 / tr
            dmin = 1.0
            for i in range(d):
                for j in range(d):
                    s[i, j] = s2[i, j] * inv
                di = s[i, i].real
                if di < dmin:
                    dmin = di
            t2 = s[d - 1, d - 1].real + s[d - 2, d - 2].real
            if t2 > top2m:
                top2m = t2
            if dmin < mind:
                mind = dmin
        cexp = 0.0 + 0.0j
        nexp = 0.0
        for i in range(d - 1):
            cexp += sq[i] * s[i + 1, i]
        for i in range(d):
            nexp += i * s[i, i].real
        c_post[n] = cexp
        n_post[n] = nexp
        top2_max[n] = top2m
        mindiag_min[n] = mind
        drift_sum[n] += drift


# --------------------------------------------------------------------------
# configuration and records
# --------------------------------------------------------------------------

def suggested_dt(bath: EffectiveBath, control: ControlSpec, dim: int,
                 safety: float = 0.05) -> float:
    """Step from the stability rule: safety over the fastest generator scale."""
    down, up = composed_rates(bath, control)
    det_scale = (down + up) * dim + 4.0 * control.eps_d * math.sqrt(dim)
    noise_scale = control.gamma_m * dim
    if control.gamma_m > 0:
        noise_scale += (control.kappa_f**2 / control.gamma_m) * dim
    return safety / max(det_scale, noise_scale, 1e-12)


@dataclass(frozen=True)
class TrajectoryConfig:
    """Everything one conditional realization needs."""

    bath: EffectiveBath
    control: ControlSpec
    space: FockSpace
    dt: float
    t_end: float
    seed: int
    record_stride: int = 10
    guard_top_tol: float = TOP_LEVEL_TOL
    eig_tol: float = CONDITIONAL_EIG_TOL

    def __post_init__(self):
        if not self.dt > 0 or not self.t_end > 0:
            raise InvariantViolation("dt and t_end must be > 0")
        if self.record_stride < 1:
            raise InvariantViolation("record_stride must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise InvariantViolation("seed must fit in 64 bits")
        if self.control.kappa_f > 0 and self.control.gamma_m <= 0:
            raise FeedbackWithoutMeasurement(
                f"kappa_f={self.control.kappa_f} with gamma_m={self.control.gamma_m}"
            )
        down, up = composed_rates(self.bath, self.control)
        scale = (down + up) * self.space.dim + 4.0 * self.control.eps_d * math.sqrt(self.space.dim)
        if self.dt * scale > EULER_STABILITY_LIMIT:
            raise StepTooLarge(
                f"dt={self.dt} exceeds Euler stability bound "
                f"{EULER_STABILITY_LIMIT / scale:.3g}"
            )

    @property
    def n_steps(self) -> int:
        chunks = max(1, int(math.ceil(self.t_end / (self.dt * self.record_stride) - 1e-9)))
        return chunks * self.record_stride

    @property
    def record_times(self) -> np.ndarray:
        stride = self.record_stride
        return self.dt * stride * np.arange(1, self.n_steps // stride + 1)


@dataclass
class TrajectoryRecord:
    """One conditional realization sampled at the record stride.

    signals[k] is the measurement signal generated during the step landing on
    times[k]; signal_base_c[k] is the conditional amplitude entering it, so
    (signals - signal_base_c) * sqrt(gamma_m) * dt recovers the raw noise
    increment exactly.
    """

    seed: int
    stream_index: int
    times: np.ndarray
    c_sigma: np.ndarray
    n_sigma: np.ndarray
    signals: np.ndarray
    signal_base_c: np.ndarray
    final_state: DensityMatrix | None
    guard_event: GuardEvent | None
    trace_drift_total: float


def _coefficients(cfg: TrajectoryConfig):
    d = cfg.space.dim
    down, up = composed_rates(cfg.bath, cfg.control)
    sq = np.sqrt(np.arange(1.0, d))
    nvec = np.arange(d, dtype=float)
    mvec = np.concatenate([np.arange(1.0, d), [0.0]])  # truncated c c^dag diagonal
    Kdiag = 0.5 * down * nvec + 0.5 * up * mvec
    gamma = cfg.control.gamma_m
    sgh = 0.5 * math.sqrt(gamma)
    fbsg = cfg.control.kappa_f / math.sqrt(gamma) if gamma > 0 else 0.0
    return down, up, sq, Kdiag, sgh, fbsg


def step(sigma: DensityMatrix, cfg: TrajectoryConfig, noise: NoiseIncrement):
    """Single Ito-Euler step; returns (new state, complex signal or None).

    The new state is validated in full: Hermiticity, trace, spectrum at the
    conditional tolerance, truncation guard.  Without monitoring there is no
    signal and the step is the plain deterministic Euler step.
    """
    if sigma.space.dim != cfg.space.dim:
        raise DimensionMismatch(f"state dim {sigma.space.dim} vs config dim {cfg.space.dim}")
    down, up, sq, Kdiag, sgh, fbsg = _coefficients(cfg)
    sig = sigma.mat[np.newaxis].astype(complex).copy()
    active = np.ones(1, dtype=np.uint8)
    dxi = np.array([[noise.dxi]], dtype=complex)
    c_pre = np.zeros(1, complex)
    c_post = np.zeros(1, complex)
    n_post = np.zeros(1)
    top2 = np.zeros(1)
    mind = np.zeros(1)
    drift = np.zeros(1)
    _run_steps(sig, active, sq, Kdiag, down, up, cfg.control.eps_d, cfg.dt, sgh, fbsg,
               dxi, c_pre, c_post, n_post, top2, mind, drift)
    out = DensityMatrix(sig[0], cfg.space)
    lo = float(np.linalg.eigvalsh(out.mat)[0])
    if lo < cfg.eig_tol:
        raise NonPositiveEigenvalueBeyondTolerance(
            f"min eigenvalue {lo:.3g} below {cfg.eig_tol:.0e} after step"
        )
    out.validate(eig_tol=cfg.eig_tol)
    out.require_truncation_ok(cfg.guard_top_tol)
    signal = None
    if cfg.control.gamma_m > 0:
        signal = complex(c_pre[0]) + noise.dxi / (math.sqrt(cfg.control.gamma_m) * cfg.dt)
    return out, signal


def run_trajectory(cfg: TrajectoryConfig, rho0: DensityMatrix,
                   stream_index: int = 0,
                   keep_final_state: bool = True) -> TrajectoryRecord:
    """Integrate one conditional realization, recording every record_stride
    steps; halts with a guard event when the truncation guard trips.

    A negative eigenvalue beyond tolerance (checked at record points) raises.
    stream_index selects the noise stream within the master seed; ensemble
    member k of run_ensemble is exactly stream_index=k.
    """
    batch = _run_batch(cfg, rho0, [stream_index], raise_on_eig=True,
                       keep_states=keep_final_state)
    return batch.to_record(0, cfg)


# --------------------------------------------------------------------------
# batched integration (shared by single trajectories and ensembles)
# --------------------------------------------------------------------------

@dataclass
class _BatchResult:
    indices: list
    times: np.ndarray
    c: np.ndarray            # (N, n_rec) conditional amplitude at each record
    n: np.ndarray            # (N, n_rec)
    signals: np.ndarray      # (N, n_rec) signal of the step landing on the record
    base_c: np.ndarray       # (N, n_rec) amplitude entering that step
    drift: np.ndarray        # (N,)
    guard: list              # GuardEvent | None per slice
    final_states: np.ndarray | None
    state_sums: np.ndarray | None   # (n_ckpt, d, d) sums over surviving slices
    state_counts: np.ndarray | None

    def to_record(self, i: int, cfg: TrajectoryConfig) -> TrajectoryRecord:
        valid = ~np.isnan(self.n[i])
        final = None
        if self.final_states is not None and self.guard[i] is None:
            final = DensityMatrix.from_matrix(self.final_states[i], cfg.space,
                                              eig_tol=cfg.eig_tol)
        return TrajectoryRecord(
            seed=cfg.seed,
            stream_index=self.indices[i],
            times=self.times[valid],
            c_sigma=self.c[i, valid],
            n_sigma=self.n[i, valid],
            signals=self.signals[i, valid],
            signal_base_c=self.base_c[i, valid],
            final_state=final,
            guard_event=self.guard[i],
            trace_drift_total=float(self.drift[i]),
        )


def _run_batch(cfg: TrajectoryConfig, rho0: DensityMatrix, indices,
               raise_on_eig: bool = False, keep_states: bool = False,
               state_checkpoints=None) -> _BatchResult:
    """Evolve len(indices) trajectories in lockstep; per-trajectory noise
    comes from (cfg.seed, index) streams, so results do not depend on how
    trajectories are grouped into batches."""
    if rho0.space.dim != cfg.space.dim:
        raise DimensionMismatch(f"state dim {rho0.space.dim} vs config dim {cfg.space.dim}")
    down, up, sq, Kdiag, sgh, fbsg = _coefficients(cfg)
    N = len(indices)
    d = cfg.space.dim
    stride = cfg.record_stride
    n_rec = cfg.n_steps // stride
    times = cfg.record_times
    sgamma = math.sqrt(cfg.control.gamma_m) if cfg.control.gamma_m > 0 else None

    sig = np.broadcast_to(rho0.mat, (N, d, d)).astype(complex).copy()
    active = np.ones(N, dtype=np.uint8)
    rngs = [_trajectory_rng(cfg.seed, idx) for idx in indices]
    guard: list = [None] * N

    c_rec = np.full((N, n_rec), np.nan, dtype=complex)
    n_arr = np.full((N, n_rec), np.nan)
    sig_rec = np.full((N, n_rec), np.nan, dtype=complex)
    base_rec = np.full((N, n_rec), np.nan, dtype=complex)
    drift = np.zeros(N)
    c_pre = np.zeros(N, complex)
    c_post = np.zeros(N, complex)
    n_post = np.zeros(N)
    top2 = np.zeros(N)
    mind = np.zeros(N)

    ckpts = sorted(state_checkpoints) if state_checkpoints else []
    if ckpts and (ckpts[0] < 0 or ckpts[-1] >= n_rec):
        raise InvariantViolation(f"state checkpoints {ckpts} outside record range 0..{n_rec - 1}")
    state_sums = np.zeros((len(ckpts), d, d), dtype=complex) if ckpts else None
    state_counts = np.zeros(len(ckpts), dtype=np.int64) if ckpts else None

    for r in range(n_rec):
        dxi = np.empty((stride, N), dtype=complex)
        for i, rng in enumerate(rngs):
            dxi[:, i] = _draw_dxi(rng, stride, cfg.dt)
        _run_steps(sig, active, sq, Kdiag, down, up, cfg.control.eps_d, cfg.dt,
                   sgh, fbsg, dxi, c_pre, c_post, n_post, top2, mind, drift)
        t_here = float(times[r])
        for i in range(N):
            if active[i] and top2[i] > cfg.guard_top_tol:
                guard[i] = GuardEvent("truncation", t_here, float(top2[i]))
                active[i] = 0
        live = np.nonzero(active)[0]
        if live.size:
            lows = np.linalg.eigvalsh(sig[live])[:, 0]
            for j, i in enumerate(live):
                if lows[j] < cfg.eig_tol:
                    if raise_on_eig:
                        raise NonPositiveEigenvalueBeyondTolerance(
                            f"stream {indices[i]}: min eigenvalue {lows[j]:.3g} "
                            f"at t={t_here:.4g}"
                        )
                    guard[i] = GuardEvent("negative_eigenvalue", t_here, float(lows[j]))
                    active[i] = 0
        for i in range(N):
            if not active[i]:
                continue
            c_rec[i, r] = c_post[i]
            n_arr[i, r] = n_post[i]
            base_rec[i, r] = c_pre[i]
            if sgamma is not None:
                sig_rec[i, r] = c_pre[i] + dxi[-1, i] / (sgamma * cfg.dt)
        if ckpts and r in ckpts:
            j = ckpts.index(r)
            mask = active.astype(bool)
            if mask.any():
                state_sums[j] = sig[mask].sum(axis=0)
            state_counts[j] = int(mask.sum())

    return _BatchResult(
        indices=list(indices), times=times, c=c_rec, n=n_arr, signals=sig_rec,
        base_c=base_rec, drift=drift, guard=guard,
        final_states=sig if keep_states else None,
        state_sums=state_sums, state_counts=state_counts,
    )


# --------------------------------------------------------------------------
# ensembles
# --------------------------------------------------------------------------

@dataclass
class EnsembleSummary:
    """Per-record moments of every trajectory plus derived ensemble statistics.

    Arrays are stacked in trajectory-index order and batch boundaries are
    fixed (BATCH_SIZE), so every statistic is independent of the worker count
    used to produce it.
    """

    config: TrajectoryConfig
    n_traj: int
    times: np.ndarray
    traj_c: np.ndarray        # (n_traj, n_rec) complex <c>_sigma
    traj_n: np.ndarray        # (n_traj, n_rec) <c^dag c>_sigma
    guard_events: tuple
    trace_drift: np.ndarray
    state_checkpoint_indices: tuple = ()
    mean_states: np.ndarray | None = None   # (n_ckpt, d, d)
    state_counts: np.ndarray | None = None

    @property
    def traj_abs_c_sq(self) -> np.ndarray:
        return np.abs(self.traj_c) ** 2

    def _stats(self, arr):
        valid = ~np.isnan(arr.real)
        counts = valid.sum(axis=0)
        if np.any(counts < 1):
            raise InvariantViolation("a record time has no surviving trajectories")
        mean = np.nansum(arr, axis=0) / counts
        if self.n_traj == 1:
            return mean, np.full(arr.shape[1], np.nan)
        if np.iscomplexobj(arr):
            var = np.nansum(np.abs(arr - mean) ** 2, axis=0) / np.maximum(counts - 1, 1)
        else:
            var = np.nansum((arr - mean) ** 2, axis=0) / np.maximum(counts - 1, 1)
        return mean, np.sqrt(var / counts)

    def mean_c(self):
        return self._stats(self.traj_c)

    def mean_n(self):
        return self._stats(self.traj_n)

    def mean_abs_c_sq(self):
        return self._stats(self.traj_abs_c_sq)

    def stationary_abs_c_sq(self, window=(0.5, 1.0)) -> np.ndarray:
        """Per-trajectory time averages of |<c>_sigma|^2 over a fractional
        window of the horizon; NaN for guarded trajectories."""
        t0 = window[0] * self.times[-1]
        t1 = window[1] * self.times[-1]
        sel = (self.times >= t0) & (self.times <= t1)
        if not sel.any():
            raise InvariantViolation("empty stationary window")
        return self.traj_abs_c_sq[:, sel].mean(axis=1)

    def payload_dict(self, checkpoints=None) -> dict:
        """Compact, JSON-ready summary; identical for reruns with the same
        (config, seed) whatever the worker count."""
        if checkpoints is None:
            n_rec = len(self.times)
            k = max(1, n_rec // 5)
            checkpoints = list(range(k - 1, n_rec, k))
        mc, se_c = self.mean_c()
        mn, se_n = self.mean_n()
        ma, se_a = self.mean_abs_c_sq()
        rows = []
        for idx in checkpoints:
            rows.append({
                "time": float(self.times[idx]),
                "mean_c_re": float(mc[idx].real),
                "mean_c_im": float(mc[idx].imag),
                "se_c": float(se_c[idx]) if not np.isnan(se_c[idx]) else None,
                "mean_n": float(mn[idx]),
                "se_n": float(se_n[idx]) if not np.isnan(se_n[idx]) else None,
                "mean_abs_c_sq": float(ma[idx]),
                "se_abs_c_sq": float(se_a[idx]) if not np.isnan(se_a[idx]) else None,
            })
        return {
            "n_traj": self.n_traj,
            "seed": int(self.config.seed),
            "dt": self.config.dt,
            "checkpoints": rows,
            "n_guard_events": len(self.guard_events),
            "guard_events": [
                {"trajectory": int(i), "kind": e.kind, "time": e.time}
                for i, e in self.guard_events
            ],
            "max_trace_drift": float(np.max(self.trace_drift)),
        }


def _ensemble_batch(args):
    cfg, rho0_mat, dim, indices, ckpts = args
    rho0 = DensityMatrix(np.asarray(rho0_mat), FockSpace(dim))
    return _run_batch(cfg, rho0, indices, state_checkpoints=ckpts)


def run_ensemble(cfg: TrajectoryConfig, rho0: DensityMatrix, n_traj: int,
                 workers: int = 1, state_checkpoints=None) -> EnsembleSummary:
    """Run n_traj independent trajectories on noise streams
    (cfg.seed, 0..n_traj-1); guard events are reported, never fatal.

    Work is split into fixed-size batches distributed over workers; the
    per-trajectory floats and the reduction order are the same for every
    worker count, so summaries are bit-reproducible across workers in
    {1, 2, 4, ...}.
    """
    if n_traj < 1:
        raise InsufficientTrajectories("n_traj must be >= 1")
    batches = []
    for lo in range(0, n_traj, BATCH_SIZE):
        idx = list(range(lo, min(lo + BATCH_SIZE, n_traj)))
        batches.append((cfg, rho0.mat, cfg.space.dim, idx, state_checkpoints))
    if workers > 1 and len(batches) > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(processes=workers) as pool:
            results = pool.map(_ensemble_batch, batches)
    else:
        results = [_ensemble_batch(b) for b in batches]

    times = results[0].times
    traj_c = np.concatenate([r.c for r in results], axis=0)
    traj_n = np.concatenate([r.n for r in results], axis=0)
    drift = np.concatenate([r.drift for r in results])
    guards = []
    offset = 0
    for r in results:
        for i, ev in enumerate(r.guard):
            if ev is not None:
                guards.append((offset + i, ev))
        offset += len(r.indices)

    mean_states = None
    counts = None
    if state_checkpoints:
        ck = sorted(state_checkpoints)
        sums = np.zeros((len(ck), cfg.space.dim, cfg.space.dim), dtype=complex)
        counts = np.zeros(len(ck), dtype=np.int64)
        for r in results:  # fixed batch order
            sums += r.state_sums
            counts += r.state_counts
        if np.any(counts == 0):
            raise InvariantViolation("a state checkpoint has no surviving trajectories")
        mean_states = sums / counts[:, None, None]

    return EnsembleSummary(
        config=cfg, n_traj=n_traj, times=times, traj_c=traj_c, traj_n=traj_n,
        guard_events=tuple(guards), trace_drift=drift,
        state_checkpoint_indices=tuple(sorted(state_checkpoints)) if state_checkpoints else (),
        mean_states=mean_states, state_counts=counts,
    )
