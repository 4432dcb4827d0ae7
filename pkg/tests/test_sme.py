import json
import math

import numpy as np
import pytest
from scipy.linalg import expm

from flywheel import fock
from flywheel.engine import ControlSpec, EffectiveBath
from flywheel.errors import FeedbackWithoutMeasurement, StepTooLarge
from flywheel.fock import FockSpace, displaced_thermal, vacuum_state
from flywheel.lindblad import compose_from_params, composed_rates, propagate_with_moments
from flywheel.sme import (
    NoiseIncrement,
    TrajectoryConfig,
    _draw_dxi,
    _trajectory_rng,
    noise_stream,
    run_ensemble,
    run_trajectory,
    step,
    suggested_dt,
)


@pytest.fixture(scope="module")
def small_cfg(desk_bath, desk_control):
    space = FockSpace(28)
    return TrajectoryConfig(bath=desk_bath, control=desk_control, space=space,
                            dt=0.01, t_end=8.0, seed=314159, record_stride=10)


def test_noise_increment_complex_form():
    inc = NoiseIncrement(0.3, -0.1)
    assert inc.dxi == pytest.approx((0.3 - 0.1j) / math.sqrt(2))


def test_noise_stream_statistics():
    dt = 0.004
    n = 60000
    s = noise_stream(2024, 0, n, dt)
    # M dxi = 0 and M|dxi|^2 = dt within the stated sampling bounds
    assert abs(s.mean()) < 4 * math.sqrt(dt / n)
    var = np.mean(np.abs(s) ** 2)
    assert abs(var - dt) < 5 * dt * math.sqrt(2 / n)
    # real and imaginary parts are independent N(0, dt/2) streams
    assert abs(np.mean(s.real * s.imag)) < 5 * dt * math.sqrt(2 / n)


def test_noise_stream_chunk_invariance():
    full = noise_stream(77, 5, 64, 0.02)
    rng = _trajectory_rng(77, 5)
    parts = np.concatenate([_draw_dxi(rng, k, 0.02) for k in (10, 30, 24)])
    assert np.array_equal(full, parts)


def test_step_without_monitoring_is_deterministic(desk_bath):
    control = ControlSpec(eps_d=0.02, gamma_m=0.0, kappa_f=0.0)
    space = FockSpace(24)
    cfg = TrajectoryConfig(bath=desk_bath, control=control, space=space,
                           dt=0.01, t_end=1.0, seed=1)
    sigma = displaced_thermal(space, 1.4, -0.5)
    out, signal = step(sigma, cfg, NoiseIncrement(0.7, -0.2))  # noise must be ignored
    assert signal is None
    gen = compose_from_params(desk_bath, control, space)
    euler = sigma.mat + cfg.dt * gen.apply(sigma.mat)
    euler /= np.trace(euler).real
    assert np.max(np.abs(out.mat - euler)) < 1e-15


def test_step_zero_noise_matches_euler(desk_bath, desk_control, small_cfg):
    sigma = displaced_thermal(small_cfg.space, 1.4, -0.5)
    out, signal = step(sigma, small_cfg, NoiseIncrement(0.0, 0.0))
    gen = compose_from_params(desk_bath, desk_control, small_cfg.space)
    euler = sigma.mat + small_cfg.dt * gen.apply(sigma.mat)
    euler /= np.trace(euler).real
    assert np.max(np.abs(out.mat - euler)) < 1e-15
    c0 = fock.expectation(sigma, fock.annihilation(small_cfg.space))
    assert signal == pytest.approx(c0, rel=1e-12)


def test_step_monte_carlo_mean_matches_unconditional(desk_bath, desk_control, small_cfg):
    sigma = displaced_thermal(small_cfg.space, 1.4, -0.5)
    rng = np.random.default_rng(4242)
    n_draws = 2000
    acc = np.zeros_like(sigma.mat)
    acc2 = np.zeros(sigma.mat.shape)
    for _ in range(n_draws):
        z = rng.normal(size=2) * math.sqrt(small_cfg.dt)
        out, _ = step(sigma, small_cfg, NoiseIncrement(z[0], z[1]))
        acc += out.mat
        acc2 += np.abs(out.mat) ** 2
    mean = acc / n_draws
    se = np.sqrt(np.maximum(acc2 / n_draws - np.abs(mean) ** 2, 0.0) / n_draws)
    gen = compose_from_params(desk_bath, desk_control, small_cfg.space)
    euler = sigma.mat + small_cfg.dt * gen.apply(sigma.mat)
    euler /= np.trace(euler).real
    dev = np.abs(mean - euler)
    assert np.all(dev <= 3.0 * se + 1e-14)


def _literal_conjugation_step(sigma_mat, cfg, dxi):
    """Monitored (feedback-free) increment followed by exact conjugation with
    the feedback unitary built from the one-step signal."""
    control = cfg.control
    space = cfg.space
    c = fock.annihilation(space)
    cd = c.conj().T
    nop = cd @ c
    mop = c @ cd
    no_fb = ControlSpec(eps_d=control.eps_d, gamma_m=control.gamma_m, kappa_f=0.0)
    down, up = composed_rates(cfg.bath, no_fb)
    ldet = (down * (c @ sigma_mat @ cd - 0.5 * (nop @ sigma_mat + sigma_mat @ nop))
            + up * (cd @ sigma_mat @ c - 0.5 * (mop @ sigma_mat + sigma_mat @ mop))
            - control.eps_d * ((cd - c) @ sigma_mat - sigma_mat @ (cd - c)))
    cexp = np.trace(c @ sigma_mat)
    dc = c - cexp * np.eye(space.dim)
    inno = math.sqrt(control.gamma_m) * 0.5 * (
        (dc @ sigma_mat + sigma_mat @ dc) * np.conj(dxi)
        + (dc.conj().T @ sigma_mat + sigma_mat @ dc.conj().T) * dxi)
    dsig = ldet * cfg.dt + inno
    cbar = cexp + dxi / (math.sqrt(control.gamma_m) * cfg.dt)
    h_f = -1j * control.kappa_f * (cbar * cd - np.conj(cbar) * c)
    u = expm(-1j * h_f * cfg.dt)
    out = u @ (sigma_mat + dsig) @ u.conj().T
    return out / np.trace(out).real


def test_expanded_step_matches_literal_conjugation(desk_bath, desk_control):
    """The implemented (pre-expanded) SME step agrees with literally
    conjugating the monitored step by the feedback unitary to better than
    O(dt^{3/2}); averaging the noise phase over four quadrants isolates the
    expansion error from the (dxi)^2 sampling terms."""
    space = FockSpace(26)
    sigma = displaced_thermal(space, 1.5, -0.7)
    diffs = []
    dts = (0.02, 0.005, 0.00125)
    for dt in dts:
        cfg = TrajectoryConfig(bath=desk_bath, control=desk_control, space=space,
                               dt=dt, t_end=1.0, seed=1)
        expanded = np.zeros_like(sigma.mat)
        literal = np.zeros_like(sigma.mat)
        for phase in range(4):
            dxi = math.sqrt(dt) * np.exp(1j * math.pi * phase / 2.0)
            inc = NoiseIncrement(math.sqrt(2) * dxi.real, math.sqrt(2) * dxi.imag)
            out, _ = step(sigma, cfg, inc)
            expanded += out.mat / 4.0
            literal += _literal_conjugation_step(sigma.mat.copy(), cfg, dxi) / 4.0
        diffs.append(np.max(np.abs(expanded - literal)))
    # successive dt/4 reductions must shrink the gap at least like dt^{3/2}
    assert diffs[0] / diffs[1] > 5.6
    assert diffs[1] / diffs[2] > 5.6


def test_trajectory_determinism(small_cfg):
    rho0 = displaced_thermal(small_cfg.space, 1.4, -0.5)
    r1 = run_trajectory(small_cfg, rho0)
    r2 = run_trajectory(small_cfg, rho0)
    assert np.array_equal(r1.c_sigma, r2.c_sigma)
    assert np.array_equal(r1.n_sigma, r2.n_sigma)
    assert np.array_equal(r1.signals, r2.signals)
    assert np.array_equal(r1.final_state.mat, r2.final_state.mat)


def test_signal_bookkeeping_identity(small_cfg):
    """(signal - base amplitude) * sqrt(gamma_m) * dt recovers the raw noise."""
    rho0 = displaced_thermal(small_cfg.space, 1.4, -0.5)
    rec = run_trajectory(small_cfg, rho0)
    stream = noise_stream(small_cfg.seed, 0, small_cfg.n_steps, small_cfg.dt)
    stride = small_cfg.record_stride
    picked = stream[stride - 1::stride][:len(rec.times)]
    recovered = (rec.signals - rec.signal_base_c) * math.sqrt(
        small_cfg.control.gamma_m) * small_cfg.dt
    assert np.max(np.abs(recovered - picked)) < 1e-15


def test_trajectory_instability_guard(desk_bath):
    """Without feedback the conditional occupation runs away; the truncation
    guard must fire before the coarse estimate t* = ln(dim/(4 n0)) / (-2 kappa_e)."""
    control = ControlSpec(eps_d=0.0, gamma_m=0.04, kappa_f=0.0)
    space = FockSpace(24)
    cfg = TrajectoryConfig(bath=desk_bath, control=control, space=space,
                           dt=0.015, t_end=1200.0, seed=8, record_stride=20)
    rho0 = displaced_thermal(space, 1.3, 0.0)
    n0 = rho0.expect(fock.number_operator(space)).real
    rec = run_trajectory(cfg, rho0, keep_final_state=False)
    assert rec.guard_event is not None
    assert rec.guard_event.kind == "truncation"
    bound = math.log(space.dim / (4.0 * n0)) / (-2.0 * desk_bath.kappa_e)
    assert rec.guard_event.time < bound


def test_trajectory_stationary_band(desk_bath, desk_control):
    """Above threshold the conditional amplitude stays in a band around the
    stationary displacement, with comparable width across seeds."""
    space = FockSpace(36)
    cfg0 = TrajectoryConfig(bath=desk_bath, control=desk_control, space=space,
                            dt=0.02, t_end=80.0, seed=1001, record_stride=20)
    gen = compose_from_params(desk_bath, desk_control, space)
    c_inf = gen.c_inf
    rho0 = displaced_thermal(space, gen.beta * desk_bath.omega_o, c_inf)
    deviations = []
    for seed in (1001, 2002, 3003):
        cfg = TrajectoryConfig(bath=desk_bath, control=desk_control, space=space,
                               dt=0.02, t_end=80.0, seed=seed, record_stride=20)
        rec = run_trajectory(cfg, rho0, keep_final_state=False)
        assert rec.guard_event is None
        deviations.append(float(np.mean(np.abs(rec.c_sigma - c_inf))))
    for dev in deviations:
        assert dev < 0.6 * abs(c_inf)
    assert max(deviations) < 3.0 * min(deviations)


def test_trace_drift_stays_small(small_cfg):
    rho0 = displaced_thermal(small_cfg.space, 1.4, -0.5)
    rec = run_trajectory(small_cfg, rho0, keep_final_state=False)
    assert rec.trace_drift_total < 1e-3


def test_ensemble_mean_matches_unconditional(desk_bath, desk_control):
    space = FockSpace(32)
    dt = suggested_dt(desk_bath, desk_control, space.dim)
    cfg = TrajectoryConfig(bath=desk_bath, control=desk_control, space=space,
                           dt=dt, t_end=40.0, seed=555, record_stride=25)
    rho0 = displaced_thermal(space, 1.8, -0.5)
    ens = run_ensemble(cfg, rho0, n_traj=96, state_checkpoints=[len(cfg.record_times) - 1])
    assert len(ens.guard_events) == 0
    ck = [len(ens.times) // 2 - 1, len(ens.times) - 1]
    me = propagate_with_moments(compose_from_params(desk_bath, desk_control, space),
                                rho0, ens.times[ck], dt=0.01)
    mc, se_c = ens.mean_c()
    mn, se_n = ens.mean_n()
    for j, idx in enumerate(ck):
        assert abs(mn[idx] - me.n[j]) < 3.0 * se_n[idx]
        assert abs(mc[idx] - me.c[j]) < 3.0 * se_c[idx]
    # stochastic mean of the conditional state is the unconditional state
    mean_state = ens.mean_states[0]
    assert fock.trace_distance(mean_state, me.final_state) < 0.05


def test_ensemble_cauchy_schwarz(desk_bath, desk_control):
    space = FockSpace(32)
    cfg = TrajectoryConfig(bath=desk_bath, control=desk_control, space=space,
                           dt=0.02, t_end=20.0, seed=9090, record_stride=20)
    rho0 = displaced_thermal(space, 1.2, -1.0)
    ens = run_ensemble(cfg, rho0, n_traj=48)
    mc, _ = ens.mean_c()
    ma, _ = ens.mean_abs_c_sq()
    assert np.all(ma >= np.abs(mc) ** 2 - 1e-12)


def test_ensemble_single_trajectory(small_cfg):
    rho0 = displaced_thermal(small_cfg.space, 1.4, -0.5)
    ens = run_ensemble(small_cfg, rho0, n_traj=1)
    rec = run_trajectory(small_cfg, rho0, stream_index=0, keep_final_state=False)
    assert np.array_equal(ens.traj_c[0], rec.c_sigma)
    _, se = ens.mean_n()
    assert np.all(np.isnan(se))


def test_ensemble_worker_invariance(small_cfg):
    rho0 = displaced_thermal(small_cfg.space, 1.4, -0.5)
    e1 = run_ensemble(small_cfg, rho0, n_traj=150, workers=1, state_checkpoints=[3])
    e4 = run_ensemble(small_cfg, rho0, n_traj=150, workers=4, state_checkpoints=[3])
    assert json.dumps(e1.payload_dict(), sort_keys=True) == \
        json.dumps(e4.payload_dict(), sort_keys=True)
    assert np.array_equal(e1.traj_c, e4.traj_c, equal_nan=True)
    assert np.array_equal(e1.mean_states[0], e4.mean_states[0])


def test_config_validation(desk_bath, desk_control):
    with pytest.raises(StepTooLarge):
        TrajectoryConfig(bath=desk_bath, control=desk_control, space=FockSpace(30),
                         dt=2.0, t_end=10.0, seed=1)
    with pytest.raises(FeedbackWithoutMeasurement):
        TrajectoryConfig(bath=desk_bath,
                         control=ControlSpec(eps_d=0.0, gamma_m=0.0, kappa_f=0.1),
                         space=FockSpace(10), dt=0.01, t_end=1.0, seed=1)


def test_suggested_dt_scales(desk_bath, desk_control):
    dt20 = suggested_dt(desk_bath, desk_control, 20)
    dt40 = suggested_dt(desk_bath, desk_control, 40)
    assert dt40 < dt20
    TrajectoryConfig(bath=desk_bath, control=desk_control, space=FockSpace(40),
                     dt=dt40, t_end=1.0, seed=0)  # passes its own stability check
