import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flywheel.engine import ControlSpec, EffectiveBath
from flywheel.errors import BelowThreshold, UnstableNearThreshold
from flywheel.steady import (
    default_grid,
    efficiency_surface,
    optimal_monitoring,
    predict,
    threshold,
)

FIG2_BATH = EffectiveBath.from_rates(Gamma_e=1e-6, beta_e=-0.1, omega_o=1.0)
FIG2_EPS = 9e-2


def test_threshold_values(desk_bath):
    assert threshold(FIG2_BATH) == pytest.approx(5.2585459e-8, rel=1e-7)
    assert threshold(desk_bath) == pytest.approx(-desk_bath.kappa_e, rel=0)
    tiny = EffectiveBath.from_rates(Gamma_e=0.01, beta_e=-1e-12, omega_o=1.0)
    assert threshold(tiny) == pytest.approx(0.0, abs=1e-14)


def test_predict_fig2_point():
    pred = predict(FIG2_BATH, ControlSpec(eps_d=FIG2_EPS, gamma_m=2e-7, kappa_f=1e-7))
    assert pred.c_inf.real == pytest.approx(-1.898e6, rel=1e-3)
    assert pred.work == pytest.approx(3.603e12, rel=1e-3)


def test_predict_desk_regime(desk_bath, desk_control):
    pred = predict(desk_bath, desk_control)
    assert pred.beta * desk_bath.omega_o == pytest.approx(1.1094, abs=1e-4)
    assert pred.n_o == pytest.approx(0.4920, abs=1e-4)
    assert pred.c_inf.real == pytest.approx(-1.1936, abs=1e-4)
    assert pred.efficiency == pytest.approx(0.743, abs=1e-3)
    assert pred.internal_energy == pytest.approx(pred.omega_o * (pred.n_o + abs(pred.c_inf) ** 2))
    pred.validate()


def test_predict_undriven(desk_bath):
    pred = predict(desk_bath, ControlSpec(eps_d=0.0, gamma_m=0.04, kappa_f=0.02))
    assert pred.c_inf == 0
    assert pred.work == 0
    assert pred.efficiency == 0


def test_predict_below_threshold(desk_bath):
    with pytest.raises(BelowThreshold):
        predict(desk_bath, ControlSpec(eps_d=0.02, gamma_m=0.04,
                                       kappa_f=-desk_bath.kappa_e * 0.5))


def test_predict_near_threshold_unstable(desk_bath):
    kf = -desk_bath.kappa_e * (1.0 + 1e-15)
    with pytest.raises((UnstableNearThreshold, BelowThreshold)):
        predict(desk_bath, ControlSpec(eps_d=0.02, gamma_m=0.04, kappa_f=kf))


def test_optimal_monitoring_desk(desk_bath, desk_control):
    gamma_opt, n_o_min, eta_opt = optimal_monitoring(desk_bath, 0.02, eps_d=0.02)
    assert gamma_opt == pytest.approx(0.04)
    pred = predict(desk_bath, desk_control)  # desk gamma_m happens to be 2 kappa_f
    assert n_o_min == pytest.approx(pred.n_o, rel=1e-12)
    assert eta_opt == pred.efficiency


def test_optimal_monitoring_grid_argmin(desk_bath):
    kappa_f = 0.02
    gammas = np.logspace(math.log10(0.008), math.log10(0.2), 50)
    etas = [predict(desk_bath, ControlSpec(eps_d=0.02, gamma_m=g, kappa_f=kappa_f)).efficiency
            for g in gammas]
    best = gammas[int(np.argmax(etas))]
    nearest = gammas[int(np.argmin(np.abs(gammas - 2 * kappa_f)))]
    assert best == nearest


def test_optimal_monitoring_engine_dominates():
    bath = EffectiveBath.from_rates(Gamma_e=10.0, beta_e=-0.5, omega_o=1.0)
    with pytest.raises(BelowThreshold):
        optimal_monitoring(bath, kappa_f=0.02, eps_d=0.02)


def test_surface_work_constant_and_null_rows(desk_bath):
    th = threshold(desk_bath)
    kappas = [0.5 * th, 2.0 * th, 10.0 * th]
    gammas = [0.005, 0.01, 0.02, 0.08]
    table = efficiency_surface(desk_bath, 0.02, kappas, gamma_m_values=gammas)
    below = table.rows_for(kappas[0])
    assert all(not p.above_threshold and p.eta is None and p.work is None for p in below)
    for kf in kappas[1:]:
        rows = table.rows_for(kf)
        works = {p.work for p in rows}
        assert len(works) == 1  # gamma_m independence, exact
        assert all(p.above_threshold for p in rows)


def test_surface_fig2_ridge_and_threshold_growth():
    kappas, ratios = default_grid(FIG2_BATH, n_kappa=8, n_ratio=21, kappa_span=100.0)
    kappas = kappas[kappas > 2 * threshold(FIG2_BATH)]
    table = efficiency_surface(FIG2_BATH, FIG2_EPS, kappas, ratio_values=ratios)
    nearest_two = ratios[int(np.argmin(np.abs(ratios - 2.0)))]
    for kf in table.kappa_values:
        rows = table.rows_for(kf)
        best = max(rows, key=lambda p: p.eta)
        assert best.gamma_m / best.kappa_f == pytest.approx(nearest_two, rel=1e-12)
    # eta at exact ratio 2 grows toward the threshold
    etas = [predict(FIG2_BATH, ControlSpec(eps_d=FIG2_EPS, gamma_m=2 * kf, kappa_f=kf)).efficiency
            for kf in table.kappa_values]
    assert all(a > b for a, b in zip(etas, etas[1:]))


def test_surface_small_inversion_work_limit():
    bath = EffectiveBath.from_rates(Gamma_e=1e-6, beta_e=-1e-9, omega_o=1.0)
    kf = 1e-7
    pred = predict(bath, ControlSpec(eps_d=FIG2_EPS, gamma_m=2 * kf, kappa_f=kf))
    assert pred.work == pytest.approx(bath.omega_o * FIG2_EPS**2 / kf**2, rel=1e-5)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.05, 50.0), st.floats(0.3, 8.0), st.floats(0.01, 1.0))
def test_efficiency_in_unit_interval(kappa_rel, ratio, eps_d):
    pred = predict(FIG2_BATH, ControlSpec(
        eps_d=eps_d, gamma_m=ratio * kappa_rel * threshold(FIG2_BATH),
        kappa_f=kappa_rel * threshold(FIG2_BATH)))
    assert 0.0 < pred.efficiency < 1.0


def test_eta_monotone_toward_threshold(desk_bath):
    kappas = threshold(desk_bath) * np.array([1.02, 1.1, 1.5, 3.0, 10.0, 40.0])
    etas = [predict(desk_bath, ControlSpec(eps_d=0.02, gamma_m=2 * k, kappa_f=k)).efficiency
            for k in kappas]
    assert all(a > b for a, b in zip(etas, etas[1:]))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100.0), st.floats(1.1, 20.0), st.floats(0.2, 5.0))
def test_scale_invariance_of_efficiency(scale, kappa_rel, ratio):
    bath1 = EffectiveBath.from_rates(Gamma_e=1e-4, beta_e=-0.3, omega_o=1.0)
    kf1 = kappa_rel * threshold(bath1)
    eta1 = predict(bath1, ControlSpec(eps_d=0.05, gamma_m=ratio * kf1, kappa_f=kf1)).efficiency
    bath2 = EffectiveBath.from_rates(Gamma_e=1e-4 * scale, beta_e=-0.3, omega_o=1.0)
    kf2 = kf1 * scale
    eta2 = predict(bath2, ControlSpec(eps_d=0.05 * scale, gamma_m=ratio * kf2,
                                      kappa_f=kf2)).efficiency
    assert eta2 == pytest.approx(eta1, rel=1e-10)
