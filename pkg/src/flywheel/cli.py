"""Config-driven experiment runner.

Reads a JSON experiment config, runs one of the experiment kinds, and writes
machine-readable outputs: a JSON summary (always) and CSV tables where the
experiment produces them.  Every output embeds the fully resolved config and
the code version; timestamps live in a separate metadata block so payload
sections are byte-identical across reruns with the same config and seed.

Exit codes: 0 success, 2 config validation error, 3 physics-regime error,
4 fatal numerical guard.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .engine import (
    ControlSpec,
    EffectiveBath,
    EngineSpec,
    WEAK_COUPLING_RATIO,
    reduce as engine_reduce,
    weak_coupling_margin,
)
from .errors import GUARD_ERRORS, REGIME_ERRORS, ConfigError, FlywheelError
from .fock import DensityMatrix, FockSpace, displaced_thermal, trace_distance, vacuum_state
from .lindblad import compose_from_params, composed_rates, propagate_with_moments, steady_state
from .sme import TrajectoryConfig, run_ensemble, run_trajectory, suggested_dt
from .steady import SurfaceTable, default_grid, efficiency_surface, predict, threshold
from .energy import dissipator_current, driving_power, ledger
from .tripartite import ClassicalDriveSpec, classical_drive_power, validate_reduction

EXPERIMENT_KINDS = (
    "steady", "sweep", "sme", "ensemble", "tripartite", "classical", "energy", "instability",
)

_NUMERIC_DEFAULTS = {
    "dim": 34,
    "dt": None,            # None -> stability rule
    "t_end": 100.0,
    "n_traj": 200,
    "workers": 1,
    "seed": 0,
    "record_stride": 25,
}


# --------------------------------------------------------------------------
# config loading and validation
# --------------------------------------------------------------------------

def _fail(path, msg):
    raise ConfigError(f"{path}: {msg}")


def _require_number(section, key, path, minimum=None, strict=False, integer=False):
    if key not in section:
        _fail(f"{path}.{key}", "missing required field")
    val = section[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        _fail(f"{path}.{key}", f"expected a number, got {val!r}")
    if integer and int(val) != val:
        _fail(f"{path}.{key}", f"expected an integer, got {val!r}")
    if minimum is not None:
        if strict and not val > minimum:
            _fail(f"{path}.{key}", f"must be > {minimum}, got {val}")
        if not strict and not val >= minimum:
            _fail(f"{path}.{key}", f"must be >= {minimum}, got {val}")
    return int(val) if integer else float(val)


def _check_keys(section, allowed, path):
    unknown = set(section) - set(allowed)
    if unknown:
        _fail(path, f"unknown fields {sorted(unknown)}; allowed: {sorted(allowed)}")


def load_config(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {p}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be a JSON object")
    return raw


def resolve_config(raw: dict, overrides: dict | None = None) -> dict:
    """Validate and fill defaults; returns the fully resolved config dict."""
    _check_keys(raw, ("experiment", "bath", "engine", "control", "numerics", "grid",
                      "initial", "output"), "config")
    kind = raw.get("experiment")
    if kind not in EXPERIMENT_KINDS:
        _fail("config.experiment", f"must be one of {EXPERIMENT_KINDS}, got {kind!r}")

    cfg = {"experiment": kind}

    has_bath = "bath" in raw
    has_engine = "engine" in raw
    needs_bath = kind not in ("classical", "tripartite")
    if kind in ("classical", "tripartite"):
        if not has_engine:
            _fail("config.engine", f"experiment {kind!r} requires an engine section")
    elif has_bath == has_engine:
        _fail("config", "give exactly one of 'bath' or 'engine'")

    if has_engine:
        sec = raw["engine"]
        _check_keys(sec, ("omega_h", "omega_c", "beta_h", "beta_c", "Gamma_h", "Gamma_c", "g"),
                    "config.engine")
        cfg["engine"] = {
            "omega_h": _require_number(sec, "omega_h", "config.engine", 0, strict=True),
            "omega_c": _require_number(sec, "omega_c", "config.engine", 0, strict=True),
            "beta_h": _require_number(sec, "beta_h", "config.engine", 0, strict=True),
            "beta_c": _require_number(sec, "beta_c", "config.engine", 0, strict=True),
            "Gamma_h": _require_number(sec, "Gamma_h", "config.engine", 0, strict=True),
            "Gamma_c": _require_number(sec, "Gamma_c", "config.engine", 0, strict=True),
            "g": _require_number(sec, "g", "config.engine", 0) if "g" in sec else 0.0,
        }
    if has_bath:
        sec = raw["bath"]
        _check_keys(sec, ("Gamma_e", "beta_e", "omega_o"), "config.bath")
        beta_e = sec.get("beta_e")
        if not isinstance(beta_e, (int, float)) or isinstance(beta_e, bool):
            _fail("config.bath.beta_e", f"expected a number, got {beta_e!r}")
        cfg["bath"] = {
            "Gamma_e": _require_number(sec, "Gamma_e", "config.bath", 0),
            "beta_e": float(beta_e),
            "omega_o": _require_number(sec, "omega_o", "config.bath", 0, strict=True),
        }

    if kind in ("steady", "sweep", "sme", "ensemble", "energy", "instability"):
        if "control" not in raw:
            _fail("config.control", f"experiment {kind!r} requires a control section")
        sec = raw["control"]
        _check_keys(sec, ("eps_d", "gamma_m", "kappa_f"), "config.control")
        cfg["control"] = {
            "eps_d": _require_number(sec, "eps_d", "config.control", 0),
            "gamma_m": _require_number(sec, "gamma_m", "config.control", 0),
            "kappa_f": _require_number(sec, "kappa_f", "config.control", 0),
        }
    if kind == "classical":
        sec = raw.get("control", {})
        _check_keys(sec, ("eps",), "config.control")
        cfg["control"] = {"eps": _require_number(sec, "eps", "config.control", 0)
                          if "eps" in sec else 0.01}

    num = dict(_NUMERIC_DEFAULTS)
    sec = raw.get("numerics", {})
    _check_keys(sec, tuple(_NUMERIC_DEFAULTS), "config.numerics")
    for key in ("dim", "n_traj", "workers", "seed", "record_stride"):
        if key in sec:
            num[key] = _require_number(sec, key, "config.numerics", 0 if key == "seed" else 1,
                                       integer=True)
    for key in ("dt", "t_end"):
        if key in sec and sec[key] is not None:
            num[key] = _require_number(sec, key, "config.numerics", 0, strict=True)
    if num["dim"] < 2:
        _fail("config.numerics.dim", f"must be >= 2, got {num['dim']}")
    cfg["numerics"] = num

    if "grid" in raw:
        sec = raw["grid"]
        _check_keys(sec, ("n_kappa", "n_ratio", "kappa_span", "ratio_span"), "config.grid")
        cfg["grid"] = {
            "n_kappa": _require_number(sec, "n_kappa", "config.grid", 2, integer=True)
            if "n_kappa" in sec else 12,
            "n_ratio": _require_number(sec, "n_ratio", "config.grid", 3, integer=True)
            if "n_ratio" in sec else 25,
            "kappa_span": _require_number(sec, "kappa_span", "config.grid", 1, strict=True)
            if "kappa_span" in sec else 100.0,
            "ratio_span": _require_number(sec, "ratio_span", "config.grid", 1, strict=True)
            if "ratio_span" in sec else 10.0,
        }
    elif kind == "sweep":
        cfg["grid"] = {"n_kappa": 12, "n_ratio": 25, "kappa_span": 100.0, "ratio_span": 10.0}

    init = raw.get("initial", {"kind": "steady"})
    _check_keys(init, ("kind", "beta_omega", "alpha_re", "alpha_im"), "config.initial")
    if init.get("kind", "steady") not in ("steady", "vacuum", "displaced_thermal"):
        _fail("config.initial.kind", f"unknown initial state {init.get('kind')!r}")
    cfg["initial"] = {
        "kind": init.get("kind", "steady"),
        "beta_omega": float(init.get("beta_omega", 1.0)),
        "alpha_re": float(init.get("alpha_re", 0.0)),
        "alpha_im": float(init.get("alpha_im", 0.0)),
    }

    out = raw.get("output", {})
    _check_keys(out, ("dir", "basename"), "config.output")
    cfg["output"] = {
        "dir": str(out.get("dir", "out")),
        "basename": str(out.get("basename", kind)),
    }

    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key in ("seed", "workers"):
            cfg["numerics"][key] = int(val)
        elif key == "out":
            cfg["output"]["dir"] = str(val)
    return cfg


def _resolve_bath(cfg) -> EffectiveBath:
    if "bath" in cfg:
        b = cfg["bath"]
        return EffectiveBath.from_rates(b["Gamma_e"], b["beta_e"], b["omega_o"])
    eng = _engine_spec(cfg)
    return engine_reduce(eng)


def _engine_spec(cfg) -> EngineSpec:
    e = cfg["engine"]
    return EngineSpec(omega_h=e["omega_h"], omega_c=e["omega_c"], beta_h=e["beta_h"],
                      beta_c=e["beta_c"], Gamma_h=e["Gamma_h"], Gamma_c=e["Gamma_c"], g=e["g"])


def _control_spec(cfg) -> ControlSpec:
    c = cfg["control"]
    return ControlSpec(eps_d=c["eps_d"], gamma_m=c["gamma_m"], kappa_f=c["kappa_f"])


def _trajectory_config(cfg, bath, control) -> TrajectoryConfig:
    num = cfg["numerics"]
    dim = int(num["dim"])
    dt = num["dt"] if num["dt"] is not None else suggested_dt(bath, control, dim)
    return TrajectoryConfig(
        bath=bath, control=control, space=FockSpace(dim), dt=float(dt),
        t_end=float(num["t_end"]), seed=int(num["seed"]),
        record_stride=int(num["record_stride"]),
    )


def _initial_state(cfg, bath, control, space) -> DensityMatrix:
    init = cfg["initial"]
    if init["kind"] == "vacuum":
        return vacuum_state(space)
    if init["kind"] == "displaced_thermal":
        alpha = complex(init["alpha_re"], init["alpha_im"])
        return displaced_thermal(space, init["beta_omega"], alpha)
    pred = predict(bath, control)
    return displaced_thermal(space, pred.beta * bath.omega_o, pred.c_inf)


# --------------------------------------------------------------------------
# output writers
# --------------------------------------------------------------------------

def _csv_num(x) -> str:
    if x is None:
        return ""
    return "%.17g" % x


def write_json(path: Path, cfg: dict, results: dict):
    payload = {
        "version": __version__,
        "config": cfg,
        "metadata": {"generated": datetime.now(timezone.utc).isoformat()},
        "results": results,
    }
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def write_csv(path: Path, cfg: dict, header, rows):
    lines = [
        f"# flywheel {__version__}",
        "# config: " + json.dumps(cfg, sort_keys=True),
        "# meta: generated=" + datetime.now(timezone.utc).isoformat(),
        ",".join(header),
    ]
    for row in rows:
        lines.append(",".join(_csv_num(x) if isinstance(x, (int, float, type(None))) else str(x)
                              for x in row))
    path.write_text("\n".join(lines) + "\n")


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
# Render the charging-efficiency surface from {csv_name}.
import csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

kappa, gamma, eta, ridge = [], [], [], []
with open("{csv_name}") as fh:
    for row in csv.DictReader(r for r in fh if not r.startswith("#")):
        if row["above_threshold"] != "True" or not row["eta"]:
            continue
        kappa.append(float(row["kappa_f"]))
        gamma.append(float(row["gamma_m"]))
        eta.append(float(row["eta"]))
        ridge.append(row["ridge"] == "True")

fig, ax = plt.subplots(figsize=(6, 4.5))
sc = ax.scatter(gamma, kappa, c=eta, s=18, cmap="viridis")
ax.scatter([g for g, r in zip(gamma, ridge) if r],
           [k for k, r in zip(kappa, ridge) if r],
           marker="x", c="red", s=24, label="ridge gamma_m ~ 2 kappa_f")
ax.set_xscale("log"); ax.set_yscale("log")
ax.set_xlabel("gamma_m"); ax.set_ylabel("kappa_f")
ax.legend(loc="upper left")
fig.colorbar(sc, label="charging efficiency")
fig.tight_layout()
fig.savefig("{png_name}", dpi=160)
print("wrote {png_name}")
"""


def emit_figure_data(table: SurfaceTable, out_dir: Path, basename: str, cfg: dict):
    """CSV of the efficiency surface plus a standalone plotting script.

    Rows below threshold carry empty eta/work; the ridge column flags, within
    each kappa_f row, the point whose gamma_m/kappa_f is closest to 2.
    """
    rows = []
    for kf in table.kappa_values:
        rpoints = table.rows_for(kf)
        vals = [abs(p.gamma_m / p.kappa_f - 2.0) if p.above_threshold else math.inf
                for p in rpoints]
        ridge_idx = int(np.argmin(vals)) if rpoints else -1
        for j, p in enumerate(rpoints):
            rows.append((
                p.kappa_f, p.gamma_m,
                p.eta if p.above_threshold else None,
                p.work if p.above_threshold else None,
                str(p.above_threshold), str(j == ridge_idx and p.above_threshold),
            ))
    csv_path = out_dir / f"{basename}_surface.csv"
    write_csv(csv_path, cfg, ("kappa_f", "gamma_m", "eta", "work", "above_threshold", "ridge"),
              rows)
    script_path = out_dir / f"plot_{basename}.py"
    script_path.write_text(_PLOT_SCRIPT.format(csv_name=csv_path.name,
                                               png_name=f"{basename}_surface.png"))
    return csv_path, script_path


# --------------------------------------------------------------------------
# experiments
# --------------------------------------------------------------------------

def _complex_dict(z: complex) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def _run_steady(cfg, out_dir):
    bath = _resolve_bath(cfg)
    control = _control_spec(cfg)
    pred = predict(bath, control)
    space = FockSpace(int(cfg["numerics"]["dim"]))
    gen = compose_from_params(bath, control, space)
    rho = steady_state(gen)
    ana = displaced_thermal(space, pred.beta * bath.omega_o, pred.c_inf)
    c_op = np.diag(np.sqrt(np.arange(1.0, space.dim)), k=1)
    c_num = complex(np.einsum("ij,ji->", rho.mat, c_op))
    n_num = float(np.real(np.sum(np.arange(space.dim) * np.diag(rho.mat))))
    results = {
        "beta_omega": pred.beta * bath.omega_o,
        "n_o": pred.n_o,
        "c_inf": _complex_dict(pred.c_inf),
        "work": pred.work,
        "internal_energy": pred.internal_energy,
        "eta": pred.efficiency,
        "threshold_kappa_f": threshold(bath),
        "residuals": {
            "trace_distance": trace_distance(rho, ana),
            "c_rel_err": abs(c_num - pred.c_inf) / abs(pred.c_inf) if pred.c_inf != 0 else 0.0,
            "n_rel_err": abs(n_num - (pred.n_o + abs(pred.c_inf) ** 2))
            / (pred.n_o + abs(pred.c_inf) ** 2),
        },
    }
    if "engine" in cfg:
        results["weak_coupling_margin"] = weak_coupling_margin(
            _engine_spec(cfg), pred.n_o + abs(pred.c_inf) ** 2)
    return results, []


def _run_sweep(cfg, out_dir):
    bath = _resolve_bath(cfg)
    control = _control_spec(cfg)
    grid = cfg["grid"]
    kappa_values, ratio_values = default_grid(
        bath, n_kappa=int(grid["n_kappa"]), n_ratio=int(grid["n_ratio"]),
        kappa_span=grid["kappa_span"], ratio_span=grid["ratio_span"])
    table = efficiency_surface(bath, control.eps_d, kappa_values, ratio_values=ratio_values)
    files = list(emit_figure_data(table, out_dir, cfg["output"]["basename"], cfg))
    ratios = np.asarray(ratio_values)
    ridge_ratio = float(ratios[np.argmin(np.abs(ratios - 2.0))])
    eta_at_ridge = []
    for kf in table.kappa_values:
        best = max((p for p in table.rows_for(kf) if p.eta is not None),
                   key=lambda p: p.eta)
        eta_at_ridge.append({
            "kappa_f": kf,
            "eta_max": best.eta,
            "argmax_ratio": best.gamma_m / best.kappa_f,
            "work": best.work,
        })
    results = {
        "threshold_kappa_f": threshold(bath),
        "ridge_ratio_grid_point": ridge_ratio,
        "rows": eta_at_ridge,
        "n_points": len(table.points),
    }
    return results, files


def _run_sme(cfg, out_dir):
    bath = _resolve_bath(cfg)
    control = _control_spec(cfg)
    tcfg = _trajectory_config(cfg, bath, control)
    rho0 = _initial_state(cfg, bath, control, tcfg.space)
    rec = run_trajectory(tcfg, rho0, keep_final_state=False)
    rows = [
        (t, c.real, c.imag, n, abs(c) ** 2, s.real, s.imag)
        for t, c, n, s in zip(rec.times, rec.c_sigma, rec.n_sigma, rec.signals)
    ]
    csv_path = out_dir / f"{cfg['output']['basename']}_trajectory.csv"
    write_csv(csv_path, cfg,
              ("time", "c_re", "c_im", "n", "abs_c_sq", "signal_re", "signal_im"), rows)
    results = {
        "dt": tcfg.dt,
        "n_records": len(rec.times),
        "trace_drift_total": rec.trace_drift_total,
        "guard_event": None if rec.guard_event is None else {
            "kind": rec.guard_event.kind, "time": rec.guard_event.time},
        "final_c": _complex_dict(rec.c_sigma[-1]),
        "final_n": float(rec.n_sigma[-1]),
    }
    return results, [csv_path]


def _checkpoint_indices(n_rec: int, count: int = 5):
    k = max(1, n_rec // count)
    return list(range(k - 1, n_rec, k))[:count]


def _run_ensemble(cfg, out_dir):
    bath = _resolve_bath(cfg)
    control = _control_spec(cfg)
    tcfg = _trajectory_config(cfg, bath, control)
    rho0 = _initial_state(cfg, bath, control, tcfg.space)
    num = cfg["numerics"]
    ens = run_ensemble(tcfg, rho0, n_traj=int(num["n_traj"]), workers=int(num["workers"]))
    ck = _checkpoint_indices(len(ens.times))
    payload = ens.payload_dict(checkpoints=ck)
    me = propagate_with_moments(compose_from_params(bath, control, tcfg.space), rho0,
                                ens.times[ck], dt=min(tcfg.dt, 0.01))
    mc, se_c = ens.mean_c()
    mn, se_n = ens.mean_n()
    comparison = []
    for j, idx in enumerate(ck):
        comparison.append({
            "time": float(ens.times[idx]),
            "me_n": float(me.n[j]),
            "dev_n_in_se": float(abs(mn[idx] - me.n[j]) / se_n[idx]),
            "dev_c_in_se": float(abs(mc[idx] - me.c[j]) / se_c[idx]),
        })
    payload["me_comparison"] = comparison
    return payload, []


def _run_energy(cfg, out_dir):
    bath = _resolve_bath(cfg)
    control = _control_spec(cfg)
    tcfg = _trajectory_config(cfg, bath, control)
    rho0 = _initial_state(cfg, bath, control, tcfg.space)
    num = cfg["numerics"]
    ens = run_ensemble(tcfg, rho0, n_traj=int(num["n_traj"]), workers=int(num["workers"]))
    led = ledger(bath, control, ens)
    results = {
        "J_e": led.J_e,
        "J_m": led.J_m,
        "J_f_total": led.J_f_total,
        "P_d": led.P_d,
        "P_f_det_bound": led.P_f_det_bound,
        "P_f_det_est": led.P_f_det_est,
        "P_f_det_se": led.P_f_det_se,
        "balance_residual": led.balance_residual,
        "balance_scale": led.balance_scale,
        "consumable_power": -led.P_d - led.P_f_det_est,
    }
    return results, []


def _run_instability(cfg, out_dir):
    bath = _resolve_bath(cfg)
    control = _control_spec(cfg)
    down, up = composed_rates(bath, control)
    kappa = 0.5 * (down - up)
    if kappa >= 0:
        raise ConfigError(
            "instability experiment needs kappa_f + kappa_e < 0 (below threshold)")
    space = FockSpace(int(cfg["numerics"]["dim"]))
    gen = compose_from_params(bath, control, space)
    rho0 = _initial_state(cfg, bath, control, space) if cfg["initial"]["kind"] != "steady" \
        else vacuum_state(space)
    t_end = float(cfg["numerics"]["t_end"])
    times = np.linspace(t_end / 40.0, t_end, 40)
    dt = cfg["numerics"]["dt"] or 0.01
    rec = propagate_with_moments(gen, rho0, times, dt=float(dt))
    ntil = rec.n - np.abs(rec.c) ** 2
    npart = up / (2.0 * kappa)
    k0, k1 = max(0, len(rec.times) // 4), len(rec.times) - 1
    rate = float(np.log((ntil[k1] - npart) / (ntil[k0] - npart))
                 / (rec.times[k1] - rec.times[k0]))
    results = {
        "kappa": kappa,
        "expected_growth_rate": -2.0 * kappa,
        "extracted_growth_rate": rate,
        "rate_rel_err": abs(rate + 2.0 * kappa) / abs(2.0 * kappa),
        "guard_event": None if rec.guard_event is None else {
            "kind": rec.guard_event.kind, "time": rec.guard_event.time,
            "population": rec.guard_event.value},
        "n_samples": len(rec.times),
    }
    return results, []


def _run_tripartite(cfg, out_dir):
    spec = _engine_spec(cfg)
    num = cfg["numerics"]
    horizon = float(num["t_end"])
    report = validate_reduction(spec, FockSpace(int(num["dim"])), horizon,
                                dt=num["dt"])
    results = {
        "g_values": list(report.g_values),
        "max_distance": {f"{g:.8g}": report.max_distance[g] for g in report.g_values},
        "monotone_in_g": report.monotone_in_g,
        "occupation_slopes": {
            f"{g:.8g}": {"full": s[0], "reduced": s[1]}
            for g, s in report.occupation_slopes.items()},
    }
    return results, []


def _run_classical(cfg, out_dir):
    spec = _engine_spec(cfg)
    eps = cfg["control"]["eps"]
    res = classical_drive_power(ClassicalDriveSpec(engine=spec, eps=eps))
    results = {
        "closed_form": res.closed_form,
        "steady_state_route": res.steady_state_route,
        "rel_diff": abs(res.closed_form - res.steady_state_route)
        / max(abs(res.closed_form), 1e-300),
        "positive": res.closed_form > 0,
        "n_h": spec.n_h,
        "n_c": spec.n_c,
    }
    return results, []


_RUNNERS = {
    "steady": _run_steady,
    "sweep": _run_sweep,
    "sme": _run_sme,
    "ensemble": _run_ensemble,
    "tripartite": _run_tripartite,
    "classical": _run_classical,
    "energy": _run_energy,
    "instability": _run_instability,
}


def _validate_only(cfg) -> int:
    lines = [f"config OK: experiment={cfg['experiment']}"]
    if cfg["experiment"] not in ("classical", "tripartite"):
        bath = _resolve_bath(cfg)
        th = threshold(bath)
        lines.append(f"bath: Gamma_e={bath.Gamma_e:.6g} beta_e={bath.beta_e:.6g} "
                     f"omega_o={bath.omega_o:.6g} regime={bath.regime}")
        lines.append(f"threshold -kappa_e = {th:.6g}")
        if "control" in cfg and "kappa_f" in cfg["control"]:
            kf = cfg["control"]["kappa_f"]
            above = kf > th
            lines.append(f"kappa_f = {kf:.6g} -> {'above' if above else 'below'} threshold")
            if cfg["experiment"] in ("steady", "sweep", "ensemble", "energy") and not above:
                sys.stdout.write("\n".join(lines) + "\n")
                sys.stderr.write("regime error: feedback below threshold\n")
                return 3
    if "engine" in cfg:
        margin = weak_coupling_margin(_engine_spec(cfg), 1.0)
        lines.append(f"weak-coupling margin (occ=1): {margin:.4g} "
                     f"(guidance threshold {WEAK_COUPLING_RATIO})")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def run(kind: str, config_path: str, seed=None, workers=None, out=None,
        validate_only: bool = False) -> int:
    """Load, validate and execute one experiment; returns the exit code."""
    try:
        raw = load_config(config_path)
        if "experiment" in raw and raw["experiment"] != kind:
            raise ConfigError(
                f"config experiment {raw['experiment']!r} does not match subcommand {kind!r}")
        raw.setdefault("experiment", kind)
        cfg = resolve_config(raw, {"seed": seed, "workers": workers, "out": out})
        if validate_only:
            return _validate_only(cfg)
        out_dir = Path(cfg["output"]["dir"])
        out_dir.mkdir(parents=True, exist_ok=True)
        results, files = _RUNNERS[kind](cfg, out_dir)
        json_path = out_dir / f"{cfg['output']['basename']}.json"
        write_json(json_path, cfg, results)
        for p in [json_path, *files]:
            sys.stdout.write(f"wrote {p}\n")
        return 0
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except REGIME_ERRORS as exc:
        sys.stderr.write(f"regime error: {type(exc).__name__}: {exc}\n")
        return 3
    except GUARD_ERRORS as exc:
        sys.stderr.write(f"numerical guard: {type(exc).__name__}: {exc}\n")
        return 4
    except FlywheelError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="flywheel",
        description="Measurement-stabilized quantum flywheel experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override numerics.seed")
        p.add_argument("--workers", type=int, default=None, help="override numerics.workers")
        p.add_argument("--out", default=None, help="override output.dir")
        p.add_argument("--validate-only", action="store_true",
                       help="check config and regime without running")
    args = parser.parse_args(argv)
    return run(args.command, args.config, seed=args.seed, workers=args.workers,
               out=args.out, validate_only=args.validate_only)


if __name__ == "__main__":
    sys.exit(main())
