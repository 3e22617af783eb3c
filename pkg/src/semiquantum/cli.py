"""Command-line front end: presets, JSON configs, CSV/JSON/SVG emission.

Subcommands: simulate | oracle | poincare | lyapunov | sweep.
Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 unexpected divergence.
"""

from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, linear_oracle
from .errors import (
    ConfigurationError,
    CriticalityError,
    DivergentTrajectoryError,
    InfeasibleConstraintError,
    NumericalFailureError,
)
from .integrator import IntegrationStatus, IntegratorSettings, integrate
from .linear_oracle import QuantumTriple, StabilityClass, classify, evolve_classical, evolve_critical, evolve_linear
from .model import (
    ModelParams,
    SystemState,
    effective_energy,
    invariant_I,
    make_initial,
)
from .svgplot import write_svg
from .sweep import AxisSpec, InitialRecipe, SweepSpec, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_DIVERGED = 3

# initial condition shared by all figure presets; the momentum value is kept
# verbatim rather than recomputed from the energy shell
_BASE_INITIAL = {
    "n0": 1.0, "ominus0": 0.0, "oplus0": 0.0,
    "x0": 1.0, "p0": -2.54950976, "dn0": 0.0,
}


def _preset(eps, alpha, delta=1.0, **extra):
    cfg = {
        "params": {"eps": eps, "gamma": 0.0, "delta": delta, "alpha": alpha, "omega": 1.0},
        "initial": dict(_BASE_INITIAL),
        "simulate": {"t_end": 1000.0, "sample_interval": 0.5},
        "poincare": {"t_end": 5000.0},
        "lyapunov": {"transient": 200.0, "total": 5000.0, "renorm_interval": 1.0},
        "oracle": {"t_end": 10.0, "samples": 101},
    }
    for key, val in extra.items():
        cfg[key] = {**cfg.get(key, {}), **val}
    return cfg


PRESETS = {
    "fig1a": _preset(1.05, 0.0001),
    "fig1b": _preset(1.05, 0.015),
    "fig1c": _preset(2.0, 1.1),
    "fig2a": _preset(1.5, 0.015),
    "fig2b": _preset(1.075, 0.015),
    "fig2c": _preset(1.065, 0.015),
    "fig2d": _preset(1.05, 0.015),
    "fig3a": _preset(1.05, 0.0001),
    "fig3b": _preset(1.05, 0.01),
    "fig4": _preset(1.0, 1e-6, simulate={"t_end": 20.0, "sample_interval": 0.05}),
}

# analysis-style commands default to lighter tolerances than simulate: the
# Lyapunov sign and section geometry are insensitive at this level and runs
# over t ~ 5000 stay desk-scale
_ANALYSIS_TOL = 1e-10


def g17(v) -> str:
    """17-significant-digit decimal; round-trips IEEE doubles exactly."""
    return format(float(v), ".17g")


def _load_config(args) -> dict:
    cfg = {}
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigurationError(
                f"unknown preset {args.preset!r}; valid: {', '.join(sorted(PRESETS))}"
            )
        cfg = copy.deepcopy(PRESETS[args.preset])
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        try:
            overrides = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(overrides, dict):
            raise ConfigurationError("config root must be a JSON object")
        for key, val in overrides.items():
            if isinstance(val, dict) and isinstance(cfg.get(key), dict):
                cfg[key] = {**cfg[key], **val}
            else:
                cfg[key] = val
    if not cfg:
        raise ConfigurationError("no configuration: pass --preset and/or --config")
    return cfg


def _build_params(cfg: dict) -> ModelParams:
    try:
        sec = cfg["params"]
        return ModelParams(
            eps=float(sec["eps"]), gamma=float(sec.get("gamma", 0.0)),
            delta=float(sec["delta"]), alpha=float(sec["alpha"]),
            omega=float(sec["omega"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid params section: {exc}") from exc


def _build_initial(cfg: dict, p: ModelParams) -> SystemState:
    sec = cfg.get("initial")
    if not isinstance(sec, dict):
        raise ConfigurationError("missing initial section")
    try:
        if "e_eff" in sec or "i_inv" in sec:
            return make_initial(
                float(sec["e_eff"]), float(sec["i_inv"]),
                float(sec.get("ominus0", 0.0)), float(sec.get("oplus0", 0.0)),
                float(sec.get("x0", 1.0)), float(sec.get("dn0", 0.0)),
                p, momentum_sign=int(sec.get("momentum_sign", -1)),
            )
        return SystemState(
            n1=float(sec["n0"]) + 1.0,
            om=float(sec.get("ominus0", 0.0)),
            op=float(sec.get("oplus0", 0.0)),
            x=float(sec["x0"]), p=float(sec["p0"]),
            dn=float(sec.get("dn0", 0.0)),
        )
    except InfeasibleConstraintError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid initial section: {exc}") from exc


def _build_settings(cfg: dict, default_tol: float) -> IntegratorSettings:
    sec = cfg.get("integrator", {})
    if not isinstance(sec, dict):
        raise ConfigurationError("integrator section must be an object")
    base = IntegratorSettings(abs_tol=default_tol, rel_tol=default_tol)
    try:
        settings = dataclasses.replace(
            base,
            **{k: (int(v) if k == "max_steps" else float(v)) for k, v in sec.items()},
        )
    except TypeError as exc:
        raise ConfigurationError(f"invalid integrator section: {exc}") from exc
    settings.validate()
    return settings


def _summary(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _params_dict(p: ModelParams) -> dict:
    return dataclasses.asdict(p)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    p = _build_params(cfg)
    s0 = _build_initial(cfg, p)
    settings = _build_settings(cfg, 1e-14)
    sim = cfg.get("simulate", {})
    t_end = float(sim.get("t_end", 1000.0))
    interval = float(sim.get("sample_interval", 0.5))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        traj = integrate(s0, p, t_end, settings, sample_interval=interval)
    except NumericalFailureError as exc:
        _summary(out / "summary.json", {
            "command": "simulate", "params": _params_dict(p),
            "status": "numerical_failure", "error": str(exc),
        })
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    wall = time.perf_counter() - t0

    rows = []
    for t, y in zip(traj.times, traj.states):
        s = SystemState.from_array(y, dn=traj.dn)
        rows.append([
            g17(t), g17(s.n1), g17(s.om), g17(s.op), g17(s.x), g17(s.p),
            g17(effective_energy(s, p)), g17(invariant_I(s)),
        ])
    _write_csv(out / "trajectory.csv",
               ["t", "n1", "ominus", "oplus", "x", "p", "e_eff", "i_inv"], rows)
    _summary(out / "summary.json", {
        "command": "simulate",
        "params": _params_dict(p),
        "initial": dataclasses.asdict(s0),
        "settings": dataclasses.asdict(settings),
        "t_end": t_end,
        "sample_interval": interval,
        "status": traj.status.value,
        "t_div": traj.t_div,
        "steps_accepted": traj.stats.accepted,
        "steps_rejected": traj.stats.rejected,
        "wall_time_s": wall,
    })
    if args.plot:
        n_vals = traj.states[:, 0] - 1.0
        e_vals = np.array([effective_energy(SystemState.from_array(y), p) for y in traj.states])
        i_vals = np.array([invariant_I(SystemState.from_array(y)) for y in traj.states])
        write_svg(out / "trajectory.svg",
                  [(traj.times, n_vals), (traj.times, e_vals), (traj.times, i_vals)],
                  title="boson number and invariants", xlabel="t", ylabel="value",
                  labels=["<N>", "E_eff", "I"])
    if traj.status is IntegrationStatus.DIVERGED and not args.expect_divergence:
        print(f"unexpected divergence at t={traj.t_div:.6g}", file=sys.stderr)
        return EXIT_DIVERGED
    if traj.status is IntegrationStatus.STEP_BUDGET_EXHAUSTED:
        print("step budget exhausted", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _oracle_compare(p, s0, settings, t_end, n_samples, critical):
    traj = integrate(s0, p, t_end, settings, sample_interval=t_end / max(1, n_samples - 1))
    q0 = QuantumTriple(n1=s0.n1, om=s0.om, op=s0.op)
    flip = critical and p.delta < 0
    max_abs = 0.0
    max_rel = 0.0
    for t, y in zip(traj.times, traj.states):
        if critical:
            qq = QuantumTriple(q0.n1, -q0.om, -q0.op) if flip else q0
            ref_q = evolve_critical(qq, p.eps, t)
            if flip:
                ref_q = QuantumTriple(ref_q.n1, -ref_q.om, -ref_q.op)
        else:
            ref_q = evolve_linear(q0, p.eps, p.delta, t)
        ref_x, ref_p = evolve_classical(s0.x, s0.p, p.omega, t)
        ref = np.array([ref_q.n1, ref_q.om, ref_q.op, ref_x, ref_p])
        diff = np.abs(y - ref)
        max_abs = max(max_abs, float(diff.max()))
        max_rel = max(max_rel, float((diff / np.maximum(1.0, np.abs(ref))).max()))
    return traj, max_abs, max_rel


def cmd_oracle(args) -> int:
    cfg = _load_config(args)
    p = _build_params(cfg)
    mode = args.mode
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    regime = classify(p)
    report = {
        "command": "oracle",
        "mode": mode,
        "params": _params_dict(p),
        "classification": {
            "label": regime.label.value,
            "eta": {"re": regime.eta.real, "im": regime.eta.imag},
            "lambda_plus": {"re": regime.lambda_plus.real, "im": regime.lambda_plus.imag},
            "lambda_minus": {"re": regime.lambda_minus.real, "im": regime.lambda_minus.imag},
        },
    }
    if mode != "classify":
        if p.alpha != 0.0:
            print("oracle evolution comparison requires alpha = 0", file=sys.stderr)
            return EXIT_CONFIG
        if mode == "critical" and regime.label is not StabilityClass.CRITICAL:
            print("oracle critical mode requires |delta| = eps", file=sys.stderr)
            return EXIT_CONFIG
        s0 = _build_initial(cfg, p)
        settings = _build_settings(cfg, 1e-12)
        osec = cfg.get("oracle", {})
        t_end = float(osec.get("t_end", 10.0))
        n_samples = int(osec.get("samples", 101))
        try:
            traj, max_abs, max_rel = _oracle_compare(
                p, s0, settings, t_end, n_samples, critical=(mode == "critical")
            )
        except NumericalFailureError as exc:
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        report.update({
            "t_end": t_end,
            "max_abs_deviation": max_abs,
            "max_rel_deviation": max_rel,
            "integration_status": traj.status.value,
        })
    _summary(out / "oracle.json", report)
    print(json.dumps(report["classification"]))
    return EXIT_OK


def _family_initials(s0, p, n_families):
    """Reconstruct an n-member family at the (E_eff, I) of the given state.

    om0 is scanned on a symmetric grid inside the feasible band at fixed
    (op0, x0); each member's momentum is re-solved from the energy shell.
    """
    e_eff = effective_energy(s0, p)
    i_inv = invariant_I(s0)
    op0, x0 = s0.op, s0.x
    # feasibility: p^2 >= 0 bounds n1, and n1^2 = I + om0^2 + op0^2
    n1_max = 1.0 + (e_eff - (p.delta + p.alpha * x0) * op0 - 0.5 * p.omega * x0 * x0) / p.eps
    om_sq = n1_max * n1_max - i_inv - op0 * op0
    if om_sq <= 0.0:
        raise InfeasibleConstraintError("family band om0^2 > 0", om_sq)
    om_lim = 0.98 * math.sqrt(om_sq)
    sign = -1 if s0.p <= 0 else 1
    members = []
    for om0 in np.linspace(-om_lim, om_lim, n_families):
        members.append(make_initial(e_eff, i_inv, float(om0), op0, x0, s0.dn, p, momentum_sign=sign))
    return members


def cmd_poincare(args) -> int:
    cfg = _load_config(args)
    p = _build_params(cfg)
    s0 = _build_initial(cfg, p)
    settings = _build_settings(cfg, _ANALYSIS_TOL)
    sec_cfg = cfg.get("poincare", {})
    t_end = float(sec_cfg.get("t_end", 5000.0))
    direction = args.direction
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    try:
        initials = _family_initials(s0, p, args.families) if args.families > 1 else [s0]
    except InfeasibleConstraintError as exc:
        print(f"infeasible family construction: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    t0 = time.perf_counter()
    member_reports = []
    all_series = []
    diverged = False
    header = ["t_cross", "ominus", "oplus", "n1", "p", "direction"]
    for idx, ic in enumerate(initials):
        try:
            section = analysis.poincare(ic, p, t_end, settings, direction_filter=direction)
        except NumericalFailureError as exc:
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        rows = [
            [g17(t), g17(om), g17(op), g17(n1), g17(pp), str(int(d))]
            for t, om, op, n1, pp, d in zip(
                section.t, section.om, section.op, section.n1, section.p, section.directions
            )
        ]
        name = "section.csv" if len(initials) == 1 else f"section_{idx:02d}.csv"
        _write_csv(out / name, header, rows)
        rec = {
            "file": name,
            "initial": dataclasses.asdict(ic),
            "crossings": len(section),
            "status": section.status.value,
            "t_div": section.t_div,
        }
        if len(section) == 0:
            rec["warning"] = "no crossings within the time budget"
        member_reports.append(rec)
        if section.status is IntegrationStatus.DIVERGED:
            diverged = True
        all_series.append((section.om, section.op))
    _summary(out / "summary.json", {
        "command": "poincare",
        "params": _params_dict(p),
        "settings": dataclasses.asdict(settings),
        "t_end": t_end,
        "direction_filter": str(direction),
        "families": len(initials),
        "members": member_reports,
        "wall_time_s": time.perf_counter() - t0,
    })
    if args.plot:
        write_svg(out / "section.svg", all_series,
                  title="Poincare section at X=0", xlabel="<O->", ylabel="<O+>",
                  kinds=["scatter"] * len(all_series))
    if diverged and not args.expect_divergence:
        print("unexpected divergence during section accumulation", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_lyapunov(args) -> int:
    cfg = _load_config(args)
    p = _build_params(cfg)
    s0 = _build_initial(cfg, p)
    settings = _build_settings(cfg, _ANALYSIS_TOL)
    lsec = cfg.get("lyapunov", {})
    transient = float(lsec.get("transient", 200.0))
    total = float(lsec.get("total", 5000.0))
    renorm = float(lsec.get("renorm_interval", 1.0))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        est = analysis.largest_lyapunov(
            s0, p, settings, transient=transient, total=total, renorm_interval=renorm
        )
    except DivergentTrajectoryError as exc:
        _summary(out / "lyapunov.json", {
            "command": "lyapunov", "params": _params_dict(p),
            "status": "diverged", "t_div": exc.t_div,
            "transient": transient, "total": total,
        })
        print(f"divergence before the transient completed: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    report = {
        "command": "lyapunov",
        "params": _params_dict(p),
        "initial": dataclasses.asdict(s0),
        "lambda_max": est.lambda_max,
        "standard_error": est.standard_error,
        "transient": est.transient_discarded,
        "total": est.total_time,
        "renorm_count": est.renorm_count,
        "diverged_at": est.diverged_at,
        "wall_time_s": time.perf_counter() - t0,
    }
    _summary(out / "lyapunov.json", report)
    print(json.dumps({"lambda_max": est.lambda_max, "standard_error": est.standard_error}))
    return EXIT_OK


def _axis_from_json(sec) -> AxisSpec:
    if not isinstance(sec, dict) or "name" not in sec:
        raise ConfigurationError(f"axis must be an object with a name, got {sec!r}")
    if "values" in sec:
        return AxisSpec(name=sec["name"], values=tuple(float(v) for v in sec["values"]))
    try:
        return AxisSpec.linspace(sec["name"], float(sec["min"]), float(sec["max"]), int(sec["count"]))
    except KeyError as exc:
        raise ConfigurationError(f"axis needs values or min/max/count: missing {exc}") from exc


def cmd_sweep(args) -> int:
    path = Path(args.specfile)
    if not path.is_file():
        raise ConfigurationError(f"sweep spec not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"sweep spec is not valid JSON: {exc}") from exc
    p = _build_params(raw)
    init = raw.get("initial", {})
    if "e_eff" in init:
        recipe = InitialRecipe(
            e_eff=float(init["e_eff"]), i_inv=float(init["i_inv"]),
            om0=float(init.get("ominus0", 0.0)), op0=float(init.get("oplus0", 0.0)),
            x0=float(init.get("x0", 1.0)), dn0=float(init.get("dn0", 0.0)),
            momentum_sign=int(init.get("momentum_sign", -1)),
        )
    else:
        recipe = InitialRecipe(state=_build_initial(raw, p))
    spec = SweepSpec(
        axis1=_axis_from_json(raw.get("axis1")),
        axis2=_axis_from_json(raw.get("axis2")),
        base_params=p,
        recipe=recipe,
        budget=float(raw.get("budget", 5000.0)),
        transient=float(raw.get("transient", 200.0)),
        renorm_interval=float(raw.get("renorm_interval", 1.0)),
        settings=_build_settings(raw, _ANALYSIS_TOL),
    )
    spec.validate()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    # fail on unwritable output before any computation
    target = out / "regimes.csv"
    target.touch()

    t0 = time.perf_counter()
    regime_map = run_sweep(spec, max_workers=raw.get("workers"))
    rows = []
    for cell in regime_map.cells:
        rows.append([
            spec.axis1.name, g17(cell.axis1_value),
            spec.axis2.name, g17(cell.axis2_value),
            "" if cell.regime is None else cell.regime.value,
            "" if cell.lambda_max is None else g17(cell.lambda_max),
            "" if cell.standard_error is None else g17(cell.standard_error),
            "" if cell.divergence_time is None else g17(cell.divergence_time),
            cell.status,
        ])
    _write_csv(target,
               ["axis1_name", "axis1_value", "axis2_name", "axis2_value",
                "regime", "lambda_max", "stderr", "divergence_time", "status"],
               rows)
    _summary(out / "summary.json", {
        "command": "sweep",
        "base_params": _params_dict(p),
        "axis1": {"name": spec.axis1.name, "values": list(spec.axis1.values)},
        "axis2": {"name": spec.axis2.name, "values": list(spec.axis2.values)},
        "budget": spec.budget,
        "cells": len(regime_map),
        "wall_time_s": time.perf_counter() - t0,
    })
    return EXIT_OK


def _parse_direction(text):
    if text == "both":
        return "both"
    if text in ("+1", "1"):
        return 1
    if text == "-1":
        return -1
    raise argparse.ArgumentTypeError(f"direction must be +1, -1 or both, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--preset", help=f"figure preset: {', '.join(sorted(PRESETS))}")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--plot", action="store_true", help="emit SVG plots")
    common.add_argument("--expect-divergence", action="store_true",
                        help="treat divergence as a normal outcome")
    common.add_argument("--families", type=int, default=1,
                        help="generate N initial conditions at fixed (E_eff, I)")
    common.add_argument("--direction", type=_parse_direction, default="both",
                        help="crossing direction filter: +1, -1 or both")

    parser = argparse.ArgumentParser(
        prog="sqlab",
        description="Semiquantum boson-field dynamics laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common]).set_defaults(func=cmd_simulate)
    oracle = sub.add_parser("oracle", parents=[common])
    oracle.add_argument("--mode", choices=("linear", "critical", "classify"),
                        default="classify")
    oracle.set_defaults(func=cmd_oracle)
    sub.add_parser("poincare", parents=[common]).set_defaults(func=cmd_poincare)
    sub.add_parser("lyapunov", parents=[common]).set_defaults(func=cmd_lyapunov)
    sweep_p = sub.add_parser("sweep", parents=[common])
    sweep_p.add_argument("specfile", help="JSON sweep specification")
    sweep_p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, InfeasibleConstraintError, CriticalityError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
