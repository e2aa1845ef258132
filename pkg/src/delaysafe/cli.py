"""Command-line front end: scenario loading, single runs, controller comparisons."""

from __future__ import annotations

import argparse
import csv
import functools
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .predictor import PredictorKind
from .safety import ControllerSpec
from .sim import MarginViolation, Metrics, SimConfig, metrics_from_log, run
from .truck import LeadProfile, TruckParams, nominal_control


class ScenarioError(ValueError):
    """The scenario file or CLI arguments are invalid (exit code 1)."""


_TRUCK_KEYS = {
    "tau": "tau", "A": "A", "B": "B", "D_st": "D_st", "kappa": "kappa",
    "v_max": "v_max", "D_sf": "D_sf", "T": "T", "sigma0": "sigma0",
    "lambda": "lam", "xi": "xi",
}
_LEAD_KEYS = {"v0_L": "v0_L", "t_brake": "t_brake", "a_brake": "a_brake"}
_SIM_KEYS = {
    "dt", "t_end", "enable_lag", "assertions", "D0", "v0", "u_init",
    "delta", "clamp_ego_speed", "u_clamp",
}
_CONTROLLER_KEYS = {"nominal", "robust", "predictor"}
_PREDICTOR_NAMES = {k.value: k for k in PredictorKind}
_NOMINAL_LAWS = {"car_following"}

DEFAULT_CONTROLLERS = {
    "baseline_no_predictor": {"nominal": "car_following", "robust": False, "predictor": "none"},
    "delay_as_disturbance_tissf": {"nominal": "car_following", "robust": True, "predictor": "none"},
    "predictor_nominal": {"nominal": "car_following", "robust": False, "predictor": "nominal"},
    "predictor_tissf": {"nominal": "car_following", "robust": True, "predictor": "frozen"},
    "predictor_ground_truth_tissf": {
        "nominal": "car_following", "robust": True, "predictor": "ground_truth",
    },
}

SUMMARY_COLUMNS = (
    "controller", "min_h", "min_D", "max_abs_u", "control_effort",
    "max_abs_d", "max_abs_d_hat", "safety_violation_duration",
)


@dataclass(frozen=True)
class Scenario:
    truck: TruckParams
    lead: LeadProfile
    sim: dict
    controllers: dict[str, dict]


def _reject_unknown(section: str, given: dict, allowed) -> None:
    unknown = set(given) - set(allowed)
    if unknown:
        raise ScenarioError(
            f"unknown key(s) {sorted(unknown)} in scenario section '{section}'; "
            f"allowed: {sorted(allowed)}"
        )


def parse_scenario(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    _reject_unknown("(top level)", doc, {"truck", "lead", "sim", "controllers"})

    truck_doc = doc.get("truck", {})
    _reject_unknown("truck", truck_doc, _TRUCK_KEYS)
    try:
        truck = TruckParams(**{_TRUCK_KEYS[k]: float(v) for k, v in truck_doc.items()})
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"bad truck parameters: {exc}") from exc

    lead_doc = doc.get("lead", {})
    _reject_unknown("lead", lead_doc, _LEAD_KEYS)
    try:
        lead = LeadProfile(**{_LEAD_KEYS[k]: float(v) for k, v in lead_doc.items()})
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"bad lead profile: {exc}") from exc

    sim_doc = doc.get("sim", {})
    _reject_unknown("sim", sim_doc, _SIM_KEYS)

    controllers = doc.get("controllers", DEFAULT_CONTROLLERS)
    if not isinstance(controllers, dict) or not controllers:
        raise ScenarioError("'controllers' must be a non-empty object of named controllers")
    for name, ctrl in controllers.items():
        _reject_unknown(f"controllers.{name}", ctrl, _CONTROLLER_KEYS)
        law = ctrl.get("nominal", "car_following")
        if law not in _NOMINAL_LAWS:
            raise ScenarioError(f"controllers.{name}: unknown nominal law {law!r}")
        pred = ctrl.get("predictor", "none")
        if pred not in _PREDICTOR_NAMES:
            raise ScenarioError(
                f"controllers.{name}: unknown predictor {pred!r}; "
                f"choose from {sorted(_PREDICTOR_NAMES)}"
            )
        if not isinstance(ctrl.get("robust", False), bool):
            raise ScenarioError(f"controllers.{name}: 'robust' must be a boolean")
    return Scenario(truck, lead, dict(sim_doc), {k: dict(v) for k, v in controllers.items()})


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario {path} is not valid JSON: {exc}") from exc
    return parse_scenario(doc)


def build_config(scenario: Scenario, controller_name: str,
                 dt: float | None = None, t_end: float | None = None,
                 no_assert: bool = False) -> SimConfig:
    if controller_name not in scenario.controllers:
        raise ScenarioError(
            f"unknown controller {controller_name!r}; scenario defines "
            f"{sorted(scenario.controllers)}"
        )
    ctrl = scenario.controllers[controller_name]
    spec = ControllerSpec(
        nominal=functools.partial(nominal_control, scenario.truck),
        robust=bool(ctrl.get("robust", False)),
        predictor_kind=_PREDICTOR_NAMES[ctrl.get("predictor", "none")],
    )
    sim_kwargs = dict(scenario.sim)
    if dt is not None:
        sim_kwargs["dt"] = dt
    if t_end is not None:
        sim_kwargs["t_end"] = t_end
    if no_assert:
        sim_kwargs["assertions"] = False
    try:
        return SimConfig(controller=spec, truck=scenario.truck, lead=scenario.lead, **sim_kwargs)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc)) from exc


def _print_metrics(metrics: Metrics, stream=None) -> None:
    stream = stream if stream is not None else sys.stdout
    for key, value in metrics.as_dict().items():
        print(f"{key}={value!r}", file=stream)


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario) if args.scenario else parse_scenario({})
    config = build_config(scenario, args.controller, args.dt, args.t_end, args.no_assert)
    log, metrics = run(config)
    log.write_csv(args.out)
    _print_metrics(metrics)
    return 0


def cmd_compare(args) -> int:
    if len(args.controllers) < 2:
        raise ScenarioError("compare needs at least two controller names")
    scenario = load_scenario(args.scenario) if args.scenario else parse_scenario({})
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for name in args.controllers:
        config = build_config(scenario, name, args.dt, args.t_end, args.no_assert)
        log, metrics = run(config)
        log.write_csv(out_dir / f"{name}.csv")
        rows.append((name, metrics))
        print(f"[{name}]")
        _print_metrics(metrics)
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for name, metrics in rows:
            writer.writerow([name] + [repr(v) for v in metrics.as_dict().values()])
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delaysafe",
        description="Closed-loop simulator for safety-critical longitudinal control "
        "under input delay and input disturbance.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", help="scenario JSON file (defaults apply when omitted)")
        p.add_argument("--dt", type=float, help="override the sample period [s]")
        p.add_argument("--t-end", dest="t_end", type=float, help="override the horizon [s]")
        p.add_argument("--no-assert", action="store_true",
                       help="disable the per-step barrier-margin assertions")

    p_run = sub.add_parser("run", help="simulate one controller and write its trajectory CSV")
    common(p_run)
    p_run.add_argument("--controller", required=True, help="controller name from the scenario")
    p_run.add_argument("--out", required=True, help="output trajectory CSV path")
    p_run.set_defaults(handler=cmd_run)

    p_cmp = sub.add_parser("compare", help="simulate several controllers and write a summary")
    common(p_cmp)
    p_cmp.add_argument("--controllers", nargs="+", required=True,
                       help="two or more controller names from the scenario")
    p_cmp.add_argument("--out-dir", dest="out_dir", required=True,
                       help="directory for per-controller CSVs and summary.csv")
    p_cmp.set_defaults(handler=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MarginViolation as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
