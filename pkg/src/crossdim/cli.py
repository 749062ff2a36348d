"""Scenario-driven command line front end.

    omega <command> --config <path> --out <dir> [--seed N] [--step H]

Commands: simulate, embed, dwell, ctrb, obs, chain, reduce, approx,
reduce-vec, lattice.  Exit codes: 0 success, 2 validation error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import analysis
from .cdspace import build_lattice, canonicalize, project, v_dist, v_norm
from .config import Scenario, load_scenario
from .dkstp import bridge
from .dynamics import dwell_bound, embed_common, simulate
from .errors import ConfigError, NumericFailure
from .export import (
    write_error_csv,
    write_events_csv,
    write_json,
    write_outputs_csv,
    write_trajectory_csv,
)


def _experiment_block(scenario: Scenario, key: str) -> dict:
    block = scenario.experiment.get(key)
    if block is None:
        raise ConfigError(f"experiment.{key}: required by this command but missing")
    if not isinstance(block, dict):
        raise ConfigError(f"experiment.{key}: expected an object")
    return block


def cmd_simulate(scenario: Scenario, out: str) -> int:
    traj = simulate(
        scenario.system,
        scenario.signal,
        scenario.x0,
        scenario.step,
        disturbance=scenario.disturbance,
    )
    write_trajectory_csv(traj, os.path.join(out, "trajectory.csv"))
    write_events_csv(traj.events, os.path.join(out, "events.csv"))
    if traj.outputs is not None:
        write_outputs_csv(traj, os.path.join(out, "outputs.csv"))
    return 0


def cmd_embed(scenario: Scenario, out: str) -> int:
    embedded = embed_common(scenario.system)
    common_dim = embedded.modes[0].dim
    original = simulate(
        scenario.system, scenario.signal, scenario.x0, scenario.step,
        disturbance=scenario.disturbance,
    )
    lifted_x0 = project(scenario.x0, common_dim)
    mirrored = simulate(
        embedded, scenario.signal, lifted_x0, scenario.step,
        disturbance=scenario.disturbance,
    )
    gap = max(
        v_dist(a, b) for a, b in zip(original.states, mirrored.states)
    )
    dump = {
        "common_dim": common_dim,
        "modes": [
            {
                "label": m.label,
                "dim": m.dim,
                "linear": m.is_linear,
                "A": m.drift if m.is_linear else None,
            }
            for m in embedded.modes
        ],
        "transitions": [
            {"from": i, "to": j, "W": tm.matrix, "lipschitz": tm.lipschitz}
            for (i, j), tm in sorted(embedded.transitions.items())
        ]
        if isinstance(embedded.transitions, dict)
        else "nearest",
    }
    report = {
        "max_equivalence_gap": gap,
        "samples_compared": len(original.states),
        "events": [
            {"t": ev.time, "gap": ev.gap, "amplitude": ev.amplitude}
            for ev in mirrored.events
        ],
    }
    write_json(dump, os.path.join(out, "embedded_system.json"))
    write_json(report, os.path.join(out, "equivalence_report.json"))
    write_trajectory_csv(mirrored, os.path.join(out, "embedded_trajectory.csv"))
    return 0


def cmd_dwell(scenario: Scenario, out: str) -> int:
    block = scenario.experiment.get("dwell", {})
    gamma = float(block.get("gamma", 0.03))
    lipschitz = block.get("lipschitz")
    delta = dwell_bound(
        scenario.system,
        gamma,
        lipschitz=None if lipschitz is None else float(lipschitz),
    )
    hurwitz = {}
    for m in scenario.system.modes:
        eig = np.linalg.eigvals(m.drift) if m.is_linear else None
        hurwitz[m.label] = bool(eig is not None and eig.real.max() < 0)
    write_json(
        {
            "gamma": gamma,
            "lipschitz_override": lipschitz,
            "dwell": delta,
            "hurwitz": hurwitz,
        },
        os.path.join(out, "dwell_report.json"),
    )
    return 0


def cmd_ctrb(scenario: Scenario, out: str) -> int:
    reports = []
    for m in scenario.system.modes:
        rep = analysis.controllability_report(m)
        reports.append(
            {
                "label": rep.label,
                "dim": rep.dim,
                "kalman_rank": rep.kalman_rank,
                "fully_controllable": rep.fully_controllable,
            }
        )
    write_json(reports, os.path.join(out, "ctrb_report.json"))
    return 0


def cmd_obs(scenario: Scenario, out: str) -> int:
    output = scenario.system.output
    if output is None or output.matrix is None:
        raise ConfigError("output.H: the obs command needs a linear output map")
    reports = []
    for m in scenario.system.modes:
        if not m.is_linear:
            raise ConfigError(f"mode {m.label!r}: obs command needs linear modes")
        C = output.matrix @ bridge(output.q, m.dim)
        rank = analysis.obs_rank(m.drift, C)
        reports.append(
            {
                "label": m.label,
                "dim": m.dim,
                "obs_rank": rank,
                "fully_observable": rank == m.dim,
            }
        )
    write_json(reports, os.path.join(out, "obs_report.json"))
    return 0


def cmd_chain(scenario: Scenario, out: str) -> int:
    block = _experiment_block(scenario, "chain")
    start = int(block.get("start", 0))
    target = int(block.get("target", len(scenario.system.modes) - 1))
    chain = analysis.reachability_chain(scenario.system, start, target)
    write_json(
        {
            "start": start,
            "target": target,
            "chain": chain,
            "labels": None
            if chain is None
            else [scenario.system.modes[i].label for i in chain],
        },
        os.path.join(out, "chain_report.json"),
    )
    return 0


def _approx_cases(block: dict):
    cases = block.get("cases")
    if not isinstance(cases, list) or not cases:
        raise ConfigError("experiment.approx.cases: expected a nonempty list")
    for k, case in enumerate(cases):
        if not isinstance(case, dict):
            raise ConfigError(f"experiment.approx.cases[{k}]: expected an object")
        for key in ("label", "A", "x0", "m_values", "times"):
            if key not in case:
                raise ConfigError(f"experiment.approx.cases[{k}].{key}: missing")
        yield case


def _case_times(case):
    times = case["times"]
    if isinstance(times, dict):
        return np.linspace(
            float(times["from"]), float(times["to"]), int(times["count"])
        )
    return np.asarray([float(t) for t in times])


def cmd_approx(scenario: Scenario, out: str) -> int:
    block = _experiment_block(scenario, "approx")
    for case in _approx_cases(block):
        A = np.asarray(case["A"], dtype=float)
        x0 = np.asarray(case["x0"], dtype=float)
        times = _case_times(case)
        rows = []
        for m in case["m_values"]:
            series = analysis.approx_error(A, x0, int(m), times)
            rows.extend(
                (t, int(m), e) for t, e in zip(series.times, series.values)
            )
        write_error_csv(rows, os.path.join(out, f"error_{case['label']}.csv"))
    return 0


def cmd_reduce(scenario: Scenario, out: str) -> int:
    block = _experiment_block(scenario, "reduce")
    if "A" not in block or "m_values" not in block:
        raise ConfigError("experiment.reduce: needs 'A' and 'm_values'")
    A = np.asarray(block["A"], dtype=float)
    B = None if "B" not in block else np.asarray(block["B"], dtype=float)
    C = None if "C" not in block else np.asarray(block["C"], dtype=float)
    models = []
    for m in block["m_values"]:
        red = analysis.reduce_model(A, B, C, int(m))
        models.append(
            {
                "m": int(m),
                "A_pi": red.A_pi,
                "B_pi": red.B_pi,
                "C_pi": red.C_pi,
            }
        )
    write_json({"n": A.shape[0], "models": models}, os.path.join(out, "reduced_models.json"))
    if "x0" in block and "times" in block:
        x0 = np.asarray(block["x0"], dtype=float)
        times = _case_times(block)
        rows = []
        for m in block["m_values"]:
            series = analysis.approx_error(A, x0, int(m), times)
            rows.extend((t, int(m), e) for t, e in zip(series.times, series.values))
        write_error_csv(rows, os.path.join(out, "reduce_error.csv"))
    return 0


def cmd_reduce_vec(scenario: Scenario, out: str) -> int:
    block = _experiment_block(scenario, "vectors")
    ops = block.get("ops")
    if not isinstance(ops, list) or not ops:
        raise ConfigError("experiment.vectors.ops: expected a nonempty list")
    results = []
    for k, op in enumerate(ops):
        path = f"experiment.vectors.ops[{k}]"
        if not isinstance(op, dict) or "op" not in op:
            raise ConfigError(f"{path}: expected an object with an 'op' field")
        kind = op["op"]
        if kind == "canonicalize":
            vec = canonicalize(op["x"], float(op.get("tol", 1e-9)))
            results.append({"op": kind, "result": vec.entries, "dim": vec.dim})
        elif kind == "distance":
            results.append({"op": kind, "result": v_dist(op["x"], op["y"])})
        elif kind == "norm":
            results.append({"op": kind, "result": v_norm(op["x"])})
        elif kind == "project":
            results.append({"op": kind, "result": project(op["x"], int(op["m"]))})
        else:
            raise ConfigError(f"{path}.op: unknown operation {kind!r}")
    write_json(results, os.path.join(out, "vector_ops.json"))
    return 0


def cmd_lattice(scenario: Scenario, out: str) -> int:
    block = scenario.experiment.get("lattice", {})
    dims = block.get("dims", [m.dim for m in scenario.system.modes])
    lattice = build_lattice(dims)
    write_json(
        {
            "generators": sorted(int(d) for d in dims),
            "nodes": sorted(lattice.dims),
            "edges": lattice.hasse_edges(),
        },
        os.path.join(out, "lattice.json"),
    )
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "embed": cmd_embed,
    "dwell": cmd_dwell,
    "ctrb": cmd_ctrb,
    "obs": cmd_obs,
    "chain": cmd_chain,
    "reduce": cmd_reduce,
    "approx": cmd_approx,
    "reduce-vec": cmd_reduce_vec,
    "lattice": cmd_lattice,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omega",
        description="Simulate and analyze dimension-varying systems from scenario files.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="scenario JSON file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the signal seed")
    parser.add_argument("--step", type=float, default=None, help="override the step size")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.config, seed=args.seed, step=args.step)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](scenario, args.out)
    except NumericFailure as exc:
        print(f"omega: numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"omega: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
