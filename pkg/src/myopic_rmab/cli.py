"""Command-line front end: ``myopic-rmab {check,solve,simulate,verify,sweep} CONFIG``.

Exit codes: 0 ok, 2 config/usage error, 3 condition fails, 4 indeterminate
(custom reward or not applicable), 5 planner cap exceeded, 6 verification
failure.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import itertools
import json
import math
import sys
from datetime import datetime, timezone

from . import __version__
from .conditions import (
    FAILS, HOLDS, iid_special_case_check, theorem1_beta_boundary, theorem1_check,
)
from .config import (
    ConfigError, InstanceGenerator, apply_overrides, instance_docs, load_config, parse_instance,
    parse_policy,
)
from .planner import NodeCapExceeded, myopic_value, optimal_value, policy_value
from .policy import RandomPolicy, myopic_action
from .simulator import agreement_z, simulate, write_jsonl
from .verify import SUITES, run_suite

EXIT_OK, EXIT_USAGE, EXIT_FAILS, EXIT_INDETERMINATE, EXIT_CAP, EXIT_VERIFY = 0, 2, 3, 4, 5, 6

CSV_VERSION = "myopic-rmab csv v1"
SOLVE_COLUMNS = [
    "instance-id", "N", "k", "T", "beta", "epsilon", "delta", "delta_p_max", "reward_kind",
    "theorem1_holds", "theorem2_holds", "V_optimal", "V_myopic", "gap", "node_count",
    "optimal_first_actions", "myopic_first_action",
]
SIM_COLUMNS = [
    "instance-id", "fidelity", "policy", "episodes", "seed", "mean_reward", "std_error",
    "mean_success", "success_std_error", "collision_rate", "ack_zscore", "collision_zscore",
    "planner_value", "z_vs_planner",
]
VERIFY_COLUMNS = [
    "suite", "trial", "N", "k", "T", "beta", "epsilon", "delta", "delta_p_max", "reward_kind",
    "case", "value", "lower", "upper", "margin", "passed",
]


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.17g}"
    return str(value)


def fmt_action(action) -> str:
    return ";".join(str(i) for i in action)


class CsvOut:
    """CSV writer with a versioned comment preamble; only comment lines carry timestamps."""

    def __init__(self, stream, columns, comments=()):
        self.stream = stream
        stream.write(f"# {CSV_VERSION}\n")
        stream.write(f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
        for c in comments:
            self.comment(c)
        self.writer = csv.writer(stream, lineterminator="\n")
        self.writer.writerow(columns)
        self.columns = columns

    def comment(self, text):
        self.stream.write(f"# {text}\n")

    def row(self, values: dict):
        self.writer.writerow([fmt(values[c]) for c in self.columns])


def _open_out(path):
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", newline="")


def solve_row(inst, ident: str) -> dict:
    rep = theorem1_check(inst, axiom_samples=2000)
    opt = optimal_value(inst)
    vm = myopic_value(inst)
    return {
        "instance-id": ident, "N": inst.N, "k": inst.k, "T": inst.T, "beta": inst.beta,
        "epsilon": inst.sensing.epsilon, "delta": inst.sensing.delta,
        "delta_p_max": rep.quantities.delta_p_max, "reward_kind": inst.reward.label,
        "theorem1_holds": rep.theorem1_holds, "theorem2_holds": rep.theorem2_holds,
        "V_optimal": opt.value, "V_myopic": vm, "gap": opt.value - vm, "node_count": opt.node_count,
        "optimal_first_actions": "|".join(fmt_action(a) for a in opt.first_actions),
        "myopic_first_action": fmt_action(myopic_action(inst.belief0, inst.channels, inst.reward, inst.k)),
    }


def cmd_check(doc, args) -> int:
    inst = parse_instance(doc)
    rep = theorem1_check(inst)
    out = rep.to_dict()
    out["iid_special_case"] = iid_special_case_check(inst)
    text = json.dumps(out, indent=2, default=float)
    with _open_out(args.out) as fh:
        fh.write(text + "\n")
    if rep.verdict == HOLDS:
        return EXIT_OK
    return EXIT_FAILS if rep.verdict == FAILS else EXIT_INDETERMINATE


def _instances(doc):
    """Parse every instance up front so a bad entry fails before any output is written."""
    out = []
    for i, d in enumerate(instance_docs(doc)):
        inst = parse_instance(d, f"instances[{i}]." if "instances" in doc else "")
        out.append((inst.name or f"inst-{i:04d}", inst, d))
    return out


def cmd_solve(doc, args) -> int:
    rows = [solve_row(inst, ident) for ident, inst, _ in _instances(doc)]
    with _open_out(args.out) as fh:
        out = CsvOut(fh, SOLVE_COLUMNS)
        for row in rows:
            out.row(row)
    return EXIT_OK


def cmd_simulate(doc, args) -> int:
    episodes = int(doc.get("episodes", 10_000))
    seed = int(doc.get("seed", 0))
    fidelity = doc.get("fidelity", "both")
    fidelities = ["belief", "channel"] if fidelity == "both" else [fidelity]
    log_episodes = int(doc.get("log_episodes", 0 if args.log is None else 1))
    if episodes < 1:
        raise ConfigError(f"episodes: expected >= 1, got {episodes}")
    bad = [f for f in fidelities if f not in ("belief", "channel")]
    if bad:
        raise ConfigError(f"fidelity: expected belief, channel or both, got {fidelity!r}")
    jobs = [(ident, inst, parse_policy(d.get("policy"), inst)) for ident, inst, d in _instances(doc)]
    rows, all_logs = [], []
    for ident, inst, policy in jobs:
        exact = None
        if not isinstance(policy, RandomPolicy):
            try:
                exact = policy_value(inst, policy)
            except NodeCapExceeded:
                exact = None
        for fid in fidelities:
            stats, logs = simulate(inst, policy, episodes, seed, fid, log_episodes)
            all_logs += [{"instance": ident, "fidelity": fid} | r for r in logs]
            rows.append(stats.to_dict() | {
                "instance-id": ident, "policy": policy.name,
                "planner_value": math.nan if exact is None else exact,
                "z_vs_planner": math.nan if exact is None else agreement_z(stats, exact=exact),
            })
    with _open_out(args.out) as fh:
        out = CsvOut(fh, SIM_COLUMNS, [f"seed={seed}"])
        for row in rows:
            out.row(row)
    if args.log:
        write_jsonl(all_logs, args.log)
    return EXIT_OK


def cmd_verify(doc, args) -> int:
    vdoc = doc.get("verify", doc)
    suites = args.suite or vdoc.get("suites")
    if not suites:
        raise ConfigError("verify: no suites given (use --suite or verify.suites)")
    unknown = [s for s in suites if s not in SUITES]
    if unknown:
        raise ConfigError(f"verify.suites: unknown {unknown}; expected {list(SUITES)}")
    seed = int(vdoc.get("seed", 0))
    trials = vdoc.get("trials", {})
    gen_doc = vdoc.get("generator")
    failures = []
    with _open_out(args.out) as fh:
        out = CsvOut(fh, VERIFY_COLUMNS, [f"seed={seed}"])
        for suite in suites:
            kw = {}
            gen = InstanceGenerator.from_doc(gen_doc) if gen_doc is not None else None
            if suite == "optimality" and "rewards" in vdoc:
                kw["rewards"] = tuple(vdoc["rewards"])
            n = trials.get(suite) if isinstance(trials, dict) else trials
            count = bad = 0
            for res in run_suite(suite, seed, n, gen, **kw) if suite != "axioms" else run_suite(suite, seed):
                out.row(res.row())
                count += 1
                if not res.passed:
                    bad += 1
                    failures.append(res)
            out.comment(f"suite {suite}: {count} trials, {bad} failures")
    for res in failures:
        dump = {"suite": res.suite, "trial": res.trial, "seed": seed, "case": res.case,
                "value": res.value, "instance": res.instance, "detail": res.detail}
        print("FAILED " + json.dumps(dump, default=str), file=sys.stderr)
    return EXIT_VERIFY if failures else EXIT_OK


def _scale_gap(channels, d):
    out = []
    for i, (p01, p11) in enumerate(channels):
        mid = 0.5 * (p01 + p11)
        lo, hi = mid - 0.5 * d, mid + 0.5 * d
        if lo < 0.0 or hi > 1.0:
            raise ConfigError(f"sweep.delta_p={d}: channel {i} with midpoint {mid} leaves [0, 1]")
        out.append([lo, hi])
    return out


SWEEP_KEYS = ("beta", "epsilon", "delta", "delta_p", "T", "k")


def cmd_sweep(doc, args) -> int:
    grids = doc.get("sweep")
    if not isinstance(grids, dict) or not grids:
        raise ConfigError("sweep: expected an object of grids, e.g. {\"beta\": [0.2, 0.5]}")
    bad = [k for k in grids if k not in SWEEP_KEYS]
    if bad:
        raise ConfigError(f"sweep: unsupported grid keys {bad}; expected {list(SWEEP_KEYS)}")
    keys = [k for k in SWEEP_KEYS if k in grids]
    for k in keys:
        if not isinstance(grids[k], list) or not grids[k]:
            raise ConfigError(f"sweep.{k}: expected a non-empty list")
    base = {k: v for k, v in doc.items() if k != "sweep"}
    insts = []
    for n, combo in enumerate(itertools.product(*(grids[k] for k in keys))):
        d = dict(base)
        for key, value in zip(keys, combo):
            if key == "delta_p":
                d["channels"] = _scale_gap(base.get("channels", []), float(value))
            else:
                d[key] = value
        insts.append(parse_instance(d, f"sweep[{n}]."))
    with _open_out(args.out) as fh:
        out = CsvOut(fh, SOLVE_COLUMNS, [f"grid order: {', '.join(keys)}"])
        for n, inst in enumerate(insts):
            out.row(solve_row(inst, f"sweep-{n:04d}"))
            if doc.get("locate_beta_boundary"):
                out.comment(f"sweep-{n:04d} theorem1 beta boundary {fmt(theorem1_beta_boundary(inst))}")
    return EXIT_OK


COMMANDS = {"check": cmd_check, "solve": cmd_solve, "simulate": cmd_simulate,
            "verify": cmd_verify, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="myopic-rmab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config", help="JSON config document")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field (dotted path; value parsed as JSON)")
        sp.add_argument("-o", "--out", help="output file (default stdout)")
        if name == "simulate":
            sp.add_argument("--log", help="write per-slot episode records as JSON lines")
        if name == "verify":
            sp.add_argument("--suite", action="append", choices=SUITES,
                            help="suite to run (repeatable); overrides verify.suites")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = apply_overrides(load_config(args.config), args.set)
        return COMMANDS[args.command](doc, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NodeCapExceeded as exc:
        print(f"planner cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
