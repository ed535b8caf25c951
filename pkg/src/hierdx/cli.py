"""Command-line entry points: validate, simulate, diagnose, estimate,
eval-id, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .device_simulator import inject_fault, parse_fault_spec, simulator_oracle
from .influence_diagram import diagram_from_json, enumerate_policies_evaluate, \
    evaluate, validate
from .knowledge_base import KbError, parse_kb, validate_kb
from .meta_level import choose_pathway
from .orchestrator import create_session, diagnosis_steps, run_diagnosis
from .session import DeviceOk, EngineConfig, OracleAborted, drive, \
    transcript_to_jsonl


class CliError(Exception):
    pass


def _load_kb(path: str):
    p = Path(path)
    if not p.exists():
        raise CliError(f"FileNotFound: {path}")
    try:
        return parse_kb(p.read_bytes())
    except KbError as e:
        raise CliError(f"invalid knowledge base: {e}") from e


def _parse_inputs(kb, text: str) -> dict[str, int]:
    bits = [b.strip() for b in text.split(",")]
    if len(bits) != len(kb.inputs) or any(b not in ("0", "1") for b in bits):
        raise CliError(
            f"--inputs needs {len(kb.inputs)} comma-separated bits for "
            f"{','.join(kb.inputs)}")
    return {net: int(b) for net, b in zip(kb.inputs, bits)}


def _parse_observed(kb, text: str) -> dict[str, int]:
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise CliError(f"bad --observed entry {part!r} (want NET=BIT)")
        net, _, bit = part.partition("=")
        if bit.strip() not in ("0", "1"):
            raise CliError(f"bad bit in --observed entry {part!r}")
        out[net.strip()] = int(bit)
    return out


def _config_from_args(args) -> EngineConfig:
    cfg = EngineConfig(seed=getattr(args, "seed", 0))
    spec = getattr(args, "repair_cost", "complete")
    if spec.startswith("heuristic:"):
        cfg.repair_technique = "heuristic"
        cfg.heuristic_horizon = int(spec.split(":", 1)[1])
    elif spec != "complete":
        raise CliError(f"bad --repair-cost {spec!r} (complete or heuristic:<h>)")
    if getattr(args, "max_switches", None) is not None:
        cfg.max_pathway_switches = args.max_switches
    return cfg


def _print_run(transcript, session) -> int:
    print(transcript_to_jsonl(transcript))
    print(json.dumps({"ledger": session.ledger.to_dict()}))
    return 0 if isinstance(transcript[-1], DeviceOk) else 1


def cmd_validate(args) -> int:
    kb = _load_kb(args.kb)
    diags = validate_kb(kb)
    for d in diags:
        print(str(d))
    if not diags:
        print("ok")
    return 0 if not diags else 1


def cmd_simulate(args) -> int:
    kb = _load_kb(args.kb)
    fault = parse_fault_spec(args.fault) if args.fault else None
    try:
        sim = inject_fault(kb, fault, seed=args.seed)
    except KbError as e:
        raise CliError(str(e)) from e
    inputs = _parse_inputs(kb, args.inputs)
    sim.current_inputs = dict(inputs)
    values = sim.evaluate(inputs)
    observations = {**inputs, **{o: values[o] for o in kb.outputs}}
    config = _config_from_args(args)
    oracle = simulator_oracle(sim)
    session = create_session(kb, observations, config, oracle)
    transcript = drive(diagnosis_steps(session), oracle)
    return _print_run(transcript, session)


def _interactive_oracle():
    def ask(prompt: str) -> bool:
        while True:
            try:
                reply = input(prompt + " [y/n/q] ").strip().lower()
            except EOFError as e:
                raise OracleAborted("input closed") from e
            if reply in ("y", "yes"):
                return True
            if reply in ("n", "no"):
                return False
            if reply in ("q", "quit"):
                raise OracleAborted("user quit")

    def answer(request) -> bool:
        p = request.payload
        if request.kind == "probe":
            return ask(f"Probe testpoint {p['testpoint']} (cost {p['cost']}). Ok?")
        action = p["action"]
        if action == "replace":
            return ask(f"Replace {p['target']} (cost {p['cost']}). Device ok now?")
        if action == "inspect_chip":
            return ask(f"Inspect chip {p['target']} (effort {p['cost']}) and remove "
                       f"any bridge found. Device ok now?")
        return ask("Do nothing. Device ok now?")

    return answer


def cmd_diagnose(args) -> int:
    kb = _load_kb(args.kb)
    inputs = _parse_inputs(kb, args.inputs)
    observed = _parse_observed(kb, args.observed)
    observations = {**inputs, **observed}
    config = _config_from_args(args)
    if not args.interactive:
        raise CliError("diagnose requires --interactive (use simulate otherwise)")
    oracle = _interactive_oracle()
    session = create_session(kb, observations, config, oracle)
    try:
        transcript = drive(diagnosis_steps(session), oracle)
    except OracleAborted as e:
        print(f"aborted: {e}", file=sys.stderr)
        return 1
    return _print_run(transcript, session)


def cmd_estimate(args) -> int:
    kb = _load_kb(args.kb)
    inputs = _parse_inputs(kb, args.inputs)
    observed = _parse_observed(kb, args.observed)
    config = _config_from_args(args)
    session = create_session(kb, {**inputs, **observed}, config)
    if session.no_fault:
        raise CliError("no fault observed; nothing to estimate")
    choose_pathway(session)
    print(json.dumps(session.last_estimates))
    return 0


def cmd_eval_id(args) -> int:
    p = Path(args.diagram)
    if not p.exists():
        raise CliError(f"FileNotFound: {args.diagram}")
    diagram = diagram_from_json(p.read_text())
    diags = validate(diagram)
    if diags:
        raise CliError("invalid diagram: " + "; ".join(str(d) for d in diags))
    if args.oracle:
        policy, cost = enumerate_policies_evaluate(diagram)
    else:
        policy, cost = evaluate(diagram)
    tables = {
        dec: {"|".join(cfg): alt for cfg, alt in table.items()}
        for dec, table in policy.tables.items()
    }
    print(json.dumps({"expected_cost": cost, "policy": tables}, indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hierdx",
        description="Decision-theoretic hierarchical diagnosis for "
                    "combinational circuits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a knowledge-base document")
    p.add_argument("kb")
    p.set_defaults(fn=cmd_validate)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kb", required=True)
    common.add_argument("--repair-cost", default="complete",
                        help="complete | heuristic:<horizon>")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-switches", type=int, default=None)

    p = sub.add_parser("simulate", parents=[common],
                       help="run a full diagnosis against a simulated fault")
    p.add_argument("--fault", help="functional:<el>:<sa0|sa1> or "
                                   "bridge:<chip>:<a>-<b>:<and|or>")
    p.add_argument("--inputs", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("diagnose", parents=[common],
                       help="interactive diagnosis with a human in the loop")
    p.add_argument("--inputs", required=True)
    p.add_argument("--observed", required=True, help="NET=BIT,NET=BIT for outputs")
    p.add_argument("--interactive", action="store_true")
    p.set_defaults(fn=cmd_diagnose)

    p = sub.add_parser("estimate", parents=[common],
                       help="print the meta-level lookahead estimates")
    p.add_argument("--inputs", required=True)
    p.add_argument("--observed", required=True)
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("eval-id", help="evaluate a standalone diagram file")
    p.add_argument("diagram")
    p.add_argument("--oracle", action="store_true",
                   help="use exhaustive policy enumeration")
    p.set_defaults(fn=cmd_eval_id)

    p = sub.add_parser("serve", help="start the local HTTP session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8157)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        print(str(e), file=sys.stderr)
        return 1
    except KbError as e:
        print(str(e), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
