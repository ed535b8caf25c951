#!/usr/bin/env python3
"""Walk the worked circuit example end to end: meta-level estimates, a
functional fault run, and a bridge fault run, printing transcripts and
ledgers."""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hierdx.device_simulator import FaultSpec, inject_fault, simulator_oracle
from hierdx.knowledge_base import parse_kb
from hierdx.meta_level import choose_pathway
from hierdx.orchestrator import create_session, diagnosis_steps
from hierdx.session import drive, transcript_to_jsonl

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "paper_y1.json"
VEC = {"X1": 0, "X2": 1, "X3": 1, "X4": 1, "X5": 1}


def run(kb, fault, title):
    print(f"\n=== {title}: {fault.describe()} ===")
    sim = inject_fault(kb, fault)
    vec = dict(VEC)
    if sim.device_ok([vec]):  # masked on the canonical vector: expose it
        vec = next(v for v in sim.default_vectors() if not sim.device_ok([v]))
    sim.current_inputs = dict(vec)
    vals = sim.evaluate(vec)
    obs = {**vec, **{o: vals[o] for o in kb.outputs}}
    session = create_session(kb, obs, oracle=simulator_oracle(sim))
    choose_pathway(session)
    print("meta estimates:", json.dumps(session.last_estimates))
    transcript = drive(diagnosis_steps(session), session.oracle)
    print(transcript_to_jsonl(transcript))
    print("ledger:", json.dumps(session.ledger.to_dict()))


def main():
    kb = parse_kb(FIXTURE.read_bytes())
    print(f"device {kb.root}: correct outputs on (0,1,1,1,1) are (Y1,Y2)=(0,1)")
    run(kb, FaultSpec.functional("G1", 1), "functional fault")
    run(kb, FaultSpec.functional("OR1", 1), "functional fault needing restarts")
    run(kb, FaultSpec.bridge("CHIP1", (2, 3), "and"), "bridge fault")


if __name__ == "__main__":
    main()
