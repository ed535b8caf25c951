#!/usr/bin/env python3
"""Sweep every injectable single fault on the example device and tabulate
the realized diagnosis cost per fault, plus the prior-weighted expectation."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hierdx.device_simulator import FaultSpec, inject_fault, simulator_oracle
from hierdx.knowledge_base import parse_kb
from hierdx.orchestrator import create_session, diagnosis_steps
from hierdx.session import DeviceOk, drive

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "paper_y1.json"


def run_one(kb, fault):
    sim = inject_fault(kb, fault)
    vec = next(v for v in sim.default_vectors() if not sim.device_ok([v]))
    sim.current_inputs = dict(vec)
    vals = sim.evaluate(vec)
    obs = {**vec, **{o: vals[o] for o in kb.outputs}}
    session = create_session(kb, obs, oracle=simulator_oracle(sim))
    transcript = drive(diagnosis_steps(session), session.oracle)
    assert isinstance(transcript[-1], DeviceOk), fault.describe()
    return session.ledger


def main():
    kb = parse_kb(FIXTURE.read_bytes())
    print(f"{'fault':32s} {'probes':>7s} {'treat':>7s} {'insp':>6s} "
          f"{'effort':>7s} {'total':>7s}")
    weighted = 0.0
    total_weight = 0.0
    for comp in kb.behaviors:
        for stuck in (0, 1):
            fault = FaultSpec.functional(comp, stuck)
            ledger = run_one(kb, fault)
            w = kb.nodes[comp].failure_prior / 2
            weighted += w * ledger.total()
            total_weight += w
            print(f"{fault.describe():32s} {ledger.probes:7.1f} "
                  f"{ledger.treatments:7.1f} {ledger.inspections:6.1f} "
                  f"{ledger.effort:7.1f} {ledger.total():7.1f}")
    for chip in kb.chips.values():
        for pair in chip.adjacent_pairs():
            fault = FaultSpec.bridge(chip.id, pair, "and")
            ledger = run_one(kb, fault)
            print(f"{fault.describe():32s} {ledger.probes:7.1f} "
                  f"{ledger.treatments:7.1f} {ledger.inspections:6.1f} "
                  f"{ledger.effort:7.1f} {ledger.total():7.1f}")
    print(f"\nprior-weighted expected cost over functional faults: "
          f"{weighted / total_weight:.3f}")


if __name__ == "__main__":
    main()
