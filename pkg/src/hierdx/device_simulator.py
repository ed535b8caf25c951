"""Desk-scale device stand-in: the golden circuit plus one injected fault.

Answers probes with an idealized ok/not-ok verdict (exhaustive cone
equivalence against the golden circuit), applies treatments, and checks
device I/O over input vectors. Bridge faults join two nets as wired-AND or
wired-OR; values are relaxed to a fixpoint so feedback introduced by a
bridge still yields a deterministic reading.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .knowledge_base import (
    KbError,
    KnowledgeBase,
    MissingInput,
    UnknownElement,
    eval_gate,
)

MAX_CONE_INPUTS = 20
EXHAUSTIVE_INPUT_LIMIT = 12
SAMPLED_VECTORS = 256


class UnknownTestpoint(KbError):
    pass


class UnknownChipPair(KbError):
    pass


class ConeTooWide(KbError):
    pass


@dataclass(frozen=True)
class FaultSpec:
    kind: str  # "functional" | "bridge"
    component: str | None = None
    stuck_value: int | None = None
    chip: str | None = None
    pair: tuple[int, int] | None = None
    wiring: str = "and"  # "and" | "or"

    @staticmethod
    def functional(component: str, stuck_value: int) -> "FaultSpec":
        return FaultSpec("functional", component=component, stuck_value=stuck_value)

    @staticmethod
    def bridge(chip: str, pair: tuple[int, int], wiring: str = "and") -> "FaultSpec":
        return FaultSpec("bridge", chip=chip, pair=tuple(pair), wiring=wiring)

    def describe(self) -> str:
        if self.kind == "functional":
            return f"functional:{self.component}:sa{self.stuck_value}"
        return f"bridge:{self.chip}:{self.pair[0]}-{self.pair[1]}:{self.wiring}"


def parse_fault_spec(text: str) -> FaultSpec:
    """CLI syntax: functional:<element>:<sa0|sa1> or
    bridge:<chip>:<pinA>-<pinB>:<and|or>."""
    parts = text.split(":")
    if parts[0] == "functional" and len(parts) == 3 and parts[2] in ("sa0", "sa1"):
        return FaultSpec.functional(parts[1], int(parts[2][2]))
    if parts[0] == "bridge" and len(parts) in (3, 4):
        pins = parts[2].split("-")
        if len(pins) == 2 and all(p.isdigit() for p in pins):
            wiring = parts[3] if len(parts) == 4 else "and"
            if wiring in ("and", "or"):
                return FaultSpec.bridge(parts[1], (int(pins[0]), int(pins[1])), wiring)
    raise ValueError(f"bad fault spec {text!r}")


@dataclass(frozen=True)
class ProbeResult:
    testpoint: str
    measured_bit: int
    ok_status: str  # "ok" | "not_ok"
    cost_charged: float


@dataclass
class DeviceSim:
    kb: KnowledgeBase
    fault: FaultSpec | None = None
    seed: int = 0
    cumulative_probe_cost: float = 0.0
    charges: dict = field(default_factory=lambda: {"probes": 0.0, "treatments": 0.0,
                                                   "effort": 0.0})
    repair_log: list = field(default_factory=list)
    current_inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.current_inputs:
            self.current_inputs = {n: 0 for n in self.kb.inputs}

    # --- evaluation ----------------------------------------------------------

    def _bridge_nets(self) -> tuple[str, str] | None:
        f = self.fault
        if f is None or f.kind != "bridge":
            return None
        return self.kb.chips[f.chip].pair_nets(f.pair)

    def evaluate(self, inputs: dict[str, int]) -> dict[str, int]:
        """Net values of the faulty circuit under one input assignment."""
        for net in self.kb.inputs:
            if net not in inputs:
                raise MissingInput(net)
        kb = self.kb
        f = self.fault
        stuck = f.component if f is not None and f.kind == "functional" else None

        def forward(effective_override: dict[str, int]) -> dict[str, int]:
            # topological pass; bridged nets are read at their overridden value
            values = {n: int(inputs[n]) for n in kb.inputs}
            values.update(effective_override)
            for comp in kb._topo:
                b = kb.behaviors[comp]
                v = eval_gate(b.gate, tuple(values[n] for n in b.inputs))
                if comp == stuck:
                    v = f.stuck_value
                if b.output not in effective_override:
                    values[b.output] = v
                values.setdefault("__driven_" + b.output, v)
            return values

        bridge = self._bridge_nets()
        if bridge is None:
            vals = forward({})
            return {n: v for n, v in vals.items() if not n.startswith("__driven_")}

        # relax the joined value to a fixpoint; capped so feedback introduced
        # by the bridge still yields a deterministic reading
        a, bnet = bridge
        joined = None
        for _ in range(len(kb.behaviors) + 2):
            override = {} if joined is None else {a: joined, bnet: joined}
            vals = forward(override)
            da = vals.get("__driven_" + a, int(inputs.get(a, 0)))
            db = vals.get("__driven_" + bnet, int(inputs.get(bnet, 0)))
            new_joined = (da & db) if f.wiring == "and" else (da | db)
            if new_joined == joined:
                break
            joined = new_joined
        vals = forward({a: joined, bnet: joined})
        return {n: v for n, v in vals.items() if not n.startswith("__driven_")}

    def _faulty_cone_nets(self, net: str) -> set[str]:
        cone = set(self.kb.cone_nets(net))
        bridge = self._bridge_nets()
        if bridge is not None and (bridge[0] in cone or bridge[1] in cone):
            cone |= self.kb.cone_nets(bridge[0])
            cone |= self.kb.cone_nets(bridge[1])
        return cone

    # --- operations ----------------------------------------------------------

    def probe(self, testpoint: str) -> ProbeResult:
        """ok iff the faulty cone feeding the testpoint computes the same
        function as the golden cone over every cone-input assignment."""
        tp = self.kb.testpoints.get(testpoint)
        if tp is None:
            raise UnknownTestpoint(testpoint)
        cone = self._faulty_cone_nets(tp.net)
        cone_inputs = [n for n in self.kb.inputs if n in cone]
        if len(cone_inputs) > MAX_CONE_INPUTS:
            raise ConeTooWide(f"{testpoint}: {len(cone_inputs)} inputs")
        ok = True
        base = {n: 0 for n in self.kb.inputs}
        for bits in itertools.product((0, 1), repeat=len(cone_inputs)):
            assign = dict(base)
            assign.update(zip(cone_inputs, bits))
            if self.evaluate(assign)[tp.net] != _golden(self.kb, assign)[tp.net]:
                ok = False
                break
        measured = self.evaluate(self.current_inputs)[tp.net]
        self.cumulative_probe_cost += tp.probe_cost
        self.charges["probes"] += tp.probe_cost
        return ProbeResult(testpoint, measured, "ok" if ok else "not_ok", tp.probe_cost)

    def apply_treatment(self, kind: str, target: str | None = None,
                        pair: tuple[int, int] | None = None) -> "DeviceSim":
        """nothing | replace(element) | remove_bridge(chip[, pair])."""
        if kind == "nothing":
            self.repair_log.append(("nothing", None))
            return self
        if kind == "replace":
            node = self.kb.require(target)
            cleared = (
                self.fault is not None
                and self.fault.kind == "functional"
                and self.fault.component in self.kb.components_under(target)
            )
            if cleared:
                self.fault = None
            self.charges["treatments"] += node.replacement_cost
            self.repair_log.append(("replace", target))
            return self
        if kind == "remove_bridge":
            if target not in self.kb.chips:
                raise UnknownElement(target)
            matches = (
                self.fault is not None
                and self.fault.kind == "bridge"
                and self.fault.chip == target
                and (pair is None or tuple(pair) == self.fault.pair)
            )
            if matches:
                self.fault = None
            self.charges["treatments"] += self.kb.cost_model.bridge_repair_cost
            self.repair_log.append(("remove_bridge", target))
            return self
        raise ValueError(f"unknown treatment {kind!r}")

    def inspect_chip(self, chip: str) -> tuple[bool, tuple[int, int] | None]:
        """Physically inspect one chip: charges effort and reports whether the
        injected bridge sits on one of its adjacent pin pairs."""
        if chip not in self.kb.chips:
            raise UnknownElement(chip)
        self.charges["effort"] += self.kb.cost_model.chip_inspect_effort
        if (self.fault is not None and self.fault.kind == "bridge"
                and self.fault.chip == chip):
            return True, self.fault.pair
        return False, None

    def device_ok(self, input_vectors: list[dict[str, int]] | None = None) -> bool:
        """True iff faulty outputs match golden outputs on all vectors.

        Default vector set: exhaustive up to 2^12 inputs, else 256 seeded
        random vectors (seeded for reproducibility).
        """
        vectors = input_vectors if input_vectors is not None else self.default_vectors()
        for vec in vectors:
            for net in self.kb.inputs:
                if net not in vec:
                    raise MissingInput(net)
            faulty = self.evaluate(vec)
            golden = _golden(self.kb, vec)
            if any(faulty[o] != golden[o] for o in self.kb.outputs):
                return False
        return True

    def default_vectors(self) -> list[dict[str, int]]:
        names = list(self.kb.inputs)
        if len(names) <= EXHAUSTIVE_INPUT_LIMIT:
            return [dict(zip(names, bits))
                    for bits in itertools.product((0, 1), repeat=len(names))]
        rng = random.Random(self.seed)
        return [{n: rng.randint(0, 1) for n in names} for _ in range(SAMPLED_VECTORS)]


def _golden(kb: KnowledgeBase, inputs: dict[str, int]) -> dict[str, int]:
    values = {net: int(inputs[net]) for net in kb.inputs}
    for comp in kb._topo:
        b = kb.behaviors[comp]
        values[b.output] = eval_gate(b.gate, tuple(values[n] for n in b.inputs))
    return values


def inject_fault(kb: KnowledgeBase, fault: FaultSpec | None, seed: int = 0) -> DeviceSim:
    """Build a simulator for the given fault, checking the fault references."""
    if fault is not None:
        if fault.kind == "functional":
            node = kb.require(fault.component)
            if node.kind != "component":
                raise UnknownElement(f"{fault.component} is not a component")
            if fault.stuck_value not in (0, 1):
                raise ValueError("stuck value must be 0 or 1")
        else:
            chip = kb.chips.get(fault.chip)
            if chip is None:
                raise UnknownElement(fault.chip)
            if tuple(fault.pair) not in {tuple(p) for p in chip.adjacent_pairs()}:
                raise UnknownChipPair(f"{fault.chip}:{fault.pair}")
    return DeviceSim(kb, fault, seed=seed)


def simulator_oracle(sim: DeviceSim):
    """Answer engine OracleRequests from the simulator: probes return the
    ok verdict; apply_and_check performs the action (replace, nothing, or
    chip inspection with bridge removal on a find) and reports device I/O."""

    def answer(request) -> bool:
        p = request.payload
        if request.kind == "probe":
            return sim.probe(p["testpoint"]).ok_status == "ok"
        if request.kind == "apply_and_check":
            action = p["action"]
            if action == "replace":
                sim.apply_treatment("replace", p["target"])
            elif action == "inspect_chip":
                found, pair = sim.inspect_chip(p["target"])
                if found:
                    sim.apply_treatment("remove_bridge", p["target"], pair)
            elif action != "nothing":
                raise ValueError(f"unknown action {action!r}")
            return sim.device_ok()
        raise ValueError(f"unknown request {request.kind!r}")

    return answer
