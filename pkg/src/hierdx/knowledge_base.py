"""Device knowledge base: part-of hierarchy, gate-level behaviors, wiring,
testpoints, chip packaging, costs and priors.

The KB is parsed from a declarative JSON document, validated, and then
queried read-only by the diagnosis engines. Repair-treatment costs are
computed here with both the exact bottom-up technique and the depth-horizon
heuristic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

GATE_ARITY = {"AND": 2, "OR": 2, "NOT": 1, "NAND": 2, "NOR": 2, "XOR": 2, "BUF": 1}


def eval_gate(gate: str, bits: tuple[int, ...]) -> int:
    if gate == "AND":
        return bits[0] & bits[1]
    if gate == "OR":
        return bits[0] | bits[1]
    if gate == "NAND":
        return 1 - (bits[0] & bits[1])
    if gate == "NOR":
        return 1 - (bits[0] | bits[1])
    if gate == "XOR":
        return bits[0] ^ bits[1]
    if gate == "NOT":
        return 1 - bits[0]
    if gate == "BUF":
        return bits[0]
    raise ValueError(f"unknown gate {gate!r}")


class KbError(ValueError):
    pass


class KbSyntaxError(KbError):
    pass


class SchemaViolation(KbError):
    def __init__(self, path: str, message: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if message else path)


class UnknownReference(KbError):
    def __init__(self, ref: str, path: str = ""):
        self.ref = ref
        super().__init__(f"unknown reference {ref!r}" + (f" at {path}" if path else ""))


class UnknownElement(KbError):
    pass


class MissingInput(KbError):
    pass


@dataclass(frozen=True)
class HierarchyNode:
    id: str
    kind: str  # "subsystem" | "component"
    children: tuple[str, ...]
    inspection_cost: float
    replacement_cost: float
    failure_prior: float
    output_testpoint: str | None


@dataclass(frozen=True)
class ComponentBehavior:
    component: str
    gate: str
    inputs: tuple[str, ...]
    output: str


@dataclass(frozen=True)
class Testpoint:
    id: str
    net: str
    probe_cost: float


@dataclass(frozen=True)
class Chip:
    id: str
    pins: tuple[tuple[int, str], ...]  # (pin number, net), strictly increasing numbers
    bridge_priors: tuple[float, ...]  # one per adjacent pin pair

    def adjacent_pairs(self) -> list[tuple[int, int]]:
        return [(self.pins[i][0], self.pins[i + 1][0]) for i in range(len(self.pins) - 1)]

    def pair_nets(self, pair: tuple[int, int]) -> tuple[str, str]:
        nets = dict(self.pins)
        return nets[pair[0]], nets[pair[1]]


@dataclass(frozen=True)
class CostModel:
    u: float
    fault_penalty_F: float | None
    pathway_prior_FL: float
    bridge_repair_cost: float
    chip_inspect_effort: float


@dataclass
class KnowledgeBase:
    root: str
    nodes: dict[str, HierarchyNode]
    behaviors: dict[str, ComponentBehavior]  # keyed by component id
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    testpoints: dict[str, Testpoint]
    chips: dict[str, Chip]
    cost_model: CostModel

    # --- derived structure -------------------------------------------------

    def __post_init__(self):
        self._parent = {}
        for n in self.nodes.values():
            for c in n.children:
                self._parent[c] = n.id
        self._driver: dict[str, list[str]] = {}
        for b in self.behaviors.values():
            self._driver.setdefault(b.output, []).append(b.component)
        self._topo = self._topo_sort()

    def _topo_sort(self):
        order, temp, perm = [], set(), set()
        cyclic = [False]

        def visit(comp):
            if comp in perm:
                return
            if comp in temp:
                cyclic[0] = True
                return
            temp.add(comp)
            b = self.behaviors.get(comp)
            if b:
                for net in b.inputs:
                    for drv in self._driver.get(net, []):
                        visit(drv)
            temp.discard(comp)
            perm.add(comp)
            order.append(comp)

        for comp in self.behaviors:
            visit(comp)
        return None if cyclic[0] else order

    @property
    def has_cycle(self) -> bool:
        return self._topo is None

    def parent(self, element: str) -> str | None:
        return self._parent.get(element)

    def require(self, element: str) -> HierarchyNode:
        if element not in self.nodes:
            raise UnknownElement(element)
        return self.nodes[element]

    def is_component(self, element: str) -> bool:
        return self.require(element).kind == "component"

    def components_under(self, element: str) -> list[str]:
        node = self.require(element)
        if node.kind == "component":
            return [element]
        out = []
        for c in node.children:
            out.extend(self.components_under(c))
        return out

    def depth(self, element: str) -> int:
        d = 0
        cur = element
        while (p := self.parent(cur)) is not None:
            d += 1
            cur = p
        return d

    def height(self, element: str) -> int:
        node = self.require(element)
        if node.kind == "component":
            return 0
        return 1 + max(self.height(c) for c in node.children)

    def max_depth(self) -> int:
        return max(self.depth(c) for c in self.components_under(self.root))

    def subtree_prior_mass(self, element: str) -> float:
        return sum(self.nodes[c].failure_prior for c in self.components_under(element))

    def avg_branching(self) -> float:
        subs = [n for n in self.nodes.values() if n.kind == "subsystem"]
        if not subs:
            return 1.0
        return sum(len(n.children) for n in subs) / len(subs)

    def element_output_net(self, element: str) -> str | None:
        tp = self.require(element).output_testpoint
        return self.testpoints[tp].net if tp else None

    def all_nets(self) -> set[str]:
        nets = set(self.inputs)
        for b in self.behaviors.values():
            nets.add(b.output)
            nets.update(b.inputs)
        return nets

    def cone_nets(self, net: str) -> set[str]:
        """Transitive fan-in of a net in the fault-free circuit, inclusive."""
        seen = set()
        stack = [net]
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            for drv in self._driver.get(n, []):
                stack.extend(self.behaviors[drv].inputs)
        return seen

    def cone_components(self, net: str) -> set[str]:
        nets = self.cone_nets(net)
        return {b.component for b in self.behaviors.values() if b.output in nets}


# --- parsing ----------------------------------------------------------------


def _expect(doc, key, typ, path):
    if key not in doc:
        raise SchemaViolation(f"{path}.{key}", "missing")
    val = doc[key]
    if typ is float:
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise SchemaViolation(f"{path}.{key}", "expected number")
        return float(val)
    if not isinstance(val, typ):
        raise SchemaViolation(f"{path}.{key}", f"expected {typ.__name__}")
    return val


def _parse_hierarchy(doc, path, nodes):
    nid = _expect(doc, "id", str, path)
    kind = _expect(doc, "kind", str, path)
    if kind not in ("subsystem", "component"):
        raise SchemaViolation(f"{path}.kind", "expected subsystem|component")
    children_docs = doc.get("children", [])
    if not isinstance(children_docs, list):
        raise SchemaViolation(f"{path}.children", "expected list")
    children = tuple(
        _parse_hierarchy(c, f"{path}.children[{i}]", nodes)
        for i, c in enumerate(children_docs)
    )
    if nid in nodes:
        raise SchemaViolation(f"{path}.id", f"duplicate element {nid!r}")
    nodes[nid] = HierarchyNode(
        id=nid,
        kind=kind,
        children=children,
        inspection_cost=_expect(doc, "inspection_cost", float, path),
        replacement_cost=_expect(doc, "replacement_cost", float, path),
        failure_prior=_expect(doc, "failure_prior", float, path),
        output_testpoint=doc.get("output_testpoint"),
    )
    return nid


def parse_kb(document: bytes | str) -> KnowledgeBase:
    """Parse and reference-resolve a KB document; structural invariants are
    checked separately by validate_kb."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as e:
        raise KbSyntaxError(str(e)) from e
    if not isinstance(doc, dict):
        raise KbSyntaxError("top-level document must be an object")

    nodes: dict[str, HierarchyNode] = {}
    root = _parse_hierarchy(_expect(doc, "hierarchy", dict, "$"), "$.hierarchy", nodes)

    behaviors = {}
    for i, b in enumerate(_expect(doc, "behaviors", list, "$")):
        path = f"$.behaviors[{i}]"
        comp = _expect(b, "component", str, path)
        gate = _expect(b, "gate", str, path)
        if gate not in GATE_ARITY:
            raise SchemaViolation(f"{path}.gate", f"unknown gate {gate!r}")
        inputs = tuple(_expect(b, "inputs", list, path))
        output = _expect(b, "output", str, path)
        if comp not in nodes:
            raise UnknownReference(comp, path)
        if comp in behaviors:
            raise SchemaViolation(path, f"duplicate behavior for {comp!r}")
        behaviors[comp] = ComponentBehavior(comp, gate, inputs, output)

    nets_doc = _expect(doc, "nets", dict, "$")
    inputs = tuple(_expect(nets_doc, "inputs", list, "$.nets"))
    outputs = tuple(_expect(nets_doc, "outputs", list, "$.nets"))

    declared_nets = set(inputs) | {b.output for b in behaviors.values()}
    for comp, b in behaviors.items():
        for net in b.inputs:
            if net not in declared_nets:
                raise UnknownReference(net, f"$.behaviors[{comp}].inputs")
    for net in outputs:
        if net not in declared_nets:
            raise UnknownReference(net, "$.nets.outputs")

    testpoints = {}
    for i, t in enumerate(_expect(doc, "testpoints", list, "$")):
        path = f"$.testpoints[{i}]"
        tid = _expect(t, "id", str, path)
        net = _expect(t, "net", str, path)
        if net not in declared_nets:
            raise UnknownReference(net, path)
        testpoints[tid] = Testpoint(tid, net, _expect(t, "probe_cost", float, path))

    for nid, node in nodes.items():
        if node.output_testpoint is not None and node.output_testpoint not in testpoints:
            raise UnknownReference(node.output_testpoint, f"hierarchy node {nid!r}")

    chips = {}
    for i, c in enumerate(doc.get("chips", [])):
        path = f"$.chips[{i}]"
        cid = _expect(c, "id", str, path)
        pins = []
        for j, p in enumerate(_expect(c, "pins", list, path)):
            ppath = f"{path}.pins[{j}]"
            number = _expect(p, "number", int, ppath)
            net = _expect(p, "net", str, ppath)
            if net not in declared_nets:
                raise UnknownReference(net, ppath)
            pins.append((number, net))
        priors = tuple(float(x) for x in _expect(c, "bridge_priors", list, path))
        if len(priors) != max(len(pins) - 1, 0):
            raise SchemaViolation(f"{path}.bridge_priors",
                                  "expected one prior per adjacent pin pair")
        chips[cid] = Chip(cid, tuple(pins), priors)

    cm = _expect(doc, "cost_model", dict, "$")
    cost_model = CostModel(
        u=_expect(cm, "u", float, "$.cost_model"),
        fault_penalty_F=(float(cm["fault_penalty_F"])
                         if cm.get("fault_penalty_F") is not None else None),
        pathway_prior_FL=_expect(cm, "pathway_prior_FL", float, "$.cost_model"),
        bridge_repair_cost=_expect(cm, "bridge_repair_cost", float, "$.cost_model"),
        chip_inspect_effort=_expect(cm, "chip_inspect_effort", float, "$.cost_model"),
    )

    return KnowledgeBase(root, nodes, behaviors, inputs, outputs,
                         testpoints, chips, cost_model)


def serialize_kb(kb: KnowledgeBase) -> bytes:
    def node_doc(nid):
        n = kb.nodes[nid]
        doc = {
            "id": n.id, "kind": n.kind,
            "inspection_cost": n.inspection_cost,
            "replacement_cost": n.replacement_cost,
            "failure_prior": n.failure_prior,
        }
        if n.output_testpoint is not None:
            doc["output_testpoint"] = n.output_testpoint
        if n.children:
            doc["children"] = [node_doc(c) for c in n.children]
        return doc

    doc = {
        "hierarchy": node_doc(kb.root),
        "behaviors": [
            {"component": b.component, "gate": b.gate,
             "inputs": list(b.inputs), "output": b.output}
            for b in kb.behaviors.values()
        ],
        "nets": {"inputs": list(kb.inputs), "outputs": list(kb.outputs)},
        "testpoints": [
            {"id": t.id, "net": t.net, "probe_cost": t.probe_cost}
            for t in kb.testpoints.values()
        ],
        "chips": [
            {"id": c.id, "pins": [{"number": n, "net": net} for n, net in c.pins],
             "bridge_priors": list(c.bridge_priors)}
            for c in kb.chips.values()
        ],
        "cost_model": {
            "u": kb.cost_model.u,
            "fault_penalty_F": kb.cost_model.fault_penalty_F,
            "pathway_prior_FL": kb.cost_model.pathway_prior_FL,
            "bridge_repair_cost": kb.cost_model.bridge_repair_cost,
            "chip_inspect_effort": kb.cost_model.chip_inspect_effort,
        },
    }
    return json.dumps(doc, indent=2).encode()


# --- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class KbDiagnostic:
    code: str
    where: str = ""

    def __str__(self):
        return f"{self.code}({self.where})" if self.where else self.code


def validate_kb(kb: KnowledgeBase) -> list[KbDiagnostic]:
    out = []
    for nid, node in kb.nodes.items():
        if node.kind == "component" and node.children:
            out.append(KbDiagnostic("ComponentNotLeaf", nid))
        if node.kind == "subsystem" and not node.children:
            out.append(KbDiagnostic("SubsystemWithoutChildren", nid))
        if node.inspection_cost < 0 or node.replacement_cost < 0:
            out.append(KbDiagnostic("NegativeCost", nid))
        if not 0 <= node.failure_prior <= 1:
            out.append(KbDiagnostic("PriorOutOfRange", nid))
        if node.kind == "subsystem" and nid != kb.root and node.output_testpoint is None:
            out.append(KbDiagnostic("MissingOutputTestpoint", nid))

    comps = {nid for nid, n in kb.nodes.items() if n.kind == "component"}
    for comp in comps:
        if comp not in kb.behaviors:
            out.append(KbDiagnostic("ComponentWithoutBehavior", comp))
    for comp, b in kb.behaviors.items():
        if len(b.inputs) != GATE_ARITY[b.gate]:
            out.append(KbDiagnostic("GateArityMismatch", comp))

    for net, drivers in kb._driver.items():
        if len(drivers) > 1 or net in kb.inputs:
            out.append(KbDiagnostic("MultipleDrivers", net))

    if kb.has_cycle:
        out.append(KbDiagnostic("CombinationalCycle"))

    for tid, tp in kb.testpoints.items():
        if tp.probe_cost < 0:
            out.append(KbDiagnostic("NegativeCost", tid))

    for cid, chip in kb.chips.items():
        numbers = [n for n, _ in chip.pins]
        if numbers != sorted(numbers) or len(set(numbers)) != len(numbers):
            out.append(KbDiagnostic("PinsNotIncreasing", cid))
        if any(not 0 <= p <= 1 for p in chip.bridge_priors):
            out.append(KbDiagnostic("PriorOutOfRange", cid))

    cm = kb.cost_model
    if min(cm.u, cm.bridge_repair_cost, cm.chip_inspect_effort) < 0 or (
        cm.fault_penalty_F is not None and cm.fault_penalty_F < 0
    ):
        out.append(KbDiagnostic("NegativeCost", "cost_model"))
    if not 0 <= cm.pathway_prior_FL <= 1:
        out.append(KbDiagnostic("PriorOutOfRange", "cost_model"))
    return out


# --- simulation and repair costs ---------------------------------------------


def golden_simulate(kb: KnowledgeBase, inputs: dict[str, int]) -> dict[str, int]:
    """Fault-free forward evaluation of every net, in topological order."""
    for net in kb.inputs:
        if net not in inputs:
            raise MissingInput(net)
    if kb.has_cycle:
        raise KbError("combinational cycle")
    values = {net: int(inputs[net]) for net in kb.inputs}
    for comp in kb._topo:
        b = kb.behaviors[comp]
        values[b.output] = eval_gate(b.gate, tuple(values[n] for n in b.inputs))
    return values


def repair_cost_complete(kb: KnowledgeBase, element: str) -> float:
    """Exact repair cost: bottom-up, leaves cost their replacement and each
    subsystem costs its inspection plus the cheapest child repair."""
    node = kb.require(element)
    if node.kind == "component":
        return node.replacement_cost
    return node.inspection_cost + min(repair_cost_complete(kb, c) for c in node.children)


def repair_cost_heuristic(kb: KnowledgeBase, element: str, horizon_depth: int) -> float:
    """Depth-limited estimate: expand to the horizon (stopping early at
    leaves), each frontier node costs the inspections accumulated from the
    element down to its parent plus its own replacement; take the minimum."""
    if horizon_depth < 1:
        raise ValueError("horizon_depth must be >= 1")
    kb.require(element)
    best = [float("inf")]

    def walk(nid: str, depth: int, acc_inspection: float):
        node = kb.nodes[nid]
        if node.kind == "component" or depth == horizon_depth:
            best[0] = min(best[0], acc_inspection + node.replacement_cost)
            return
        for c in node.children:
            walk(c, depth + 1, acc_inspection + node.inspection_cost)

    walk(element, 0, 0.0)
    return best[0]
