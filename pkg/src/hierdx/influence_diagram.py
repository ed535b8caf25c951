"""Influence diagrams: chance/decision/value nodes, validation, exact
minimum-expected-cost evaluation, a brute-force policy-enumeration oracle,
and an elimination-based estimate of evaluation work.

Costs are minimized throughout; a utility-maximizing problem is expressed
by negating the value table. Diagrams are treated as immutable after
construction and every operation here is pure.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

NORMALIZATION_TOL = 1e-9
DEFAULT_POLICY_BOUND = 10 ** 6


class InvalidDiagram(ValueError):
    """Raised when an operation requires a diagram that fails validation."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class TooLarge(ValueError):
    """Raised when the policy space exceeds the enumeration bound."""


Config = tuple  # joint parent configuration, labels in parent order


@dataclass(frozen=True)
class ChanceNode:
    states: tuple[str, ...]
    parents: tuple[str, ...] = ()
    # one row per joint parent configuration -> distribution over states
    cpt: Mapping[Config, tuple[float, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class DecisionNode:
    alternatives: tuple[str, ...]
    information_parents: tuple[str, ...] = ()


@dataclass(frozen=True)
class ValueNode:
    parents: tuple[str, ...]
    cost_table: Mapping[Config, float] = field(default_factory=dict)


Node = Union[ChanceNode, DecisionNode, ValueNode]


@dataclass
class InfluenceDiagram:
    nodes: dict[str, Node]
    decision_order: tuple[str, ...] = ()

    def chance_ids(self) -> list[str]:
        return [i for i, n in self.nodes.items() if isinstance(n, ChanceNode)]

    def decision_ids(self) -> list[str]:
        return [i for i, n in self.nodes.items() if isinstance(n, DecisionNode)]

    def value_id(self) -> str:
        for i, n in self.nodes.items():
            if isinstance(n, ValueNode):
                return i
        raise KeyError("no value node")

    def domain(self, node_id: str) -> tuple[str, ...]:
        n = self.nodes[node_id]
        if isinstance(n, ChanceNode):
            return n.states
        if isinstance(n, DecisionNode):
            return n.alternatives
        raise KeyError(f"{node_id} has no outcome domain")

    def parents_of(self, node_id: str) -> tuple[str, ...]:
        n = self.nodes[node_id]
        if isinstance(n, ChanceNode):
            return n.parents
        if isinstance(n, DecisionNode):
            return n.information_parents
        return n.parents


@dataclass(frozen=True)
class Diagnostic:
    code: str
    node: str | None = None
    detail: str = ""

    def __str__(self):
        where = f"({self.node})" if self.node else ""
        tail = f": {self.detail}" if self.detail else ""
        return f"{self.code}{where}{tail}"


@dataclass
class Policy:
    """Per decision node, a map from information configuration to alternative."""

    tables: dict[str, dict[Config, str]]

    def choice(self, decision: str, info: Config) -> str:
        return self.tables[decision][info]


def _configs(diagram: InfluenceDiagram, parent_ids: Iterable[str]):
    return itertools.product(*(diagram.domain(p) for p in parent_ids))


def validate(diagram: InfluenceDiagram) -> list[Diagnostic]:
    """Check every structural invariant; empty list means the diagram is valid."""
    out: list[Diagnostic] = []
    nodes = diagram.nodes
    if not nodes:
        return [Diagnostic("EmptyDiagram")]
    for nid in nodes:
        if not isinstance(nid, str) or not nid:
            out.append(Diagnostic("BadNodeId", str(nid)))

    value_ids = [i for i, n in nodes.items() if isinstance(n, ValueNode)]
    if len(value_ids) == 0:
        out.append(Diagnostic("MissingValueNode"))
    elif len(value_ids) > 1:
        out.append(Diagnostic("MultipleValueNodes", ",".join(value_ids)))

    for nid, node in nodes.items():
        for p in diagram.parents_of(nid):
            if p not in nodes:
                out.append(Diagnostic("UnknownParent", nid, p))
            elif isinstance(nodes[p], ValueNode):
                out.append(Diagnostic("ValueNodeHasChild", nid, p))

    # acyclicity over all arcs (probabilistic + informational + value)
    indeg = {nid: 0 for nid in nodes}
    children: dict[str, list[str]] = {nid: [] for nid in nodes}
    for nid in nodes:
        for p in diagram.parents_of(nid):
            if p in nodes:
                children[p].append(nid)
                indeg[nid] += 1
    queue = [n for n, d in indeg.items() if d == 0]
    seen = 0
    while queue:
        n = queue.pop()
        seen += 1
        for c in children[n]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    if seen != len(nodes):
        out.append(Diagnostic("CyclicDiagram"))
        return out  # domain/table checks below assume a DAG

    for nid, node in nodes.items():
        if isinstance(node, ChanceNode):
            if not node.states:
                out.append(Diagnostic("EmptyStates", nid))
                continue
            if len(set(node.states)) != len(node.states):
                out.append(Diagnostic("DuplicateStates", nid))
            if any(p not in nodes for p in node.parents):
                continue
            expected = set(_configs(diagram, node.parents))
            got = set(node.cpt)
            for cfg in expected - got:
                out.append(Diagnostic("CptRowMissing", nid, "|".join(cfg)))
            for cfg in got - expected:
                out.append(Diagnostic("CptRowUnknown", nid, "|".join(cfg)))
            for cfg in expected & got:
                row = node.cpt[cfg]
                if len(row) != len(node.states):
                    out.append(Diagnostic("CptRowShape", nid, "|".join(cfg)))
                    continue
                if any(p < 0 for p in row):
                    out.append(Diagnostic("NegativeProbability", nid, "|".join(cfg)))
                if abs(sum(row) - 1.0) > NORMALIZATION_TOL:
                    out.append(Diagnostic("CptRowNotNormalized", nid, "|".join(cfg)))
        elif isinstance(node, DecisionNode):
            if not node.alternatives:
                out.append(Diagnostic("EmptyAlternatives", nid))
            if len(set(node.alternatives)) != len(node.alternatives):
                out.append(Diagnostic("DuplicateAlternatives", nid))
        else:
            if any(p not in nodes for p in node.parents):
                continue
            expected = set(_configs(diagram, node.parents))
            got = set(node.cost_table)
            for cfg in expected - got:
                out.append(Diagnostic("ValueRowMissing", nid, "|".join(cfg)))
            for cfg in got - expected:
                out.append(Diagnostic("ValueRowUnknown", nid, "|".join(cfg)))

    decision_ids = set(diagram.decision_ids())
    order = list(diagram.decision_order)
    if set(order) != decision_ids or len(order) != len(decision_ids):
        out.append(Diagnostic("DecisionOrderMismatch"))
    else:
        earlier: list[str] = []
        info_so_far: set[str] = set()
        for d in order:
            info = set(nodes[d].information_parents)
            for p in info:
                if p in decision_ids and p not in earlier:
                    out.append(Diagnostic("InformationOrderViolation", d, p))
            missing = (set(earlier) | info_so_far) - info
            if missing:
                out.append(Diagnostic("NoForgettingViolation", d, ",".join(sorted(missing))))
            earlier.append(d)
            info_so_far |= info | {d}
    return out


def _require_valid(diagram: InfluenceDiagram) -> None:
    diags = validate(diagram)
    if diags:
        raise InvalidDiagram(diags)


def _topo_order(diagram: InfluenceDiagram, ids: Iterable[str]) -> list[str]:
    ids = set(ids)
    order: list[str] = []
    temp: set[str] = set()

    def visit(n):
        if n in temp or n not in ids:
            return
        temp.add(n)
        for p in diagram.parents_of(n):
            visit(p)
        temp.discard(n)
        if n not in order:
            order.append(n)

    for n in sorted(ids):
        visit(n)
    return order


class _Evaluator:
    """Rollback evaluation over the revelation order.

    Stage j reveals the chance nodes newly observed before decision j, then
    chooses decision j; the terminal stage takes the expectation over all
    never-observed chance nodes. Conditional probabilities of reveals are
    ratios of partial-world weights, marginalizing unobserved ancestors.
    Exact and exponential only in diagram width, which is small here.
    """

    def __init__(self, diagram: InfluenceDiagram):
        self.d = diagram
        self.value_id = diagram.value_id()
        self.chance = diagram.chance_ids()
        self.topo_chance = _topo_order(diagram, self.chance)
        revealed: list[str] = []
        self.stages: list[tuple[list[str], str | None]] = []
        for dec in diagram.decision_order:
            new = [p for p in diagram.nodes[dec].information_parents
                   if p in set(self.chance) and p not in revealed]
            self.stages.append((new, dec))
            revealed.extend(new)
        tail = [c for c in self.topo_chance if c not in revealed]
        self.stages.append((tail, None))
        self.policy: dict[str, dict[Config, str]] = {d: {} for d in diagram.decision_order}

    def _factor(self, node_id: str, assign: dict) -> float:
        node = self.d.nodes[node_id]
        cfg = tuple(assign[p] for p in node.parents)
        return node.cpt[cfg][node.states.index(assign[node_id])]

    def _weight(self, assign: dict) -> float:
        """Sum of world weights consistent with the assigned chance nodes.

        Only unassigned chance ancestors of assigned nodes need enumerating;
        all other unassigned nodes telescope to probability one.
        """
        assigned = [c for c in self.chance if c in assign]
        relevant: set[str] = set()
        frontier = list(assigned)
        while frontier:
            n = frontier.pop()
            for p in self.d.parents_of(n):
                if p in self.d.nodes and isinstance(self.d.nodes[p], ChanceNode):
                    if p not in assign and p not in relevant:
                        relevant.add(p)
                        frontier.append(p)
        free = [c for c in self.topo_chance if c in relevant]
        need = [c for c in self.topo_chance if c in assign or c in relevant]
        total = 0.0
        for combo in itertools.product(*(self.d.domain(c) for c in free)):
            world = dict(assign)
            world.update(zip(free, combo))
            w = 1.0
            for c in need:
                w *= self._factor(c, world)
                if w == 0.0:
                    break
            total += w
        return total

    def _terminal(self, assign: dict) -> float:
        tail = self.stages[-1][0]
        vnode = self.d.nodes[self.value_id]
        base = 0.0
        num = 0.0
        for combo in itertools.product(*(self.d.domain(c) for c in tail)):
            world = dict(assign)
            world.update(zip(tail, combo))
            w = 1.0
            for c in self.topo_chance:
                w *= self._factor(c, world)
                if w == 0.0:
                    break
            if w == 0.0:
                continue
            base += w
            num += w * vnode.cost_table[tuple(world[p] for p in vnode.parents)]
        return num / base if base > 0 else 0.0

    def _stage(self, j: int, assign: dict) -> float:
        reveal, dec = self.stages[j]
        if dec is None:
            return self._terminal(assign)
        base = self._weight(assign) if reveal else 1.0
        total = 0.0
        for combo in itertools.product(*(self.d.domain(c) for c in reveal)):
            a2 = dict(assign)
            a2.update(zip(reveal, combo))
            if reveal:
                w = self._weight(a2)
                if w == 0.0:
                    continue
                p = w / base
            else:
                p = 1.0
            best = None
            best_alt = None
            for alt in self.d.nodes[dec].alternatives:
                a3 = dict(a2)
                a3[dec] = alt
                v = self._stage(j + 1, a3)
                if best is None or v < best:
                    best, best_alt = v, alt
            info = tuple(a2[p_] for p_ in self.d.nodes[dec].information_parents)
            self.policy[dec][info] = best_alt
            total += p * best
        return total

    def run(self) -> tuple[Policy, float]:
        cost = self._stage(0, {})
        # unreachable information configurations default to the first alternative
        for dec in self.d.decision_order:
            node = self.d.nodes[dec]
            for cfg in _configs(self.d, node.information_parents):
                self.policy[dec].setdefault(cfg, node.alternatives[0])
        return Policy(self.policy), cost


def evaluate(diagram: InfluenceDiagram) -> tuple[Policy, float]:
    """Optimal policy and its exact expected cost (minimum over all policies).

    Ties between alternatives resolve to the first in declared order.
    """
    _require_valid(diagram)
    return _Evaluator(diagram).run()


def policy_expected_cost(diagram: InfluenceDiagram, policy: Policy) -> float:
    """Exact expected cost of a fixed policy, by full world enumeration."""
    chance = _topo_order(diagram, diagram.chance_ids())
    vnode = diagram.nodes[diagram.value_id()]
    total = 0.0
    for combo in itertools.product(*(diagram.domain(c) for c in chance)):
        world = dict(zip(chance, combo))
        for dec in diagram.decision_order:
            info = tuple(world[p] for p in diagram.nodes[dec].information_parents)
            world[dec] = policy.choice(dec, info)
        w = 1.0
        for c in chance:
            node = diagram.nodes[c]
            cfg = tuple(world[p] for p in node.parents)
            w *= node.cpt[cfg][node.states.index(world[c])]
            if w == 0.0:
                break
        if w == 0.0:
            continue
        total += w * vnode.cost_table[tuple(world[p] for p in vnode.parents)]
    return total


def enumerate_policies_evaluate(
    diagram: InfluenceDiagram, bound: int = DEFAULT_POLICY_BOUND
) -> tuple[Policy, float]:
    """Independent oracle: exhaustively enumerate every total policy.

    Same contract as evaluate(); raises TooLarge past the enumeration bound.
    """
    _require_valid(diagram)
    decision_ids = list(diagram.decision_order)
    config_lists = []
    space = 1
    for dec in decision_ids:
        node = diagram.nodes[dec]
        cfgs = list(_configs(diagram, node.information_parents))
        config_lists.append(cfgs)
        space *= len(node.alternatives) ** len(cfgs)
        if space > bound:
            raise TooLarge(f"policy space {space} exceeds bound {bound}")

    best_cost = None
    best_policy = None
    per_decision = [
        itertools.product(diagram.nodes[dec].alternatives, repeat=len(cfgs))
        for dec, cfgs in zip(decision_ids, config_lists)
    ]
    if not decision_ids:
        pol = Policy({})
        return pol, policy_expected_cost(diagram, pol)
    for combo in itertools.product(*per_decision):
        tables = {
            dec: dict(zip(cfgs, choice))
            for dec, cfgs, choice in zip(decision_ids, config_lists, combo)
        }
        pol = Policy(tables)
        cost = policy_expected_cost(diagram, pol)
        if best_cost is None or cost < best_cost:
            best_cost, best_policy = cost, pol
    return best_policy, best_cost


def estimate_eval_ops(diagram: InfluenceDiagram) -> int:
    """Estimated multiplication count for evaluating the diagram.

    Greedy min-degree elimination over the chance and decision variables:
    each elimination step contributes the product of the domain sizes of the
    eliminated variable and its current neighbors. Deterministic for a fixed
    diagram and monotone under adding disconnected nodes.
    """
    _require_valid(diagram)
    variables = set(diagram.chance_ids()) | set(diagram.decision_ids())
    sizes = {v: len(diagram.domain(v)) for v in variables}
    neighbors: dict[str, set[str]] = {v: set() for v in variables}

    def clique(members: list[str]):
        for a, b in itertools.combinations(members, 2):
            neighbors[a].add(b)
            neighbors[b].add(a)

    for nid, node in diagram.nodes.items():
        if isinstance(node, ChanceNode):
            clique([nid] + [p for p in node.parents if p in variables])
        elif isinstance(node, ValueNode):
            clique([p for p in node.parents if p in variables])

    ops = 0
    remaining = set(variables)
    while remaining:
        v = min(remaining, key=lambda x: (len(neighbors[x]), x))
        members = [v] + sorted(neighbors[v])
        step = 1
        for m in members:
            step *= sizes[m]
        ops += step
        nb = sorted(neighbors[v])
        clique(nb)
        for m in nb:
            neighbors[m].discard(v)
        del neighbors[v]
        remaining.discard(v)
    return ops


# --- JSON wire format -------------------------------------------------------
#
# {"nodes": [{"id", "kind": "chance"|"decision"|"value",
#             "states"/"alternatives", "parents", "table"}, ...],
#  "decision_order": [...]}
# Tables are keyed by "|"-joined parent state labels in parent order.


def diagram_to_json(diagram: InfluenceDiagram) -> str:
    nodes = []
    for nid, node in diagram.nodes.items():
        if isinstance(node, ChanceNode):
            nodes.append({
                "id": nid, "kind": "chance", "states": list(node.states),
                "parents": list(node.parents),
                "table": {"|".join(cfg): list(row) for cfg, row in node.cpt.items()},
            })
        elif isinstance(node, DecisionNode):
            nodes.append({
                "id": nid, "kind": "decision",
                "alternatives": list(node.alternatives),
                "parents": list(node.information_parents),
            })
        else:
            nodes.append({
                "id": nid, "kind": "value", "parents": list(node.parents),
                "table": {"|".join(cfg): cost for cfg, cost in node.cost_table.items()},
            })
    return json.dumps({"nodes": nodes, "decision_order": list(diagram.decision_order)},
                      indent=2)


def _split_key(key: str, arity: int) -> Config:
    if arity == 0:
        return ()
    return tuple(key.split("|"))


def diagram_from_json(text: str | bytes) -> InfluenceDiagram:
    doc = json.loads(text)
    nodes: dict[str, Node] = {}
    for spec in doc["nodes"]:
        nid = spec["id"]
        kind = spec["kind"]
        parents = tuple(spec.get("parents", ()))
        if kind == "chance":
            cpt = {_split_key(k, len(parents)): tuple(v)
                   for k, v in spec.get("table", {}).items()}
            nodes[nid] = ChanceNode(tuple(spec["states"]), parents, cpt)
        elif kind == "decision":
            nodes[nid] = DecisionNode(tuple(spec["alternatives"]), parents)
        elif kind == "value":
            table = {_split_key(k, len(parents)): float(v)
                     for k, v in spec.get("table", {}).items()}
            nodes[nid] = ValueNode(parents, table)
        else:
            raise ValueError(f"unknown node kind {kind!r}")
    return InfluenceDiagram(nodes, tuple(doc.get("decision_order", ())))
