"""Random-instance builders shared by the unit and acceptance suites."""

from __future__ import annotations

import random

from hierdx.influence_diagram import (
    ChanceNode,
    DecisionNode,
    InfluenceDiagram,
    ValueNode,
    validate,
)
from hierdx.knowledge_base import (
    Chip,
    ComponentBehavior,
    CostModel,
    HierarchyNode,
    KnowledgeBase,
    Testpoint,
)


def random_diagram(rng: random.Random, max_decisions=2, max_chance=4,
                   max_domain=3, policy_cap=600) -> InfluenceDiagram:
    """A random valid diagram whose policy space stays brute-forceable.

    Built in causal order (chance, D1, chance, D2, chance) so acyclicity and
    no-forgetting hold by construction; rejection-sampled against the cap.
    """
    while True:
        d = _attempt(rng, max_decisions, max_chance, max_domain)
        if validate(d):
            continue
        space = 1
        for dec in d.decision_order:
            node = d.nodes[dec]
            cfgs = 1
            for p in node.information_parents:
                cfgs *= len(d.domain(p))
            space *= len(node.alternatives) ** cfgs
        if space <= policy_cap:
            return d


def _dist(rng, n):
    raw = [rng.random() + 0.05 for _ in range(n)]
    s = sum(raw)
    return tuple(x / s for x in raw)


def _attempt(rng, max_decisions, max_chance, max_domain):
    n_chance = rng.randint(1, max_chance)
    n_dec = rng.randint(0, max_decisions)
    # positions: chance nodes assigned a block 0..n_dec (block k comes after decision k)
    blocks = {k: [] for k in range(n_dec + 1)}
    chance_ids = [f"C{i}" for i in range(n_chance)]
    for c in chance_ids:
        blocks[rng.randint(0, n_dec)].append(c)

    nodes = {}
    placed: list[str] = []  # chance nodes in causal order
    decisions: list[str] = []
    info_sets: dict[str, tuple[str, ...]] = {}

    def add_chance(cid, may_depend_on_decisions):
        pool = placed + list(may_depend_on_decisions)
        k = min(len(pool), rng.randint(0, 2))
        parents = tuple(rng.sample(pool, k))
        states = tuple(f"s{j}" for j in range(rng.randint(2, max_domain)))
        import itertools
        cpt = {}
        domains = []
        for p in parents:
            n = nodes[p]
            domains.append(n.states if isinstance(n, ChanceNode) else n.alternatives)
        for cfg in itertools.product(*domains):
            cpt[cfg] = _dist(rng, len(states))
        nodes[cid] = ChanceNode(states, parents, cpt)
        placed.append(cid)

    for k in range(n_dec + 1):
        for cid in blocks[k]:
            add_chance(cid, decisions)
        if k < n_dec:
            did = f"D{k}"
            alts = tuple(f"a{j}" for j in range(rng.randint(2, max_domain)))
            prev_info = info_sets[decisions[-1]] if decisions else ()
            extra_pool = [c for c in placed if c not in prev_info]
            extra = tuple(rng.sample(extra_pool, min(len(extra_pool), rng.randint(0, 1))))
            info = tuple(prev_info) + tuple(decisions[-1:]) + extra
            nodes[did] = DecisionNode(alts, info)
            info_sets[did] = info
            decisions.append(did)

    import itertools
    candidates = placed + decisions
    k = min(len(candidates), rng.randint(1, 3))
    vparents = tuple(rng.sample(candidates, k))
    domains = []
    for p in vparents:
        n = nodes[p]
        domains.append(n.states if isinstance(n, ChanceNode) else n.alternatives)
    table = {cfg: round(rng.uniform(0, 50), 3) for cfg in itertools.product(*domains)}
    nodes["V"] = ValueNode(vparents, table)
    return InfluenceDiagram(nodes, tuple(decisions))


# --- random part-of hierarchies (costs only, dummy circuit) -------------------


def random_cost_tree(rng: random.Random, max_nodes=50) -> KnowledgeBase:
    """Random rooted hierarchy with random costs; the circuit is a dummy
    one-buffer-per-component netlist so the KB machinery stays usable."""
    n_target = rng.randint(1, max_nodes)
    counter = [0]
    nodes = {}

    def grow(budget: int) -> str:
        nid = f"E{counter[0]}"
        counter[0] += 1
        make_leaf = budget <= 1 or rng.random() < 0.35
        children = []
        if not make_leaf:
            n_children = rng.randint(1, min(4, budget - 1))
            share = (budget - 1) // n_children
            for i in range(n_children):
                children.append(grow(max(1, share)))
        kind = "component" if not children else "subsystem"
        # quarter-unit costs are dyadic, so path sums are exact in float64
        # and the complete/heuristic/brute-force minima agree bit for bit
        nodes[nid] = HierarchyNode(
            id=nid,
            kind=kind,
            children=tuple(children),
            inspection_cost=round(rng.uniform(0, 10) * 4) / 4,
            replacement_cost=round(rng.uniform(1, 40) * 4) / 4,
            failure_prior=0.01,
            output_testpoint=None,
        )
        return nid

    root = grow(n_target)
    comps = [nid for nid, n in nodes.items() if n.kind == "component"]
    behaviors = {
        c: ComponentBehavior(c, "BUF", (f"IN_{c}",), f"OUT_{c}") for c in comps
    }
    inputs = tuple(f"IN_{c}" for c in comps)
    outputs = tuple(f"OUT_{c}" for c in comps)
    cm = CostModel(u=0.001, fault_penalty_F=None, pathway_prior_FL=0.9,
                   bridge_repair_cost=1.0, chip_inspect_effort=1.0)
    return KnowledgeBase(root, nodes, behaviors, inputs, outputs, {}, {}, cm)


def brute_force_repair_cost(kb: KnowledgeBase, element: str) -> float:
    """Minimum over all element-to-leaf paths of the inspections of internal
    path nodes (element included when internal) plus the leaf replacement."""
    node = kb.nodes[element]
    if node.kind == "component":
        return node.replacement_cost
    best = float("inf")

    def walk(nid, acc):
        nonlocal best
        n = kb.nodes[nid]
        if n.kind == "component":
            best = min(best, acc + n.replacement_cost)
            return
        for c in n.children:
            walk(c, acc + n.inspection_cost)

    walk(element, 0.0)
    return best


# --- random hierarchical circuits ---------------------------------------------
#
# Tree-respecting wiring (a component reads primary inputs or outputs of
# earlier siblings under the same parent) keeps every subsystem's cone inside
# its own subtree, and generated KBs are rejection-sampled to be mask-free:
# every stuck-at fault alters the function of every testpoint cone containing
# it, so probe verdicts always agree with cone membership.

GATE_POOL_2 = ["AND", "OR", "NAND", "NOR", "XOR"]
GATE_POOL_1 = ["NOT", "BUF"]


def random_circuit_kb(rng: random.Random, max_elements=30, n_inputs=None,
                      with_chips=True) -> KnowledgeBase:
    for _ in range(200):
        kb = _attempt_circuit(rng, max_elements, n_inputs, with_chips)
        if kb is not None and _mask_free(kb):
            return kb
    raise RuntimeError("could not generate a mask-free circuit")


def _attempt_circuit(rng, max_elements, n_inputs, with_chips):
    from hierdx.knowledge_base import validate_kb

    n_inputs = n_inputs or rng.randint(3, 6)
    inputs = tuple(f"I{i}" for i in range(n_inputs))
    counter = {"element": 0, "net": 0}
    nodes = {}
    behaviors = {}
    testpoints = {}

    def new_net():
        counter["net"] += 1
        return f"n{counter['net']}"

    def make_component(parent_sources):
        counter["element"] += 1
        cid = f"C{counter['element']}"
        if rng.random() < 0.3:
            gate = rng.choice(GATE_POOL_1)
            ins = (rng.choice(parent_sources),)
        else:
            gate = rng.choice(GATE_POOL_2)
            a = rng.choice(parent_sources)
            b = rng.choice(parent_sources)
            ins = (a, b)
        out = new_net()
        behaviors[cid] = ComponentBehavior(cid, gate, ins, out)
        testpoints[out] = Testpoint(out, out, 1.0)
        nodes[cid] = HierarchyNode(
            cid, "component", (), 0.0, round(rng.uniform(3, 8), 2), 0.01, out)
        return cid, out

    def make_subsystem(budget, depth):
        counter["element"] += 1
        sid = f"S{counter['element']}"
        n_children = rng.randint(2, 3) if budget >= 3 else max(budget - 1, 1)
        children = []
        sources = list(inputs)
        remaining = budget - 1
        out = None
        for i in range(n_children):
            child_budget = max(1, remaining // (n_children - i))
            remaining -= child_budget
            if child_budget >= 3 and depth < 3 and rng.random() < 0.5:
                cid, child_out = make_subsystem(child_budget, depth + 1)
            else:
                cid, child_out = make_component(sources)
            children.append(cid)
            sources.append(child_out)
            out = child_out
        nodes[sid] = HierarchyNode(
            sid, "subsystem", tuple(children),
            round(rng.uniform(1, 3), 2), round(rng.uniform(10, 40), 2),
            0.0, out)
        return sid, out

    n_top = rng.randint(1, 3)
    top = []
    outputs = []
    per_top = max(2, (max_elements - 1) // max(n_top, 1))
    for _ in range(n_top):
        sid, out = make_subsystem(min(per_top, max_elements), 1)
        top.append(sid)
        outputs.append(out)
    root = "ROOT"
    nodes[root] = HierarchyNode(root, "subsystem", tuple(top), 1.0, 99.0, 0.0, None)

    # subsystem priors = subtree component mass
    def fill_priors(nid):
        node = nodes[nid]
        if node.kind == "component":
            return node.failure_prior
        mass = sum(fill_priors(c) for c in node.children)
        nodes[nid] = HierarchyNode(node.id, node.kind, node.children,
                                   node.inspection_cost, node.replacement_cost,
                                   mass, node.output_testpoint)
        return mass

    fill_priors(root)

    chips = {}
    if with_chips and rng.random() < 0.7:
        nets = sorted(testpoints)
        if len(nets) >= 2:
            k = min(len(nets), rng.randint(2, 4))
            picked = rng.sample(nets, k)
            pins = tuple((i + 1, net) for i, net in enumerate(picked))
            chips["CHIP_A"] = Chip("CHIP_A", pins, tuple([0.002] * (k - 1)))

    max_repl = max(n.replacement_cost for n in nodes.values())
    cm = CostModel(u=0.001, fault_penalty_F=200.0 * max_repl,
                   pathway_prior_FL=0.9, bridge_repair_cost=3.0,
                   chip_inspect_effort=2.0)
    kb = KnowledgeBase(root, nodes, behaviors, inputs, tuple(outputs),
                       testpoints, chips, cm)
    return kb if validate_kb(kb) == [] else None


def _mask_free(kb) -> bool:
    import itertools

    from hierdx.knowledge_base import eval_gate

    names = list(kb.inputs)
    vectors = [dict(zip(names, bits))
               for bits in itertools.product((0, 1), repeat=len(names))]
    topo = kb._topo

    def run(vec, stuck_comp=None, stuck_val=None):
        vals = dict(vec)
        for comp in topo:
            b = kb.behaviors[comp]
            v = eval_gate(b.gate, tuple(vals[n] for n in b.inputs))
            if comp == stuck_comp:
                v = stuck_val
            vals[b.output] = v
        return vals

    golden = [run(v) for v in vectors]
    cones = {t.net: kb.cone_components(t.net) for t in kb.testpoints.values()}
    for comp in kb.behaviors:
        for stuck in (0, 1):
            faulty = [run(v, comp, stuck) for v in vectors]
            affected = set()
            for g, f in zip(golden, faulty):
                for net in kb.testpoints:
                    if f[net] != g[net]:
                        affected.add(net)
            for net, cone in cones.items():
                if comp in cone and net not in affected:
                    return False
    return True


def exposing_vector(kb, fault):
    """First input vector on which the faulty device output differs."""
    from hierdx.device_simulator import inject_fault

    sim = inject_fault(kb, fault)
    for vec in sim.default_vectors():
        if not sim.device_ok([vec]):
            return vec
    return None
