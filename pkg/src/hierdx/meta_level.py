"""Meta level: estimate the lookahead cost of each causal pathway and choose
which one to explore next.

The functional lookahead estimates computational work (expected operation
count X1 over a synthetically grown sequence of decision models, uniform
over the number of steps until resolution) and external repair cost (X2,
the level-averaged inspection-plus-replacement mixture under the current
horizon). The bridge lookahead (Y1, Y2) reuses the bridge engine's
inspection order. The pathway decision model prices exploring the wrong
pathway first as paying both lookaheads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .bridge_fault_engine import ChipCandidate, build_bridge_id, ratio_order
from .influence_diagram import (
    ChanceNode,
    DecisionNode,
    InfluenceDiagram,
    ValueNode,
    estimate_eval_ops,
    evaluate,
)
from .knowledge_base import KnowledgeBase, repair_cost_complete
from .session import DiagnosisError, DiagnosisSession, Exhausted


class LengthMismatch(DiagnosisError):
    pass


@dataclass(frozen=True)
class Horizon:
    failed_node: str | None
    horizon_nodes: tuple[str, ...]
    d: int  # maximum hierarchy depth
    d_max: int  # maximum depth from the horizon down to base level


@dataclass
class GrowthModel:
    b_avg: float
    base_diagram: InfluenceDiagram
    frontier: str = "CS"
    replace_cost: float = 5.0
    repair_cost: float = 5.0


@dataclass(frozen=True)
class LookaheadEstimate:
    X1: float
    X2: float
    Y1: float
    Y2: float
    level_costs: tuple[float, ...] = ()
    no_bridge_candidates: bool = False


def functional_lookahead_horizon(session: DiagnosisSession) -> Horizon:
    """The frontier a restarted functional lookahead proceeds from.

    No prior failure: the highest-level faulted subsystem itself. After a
    failure at node A: prune A, take A's surviving siblings; while nothing
    survives at a level, prune the parent's subtree and climb.
    """
    kb = session.kb
    d = kb.max_depth()
    if session.failed_node is None:
        nodes = (session.initial_faulted,)
    else:
        a = session.failed_node
        nodes = None
        while True:
            session.pruned.add(a)
            parent = kb.parent(a)
            if parent is None:
                raise Exhausted("pruned past the hierarchy root")
            siblings = tuple(
                c for c in kb.nodes[parent].children
                if c != a and c not in session.pruned and session.remaining_mass(c) > 0
            )
            if siblings:
                nodes = siblings
                break
            a = parent
    d_max = max(kb.height(n) for n in nodes)
    return Horizon(session.failed_node, nodes, d, d_max)


def build_lookahead_id(kb: KnowledgeBase, horizon_nodes: tuple[str, ...],
                       beliefs: dict[str, float] | None = None) -> InfluenceDiagram:
    """Conceptual one-step model over the horizon, used as the growth seed.

    Shape mirrors the functional model (state, probe decision, result,
    treatment decision, next state, cost). A placeholder probe alternative
    keeps the shape when no testpoint applies; only structure matters here.
    """
    elements = tuple(horizon_nodes)
    if beliefs is None:
        masses = [max(kb.subtree_prior_mass(e), 1e-12) for e in elements]
        total = sum(masses)
        beliefs = {e: m / total for e, m in zip(elements, masses)}
    prior = tuple(beliefs.get(e, 0.0) for e in elements)

    testpoints = []
    covered = {}
    for e in elements:
        tp = kb.nodes[e].output_testpoint
        if tp and tp not in testpoints:
            testpoints.append(tp)
            cone = kb.cone_components(kb.testpoints[tp].net)
            covered[tp] = {x for x in elements if set(kb.components_under(x)) & cone}
    probe_cost = {t: kb.testpoints[t].probe_cost for t in testpoints}
    if not testpoints:
        testpoints = ["observe"]
        covered["observe"] = set()
        probe_cost["observe"] = 0.0

    treatments = [("nothing", 0.0)]
    for e in elements:
        node = kb.nodes[e]
        treatments.append((f"replace:{e}", node.replacement_cost))
        if node.kind == "subsystem":
            treatments.append((f"repair:{e}", repair_cost_complete(kb, e)))
    labels = tuple(lab for lab, _ in treatments)
    cost_of = dict(treatments)

    nodes = {
        "CS": ChanceNode(elements, (), {(): prior}),
        "Test": DecisionNode(tuple(testpoints), ()),
    }
    r_cpt = {}
    for e in elements:
        for t in testpoints:
            r_cpt[(e, t)] = (0.0, 1.0) if e in covered[t] else (1.0, 0.0)
    nodes["R"] = ChanceNode(("ok", "not_ok"), ("CS", "Test"), r_cpt)
    nodes["Treatment"] = DecisionNode(labels, ("Test", "R"))
    ns_cpt = {}
    for e in elements:
        for lab in labels:
            fixes = lab in (f"replace:{e}", f"repair:{e}")
            ns_cpt[(e, lab)] = (1.0, 0.0) if fixes else (0.0, 1.0)
    nodes["NS"] = ChanceNode(("device_ok", "device_faulty"), ("CS", "Treatment"), ns_cpt)
    penalty = 2.0 * repair_cost_complete(kb, kb.root)
    vtable = {}
    for t in testpoints:
        for lab in labels:
            for ns in ("device_ok", "device_faulty"):
                vtable[(t, lab, ns)] = probe_cost[t] + cost_of[lab] + (
                    penalty if ns == "device_faulty" else 0.0
                )
    nodes["V"] = ValueNode(("Test", "Treatment", "NS"), vtable)
    return InfluenceDiagram(nodes, ("Test", "Treatment"))


def expected_id_sequence(growth: GrowthModel, levels: int) -> list[int]:
    """Synthetic growth of the conceptual model, one hierarchy level a step.

    Each step attaches ceil(b_avg) fresh binary state nodes to the current
    frontier node, links them to the probe-result node, and extends the
    treatment alternatives with a replace and a repair per new node; the
    estimated evaluation operation count of each grown model is returned.
    """
    if levels < 0:
        raise ValueError("levels must be >= 0")
    diagram = growth.base_diagram
    frontier = growth.frontier
    m = max(1, math.ceil(growth.b_avg))
    ids: list[int] = []
    for step in range(1, levels + 1):
        diagram, frontier = _grow_once(diagram, frontier, m, step,
                                       growth.replace_cost, growth.repair_cost)
        ids.append(estimate_eval_ops(diagram))
    return ids


def _grow_once(diagram: InfluenceDiagram, frontier: str, m: int, step: int,
               replace_cost: float, repair_cost: float):
    import itertools

    nodes = dict(diagram.nodes)
    new_ids = [f"exp{step}_{k}" for k in range(m)]
    fdom = diagram.domain(frontier)
    for nid in new_ids:
        nodes[nid] = ChanceNode(("ok", "bad"), (frontier,),
                                {(s,): (0.5, 0.5) for s in fdom})

    r = nodes["R"]
    new_parents = r.parents + tuple(new_ids)
    r_cpt = {}
    domains = []
    for p in new_parents:
        n = nodes[p]
        domains.append(n.states if isinstance(n, ChanceNode) else n.alternatives)
    for cfg in itertools.product(*domains):
        r_cpt[cfg] = (0.5, 0.5)
    nodes["R"] = ChanceNode(r.states, new_parents, r_cpt)

    tr = nodes["Treatment"]
    extra = tuple(f"replace:{nid}" for nid in new_ids) + tuple(
        f"repair:{nid}" for nid in new_ids)
    new_alts = tr.alternatives + extra
    nodes["Treatment"] = DecisionNode(new_alts, tr.information_parents)

    ns = nodes["NS"]
    ns_cpt = {}
    for e in nodes["CS"].states:
        for lab in new_alts:
            fixes = lab in (f"replace:{e}", f"repair:{e}")
            ns_cpt[(e, lab)] = (1.0, 0.0) if fixes else (0.0, 1.0)
    nodes["NS"] = ChanceNode(ns.states, ns.parents, ns_cpt)

    v = nodes["V"]
    vtable = {}
    for t in nodes["Test"].alternatives:
        for lab in new_alts:
            for st in ns.states:
                key = (t, lab, st)
                if key in v.cost_table:
                    vtable[key] = v.cost_table[key]
                else:
                    anchor = v.cost_table[(t, "nothing", st)]
                    extra_cost = (replace_cost if lab.startswith("replace:")
                                  else repair_cost)
                    vtable[key] = anchor + extra_cost
    nodes["V"] = ValueNode(v.parents, vtable)

    return InfluenceDiagram(nodes, diagram.decision_order), new_ids[0]


def compute_X1(ids: list[float], d: int, d_max: int) -> float:
    """Uniform mixture over 1..d_max+1 meta processes, each consuming the
    next model in the sequence: X1 = sum_j (d_max+1-j)/(d_max+1) * ids[j]."""
    if len(ids) != d_max + 1:
        raise LengthMismatch(f"need {d_max + 1} estimates, got {len(ids)}")
    n = d_max + 1
    return sum(((n - j) / n) * ids[j] for j in range(n))


def compute_X2(kb: KnowledgeBase, horizon: Horizon) -> tuple[float, list[float]]:
    """Level-averaged inspection-plus-replacement mixture under the horizon.

    Level 1 is the horizon node itself (pure replacement); deeper nodes add
    the inspections accumulated from the horizon node down to their parent.
    """
    levels: dict[int, list[float]] = {}

    def walk(nid: str, level: int, acc: float):
        node = kb.nodes[nid]
        levels.setdefault(level, []).append(acc + node.replacement_cost)
        for c in node.children:
            walk(c, level + 1, acc + node.inspection_cost)

    for h in horizon.horizon_nodes:
        walk(h, 1, 0.0)
    n_levels = max(levels)
    level_costs = [sum(levels[i]) / len(levels[i]) for i in range(1, n_levels + 1)]
    x2 = sum(level_costs) / len(level_costs)
    return x2, level_costs


def compute_Y(kb: KnowledgeBase,
              candidates: list[ChipCandidate]) -> LookaheadEstimate:
    """Expected bridge-lookahead work and effort under the engine's
    inspection order; w_k is the probability at least k inspections happen."""
    if not candidates:
        return LookaheadEstimate(0.0, 0.0, 0.0, 0.0, no_bridge_candidates=True)
    ordered = ratio_order(candidates)
    y1 = 0.0
    y2 = 0.0
    w = 1.0
    for k, cand in enumerate(ordered):
        remaining = ordered[k:]
        y1 += w * estimate_eval_ops(build_bridge_id(remaining, kb.cost_model))
        y2 += w * cand.effort
        w = max(0.0, w - cand.posterior)
    return LookaheadEstimate(0.0, 0.0, y1, y2)


def build_meta_id(x_cost: float, y_cost: float, p_fl: float) -> InfluenceDiagram:
    """Fig-2-shaped pathway choice: exploring the wrong pathway first pays
    both lookaheads."""
    nodes = {
        "M": DecisionNode(("FL", "BFL"), ()),
        "I": ChanceNode(("FL", "BFL"), (), {(): (p_fl, 1.0 - p_fl)}),
        "V": ValueNode(("M", "I"), {
            ("FL", "FL"): x_cost,
            ("FL", "BFL"): x_cost + y_cost,
            ("BFL", "FL"): y_cost + x_cost,
            ("BFL", "BFL"): y_cost,
        }),
    }
    return InfluenceDiagram(nodes, ("M",))


def meta_expectations(x_cost: float, y_cost: float, p_fl: float) -> tuple[float, float]:
    ev_fl = p_fl * x_cost + (1.0 - p_fl) * (x_cost + y_cost)
    ev_bfl = (1.0 - p_fl) * y_cost + p_fl * (y_cost + x_cost)
    return ev_fl, ev_bfl


def functional_estimates(session: DiagnosisSession,
                         horizon: Horizon) -> tuple[float, float, list[int]]:
    """X1 and X2 for the current horizon, with the id sequence used."""
    kb = session.kb
    live = {}
    total = 0.0
    for e in horizon.horizon_nodes:
        m = session.remaining_mass(e)
        live[e] = m
        total += m
    beliefs = ({e: m / total for e, m in live.items()} if total > 0 else None)
    base = build_lookahead_id(kb, horizon.horizon_nodes, beliefs)
    growth = GrowthModel(b_avg=kb.avg_branching(), base_diagram=base)
    ids = [estimate_eval_ops(base)] + expected_id_sequence(growth, horizon.d_max)
    x1 = compute_X1(ids, horizon.d, horizon.d_max)
    x2, _ = compute_X2(kb, horizon)
    return x1, x2, ids


def choose_pathway(session: DiagnosisSession) -> str:
    """Evaluate the meta decision model; ties resolve to the functional
    pathway. Records the estimate snapshot on the session."""
    kb = session.kb
    u = kb.cost_model.u

    fl_alive = session.fl_available and session.fl_remaining_fraction() > 0 \
        and session.current_horizon is not None
    bfl_alive = session.bridge_candidates is None or bool(session.bridge_candidates)
    if session.bridge_candidates is None and not kb.chips:
        bfl_alive = False
    if not fl_alive and not bfl_alive:
        raise Exhausted("both causal pathways exhausted")

    x1 = x2 = y1 = y2 = None
    if fl_alive:
        x1, x2, _ = functional_estimates(session, session.current_horizon)
    if bfl_alive:
        from .bridge_fault_engine import candidate_chips

        cands = session.bridge_candidates
        if cands is None:
            cands = candidate_chips(kb, session_region_nets(session))
        est = compute_Y(kb, cands)
        y1, y2 = est.Y1, est.Y2

    if not fl_alive:
        chosen, ev_fl, ev_bfl = "BFL", None, None
    elif not bfl_alive:
        chosen, ev_fl, ev_bfl = "FL", None, None
    else:
        p = session.pathway_posterior_fl()
        x_cost = x1 * u + x2
        y_cost = y1 * u + y2
        policy, _ = evaluate(build_meta_id(x_cost, y_cost, p))
        chosen = policy.choice("M", ())
        ev_fl, ev_bfl = meta_expectations(x_cost, y_cost, p)

    session.last_estimates = {
        "X1": x1, "X2": x2, "Y1": y1, "Y2": y2, "u": u,
        "EV_FL": ev_fl, "EV_BFL": ev_bfl, "chosen": chosen,
    }
    return chosen


def session_region_nets(session: DiagnosisSession) -> set[str] | None:
    """Nets of the initially faulted subsystem, used to focus bridge
    candidates when the functional pathway implicated a region."""
    if not session.config.restrict_bridge_candidates:
        return None
    if session.initial_faulted is None:
        return None
    kb = session.kb
    nets: set[str] = set()
    for c in kb.components_under(session.initial_faulted):
        if c in kb.behaviors:
            nets.add(kb.behaviors[c].output)
            nets.update(kb.behaviors[c].inputs)
    return nets
