"""Functional causal pathway: top-down hierarchical elaboration of one-step
decision models over the current focus of attention.

Each meta/base process builds a fresh diagram over the live context —
current-state chance node, probe decision, probe-result chance node,
treatment decision, next-state chance node, and a cost node summing probe,
treatment, and residual-fault penalty — evaluates it, executes the
recommended probe through the oracle, and then either expands the chosen
subsystem (repair), or applies the terminal treatment and checks device I/O.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import session as sess
from .influence_diagram import (
    ChanceNode,
    DecisionNode,
    InfluenceDiagram,
    Policy,
    ValueNode,
    evaluate,
)
from .knowledge_base import KnowledgeBase, golden_simulate, repair_cost_complete, \
    repair_cost_heuristic
from .session import (
    AmbiguousRoot,
    DiagnosisError,
    DiagnosisSession,
    NoFaultObserved,
    OracleRequest,
    drive,
)


class EmptyAlternatives(DiagnosisError):
    pass


@dataclass(frozen=True)
class Context:
    faulted_parent: str
    elements: tuple[str, ...]


@dataclass(frozen=True)
class TreatmentAlt:
    kind: str  # "nothing" | "replace" | "repair"
    target: str | None
    cost: float

    @property
    def label(self) -> str:
        return self.kind if self.target is None else f"{self.kind}:{self.target}"


# step outcomes


@dataclass(frozen=True)
class Resolved:
    pass


@dataclass(frozen=True)
class Failed:
    node: str


@dataclass(frozen=True)
class Expanded:
    context: Context


@dataclass
class FunctionalDecisionModel:
    diagram: InfluenceDiagram
    testpoints: tuple[str, ...]
    treatments: dict[str, TreatmentAlt]  # keyed by alternative label
    covered: dict[str, frozenset[str]]  # testpoint -> context elements in its cone


def initialize_context(kb: KnowledgeBase, observations: dict[str, int]) -> Context:
    """Locate the highest-level faulted subsystem from a boundary observation
    (applied inputs plus observed outputs) and focus on its children."""
    inputs = {}
    for net in kb.inputs:
        if net not in observations:
            raise DiagnosisError(f"observation missing input {net}")
        inputs[net] = observations[net]
    golden = golden_simulate(kb, inputs)
    for net in kb.outputs:
        if net not in observations:
            raise DiagnosisError(f"observation missing output {net}")
    discrepant = [o for o in kb.outputs if observations[o] != golden[o]]
    if not discrepant:
        raise NoFaultObserved("all outputs match the golden circuit")

    candidates = []
    for nid, node in kb.nodes.items():
        if node.kind != "subsystem" or nid == kb.root:
            continue
        net = kb.element_output_net(nid)
        if net is None or net not in observations or observations[net] == golden[net]:
            continue
        comps = kb.components_under(nid)
        produced = {kb.behaviors[c].output for c in comps if c in kb.behaviors}
        used = {n for c in comps if c in kb.behaviors for n in kb.behaviors[c].inputs}
        boundary = used - produced
        if any(n in observations and observations[n] != golden[n] for n in boundary):
            continue
        candidates.append(nid)

    cand = set(candidates)

    def has_candidate_ancestor(nid):
        cur = kb.parent(nid)
        while cur is not None:
            if cur in cand:
                return True
            cur = kb.parent(cur)
        return False

    tops = [c for c in candidates if not has_candidate_ancestor(c)]
    if len(tops) > 1:
        raise AmbiguousRoot(",".join(sorted(tops)))
    chosen = tops[0] if tops else kb.root
    node = kb.nodes[chosen]
    if node.kind == "component":
        # single-component device: the focus is the component itself
        return Context(chosen, (chosen,))
    return Context(chosen, node.children)


def functional_candidates(kb: KnowledgeBase, ctx_root: str,
                          observations: dict[str, int]) -> frozenset[str]:
    """Components that could explain the observation as a single functional
    fault: inside the faulted subtree and in every discrepant output's cone."""
    inputs = {n: observations[n] for n in kb.inputs}
    golden = golden_simulate(kb, inputs)
    cands = set(kb.components_under(ctx_root))
    for o in kb.outputs:
        if o in observations and observations[o] != golden[o]:
            cands &= kb.cone_components(o)
    return frozenset(cands)


def enumerate_testpoints(ctx: Context, kb: KnowledgeBase,
                         known_nets: frozenset[str] | set[str] = frozenset()) -> list[str]:
    """Output testpoints of the context elements whose nets are not already
    known (device boundary or previously probed)."""
    out: list[str] = []
    for e in ctx.elements:
        tp_id = kb.require(e).output_testpoint
        if tp_id is None:
            continue
        net = kb.testpoints[tp_id].net
        if net in known_nets or tp_id in out:
            continue
        out.append(tp_id)
    return out


def enumerate_treatments(ctx: Context, kb: KnowledgeBase,
                         technique: str = "complete",
                         heuristic_horizon: int = 1) -> list[TreatmentAlt]:
    """One shared do-nothing, replace for every element, repair for subsystems.

    Repair cost is the expected cost of the sub-search the expansion commits
    to, computed by the configured technique.
    """
    out = [TreatmentAlt("nothing", None, 0.0)]
    for e in ctx.elements:
        node = kb.require(e)
        out.append(TreatmentAlt("replace", e, node.replacement_cost))
        if node.kind == "subsystem":
            if technique == "heuristic":
                cost = repair_cost_heuristic(kb, e, heuristic_horizon)
            else:
                cost = repair_cost_complete(kb, e)
            out.append(TreatmentAlt("repair", e, cost))
    return out


def build_functional_id(
    ctx: Context,
    kb: KnowledgeBase,
    beliefs: dict[str, float],
    penalty: float,
    known_nets: frozenset[str] | set[str] = frozenset(),
    technique: str = "complete",
    heuristic_horizon: int = 1,
) -> FunctionalDecisionModel:
    """One-step decision model over the context (probe then treat)."""
    total = sum(beliefs.get(e, 0.0) for e in ctx.elements)
    if abs(total - 1.0) > 1e-9:
        raise DiagnosisError(f"beliefs not normalized over context (sum {total})")
    testpoints = enumerate_testpoints(ctx, kb, known_nets)
    if not testpoints:
        raise EmptyAlternatives("no probeable testpoint in context")
    treatments = enumerate_treatments(ctx, kb, technique, heuristic_horizon)
    return _assemble(ctx, kb, beliefs, penalty, testpoints, treatments)


def build_treatment_only_id(
    ctx: Context,
    kb: KnowledgeBase,
    beliefs: dict[str, float],
    penalty: float,
    technique: str = "complete",
    heuristic_horizon: int = 1,
) -> FunctionalDecisionModel:
    """Degenerate one-step model when no testpoint remains: treat directly."""
    treatments = enumerate_treatments(ctx, kb, technique, heuristic_horizon)
    return _assemble(ctx, kb, beliefs, penalty, [], treatments)


def _treatment_fixes(alt: TreatmentAlt, element: str) -> bool:
    return alt.kind in ("replace", "repair") and alt.target == element


def _assemble(ctx, kb, beliefs, penalty, testpoints, treatments):
    elements = ctx.elements
    prior = tuple(beliefs.get(e, 0.0) for e in elements)
    labels = tuple(a.label for a in treatments)
    by_label = {a.label: a for a in treatments}

    nodes = {}
    nodes["CS"] = ChanceNode(elements, (), {(): prior})

    covered: dict[str, frozenset[str]] = {}
    if testpoints:
        for t in testpoints:
            cone = kb.cone_components(kb.testpoints[t].net)
            covered[t] = frozenset(
                e for e in elements if set(kb.components_under(e)) & cone
            )
        nodes["Test"] = DecisionNode(tuple(testpoints), ())
        r_cpt = {}
        for e in elements:
            for t in testpoints:
                not_ok = e in covered[t]
                r_cpt[(e, t)] = (0.0, 1.0) if not_ok else (1.0, 0.0)
        nodes["R"] = ChanceNode(("ok", "not_ok"), ("CS", "Test"), r_cpt)
        nodes["Treatment"] = DecisionNode(labels, ("Test", "R"))
        order = ("Test", "Treatment")
    else:
        nodes["Treatment"] = DecisionNode(labels, ())
        order = ("Treatment",)

    ns_cpt = {}
    for e in elements:
        for lab in labels:
            fixed = _treatment_fixes(by_label[lab], e)
            ns_cpt[(e, lab)] = (1.0, 0.0) if fixed else (0.0, 1.0)
    nodes["NS"] = ChanceNode(("device_ok", "device_faulty"), ("CS", "Treatment"), ns_cpt)

    vtable = {}
    if testpoints:
        for t in testpoints:
            probe_cost = kb.testpoints[t].probe_cost
            for lab in labels:
                for ns in ("device_ok", "device_faulty"):
                    cost = probe_cost + by_label[lab].cost
                    if ns == "device_faulty":
                        cost += penalty
                    vtable[(t, lab, ns)] = cost
        nodes["V"] = ValueNode(("Test", "Treatment", "NS"), vtable)
    else:
        for lab in labels:
            for ns in ("device_ok", "device_faulty"):
                cost = by_label[lab].cost + (penalty if ns == "device_faulty" else 0.0)
                vtable[(lab, ns)] = cost
        nodes["V"] = ValueNode(("Treatment", "NS"), vtable)

    diagram = InfluenceDiagram(nodes, order)
    return FunctionalDecisionModel(diagram, tuple(testpoints), by_label, covered)


# --- step execution -----------------------------------------------------------


def _live_context(session: DiagnosisSession) -> tuple[Context, dict[str, float]] | None:
    ctx = session.context
    live = [e for e in ctx.elements if session.remaining_mass(e) > 0]
    if not live:
        return None
    masses = [session.remaining_mass(e) for e in live]
    total = sum(masses)
    beliefs = {e: m / total for e, m in zip(live, masses)}
    return Context(ctx.faulted_parent, tuple(live)), beliefs


def meta_process_steps(session: DiagnosisSession):
    """One build-evaluate-act step over the session's current context.

    Generator: yields OracleRequests, returns a step outcome. Handles both
    the meta process (subsystems present, repair offered) and the base
    process (components only).
    """
    kb = session.kb
    cfg = session.config
    narrowed = _live_context(session)
    if narrowed is None:
        return Failed(session.context.faulted_parent)
    ctx, beliefs = narrowed
    penalty = session.fault_penalty

    chosen_probe = None
    if len(ctx.elements) == 1:
        # degenerate context: probing cannot discriminate, pick the cheapest
        # decisive action directly
        e = ctx.elements[0]
        alt = None
        best = penalty  # cost of doing nothing
        for cand in enumerate_treatments(ctx, kb, cfg.repair_technique,
                                         cfg.heuristic_horizon):
            if cand.kind == "nothing":
                continue
            if cand.cost < best:
                best, alt = cand.cost, cand
        if alt is None:
            alt = TreatmentAlt("nothing", None, 0.0)
        session.emit(sess.ModelBuilt("FL", {
            "context": ctx.faulted_parent, "elements": list(ctx.elements),
            "degenerate": True, "recommended": alt.label,
        }))
    else:
        try:
            model = build_functional_id(ctx, kb, beliefs, penalty,
                                        session.known_nets(),
                                        cfg.repair_technique, cfg.heuristic_horizon)
        except EmptyAlternatives:
            model = build_treatment_only_id(ctx, kb, beliefs, penalty,
                                            cfg.repair_technique,
                                            cfg.heuristic_horizon)
        policy, expected = evaluate(model.diagram)
        summary = {
            "context": ctx.faulted_parent,
            "elements": list(ctx.elements),
            "testpoints": list(model.testpoints),
            "treatments": [{"label": a.label, "cost": a.cost}
                           for a in model.treatments.values()],
            "expected_cost": expected,
        }
        if model.testpoints:
            chosen_probe = policy.choice("Test", ())
            summary["recommended"] = f"probe:{chosen_probe}"
        else:
            summary["recommended"] = policy.choice("Treatment", ())
        session.emit(sess.ModelBuilt("FL", summary))

        if chosen_probe is not None:
            tp = kb.testpoints[chosen_probe]
            ok = yield OracleRequest("probe", {
                "testpoint": chosen_probe, "cost": tp.probe_cost,
            })
            session.record_probe(chosen_probe, bool(ok))
            branch = (chosen_probe, "ok" if ok else "not_ok")
            alt = model.treatments[policy.choice("Treatment", branch)]
        else:
            alt = model.treatments[policy.choice("Treatment", ())]

    if alt.kind == "repair":
        target = kb.nodes[alt.target]
        session.ledger.inspections += target.inspection_cost
        session.emit(sess.Expanded(alt.target, target.inspection_cost))
        # the expanded subsystem's children join the frontier in its place;
        # live siblings stay in scope so the hypothesis set is preserved
        new_elements = []
        for e in ctx.elements:
            new_elements.extend(target.children if e == alt.target else (e,))
        new_ctx = Context(session.context.faulted_parent, tuple(new_elements))
        session.context = new_ctx
        return Expanded(new_ctx)

    cost = alt.cost if alt.kind == "replace" else 0.0
    session.ledger.treatments += cost
    session.emit(sess.Treatment(alt.kind, alt.target, cost))
    ok = yield OracleRequest("apply_and_check", {
        "action": alt.kind, "target": alt.target, "cost": cost,
    })
    if ok:
        return Resolved()
    if alt.kind == "replace":
        # a replacement clears any contained fault, so a persisting fault
        # exonerates the whole subtree
        session.eliminated |= set(kb.components_under(alt.target))
    return Failed(alt.target if alt.target is not None else ctx.faulted_parent)


def functional_component_steps(session: DiagnosisSession):
    """Repeat meta processes until resolution or declared failure."""
    while True:
        outcome = yield from meta_process_steps(session)
        if isinstance(outcome, Expanded):
            continue
        return outcome


def run_meta_process(session: DiagnosisSession):
    """Blocking single step against the session's oracle."""
    return drive(meta_process_steps(session), session.oracle)


def run_functional_component(session: DiagnosisSession):
    """Blocking full functional-component run against the session's oracle."""
    return drive(functional_component_steps(session), session.oracle)
