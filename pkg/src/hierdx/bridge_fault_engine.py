"""Bridge-fault causal pathway: decide which chip to physically inspect next
from packaging adjacency priors and per-chip inspection effort.

Each step builds a one-decision model whose value is the realized cumulative
search effort (the chosen chip first, the rest in best order), evaluates it,
and inspects the recommended chip. The resulting inspection order maximizes
posterior-per-effort at every step, which minimizes expected total effort
over all inspection orders.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import session as sess
from .influence_diagram import ChanceNode, DecisionNode, InfluenceDiagram, ValueNode, \
    evaluate
from .knowledge_base import CostModel, KnowledgeBase
from .session import DiagnosisError, DiagnosisSession, OracleRequest, drive


class NoChips(DiagnosisError):
    pass


@dataclass(frozen=True)
class ChipCandidate:
    chip: str
    posterior: float  # probability the bridge sits at this chip
    effort: float
    raw_mass: float  # unnormalized single-bridge mass, kept for renormalization


@dataclass(frozen=True)
class Resolved:
    chip: str


@dataclass(frozen=True)
class Failed:
    pass


def candidate_chips(kb: KnowledgeBase, region_nets: set[str] | None = None
                    ) -> list[ChipCandidate]:
    """Per-chip bridge candidates: mass 1 - prod(1 - pair prior), normalized
    together with a residual no-bridge mass. Optionally restricted to chips
    carrying at least one net of the suspected region."""
    chips = list(kb.chips.values())
    if region_nets is not None:
        inside = [c for c in chips if any(net in region_nets for _, net in c.pins)]
        if inside:  # fall back to all chips rather than going blind
            chips = inside
    if not chips:
        raise NoChips("knowledge base declares no chips")
    masses = []
    no_bridge = 1.0
    for chip in kb.chips.values():
        for p in chip.bridge_priors:
            no_bridge *= 1.0 - p
    for chip in chips:
        m = 1.0
        for p in chip.bridge_priors:
            m *= 1.0 - p
        masses.append(1.0 - m)
    total = no_bridge + sum(masses)
    effort = kb.cost_model.chip_inspect_effort
    return [
        ChipCandidate(chip.id, m / total, effort, m)
        for chip, m in zip(chips, masses)
    ]


def ratio_order(candidates: list[ChipCandidate]) -> list[ChipCandidate]:
    """Nonincreasing posterior/effort; declaration order breaks ties."""
    indexed = list(enumerate(candidates))
    indexed.sort(key=lambda t: (-(t[1].posterior / t[1].effort
                                  if t[1].effort > 0 else float("inf")), t[0]))
    return [c for _, c in indexed]


def build_bridge_id(candidates: list[ChipCandidate], cost_model: CostModel
                    ) -> InfluenceDiagram:
    """One-decision model over which chip to inspect next.

    The value of inspecting chip c when the bridge is at chip j is the total
    effort spent until j is reached, starting at c and continuing in best
    (posterior/effort) order; a no-bridge outcome costs the full sweep plus
    the residual-fault penalty. Its argmin is exactly the best-ratio chip.
    """
    if not candidates:
        raise NoChips("no candidates remain")
    names = [c.chip for c in candidates]
    post = {c.chip: c.posterior for c in candidates}
    effort = {c.chip: c.effort for c in candidates}
    none_mass = max(0.0, 1.0 - sum(post.values()))
    penalty = cost_model.fault_penalty_F or 0.0

    states = tuple(names) + ("no_bridge",)
    prior = tuple(post[n] for n in names) + (none_mass,)
    nodes = {
        "BridgeSite": ChanceNode(states, (), {(): prior}),
        "Inspect": DecisionNode(tuple(names), ()),
    }
    table = {}
    for first in names:
        order = [first] + [c.chip for c in ratio_order(
            [c for c in candidates if c.chip != first])]
        cumulative = {}
        acc = 0.0
        for chip in order:
            acc += effort[chip]
            cumulative[chip] = acc
        for site in names:
            table[(first, site)] = cumulative[site]
        table[(first, "no_bridge")] = acc + penalty
    nodes["V"] = ValueNode(("Inspect", "BridgeSite"), table)
    return InfluenceDiagram(nodes, ("Inspect",))


def renormalize(remaining: list[ChipCandidate]) -> list[ChipCandidate]:
    """Posteriors over the remaining candidates plus no-bridge sum to one."""
    no_bridge_like = 1.0
    for c in remaining:
        no_bridge_like *= 1.0 - c.raw_mass
    total = no_bridge_like + sum(c.raw_mass for c in remaining)
    return [replace(c, posterior=c.raw_mass / total) for c in remaining]


def bridge_component_steps(session: DiagnosisSession):
    """Inspect chips in recommended order until the bridge is found and
    removed or the candidates are exhausted."""
    kb = session.kb
    candidates = session.bridge_candidates
    if candidates is None:
        raise DiagnosisError("bridge candidates not initialized")
    while candidates:
        diagram = build_bridge_id(candidates, kb.cost_model)
        policy, expected = evaluate(diagram)
        chip = policy.choice("Inspect", ())
        session.emit(sess.ModelBuilt("BFL", {
            "candidates": [{"chip": c.chip, "posterior": c.posterior,
                            "effort": c.effort} for c in candidates],
            "expected_cost": expected,
            "recommended": f"inspect_chip:{chip}",
        }))
        effort = kb.cost_model.chip_inspect_effort
        session.ledger.effort += effort
        cleared = yield OracleRequest("apply_and_check", {
            "action": "inspect_chip", "target": chip, "cost": effort,
        })
        session.emit(sess.ChipInspected(chip, bool(cleared), effort))
        if cleared:
            repair = kb.cost_model.bridge_repair_cost
            session.ledger.treatments += repair
            session.emit(sess.Treatment("remove_bridge", chip, repair))
            session.bridge_candidates = [c for c in candidates if c.chip != chip]
            return Resolved(chip)
        candidates = renormalize([c for c in candidates if c.chip != chip])
        session.bridge_candidates = candidates
    return Failed()


def run_bridge_component(session: DiagnosisSession):
    """Blocking full bridge-component run against the session's oracle."""
    return drive(bridge_component_steps(session), session.oracle)
