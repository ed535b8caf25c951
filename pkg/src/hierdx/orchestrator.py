"""Top-level diagnosis loop: choose a causal pathway, run its component,
update pathway beliefs on failure, repeat until the fault is repaired or
the single-fault assumption is untenable."""

from __future__ import annotations

from . import bridge_fault_engine as bfe
from . import functional_engine as fe
from . import session as sess
from .bridge_fault_engine import NoChips, candidate_chips
from .functional_engine import Context, functional_candidates, initialize_context
from .knowledge_base import KnowledgeBase, repair_cost_complete
from .meta_level import (
    choose_pathway,
    functional_lookahead_horizon,
    session_region_nets,
)
from .session import (
    AmbiguousRoot,
    DiagnosisSession,
    EngineConfig,
    Exhausted,
    NoFaultObserved,
    drive,
)


def resolve_fault_penalty(kb: KnowledgeBase, config: EngineConfig) -> float:
    """Cost of leaving the device faulty; defaults to twice the cheapest
    complete repair so any fault-clearing treatment dominates doing nothing."""
    if config.fault_penalty_override is not None:
        return config.fault_penalty_override
    if kb.cost_model.fault_penalty_F is not None:
        return kb.cost_model.fault_penalty_F
    return 2.0 * repair_cost_complete(kb, kb.root)


def create_session(kb: KnowledgeBase, observations: dict[str, int],
                   config: EngineConfig | None = None,
                   oracle=None) -> DiagnosisSession:
    config = config or EngineConfig()
    session = DiagnosisSession(
        kb=kb,
        config=config,
        observations=dict(observations),
        fault_penalty=resolve_fault_penalty(kb, config),
        oracle=oracle,
    )
    try:
        ctx = initialize_context(kb, observations)
    except NoFaultObserved:
        session.no_fault = True
        session.fl_available = False
        return session
    except AmbiguousRoot:
        # several top-level subsystems implicated: no single functional fault
        # explains the observation, so only the bridge pathway applies
        session.fl_available = False
        return session
    session.initial_faulted = ctx.faulted_parent
    session.context = ctx
    session.fl_candidates = functional_candidates(kb, ctx.faulted_parent, observations)
    if not session.fl_candidates:
        session.fl_available = False
    else:
        session.current_horizon = functional_lookahead_horizon(session)
    return session


def update_pathway_beliefs(session: DiagnosisSession, pathway: str, node: str) -> None:
    """Remove the exonerated mass from the failed pathway and recompute the
    functional horizon; exhaustion zeroes that pathway's posterior."""
    if pathway == "FL":
        session.failed_node = node
        session.context = None
        try:
            session.current_horizon = functional_lookahead_horizon(session)
        except Exhausted:
            session.current_horizon = None
            session.fl_available = False
    # bridge failures empty the candidate list inside the component, which
    # already zeroes the pathway's remaining fraction


def diagnosis_steps(session: DiagnosisSession):
    """Generator for one full diagnosis run; yields OracleRequests and
    returns the completed transcript."""
    kb = session.kb
    if session.no_fault:
        session.emit(sess.AssumptionViolation("no fault observed"))
        return session.transcript

    switches = 0
    last_pathway = None
    while True:
        try:
            pathway = choose_pathway(session)
        except Exhausted:
            session.emit(sess.AssumptionViolation("both causal pathways exhausted"))
            return session.transcript
        if last_pathway is not None and pathway != last_pathway:
            switches += 1
            if switches > session.config.max_pathway_switches:
                session.emit(sess.AssumptionViolation("pathway alternation cap exceeded"))
                return session.transcript
        last_pathway = pathway
        session.emit(sess.PathwayChosen(pathway, dict(session.last_estimates)))

        if pathway == "FL":
            if session.context is None:
                nodes = session.current_horizon.horizon_nodes
                session.context = Context(kb.parent(nodes[0]) or kb.root, nodes)
            outcome = yield from fe.functional_component_steps(session)
            if isinstance(outcome, fe.Resolved):
                session.emit(sess.DeviceOk(session.ledger.total()))
                return session.transcript
            session.emit(sess.ComponentFailed("FL", outcome.node))
            update_pathway_beliefs(session, "FL", outcome.node)
        else:
            if session.bridge_candidates is None:
                try:
                    session.bridge_candidates = candidate_chips(
                        kb, session_region_nets(session))
                except NoChips:
                    session.bridge_candidates = []
                session.bridge_initial_mass = sum(
                    c.raw_mass for c in session.bridge_candidates)
            outcome = yield from bfe.bridge_component_steps(session)
            if isinstance(outcome, bfe.Resolved):
                session.emit(sess.DeviceOk(session.ledger.total()))
                return session.transcript
            session.emit(sess.ComponentFailed("BFL", "chip-candidates-exhausted"))
            update_pathway_beliefs(session, "BFL", "")


def run_diagnosis(kb: KnowledgeBase, observations: dict[str, int], oracle,
                  config: EngineConfig | None = None) -> list[sess.Event]:
    """Blocking full diagnosis against a synchronous oracle; returns the
    transcript, whose terminal event is DeviceOk or AssumptionViolation."""
    session = create_session(kb, observations, config, oracle)
    return drive(diagnosis_steps(session), oracle)


def run_diagnosis_session(session: DiagnosisSession) -> list[sess.Event]:
    return drive(diagnosis_steps(session), session.oracle)
