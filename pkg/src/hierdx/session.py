"""Diagnosis session state, transcript events, and the oracle protocol.

A session owns the mutable state of one diagnosis run: the focus context,
what has been exonerated or pruned so far, pathway beliefs, the transcript
and the cost ledger. Engines talk to the outside world (simulator or human
technician) exclusively through OracleRequest objects yielded by generator
pipelines, which keeps simulated, interactive, and HTTP-driven runs on the
exact same code path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Any, Callable, Generator, Iterator

from .knowledge_base import KnowledgeBase


class DiagnosisError(Exception):
    pass


class NoFaultObserved(DiagnosisError):
    pass


class AmbiguousRoot(DiagnosisError):
    pass


class Exhausted(DiagnosisError):
    pass


class OracleAborted(DiagnosisError):
    pass


@dataclass
class EngineConfig:
    repair_technique: str = "complete"  # "complete" | "heuristic"
    heuristic_horizon: int = 1
    max_pathway_switches: int = 8
    restrict_bridge_candidates: bool = True
    seed: int = 0
    fault_penalty_override: float | None = None


# --- transcript ---------------------------------------------------------------


@dataclass(frozen=True)
class Event:
    def to_dict(self) -> dict:
        d = {"event": type(self).__name__}
        d.update(asdict(self))
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class PathwayChosen(Event):
    pathway: str  # "FL" | "BFL"
    estimates: dict


@dataclass(frozen=True)
class ModelBuilt(Event):
    pathway: str
    summary: dict


@dataclass(frozen=True)
class Probe(Event):
    testpoint: str
    result: str  # "ok" | "not_ok"
    cost: float


@dataclass(frozen=True)
class Treatment(Event):
    kind: str  # "nothing" | "replace" | "remove_bridge"
    target: str | None
    cost: float


@dataclass(frozen=True)
class Expanded(Event):
    subsystem: str
    inspection_cost: float


@dataclass(frozen=True)
class ChipInspected(Event):
    chip: str
    cleared: bool
    cost: float


@dataclass(frozen=True)
class ComponentFailed(Event):
    pathway: str
    node: str


@dataclass(frozen=True)
class DeviceOk(Event):
    total_cost: float


@dataclass(frozen=True)
class AssumptionViolation(Event):
    reason: str


def transcript_to_jsonl(events: list[Event]) -> str:
    return "\n".join(e.to_json() for e in events)


# --- oracle protocol ----------------------------------------------------------


@dataclass(frozen=True)
class OracleRequest:
    """A question the engine cannot answer itself.

    kind "probe":           payload {testpoint, cost}; answer bool (ok?)
    kind "apply_and_check": payload {action, target, pair?, cost}; the action
                            is carried out and the answer is whether the
                            device then works (bool).
    """

    kind: str
    payload: dict


Answer = bool
StepGenerator = Generator[OracleRequest, Answer, Any]


def drive(gen: StepGenerator, answer: Callable[[OracleRequest], Answer]):
    """Run a step generator to completion with a synchronous oracle."""
    try:
        request = next(gen)
        while True:
            request = gen.send(answer(request))
    except StopIteration as stop:
        return stop.value


# --- session ------------------------------------------------------------------


@dataclass
class Ledger:
    probes: float = 0.0
    treatments: float = 0.0
    inspections: float = 0.0
    effort: float = 0.0

    def total(self) -> float:
        return self.probes + self.treatments + self.inspections + self.effort

    def to_dict(self) -> dict:
        return {"probes": self.probes, "treatments": self.treatments,
                "inspections": self.inspections, "effort": self.effort,
                "total": self.total()}


@dataclass
class DiagnosisSession:
    kb: KnowledgeBase
    config: EngineConfig
    observations: dict[str, int]  # boundary observation: inputs and outputs
    fault_penalty: float
    initial_faulted: str | None = None
    context: Any = None  # functional_engine.Context
    fl_candidates: frozenset[str] = frozenset()
    eliminated: set[str] = field(default_factory=set)  # exonerated components
    pruned: set[str] = field(default_factory=set)  # hierarchy nodes pruned
    failed_node: str | None = None
    known_status: dict[str, str] = field(default_factory=dict)  # testpoint -> ok|not_ok
    bridge_candidates: list | None = None  # bridge_fault_engine.ChipCandidate
    bridge_initial_mass: float = 0.0
    fl_available: bool = True
    no_fault: bool = False
    current_horizon: Any = None  # meta_level.Horizon
    last_estimates: dict | None = None
    transcript: list[Event] = field(default_factory=list)
    ledger: Ledger = field(default_factory=Ledger)
    oracle: Callable[[OracleRequest], Answer] | None = None

    def emit(self, event: Event) -> None:
        self.transcript.append(event)

    def remaining_components(self, element: str) -> list[str]:
        return [c for c in self.kb.components_under(element)
                if c in self.fl_candidates and c not in self.eliminated]

    def remaining_mass(self, element: str) -> float:
        return sum(self.kb.nodes[c].failure_prior
                   for c in self.remaining_components(element))

    def fl_remaining_fraction(self) -> float:
        total = sum(self.kb.nodes[c].failure_prior for c in self.fl_candidates)
        if total <= 0 or not self.fl_available:
            return 0.0
        live = sum(self.kb.nodes[c].failure_prior for c in self.fl_candidates
                   if c not in self.eliminated)
        return live / total

    def bfl_remaining_fraction(self) -> float:
        if self.bridge_initial_mass <= 0:
            return 1.0 if self.bridge_candidates is None else 0.0
        if self.bridge_candidates is None:
            return 1.0
        live = sum(c.raw_mass for c in self.bridge_candidates)
        return live / self.bridge_initial_mass

    def pathway_posterior_fl(self) -> float:
        prior = self.kb.cost_model.pathway_prior_FL
        fl = prior * self.fl_remaining_fraction()
        bfl = (1.0 - prior) * self.bfl_remaining_fraction()
        if fl + bfl <= 0:
            raise Exhausted("both causal pathways exhausted")
        return fl / (fl + bfl)

    def known_nets(self) -> set[str]:
        nets = set(self.kb.outputs)
        for tp in self.known_status:
            nets.add(self.kb.testpoints[tp].net)
        return nets

    def record_probe(self, testpoint: str, ok: bool) -> None:
        tp = self.kb.testpoints[testpoint]
        self.known_status[testpoint] = "ok" if ok else "not_ok"
        self.ledger.probes += tp.probe_cost
        self.emit(Probe(testpoint, "ok" if ok else "not_ok", tp.probe_cost))
        # single-fault exoneration: an ok cone clears everything inside it,
        # a not-ok cone clears everything outside it
        cone = self.kb.cone_components(tp.net)
        if ok:
            self.eliminated |= cone & self.fl_candidates
        else:
            self.eliminated |= set(self.fl_candidates) - cone
