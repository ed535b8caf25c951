import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hierdx.bridge_fault_engine import ChipCandidate, build_bridge_id, candidate_chips
from hierdx.device_simulator import FaultSpec, inject_fault, simulator_oracle
from hierdx.influence_diagram import estimate_eval_ops, evaluate
from hierdx.knowledge_base import ComponentBehavior, CostModel, HierarchyNode, \
    KnowledgeBase
from hierdx.meta_level import (
    GrowthModel,
    Horizon,
    LengthMismatch,
    build_lookahead_id,
    build_meta_id,
    choose_pathway,
    compute_X1,
    compute_X2,
    compute_Y,
    expected_id_sequence,
    functional_estimates,
    functional_lookahead_horizon,
    meta_expectations,
)
from hierdx.orchestrator import create_session
from hierdx.session import Exhausted

from .generators import random_cost_tree

VEC = {"X1": 0, "X2": 1, "X3": 1, "X4": 1, "X5": 1}


def fixture_session(paper_y1, fault=FaultSpec.functional("G1", 1), vec=VEC):
    sim = inject_fault(paper_y1, fault)
    sim.current_inputs = dict(vec)
    vals = sim.evaluate(vec)
    obs = {**vec, **{o: vals[o] for o in paper_y1.outputs}}
    return create_session(paper_y1, obs, oracle=simulator_oracle(sim)), sim


class TestHorizon:
    def test_first_run(self, paper_y1):
        session, _ = fixture_session(paper_y1)
        h = session.current_horizon
        assert h.horizon_nodes == ("Y1-sub",)
        assert h.d == 3
        assert h.d_max == 2
        assert h.failed_node is None

    def test_failure_at_or1_gives_siblings(self, paper_y1):
        session, _ = fixture_session(paper_y1)
        session.failed_node = "OR1"
        h = functional_lookahead_horizon(session)
        assert set(h.horizon_nodes) == {"P1-sub", "P2-sub"}
        assert h.d_max == 1

    def test_only_child_climbs_to_uncle(self):
        nodes = {
            "R": HierarchyNode("R", "subsystem", ("S1", "S2"), 1, 50, 0.02, None),
            "S1": HierarchyNode("S1", "subsystem", ("C1",), 1, 20, 0.01, "t1"),
            "S2": HierarchyNode("S2", "subsystem", ("C2",), 1, 20, 0.01, "t2"),
            "C1": HierarchyNode("C1", "component", (), 0, 5, 0.01, "t1"),
            "C2": HierarchyNode("C2", "component", (), 0, 5, 0.01, "t2"),
        }
        from hierdx.knowledge_base import Testpoint

        behaviors = {
            "C1": ComponentBehavior("C1", "BUF", ("I1",), "o1"),
            "C2": ComponentBehavior("C2", "BUF", ("o1",), "o2"),
        }
        tps = {"t1": Testpoint("t1", "o1", 1.0), "t2": Testpoint("t2", "o2", 1.0)}
        cm = CostModel(0.001, 100.0, 0.9, 3.0, 2.0)
        kb = KnowledgeBase("R", nodes, behaviors, ("I1",), ("o2",), tps, {}, cm)
        from hierdx.session import DiagnosisSession, EngineConfig

        session = DiagnosisSession(kb=kb, config=EngineConfig(), observations={},
                                   fault_penalty=100.0, initial_faulted="S1",
                                   fl_candidates=frozenset({"C1", "C2"}))
        session.failed_node = "C1"
        h = functional_lookahead_horizon(session)
        assert h.horizon_nodes == ("S2",)
        assert "S1" in session.pruned

    def test_exhaustion_past_root(self, paper_y1):
        session, _ = fixture_session(paper_y1)
        session.eliminated |= set(paper_y1.behaviors)  # nothing left anywhere
        session.failed_node = "OR1"
        with pytest.raises(Exhausted):
            functional_lookahead_horizon(session)

    def test_never_returns_pruned(self, paper_y1):
        session, _ = fixture_session(paper_y1)
        session.pruned |= {"P1-sub"}
        session.failed_node = "OR1"
        h = functional_lookahead_horizon(session)
        assert set(h.horizon_nodes).isdisjoint(session.pruned)


class TestGrowth:
    def test_single_step(self, paper_y1):
        base = build_lookahead_id(paper_y1, ("Y1-sub",))
        growth = GrowthModel(b_avg=2.0, base_diagram=base)
        ids = expected_id_sequence(growth, 1)
        assert len(ids) == 1
        assert ids[0] > 0

    def test_node_count_grows_by_ceil_bavg(self, paper_y1):
        base = build_lookahead_id(paper_y1, ("Y1-sub",))
        growth = GrowthModel(b_avg=2.0, base_diagram=base)
        from hierdx.meta_level import _grow_once

        d1, f1 = _grow_once(base, "CS", 2, 1, 5.0, 5.0)
        d2, _ = _grow_once(d1, f1, 2, 2, 5.0, 5.0)
        assert len(d1.nodes) == len(base.nodes) + 2
        assert len(d2.nodes) == len(d1.nodes) + 2

    def test_deterministic(self, paper_y1):
        base = build_lookahead_id(paper_y1, ("Y1-sub",))
        g = lambda: expected_id_sequence(GrowthModel(2.0, base), 2)
        assert g() == g()


class TestX1:
    def test_worked_example(self):
        assert compute_X1([100, 180, 300], d=3, d_max=2) == pytest.approx(320.0)

    def test_single_case(self):
        assert compute_X1([50], d=1, d_max=0) == pytest.approx(50.0)

    def test_coefficients_exact(self):
        for d_max in range(6):
            n = d_max + 1
            for j in range(n):
                ids = [0.0] * n
                ids[j] = 1.0
                got = compute_X1(ids, d=d_max + 1, d_max=d_max)
                assert Fraction(n - j, n) == Fraction(got).limit_denominator(10 ** 6)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            compute_X1([1.0, 2.0], d=3, d_max=2)

    def test_monte_carlo_uniform_stopping(self):
        rng = random.Random(7)
        ids = [100, 180, 300]
        d_max = 2
        x1 = compute_X1(ids, d=3, d_max=d_max)
        n = 10 ** 5
        total = 0.0
        for _ in range(n):
            i = rng.randint(1, d_max + 1)
            total += sum(ids[:i])
        assert abs(total / n - x1) / x1 < 0.01


class TestX2:
    def test_one_subsystem_two_leaves(self):
        nodes = {
            "H": HierarchyNode("H", "subsystem", ("a", "b"), 2, 12, 0.02, None),
            "a": HierarchyNode("a", "component", (), 0, 5, 0.01, None),
            "b": HierarchyNode("b", "component", (), 0, 5, 0.01, None),
        }
        cm = CostModel(0.001, None, 0.9, 1.0, 1.0)
        kb = KnowledgeBase("H", nodes, {}, (), (), {}, {}, cm)
        x2, levels = compute_X2(kb, Horizon(None, ("H",), 1, 1))
        assert levels == [12.0, 7.0]
        assert x2 == pytest.approx(9.5)

    def test_leaf_horizon(self, paper_y1):
        x2, levels = compute_X2(paper_y1, Horizon(None, ("G5",), 3, 0))
        assert x2 == pytest.approx(5.0)
        assert levels == [5.0]

    def test_paper_first_run_value(self, paper_y1):
        x2, levels = compute_X2(paper_y1, Horizon(None, ("Y1-sub",), 3, 2))
        assert levels[0] == pytest.approx(30.0)
        assert levels[1] == pytest.approx((14 + 14 + 7) / 3)
        assert levels[2] == pytest.approx(9.0)
        assert x2 == pytest.approx((30 + 35 / 3 + 9) / 3)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_brute_force_level_mixture(self, seed):
        kb = random_cost_tree(random.Random(seed), max_nodes=25)
        horizon = Horizon(None, (kb.root,), kb.max_depth(), kb.height(kb.root))
        x2, levels = compute_X2(kb, horizon)

        by_level = {}

        def walk(nid, level, path):
            node = kb.nodes[nid]
            cost = sum(kb.nodes[p].inspection_cost for p in path) + node.replacement_cost
            by_level.setdefault(level, []).append(cost)
            for c in node.children:
                walk(c, level + 1, path + [nid])

        walk(kb.root, 1, [])
        expect_levels = [sum(v) / len(v) for _, v in sorted(by_level.items())]
        assert levels == pytest.approx(expect_levels)
        assert x2 == pytest.approx(sum(expect_levels) / len(expect_levels))


class TestY:
    def test_single_chip(self, paper_y1):
        cands = [ChipCandidate("CHIP1", 0.3, 2.0, 0.3)]
        est = compute_Y(paper_y1, cands)
        assert est.Y2 == pytest.approx(2.0)
        assert est.Y1 == pytest.approx(
            estimate_eval_ops(build_bridge_id(cands, paper_y1.cost_model)))

    def test_two_equal_effort(self, paper_y1):
        cands = [ChipCandidate("A", 0.8, 2.0, 0.8), ChipCandidate("B", 0.2, 2.0, 0.2)]
        est = compute_Y(paper_y1, cands)
        assert est.Y2 == pytest.approx(2.0 * (1 + 0.2))

    def test_no_chips_flagged(self, paper_y1):
        est = compute_Y(paper_y1, [])
        assert (est.Y1, est.Y2) == (0.0, 0.0)
        assert est.no_bridge_candidates


class TestMetaChoice:
    def test_worked_example(self):
        ev_fl, ev_bfl = meta_expectations(10.0, 8.0, 0.7)
        assert ev_fl == pytest.approx(12.4, abs=1e-9)
        assert ev_bfl == pytest.approx(15.0, abs=1e-9)
        pol, cost = evaluate(build_meta_id(10.0, 8.0, 0.7))
        assert pol.choice("M", ()) == "FL"
        assert cost == pytest.approx(12.4, abs=1e-9)

    def test_certain_functional(self):
        pol, _ = evaluate(build_meta_id(10.0, 1.0, 1.0))
        assert pol.choice("M", ()) == "FL"

    def test_tie_breaks_to_fl(self):
        pol, _ = evaluate(build_meta_id(5.0, 5.0, 0.5))
        assert pol.choice("M", ()) == "FL"

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_scale_invariance(self, seed):
        rng = random.Random(seed)
        x, y = rng.uniform(0.1, 50), rng.uniform(0.1, 50)
        p = rng.uniform(0.0, 1.0)
        k = 2.0 ** rng.randint(-3, 6)
        pol1, _ = evaluate(build_meta_id(x, y, p))
        pol2, _ = evaluate(build_meta_id(k * x, k * y, p))
        assert pol1.choice("M", ()) == pol2.choice("M", ())

    def test_fixture_first_choice(self, paper_y1):
        session, _ = fixture_session(paper_y1)
        chosen = choose_pathway(session)
        assert chosen == "FL"
        est = session.last_estimates
        assert est["X2"] == pytest.approx((30 + 35 / 3 + 9) / 3)
        assert est["EV_FL"] < est["EV_BFL"]

    def test_estimates_include_id_sequence_head(self, paper_y1):
        session, _ = fixture_session(paper_y1)
        x1, x2, ids = functional_estimates(session, session.current_horizon)
        assert len(ids) == session.current_horizon.d_max + 1
        assert x1 == pytest.approx(compute_X1(ids, 3, 2))
