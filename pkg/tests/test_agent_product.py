import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import random_capability, random_task
from ltlpsi.agent import AgentModelError, compose_capabilities, make_capability, validate_agent
from ltlpsi.buchi import BuchiAutomaton, Edge, EdgeLabel, translate
from ltlpsi.formula import parse_task
from ltlpsi.product import (
    assignment_family,
    binding_feasible,
    build_product,
    build_products,
    feasible_bindings,
    to_dot,
)
from ltlpsi.scenario import load_scenario


@pytest.fixture(scope="module")
def agriculture():
    return load_scenario("builtin:agriculture")


def cap_from(spec, name, wait=0.0):
    return make_capability(name, spec["states"], spec["initial"], spec["props"],
                           spec["transitions"], spec["labels"], wait)


# ------------------------------------------------------------ agents


def test_green_agent_composition(agriculture):
    green = agriculture.agent("green")
    assert len(green.state_names) <= 8
    assert green.labels[green.initial] == {"region_B"}
    assert green.state_names[green.initial] == "B|idle"
    assert validate_agent(green) == []


def test_single_state_identity():
    cap = make_capability("noop", ["s"], "s", set(), [("s", "s", 0.0)])
    a = compose_capabilities([cap], "solo")
    assert a.state_names == ("s",)
    assert a.edges == (((0, 0.0),),)


def test_weights_add(agriculture):
    orange = agriculture.agent("orange")
    src = orange.index_of("E|off|off|idle")
    dst = orange.index_of("E|on|off|pickup")
    assert orange.weight(src, dst) == pytest.approx(0.5 + 0.7)


def brute_force_product(caps):
    """Every combination of component states and moves, without reachability."""
    states = list(itertools.product(*(c.states for c in caps)))
    moves = {}
    for s in states:
        for d in states:
            parts = [c.transitions.get((a, b)) for c, a, b in zip(caps, s, d)]
            if all(p is not None for p in parts):
                moves[(s, d)] = sum(parts)
    labels = {s: frozenset().union(*(c.label(x) for c, x in zip(caps, s))) for s in states}
    return moves, labels


def test_composition_matches_brute_force_product():
    rng = random.Random(8)
    for i in range(30):
        caps = [cap_from(random_capability(rng, max_states=3), f"c{k}", 0.0)
                for k in range(rng.randint(1, 3))]
        a = compose_capabilities(caps, f"a{i}")
        moves, labels = brute_force_product(caps)
        comps = [tuple(n.split("|")) for n in a.state_names]
        assert len(comps) <= len(labels)
        for s, comp in enumerate(comps):
            assert a.labels[s] == labels[comp]
            got = {(comp, comps[d]): w for d, w in a.edges[s]}
            want = {k: w for k, w in moves.items() if k[0] == comp}
            assert got.keys() == want.keys()
            for k in got:
                assert got[k] == pytest.approx(want[k])
            assert a.edges[s], "composition of total capabilities stays total"


def test_capability_validation():
    with pytest.raises(AgentModelError, match="no outgoing"):
        make_capability("bad", ["a", "b"], "a", set(), [("a", "b", 1.0)])
    with pytest.raises(AgentModelError, match="negative"):
        make_capability("bad", ["a"], "a", set(), [("a", "a", -1.0)])
    with pytest.raises(AgentModelError, match="initial"):
        make_capability("bad", ["a"], "z", set(), [("a", "a", 1.0)])
    with pytest.raises(AgentModelError, match="undeclared"):
        make_capability("bad", ["a"], "a", {"p"}, [("a", "a", 1.0)], {"a": {"q"}})


def test_validate_agent_reports_missing_wait():
    cap = make_capability("ring", ["a", "b"], "a", set(), [("a", "b", 1.0), ("b", "a", 1.0)])
    problems = validate_agent(compose_capabilities([cap], "ring"))
    assert any("self-transition" in p for p in problems)


# ------------------------------------------------------------ products

E1 = EdgeLabel(frozenset(), frozenset({("pickup", 1), ("region_A", 2)}))


def test_unmentioned_binding_is_feasible():
    assert binding_feasible(3, E1, {"region_A", "pickup"})
    assert not binding_feasible(1, E1, {"region_A", "pickup"})


def test_agent_without_arm_cannot_take_pickup_binding(agriculture):
    blue = agriculture.agent("blue")
    label = EdgeLabel(frozenset({("pickup", 1)}), frozenset())
    assert not any(binding_feasible(1, label, blue.labels[s]) for s in blue.states)


def test_single_state_product():
    cap = make_capability("noop", ["s"], "s", set(), [("s", "s", 0.0)])
    a = compose_capabilities([cap], "solo")
    b = BuchiAutomaton((0,), 0, (Edge(0, EdgeLabel(), 0),), frozenset({0}))
    g = build_product(a, b, {1, 2})
    assert g.states == ((0, 0),)
    assert [e.feasible for e in g.edges] == [frozenset({1, 2})]


label_keys = st.sets(st.tuples(st.sampled_from("abc"), st.integers(1, 3)), max_size=4)


@given(label_keys, label_keys, st.sets(st.sampled_from("abcd")), st.sampled_from("abcd"))
@settings(max_examples=300, deadline=None)
def test_feasibility_properties(true, false, nxt, extra):
    false = false - true
    label = EdgeLabel(frozenset(true), frozenset(false))
    feas = feasible_bindings(label, nxt, {1, 2, 3})
    family = assignment_family(feas)
    # every nonempty subset of a member is a member
    for r in family:
        for k in range(1, len(r)):
            assert all(frozenset(c) in family for c in itertools.combinations(r, k))
    # adding a proposition the label never mentions changes nothing
    mentioned = {p for p, _ in true | false}
    if extra not in mentioned:
        assert feasible_bindings(label, nxt | {extra}, {1, 2, 3}) == feas


def test_product_edges_match_definition(agriculture):
    b = translate(agriculture.task)
    for a in agriculture.agents:
        g = build_product(a, b, agriculture.bindings)
        seen = set()
        for e in g.edges:
            (s, z), (d, z2) = e.src, e.dst
            be = b.edges[e.buchi_edge]
            assert (be.src, be.dst) == (z, z2)
            assert e.weight == a.weight(s, d)
            assert e.feasible == feasible_bindings(be.label, a.labels[d], agriculture.bindings)
            assert e.feasible
            seen.add((e.src, e.buchi_edge, d))
        # completeness: every agent move under every automaton edge with something feasible
        for q in g.states:
            s, z = q
            for i in b.out_edges(z):
                for d, _ in a.successors(s):
                    if feasible_bindings(b.edges[i].label, a.labels[d], agriculture.bindings):
                        assert (q, i, d) in seen


def test_parallel_products_equal_sequential(agriculture):
    b = translate(agriculture.task)
    seq = build_products(agriculture.agents, b, agriculture.bindings, workers=1)
    par = build_products(agriculture.agents, b, agriculture.bindings, workers=4)
    assert [(g.states, g.edges) for g in seq] == [(g.states, g.edges) for g in par]


def test_product_dot(agriculture):
    b = translate(agriculture.task)
    g = build_product(agriculture.agent("green"), b, agriculture.bindings)
    dot = to_dot(g, name="green")
    assert dot.startswith("digraph green {")
    assert '"B|idle,0"' in dot
    partial = to_dot(g, buchi_states=[0])
    assert partial.count("->") < dot.count("->")


def test_random_products_are_reachable_closures():
    rng = random.Random(9)
    for i in range(20):
        f = parse_task(random_task(rng))
        a = compose_capabilities([cap_from(random_capability(rng), "c", 0.0)], f"r{i}")
        g = build_product(a, translate(f), {1, 2})
        states = set(g.states)
        assert g.initial in states
        assert all(e.src in states and e.dst in states for e in g.edges)
