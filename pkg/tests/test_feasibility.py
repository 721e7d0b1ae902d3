import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import random_capability, random_task
from ltlpsi.agent import compose_capabilities, make_capability
from ltlpsi.buchi import translate
from ltlpsi.feasibility import (
    BindingFamily,
    WorkCounter,
    accepting_trace_exists,
    feasible_binding_sets,
    prune_buchi,
    retained_edges,
)
from ltlpsi.formula import parse_task
from ltlpsi.product import build_product
from ltlpsi.scenario import load_scenario, scenario_from_dict


@pytest.fixture(scope="module")
def agriculture():
    sc = load_scenario("builtin:agriculture")
    b = translate(sc.task)
    return sc, b, {a.name: build_product(a, b, sc.bindings) for a in sc.agents}


def subsets(ids):
    return [frozenset(c) for k in range(1, len(ids) + 1) for c in itertools.combinations(sorted(ids), k)]


def lasso_oracle(g, r):
    """Exhaustive lasso search: a path q0 ->* f ->+ f over moves admitting ``r``."""
    r = frozenset(r)
    succ = {}
    for e in g.edges:
        if r <= e.feasible:
            succ.setdefault(e.src, []).append(e.dst)
    n = len(g.states)

    def paths_from(q, limit):
        frontier, seen = [q], {q}
        for _ in range(limit):
            frontier = [d for s in frontier for d in succ.get(s, [])]
            yield from frontier
            frontier = [d for d in frontier if d not in seen and not seen.add(d)]

    reach = {g.initial, *paths_from(g.initial, n)}
    return any(g.is_accepting(f) and f in set(paths_from(f, n)) for f in reach)


def test_agriculture_families(agriculture):
    sc, b, products = agriculture
    fams = {n: feasible_binding_sets(g, sc.bindings) for n, g in products.items()}
    assert all(fams.values())
    assert frozenset({1}) in fams["green"]
    assert frozenset({2, 3}) in fams["pink"]
    for n, g in products.items():
        assert prune_buchi(b, fams[n], g).edges == b.edges


def test_green_with_binding_1(agriculture):
    _, _, products = agriculture
    assert accepting_trace_exists(products["green"], {1})


def test_blue_against_exhaustive_lassos(agriculture):
    _, _, products = agriculture
    for r in subsets({1, 2, 3}):
        assert accepting_trace_exists(products["blue"], r) == lasso_oracle(products["blue"], r)


def test_empty_binding_set_rejected(agriculture):
    _, _, products = agriculture
    with pytest.raises(ValueError):
        accepting_trace_exists(products["green"], set())


def omni_scenario(m):
    return {
        "bindings": list(range(1, m + 1)),
        "task": " & ".join(f"F(p^{{{i}}})" for i in range(1, m + 1)),
        "capabilities": {"pc": {"states": ["off", "on"], "initial": "off", "labels": {"on": ["p"]},
                                "transitions": [["off", "on", 1], ["on", "off", 1]]}},
        "agents": {"omni": ["pc"]},
    }


def test_capable_agent_gets_everything_in_one_check():
    sc = scenario_from_dict(omni_scenario(3))
    g = build_product(sc.agents[0], translate(sc.task), sc.bindings)
    counter = WorkCounter()
    fam = feasible_binding_sets(g, sc.bindings, counter)
    assert fam.maximal == (frozenset({1, 2, 3}),)
    assert set(fam.members()) == set(subsets({1, 2, 3}))
    # a single emptiness check: every other candidate is a subset
    single = WorkCounter()
    accepting_trace_exists(g, {1, 2, 3}, single)
    assert counter.edges == single.edges


def test_single_binding():
    sc = scenario_from_dict(omni_scenario(1))
    g = build_product(sc.agents[0], translate(sc.task), sc.bindings)
    assert feasible_binding_sets(g, sc.bindings).maximal == (frozenset({1}),)


def test_empty_family_prunes_every_edge(agriculture):
    _, b, products = agriculture
    assert prune_buchi(b, BindingFamily(), products["green"]).edges == ()


def test_sensorless_agent_loses_measurement_edges(agriculture):
    sc, b, _ = agriculture
    data = {
        "bindings": [1, 2, 3],
        "task": sc.task_text,
        "props": ["region_A", "region_B", "pickup", "moisture", "UV", "thermal", "visual"],
        "wait_cost": 0,
        "capabilities": {
            "motion": {"states": ["A", "B"], "initial": "B",
                       "labels": {"A": ["region_A"], "B": ["region_B"]},
                       "transitions": [["A", "B", 1]], "symmetric": True},
        },
        "agents": {"walker": ["motion"]},
    }
    walker = scenario_from_dict(data).agents[0]
    g = build_product(walker, b, sc.bindings)
    fam = feasible_binding_sets(g, sc.bindings)
    kept = retained_edges(b, fam, g)
    # the definition, edge by edge: some member can take the edge on a reachable move
    for i, e in enumerate(b.edges):
        want = any(r <= pe.feasible for pe in g.edges if pe.buchi_edge == i for r in fam.members())
        assert (i in kept) == want
    measuring = [i for i, e in enumerate(b.edges)
                 if any(k[0] in ("moisture", "UV") for k in e.label.true)]
    assert measuring and not set(measuring) & kept


def test_random_families_match_exhaustive_search():
    rng = random.Random(12)
    ids = (1, 2, 3)
    for i in range(40):
        f = parse_task(random_task(rng, ids=ids, depth=3))
        spec = random_capability(rng)
        cap = make_capability("c", spec["states"], spec["initial"], spec["props"],
                              spec["transitions"], spec["labels"], 0.0)
        g = build_product(compose_capabilities([cap], f"a{i}"), translate(f), ids)
        fam = feasible_binding_sets(g, ids)
        for r in subsets(ids):
            assert (r in fam) == lasso_oracle(g, r), (i, sorted(r))


@given(st.sets(st.frozensets(st.integers(1, 4), min_size=1), max_size=5))
@settings(max_examples=200, deadline=None)
def test_binding_family_is_downward_closed(sets):
    fam = BindingFamily.from_sets(sets)
    members = set(fam.members())
    assert members == {frozenset(c) for s in sets for k in range(1, len(s) + 1)
                       for c in itertools.combinations(sorted(s), k)}
    for r in members:
        assert r in fam
    assert frozenset() not in fam
    assert fam.support() == frozenset().union(*sets) if sets else fam.support() == frozenset()
