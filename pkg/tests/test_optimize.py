import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltlpsi.optimize import InfeasibleSelection, brute_force_subteam, select_subteam
from ltlpsi.pipeline import optimize_plan, restrict_plan, simulate, synthesize
from ltlpsi.scenario import load_candidates, load_scenario
from ltlpsi.semantics import satisfies


@pytest.fixture(scope="module")
def candidate_table():
    bindings, cands = load_candidates("builtin:candidates")
    return bindings, {c.agent: c.bindings for c in cands}, {c.agent: c.cost for c in cands}


def test_candidate_table_single_coverage(candidate_table):
    bindings, offers, costs = candidate_table
    sel = select_subteam(offers, costs, "min_cost", 1, bindings)
    assert set(sel.agents) == {"A7", "A11"}
    assert frozenset().union(*sel.assignment.values()) >= frozenset(bindings)


def test_candidate_table_double_coverage(candidate_table):
    bindings, offers, costs = candidate_table
    sel = select_subteam(offers, costs, "min_cost", 2, bindings)
    assert set(sel.agents) == {"A4", "A7", "A11", "A16"}
    for rho in bindings:
        assert sum(rho in r for r in sel.assignment.values()) >= 2


@pytest.mark.parametrize("objective", ["min_cost", "min_agents", "min_bindings"])
@pytest.mark.parametrize("redundancy", [1, 2])
def test_candidate_table_matches_brute_force(candidate_table, objective, redundancy):
    bindings, offers, costs = candidate_table
    # brute force over all 20 agents is too slow; the first 10 still contain both optima
    names = list(offers)[:10] + [n for n in ("A11", "A16") if n not in list(offers)[:10]]
    sub = {n: offers[n] for n in names}
    try:
        want = brute_force_subteam(sub, costs, objective, redundancy, bindings)
    except InfeasibleSelection:
        with pytest.raises(InfeasibleSelection):
            select_subteam(sub, costs, objective, redundancy, bindings)
        return
    got = select_subteam(sub, costs, objective, redundancy, bindings)
    assert got.score == want.score


def test_objectives_differ():
    offers = {"big": [1, 2, 3], "a": [1], "b": [2], "c": [3]}
    costs = {"big": 10, "a": 1, "b": 1, "c": 1}
    assert select_subteam(offers, costs, "min_cost").agents == ("a", "b", "c")
    assert select_subteam(offers, costs, "min_agents").agents == ("big",)
    sel = select_subteam(offers, costs, "min_bindings")
    assert max(len(r) for r in sel.assignment.values()) == 1


def test_alternative_sets():
    sel = select_subteam({"x": [[1], [2, 3]], "y": [[1]]}, {"x": 1, "y": 1}, "min_agents")
    assert sel.agents == ("x", "y")
    assert sel.assignment == {"x": frozenset({2, 3}), "y": frozenset({1})}


def test_infeasible_and_invalid():
    with pytest.raises(InfeasibleSelection, match="binding 1 can be held by 1"):
        select_subteam({"x": [1, 2]}, redundancy=2)
    with pytest.raises(InfeasibleSelection):
        select_subteam({"x": [1]}, bindings={1, 2})
    with pytest.raises(ValueError):
        select_subteam({"x": [1]}, redundancy=0)
    with pytest.raises(ValueError):
        select_subteam({"x": [1]}, objective="fastest")
    with pytest.raises(ValueError):
        select_subteam({"x": [1]}, {"x": -1})


offer_sets = st.lists(st.frozensets(st.integers(1, 4), min_size=1, max_size=3), min_size=1, max_size=2)


@given(
    st.dictionaries(st.sampled_from([f"a{i}" for i in range(7)]), offer_sets, min_size=1, max_size=5),
    st.lists(st.integers(0, 9), min_size=7, max_size=7),
    st.sampled_from(["min_cost", "min_agents", "min_bindings"]),
    st.integers(1, 2),
)
@settings(max_examples=120, deadline=None)
def test_branch_and_bound_equals_brute_force(offers, costs, objective, redundancy):
    costs = {f"a{i}": c for i, c in enumerate(costs)}
    offers = {n: [sorted(s) for s in v] for n, v in offers.items()}
    try:
        want = brute_force_subteam(offers, costs, objective, redundancy)
    except InfeasibleSelection:
        with pytest.raises(InfeasibleSelection):
            select_subteam(offers, costs, objective, redundancy)
        return
    got = select_subteam(offers, costs, objective, redundancy)
    assert got.score == want.score
    assert got.agents == want.agents


def test_optimized_agriculture_plan_still_satisfies_the_task():
    syn = synthesize(load_scenario("builtin:agriculture"))
    sel = optimize_plan(syn, "min_agents")
    plan = restrict_plan(syn.plan, sel.assignment)
    trace = simulate(syn, plan)
    assert set(plan.team) == set(sel.agents)
    assert satisfies(trace.to_lasso(), trace.assignment, syn.scenario.task, syn.scenario.bindings)


def test_restrict_plan_rejects_bad_subteams():
    syn = synthesize(load_scenario("builtin:agriculture"))
    with pytest.raises(ValueError, match="unassigned"):
        restrict_plan(syn.plan, {"green": frozenset({1})})
    with pytest.raises(ValueError, match="cannot hold"):
        restrict_plan(syn.plan, {"green": frozenset({3})})
