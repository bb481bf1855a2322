import random

import networkx as nx
import pytest

from app.models import Constant, Query
from app.services.attack import (
    CycleStatus,
    Strength,
    attack_graph,
    attack_graph_dot,
    attacks_atom,
    attacks_variable,
    cycle_status,
    format_witness,
    initial_strong_components,
)
from app.services.classify import QueryClass, classify
from app.services.fd import k_closure
from app.tools.fuzz import generate_query
from app.utils.errors import AtomNotInQuery, UnknownVariable

from conftest import q_, v_

RANK = {QueryClass.FO: 0, QueryClass.PTIME_NOT_FO: 1, QueryClass.CONP_COMPLETE: 2}


def test_closure_query_edges(closure_query):
    g = attack_graph(closure_query)
    assert set(g.edges) == {
        ("R", "S"), ("R", "T"),
        ("S", "R"), ("S", "T"), ("S", "U"), ("S", "V"),
        ("T", "R"), ("T", "S"), ("T", "U"), ("T", "V"),
        ("U", "V"),
    }
    assert all(a.strength is Strength.WEAK for a in g.edges.values())
    assert format_witness(g.edges[("R", "T")].witness) == "R -y- S -z- T"


def test_closure_query_components(closure_query):
    components = initial_strong_components(attack_graph(closure_query))
    assert components.initial_components() == [frozenset({"R", "S", "T"})]
    assert components.component_of("U") != components.component_of("R")
    with pytest.raises(AtomNotInQuery):
        components.component_of("Z")


def test_markov_query_components(markov_query):
    components = initial_strong_components(attack_graph(markov_query))
    assert components.initial_components() == [frozenset({"R", "S"})]
    for name in ("V1", "W", "V2"):
        assert not components.initial[components.component_of(name)]


def test_strong_and_weak_attacks(hard_query):
    g = attack_graph(hard_query)
    assert g.edges[("R1", "S1")].strength is Strength.STRONG
    assert g.edges[("S1", "R1")].strength is Strength.WEAK
    report = cycle_status(g)
    assert report.status is CycleStatus.STRONG_CYCLE
    assert report.pair == ("R1", "S1")


def test_single_attack(fo_query):
    g = attack_graph(fo_query)
    assert set(g.edges) == {("R", "S")}
    assert [a.name for a in g.unattacked()] == ["R"]
    assert cycle_status(g).status is CycleStatus.ACYCLIC


def test_consistent_atoms_do_not_attack():
    q = q_("consistent T(x | y)\nS(y | x)")
    g = attack_graph(q)
    assert not any(source == "T" for source, _ in g.edges)


def test_attacks_atom_requires_query_atoms(closure_query):
    stranger = q_("Z(x | y)").atoms[0]
    with pytest.raises(AtomNotInQuery):
        attacks_atom(closure_query, closure_query.atom("R"), stranger)


def test_attacks_variable(closure_query):
    r = closure_query.atom("R")
    assert attacks_variable(closure_query, r, v_("z"))
    assert not attacks_variable(closure_query, r, v_("u"))
    with pytest.raises(UnknownVariable):
        attacks_variable(closure_query, r, v_("q"))


def test_dot_marks_weak_edges_dashed(hard_query):
    dot = attack_graph_dot(attack_graph(hard_query))
    assert dot.startswith("digraph attack {")
    assert '"R1" -> "S1" [style=solid' in dot
    assert '"S1" -> "R1" [style=dashed' in dot


# ---- Properties over random queries ----
def _random_queries(count: int, seed: int):
    rng = random.Random(seed)
    produced = 0
    while produced < count:
        q = generate_query(rng, max_atoms=6)
        if q.consistent_atoms:
            continue
        produced += 1
        yield q


def _has_strong_cycle(g) -> bool:
    graph = g.to_networkx()
    return any(
        a.strength is Strength.STRONG and nx.has_path(graph, t, s)
        for (s, t), a in g.edges.items()
    )


def test_quasi_transitivity():
    for q in _random_queries(500, seed=11):
        g = attack_graph(q)
        for f, h in g.edges:
            for (h2, k) in g.edges:
                if h2 != h or k == f:
                    continue
                assert g.attacks(f, k) or g.attacks(h, f), str(q)


def test_cycles_have_two_cycles():
    for q in _random_queries(500, seed=12):
        g = attack_graph(q)
        status = cycle_status(g).status
        has_cycle = next(nx.simple_cycles(g.to_networkx()), None) is not None
        assert has_cycle == (status is not CycleStatus.ACYCLIC), str(q)
        assert _has_strong_cycle(g) == (status is CycleStatus.STRONG_CYCLE), str(q)


def test_substitution_never_upgrades():
    rng = random.Random(13)
    for q in _random_queries(300, seed=13):
        before = classify(q).query_class
        for x in q.ordered_vars:
            after = classify(q.substitute({x: Constant(rng.choice("012"))})).query_class
            assert RANK[after] <= RANK[before], f"{q}\n{x}"


def test_classification_ignores_order_and_names():
    for q in _random_queries(300, seed=14):
        renamed = {v: v_(f"{v.name}_r") for v in q.vars}
        shuffled = Query(tuple(reversed(q.atoms)))
        assert classify(shuffled).query_class is classify(q).query_class
        assert classify(q.substitute(renamed)).query_class is classify(q).query_class  # type: ignore[arg-type]


def test_witnesses_replay():
    for q in _random_queries(300, seed=15):
        g = attack_graph(q)
        for (s, t), attack in g.edges.items():
            F = q.atom(s)
            outside = k_closure(q, F)
            steps = attack.witness
            assert (steps[0].atom, steps[-1].atom) == (s, t), str(q)
            assert steps[0].via is None
            for prev, step in zip(steps, steps[1:]):
                via = step.via
                assert via is not None and via not in outside, str(q)
                assert via in q.atom(prev.atom).vars & q.atom(step.atom).vars, str(q)


def test_edges_ignore_order_and_names():
    rng = random.Random(16)
    for q in _random_queries(300, seed=16):
        atoms = list(q.atoms)
        rng.shuffle(atoms)
        renamed = Query(tuple(atoms)).substitute({v: v_(f"{v.name}_r") for v in q.vars})  # type: ignore[arg-type]
        expected = {e: a.strength for e, a in attack_graph(q).edges.items()}
        assert {e: a.strength for e, a in attack_graph(renamed).edges.items()} == expected, str(q)
