import itertools
import random
from collections.abc import Iterable
from pathlib import Path

import networkx as nx
import pytest

from app.models import Constant, Database, Fact, Query, Variable
from app.services.evaluation import ground, homomorphisms, relevant_facts
from app.services.markov import ComponentVerdict, DissolutionPlan, _supports, clutch
from app.services.oracle import iter_repairs
from app.services.parser import parse_database, parse_query

DEMO = Path(__file__).resolve().parent.parent / "demo"


def q_(text: str) -> Query:
    return parse_query(text)


def db_(q: Query, text: str) -> Database:
    return parse_database(text, q)


def c_(name: str) -> Constant:
    return Constant(name)


def v_(name: str) -> Variable:
    return Variable(name)


def names(values: Iterable[Constant]) -> tuple[str, ...]:
    return tuple(v.name for v in values)


def fd_satisfied(q: Query, db: Database, X: Iterable[Variable], Y: Iterable[Variable]) -> bool:
    """db ⊨_q X -> Y: embeddings agreeing on X agree on Y."""
    xs, ys = sorted(X), sorted(Y)
    seen: dict[tuple, tuple] = {}
    for theta in homomorphisms(q, db):
        left = tuple(theta[x] for x in xs)
        right = tuple(theta[y] for y in ys)
        if seen.setdefault(left, right) != right:
            return False
    return True


# ---- Queries ----
@pytest.fixture
def closure_query() -> Query:
    return q_((DEMO / "closure.cq").read_text())


@pytest.fixture
def fo_query() -> Query:
    return q_((DEMO / "fo.cq").read_text())


@pytest.fixture
def swap_query() -> Query:
    return q_((DEMO / "swap.cq").read_text())


@pytest.fixture
def hard_query() -> Query:
    return q_((DEMO / "hard.cq").read_text())


@pytest.fixture
def triangle_query() -> Query:
    return q_((DEMO / "triangle.cq").read_text())


@pytest.fixture
def saturation_query() -> Query:
    return q_(
        """
        R(x | y)
        S1(y | z)
        S2(y | z)
        consistent T0(x, z | w)
        U(w | x)
        """
    )


@pytest.fixture
def markov_query() -> Query:
    return q_(
        """
        R(x | y, v)
        S(y | x)
        consistent V1(v | w)
        W(w | v)
        consistent V2(w | y)
        """
    )


# ---- Databases ----
@pytest.fixture
def triangle_db(triangle_query: Query) -> Database:
    return db_(triangle_query, (DEMO / "triangle.db").read_text())


@pytest.fixture
def swap_db(swap_query: Query) -> Database:
    return db_(swap_query, (DEMO / "swap.db").read_text())


@pytest.fixture
def fo_db(fo_query: Query) -> Database:
    return db_(fo_query, (DEMO / "fo.db").read_text())


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240607)


# ---- Non-grelevant repairs of a dropped component ----
def _offending_cycle(plan: DissolutionPlan, verdict: ComponentVerdict) -> tuple[Constant, ...]:
    """An elementary cycle of the component longer than the Markov cycle, or as long but unsupported."""
    sub = plan.graph.subgraph(verdict.vertices)
    k = len(plan.resolution.cycle)
    for found in sorted(nx.simple_cycles(sub), key=lambda c: (len(c), sorted(c))):
        start = min(range(len(found)), key=lambda i: (sub.nodes[found[i]]["position"], found[i]))
        cycle = tuple(found[start:] + found[:start])
        if len(cycle) > k or (len(cycle) == k and not _supports(sub, cycle)):
            return cycle
    raise AssertionError("component has no offending cycle")


def spanning_repair(q: Query, plan: DissolutionPlan, verdict: ComponentVerdict) -> frozenset[Fact]:
    """
    Grow the offending cycle into a spanning graph with one outgoing edge per
    constant, then ground each constant's clutch with a realization of that
    edge. On a cycle of the Markov cycle's length, two realizations that
    disagree are picked.
    """
    graph = plan.graph.subgraph(verdict.vertices)
    cycle = _offending_cycle(plan, verdict)
    successor = {a: cycle[(i + 1) % len(cycle)] for i, a in enumerate(cycle)}
    while len(successor) < len(verdict.vertices):
        b, c = min((b, c) for b, c in graph.edges if b not in successor and c in successor)
        successor[b] = c

    def realizations(a: Constant) -> list[dict]:
        return [dict(r) for r in sorted(graph.edges[a, successor[a]]["realizations"], key=sorted)]

    chosen = {a: realizations(a)[0] for a in successor}
    if len(cycle) == len(plan.resolution.cycle):
        chosen |= next(
            {a: mu_a, b: mu_b}
            for a, b in itertools.combinations(cycle, 2)
            for mu_a in realizations(a)
            for mu_b in realizations(b)
            if any(mu_b.get(v, c) != c for v, c in mu_a.items())
        )
    facts = set()
    for a, mu in chosen.items():
        x = plan.resolution.cycle[graph.nodes[a]["position"]]
        facts.update(ground(atom, mu) for atom in clutch(q, x))
    return frozenset(facts)


def grelevant(q: Query, db: Database, s: frozenset[Fact]) -> bool:
    """Some repair of db holding s has a fact of s in an embedding of q."""
    rest = db.without_facts(f for fact in s for f in db.block_of(fact))
    return any(relevant_facts(q, r.with_facts(s)) & s for r in iter_repairs(rest))
