# app/services/classify.py
from dataclasses import dataclass
from enum import Enum

import networkx as nx

from app.models import Query
from app.services.attack import CycleStatus, Strength, attack_graph, cycle_status


class QueryClass(str, Enum):
    FO = "FO"
    PTIME_NOT_FO = "PTIME_NOT_FO"
    CONP_COMPLETE = "CONP_COMPLETE"

    @property
    def label(self) -> str:
        return {"FO": "FO", "PTIME_NOT_FO": "PTIME", "CONP_COMPLETE": "CONP-COMPLETE"}[self.value]


@dataclass(frozen=True)
class Classification:
    """
    Trichotomy verdict.

    evidence is a topological order of the attack graph for FO, and the
    2-cycle pair (weak for PTIME_NOT_FO, strong for CONP_COMPLETE) otherwise.
    """

    query_class: QueryClass
    evidence: tuple[str, ...]

    def describe(self) -> str:
        if self.query_class is QueryClass.FO:
            order = " ".join(self.evidence) or "(empty)"
            return f"FO\nattack graph acyclic; topological order: {order}"
        f, g = self.evidence
        if self.query_class is QueryClass.PTIME_NOT_FO:
            return f"PTIME (not FO, L-hard)\nweak 2-cycle: {f} <-> {g}"
        return f"CONP-COMPLETE\nstrong 2-cycle: {f} <-> {g}"


def classify(q: Query) -> Classification:
    g = attack_graph(q)
    report = cycle_status(g)
    if report.status is CycleStatus.ACYCLIC:
        order = {name: i for i, name in enumerate(g.nodes)}
        topo = nx.lexicographical_topological_sort(g.to_networkx(), key=order.__getitem__)
        return Classification(QueryClass.FO, tuple(topo))
    assert report.pair is not None
    if report.status is CycleStatus.STRONG_CYCLE:
        return Classification(QueryClass.CONP_COMPLETE, report.pair)
    return Classification(QueryClass.PTIME_NOT_FO, report.pair)


def replay_evidence(q: Query, c: Classification) -> bool:
    """Re-check a classification's evidence against a freshly built attack graph."""
    g = attack_graph(q)
    if c.query_class is QueryClass.FO:
        if sorted(c.evidence) != sorted(g.nodes):
            return False
        position = {name: i for i, name in enumerate(c.evidence)}
        return all(position[s] < position[t] for s, t in g.edges)
    if len(c.evidence) != 2:
        return False
    f, h = c.evidence
    if not (g.attacks(f, h) and g.attacks(h, f)):
        return False
    strong = Strength.STRONG in {g.edges[(f, h)].strength, g.edges[(h, f)].strength}
    if c.query_class is QueryClass.CONP_COMPLETE:
        return strong
    return not strong and cycle_status(g).status is CycleStatus.WEAK_CYCLE
