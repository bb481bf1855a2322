# app/services/attack.py
"""
Attack graphs.

F attacks G when G is reachable from F through atoms that pairwise share a
variable outside K(F,q). The attack is weak when FD(q) ⊨ key(F) -> key(G),
strong otherwise. Nodes are identified by relation name (queries are
self-join-free).
"""
from collections import deque
from dataclasses import dataclass
from enum import Enum

import networkx as nx

from app.models import Atom, Query, RelationDecl, Variable
from app.services.fd import closure, fd_of_query, k_closure
from app.utils.errors import AtomNotInQuery, UnknownVariable
from app.utils.naming import fresh_name


class Strength(str, Enum):
    WEAK = "weak"
    STRONG = "strong"


@dataclass(frozen=True)
class WitnessStep:
    atom: str
    via: Variable | None  # variable shared with the previous step


Witness = tuple[WitnessStep, ...]


def format_witness(witness: Witness) -> str:
    parts = [witness[0].atom]
    for step in witness[1:]:
        parts.append(f"-{step.via}- {step.atom}")
    return " ".join(parts)


@dataclass(frozen=True)
class Attack:
    source: str
    target: str
    strength: Strength
    witness: Witness


@dataclass(frozen=True, eq=False)
class AttackGraph:
    query: Query
    edges: dict[tuple[str, str], Attack]

    @property
    def nodes(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.query.atoms)

    def attacks(self, source: str, target: str) -> bool:
        return (source, target) in self.edges

    def in_degree(self, name: str) -> int:
        return sum(1 for (_, t) in self.edges if t == name)

    def unattacked(self) -> list[Atom]:
        """Atoms with zero in-degree, in query order."""
        return [a for a in self.query.atoms if self.in_degree(a.name) == 0]

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.nodes)
        for (s, t), attack in self.edges.items():
            graph.add_edge(s, t, strength=attack.strength.value)
        return graph


def _require(q: Query, *atoms: Atom) -> None:
    for atom in atoms:
        if atom not in q:
            raise AtomNotInQuery(f"{atom} is not an atom of the query")


def attacks_atom(q: Query, F: Atom, G: Atom) -> Witness | None:
    _require(q, F, G)
    if F == G:
        return None
    outside = k_closure(q, F)
    parent: dict[str, tuple[str, Variable] | None] = {F.name: None}
    queue = deque([F])
    while queue:
        current = queue.popleft()
        if current == G:
            break
        for other in q.atoms:
            if other.name in parent:
                continue
            shared = sorted(current.vars & other.vars - outside)
            if shared:
                parent[other.name] = (current.name, shared[0])
                queue.append(other)
    if G.name not in parent:
        return None
    steps: list[WitnessStep] = []
    name: str | None = G.name
    while name is not None:
        link = parent[name]
        steps.append(WitnessStep(name, link[1] if link else None))
        name = link[0] if link else None
    return tuple(reversed(steps))


def attacks_variable(q: Query, F: Atom, z: Variable) -> bool:
    _require(q, F)
    if z not in q.vars:
        raise UnknownVariable(f"variable {z} does not occur in the query")
    marker = Atom(RelationDecl(fresh_name("N", q.relations), 1, 1), (z,))
    extended = q.extended(marker)
    return attacks_atom(extended, F, marker) is not None


def attack_graph(q: Query) -> AttackGraph:
    fds = fd_of_query(q.atoms)
    edges: dict[tuple[str, str], Attack] = {}
    for F in q.atoms:
        if F.consistent:
            continue
        reach = closure(fds, F.key_vars)
        for G in q.atoms:
            if F == G:
                continue
            witness = attacks_atom(q, F, G)
            if witness is None:
                continue
            strength = Strength.WEAK if G.key_vars <= reach else Strength.STRONG
            edges[(F.name, G.name)] = Attack(F.name, G.name, strength, witness)
    return AttackGraph(q, edges)


# ---- Cycles and components ----
class CycleStatus(str, Enum):
    ACYCLIC = "acyclic"
    WEAK_CYCLE = "weak_cycle"
    STRONG_CYCLE = "strong_cycle"


@dataclass(frozen=True)
class CycleReport:
    status: CycleStatus
    pair: tuple[str, str] | None = None


def cycle_status(g: AttackGraph) -> CycleReport:
    weak_pair: tuple[str, str] | None = None
    nodes = g.nodes
    for i, f in enumerate(nodes):
        for h in nodes[i + 1 :]:
            if not (g.attacks(f, h) and g.attacks(h, f)):
                continue
            strengths = {g.edges[(f, h)].strength, g.edges[(h, f)].strength}
            if Strength.STRONG in strengths:
                return CycleReport(CycleStatus.STRONG_CYCLE, (f, h))
            if weak_pair is None:
                weak_pair = (f, h)
    if weak_pair is not None:
        return CycleReport(CycleStatus.WEAK_CYCLE, weak_pair)
    return CycleReport(CycleStatus.ACYCLIC)


@dataclass(frozen=True)
class StrongComponentSet:
    components: tuple[frozenset[str], ...]
    predecessors: tuple[frozenset[int], ...]

    @property
    def initial(self) -> tuple[bool, ...]:
        return tuple(not preds for preds in self.predecessors)

    def component_of(self, name: str) -> int:
        for i, members in enumerate(self.components):
            if name in members:
                return i
        raise AtomNotInQuery(f"no component holds {name}")

    def initial_components(self) -> list[frozenset[str]]:
        return [c for c, first in zip(self.components, self.initial) if first]


def initial_strong_components(g: AttackGraph) -> StrongComponentSet:
    order = {name: i for i, name in enumerate(g.nodes)}
    found = nx.strongly_connected_components(g.to_networkx())
    components = sorted((frozenset(c) for c in found), key=lambda c: min(order[n] for n in c))
    index = {name: i for i, c in enumerate(components) for name in c}
    preds: list[set[int]] = [set() for _ in components]
    for s, t in g.edges:
        if index[s] != index[t]:
            preds[index[t]].add(index[s])
    return StrongComponentSet(tuple(components), tuple(frozenset(p) for p in preds))


def attack_graph_dot(g: AttackGraph) -> str:
    lines = ["digraph attack {"]
    for atom in g.query.atoms:
        lines.append(f'  "{atom.name}" [label="{atom}"];')
    order = {name: i for i, name in enumerate(g.nodes)}
    for (s, t) in sorted(g.edges, key=lambda e: (order[e[0]], order[e[1]])):
        attack = g.edges[(s, t)]
        style = "solid" if attack.strength is Strength.STRONG else "dashed"
        lines.append(f'  "{s}" -> "{t}" [style={style}, label="{attack.strength.value}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
