# app/services/markov.py
"""
Markov graphs, premier cycles and cycle dissolution.

The Markov graph has an edge x -> y when the inconsistent atoms keyed by
exactly {x} (the clutch of x) together with the consistent atoms force
x -> y. Dissolving a Markov cycle C = (x_0..x_{k-1}) replaces the clutches
on C with one inconsistent T(u | x_0..x_{k-1}, ȳ) and consistent
U_i(x_i | u) atoms; the database side encodes each strong component of the
constant graph M(db) as one T-block.
"""
import itertools
import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import networkx as nx

from app.models import Atom, Constant, Database, Fact, Mode, Query, RelationDecl, Variable
from app.services.attack import (
    AttackGraph,
    CycleStatus,
    attack_graph,
    cycle_status,
    initial_strong_components,
)
from app.services.evaluation import homomorphisms
from app.services.fd import closure, fd_of_query
from app.services.reductions import violating_pair
from app.utils.errors import NotGPurified, PreconditionError, ShapeError
from app.utils.naming import Mint, fresh_name

log = logging.getLogger(__name__)

Cycle = tuple[Variable, ...]


def clutch(q: Query, x: Variable) -> tuple[Atom, ...]:
    return tuple(a for a in q.atoms if not a.consistent and a.key_vars == {x} and a.simple_key)


@dataclass(frozen=True, eq=False)
class MarkovGraph:
    query: Query
    graph: nx.DiGraph
    clutches: dict[Variable, tuple[Atom, ...]]

    def has_edge(self, x: Variable, y: Variable) -> bool:
        return self.graph.has_edge(x, y)

    def edges(self) -> list[tuple[Variable, Variable]]:
        order = {v: i for i, v in enumerate(self.query.ordered_vars)}
        return sorted(self.graph.edges, key=lambda e: (order[e[0]], order[e[1]]))

    def reaches(self, x: Variable, y: Variable) -> bool:
        return nx.has_path(self.graph, x, y)


def markov_graph(q: Query) -> MarkovGraph:
    for atom in q.atoms:
        if not atom.consistent and not atom.simple_key:
            raise ShapeError(f"{atom} is inconsistent but not simple-key")
    graph = nx.DiGraph()
    graph.add_nodes_from(q.ordered_vars)
    clutches = {x: clutch(q, x) for x in q.ordered_vars}
    for x in q.ordered_vars:
        fds = fd_of_query(clutches[x] + q.consistent_atoms)
        for y in q.ordered_vars:
            if y != x and y in closure(fds, {x}):
                graph.add_edge(x, y)
    return MarkovGraph(q, graph, clutches)


def markov_graph_dot(m: MarkovGraph) -> str:
    lines = ["digraph markov {"]
    for v in m.query.ordered_vars:
        label = ", ".join(a.name for a in m.clutches[v]) or "-"
        lines.append(f'  "{v}" [label="{v} [{label}]"];')
    for x, y in m.edges():
        lines.append(f'  "{x}" -> "{y}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---- Premier cycles ----
def _canonical_rotation(q: Query, cycle: Sequence[Variable]) -> Cycle:
    order = {v: i for i, v in enumerate(q.ordered_vars)}
    start = min(range(len(cycle)), key=lambda i: order[cycle[i]])
    return tuple(cycle[start:]) + tuple(cycle[:start])


def _anchors(q: Query, g: AttackGraph) -> list[Variable]:
    """Keys {x} of inconsistent atoms lying in an initial strong component."""
    anchors: list[Variable] = []
    for component in initial_strong_components(g).initial_components():
        for atom in q.atoms:
            if atom.name in component and not atom.consistent and len(atom.key_vars) == 1:
                (x,) = atom.key_vars
                if atom.simple_key and x not in anchors:
                    anchors.append(x)
    return anchors


def is_premier(q: Query, cycle: Sequence[Variable], m: MarkovGraph | None = None) -> bool:
    m = m or markov_graph(q)
    if any(not m.clutches.get(v) for v in cycle):
        return False
    fds = fd_of_query(q.atoms)
    for x in _anchors(q, attack_graph(q)):
        for y in cycle:
            if m.reaches(x, y) and x in closure(fds, {y}):
                return True
    return False


def _shortcut(q: Query, cycle: Cycle) -> tuple[int, int] | None:
    """(j, i) with x_i among the clutch variables of x_j, x_i not next to x_j."""
    k = len(cycle)
    for j, xj in enumerate(cycle):
        reach = {v for a in clutch(q, xj) for v in a.vars}
        for i, xi in enumerate(cycle):
            if i not in (j, (j + 1) % k) and xi in reach:
                return j, i
    return None


def has_shortcut(q: Query, cycle: Sequence[Variable]) -> bool:
    return _shortcut(q, tuple(cycle)) is not None


def _check_premier_preconditions(q: Query) -> AttackGraph:
    g = attack_graph(q)
    if cycle_status(g).status is CycleStatus.STRONG_CYCLE:
        raise PreconditionError("attack graph has a strong cycle")
    for atom in q.atoms:
        if not atom.consistent and (not atom.simple_key or not atom.key_vars):
            raise PreconditionError(f"{atom} must have a single variable as key")
    if violating_pair(q) is not None:
        raise PreconditionError("query is not saturated")
    components = initial_strong_components(g)
    if not any(len(c) >= 2 for c in components.initial_components()):
        raise PreconditionError("no initial strong component with two or more atoms")
    return g


def find_premier_cycle(q: Query) -> Cycle:
    _check_premier_preconditions(q)
    m = markov_graph(q)
    order = {v: i for i, v in enumerate(q.ordered_vars)}
    carriers = [v for v in q.ordered_vars if m.clutches[v]]
    found = {_canonical_rotation(q, c) for c in nx.simple_cycles(m.graph.subgraph(carriers))}
    cycles = sorted(found, key=lambda c: (len(c), [order[v] for v in c]))
    premier = [c for c in cycles if is_premier(q, c, m)]
    if not premier:
        raise PreconditionError("no premier Markov cycle found")
    shortcut_free = [c for c in premier if not has_shortcut(q, c)]
    # a saturated query always has a premier cycle without shortcut
    assert shortcut_free, "every premier cycle has a shortcut"
    return shortcut_free[0]


# ---- Dissolution ----
@dataclass(frozen=True)
class Resolution:
    query: Query
    cycle: Cycle
    removed: tuple[Atom, ...]
    projections: tuple[frozenset[Variable], ...]
    ybar: tuple[Variable, ...]
    u: Variable
    t_atom: Atom
    u_atoms: tuple[Atom, ...]


def resolve(q: Query, cycle: Sequence[Variable]) -> Resolution:
    cycle = tuple(cycle)
    k = len(cycle)
    if k < 2 or len(set(cycle)) != k:
        raise PreconditionError("a dissolvable cycle needs two or more distinct variables")
    m = markov_graph(q)
    for i, x in enumerate(cycle):
        if x not in q.vars:
            raise PreconditionError(f"variable {x} does not occur in the query")
        if not m.has_edge(x, cycle[(i + 1) % k]):
            raise PreconditionError(f"{x} -> {cycle[(i + 1) % k]} is not a Markov edge")

    clutches = [clutch(q, x) for x in cycle]
    members = {a for c in clutches for a in c}
    removed = tuple(a for a in q.atoms if a in members)
    projections = tuple(frozenset(v for a in c for v in a.vars) for c in clutches)
    on_cycle = set(cycle)
    ybar = tuple(
        dict.fromkeys(v for a in removed for v in a.ordered_vars if v not in on_cycle)
    )

    taken = set(q.relations)
    u = Variable(fresh_name("u", {v.name for v in q.vars}))
    t_name = fresh_name("T", taken)
    taken.add(t_name)
    t_atom = Atom(RelationDecl(t_name, 1 + k + len(ybar), 1, Mode.INCONSISTENT), (u, *cycle, *ybar))
    u_atoms = []
    for i, x in enumerate(cycle):
        name = fresh_name(f"U{i}", taken)
        taken.add(name)
        u_atoms.append(Atom(RelationDecl(name, 2, 1, Mode.CONSISTENT), (x, u)))

    kept = tuple(a for a in q.atoms if a not in members)
    resolved = Query(kept + (t_atom,) + tuple(u_atoms))
    return Resolution(resolved, cycle, removed, projections, ybar, u, t_atom, tuple(u_atoms))


def dissolve_query(q: Query, cycle: Sequence[Variable]) -> Query:
    return resolve(q, cycle).query


@dataclass(frozen=True)
class ComponentVerdict:
    vertices: frozenset[Constant]
    encode: bool
    reason: str
    cycles: tuple[tuple[Constant, ...], ...] = ()


@dataclass(frozen=True, eq=False)
class DissolutionPlan:
    resolution: Resolution
    graph: nx.DiGraph
    verdicts: tuple[ComponentVerdict, ...]
    emitted: frozenset[Fact]
    database: Database = field(repr=False)


def _constant_graph(q: Query, res: Resolution, db: Database) -> nx.DiGraph:
    """M(db): edges a -> b realized by embeddings, with their realization sets."""
    cycle, k = res.cycle, len(res.cycle)
    graph = nx.DiGraph()
    for theta in homomorphisms(q, db):
        for i in range(k):
            a, b = theta[cycle[i]], theta[cycle[(i + 1) % k]]
            for vertex, position in ((a, i), (b, (i + 1) % k)):
                known = graph.nodes[vertex]["position"] if vertex in graph else position
                if known != position:
                    raise ShapeError(f"constant {vertex} occurs for two cycle variables; tag the database first")
                graph.add_node(vertex, position=position)
            if not graph.has_edge(a, b):
                graph.add_edge(a, b, realizations=set())
            realization = frozenset((v, theta[v]) for v in res.projections[i])
            graph.edges[a, b]["realizations"].add(realization)
    return graph


def _walks(graph: nx.DiGraph, start: Constant, length: int) -> Iterator[list[Constant]]:
    stack = [[start]]
    while stack:
        path = stack.pop()
        if len(path) == length + 1:
            yield path
            continue
        for nxt in sorted(graph.successors(path[-1])):
            stack.append(path + [nxt])


def _supports(graph: nx.DiGraph, cycle: tuple[Constant, ...]) -> bool:
    k = len(cycle)
    deltas = [graph.edges[cycle[i], cycle[(i + 1) % k]]["realizations"] for i in range(k)]
    for i, j in itertools.combinations(range(k), 2):
        for mu_i in deltas[i]:
            left = dict(mu_i)
            for mu_j in deltas[j]:
                if any(left.get(v, c) != c for v, c in mu_j):
                    return False
    return True


def _judge(graph: nx.DiGraph, component: set[Constant], k: int) -> ComponentVerdict:
    sub = graph.subgraph(component)
    vertices = frozenset(component)
    cycles: list[tuple[Constant, ...]] = []
    starts = sorted(v for v in component if graph.nodes[v]["position"] == 0)
    for a0 in starts:
        for path in _walks(sub, a0, k):
            end = path[-1]
            if end == a0:
                cycles.append(tuple(path[:-1]))
                continue
            blocked = set(path[1:-1])
            rest = sub.subgraph(v for v in component if v not in blocked)
            if nx.has_path(rest, end, a0):
                return ComponentVerdict(vertices, False, "cycle longer than the Markov cycle")
    if not cycles:
        return ComponentVerdict(vertices, False, "no cycle of the Markov cycle's length")
    for cycle in cycles:
        if not _supports(sub, cycle):
            shown = ", ".join(str(c) for c in cycle)
            return ComponentVerdict(vertices, False, f"cycle ({shown}) does not support the query")
    return ComponentVerdict(vertices, True, "encoded", tuple(sorted(cycles)))


def plan_dissolution(q: Query, cycle: Sequence[Variable], db: Database, mint: Mint | None = None) -> DissolutionPlan:
    mint = mint or Mint()
    res = resolve(q, cycle)
    k = len(res.cycle)
    graph = _constant_graph(q, res, db)

    components = [set(c) for c in nx.strongly_connected_components(graph)]
    components.sort(key=min)
    owner = {v: i for i, c in enumerate(components) for v in c}
    for a, b in graph.edges:
        if owner[a] != owner[b]:
            raise NotGPurified(f"edge {a} -> {b} leaves its strong component")

    verdicts: list[ComponentVerdict] = []
    emitted: set[Fact] = set()
    for component in components:
        verdict = _judge(graph, component, k)
        verdicts.append(verdict)
        if not verdict.encode:
            log.debug("dissolve: dropping component of %d constants (%s)", len(component), verdict.reason)
            continue
        d = mint.constant("D", res.u.name)
        for cyc in verdict.cycles:
            deltas = [
                sorted(graph.edges[cyc[i], cyc[(i + 1) % k]]["realizations"], key=sorted)
                for i in range(k)
            ]
            for combo in itertools.product(*deltas):
                mu = dict(pair for realization in combo for pair in realization)
                values = (d, *cyc, *(mu[y] for y in res.ybar))
                emitted.add(Fact(res.t_atom.name, values))
            for i, u_atom in enumerate(res.u_atoms):
                emitted.add(Fact(u_atom.name, (cyc[i], d)))

    schema = res.query.relations
    # facts of the dissolved clutches go; everything else the resolved query mentions stays
    kept = {f for f in db.facts if f.relation in schema}
    database = Database(schema, frozenset(kept | emitted))
    return DissolutionPlan(res, graph, tuple(verdicts), frozenset(emitted), database)


def dissolve_database(q: Query, cycle: Sequence[Variable], db: Database, mint: Mint | None = None) -> Database:
    return plan_dissolution(q, cycle, db, mint).database
