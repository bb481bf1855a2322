# app/services/reductions.py
"""
Certainty-preserving rewrites of a (query, database) pair used by the
polynomial-time engine.

purify(q, db)      -> drop blocks holding a fact that no embedding of q uses
type_tag(q, db)    -> tag every value with the variable of its position
simplify(q, db)    -> canonical atoms, then simple keys for inconsistent atoms
saturate(q, db)    -> add consistent T(x|z) atoms until the query is saturated
gpurify(q, db)     -> drop gblocks with a repair that cannot take part in an embedding
"""
import itertools
import logging
import math
from collections.abc import Iterator
from dataclasses import dataclass

from app.models import (
    Atom,
    Block,
    Constant,
    Database,
    Fact,
    Mode,
    Query,
    RelationDecl,
    Term,
    Variable,
)
from app.services.attack import CycleStatus, attack_graph, attacks_variable, cycle_status
from app.services.evaluation import eval_bcq, ground, homomorphisms, match, relevant_facts
from app.services.fd import closure, fd_of_query
from app.utils import settings
from app.utils.errors import GBlockTooLarge, PreconditionError, ShapeError
from app.utils.naming import Mint, fresh_name

log = logging.getLogger(__name__)


# ---- Purification ----
def purify(q: Query, db: Database) -> Database:
    current = db
    while True:
        relevant = relevant_facts(q, current)
        doomed: set[Fact] = set()
        for fact in current.facts:
            if fact not in relevant:
                doomed.update(current.block_of(fact))
        if not doomed:
            return current
        current = current.without_facts(doomed)


# ---- Typing ----
def _check_typable(q: Query) -> None:
    for atom in q.atoms:
        variables = [t for t in atom.terms if isinstance(t, Variable)]
        if len(variables) != len(set(variables)):
            raise ShapeError(f"{atom} repeats a variable")
        for position, term in enumerate(atom.terms):
            if isinstance(term, Constant) and not (position == 0 and atom.simple_key):
                raise ShapeError(f"{atom} has a constant outside a simple key")


def _tag(value: Constant, var: Variable) -> Constant:
    if value.tag == var.name:
        return value
    tag = f"{value.tag}/{var.name}" if value.tag else var.name
    return Constant(value.name, tag=tag, serial=value.serial)


def type_tag(q: Query, db: Database) -> Database:
    _check_typable(q)
    facts: set[Fact] = set()
    for atom in q.atoms:
        if atom.name not in db.schema:
            continue
        for block in db.blocks(atom.name):
            tagged = [_tag_fact(atom, fact) for fact in block]
            if all(f is not None for f in tagged):
                facts.update(tagged)  # type: ignore[arg-type]
    return db.replace(facts)


def _tag_fact(atom: Atom, fact: Fact) -> Fact | None:
    values: list[Constant] = []
    for term, value in zip(atom.terms, fact.values):
        if isinstance(term, Variable):
            values.append(_tag(value, term))
        elif term != value:
            return None
        else:
            values.append(value)
    return Fact(fact.relation, tuple(values))


# ---- Simplification ----
def _is_canonical(atom: Atom) -> bool:
    key, rest = atom.key_terms, atom.nonkey_terms
    if any(not isinstance(t, Variable) for t in rest) or len(set(rest)) != len(rest):
        return False
    if set(rest) & set(key):
        return False
    if all(isinstance(t, Variable) for t in key):
        return len(set(key)) == len(key)
    return len(key) == 1


def _canonical_atom(atom: Atom, name: str) -> Atom:
    key_vars = tuple(dict.fromkeys(t for t in atom.key_terms if isinstance(t, Variable)))
    key: tuple[Term, ...] = key_vars if key_vars else (atom.key_terms[0],)
    rest = tuple(v for v in atom.ordered_vars if v not in key_vars)
    decl = RelationDecl(name, len(key) + len(rest), len(key), atom.relation.mode)
    return Atom(decl, key + rest)


def simplify(q: Query, db: Database, mint: Mint | None = None) -> tuple[Query, Database]:
    mint = mint or Mint()
    db = purify(q, db)
    taken = set(q.relations)

    # (a) one occurrence per variable, constants only in constant keys
    atoms: list[Atom] = []
    facts: set[Fact] = set()
    for atom in q.atoms:
        if _is_canonical(atom):
            atoms.append(atom)
            facts.update(db.facts_of(atom.name))
            continue
        name = fresh_name(atom.name, taken)
        taken.add(name)
        canonical = _canonical_atom(atom, name)
        atoms.append(canonical)
        for fact in db.facts_of(atom.name):
            theta = match(atom, fact, {})
            if theta is not None:
                facts.add(ground(canonical, theta))

    # (b) simple keys for inconsistent atoms
    taken_vars = {v.name for v in q.vars}
    final: list[Atom] = []
    for atom in atoms:
        if atom.consistent or atom.simple_key or not atom.key_vars:
            final.append(atom)
            continue
        w = Variable(fresh_name("w", taken_vars))
        taken_vars.add(w.name)
        key, rest = atom.key_terms, atom.nonkey_terms
        k = len(key)
        key_name = fresh_name(f"{atom.name}_key", taken)
        taken.add(key_name)
        inv_name = fresh_name(f"{atom.name}_inv", taken)
        taken.add(inv_name)
        to_surrogate = Atom(RelationDecl(key_name, k + 1, k, Mode.CONSISTENT), key + (w,))
        from_surrogate = Atom(RelationDecl(inv_name, k + 1, 1, Mode.CONSISTENT), (w,) + key)
        body = Atom(RelationDecl(atom.name, 1 + len(rest), 1, atom.relation.mode), (w,) + rest)
        final.extend([to_surrogate, from_surrogate, body])

        surrogates: dict[tuple[Constant, ...], Constant] = {}
        for fact in sorted(f for f in facts if f.relation == atom.name):
            key_value = fact.values[:k]
            h = surrogates.get(key_value)
            if h is None:
                h = surrogates[key_value] = mint.constant("h", w.name)
                facts.add(Fact(key_name, key_value + (h,)))
                facts.add(Fact(inv_name, (h,) + key_value))
            facts.discard(fact)
            facts.add(Fact(atom.name, (h,) + fact.values[k:]))

    simplified = Query(tuple(final))
    return simplified, Database(simplified.relations, frozenset(facts))


# ---- Saturation ----
def violating_pair(q: Query) -> tuple[Variable, Variable] | None:
    """First (x, z) breaking saturation, in variable order."""
    fds = fd_of_query(q.atoms)
    consistent_fds = fd_of_query(q.consistent_atoms)
    attacked: dict[tuple[str, Variable], bool] = {}

    def attacks(atom: Atom, v: Variable) -> bool:
        if (atom.name, v) not in attacked:
            attacked[(atom.name, v)] = attacks_variable(q, atom, v)
        return attacked[(atom.name, v)]

    for x in q.ordered_vars:
        reach = closure(fds, {x})
        silent = reach - closure(consistent_fds, {x}) - {x}
        if not silent:
            continue
        governed = [a for a in q.atoms if a.key_vars <= reach]
        for z in q.ordered_vars:
            if z not in silent:
                continue
            if any(attacks(a, x) or attacks(a, z) for a in governed):
                continue
            return x, z
    return None


def is_saturated(q: Query) -> bool:
    return violating_pair(q) is None


def _x_value_conflict(q: Query, db: Database, x: Variable, z: Variable) -> tuple[Constant | None, dict]:
    seen: dict[Constant, Constant] = {}
    conflicts: set[Constant] = set()
    for theta in homomorphisms(q, db):
        a, b = theta[x], theta[z]
        if seen.setdefault(a, b) != b:
            conflicts.add(a)
    return (min(conflicts) if conflicts else None), seen


def _saturate_pair(q: Query, db: Database, x: Variable, z: Variable) -> tuple[Query, Database]:
    current = db
    while True:
        conflict, seen = _x_value_conflict(q, current, x, z)
        if conflict is None:
            break
        doomed: set[Fact] = set()
        for atom in q.atoms:
            positions = [p for p, t in enumerate(atom.terms) if t == x]
            for fact in current.facts_of(atom.name):
                if any(fact.values[p] == conflict for p in positions):
                    doomed.update(current.block_of(fact))
        log.debug("saturate: %s has two %s-values, dropping %d facts", conflict, z, len(doomed))
        current = current.without_facts(doomed)
    link = Atom(RelationDecl(fresh_name("T", q.relations), 2, 1, Mode.CONSISTENT), (x, z))
    extended = q.extended(link)
    facts = {Fact(link.name, (a, b)) for a, b in seen.items()}
    schema = {**current.schema, link.name: link.relation}
    return extended, Database(schema, current.facts | facts)


def saturate(q: Query, db: Database) -> tuple[Query, Database]:
    if cycle_status(attack_graph(q)).status is CycleStatus.STRONG_CYCLE:
        raise PreconditionError("cannot saturate a query with a strong attack cycle")
    while (pair := violating_pair(q)) is not None:
        x, z = pair
        log.info("saturate: adding consistent link %s -> %s", x, z)
        q, db = _saturate_pair(q, db, x, z)
    return q, db


# ---- Gpurification ----
@dataclass(frozen=True)
class GBlock:
    """All inconsistent simple-key facts sharing one key constant."""

    key: Constant
    blocks: tuple[Block, ...]

    @property
    def facts(self) -> frozenset[Fact]:
        return frozenset(f for b in self.blocks for f in b)

    @property
    def relations(self) -> frozenset[str]:
        return frozenset(b[0].relation for b in self.blocks)

    def repair_count(self) -> int:
        return math.prod(len(b) for b in self.blocks)

    def repairs(self) -> Iterator[tuple[Fact, ...]]:
        return itertools.product(*self.blocks)


def gblocks(q: Query, db: Database) -> list[GBlock]:
    grouped: dict[Constant, list[Block]] = {}
    for atom in q.atoms:
        if atom.consistent or not atom.simple_key or atom.name not in db.schema:
            continue
        for block in db.blocks(atom.name):
            grouped.setdefault(block[0].values[0], []).append(block)
    return [GBlock(key, tuple(grouped[key])) for key in sorted(grouped)]


def _first_failing(q: Query, db: Database, cap: int) -> GBlock | None:
    for gblock in gblocks(q, db):
        if gblock.repair_count() > cap:
            raise GBlockTooLarge(f"gblock {gblock.key} has more than {cap} repairs")
        outside = frozenset(f for f in db.facts if f.relation not in gblock.relations)
        for repair in gblock.repairs():
            if not eval_bcq(q, db.replace(outside | frozenset(repair))):
                return gblock
    return None


def gpurify(q: Query, db: Database, cap: int | None = None) -> Database:
    limit = settings.GBLOCK_CAP if cap is None else cap
    current = db
    while (gblock := _first_failing(q, current, limit)) is not None:
        log.debug("gpurify: dropping gblock %s (%d facts)", gblock.key, len(gblock.facts))
        current = current.without_facts(gblock.facts)
    return current
