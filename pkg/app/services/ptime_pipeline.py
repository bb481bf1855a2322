# app/services/ptime_pipeline.py
"""
Polynomial-time certain answers for queries without a strong attack cycle.

certain_ptime(q, db) recurses on the number of inconsistent atoms:
  - none left: the database has one repair, evaluate q directly
  - prepare: purify, simplify, type_tag, saturate, purify, gpurify
  - an unattacked inconsistent atom F: branch over F's blocks
  - otherwise: dissolve a premier Markov cycle and recurse

desugar_consistent(q) turns one consistent atom into two inconsistent copies.
"""
import logging
from collections.abc import Callable
from dataclasses import dataclass

from app.models import Atom, Constant, Database, Fact, Mode, Query, RelationDecl
from app.services.attack import CycleStatus, attack_graph, cycle_status
from app.services.evaluation import eval_bcq, match
from app.services.markov import find_premier_cycle, plan_dissolution
from app.services.reductions import gpurify, purify, saturate, simplify, type_tag
from app.utils.errors import NoConsistentAtom, PreconditionError, UnsupportedStructure
from app.utils.naming import Mint, fresh_name

log = logging.getLogger(__name__)


def _stage(name: str, depth: int, q: Query, db: Database, action: str = "") -> None:
    log.info(
        "stage=%s depth=%d atoms=%d icard=%d facts=%d%s",
        name,
        depth,
        len(q),
        q.icard,
        len(db),
        f" action={action}" if action else "",
    )


def prepare(
    q: Query, db: Database, mint: Mint, depth: int = 0, gblock_cap: int | None = None
) -> tuple[Query, Database]:
    # ---- 1) purify ----
    db = purify(q, db)
    _stage("purify", depth, q, db)
    # ---- 2) simplify ----
    q, db = simplify(q, db, mint)
    _stage("simplify", depth, q, db)
    # ---- 3) type ----
    db = type_tag(q, db)
    _stage("type_tag", depth, q, db)
    # ---- 4) saturate ----
    before = len(q)
    q, db = saturate(q, db)
    _stage("saturate", depth, q, db, f"added {len(q) - before} links" if len(q) > before else "")
    # ---- 5) purify again, then gpurify ----
    db = purify(q, db)
    _stage("purify", depth, q, db)
    db = gpurify(q, db, gblock_cap)
    _stage("gpurify", depth, q, db)
    return q, db


def certain_ptime(
    q: Query, db: Database, mint: Mint | None = None, gblock_cap: int | None = None
) -> bool:
    if cycle_status(attack_graph(q)).status is CycleStatus.STRONG_CYCLE:
        raise PreconditionError("attack graph has a strong cycle; certainty is coNP-complete")
    return _certain(q, db, mint or Mint(), 0, gblock_cap)


def _certain(q: Query, db: Database, mint: Mint, depth: int, cap: int | None) -> bool:
    if q.icard == 0:
        verdict = eval_bcq(q, db)
        _stage("evaluate", depth, q, db, str(verdict).lower())
        return verdict

    q, db = prepare(q, db, mint, depth, cap)

    unattacked = [a for a in attack_graph(q).unattacked() if not a.consistent]
    if unattacked:
        F = unattacked[0]
        _stage("branch", depth, q, db, f"blocks of {F.name}")
        return _branch(F, q, db, mint, depth, cap)

    for atom in q.atoms:
        if not atom.consistent and any(isinstance(t, Constant) for t in atom.terms):
            log.warning("constant in inconsistent atom %s of attacked query:\n%s", atom, q)
            raise UnsupportedStructure(f"inconsistent atom {atom} holds a constant")

    cycle = find_premier_cycle(q)
    plan = plan_dissolution(q, cycle, db, mint)
    encoded = sum(1 for v in plan.verdicts if v.encode)
    _stage(
        "dissolve",
        depth,
        plan.resolution.query,
        plan.database,
        f"cycle=({','.join(v.name for v in cycle)}) components={len(plan.verdicts)} encoded={encoded}",
    )
    return _certain(plan.resolution.query, plan.database, mint, depth + 1, cap)


def _branch(F: Atom, q: Query, db: Database, mint: Mint, depth: int, cap: int | None) -> bool:
    rest = q.without(F)
    key = F.key_terms[0]
    if isinstance(key, Constant):
        block = db.block(F.name, (key,))
        candidates = [block] if block else []
    else:
        candidates = db.blocks(F.name)
    for block in candidates:
        if all(_settles(F, fact, rest, db, mint, depth, cap) for fact in block):
            return True
    return False


def _settles(F: Atom, fact: Fact, rest: Query, db: Database, mint: Mint, depth: int, cap: int | None) -> bool:
    theta = match(F, fact, {})
    if theta is None:
        return False
    return _certain(rest.substitute(theta), db, mint, depth + 1, cap)


# ---- Consistent-atom desugaring ----
@dataclass(frozen=True)
class Desugaring:
    query: Query
    source: str
    copies: tuple[str, str]

    def apply(self, db: Database) -> Database:
        schema = self.query.relations
        facts: set[Fact] = {f for f in db.facts if f.relation in schema}
        for fact in db.facts_of(self.source):
            facts.update(Fact(name, fact.values) for name in self.copies)
        return Database(schema, frozenset(facts))


def desugar_consistent(q: Query, relation: str | None = None) -> Desugaring:
    candidates = [a for a in q.consistent_atoms if relation is None or a.name == relation]
    if not candidates:
        raise NoConsistentAtom("query has no consistent atom to desugar")
    target = candidates[0]
    taken = set(q.relations)
    names = []
    for suffix in ("1", "2"):
        name = fresh_name(f"{target.name}{suffix}", taken)
        taken.add(name)
        names.append(name)
    decl = target.relation
    copies = [
        Atom(RelationDecl(name, decl.arity, decl.key_len, Mode.INCONSISTENT), target.terms)
        for name in names
    ]
    atoms: list[Atom] = []
    for atom in q.atoms:
        atoms.extend(copies if atom == target else [atom])
    return Desugaring(Query(tuple(atoms)), target.name, (names[0], names[1]))


def desugar_all(q: Query) -> tuple[Query, Callable[[Database], Database]]:
    steps: list[Desugaring] = []
    while q.consistent_atoms:
        step = desugar_consistent(q)
        steps.append(step)
        q = step.query

    def apply(db: Database) -> Database:
        for step in steps:
            db = step.apply(db)
        return db

    return q, apply
