# app/services/evaluation.py
"""
Conjunctive-query satisfaction by backtracking.

homomorphisms(q, db) -> every valuation θ over vars(q) with θ(q) ⊆ db
eval_bcq(q, db)      -> does at least one exist
relevant_facts(q, db) -> facts that occur in some θ(q)
"""
from collections.abc import Iterator, Mapping

from app.models import Atom, Constant, Database, Fact, Query, Valuation, Variable, apply_term


def ground(atom: Atom, valuation: Mapping[Variable, Constant]) -> Fact:
    values = tuple(apply_term(t, valuation) for t in atom.terms)
    if any(isinstance(v, Variable) for v in values):
        raise ValueError(f"valuation does not cover {atom}")
    return Fact(atom.name, values)  # type: ignore[arg-type]


def match(atom: Atom, fact: Fact, valuation: Mapping[Variable, Constant]) -> Valuation | None:
    """Extend `valuation` so that it maps `atom` onto `fact`, if possible."""
    extended = dict(valuation)
    for term, value in zip(atom.terms, fact.values):
        if isinstance(term, Variable):
            bound = extended.get(term)
            if bound is None:
                extended[term] = value
            elif bound != value:
                return None
        elif term != value:
            return None
    return extended


def _boundness(atom: Atom, valuation: Mapping[Variable, Constant]) -> tuple[bool, int]:
    def is_bound(t: object) -> bool:
        return not isinstance(t, Variable) or t in valuation

    key_bound = all(is_bound(t) for t in atom.key_terms)
    return key_bound, sum(1 for t in atom.terms if is_bound(t))


def _candidates(atom: Atom, db: Database, valuation: Mapping[Variable, Constant]) -> tuple[Fact, ...]:
    key = tuple(apply_term(t, valuation) for t in atom.key_terms)
    if all(isinstance(v, Constant) for v in key):
        return db.block(atom.name, key)  # type: ignore[arg-type]
    return db.facts_of(atom.name)


def _extend(remaining: list[Atom], db: Database, valuation: Valuation) -> Iterator[Valuation]:
    if not remaining:
        yield dict(valuation)
        return
    # most constrained atom first
    atom = max(remaining, key=lambda a: _boundness(a, valuation))
    rest = [a for a in remaining if a is not atom]
    for fact in _candidates(atom, db, valuation):
        extended = match(atom, fact, valuation)
        if extended is not None:
            yield from _extend(rest, db, extended)


def homomorphisms(
    q: Query, db: Database, seed: Mapping[Variable, Constant] | None = None
) -> Iterator[Valuation]:
    return _extend(list(q.atoms), db, dict(seed or {}))


def eval_bcq(q: Query, db: Database) -> bool:
    return next(homomorphisms(q, db), None) is not None


def relevant_facts(q: Query, db: Database) -> frozenset[Fact]:
    relevant: set[Fact] = set()
    for theta in homomorphisms(q, db):
        relevant.update(ground(atom, theta) for atom in q.atoms)
    return frozenset(relevant)
