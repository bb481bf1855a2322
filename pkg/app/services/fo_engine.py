# app/services/fo_engine.py
"""
Certain answers for queries whose attack graph is acyclic.

certain_fo(q, db)    -> recursive algorithm over an unattacked atom
emit_rewriting(q)    -> the equivalent first-order formula
"""
import logging
from collections.abc import Callable, Sequence

from app.models import Atom, Constant, Database, Query, Variable
from app.services.attack import CycleStatus, attack_graph, cycle_status
from app.services.evaluation import match
from app.services.formula import (
    TRUE,
    AtomF,
    Equals,
    Forall,
    Formula,
    Implies,
    conj,
    exists,
)
from app.utils.errors import NotFOQuery
from app.utils.naming import fresh_name

log = logging.getLogger(__name__)

Chooser = Callable[[Sequence[Atom]], Atom]


def _first(candidates: Sequence[Atom]) -> Atom:
    return candidates[0]


def _unattacked(q: Query) -> list[Atom]:
    g = attack_graph(q)
    if cycle_status(g).status is not CycleStatus.ACYCLIC:
        raise NotFOQuery("attack graph is cyclic; the query has no first-order rewriting")
    return g.unattacked()


def certain_fo(q: Query, db: Database, choose: Chooser | None = None) -> bool:
    """
    For an unattacked F = R(x̄|ȳ): q is certain iff some R-block matches F's
    key and every fact of that block leaves a certain remainder.
    """
    if not q.atoms:
        return True
    F = (choose or _first)(_unattacked(q))
    rest = q.without(F)
    key = F.key_terms
    if all(isinstance(t, Constant) for t in key):
        block = db.block(F.name, key)  # type: ignore[arg-type]
        candidates = [block] if block else []
    else:
        candidates = db.blocks(F.name) if F.name in db.schema else []
    for block in candidates:
        if all(_settles(F, fact, rest, db, choose) for fact in block):
            return True
    return False


def _settles(F: Atom, fact, rest: Query, db: Database, choose: Chooser | None) -> bool:
    theta = match(F, fact, {})
    if theta is None:
        return False
    return certain_fo(rest.substitute(theta), db, choose)


# ---- Rewriting ----
_BOUND_TAG = "?bound"


def _freeze(q: Query, bound: frozenset[Variable]) -> Query:
    # bound variables act as constants when choosing the next atom
    return q.substitute({v: Constant(v.name, tag=_BOUND_TAG) for v in bound})


class _FreshVariables:
    def __init__(self, q: Query):
        self.taken = {v.name for v in q.vars}

    def __call__(self) -> Variable:
        name = fresh_name("z", self.taken)
        self.taken.add(name)
        return Variable(name)


def emit_rewriting(q: Query) -> Formula:
    _unattacked(q)
    return _rewrite(q, frozenset(), _FreshVariables(q))


def _rewrite(q: Query, bound: frozenset[Variable], fresh: _FreshVariables) -> Formula:
    if not q.atoms:
        return TRUE
    frozen = _freeze(q, bound)
    F = q.atoms[frozen.position(_unattacked(frozen)[0])]

    key_new = tuple(
        dict.fromkeys(t for t in F.key_terms if isinstance(t, Variable) and t not in bound)
    )
    nonkey_new = tuple(
        dict.fromkeys(
            t
            for t in F.nonkey_terms
            if isinstance(t, Variable) and t not in bound and t not in key_new
        )
    )
    known = bound | set(key_new)

    universal: list[Variable] = []
    equalities: list[Formula] = []
    reused: set[Variable] = set()
    for term in F.nonkey_terms:
        if isinstance(term, Variable) and term not in known and term not in reused:
            # first occurrence of a new non-key variable keeps its name
            reused.add(term)
            universal.append(term)
        else:
            z = fresh()
            universal.append(z)
            equalities.append(Equals(z, term))

    remainder = _rewrite(q.without(F), known | set(universal), fresh)
    consequence = conj([*equalities, remainder])
    existential = AtomF(F.name, F.terms)
    if consequence == TRUE:
        return exists(key_new + nonkey_new, existential)
    if universal:
        guard = AtomF(F.name, F.key_terms + tuple(universal))
        body: Formula = Forall(tuple(universal), Implies(guard, consequence))
    else:
        body = consequence
    return exists(key_new + nonkey_new, conj([existential, body]))
