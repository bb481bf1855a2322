# app/services/formula.py
"""
First-order formulas over a database schema: AST, s-expression printer and a
small model checker.

Quantifiers are evaluated over the facts of a guard atom when the body has
one (the shape emitted by the rewriter); otherwise over the active domain.
"""
import itertools
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from typing import Union

from app.models import Constant, Database, Fact, Term, Variable


@dataclass(frozen=True)
class AtomF:
    relation: str
    terms: tuple[Term, ...]


@dataclass(frozen=True)
class Equals:
    left: Term
    right: Term


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...] = ()


@dataclass(frozen=True)
class Implies:
    premise: "Formula"
    conclusion: "Formula"


@dataclass(frozen=True)
class Exists:
    variables: tuple[Variable, ...]
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    variables: tuple[Variable, ...]
    body: "Formula"


Formula = Union[AtomF, Equals, And, Implies, Exists, Forall]
TRUE = And(())


def conj(parts: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for part in parts:
        if isinstance(part, And):
            flat.extend(part.parts)
        else:
            flat.append(part)
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def exists(variables: Iterable[Variable], body: Formula) -> Formula:
    vs = tuple(variables)
    return Exists(vs, body) if vs else body


def forall(variables: Iterable[Variable], body: Formula) -> Formula:
    vs = tuple(variables)
    return Forall(vs, body) if vs else body


# ---- Printing ----
def to_sexpr(f: Formula) -> str:
    if isinstance(f, AtomF):
        return "(" + " ".join([f.relation, *(str(t) for t in f.terms)]) + ")"
    if isinstance(f, Equals):
        return f"(= {f.left} {f.right})"
    if isinstance(f, And):
        if not f.parts:
            return "true"
        return "(and " + " ".join(to_sexpr(p) for p in f.parts) + ")"
    if isinstance(f, Implies):
        return f"(implies {to_sexpr(f.premise)} {to_sexpr(f.conclusion)})"
    word = "exists" if isinstance(f, Exists) else "forall"
    names = " ".join(v.name for v in f.variables)
    return f"({word} ({names}) {to_sexpr(f.body)})"


def free_variables(f: Formula) -> frozenset[Variable]:
    if isinstance(f, (AtomF, Equals)):
        terms = f.terms if isinstance(f, AtomF) else (f.left, f.right)
        return frozenset(t for t in terms if isinstance(t, Variable))
    if isinstance(f, And):
        return frozenset().union(*(free_variables(p) for p in f.parts))
    if isinstance(f, Implies):
        return free_variables(f.premise) | free_variables(f.conclusion)
    return free_variables(f.body) - set(f.variables)


# ---- Model checking ----
Env = Mapping[Variable, Constant]


def _value(term: Term, env: Env) -> Constant:
    if isinstance(term, Variable):
        return env[term]
    return term


def _guard_matches(guard: AtomF, db: Database, env: Env, quantified: frozenset[Variable]) -> Iterator[dict]:
    for fact in db.facts_of(guard.relation):
        local = {k: v for k, v in env.items() if k not in quantified}
        ok = True
        for term, value in zip(guard.terms, fact.values):
            if isinstance(term, Variable) and term not in local:
                local[term] = value
            elif _value(term, local) != value:
                ok = False
                break
        if ok:
            yield local


def _find_guard(candidates: Iterable[Formula], quantified: frozenset[Variable]) -> AtomF | None:
    for part in candidates:
        if isinstance(part, AtomF) and quantified <= free_variables(part):
            return part
    return None


def _domain_envs(env: Env, variables: tuple[Variable, ...], adom: frozenset[Constant]) -> Iterator[dict]:
    for values in itertools.product(sorted(adom), repeat=len(variables)):
        local = dict(env)
        local.update(zip(variables, values))
        yield local


def _holds(f: Formula, db: Database, env: Env, adom: frozenset[Constant]) -> bool:
    if isinstance(f, AtomF):
        return Fact(f.relation, tuple(_value(t, env) for t in f.terms)) in db
    if isinstance(f, Equals):
        return _value(f.left, env) == _value(f.right, env)
    if isinstance(f, And):
        return all(_holds(p, db, env, adom) for p in f.parts)
    if isinstance(f, Implies):
        return not _holds(f.premise, db, env, adom) or _holds(f.conclusion, db, env, adom)
    quantified = frozenset(f.variables)
    if isinstance(f, Exists):
        parts = f.body.parts if isinstance(f.body, And) else (f.body,)
        guard = _find_guard(parts, quantified)
        if guard is not None:
            envs = _guard_matches(guard, db, env, quantified)
        else:
            envs = _domain_envs(env, f.variables, adom)
        return any(_holds(f.body, db, local, adom) for local in envs)
    body = f.body
    if isinstance(body, Implies):
        guard = _find_guard([body.premise], quantified)
        if guard is not None:
            return all(
                _holds(body.conclusion, db, local, adom)
                for local in _guard_matches(guard, db, env, quantified)
            )
    return all(_holds(body, db, local, adom) for local in _domain_envs(env, f.variables, adom))


def _constants(f: Formula) -> set[Constant]:
    if isinstance(f, AtomF):
        return {t for t in f.terms if isinstance(t, Constant)}
    if isinstance(f, Equals):
        return {t for t in (f.left, f.right) if isinstance(t, Constant)}
    if isinstance(f, And):
        return set().union(*(_constants(p) for p in f.parts))
    if isinstance(f, Implies):
        return _constants(f.premise) | _constants(f.conclusion)
    return _constants(f.body)


def model_check(f: Formula, db: Database) -> bool:
    free = free_variables(f)
    if free:
        raise ValueError(f"formula has free variables {sorted(v.name for v in free)}")
    adom = db.adom | frozenset(_constants(f))
    return _holds(f, db, {}, adom)
