# app/models/models.py
"""
Immutable data model: terms, relation signatures, atoms, queries, facts and
uncertain databases with their block structure.
"""
import re
from collections.abc import Iterable, Iterator, Mapping, Sequence
from enum import Enum
from functools import cached_property
from typing import Union

from pydantic import model_validator
from pydantic.dataclasses import dataclass

from app.utils.errors import (
    ArityMismatch,
    LengthMismatch,
    SelfJoinError,
    UnknownRelation,
)

_BARE_CONSTANT = re.compile(r"[0-9A-Z][A-Za-z0-9_]*")


def quote_constant(name: str) -> str:
    if _BARE_CONSTANT.fullmatch(name):
        return name
    escaped = name.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


# ---- Terms ----
@dataclass(frozen=True, order=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class Constant:
    """
    A constant. `tag` is the variable name a constant was typed with during
    ingestion by the P-time engine; `serial` is nonzero for constants minted
    while rewriting a database, which keeps them apart from any parsed constant.
    """

    name: str
    tag: str = ""
    serial: int = 0

    def __str__(self) -> str:
        text = f"#{self.name}" if self.serial else quote_constant(self.name)
        if self.tag:
            text = f"{text}@{self.tag}"
        return text


Term = Union[Variable, Constant]
Valuation = dict[Variable, Constant]


def apply_term(term: Term, valuation: Mapping[Variable, Constant]) -> Term:
    if isinstance(term, Variable):
        return valuation.get(term, term)
    return term


# ---- Signatures and atoms ----
class Mode(str, Enum):
    INCONSISTENT = "i"
    CONSISTENT = "c"


@dataclass(frozen=True)
class RelationDecl:
    name: str
    arity: int
    key_len: int
    mode: Mode = Mode.INCONSISTENT

    @model_validator(mode="after")
    def _check_key(self) -> "RelationDecl":
        if not 1 <= self.key_len <= self.arity:
            raise ArityMismatch(
                f"relation {self.name}: key length {self.key_len} outside 1..{self.arity}"
            )
        return self

    @property
    def consistent(self) -> bool:
        return self.mode is Mode.CONSISTENT


@dataclass(frozen=True)
class Atom:
    relation: RelationDecl
    terms: tuple[Term, ...]

    @model_validator(mode="after")
    def _check_arity(self) -> "Atom":
        if len(self.terms) != self.relation.arity:
            raise ArityMismatch(
                f"atom {self.relation.name} has {len(self.terms)} terms, "
                f"signature says {self.relation.arity}"
            )
        return self

    @property
    def name(self) -> str:
        return self.relation.name

    @property
    def consistent(self) -> bool:
        return self.relation.consistent

    @property
    def key_terms(self) -> tuple[Term, ...]:
        return self.terms[: self.relation.key_len]

    @property
    def nonkey_terms(self) -> tuple[Term, ...]:
        return self.terms[self.relation.key_len :]

    @property
    def key_vars(self) -> frozenset[Variable]:
        return frozenset(t for t in self.key_terms if isinstance(t, Variable))

    @property
    def vars(self) -> frozenset[Variable]:
        return frozenset(t for t in self.terms if isinstance(t, Variable))

    @property
    def ordered_vars(self) -> tuple[Variable, ...]:
        return tuple(dict.fromkeys(t for t in self.terms if isinstance(t, Variable)))

    @property
    def simple_key(self) -> bool:
        return self.relation.key_len == 1

    def substitute(self, valuation: Mapping[Variable, Constant]) -> "Atom":
        return Atom(self.relation, tuple(apply_term(t, valuation) for t in self.terms))

    def __str__(self) -> str:
        key = ", ".join(str(t) for t in self.key_terms)
        rest = ", ".join(str(t) for t in self.nonkey_terms)
        body = f"{key} | {rest}" if self.nonkey_terms else key
        prefix = "consistent " if self.consistent else ""
        return f"{prefix}{self.name}({body})"


# ---- Queries ----
@dataclass(frozen=True)
class Query:
    """Self-join-free Boolean conjunctive query; atom order is kept from input."""

    atoms: tuple[Atom, ...] = ()

    @model_validator(mode="after")
    def _check_self_join_free(self) -> "Query":
        seen: set[str] = set()
        for atom in self.atoms:
            if atom.name in seen:
                raise SelfJoinError(f"relation {atom.name} occurs twice")
            seen.add(atom.name)
        return self

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, atom: object) -> bool:
        return atom in self.atoms

    def __str__(self) -> str:
        return "\n".join(str(a) for a in self.atoms)

    @property
    def relations(self) -> dict[str, RelationDecl]:
        return {a.name: a.relation for a in self.atoms}

    @property
    def vars(self) -> frozenset[Variable]:
        return frozenset(v for a in self.atoms for v in a.vars)

    @property
    def ordered_vars(self) -> tuple[Variable, ...]:
        return tuple(dict.fromkeys(v for a in self.atoms for v in a.ordered_vars))

    @property
    def consistent_atoms(self) -> tuple[Atom, ...]:
        return tuple(a for a in self.atoms if a.consistent)

    @property
    def icard(self) -> int:
        return sum(1 for a in self.atoms if not a.consistent)

    def atom(self, name: str) -> Atom:
        for a in self.atoms:
            if a.name == name:
                return a
        raise UnknownRelation(f"no atom for relation {name}")

    def position(self, atom: Atom) -> int:
        return self.atoms.index(atom)

    def without(self, *removed: Atom) -> "Query":
        names = {a.name for a in removed}
        return Query(tuple(a for a in self.atoms if a.name not in names))

    def extended(self, *added: Atom) -> "Query":
        return Query(self.atoms + tuple(added))

    def substitute(self, valuation: Mapping[Variable, Constant]) -> "Query":
        return Query(tuple(a.substitute(valuation) for a in self.atoms))


def substitute(q: Query, xs: Sequence[Variable], as_: Sequence[Constant]) -> Query:
    if len(xs) != len(as_):
        raise LengthMismatch(f"{len(xs)} variables but {len(as_)} constants")
    if len(set(xs)) != len(xs):
        raise LengthMismatch("substituted variables must be distinct")
    return q.substitute(dict(zip(xs, as_)))


# ---- Facts and databases ----
@dataclass(frozen=True, order=True)
class Fact:
    relation: str
    values: tuple[Constant, ...]

    def __str__(self) -> str:
        return f"{self.relation}({', '.join(str(v) for v in self.values)})"


Block = tuple[Fact, ...]


@dataclass(frozen=True, eq=False)
class Database:
    """
    Uncertain database over a schema. Facts are a set; the index groups each
    relation's facts into blocks of key-equal facts.
    """

    schema: dict[str, RelationDecl]
    facts: frozenset[Fact] = frozenset()

    @model_validator(mode="after")
    def _check_facts(self) -> "Database":
        for fact in self.facts:
            decl = self.schema.get(fact.relation)
            if decl is None:
                raise UnknownRelation(f"fact {fact} uses undeclared relation {fact.relation}")
            if len(fact.values) != decl.arity:
                raise ArityMismatch(
                    f"fact {fact} has {len(fact.values)} values, {decl.name} has arity {decl.arity}"
                )
        return self

    @cached_property
    def _index(self) -> dict[str, dict[tuple[Constant, ...], Block]]:
        grouped: dict[str, dict[tuple[Constant, ...], list[Fact]]] = {
            name: {} for name in self.schema
        }
        for fact in self.facts:
            decl = self.schema[fact.relation]
            grouped[fact.relation].setdefault(fact.values[: decl.key_len], []).append(fact)
        return {
            name: {key: tuple(sorted(group)) for key, group in sorted(by_key.items())}
            for name, by_key in grouped.items()
        }

    @classmethod
    def for_query(cls, q: Query, facts: Iterable[Fact] = ()) -> "Database":
        return cls(q.relations, frozenset(facts))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Database) and self.facts == other.facts

    def __hash__(self) -> int:
        return hash(self.facts)

    def __len__(self) -> int:
        return len(self.facts)

    def __iter__(self) -> Iterator[Fact]:
        return iter(sorted(self.facts))

    def __contains__(self, fact: object) -> bool:
        return fact in self.facts

    def __str__(self) -> str:
        return "\n".join(str(f) for f in self)

    def key_of(self, fact: Fact) -> tuple[Constant, ...]:
        return fact.values[: self.schema[fact.relation].key_len]

    def facts_of(self, relation: str) -> tuple[Fact, ...]:
        return tuple(f for block in self._index.get(relation, {}).values() for f in block)

    def block(self, relation: str, key: tuple[Constant, ...]) -> Block:
        return self._index.get(relation, {}).get(key, ())

    def block_of(self, fact: Fact) -> Block:
        return self.block(fact.relation, self.key_of(fact))

    def blocks(self, relation: str) -> list[Block]:
        if relation not in self.schema:
            raise UnknownRelation(f"relation {relation} is not declared")
        return list(self._index[relation].values())

    def all_blocks(self) -> list[Block]:
        """Every block, ordered by (relation, key)."""
        return [block for name in sorted(self._index) for block in self._index[name].values()]

    @property
    def consistent(self) -> bool:
        return all(len(b) == 1 for b in self.all_blocks())

    @property
    def adom(self) -> frozenset[Constant]:
        return frozenset(v for f in self.facts for v in f.values)

    def with_facts(self, facts: Iterable[Fact]) -> "Database":
        return Database(self.schema, self.facts | frozenset(facts))

    def without_facts(self, facts: Iterable[Fact]) -> "Database":
        return Database(self.schema, self.facts - frozenset(facts))

    def replace(self, facts: Iterable[Fact], schema: Mapping[str, RelationDecl] | None = None) -> "Database":
        return Database(self.schema if schema is None else schema, frozenset(facts))


def blocks(db: Database, relation: str) -> list[Block]:
    return db.blocks(relation)
