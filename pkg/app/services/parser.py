# app/services/parser.py
"""
Text formats for queries and databases.

Query file, one atom per line:
    [consistent] NAME(term, ... [| term, ...])
Database file, one fact per line:
    NAME(const, ...)
`#` starts a comment. Variables start with a lowercase letter; constants are
quoted ('b') or start with a digit or an uppercase letter. In database files
every bare token is a constant.
"""
import re

from pyparsing import (
    FollowedBy,
    Group,
    Keyword,
    Optional,
    ParseException,
    ParserElement,
    ParseResults,
    QuotedString,
    Regex,
    StringEnd,
    Suppress,
    Word,
    ZeroOrMore,
    alphanums,
    alphas,
    python_style_comment,
)

from app.models import (
    Atom,
    Constant,
    Database,
    Fact,
    Mode,
    Query,
    RelationDecl,
    Term,
    Variable,
    quote_constant,
)
from app.utils.errors import (
    ArityMismatch,
    InconsistentConsistentRelation,
    ParseError,
    SelfJoinError,
    UnknownRelation,
)

_VARIABLE = re.compile(r"[a-z][A-Za-z0-9_]*")


def _term(tokens) -> Term:
    text = tokens[0]
    return Variable(text) if _VARIABLE.fullmatch(text) else Constant(text)


def _grammar() -> tuple[ParserElement, ParserElement]:
    name = Word(alphas + "_", alphanums + "_")
    bare = Regex(r"-?[A-Za-z0-9_][A-Za-z0-9_.\-]*")
    quoted = QuotedString("'", esc_char="\\", convert_whitespace_escapes=False)
    quoted.set_parse_action(lambda t: Constant(t[0]))

    term = quoted | bare.copy().set_parse_action(_term)
    terms = term + ZeroOrMore(Suppress(",") + term)
    mode = Optional(Keyword("consistent") + FollowedBy(name))
    atom = (
        Group(mode)("mode")
        + name("name")
        + Suppress("(")
        + Group(terms)("key")
        + Group(Optional(Suppress("|") + Optional(terms)))("rest")
        + Suppress(")")
    )

    value = quoted | bare.copy().set_parse_action(lambda t: Constant(t[0]))
    values = value + ZeroOrMore(Suppress(",") + value)
    fact = name("name") + Suppress("(") + Group(values)("values") + Suppress(")")

    query_line = StringEnd() | Group(atom)("atom") + StringEnd()
    fact_line = StringEnd() | Group(fact)("fact") + StringEnd()
    for line in (query_line, fact_line):
        line.ignore(python_style_comment)
    return query_line, fact_line


_QUERY_LINE, _FACT_LINE = _grammar()


def _parse_line(grammar: ParserElement, line: str, lineno: int) -> ParseResults:
    try:
        return grammar.parse_string(line, parse_all=True)
    except ParseException as e:
        raise ParseError(f"column {e.column}: {e.msg}", lineno) from None


# ---- Queries ----
def _parse_atom(line: str, lineno: int) -> Atom | None:
    parsed = _parse_line(_QUERY_LINE, line, lineno)
    if "atom" not in parsed:
        return None
    atom = parsed["atom"]
    key, rest = list(atom["key"]), list(atom.get("rest", []))
    mode = Mode.CONSISTENT if len(atom.get("mode", [])) else Mode.INCONSISTENT
    decl = RelationDecl(atom["name"], len(key) + len(rest), len(key), mode)
    return Atom(decl, tuple(key + rest))


def parse_query(text: str) -> Query:
    atoms: list[Atom] = []
    seen: dict[str, RelationDecl] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        atom = _parse_atom(line, lineno)
        if atom is None:
            continue
        previous = seen.get(atom.name)
        if previous is not None:
            if previous.arity != atom.relation.arity:
                raise ArityMismatch(
                    f"line {lineno}: relation {atom.name} used with arities "
                    f"{previous.arity} and {atom.relation.arity}"
                )
            raise SelfJoinError(f"line {lineno}: relation {atom.name} occurs twice")
        seen[atom.name] = atom.relation
        atoms.append(atom)
    return Query(tuple(atoms))


# ---- Databases ----
def _parse_fact(line: str, lineno: int) -> Fact | None:
    parsed = _parse_line(_FACT_LINE, line, lineno)
    if "fact" not in parsed:
        return None
    fact = parsed["fact"]
    return Fact(fact["name"], tuple(fact["values"]))


def parse_database(text: str, q: Query) -> Database:
    schema = q.relations
    facts: set[Fact] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        fact = _parse_fact(line, lineno)
        if fact is None:
            continue
        decl = schema.get(fact.relation)
        if decl is None:
            raise UnknownRelation(f"line {lineno}: relation {fact.relation} is not in the query")
        if len(fact.values) != decl.arity:
            raise ArityMismatch(
                f"line {lineno}: {fact.relation} expects {decl.arity} values, got {len(fact.values)}"
            )
        facts.add(fact)
    db = Database(schema, frozenset(facts))
    for name, decl in schema.items():
        if not decl.consistent:
            continue
        for block in db.blocks(name):
            if len(block) > 1:
                raise InconsistentConsistentRelation(
                    f"consistent relation {name} has key-equal facts {block[0]} and {block[1]}"
                )
    return db


# ---- Printing ----
def format_query(q: Query) -> str:
    return "".join(f"{atom}\n" for atom in q.atoms)


def format_database(db: Database) -> str:
    lines = []
    for fact in db:
        values = ", ".join(quote_constant(v.name) for v in fact.values)
        lines.append(f"{fact.relation}({values})\n")
    return "".join(lines)
