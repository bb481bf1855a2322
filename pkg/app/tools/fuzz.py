# app/tools/fuzz.py
"""
Differential fuzzing of the answering engines against the repair oracle.

generate_query(rng)          -> random self-join-free query, biased toward key cycles
generate_database(rng, q)    -> random database over q's relations
check_case(q, db)            -> verdict of every applicable engine vs the oracle
run_fuzz(seed, cases, ...)   -> reproducible batch, minimized counterexamples
"""
import logging
import random
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor

from pydantic import BaseModel, ConfigDict, Field

from app.models import Atom, Constant, Database, Fact, Mode, Query, RelationDecl, Term, Variable
from app.services.classify import QueryClass, classify
from app.services.evaluation import ground
from app.services.fo_engine import certain_fo, emit_rewriting
from app.services.formula import model_check
from app.services.oracle import certain_oracle
from app.services.parser import format_database, format_query
from app.services.ptime_pipeline import certain_ptime
from app.utils.errors import CQAError

log = logging.getLogger(__name__)

VARIABLES = ("x", "y", "z", "u", "v")
CONSTANTS = ("0", "1", "2")
MAX_ATOMS = 5
MAX_FACTS = 12
CYCLE_SHARE = 0.32


# ---- Generators ----
def _cycle_query(rng: random.Random, strong: bool) -> Query:
    """A 2- or 3-atom cycle through simple keys, e.g. R(x | y), S(y | x).

    A strong cycle gets one extra key variable that no other atom mentions,
    so the atom's key is no longer determined by the rest of the cycle.
    """
    names = rng.sample(VARIABLES, len(VARIABLES))
    length = rng.choice((2, 3))
    ring, extra_key, private = names[:length], names[3], names[4]
    rows: list[tuple[list[str], list[str]]] = [
        ([ring[i]], [ring[(i + 1) % length]]) for i in range(length)
    ]
    if strong:
        rng.choice(rows)[0].append(extra_key)
    if rng.random() < 0.5:
        key, rest = rng.choice(rows)
        if len(key) + len(rest) < 3:
            rest.append(private)
    rng.shuffle(rows)
    atoms = []
    for i, (key, rest) in enumerate(rows):
        terms = tuple(Variable(v) for v in key + rest)
        atoms.append(Atom(RelationDecl(f"R{i}", len(terms), len(key)), terms))
    return Query(tuple(atoms))


def _random_query(rng: random.Random, max_atoms: int) -> Query:
    size = rng.choices(range(1, 6), weights=[1, 5, 5, 2, 1])[0]
    size = min(size, max_atoms)
    pool = VARIABLES[: rng.randint(2, 4)]
    atoms: list[Atom] = []
    for i in range(size):
        arity = rng.randint(1, 3)
        key_len = rng.randint(1, arity)
        mode = Mode.CONSISTENT if rng.random() < 0.15 else Mode.INCONSISTENT
        terms: list[Term] = []
        for _ in range(arity):
            if rng.random() < 0.08:
                terms.append(Constant(rng.choice(CONSTANTS)))
            else:
                terms.append(Variable(rng.choice(pool)))
        atoms.append(Atom(RelationDecl(f"R{i}", arity, key_len, mode), tuple(terms)))
    return Query(tuple(atoms))


def generate_query(rng: random.Random, max_atoms: int = MAX_ATOMS) -> Query:
    """Random self-join-free query; about a third each are weak cycles, strong cycles and free draws."""
    shape = rng.random()
    if max_atoms >= 3 and shape < CYCLE_SHARE:
        return _cycle_query(rng, strong=False)
    if max_atoms >= 3 and shape < 2 * CYCLE_SHARE:
        return _cycle_query(rng, strong=True)
    return _random_query(rng, max_atoms)


def _admissible(fact: Fact, decl: RelationDecl, facts: set[Fact]) -> bool:
    if fact in facts:
        return False
    if not decl.consistent:
        return True
    key = fact.values[: decl.key_len]
    return all(f.relation != fact.relation or f.values[: decl.key_len] != key for f in facts)


def generate_database(rng: random.Random, q: Query, max_facts: int = MAX_FACTS) -> Database:
    facts: set[Fact] = set()
    if not q.atoms:
        return Database.for_query(q)
    target = rng.randint(0, max_facts)
    # a few embeddings first, so answers are not trivially false
    for _ in range(rng.randint(0, 3)):
        theta = {v: Constant(rng.choice(CONSTANTS)) for v in q.vars}
        for atom in q.atoms:
            fact = ground(atom, theta)
            if len(facts) < target and _admissible(fact, atom.relation, facts):
                facts.add(fact)
    attempts = 0
    while len(facts) < target and attempts < 10 * max_facts:
        attempts += 1
        atom = rng.choice(q.atoms)
        fact = Fact(atom.name, tuple(Constant(rng.choice(CONSTANTS)) for _ in atom.terms))
        if _admissible(fact, atom.relation, facts):
            facts.add(fact)
    return Database.for_query(q, facts)


# ---- Checking ----
class CaseReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    index: int = 0
    query: str
    database: str
    query_class: str
    oracle: bool
    verdicts: dict[str, bool | str] = Field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(v == self.oracle for v in self.verdicts.values())


def _verdict(engine: Callable[[], bool]) -> bool | str:
    try:
        return engine()
    except CQAError as e:
        return f"error: {e.detail}"


def check_case(q: Query, db: Database, index: int = 0) -> CaseReport:
    verdict_class = classify(q).query_class
    verdicts: dict[str, bool | str] = {}
    if verdict_class is QueryClass.FO:
        verdicts["fo"] = _verdict(lambda: certain_fo(q, db))
        verdicts["rewriting"] = _verdict(lambda: model_check(emit_rewriting(q), db))
    if verdict_class is not QueryClass.CONP_COMPLETE:
        verdicts["ptime"] = _verdict(lambda: certain_ptime(q, db))
    return CaseReport(
        index=index,
        query=format_query(q),
        database=format_database(db),
        query_class=verdict_class.value,
        oracle=certain_oracle(q, db),
        verdicts=verdicts,
    )


def minimize(db: Database, still_failing: Callable[[Database], bool]) -> Database:
    """Greedily drop facts while the failure persists."""
    current = db
    shrinking = True
    while shrinking:
        shrinking = False
        for fact in sorted(current.facts):
            smaller = current.without_facts([fact])
            if still_failing(smaller):
                current = smaller
                shrinking = True
                break
    return current


def generate_case(seed: int, index: int) -> tuple[Query, Database]:
    rng = random.Random(f"{seed}:{index}")
    q = generate_query(rng)
    return q, generate_database(rng, q)


def run_case(seed: int, index: int) -> CaseReport:
    q, db = generate_case(seed, index)
    report = check_case(q, db, index)
    if report.ok:
        return report
    small = minimize(db, lambda candidate: not check_case(q, candidate).ok)
    log.warning("fuzz case %d disagrees with the oracle", index)
    return check_case(q, small, index)


class FuzzSummary(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int
    cases: int
    by_class: dict[str, int] = Field(default_factory=dict)
    failures: list[CaseReport] = Field(default_factory=list)


def run_fuzz(seed: int, cases: int, workers: int = 1) -> FuzzSummary:
    indices = range(cases)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run_case, [seed] * cases, indices))
    else:
        reports = [run_case(seed, i) for i in indices]
    summary = FuzzSummary(seed=seed, cases=cases)
    for report in reports:
        summary.by_class[report.query_class] = summary.by_class.get(report.query_class, 0) + 1
        if not report.ok:
            summary.failures.append(report)
    return summary
