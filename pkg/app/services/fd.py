# app/services/fd.py
"""
Functional dependencies over query variables.

fd_of_query(atoms)             -> FD set {keyVars(F) -> vars(F)}
closure(fds, X)                -> attribute-set closure
implies(fds, X, Y)             -> fds ⊨ X -> Y
k_closure(q, F, plus)          -> K(F,q), or K⁺(F,q) when plus is set
sequential_proof(q, X, y)      -> a shortest sequence of atoms proving FD(q) ⊨ X -> y
"""
import itertools
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass

from app.models import Atom, Query, Variable
from app.utils.errors import AtomNotInQuery

# exhaustive shortest-proof search is only attempted on queries this small
_EXHAUSTIVE_PROOF_LIMIT = 12


def _fmt(vars_: Iterable[Variable]) -> str:
    return "{" + ",".join(sorted(v.name for v in vars_)) + "}"


@dataclass(frozen=True)
class FunctionalDependency:
    lhs: frozenset[Variable]
    rhs: frozenset[Variable]

    def __str__(self) -> str:
        return f"{_fmt(self.lhs)} -> {_fmt(self.rhs)}"


@dataclass(frozen=True)
class FDSet:
    deps: tuple[FunctionalDependency, ...] = ()

    def __iter__(self) -> Iterator[FunctionalDependency]:
        return iter(self.deps)

    def __len__(self) -> int:
        return len(self.deps)


def fd_of_query(atoms: Iterable[Atom]) -> FDSet:
    return FDSet(tuple(FunctionalDependency(a.key_vars, a.vars) for a in atoms))


def closure(fds: FDSet, X: Iterable[Variable]) -> frozenset[Variable]:
    known = set(X)
    pending = list(fds.deps)
    changed = True
    while changed:
        changed = False
        waiting = []
        for dep in pending:
            if dep.lhs <= known:
                if not dep.rhs <= known:
                    known |= dep.rhs
                    changed = True
            else:
                waiting.append(dep)
        pending = waiting
    return frozenset(known)


def implies(fds: FDSet, X: Iterable[Variable], Y: Iterable[Variable]) -> bool:
    return set(Y) <= closure(fds, X)


def k_closure(q: Query, F: Atom, plus: bool = False) -> frozenset[Variable]:
    if F not in q:
        raise AtomNotInQuery(f"{F} is not an atom of the query")
    if plus:
        return closure(fd_of_query(q.atoms), F.key_vars)
    # (q \ {F}) ∪ q_c
    others = [a for a in q.atoms if a != F or a.consistent]
    return closure(fd_of_query(others), F.key_vars)


# ---- Sequential proofs ----
def _order_as_proof(atoms: Sequence[Atom], X: frozenset[Variable], y: Variable) -> list[Atom] | None:
    known = set(X)
    ordered: list[Atom] = []
    remaining = list(atoms)
    progress = True
    while remaining and progress:
        progress = False
        for atom in list(remaining):
            if atom.key_vars <= known:
                ordered.append(atom)
                known |= atom.vars
                remaining.remove(atom)
                progress = True
    if remaining or y not in known:
        return None
    return ordered


def _chase_proof(q: Query, X: frozenset[Variable], y: Variable) -> list[Atom] | None:
    known = set(X)
    sequence: list[Atom] = []
    while y not in known:
        layer = [a for a in q.atoms if a not in sequence and a.key_vars <= known]
        if not layer:
            return None
        sequence.extend(layer)
        for atom in layer:
            known |= atom.vars
    introducer: dict[Variable, Atom] = {}
    for atom in sequence:
        for v in atom.ordered_vars:
            if v not in X:
                introducer.setdefault(v, atom)
    kept: set[Atom] = set()
    stack = [y]
    while stack:
        v = stack.pop()
        if v in X:
            continue
        atom = introducer[v]
        if atom not in kept:
            kept.add(atom)
            stack.extend(atom.key_vars)
    return [a for a in sequence if a in kept]


def sequential_proof(q: Query, X: Iterable[Variable], y: Variable) -> tuple[Atom, ...] | None:
    X = frozenset(X)
    if y in X:
        return ()
    proof = _chase_proof(q, X, y)
    if proof is None:
        return None
    if len(q) <= _EXHAUSTIVE_PROOF_LIMIT:
        for size in range(1, len(proof)):
            for subset in itertools.combinations(q.atoms, size):
                ordered = _order_as_proof(subset, X, y)
                if ordered is not None:
                    return tuple(ordered)
    return tuple(proof)


def is_sequential_proof(q: Query, X: Iterable[Variable], y: Variable, proof: Sequence[Atom]) -> bool:
    known = set(X)
    for atom in proof:
        if atom not in q or not atom.key_vars <= known:
            return False
        known |= atom.vars
    return y in known
