# app/api/v1/analysis.py
"""
Query analysis commands: classify, attack-graph, markov, rewrite, explain.
None of them needs a database.
"""
import argparse
from collections.abc import Callable, Iterable

from app.db.database import load_query
from app.models import Query, Variable
from app.models.reports import CommandReport, Outcome, RunConfig
from app.services.attack import (
    Strength,
    attack_graph,
    attack_graph_dot,
    cycle_status,
    format_witness,
    initial_strong_components,
)
from app.services.classify import classify
from app.services.fd import fd_of_query, k_closure, sequential_proof
from app.services.fo_engine import emit_rewriting
from app.services.formula import to_sexpr
from app.services.markov import markov_graph, markov_graph_dot
from app.utils.errors import UsageError


def _query(config: RunConfig) -> Query:
    if not config.query:
        raise UsageError(f"{config.command} needs a query file")
    return load_query(config.query)


def _varset(q: Query, vars_: Iterable[Variable]) -> str:
    chosen = set(vars_)
    return "{" + ", ".join(v.name for v in q.ordered_vars if v in chosen) + "}"


# ---- classify ----
def classify_cmd(config: RunConfig) -> Outcome:
    q = _query(config)
    verdict = classify(q)
    report = CommandReport(
        command="classify",
        query_class=verdict.query_class.value,
        evidence=list(verdict.evidence),
        result=verdict.query_class.label,
        stats={"atoms": len(q), "icard": q.icard},
    )
    return Outcome(text=verdict.describe(), report=report)


# ---- attack-graph ----
def attack_graph_cmd(config: RunConfig) -> Outcome:
    q = _query(config)
    g = attack_graph(q)
    status = cycle_status(g)
    if config.dot:
        text = attack_graph_dot(g).rstrip("\n")
    else:
        lines = [
            f"{a.source} -> {a.target} {a.strength.value}  ({format_witness(a.witness)})"
            for a in g.edges.values()
        ]
        components = initial_strong_components(g).initial_components()
        lines.append(f"cycles: {status.status.value}")
        lines.append(
            "initial components: "
            + " ".join("{" + ", ".join(n for n in g.nodes if n in c) + "}" for c in components)
        )
        text = "\n".join(lines)
    report = CommandReport(
        command="attack-graph",
        evidence=list(status.pair or ()),
        result=status.status.value,
        stats={
            "edges": len(g.edges),
            "strong": sum(1 for a in g.edges.values() if a.strength is Strength.STRONG),
        },
    )
    return Outcome(text=text, report=report)


# ---- markov ----
def markov_cmd(config: RunConfig) -> Outcome:
    q = _query(config)
    m = markov_graph(q)
    if config.dot:
        text = markov_graph_dot(m).rstrip("\n")
    else:
        text = "\n".join(f"{x} -> {y}" for x, y in m.edges()) or "(no edges)"
    report = CommandReport(
        command="markov",
        evidence=[f"{x}->{y}" for x, y in m.edges()],
        stats={"vertices": len(q.ordered_vars), "edges": len(m.edges())},
    )
    return Outcome(text=text, report=report)


# ---- rewrite ----
def rewrite_cmd(config: RunConfig) -> Outcome:
    q = _query(config)
    sexpr = to_sexpr(emit_rewriting(q))
    return Outcome(text=sexpr, report=CommandReport(command="rewrite", query_class="FO", result=sexpr))


# ---- explain ----
def explain_cmd(config: RunConfig) -> Outcome:
    q = _query(config)
    g = attack_graph(q)
    lines = ["FD(q):"]
    lines += [f"  {dep}" for dep in fd_of_query(q.atoms)]
    lines.append("closures:")
    for atom in q.atoms:
        lines.append(
            f"  {atom.name}: K = {_varset(q, k_closure(q, atom))}"
            f"  K+ = {_varset(q, k_closure(q, atom, plus=True))}"
        )
    lines.append("attacks:")
    proofs = 0
    for attack in g.edges.values():
        lines.append(
            f"  {attack.source} -> {attack.target} {attack.strength.value}"
            f"  witness {format_witness(attack.witness)}"
        )
        if attack.strength is not Strength.WEAK:
            continue
        F, G = q.atom(attack.source), q.atom(attack.target)
        for y in G.ordered_vars:
            if y not in G.key_vars:
                continue
            proof = sequential_proof(q, F.key_vars, y)
            steps = ", ".join(a.name for a in proof or ()) or "(trivial)"
            lines.append(f"    {_varset(q, F.key_vars)} -> {y}: {steps}")
            proofs += 1
    verdict = classify(q)
    lines.append(f"class: {verdict.query_class.label}")
    report = CommandReport(
        command="explain",
        query_class=verdict.query_class.value,
        evidence=list(verdict.evidence),
        result="\n".join(lines),
        stats={"edges": len(g.edges), "proofs": proofs},
    )
    return Outcome(text="\n".join(lines), report=report)


HANDLERS: dict[str, Callable[[RunConfig], Outcome]] = {
    "classify": classify_cmd,
    "attack-graph": attack_graph_cmd,
    "markov": markov_cmd,
    "rewrite": rewrite_cmd,
    "explain": explain_cmd,
}


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    for name, help_text in [
        ("classify", "FO, PTIME or CONP-COMPLETE, with evidence"),
        ("attack-graph", "attack edges with strength and witness"),
        ("markov", "Markov graph of a query"),
        ("rewrite", "first-order rewriting as an s-expression"),
        ("explain", "FD(q), K/K+ per atom, attacks and sequential proofs"),
    ]:
        p = subparsers.add_parser(name, parents=[common], help=help_text)
        p.add_argument("query", help="query file (.cq)")
        if name in ("attack-graph", "markov"):
            p.add_argument("--dot", action="store_true", help="print Graphviz DOT")
