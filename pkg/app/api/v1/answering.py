# app/api/v1/answering.py
"""
Certain-answer commands: certain, oracle, fuzz.
"""
import argparse
import logging
import sys
from collections.abc import Callable, Iterator
from contextlib import contextmanager

from app.db.database import load_database, load_query
from app.models import Database, Query
from app.models.reports import CommandReport, Outcome, RunConfig
from app.services.classify import QueryClass, classify
from app.services.fo_engine import certain_fo
from app.services.oracle import certain_oracle, count_repairs, falsifying_repair
from app.services.parser import format_database
from app.services.ptime_pipeline import certain_ptime
from app.tools.fuzz import run_fuzz
from app.utils.errors import UsageError

log = logging.getLogger(__name__)

AUTO_ENGINE = {
    QueryClass.FO: "fo",
    QueryClass.PTIME_NOT_FO: "ptime",
    QueryClass.CONP_COMPLETE: "oracle",
}


def _inputs(config: RunConfig) -> tuple[Query, Database]:
    if not config.query or not config.database:
        raise UsageError(f"{config.command} needs a query file and a database file")
    q = load_query(config.query)
    return q, load_database(config.database, q)


@contextmanager
def _trace(enabled: bool) -> Iterator[None]:
    """Stream pipeline stage lines to stdout while the block runs."""
    if not enabled:
        yield
        return
    pipeline = logging.getLogger("app.services.ptime_pipeline")
    handler = logging.StreamHandler(sys.stdout)
    handler.setFormatter(logging.Formatter("%(message)s"))
    previous = pipeline.level
    pipeline.addHandler(handler)
    pipeline.setLevel(logging.INFO)
    try:
        yield
    finally:
        pipeline.removeHandler(handler)
        pipeline.setLevel(previous)


# ---- certain ----
def certain_cmd(config: RunConfig) -> Outcome:
    q, db = _inputs(config)
    verdict = classify(q)
    engine = AUTO_ENGINE[verdict.query_class] if config.engine == "auto" else config.engine
    log.info("certain: class=%s engine=%s facts=%d", verdict.query_class.value, engine, len(db))
    if engine == "fo":
        answer = certain_fo(q, db)
    elif engine == "ptime":
        with _trace(config.trace):
            answer = certain_ptime(q, db, gblock_cap=config.gblock_cap)
    else:
        answer = certain_oracle(q, db, cap=config.oracle_cap, workers=config.workers)
    report = CommandReport(
        command="certain",
        query_class=verdict.query_class.value,
        evidence=list(verdict.evidence),
        result=answer,
        stats={"engine": engine, "facts": len(db)},
    )
    return Outcome(text=str(answer).lower(), report=report)


# ---- oracle ----
def oracle_cmd(config: RunConfig) -> Outcome:
    q, db = _inputs(config)
    repairs = count_repairs(db, config.oracle_cap)
    stats = {"repairs": repairs, "facts": len(db)}
    if config.count:
        return Outcome(text=str(repairs), report=CommandReport(command="oracle", result=repairs, stats=stats))
    if config.witness:
        repair = falsifying_repair(q, db, config.oracle_cap)
        answer = repair is None
        text = "true" if answer else "false\n" + format_database(repair).rstrip("\n")
        if repair is not None:
            stats["witness"] = format_database(repair)
    else:
        answer = certain_oracle(q, db, cap=config.oracle_cap, workers=config.workers)
        text = str(answer).lower()
    return Outcome(text=text, report=CommandReport(command="oracle", result=answer, stats=stats))


# ---- fuzz ----
def fuzz_cmd(config: RunConfig) -> Outcome:
    summary = run_fuzz(config.seed, config.cases, config.workers)
    counts = " ".join(
        f"{QueryClass(name).label}={summary.by_class.get(name, 0)}" for name in AUTO_ENGINE
    )
    lines = [f"seed={summary.seed} cases={summary.cases} {counts} failures={len(summary.failures)}"]
    for case in summary.failures:
        verdicts = " ".join(f"{engine}={verdict}" for engine, verdict in case.verdicts.items())
        lines += [
            f"case {case.index}: oracle={str(case.oracle).lower()} {verdicts}",
            case.query.rstrip("\n"),
            "--",
            case.database.rstrip("\n"),
        ]
    report = CommandReport(
        command="fuzz",
        result=not summary.failures,
        stats=summary.model_dump(),
    )
    return Outcome(text="\n".join(lines), report=report, exit_code=0 if not summary.failures else 4)


HANDLERS: dict[str, Callable[[RunConfig], Outcome]] = {
    "certain": certain_cmd,
    "oracle": oracle_cmd,
    "fuzz": fuzz_cmd,
}


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    p = subparsers.add_parser("certain", parents=[common], help="is the query true in every repair?")
    p.add_argument("query")
    p.add_argument("database")
    p.add_argument("--engine", choices=["auto", "fo", "ptime", "oracle"], default="auto")
    p.add_argument("--trace", action="store_true", help="stream P-time pipeline stages")

    p = subparsers.add_parser("oracle", parents=[common], help="answer by enumerating repairs")
    p.add_argument("query")
    p.add_argument("database")
    p.add_argument("--count", action="store_true", help="print the number of repairs")
    p.add_argument("--witness", action="store_true", help="print a falsifying repair")

    p = subparsers.add_parser("fuzz", parents=[common], help="cross-check engines on random cases")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=100)
