import logging
import random

import pytest

from app.models import Fact
from app.services.classify import QueryClass, classify
from app.services.oracle import certain_oracle
from app.services.ptime_pipeline import certain_ptime, desugar_all, desugar_consistent, prepare
from app.services.reductions import gpurify, purify, saturate, simplify, type_tag
from app.tools.fuzz import generate_database, generate_query
from app.utils.errors import NoConsistentAtom, PreconditionError
from app.utils.naming import Mint

from conftest import c_, db_, q_


def test_triangle_database_is_certain(triangle_query, triangle_db):
    assert certain_ptime(triangle_query, triangle_db)


def test_path_database_is_not_certain(swap_query, swap_db):
    assert certain_ptime(swap_query, swap_db) is False
    assert certain_oracle(swap_query, swap_db) is False


def test_fo_queries_go_through_the_branch(fo_query, fo_db):
    assert certain_ptime(fo_query, fo_db)
    assert not certain_ptime(fo_query, fo_db.with_facts([Fact("S", (c_("c"), c_("d")))]))


def test_strong_cycles_are_refused(hard_query):
    with pytest.raises(PreconditionError):
        certain_ptime(hard_query, db_(hard_query, ""))


def test_stage_lines_are_logged(triangle_query, triangle_db, caplog):
    caplog.set_level(logging.INFO, logger="app.services.ptime_pipeline")
    certain_ptime(triangle_query, triangle_db)
    stages = [r.getMessage().split()[0] for r in caplog.records]
    assert "stage=purify" in stages
    assert "stage=dissolve" in stages
    assert "stage=evaluate" in stages


def test_stage_lines_carry_depth(triangle_query, triangle_db, caplog):
    caplog.set_level(logging.INFO, logger="app.services.ptime_pipeline")
    certain_ptime(triangle_query, triangle_db)
    messages = [r.getMessage() for r in caplog.records if r.getMessage().startswith("stage=")]
    depths = [int(m.split()[1].removeprefix("depth=")) for m in messages]
    assert all(m.split()[1].startswith("depth=") for m in messages)
    assert depths[0] == 0
    # the dissolved query is evaluated one level down
    dissolve = next(i for i, m in enumerate(messages) if m.startswith("stage=dissolve"))
    assert depths[dissolve] == 0
    assert max(depths) >= 1


def test_prepare_on_triangle(triangle_query, triangle_db):
    q, db = prepare(triangle_query, triangle_db, Mint())
    assert q == triangle_query
    assert len(db) == len(triangle_db)


# ---- desugaring ----
def test_desugar_consistent_atom():
    q = q_("R(x | y)\nconsistent T(y | x)")
    step = desugar_consistent(q)
    assert [str(a) for a in step.query.atoms] == ["R(x | y)", "T1(y | x)", "T2(y | x)"]
    db = db_(q, "R(1, a)\nR(1, b)\nT(a, 1)\nT(b, 2)")
    copied = step.apply(db)
    assert len(copied) == 6
    assert certain_oracle(step.query, copied) == certain_oracle(q, db)
    assert certain_ptime(step.query, copied) == certain_ptime(q, db)


def test_desugar_all_and_errors(swap_query):
    q = q_("consistent A(x | y)\nconsistent B(y | x)\nC(x | y)")
    plain, apply = desugar_all(q)
    assert not plain.consistent_atoms
    assert plain.icard == 5
    db = db_(q, "A(1, 2)\nB(2, 1)\nC(1, 2)\nC(1, 3)")
    assert certain_oracle(plain, apply(db)) == certain_oracle(q, db)
    with pytest.raises(NoConsistentAtom):
        desugar_consistent(swap_query)


# ---- agreement with the oracle ----
def _tractable_cases(seed: int, count: int):
    rng = random.Random(seed)
    produced = 0
    while produced < count:
        q = generate_query(rng)
        if classify(q).query_class is QueryClass.CONP_COMPLETE:
            continue
        produced += 1
        yield q, generate_database(rng, q)


def test_ptime_agrees_with_oracle():
    for q, db in _tractable_cases(seed=31, count=400):
        assert certain_ptime(q, db) == certain_oracle(q, db), f"{q}\n--\n{db}"


def test_every_stage_keeps_certainty():
    for q, db in _tractable_cases(seed=32, count=200):
        expected = certain_oracle(q, db)
        db = purify(q, db)
        assert certain_oracle(q, db) == expected, f"purify\n{q}"
        q, db = simplify(q, db, Mint())
        assert certain_oracle(q, db) == expected, f"simplify\n{q}"
        db = type_tag(q, db)
        assert certain_oracle(q, db) == expected, f"type_tag\n{q}"
        q, db = saturate(q, db)
        assert certain_oracle(q, db) == expected, f"saturate\n{q}"
        db = gpurify(q, purify(q, db))
        assert certain_oracle(q, db) == expected, f"gpurify\n{q}"
