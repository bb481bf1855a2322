import random

import pytest

from app.models import Fact
from app.services.classify import QueryClass, classify
from app.services.fo_engine import certain_fo, emit_rewriting
from app.services.formula import Exists, free_variables, model_check, to_sexpr
from app.services.oracle import certain_oracle
from app.tools.fuzz import generate_database, generate_query
from app.utils.errors import NotFOQuery

from conftest import c_, db_, q_

FO_REWRITING = (
    "(exists (x y) (and (R x y) (forall (y) (implies (R x y) "
    "(and (S y 'b') (forall (z) (implies (S y z) (= z 'b'))))))))"
)


def test_rewriting_of_two_atom_query(fo_query):
    f = emit_rewriting(fo_query)
    assert to_sexpr(f) == FO_REWRITING
    assert isinstance(f, Exists)
    assert free_variables(f) == frozenset()


def test_certain_fo_on_demo(fo_query, fo_db):
    assert certain_fo(fo_query, fo_db)
    broken = fo_db.with_facts([Fact("S", (c_("c"), c_("d")))])
    assert not certain_fo(fo_query, broken)
    assert not model_check(emit_rewriting(fo_query), broken)


def test_cyclic_queries_are_refused(swap_query, swap_db):
    with pytest.raises(NotFOQuery):
        certain_fo(swap_query, swap_db)
    with pytest.raises(NotFOQuery):
        emit_rewriting(swap_query)


def test_empty_query_is_certain():
    q = q_("")
    assert certain_fo(q, db_(q, ""))
    assert to_sexpr(emit_rewriting(q)) == "true"


def test_constant_key():
    q = q_("R('a' | y)\nS(y | z)")
    db = db_(q, "R(a, 1)\nR(a, 2)\nS(1, x)\nS(2, y)\nS(2, z)")
    assert certain_fo(q, db) == certain_oracle(q, db) is True
    assert model_check(emit_rewriting(q), db)


def test_rewriting_matches_fo_on_random_databases(fo_query):
    rng = random.Random(7)
    for _ in range(200):
        db = generate_database(rng, fo_query)
        assert model_check(emit_rewriting(fo_query), db) == certain_fo(fo_query, db)


def test_agrees_with_oracle_on_random_fo_queries():
    rng = random.Random(8)
    checked = 0
    while checked < 150:
        q = generate_query(rng)
        if classify(q).query_class is not QueryClass.FO:
            continue
        checked += 1
        rewriting = emit_rewriting(q)
        for _ in range(3):
            db = generate_database(rng, q)
            expected = certain_oracle(q, db)
            assert certain_fo(q, db) == expected, f"{q}\n--\n{db}"
            assert model_check(rewriting, db) == expected, f"{q}\n--\n{db}"


def test_choice_of_unattacked_atom_does_not_matter():
    rng = random.Random(9)
    checked = 0
    while checked < 100:
        q = generate_query(rng)
        if classify(q).query_class is not QueryClass.FO:
            continue
        checked += 1
        for _ in range(3):
            db = generate_database(rng, q)
            expected = certain_oracle(q, db)
            assert certain_fo(q, db) == expected, f"{q}\n--\n{db}"
            assert certain_fo(q, db, choose=lambda atoms: atoms[-1]) == expected, f"{q}\n--\n{db}"
            assert certain_fo(q, db, choose=rng.choice) == expected, f"{q}\n--\n{db}"
