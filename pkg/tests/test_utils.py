import pytest

from app.utils import errors
from app.utils.naming import Mint, fresh_name
from app.utils.settings import _int_env


def test_fresh_name():
    assert fresh_name("T", {"R", "S"}) == "T"
    assert fresh_name("T", {"T", "T_1"}) == "T_2"


def test_mint_is_monotone():
    mint = Mint()
    first, second = mint.constant("h", "w"), mint.constant("D", "u")
    assert (first.name, first.tag, first.serial) == ("h1", "w", 1)
    assert (second.name, second.serial) == ("D2", 2)


@pytest.mark.parametrize(
    "error, code",
    [
        (errors.ParseError("x", line=3), 1),
        (errors.UsageError("x"), 1),
        (errors.SelfJoinError("x"), 2),
        (errors.InconsistentConsistentRelation("x"), 2),
        (errors.NotFOQuery("x"), 3),
        (errors.GBlockTooLarge("x"), 3),
    ],
)
def test_exit_codes(error, code):
    assert error.exit_code == code


def test_parse_error_detail_names_the_line():
    assert errors.ParseError("bad token", line=4).detail == "line 4: bad token"


def test_int_env(monkeypatch):
    monkeypatch.setenv("CQA_TEST_CAP", "12")
    assert _int_env("CQA_TEST_CAP", 1) == 12
    monkeypatch.setenv("CQA_TEST_CAP", " ")
    assert _int_env("CQA_TEST_CAP", 5) == 5
    monkeypatch.setenv("CQA_TEST_CAP", "lots")
    with pytest.raises(ValueError, match="CQA_TEST_CAP"):
        _int_env("CQA_TEST_CAP", 1)
