import pytest

from app.db.database import load_query
from app.main import main, run
from app.models.reports import CommandReport, RunConfig
from app.services.classify import Classification, QueryClass, replay_evidence
from app.utils.errors import NotFOQuery

from conftest import DEMO


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out.strip(), err.strip()


def test_classify(capsys):
    code, out, _ = _run(capsys, "classify", DEMO / "hard.cq")
    assert code == 0
    assert out.splitlines() == ["CONP-COMPLETE", "strong 2-cycle: R1 <-> S1"]


def test_classify_json_round_trips(capsys):
    code, out, _ = _run(capsys, "classify", DEMO / "swap.cq", "--json")
    assert code == 0
    assert '"class":"PTIME_NOT_FO"' in out
    report = CommandReport.model_validate_json(out)
    verdict = Classification(QueryClass(report.query_class), tuple(report.evidence))
    assert replay_evidence(load_query(DEMO / "swap.cq"), verdict)


@pytest.mark.parametrize("engine", ["auto", "fo", "ptime", "oracle"])
def test_certain_engines_agree(capsys, engine):
    code, out, _ = _run(capsys, "certain", DEMO / "fo.cq", DEMO / "fo.db", "--engine", engine)
    assert (code, out) == (0, "true")


def test_certain_auto_picks_ptime(capsys):
    code, out, _ = _run(capsys, "certain", DEMO / "triangle.cq", DEMO / "triangle.db", "--json")
    report = CommandReport.model_validate_json(out)
    assert report.stats["engine"] == "ptime"
    assert report.result is True


def test_trace_streams_stages(capsys):
    code, out, _ = _run(capsys, "certain", DEMO / "swap.cq", DEMO / "swap.db", "--trace")
    lines = out.splitlines()
    assert code == 0
    assert lines[-1] == "false"
    assert any(line.strip().startswith("stage=dissolve") for line in lines)


def test_fo_engine_on_cyclic_query(capsys):
    code, out, err = _run(capsys, "certain", DEMO / "swap.cq", DEMO / "swap.db", "--engine", "fo")
    assert code == 3
    assert out == ""
    assert err.startswith("error:")


def test_rewrite(capsys):
    code, out, _ = _run(capsys, "rewrite", DEMO / "fo.cq")
    assert code == 0 and out.startswith("(exists (x y)")
    code, _, err = _run(capsys, "rewrite", DEMO / "swap.cq")
    assert code == 3 and "cyclic" in err


def test_oracle_flags(capsys):
    assert _run(capsys, "oracle", DEMO / "triangle.cq", DEMO / "triangle.db", "--count")[:2] == (0, "64")
    code, out, _ = _run(capsys, "oracle", DEMO / "swap.cq", DEMO / "swap.db", "--witness")
    assert out.splitlines()[0] == "false"
    assert "R0(1, 'b')" in out
    code, out, err = _run(capsys, "oracle", DEMO / "triangle.cq", DEMO / "triangle.db", "--oracle-cap", "10")
    assert code == 3 and "more than 10 repairs" in err


def test_explain(capsys):
    code, out, _ = _run(capsys, "explain", DEMO / "closure.cq")
    assert code == 0
    assert "  R: K = {x, u, v}  K+ = {x, y, z, u, v}" in out
    assert "  R -> T weak  witness R -y- S -z- T" in out
    assert "    {x} -> z: R, S" in out
    assert out.splitlines()[-1] == "class: PTIME"


def test_graphs(capsys):
    code, out, _ = _run(capsys, "attack-graph", DEMO / "hard.cq", "--dot")
    assert code == 0 and out.startswith("digraph attack {")
    code, out, _ = _run(capsys, "attack-graph", DEMO / "hard.cq")
    assert "R1 -> S1 strong  (R1 -y- S1)" in out
    assert "cycles: strong_cycle" in out
    code, out, _ = _run(capsys, "markov", DEMO / "swap.cq")
    assert out.splitlines() == ["x -> y", "y -> x"]


def test_fuzz(capsys):
    code, out, _ = _run(capsys, "fuzz", "--seed", "1", "--cases", "15")
    assert code == 0
    assert out.startswith("seed=1 cases=15 ")
    assert out.endswith("failures=0")


def test_errors_map_to_exit_codes(capsys, tmp_path):
    bad = tmp_path / "bad.cq"
    bad.write_text("R(x | y\n")
    assert _run(capsys, "classify", bad)[0] == 1
    join = tmp_path / "join.cq"
    join.write_text("R(x | y)\nR(y | x)\n")
    assert _run(capsys, "classify", join)[0] == 2
    assert _run(capsys, "classify", tmp_path / "missing.cq")[0] == 1
    assert _run(capsys, "classify")[0] == 1
    assert _run(capsys, "certain", DEMO / "swap.cq", DEMO / "swap.db", "--engine", "magic")[0] == 1
    inconsistent = tmp_path / "t.db"
    inconsistent.write_text("T(a, 1)\nT(a, 2)\n")
    query = tmp_path / "t.cq"
    query.write_text("consistent T(x | y)\n")
    assert _run(capsys, "oracle", query, inconsistent)[0] == 2


def test_run_takes_a_config():
    outcome = run(RunConfig(command="classify", query=str(DEMO / "fo.cq")))
    assert outcome.text.splitlines()[0] == "FO"
    with pytest.raises(NotFOQuery):
        run(RunConfig(command="rewrite", query=str(DEMO / "swap.cq")))
