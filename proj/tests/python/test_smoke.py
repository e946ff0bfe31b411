import json
import os
from pathlib import Path

import pytest

import abi_engine

DATA = Path(os.environ.get("ABI_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def load(name):
    return json.loads((DATA / name).read_text())["problems"][0]


@pytest.fixture
def sunk_cost():
    return load("sunk_cost.json")


def test_classify_flags_continuing_the_project(sunk_cost):
    assert abi_engine.classify(sunk_cost, "alt2")["risk_seeking_for_losses"] is True
    assert abi_engine.classify(sunk_cost, "alt1")["risk_seeking_for_losses"] is False


def test_classify_sure_loss():
    problem = load("sure_loss.json")
    assert abi_engine.classify(problem, "option2")["risk_seeking_for_losses"] is True
    assert abi_engine.classify(problem, "option1", mode="strict")["risk_seeking_for_losses"] is False


def test_expected_values_are_exact(sunk_cost):
    ev = abi_engine.expected_values(sunk_cost)
    assert ev["alt1"] == {"amount_minor": "-20000000", "currency": "BRL"}
    assert ev["alt2"] == {"amount_minor": "-22500000", "currency": "BRL"}


def test_decision_weights():
    assert abi_engine.decision_weight("90") == "77.5"
    assert abi_engine.decision_weight(100) == "100"
    with pytest.raises(abi_engine.AbiError, match="OutOfTableRange"):
        abi_engine.decision_weight("49")


def test_assessment_and_alert(sunk_cost):
    assessment = abi_engine.assess(sunk_cost, "alt2")
    assert assessment["unbiased_best_alternative_id"] == "alt1"
    rendered = abi_engine.alert(sunk_cost, "alt2", locale="pt-BR")
    assert rendered["locale"] == "pt-BR"
    assert not rendered["locale_fallback"]
    assert "LOSING NOTHING" in rendered["text"]["part2"]
    row = rendered["content"]["part2"]["decision_weight_row"]
    assert (row["probability_pct"], row["weight"]) == ("90", "77.5")


def test_invalid_problem_raises(sunk_cost):
    sunk_cost["alternatives"][1]["outcomes"][0]["probability_pct"] = "80"
    with pytest.raises(abi_engine.AbiError, match="ValidationError"):
        abi_engine.classify(sunk_cost, "alt2")


def test_statistics():
    pairs = [(0, 0)] * 93 + [(0, 1)] * 8
    result = abi_engine.wilcoxon(pairs, "greater")
    assert result["exact"] and result["n_effective"] == 8
    assert result["p_value"] == pytest.approx(0.00390625, abs=1e-9)
    mw = abi_engine.mann_whitney([4, 5, 6], [1, 2, 3], "greater")
    assert mw["statistic"] == 9 and mw["p_value"] == pytest.approx(0.05)
    chi = abi_engine.chi_square([[10, 20], [20, 10]])
    assert chi["degrees_of_freedom"] == 1
    assert chi["statistic"] == pytest.approx(20 / 3)


def test_service_session_round_trip(sunk_cost, tmp_path):
    store = tmp_path / "history.jsonl"
    service = abi_engine.Service(store)
    assert service.create_problem(sunk_cost)[0] == 201
    status, session = service.create_session("participant-1", "sunk-cost")
    assert status == 201
    sid = session["session_id"]
    assert service.choose(sid, "alt2")[1]["state"] == "awaiting_pre_ratings"
    status, rated = service.rate(sid, {"alt1": 4, "alt2": 8})
    assert status == 200 and "alert" in rated
    service.acknowledge(sid)
    service.agree(sid, 4, 5)
    service.rate(sid, {"alt1": 9, "alt2": 3})
    assert service.revise(sid, "alt1")[1]["state"] == "completed"
    assert service.get_session("session-99")[0] == 404

    exported = service.export_history()
    assert abi_engine.summarize(exported)["awareness_pairs"] == [[0, 1]]
    tables = abi_engine.project(exported)
    assert len(tables["awareness_measurement"]) == 2

    reopened = abi_engine.Service(store)
    assert reopened.get_session(sid)[1]["state"] == "completed"
    assert reopened.report()["awareness_pairs"] == [[0, 1]]
