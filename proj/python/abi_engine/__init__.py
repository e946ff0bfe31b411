"""Python bindings for the awareness-of-bias engine.

Problems are plain dicts in the same shape the HTTP API accepts. Results come
back as dicts; exact amounts and weights are decimal strings.
"""

import json

from . import _core
from ._core import AbiError

__all__ = [
    "AbiError",
    "Service",
    "alert",
    "assess",
    "chi_square",
    "classify",
    "decision_weight",
    "expected_values",
    "mann_whitney",
    "project",
    "summarize",
    "wilcoxon",
]


def classify(problem, alternative_id, mode="canonical"):
    """Rule verdict and predicate trace for choosing `alternative_id`."""
    return json.loads(_core.classify(json.dumps(problem), alternative_id, mode))


def assess(problem, alternative_id, mode="canonical"):
    """Full risk assessment: verdict, fourfold cell and unbiased best option."""
    return json.loads(_core.assess(json.dumps(problem), alternative_id, mode))


def expected_values(problem):
    """Exact expected value per alternative, keyed by alternative id."""
    return json.loads(_core.expected_values(json.dumps(problem)))


def decision_weight(probability_pct):
    """Loss-domain decision weight for a probability in [50, 100] percent."""
    return _core.decision_weight(str(probability_pct))


def alert(problem, alternative_id, mode="canonical", locale="en"):
    """Rendered two-part alert for a flagged choice."""
    return json.loads(_core.alert(json.dumps(problem), alternative_id, mode, locale))


def wilcoxon(pairs, tail="two_sided"):
    return _core.wilcoxon([tuple(p) for p in pairs], tail)


def mann_whitney(a, b, tail="two_sided"):
    return _core.mann_whitney(list(a), list(b), tail)


def chi_square(table):
    return _core.chi_square([list(row) for row in table])


def summarize(jsonl):
    """Awareness report for an exported history."""
    return json.loads(_core.summarize(jsonl))


def project(jsonl):
    """Relational tables projected from an exported history."""
    return json.loads(_core.project(jsonl))


class Service:
    """In-process API. Each call returns (status, body dict)."""

    def __init__(self, store="", flow="experiment", mode="canonical", locale="en"):
        self._service = _core.Service(str(store), flow, mode, locale)

    def _call(self, operation, target="", body=None):
        status, text = self._service.call(operation, target, json.dumps(body or {}))
        return status, json.loads(text)

    def create_problem(self, problem):
        return self._call("create_problem", body=problem)

    def get_problem(self, problem_id):
        return self._call("get_problem", problem_id)

    def create_session(self, agent_id, problem_id, **extra):
        return self._call("create_session", body={"agent_id": agent_id, "problem_id": problem_id, **extra})

    def get_session(self, session_id):
        return self._call("get_session", session_id)

    def choose(self, session_id, alternative_id):
        return self._call("choice", session_id, {"alternative_id": alternative_id})

    def rate(self, session_id, ratings):
        return self._call("ratings", session_id, {"ratings": ratings})

    def acknowledge(self, session_id):
        return self._call("acknowledge", session_id)

    def agree(self, session_id, q1, q2):
        return self._call("agreement", session_id, {"q1": q1, "q2": q2})

    def revise(self, session_id, alternative_id=None):
        body = {"confirm": True} if alternative_id is None else {"alternative_id": alternative_id}
        return self._call("revision", session_id, body)

    def report(self):
        return self._call("report")[1]

    def export_history(self):
        return self._service.export_history()
