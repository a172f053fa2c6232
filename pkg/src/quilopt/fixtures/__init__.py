"""Bundled workload programs used by the experiment harness and tests."""

import json
from importlib import resources

from quilopt import ir

WORKLOADS = ("teleportation", "rus", "msd", "ipe")


def fixture_text(name: str) -> str:
    return (resources.files(__name__) / f"{name}.quil").read_text()


def fixture_program(name: str) -> ir.Program:
    return ir.parse(fixture_text(name))


def expected_metrics() -> dict:
    """The shipped baseline metrics report for every workload."""
    raw = (resources.files(__name__) / "expected_metrics.json").read_text()
    return json.loads(raw)
