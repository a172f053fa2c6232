"""quilopt: an optimizing mid-end for hybrid quantum-classical Quil programs."""

from quilopt.ir import (
    DeviceClass,
    Program,
    ParseError,
    ValidationError,
    device_class,
    emit,
    parse,
)
from quilopt.graphs import Cfg, build_ddgs
from quilopt.metrics import report
from quilopt.oracle import equivalent, run
from quilopt.transforms import (
    PASS_PAIRS,
    apply_pass,
    apply_passes,
    constant_fold,
    dead_code_elim,
    latest_possible_quantum,
    reorder_instructions,
)
from quilopt.harness import run_experiment

__version__ = "0.1.0"

__all__ = [
    "DeviceClass",
    "Program",
    "ParseError",
    "ValidationError",
    "device_class",
    "emit",
    "parse",
    "Cfg",
    "build_ddgs",
    "report",
    "equivalent",
    "run",
    "PASS_PAIRS",
    "apply_pass",
    "apply_passes",
    "constant_fold",
    "dead_code_elim",
    "latest_possible_quantum",
    "reorder_instructions",
    "run_experiment",
    "__version__",
]
