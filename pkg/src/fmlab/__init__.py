"""Readonly references with runtime seals.

F<: with mutable records, a ``readonly`` type operator and ``seal``: a
parser, type normalizer, subtyping engine with a declarative oracle, a
bidirectional checker, a small-step store machine and a harness that checks
the safety properties on concrete runs.
"""

from .errors import Diagnostic, FmError, ParseError, SubtypeFuelExhausted, TypeCheckError
from .harness import crest, diff_run, erased_run, monitor_run
from .machine import MachineConfig, MachineRules, evaluate, step
from .parser import parse_program, parse_term, parse_type, pretty_term, pretty_type
from .syntax import erase_seals, is_value, seal_count, seal_leq, store_leq
from .typesys import EMPTY, TypeContext, is_normal, is_readonly_type, nf, subtype, typecheck

__version__ = "0.1.0"

__all__ = [
    "Diagnostic", "EMPTY", "FmError", "MachineConfig", "MachineRules", "ParseError",
    "SubtypeFuelExhausted", "TypeCheckError", "TypeContext", "crest", "diff_run",
    "erase_seals", "erased_run", "evaluate", "is_normal", "is_readonly_type", "is_value",
    "monitor_run", "nf", "parse_program", "parse_term", "parse_type", "pretty_term",
    "pretty_type", "seal_count", "seal_leq", "step", "store_leq", "subtype", "typecheck",
]
