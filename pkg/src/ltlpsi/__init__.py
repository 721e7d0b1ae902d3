"""Multi-agent task synthesis from LTL formulas with agent bindings."""
from .formula import parse_task, rewrite_atomic, to_text, zeta
from .buchi import BuchiAutomaton, EdgeLabel, translate

__all__ = [
    "BuchiAutomaton",
    "EdgeLabel",
    "parse_task",
    "rewrite_atomic",
    "to_text",
    "translate",
    "zeta",
]
__version__ = "0.1.0"
