"""Termination and memory-safety analysis for a small LLVM-like IR over singly-linked lists."""
from .analysis import Report, analyze
from .ir import ParseError, Program, parse_program
from .ranking import MEMORY_UNSAFE, TERMINATING, UNKNOWN
from .seg import Limits

__all__ = ["Report", "analyze", "ParseError", "Program", "parse_program",
           "MEMORY_UNSAFE", "TERMINATING", "UNKNOWN", "Limits"]
__version__ = "0.1.0"
