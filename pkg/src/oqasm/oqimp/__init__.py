"""OQIMP: a small imperative language compiled to OQASM."""
from .ast import Program, Type
from .checker import InvError, OqimpTypeError, Summary, check_inv, typecheck_program
from .compiler import FLAGS, CompileError, Compiled, Compiler, compile_program
from .interp import Result, interpret
from .parser import ParseError, parse, parse_file
from .values import OqimpRuntimeError

__all__ = ["Program", "Type", "InvError", "OqimpTypeError", "Summary", "check_inv",
           "typecheck_program", "FLAGS", "CompileError", "Compiled", "Compiler",
           "compile_program", "Result", "interpret", "ParseError", "parse", "parse_file",
           "OqimpRuntimeError"]
