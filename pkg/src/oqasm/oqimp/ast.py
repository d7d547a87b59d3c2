"""Syntax tree for the imperative oracle language."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

BASES = ("nat", "fixedp", "bool")
MODES = ("C", "Q")


@dataclass(frozen=True)
class Type:
    base: str
    mode: str
    length: int | None = None     # array length

    def __str__(self):
        s = f"{self.mode} {self.base}"
        return s + (f"[{self.length}]" if self.length is not None else "")

    def elem(self) -> "Type":
        return Type(self.base, self.mode)


def join(*modes: str) -> str:
    return "Q" if "Q" in modes else "C"


# expressions --------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: int
    line: int = 0


@dataclass(frozen=True)
class Dec:
    value: Fraction
    line: int = 0


@dataclass(frozen=True)
class BoolLit:
    value: bool
    line: int = 0


@dataclass(frozen=True)
class Var:
    name: str
    line: int = 0


@dataclass(frozen=True)
class Index:
    name: str
    index: object
    line: int = 0


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    line: int = 0


@dataclass(frozen=True)
class Not:
    arg: object
    line: int = 0


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    line: int = 0


@dataclass(frozen=True)
class ArrayLit:
    items: tuple
    line: int = 0


BUILTINS = ("even", "pow", "fact", "fixedp", "nat")
COMPARISONS = ("<", "<=", ">", ">=", "==", "!=")
ARITH = ("+", "-", "*", "/", "%", "^")


# statements ---------------------------------------------------------------

@dataclass
class Decl:
    type: Type
    name: str
    init: object = None
    line: int = 0


@dataclass
class Assign:
    target: object          # Var or Index
    op: str                 # "=", "+=", "-=", "*=", "/=", "%=", "^=", "<<<=", ">>>="
    expr: object
    line: int = 0


@dataclass
class Inv:
    target: object
    line: int = 0


@dataclass
class For:
    init: object            # Decl or Assign, C mode
    cond: object
    step: object            # Assign
    body: list
    line: int = 0


@dataclass
class If:
    cond: object
    then: list
    orelse: list
    line: int = 0


@dataclass
class FunDef:
    ret: Type | None        # None for void
    name: str
    params: list            # [(Type, name)]
    body: list
    result: object = None   # return expression
    line: int = 0


@dataclass
class Program:
    globals: list = field(default_factory=list)   # [Decl]
    functions: list = field(default_factory=list)

    @property
    def main(self) -> FunDef:
        return self.functions[-1]

    def function(self, name: str) -> FunDef | None:
        for f in self.functions:
            if f.name == name:
                return f
        return None


def lvalue_name(lv) -> str:
    return lv.name


def expr_vars(e) -> set[str]:
    """Variable names read by an expression (array reads count the array)."""
    out: set[str] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, Index):
            out.add(node.name)
            stack.append(node.index)
        elif isinstance(node, BinOp):
            stack += [node.left, node.right]
        elif isinstance(node, Not):
            stack.append(node.arg)
        elif isinstance(node, (Call, ArrayLit)):
            stack += list(node.args if isinstance(node, Call) else node.items)
    return out

