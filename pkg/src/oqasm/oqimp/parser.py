"""Recursive-descent parser for .qimp source files."""
from __future__ import annotations

import re
from fractions import Fraction

from .ast import (BASES, Assign, BinOp, BoolLit, Call, Dec, Decl, For, FunDef, If, Index, Inv,
                  Not, Num, Program, Type, Var, ArrayLit)


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int = 0):
        super().__init__(f"line {line}: {msg}")
        self.line = line
        self.col = col


KEYWORDS = {"Q", "C", "nat", "fixedp", "bool", "void", "for", "if", "else", "return",
            "inv", "true", "false"}
ASSIGN_OPS = ("<<<=", ">>>=", "+=", "-=", "*=", "/=", "%=", "^=", "=")

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>//[^\n]*) | (?P<block>/\*.*?\*/)
  | (?P<dec>\d+\.\d+) | (?P<num>\d+) | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><<<=|>>>=|\+\+|\+=|-=|\*=|/=|%=|\^=|==|!=|<=|>=|[-+*/%^<>=!(){}\[\];,])
""", re.VERBOSE | re.DOTALL)


def tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    line, i = 1, 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", line)
        kind = m.lastgroup
        tok = m.group()
        if kind == "ident" and tok in KEYWORDS:
            kind = "kw"
        if kind in ("dec", "num", "ident", "kw", "op"):
            out.append((kind, tok, line))
        line += tok.count("\n")
        i = m.end()
    out.append(("eof", "", line))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # token helpers
    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, value: str, k: int = 0) -> bool:
        kind, tok, _ = self.peek(k)
        return tok == value and kind in ("op", "kw")

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, tok, line = self.next()
        if tok != value or kind not in ("op", "kw"):
            raise ParseError(f"expected {value!r}, found {tok or 'end of file'!r}", line)
        return line

    def ident(self) -> str:
        kind, tok, line = self.next()
        if kind != "ident":
            raise ParseError(f"expected identifier, found {tok or 'end of file'!r}", line)
        return tok

    @property
    def line(self) -> int:
        return self.peek()[2]

    # declarations
    def at_type(self) -> bool:
        return self.at("Q") or self.at("C")

    def base_type(self) -> Type:
        _, mode, line = self.next()
        kind, base, _ = self.next()
        if base not in BASES:
            raise ParseError(f"expected a base type after {mode}, found {base!r}", line)
        return Type(base, mode)

    def array_suffix(self, t: Type) -> Type:
        if self.at("["):
            self.next()
            kind, tok, line = self.next()
            if kind != "num":
                raise ParseError("array length must be a number", line)
            self.expect("]")
            return Type(t.base, t.mode, int(tok))
        return t

    def program(self) -> Program:
        prog = Program()
        while self.peek()[0] != "eof":
            line = self.line
            if self.at("void"):
                self.next()
                prog.functions.append(self.fundef(None, line))
                continue
            if not self.at_type():
                raise ParseError(f"expected a declaration, found {self.peek()[1]!r}", line)
            t = self.array_suffix(self.base_type())
            if self.peek(1)[1] == "(":
                prog.functions.append(self.fundef(t, line))
            else:
                prog.globals.append(self.decl_rest(t, line))
                self.expect(";")
        return prog

    def decl_rest(self, t: Type, line: int) -> Decl:
        name = self.ident()
        t = self.array_suffix(t)
        init = None
        if self.at("="):
            self.next()
            init = self.expr()
        return Decl(t, name, init, line)

    def fundef(self, ret, line: int) -> FunDef:
        name = self.ident()
        self.expect("(")
        params = []
        while not self.at(")"):
            if params:
                self.expect(",")
            if not self.at_type():
                raise ParseError("expected a parameter type", self.line)
            t = self.base_type()
            params.append((t, self.ident()))
        self.expect(")")
        self.expect("{")
        body, result = [], None
        while not self.at("}"):
            if self.at("return"):
                self.next()
                if not self.at(";"):
                    result = self.return_value()
                self.expect(";")
                if not self.at("}"):
                    raise ParseError("return must be the last statement", self.line)
                break
            body.append(self.statement())
        self.expect("}")
        return FunDef(ret, name, params, body, result, line)

    def return_value(self):
        if self.at("["):
            line = self.line
            self.next()
            items = [self.expr()]
            while self.at(","):
                self.next()
                items.append(self.expr())
            self.expect("]")
            return ArrayLit(tuple(items), line)
        return self.expr()

    # statements
    def block(self) -> list:
        if self.at("{"):
            self.next()
            out = []
            while not self.at("}"):
                out.append(self.statement())
            self.next()
            return out
        return [self.statement()]

    def statement(self):
        line = self.line
        if self.at_type():
            d = self.decl_rest(self.base_type(), line)
            self.expect(";")
            return d
        if self.at("inv"):
            self.next()
            self.expect("(")
            target = self.lvalue()
            self.expect(")")
            self.expect(";")
            return Inv(target, line)
        if self.at("for"):
            self.next()
            self.expect("(")
            if self.at_type():
                init = self.decl_rest(self.base_type(), self.line)
            else:
                init = self.simple()
            self.expect(";")
            cond = self.expr()
            self.expect(";")
            step = self.simple()
            self.expect(")")
            return For(init, cond, step, self.block(), line)
        if self.at("if"):
            self.next()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            orelse = []
            if self.at("else"):
                self.next()
                orelse = self.block()
            return If(cond, then, orelse, line)
        if self.at("{"):
            raise ParseError("nested blocks are only allowed after for/if/else", line)
        s = self.simple()
        self.expect(";")
        return s

    def simple(self) -> Assign:
        line = self.line
        target = self.lvalue()
        if self.at("++"):
            self.next()
            return Assign(target, "+=", Num(1, line), line)
        kind, tok, l2 = self.next()
        if tok not in ASSIGN_OPS or kind != "op":
            raise ParseError(f"expected an assignment operator, found {tok!r}", l2)
        return Assign(target, tok, self.expr(), line)

    def lvalue(self):
        line = self.line
        name = self.ident()
        if self.at("["):
            self.next()
            idx = self.expr()
            self.expect("]")
            return Index(name, idx, line)
        return Var(name, line)

    # expressions: comparisons < ^ < additive < multiplicative < unary
    def expr(self):
        left = self.xor()
        if self.peek()[1] in ("<", "<=", ">", ">=", "==", "!="):
            _, op, line = self.next()
            left = BinOp(op, left, self.xor(), line)
            if self.peek()[1] in ("<", "<=", ">", ">=", "==", "!="):
                raise ParseError("comparisons do not chain", self.line)
        return left

    def xor(self):
        left = self.additive()
        while self.at("^"):
            line = self.expect("^")
            left = BinOp("^", left, self.additive(), line)
        return left

    def additive(self):
        left = self.term()
        while self.at("+") or self.at("-"):
            _, op, line = self.next()
            left = BinOp(op, left, self.term(), line)
        return left

    def term(self):
        left = self.unary()
        while self.at("*") or self.at("/") or self.at("%"):
            _, op, line = self.next()
            left = BinOp(op, left, self.unary(), line)
        return left

    def unary(self):
        if self.at("!"):
            line = self.expect("!")
            return Not(self.unary(), line)
        return self.primary()

    def primary(self):
        kind, tok, line = self.next()
        if kind == "num":
            return Num(int(tok), line)
        if kind == "dec":
            return Dec(Fraction(tok), line)
        if tok in ("true", "false") and kind == "kw":
            return BoolLit(tok == "true", line)
        if tok == "(" and kind == "op":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "ident" or (kind == "kw" and tok in ("fixedp", "nat") and self.at("(")):
            if self.at("("):
                self.next()
                args = []
                while not self.at(")"):
                    if args:
                        self.expect(",")
                    args.append(self.expr())
                self.next()
                return Call(tok, tuple(args), line)
            if self.at("["):
                self.next()
                idx = self.expr()
                self.expect("]")
                return Index(tok, idx, line)
            return Var(tok, line)
        raise ParseError(f"unexpected {tok or 'end of file'!r} in expression", line)


def parse(text: str) -> Program:
    p = _Parser(text)
    prog = p.program()
    if not prog.functions:
        raise ParseError("a program needs at least one function", p.line)
    return prog


def parse_file(path) -> Program:
    with open(path, encoding="utf-8") as f:
        return parse(f.read())
