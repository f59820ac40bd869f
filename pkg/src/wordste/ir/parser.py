"""Hand-written lexer and recursive-descent parser for WDL designs and specs.

Design grammar (``//`` and ``/* */`` comments)::

    design   := ['design' IDENT ';'] item*
    item     := 'param' IDENT '=' expr ';'
              | ('input' | 'wire' | 'output') decl (',' decl)* ';'
              | 'output' IDENT (',' IDENT)* ';'        // mark existing words
              | 'reg' decl ['=' expr] (',' decl ['=' expr])* ';'
              | 'array' IDENT ':' ('[' expr ']')+ expr ['uninit'] ';'
              | stmt
    decl     := IDENT ':' expr
    stmt     := lvalue ('=' | '<=') expr ';'
              | 'if' '(' expr ')' block ['else' (block | stmt)]
    block    := '{' stmt* '}' | stmt

Spec grammar::

    spec     := item*
    item     := 'param' IDENT '=' expr ';'
              | 'var' decl (',' decl)* ';'
              | 'constr' expr ';'
              | 'mode' ('report' | 'assume') ';'
              | ('ant' | 'cons') '(' expr ')' target '=' expr '@' when ';'
    target   := IDENT ['[' expr [':' expr] ']']
    when     := '[' expr ',' expr ')' | expr           // ``@ t`` is ``@ [t, t+1)``

Expression precedence, loosest first: ``?:``, ``||``, ``&&``, ``|``, ``^``,
``&``, ``== !=``, ``< <= > >=``, ``<< >>``, ``+ -``, ``* / %``, unary
``~ ! -``, postfix ``[i]`` / ``[hi:lo]``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import ast as A


class ParseError(ValueError):
    def __init__(self, msg: str, loc: A.Loc | None = None, source: str = ""):
        self.msg = msg
        self.loc = loc
        self.source = source
        where = f"{source}:" if source else ""
        where += f"{loc.line}:{loc.col}: " if loc else ""
        super().__init__(f"{where}{msg}")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | num | op | eof
    text: str
    loc: A.Loc


KEYWORDS = frozenset(
    "design param input output wire reg array uninit if else var constr mode ant cons true false".split()
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<lcomment>//[^\n]*)
  | (?P<bcomment>/\*.*?\*/)
  | (?P<badcomment>/\*)
  | (?P<num>\d+'[bBdDhH][0-9a-fA-F_]+ | 0[xX][0-9a-fA-F_]+ | 0[bB][01_]+ | \d[\d_]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<op><=|>=|==|!=|<<|>>|&&|\|\||[-+*/%&|^~!<>?:;,=()\[\]{}@])
    """,
    re.VERBOSE | re.DOTALL,
)


def tokenize(text: str, source: str = "") -> list[Token]:
    toks: list[Token] = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            loc = A.Loc(line, pos - line_start + 1)
            raise ParseError(f"unexpected character {text[pos]!r}", loc, source)
        kind = m.lastgroup
        chunk = m.group()
        loc = A.Loc(line, pos - line_start + 1)
        if kind == "badcomment":
            raise ParseError("unterminated comment", loc, source)
        if kind in ("num", "ident", "op"):
            toks.append(Token(kind, chunk, loc))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(Token("eof", "", A.Loc(line, pos - line_start + 1)))
    return toks


def parse_number(text: str) -> tuple[int, int | None]:
    """Return (value, width or None) for a numeric literal token."""
    t = text.replace("_", "")
    if "'" in t:
        size, rest = t.split("'", 1)
        base = {"b": 2, "d": 10, "h": 16}[rest[0].lower()]
        width = int(size)
        if width < 1:
            raise ValueError("sized literal needs width >= 1")
        return int(rest[1:], base), width
    if t[:2].lower() == "0x":
        return int(t[2:], 16), None
    if t[:2].lower() == "0b":
        return int(t[2:], 2), None
    return int(t), None


# binary operator precedence (higher binds tighter)
BINARY_PREC = {
    "||": 2,
    "&&": 3,
    "|": 4,
    "^": 5,
    "&": 6,
    "==": 7,
    "!=": 7,
    "<": 8,
    "<=": 8,
    ">": 8,
    ">=": 8,
    "<<": 9,
    ">>": 9,
    "+": 10,
    "-": 10,
    "*": 11,
    "/": 11,
    "%": 11,
}
COND_PREC = 1
UNARY_PREC = 12


class Parser:
    def __init__(self, text: str, source: str = ""):
        self.source = source
        self.toks = tokenize(text, source)
        self.i = 0

    # -- token helpers ---------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        got = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(f"{msg} (got {got})", tok.loc, self.source)

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text in texts

    def accept(self, text: str) -> Token | None:
        if self.at(text):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> Token:
        t = self.accept(text)
        if t is None:
            raise self.error(f"expected {text!r}")
        return t

    def ident(self) -> Token:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            raise self.error("expected identifier")
        self.i += 1
        return t

    # -- expressions -----------------------------------------------------------

    def expr(self, min_prec: int = 0) -> A.Node:
        left = self.unary()
        while True:
            t = self.tok
            if t.kind == "op" and t.text == "?" and min_prec <= COND_PREC:
                self.i += 1
                then = self.expr(COND_PREC)
                self.expect(":")
                other = self.expr(COND_PREC)
                left = A.Cond(left, then, other, t.loc)
                continue
            prec = BINARY_PREC.get(t.text) if t.kind == "op" else None
            if prec is None or prec < min_prec:
                return left
            self.i += 1
            right = self.expr(prec + 1)
            left = A.Binary(t.text, left, right, t.loc)

    def unary(self) -> A.Node:
        t = self.tok
        if t.kind == "op" and t.text in ("~", "!", "-"):
            self.i += 1
            return A.Unary(t.text, self.unary(), t.loc)
        return self.postfix(self.primary())

    def postfix(self, node: A.Node) -> A.Node:
        while self.at("["):
            t = self.expect("[")
            first = self.expr()
            if self.accept(":"):
                lo = self.expr()
                self.expect("]")
                node = A.Slice(node, first, lo, t.loc)
            else:
                self.expect("]")
                node = A.Index(node, first, t.loc)
        return node

    def primary(self) -> A.Node:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            try:
                value, width = parse_number(t.text)
            except (ValueError, KeyError):
                raise self.error("malformed number", t) from None
            size = None if width is None else A.Num(width, None, str(width), t.loc)
            return A.Num(value, size, t.text, t.loc)
        if t.kind == "ident":
            if t.text in ("true", "false"):
                self.i += 1
                return A.BoolLit(t.text == "true", t.loc)
            name = self.ident()
            if self.at("("):
                self.expect("(")
                args = [self.expr()]
                while self.accept(","):
                    args.append(self.expr())
                self.expect(")")
                return A.Call(name.text, tuple(args), name.loc)
            return A.Name(name.text, name.loc)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.at("{"):
            self.expect("{")
            parts = [self.expr()]
            while self.accept(","):
                parts.append(self.expr())
            self.expect("}")
            return A.Concat(tuple(parts), t.loc)
        raise self.error("expected expression")

    # -- designs ---------------------------------------------------------------

    def design(self, default_name: str = "design") -> A.Design:
        name = default_name
        if self.accept("design"):
            name = self.ident().text
            self.expect(";")
        items: list = []
        while self.tok.kind != "eof":
            items.extend(self.design_item())
        return A.Design(name, items)

    def design_item(self) -> list:
        t = self.tok
        if self.accept("param"):
            return [self.param(t)]
        if t.text in ("input", "wire", "output") and t.kind == "ident":
            self.i += 1
            if t.text == "output" and not self._decl_follows():
                names = [self.ident()]
                while self.accept(","):
                    names.append(self.ident())
                self.expect(";")
                return [A.WordDecl("output", n.text, None, None, n.loc) for n in names]
            out = [self.word_decl(t.text, allow_init=False)]
            while self.accept(","):
                out.append(self.word_decl(t.text, allow_init=False))
            self.expect(";")
            return out
        if self.accept("reg"):
            out = [self.word_decl("reg", allow_init=True)]
            while self.accept(","):
                out.append(self.word_decl("reg", allow_init=True))
            self.expect(";")
            return out
        if self.accept("array"):
            name = self.ident()
            self.expect(":")
            dims = []
            while self.accept("["):
                dims.append(self.expr())
                self.expect("]")
            if not dims:
                raise self.error("expected '[' index width ']'")
            elem = self.expr()
            uninit = bool(self.accept("uninit"))
            self.expect(";")
            return [A.ArrayDecl(name.text, tuple(dims), elem, uninit, name.loc)]
        return [self.stmt()]

    def _decl_follows(self) -> bool:
        nxt = self.toks[self.i + 1] if self.i + 1 < len(self.toks) else self.tok
        return nxt.kind == "op" and nxt.text == ":"

    def param(self, kw: Token) -> A.Param:
        name = self.ident()
        self.expect("=")
        value = self.expr()
        self.expect(";")
        return A.Param(name.text, value, name.loc)

    def word_decl(self, kind: str, allow_init: bool) -> A.WordDecl:
        name = self.ident()
        self.expect(":")
        width = self.expr(COND_PREC + 1)
        init = None
        if allow_init and self.accept("="):
            init = self.expr(COND_PREC + 1)
        return A.WordDecl(kind, name.text, width, init, name.loc)

    def stmt(self) -> A.Node:
        t = self.tok
        if self.accept("if"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            other: list = []
            if self.accept("else"):
                other = self.block()
            return A.If(cond, then, other, t.loc)
        if t.kind != "ident" or t.text in KEYWORDS:
            raise self.error("expected declaration or statement")
        lhs = self.postfix(A.Name(self.ident().text, t.loc))
        if self.accept("<="):
            seq = True
        elif self.accept("="):
            seq = False
        else:
            raise self.error("expected '=' or '<='")
        rhs = self.expr()
        self.expect(";")
        return A.Assign(lhs, rhs, seq, t.loc)

    def block(self) -> list:
        if self.accept("{"):
            out = []
            while not self.accept("}"):
                if self.tok.kind == "eof":
                    raise self.error("expected '}'")
                out.append(self.stmt())
            return out
        return [self.stmt()]

    # -- specs -------------------------------------------------------------------

    def spec(self) -> A.SpecSource:
        items: list = []
        while self.tok.kind != "eof":
            t = self.tok
            if self.accept("param"):
                items.append(self.param(t))
            elif self.accept("var"):
                while True:
                    name = self.ident()
                    self.expect(":")
                    items.append(A.VarDecl(name.text, self.expr(COND_PREC + 1), name.loc))
                    if not self.accept(","):
                        break
                self.expect(";")
            elif self.accept("constr"):
                items.append(A.ConstrDecl(self.expr(), t.loc))
                self.expect(";")
            elif self.accept("mode"):
                m = self.ident()
                if m.text not in ("report", "assume"):
                    raise self.error("expected 'report' or 'assume'", m)
                items.append(A.ModeDecl(m.text, t.loc))
                self.expect(";")
            elif t.text in ("ant", "cons") and t.kind == "ident":
                self.i += 1
                items.append(self.tuple_decl(t))
            else:
                raise self.error("expected 'var', 'constr', 'mode', 'param', 'ant' or 'cons'")
        return A.SpecSource(items)

    def tuple_decl(self, kw: Token) -> A.TupleDecl:
        self.expect("(")
        guard = self.expr()
        self.expect(")")
        name = self.ident()
        target: A.Node = A.Name(name.text, name.loc)
        if self.at("["):
            t = self.expect("[")
            hi = self.expr()
            if self.accept(":"):
                lo = self.expr()
                target = A.Slice(target, hi, lo, t.loc)
            else:
                target = A.Slice(target, hi, hi, t.loc)
            self.expect("]")
        self.expect("=")
        value = self.expr()
        self.expect("@")
        if self.accept("["):
            start = self.expr()
            self.expect(",")
            end = self.expr()
            self.expect(")")
        else:
            start = self.expr(UNARY_PREC)
            end = A.Binary("+", start, A.Num(1, None, "1", start.loc), start.loc)
        self.expect(";")
        return A.TupleDecl(kw.text, guard, target, value, start, end, kw.loc)


def parse_design(text: str, source: str = "", name: str | None = None) -> A.Design:
    default = name or (re.sub(r"\W", "_", source.rsplit("/", 1)[-1].split(".")[0]) if source else "design")
    return Parser(text, source).design(default or "design")


def parse_spec(text: str, source: str = "") -> A.SpecSource:
    return Parser(text, source).spec()


def parse_expr(text: str) -> A.Node:
    p = Parser(text)
    e = p.expr()
    if p.tok.kind != "eof":
        raise p.error("unexpected trailing input")
    return e
