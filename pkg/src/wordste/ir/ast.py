"""Parsed (unelaborated) syntax of WDL designs and trajectory specs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Loc:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NOLOC = Loc(0, 0)


# -- expressions --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Num:
    value: int
    size: Optional["Node"] = None  # None: unsized, width from context
    text: str = ""
    loc: Loc = NOLOC


@dataclass(frozen=True, eq=False)
class Name:
    ident: str
    loc: Loc = NOLOC


@dataclass(frozen=True, eq=False)
class Index:
    """``base[index]``: bit select of a word or element read of an array."""

    base: "Node"
    index: "Node"
    loc: Loc = NOLOC


@dataclass(frozen=True, eq=False)
class Slice:
    base: "Node"
    hi: "Node"
    lo: "Node"
    loc: Loc = NOLOC


@dataclass(frozen=True, eq=False)
class Unary:
    op: str
    arg: "Node"
    loc: Loc = NOLOC


@dataclass(frozen=True, eq=False)
class Binary:
    op: str
    left: "Node"
    right: "Node"
    loc: Loc = NOLOC


@dataclass(frozen=True, eq=False)
class Cond:
    cond: "Node"
    then: "Node"
    other: "Node"
    loc: Loc = NOLOC


@dataclass(frozen=True, eq=False)
class Concat:
    parts: tuple
    loc: Loc = NOLOC


@dataclass(frozen=True, eq=False)
class Call:
    fn: str
    args: tuple
    loc: Loc = NOLOC


@dataclass(frozen=True, eq=False)
class BoolLit:
    value: bool
    loc: Loc = NOLOC


Node = Union[Num, Name, Index, Slice, Unary, Binary, Cond, Concat, Call, BoolLit]


# -- declarations and statements ----------------------------------------------


@dataclass(eq=False)
class Param:
    name: str
    value: Node
    loc: Loc = NOLOC


@dataclass(eq=False)
class WordDecl:
    kind: str  # input | output | wire | reg
    name: str
    width: Optional[Node]  # None only for "output name;" marking an existing word
    init: Optional[Node] = None
    loc: Loc = NOLOC


@dataclass(eq=False)
class ArrayDecl:
    name: str
    index_widths: tuple  # one entry per dimension
    elem_width: Node
    uninit: bool = False
    loc: Loc = NOLOC


@dataclass(eq=False)
class Assign:
    lhs: Node  # Name, Slice or Index chain
    rhs: Node
    seq: bool
    loc: Loc = NOLOC


@dataclass(eq=False)
class If:
    cond: Node
    then: list
    other: list = field(default_factory=list)
    loc: Loc = NOLOC


Stmt = Union[Assign, If]


@dataclass(eq=False)
class Design:
    name: str
    items: list  # Param | WordDecl | ArrayDecl | Assign | If, in source order

    @property
    def params(self) -> list:
        return [i for i in self.items if isinstance(i, Param)]

    @property
    def words(self) -> list:
        return [i for i in self.items if isinstance(i, WordDecl)]

    @property
    def inputs(self) -> list:
        return [w for w in self.words if w.kind == "input"]

    @property
    def registers(self) -> list:
        return [w for w in self.words if w.kind == "reg"]

    @property
    def arrays(self) -> list:
        return [i for i in self.items if isinstance(i, ArrayDecl)]

    @property
    def statements(self) -> list:
        return [i for i in self.items if isinstance(i, (Assign, If))]


# -- trajectory specs ----------------------------------------------------------


@dataclass(eq=False)
class VarDecl:
    name: str
    width: Node
    loc: Loc = NOLOC


@dataclass(eq=False)
class TupleDecl:
    kind: str  # ant | cons
    guard: Node
    target: Node  # Name or Slice over a design word
    value: Node
    start: Node
    end: Node
    loc: Loc = NOLOC


@dataclass(eq=False)
class ConstrDecl:
    expr: Node
    loc: Loc = NOLOC


@dataclass(eq=False)
class SpecSource:
    items: list  # Param | VarDecl | ConstrDecl | TupleDecl | ModeDecl


@dataclass(eq=False)
class ModeDecl:
    mode: str  # report | assume
    loc: Loc = NOLOC
