"""Structured category labels.

A :class:`Symbol` is a base label plus an ordered stack of annotation marks.
Transforms never glue strings together; they push marks, and the canonical
text form is derived from the marks.  The text form is injective, so reading
it back recovers the exact symbol.

Mark syntax (each mark is appended after the base, in the order applied)::

    NP-DT-JJ        DelayedSiblings: NP having seen DT, JJ
    DT+JJ           LeftBundle: a left-grouped run of siblings (empty base)
    S/NP            Slash: S having seen the left corner NP
    NP^S            ParentMark
    NP~S            LcaMark (left-corner ancestor)
    PP@NP           AnnounceMark: PP node announcing its parent NP

Separator characters and the escape character inside labels are written with
a backslash in front of them.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

SEPARATORS = "-+/^~@"
ESCAPE = "\\"

DELAYED = "-"
BUNDLE = "+"
SLASH = "/"
PARENT = "^"
LCA = "~"
ANNOUNCE = "@"


class SymbolError(ValueError):
    """Malformed symbol text or an impossible mark stack."""


@dataclass(frozen=True)
class DelayedSiblings:
    labels: tuple["Symbol", ...]


@dataclass(frozen=True)
class LeftBundle:
    labels: tuple["Symbol", ...]


@dataclass(frozen=True)
class Slash:
    """The owning symbol, having already seen ``seen`` as its left corner."""

    seen: "Symbol"


@dataclass(frozen=True)
class ParentMark:
    label: str


@dataclass(frozen=True)
class LcaMark:
    label: str


@dataclass(frozen=True)
class AnnounceMark:
    label: "Symbol"


Mark = Union[DelayedSiblings, LeftBundle, Slash, ParentMark, LcaMark, AnnounceMark]

# marks that carry tree structure (as opposed to plain label refinements)
STRUCTURAL = (DelayedSiblings, LeftBundle, Slash)


@dataclass(frozen=True)
class Symbol:
    """A category label.

    Whether a symbol is a terminal is decided by where it occurs (tree leaf,
    grammar terminal set), not by the symbol itself.  Terminals never carry
    marks.
    """

    base: str
    marks: tuple = ()

    def __post_init__(self):
        for i, mark in enumerate(self.marks):
            if isinstance(mark, LeftBundle):
                if i != 0 or self.base:
                    raise SymbolError("a left bundle must be the first mark on an empty base")
                if len(mark.labels) < 2:
                    raise SymbolError("a left bundle groups at least two labels")
            if isinstance(mark, DelayedSiblings):
                if not mark.labels:
                    raise SymbolError("empty delayed-sibling list")
                if i and isinstance(self.marks[i - 1], DelayedSiblings):
                    raise SymbolError("adjacent delayed-sibling marks are ambiguous")

    def push(self, mark: Mark) -> "Symbol":
        return Symbol(self.base, self.marks + (mark,))

    def pop(self) -> "Symbol":
        """The symbol without its last mark."""
        if not self.marks:
            raise SymbolError(f"{self} has no marks")
        return Symbol(self.base, self.marks[:-1])

    @property
    def last(self):
        return self.marks[-1] if self.marks else None

    @property
    def plain(self) -> bool:
        return not self.marks

    def strip(self, *kinds) -> "Symbol":
        """Remove every mark of the given kinds, here and inside payloads."""
        marks = []
        for mark in self.marks:
            if isinstance(mark, kinds):
                continue
            if isinstance(mark, DelayedSiblings):
                mark = DelayedSiblings(tuple(s.strip(*kinds) for s in mark.labels))
            elif isinstance(mark, LeftBundle):
                mark = LeftBundle(tuple(s.strip(*kinds) for s in mark.labels))
            elif isinstance(mark, Slash):
                mark = Slash(mark.seen.strip(*kinds))
            elif isinstance(mark, AnnounceMark):
                mark = AnnounceMark(mark.label.strip(*kinds))
            if marks and isinstance(mark, DelayedSiblings) and isinstance(marks[-1], DelayedSiblings):
                # cannot arise from a valid pipeline
                raise SymbolError(f"stripping {kinds} from {self} merges delayed-sibling marks")
            marks.append(mark)
        return Symbol(self.base, tuple(marks))

    def __str__(self):
        return serialize(self)

    def __repr__(self):
        return f"Symbol({serialize(self)!r})"

    def __lt__(self, other):
        return serialize(self) < serialize(other)


def escape(text: str) -> str:
    out = []
    for ch in text:
        if ch == ESCAPE or ch in SEPARATORS:
            out.append(ESCAPE)
        out.append(ch)
    return "".join(out)


def unescape(text: str) -> str:
    out = []
    it = iter(text)
    for ch in it:
        if ch == ESCAPE:
            try:
                ch = next(it)
            except StopIteration:
                raise SymbolError(f"dangling escape in {text!r}") from None
        out.append(ch)
    return "".join(out)


def serialize(sym: Symbol) -> str:
    parts = [escape(sym.base)]
    for mark in sym.marks:
        if isinstance(mark, LeftBundle):
            parts.append(BUNDLE.join(escape(serialize(s)) for s in mark.labels))
        elif isinstance(mark, DelayedSiblings):
            parts.extend(DELAYED + escape(serialize(s)) for s in mark.labels)
        elif isinstance(mark, Slash):
            parts.append(SLASH + escape(serialize(mark.seen)))
        elif isinstance(mark, ParentMark):
            parts.append(PARENT + escape(mark.label))
        elif isinstance(mark, LcaMark):
            parts.append(LCA + escape(mark.label))
        elif isinstance(mark, AnnounceMark):
            parts.append(ANNOUNCE + escape(serialize(mark.label)))
        else:
            raise SymbolError(f"unknown mark {mark!r}")
    return "".join(parts)


def _split(text: str) -> list[tuple[str, str]]:
    """Split at unescaped separators; each piece keeps its escapes."""
    pieces = []
    sep, buf = "", []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == ESCAPE:
            buf.append(text[i:i + 2])
            i += 2
            continue
        if ch in SEPARATORS:
            pieces.append((sep, "".join(buf)))
            sep, buf = ch, []
        else:
            buf.append(ch)
        i += 1
    pieces.append((sep, "".join(buf)))
    return pieces


def parse_symbol(text: str) -> Symbol:
    """Inverse of :func:`serialize`."""
    pieces = _split(text)
    _, head = pieces[0]
    rest = pieces[1:]
    marks: list = []
    base = unescape(head)
    i = 0
    if rest and rest[0][0] == BUNDLE:
        labels = [parse_symbol(unescape(head))]
        while i < len(rest) and rest[i][0] == BUNDLE:
            labels.append(parse_symbol(unescape(rest[i][1])))
            i += 1
        base = ""
        marks.append(LeftBundle(tuple(labels)))
    while i < len(rest):
        sep, payload = rest[i]
        if sep == DELAYED:
            labels = []
            while i < len(rest) and rest[i][0] == DELAYED:
                labels.append(parse_symbol(unescape(rest[i][1])))
                i += 1
            marks.append(DelayedSiblings(tuple(labels)))
            continue
        if sep == SLASH:
            marks.append(Slash(parse_symbol(unescape(payload))))
        elif sep == PARENT:
            marks.append(ParentMark(unescape(payload)))
        elif sep == LCA:
            marks.append(LcaMark(unescape(payload)))
        elif sep == ANNOUNCE:
            marks.append(AnnounceMark(parse_symbol(unescape(payload))))
        else:
            raise SymbolError(f"misplaced {sep!r} in {text!r}")
        i += 1
    return Symbol(base, tuple(marks))
