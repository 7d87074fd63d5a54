"""Reading, normalizing and writing bracketed parse trees."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .symbols import Symbol, parse_symbol, serialize

EPSILON_TOKEN = "-NONE-"
EPSILON = Symbol(EPSILON_TOKEN)

# functional tags and coindices: NP-SBJ-1, NP=2
TAG_DELIMITERS = "-="


class TreeParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class NormalizeError(ValueError):
    pass


@dataclass(frozen=True)
class Tree:
    """An ordered labelled tree; a node without children is a leaf."""

    label: Symbol
    children: tuple["Tree", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def is_epsilon(self) -> bool:
        return not self.children and self.label == EPSILON

    def __str__(self):
        return write_tree(self)

    def __repr__(self):
        return f"Tree({write_tree(self)!r})"


def leaf(label: str | Symbol) -> Tree:
    return Tree(label if isinstance(label, Symbol) else Symbol(label))


def node(label: str | Symbol, *children: Tree | str) -> Tree:
    """Build a tree; string children become leaves."""
    kids = tuple(leaf(c) if isinstance(c, str) else c for c in children)
    return Tree(label if isinstance(label, Symbol) else parse_symbol(label), kids)


EPSILON_LEAF = Tree(EPSILON)


@dataclass
class Corpus:
    trees: list[Tree] = field(default_factory=list)
    provenance: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.trees)

    def __iter__(self) -> Iterator[Tree]:
        return iter(self.trees)


_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")


def _tokens(text: str):
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        pos = m.end()
        if m.group(1):
            yield "(", m.start(1)
        elif m.group(2):
            yield ")", m.start(2)
        elif m.group(3):
            yield m.group(3), m.start(3)


def read_trees(text: str, raw: bool = False, source: str = "") -> Corpus:
    """Parse every bracketed tree in ``text``.

    With ``raw`` set, nonterminal labels are taken verbatim (Penn Treebank
    input such as ``NP-SBJ-1``); otherwise they are read in the canonical
    mark syntax written by :func:`write_tree`.  Leaves are always verbatim,
    except the reserved ``-NONE-`` leaf, which is the empty leaf.

    An outer bracket without a label, ``( (S ...) )``, is removed.
    """
    label_of = Symbol if raw else parse_symbol
    trees: list[Tree] = []
    stack: list[list] = []  # [label or None, children, offset]
    toks = list(_tokens(text))
    i = 0
    while i < len(toks):
        tok, off = toks[i]
        if tok == "(":
            if i + 1 < len(toks) and toks[i + 1][0] not in "()":
                stack.append([toks[i + 1][0], [], off])
                i += 2
            else:
                stack.append([None, [], off])
                i += 1
            continue
        if tok == ")":
            if not stack:
                raise TreeParseError("unexpected ')'", off)
            label, kids, start = stack.pop()
            if label is None:
                if len(kids) != 1:
                    raise TreeParseError("unlabelled bracket must wrap exactly one tree", start)
                t = kids[0]
            else:
                if not kids:
                    raise TreeParseError(f"bracket {label!r} has no children", start)
                try:
                    t = Tree(label_of(label), tuple(kids))
                except ValueError as exc:
                    raise TreeParseError(str(exc), start) from None
            if stack:
                stack[-1][1].append(t)
            else:
                trees.append(t)
            i += 1
            continue
        if not stack:
            raise TreeParseError(f"token {tok!r} outside brackets", off)
        stack[-1][1].append(Tree(EPSILON if tok == EPSILON_TOKEN else Symbol(tok)))
        i += 1
    if stack:
        raise TreeParseError("unbalanced '('", len(text))
    return Corpus(trees, [f"{source}#{k}" for k in range(len(trees))])


def read_file(path, raw: bool = False) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return read_trees(fh.read(), raw=raw, source=str(path))


def write_tree(t: Tree) -> str:
    if t.is_leaf:
        return t.label.base
    parts = []

    def walk(n: Tree):
        if n.is_leaf:
            parts.append(n.label.base)
            return
        parts.append("(" + serialize(n.label))
        for c in n.children:
            parts.append(" ")
            walk(c)
        parts.append(")")

    walk(t)
    return "".join(parts)


def write_trees(trees: Iterable[Tree]) -> str:
    return "".join(write_tree(t) + "\n" for t in trees)


def yield_of(t: Tree) -> list[Symbol]:
    out = []
    stack = [t]
    while stack:
        n = stack.pop()
        if n.is_leaf:
            if not n.is_epsilon:
                out.append(n.label)
        else:
            stack.extend(reversed(n.children))
    return out


def nodes(t: Tree) -> Iterator[Tree]:
    stack = [t]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.children))


def _has_words(t: Tree) -> bool:
    # Penn shape: every word is the only child of its POS node.
    def ok(n: Tree) -> bool:
        if n.is_leaf:
            return True
        if any(c.is_leaf for c in n.children):
            return len(n.children) == 1
        return all(ok(c) for c in n.children)

    return not t.is_leaf and ok(t)


def strip_function_tags(label: str) -> str:
    if label.startswith("-"):
        return label  # -NONE-, -LRB- and friends have no tags
    for i, ch in enumerate(label):
        if i and ch in TAG_DELIMITERS:
            return label[:i]
    return label


def normalize(t: Tree, drop_words: bool = True, strip_tags: bool = True) -> Tree:
    """Prepare a treebank tree for grammar work.

    Empty elements (``-NONE-`` preterminals) are pruned along with any
    ancestor left without children.  With ``strip_tags``, nonterminal labels
    lose everything after the first ``-`` or ``=`` that is not the first
    character; POS tags are left alone.  With ``drop_words``, word leaves
    are removed so that POS tags become the leaves.

    Whether a tree still has words is read off its shape: a tree has words
    when every leaf is the only child of its parent.  A tree that was already
    reduced to POS leaves and happens to have that shape is indistinguishable
    from one with words.
    """
    nonterminal_tags = strip_tags

    def prune(n: Tree) -> Tree | None:
        if n.is_leaf:
            return n
        if n.label.base == EPSILON_TOKEN and n.label.plain:
            return None
        kids = tuple(k for k in (prune(c) for c in n.children) if k is not None)
        if not kids:
            return None
        return Tree(n.label, kids)

    pruned = prune(t)
    if pruned is None or not yield_of(pruned):
        raise NormalizeError(f"tree has an empty yield once empty elements are removed: {write_tree(t)}")
    words = _has_words(pruned)

    def rebuild(n: Tree, root: bool = False) -> Tree:
        if n.is_leaf:
            return n
        # a bare root over one word is kept as is
        preterminal = words and not root and len(n.children) == 1 and n.children[0].is_leaf
        if preterminal:
            return Tree(n.label) if drop_words else n
        label = n.label
        if nonterminal_tags and label.plain:
            label = Symbol(strip_function_tags(label.base))
        elif nonterminal_tags:
            label = Symbol(strip_function_tags(label.base), label.marks)
        return Tree(label, tuple(rebuild(c) for c in n.children))

    return rebuild(pruned, root=True)
