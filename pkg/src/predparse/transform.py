"""Tree transforms that move a top-down parser's announce points.

Every transform is a pure function on trees and records what it did in the
node labels (see :mod:`predparse.symbols`), so :func:`detransform` can undo
any pipeline without being told which one was applied.

Pipelines compose left to right: ``apply_pipeline(["lc", "rb1"], t)`` is
``right_binarize(left_corner_transform(t), "rb1")``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .symbols import (
    AnnounceMark,
    DelayedSiblings,
    LcaMark,
    LeftBundle,
    ParentMark,
    Slash,
    Symbol,
    SymbolError,
    parse_symbol,
)
from .treebank import EPSILON_LEAF, Tree, write_tree

TOP = "TOP"

STEPS = ("lb", "rb2", "rb1", "rb0", "lc", "pa", "lca", "ann")
BINARIZATIONS = ("lb", "rb2", "rb1", "rb0")


class TransformError(ValueError):
    pass


def _bundle(kids: Sequence[Tree]) -> Tree:
    label = Symbol("", (LeftBundle(tuple(k.label for k in kids)),))
    if len(kids) == 2:
        return Tree(label, tuple(kids))
    return Tree(label, (_bundle(kids[:-1]), kids[-1]))


def left_binarize(t: Tree) -> Tree:
    """Group the leftmost children of every node with more than two."""
    if t.is_leaf:
        return t
    kids = tuple(left_binarize(c) for c in t.children)
    if len(kids) <= 2:
        return Tree(t.label, kids)
    return Tree(t.label, (_bundle(kids[:-1]), kids[-1]))


def _only_epsilon(kids: Sequence[Tree]) -> bool:
    return len(kids) == 1 and kids[0].is_epsilon


def right_binarize(t: Tree, mode: str = "rb0") -> Tree:
    """Right-binarize every node.

    ``A -> X1 ... Xn`` becomes ``A -> X1 A-X1``, ``A-X1 -> X2 A-X1-X2`` and
    so on.  The chain ends with a binary composite (``rb2``), a unary
    composite (``rb1``) or a saturated composite rewriting to the empty leaf
    (``rb0``).
    """
    mode = mode.lower()
    if mode not in ("rb2", "rb1", "rb0"):
        raise TransformError(f"unknown right binarization {mode!r}")
    # the last composite keeps this many children
    tail = {"rb2": 2, "rb1": 1, "rb0": 0}[mode]

    def walk(n: Tree) -> Tree:
        if n.is_leaf:
            return n
        kids = tuple(walk(c) for c in n.children)
        if _only_epsilon(kids) or len(kids) <= tail:
            return Tree(n.label, kids)
        return Tree(n.label, _chain(n.label, (), kids))

    def _chain(owner: Symbol, seen: tuple, kids: tuple) -> tuple:
        # children for the node that has seen `seen` of owner's children
        if len(kids) == tail:
            return kids if kids else (EPSILON_LEAF,)
        first, rest = kids[0], kids[1:]
        seen = seen + (first.label,)
        composite = owner.push(DelayedSiblings(seen))
        return (first, Tree(composite, _chain(owner, seen, rest)))

    return walk(t)


def left_corner_transform(t: Tree) -> Tree:
    """Rewrite a tree into its left-corner grammar counterpart.

    For a subtree rooted at ``A`` whose leftmost path is ``A = B0, B1, ...,
    Bk`` down to the terminal ``a``, the result is ``A -> a A/a`` followed by
    one slash node per chain level: ``A/X -> beta A/C`` for each original
    rule ``C -> X beta`` on the path, closed by ``A/A -> ε``.  The non-first
    children ``beta`` are transformed recursively as new roots.
    """
    if t.is_leaf:
        return t
    chain = [t]
    while not chain[-1].children[0].is_leaf:
        chain.append(chain[-1].children[0])
    corner = chain[-1].children[0]
    if corner.is_epsilon:
        raise TransformError(f"leftmost path of {write_tree(t)} ends in the empty leaf")
    root = t.label
    # build bottom-up: innermost slash is A/A -> ε
    below = Tree(root.push(Slash(root)), (EPSILON_LEAF,))
    for level in chain:
        beta = tuple(left_corner_transform(c) for c in level.children[1:])
        seen = level.children[0].label
        below = Tree(root.push(Slash(seen)), beta + (below,))
    return Tree(root, (corner, below))


def parent_annotate(t: Tree) -> Tree:
    def walk(n: Tree, parent: str) -> Tree:
        if n.is_leaf:
            return n
        kids = tuple(walk(c, n.label.base) for c in n.children)
        return Tree(n.label.push(ParentMark(parent)), kids)

    return walk(t, TOP)


def lc_ancestor_annotate(t: Tree) -> Tree:
    """Mark each leftmost nonterminal child with the top of its leftmost chain."""

    def walk(n: Tree, ancestor: str | None) -> Tree:
        if n.is_leaf:
            return n
        top = n.label.base if ancestor is None else ancestor
        kids = [walk(n.children[0], top)]
        kids.extend(walk(c, None) for c in n.children[1:])
        label = n.label if ancestor is None else n.label.push(LcaMark(ancestor))
        return Tree(label, tuple(kids))

    return walk(t, None)


def _is_slash(sym: Symbol) -> bool:
    return isinstance(sym.last, Slash)


def _final_slash(n: Tree) -> Tree | None:
    """The slash node closing n's binarized expansion, if any."""
    cur = n
    while True:
        last = cur.children[-1]
        if last.is_leaf:
            return None
        if _is_slash(last.label):
            return last
        if isinstance(last.label.last, DelayedSiblings):
            cur = last
            continue
        return None


def announce_annotate(t: Tree) -> Tree:
    """Announce the parent category at the left corner.

    Each slash node ``A/X`` standing for an original rule ``C -> X beta``
    gets a unary node inserted above its leftmost child ``Y``, labelled
    ``Y@C``.  Keeping ``Y`` in the label makes the new unary rule specific to
    the child it wraps, so the induced grammar cannot move an announce node
    into a context it was never seen in.
    """
    found = False

    def walk(n: Tree) -> Tree:
        nonlocal found
        if n.is_leaf:
            return n
        kids = [walk(c) for c in n.children]
        if _is_slash(n.label):
            found = True
            closing = _final_slash(n)
            if closing is not None:
                parent = closing.label.last.seen
                kids[0] = Tree(kids[0].label.push(AnnounceMark(parent)), (kids[0],))
        return Tree(n.label, tuple(kids))

    out = walk(t)
    if not found:
        raise TransformError("announce annotation needs left-corner slash categories (apply lc first)")
    return out


@dataclass(frozen=True)
class TransformSpec:
    steps: tuple[str, ...] = ()

    @classmethod
    def parse(cls, text: str | Sequence[str] | None) -> "TransformSpec":
        if text is None:
            return cls()
        if isinstance(text, str):
            items = [s.strip().lower() for s in text.replace("∘", ",").split(",")]
        else:
            items = [s.strip().lower() for s in text]
        spec = cls(tuple(s for s in items if s))
        spec.validate()
        return spec

    def validate(self):
        seen: list[str] = []
        for step in self.steps:
            if step not in STEPS:
                raise TransformError(f"unknown transform step {step!r}")
            if step in seen:
                raise TransformError(f"step {step!r} repeated")
            if step in BINARIZATIONS and any(s in BINARIZATIONS for s in seen):
                raise TransformError(f"step {step!r}: only one binarization per pipeline")
            if step == "lc" and "rb0" in seen:
                raise TransformError("step 'lc': cannot follow rb0 (leftmost paths would end in ε)")
            if step == "ann":
                if "lc" not in seen:
                    raise TransformError("step 'ann' requires an earlier 'lc'")
                after_lc = seen[seen.index("lc") + 1:]
                if not any(s in ("rb2", "rb1", "rb0") for s in after_lc):
                    raise TransformError("step 'ann' requires a right binarization after 'lc'")
            seen.append(step)

    def __str__(self):
        return ",".join(self.steps)


def apply_step(step: str, t: Tree) -> Tree:
    if step == "lb":
        return left_binarize(t)
    if step in ("rb2", "rb1", "rb0"):
        return right_binarize(t, step)
    if step == "lc":
        return left_corner_transform(t)
    if step == "pa":
        return parent_annotate(t)
    if step == "lca":
        return lc_ancestor_annotate(t)
    if step == "ann":
        return announce_annotate(t)
    raise TransformError(f"unknown transform step {step!r}")


def apply_pipeline(spec, t: Tree) -> Tree:
    if not isinstance(spec, TransformSpec):
        spec = TransformSpec.parse(spec)
    for step in spec.steps:
        t = apply_step(step, t)
    return t


# ---------------------------------------------------------------------------
# de-transformation


def _strip_labels(t: Tree) -> Tree:
    if t.is_leaf:
        return t
    return Tree(t.label.strip(ParentMark, LcaMark), tuple(_strip_labels(c) for c in t.children))


def _is_announce(sym: Symbol) -> bool:
    return any(isinstance(m, AnnounceMark) for m in sym.marks)


def _splice_announce(t: Tree) -> Tree:
    if t.is_leaf:
        return t
    kids = []
    for c in t.children:
        c = _splice_announce(c)
        if not c.is_leaf and _is_announce(c.label):
            if len(c.children) != 1:
                raise TransformError(f"announce node {c.label} is not unary")
            kids.append(c.children[0])
        else:
            kids.append(c)
    return Tree(t.label, tuple(kids))


def _kind(mark) -> str | None:
    if isinstance(mark, DelayedSiblings):
        return "rb"
    if isinstance(mark, LeftBundle):
        return "lb"
    if isinstance(mark, Slash):
        return "lc"
    return None


def _layers(t: Tree) -> tuple[set[str], set[tuple[str, str]]]:
    """Structural layers present on node labels and their observed order."""
    present: set[str] = set()
    before: set[tuple[str, str]] = set()
    stack = [t]
    while stack:
        n = stack.pop()
        if n.is_leaf:
            continue
        stack.extend(n.children)
        kinds = [k for k in map(_kind, n.label.marks) if k]
        present.update(kinds)
        for i, a in enumerate(kinds):
            for b in kinds[i + 1:]:
                if a != b:
                    before.add((a, b))
    return present, before


# when nothing on the labels orders two layers, undo in this order
_PEEL_PREFERENCE = ("rb", "lb", "lc")


def _undo_rb(t: Tree) -> Tree:
    def flatten(n: Tree) -> tuple:
        owner = n.label
        seen: tuple = ()
        if isinstance(owner.last, DelayedSiblings):
            seen = owner.last.labels
            owner = owner.pop()
        out = []
        for c in n.children:
            if not c.is_leaf and isinstance(c.label.last, DelayedSiblings):
                expect = owner.push(DelayedSiblings(seen + tuple(k.label for k in out)))
                if c.label != expect:
                    raise TransformError(
                        f"composite {c.label} under {n.label} disagrees with its left siblings (expected {expect})"
                    )
                out.extend(flatten(c))
            elif c.is_epsilon and isinstance(n.label.last, DelayedSiblings):
                continue  # saturated composite terminator
            else:
                out.append(walk(c))
        return tuple(out)

    def walk(n: Tree) -> Tree:
        if n.is_leaf:
            return n
        if isinstance(n.label.last, DelayedSiblings):
            raise TransformError(f"composite {n.label} outside a binarized constituent")
        return Tree(n.label, flatten(n))

    return walk(t)


def _undo_lb(t: Tree) -> Tree:
    def expand(n: Tree) -> list:
        if not n.is_leaf and isinstance(n.label.last, LeftBundle):
            parts: list = []
            for c in n.children:
                parts.extend(expand(c))
            labels = tuple(p.label for p in parts)
            if labels != n.label.last.labels:
                raise TransformError(f"bundle {n.label} does not match its children {labels}")
            return parts
        return [walk(n)]

    def walk(n: Tree) -> Tree:
        if n.is_leaf:
            return n
        kids: list = []
        for c in n.children:
            kids.extend(expand(c))
        return Tree(n.label, tuple(kids))

    if not t.is_leaf and isinstance(t.label.last, LeftBundle):
        raise TransformError(f"bundle {t.label} at the root")
    return walk(t)


def _undo_lc(t: Tree) -> Tree:
    if t.is_leaf:
        return t
    if _is_slash(t.label):
        raise TransformError(f"slash category {t.label} outside a left-corner chain")
    root = t.label
    if len(t.children) != 2 or not t.children[0].is_leaf:
        raise TransformError(f"{root} is not a left-corner root (expected terminal and slash child)")
    corner, n = t.children
    built = corner
    while True:
        if n.is_leaf or not _is_slash(n.label) or n.label.pop() != root:
            raise TransformError(f"expected a slash category of {root}, found {n.label}")
        seen = n.label.last.seen
        if seen != built.label:
            raise TransformError(f"{n.label} records left corner {seen} but {built.label} was built")
        if len(n.children) == 1 and n.children[0].is_epsilon:
            if seen != root:
                raise TransformError(f"{n.label} closes a chain that did not reach {root}")
            return built
        closing = n.children[-1]
        if closing.is_leaf or not _is_slash(closing.label):
            raise TransformError(f"{n.label} does not end in a slash category")
        parent = closing.label.last.seen
        beta = tuple(_undo_lc(c) for c in n.children[:-1])
        built = Tree(parent, (built,) + beta)
        n = closing


def detransform(t: Tree) -> Tree:
    """Undo any pipeline of transforms, reading the layers off the labels."""
    try:
        t = _strip_labels(t)
        t = _splice_announce(t)
        while True:
            present, before = _layers(t)
            if not present:
                return t
            outer = [k for k in present if not any((k, o) in before for o in present)]
            if not outer:
                raise TransformError("transform layers on the labels are cyclically ordered")
            kind = min(outer, key=_PEEL_PREFERENCE.index)
            t = {"rb": _undo_rb, "lb": _undo_lb, "lc": _undo_lc}[kind](t)
    except SymbolError as exc:
        raise TransformError(str(exc)) from None
