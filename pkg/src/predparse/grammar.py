"""Treebank PCFG induction and look-ahead probabilities."""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .symbols import Symbol, SymbolError, parse_symbol, serialize
from .treebank import Tree

# distinguished end-of-input terminal
END = Symbol("⊣")


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class Rule:
    id: int
    lhs: Symbol
    rhs: tuple[Symbol, ...]
    prob: float
    count: int = 0

    @property
    def logprob(self) -> float:
        return math.log(self.prob)

    def __str__(self):
        rhs = " ".join(serialize(s) for s in self.rhs)
        return f"{serialize(self.lhs)} -> {rhs}".rstrip()


@dataclass
class PCFG:
    rules: list[Rule]
    terminals: frozenset
    roots: dict  # Symbol -> probability
    by_lhs: dict = field(init=False)

    def __post_init__(self):
        self.by_lhs = defaultdict(list)
        for r in self.rules:
            self.by_lhs[r.lhs].append(r)
        self.by_lhs = dict(self.by_lhs)
        self.nonterminals = frozenset(self.by_lhs)
        overlap = self.nonterminals & self.terminals
        if overlap:
            raise GrammarError(f"symbols used both as terminal and nonterminal: {sorted(overlap)[:5]}")
        for r in self.rules:
            for s in r.rhs:
                if s not in self.terminals and s not in self.by_lhs:
                    raise GrammarError(f"rule {r} uses unknown symbol {s}")

    def __len__(self):
        return len(self.rules)

    def is_terminal(self, sym: Symbol) -> bool:
        return sym in self.terminals


def _subtrees(trees: Iterable[Tree]):
    stack = list(trees)
    while stack:
        n = stack.pop()
        if n.is_leaf:
            continue
        yield n
        stack.extend(n.children)


def _rhs(n: Tree) -> tuple[Symbol, ...]:
    return tuple(c.label for c in n.children if not c.is_epsilon)


def induce_pcfg(trees: Iterable[Tree]) -> PCFG:
    """Relative-frequency PCFG over all local trees."""
    trees = list(trees)
    if not trees:
        raise GrammarError("cannot induce a grammar from an empty corpus")
    counts: Counter = Counter()
    terminals = set()
    for n in _subtrees(trees):
        counts[n.label, _rhs(n)] += 1
        for c in n.children:
            if c.is_leaf and not c.is_epsilon:
                terminals.add(c.label)
    for t in trees:
        if t.is_leaf:
            raise GrammarError("a corpus tree is a bare leaf")
    totals: Counter = Counter()
    for (lhs, _), c in counts.items():
        totals[lhs] += c
    keyed = sorted(counts.items(), key=lambda kv: (serialize(kv[0][0]), tuple(serialize(s) for s in kv[0][1])))
    rules = [
        Rule(i, lhs, rhs, c / totals[lhs], c)
        for i, ((lhs, rhs), c) in enumerate(keyed)
    ]
    root_counts = Counter(t.label for t in trees)
    roots = {s: c / len(trees) for s, c in sorted(root_counts.items(), key=lambda kv: serialize(kv[0]))}
    return PCFG(rules, frozenset(terminals), roots)


def structural_sets(g: PCFG) -> tuple[dict, frozenset]:
    """FIRST sets and nullable nonterminals by fixed-point closure."""
    nullable: set = set()
    changed = True
    while changed:
        changed = False
        for r in g.rules:
            if r.lhs not in nullable and all(s in nullable for s in r.rhs):
                nullable.add(r.lhs)
                changed = True
    first = {c: set() for c in g.nonterminals}
    changed = True
    while changed:
        changed = False
        for r in g.rules:
            acc = first[r.lhs]
            before = len(acc)
            for s in r.rhs:
                if s in g.terminals:
                    acc.add(s)
                    break
                acc |= first[s]
                if s not in nullable:
                    break
            if len(acc) != before:
                changed = True
    return {c: frozenset(v) for c, v in first.items()}, frozenset(nullable)


def first_of_sequence(seq: Sequence[Symbol], first: dict, nullable, terminals) -> tuple[frozenset, bool]:
    out: set = set()
    for s in seq:
        if s in terminals:
            out.add(s)
            return frozenset(out), False
        out |= first[s]
        if s not in nullable:
            return frozenset(out), False
    return frozenset(out), True


@dataclass
class LookaheadTable:
    first_prob: dict  # nonterminal -> {terminal: p}
    empty_prob: dict  # nonterminal -> p
    structural_first: dict
    nullable: frozenset
    terminals: frozenset
    floor: float = 0.0

    def first(self, sym: Symbol, omega: Symbol) -> float:
        if sym in self.terminals:
            return 1.0 if sym == omega else 0.0
        try:
            return self.first_prob[sym].get(omega, 0.0)
        except KeyError:
            raise GrammarError(f"unknown symbol {sym} on the stack") from None

    def empty(self, sym: Symbol) -> float:
        if sym in self.terminals:
            return 0.0
        try:
            return self.empty_prob[sym]
        except KeyError:
            raise GrammarError(f"unknown symbol {sym} on the stack") from None


def estimate_lookahead(trees: Iterable[Tree], g: PCFG | None = None, floor: float = 0.0) -> LookaheadTable:
    """Empirical first-terminal and empty-yield distributions per category."""
    trees = list(trees)
    if not trees:
        raise GrammarError("cannot estimate look-ahead from an empty corpus")
    if g is None:
        g = induce_pcfg(trees)
    totals: Counter = Counter()
    empties: Counter = Counter()
    firsts: dict = defaultdict(Counter)

    def walk(n: Tree):
        # returns the first yielded terminal (None for an empty yield)
        stack = [(n, False)]
        result: dict = {}
        while stack:
            cur, done = stack.pop()
            if cur.is_leaf:
                result[id(cur)] = None if cur.is_epsilon else cur.label
                continue
            if not done:
                stack.append((cur, True))
                stack.extend((c, False) for c in cur.children)
                continue
            f = None
            for c in cur.children:
                f = result[id(c)]
                if f is not None:
                    break
            result[id(cur)] = f
            totals[cur.label] += 1
            if f is None:
                empties[cur.label] += 1
            else:
                firsts[cur.label][f] += 1

    for t in trees:
        walk(t)
    first_prob = {
        c: {w: k / totals[c] for w, k in sorted(firsts[c].items(), key=lambda kv: serialize(kv[0]))}
        for c in sorted(totals, key=serialize)
    }
    empty_prob = {c: empties[c] / totals[c] for c in first_prob}
    sfirst, nullable = structural_sets(g)
    return LookaheadTable(first_prob, empty_prob, sfirst, nullable, g.terminals, floor)


def lap(stack: Sequence[Symbol], omega: Symbol, table: LookaheadTable) -> float:
    """Look-ahead probability that ``stack`` (top first) derives ``omega``...

    ``lap([C|rest]) = P(C =>* omega...) + P(C =>* ε) * lap(rest)``, with
    ``lap([])`` equal to 1 for the end marker and 0 otherwise.
    """
    prefix = []
    base = 1.0 if omega == END else 0.0
    for sym in stack:
        prefix.append(sym)
        if table.empty(sym) == 0.0:
            base = 0.0
            break
    val = base
    for sym in reversed(prefix):
        val = table.first(sym, omega) + table.empty(sym) * val
    val = min(1.0, max(0.0, val))
    if table.floor:
        val = max(val, table.floor)
    return val


def candidate_rules(c: Symbol, omega: Symbol, g: PCFG, table: LookaheadTable, rest: Sequence[Symbol] = ()) -> list[Rule]:
    """Rules for ``c`` whose expansion could still reach ``omega``."""
    rest_first = None
    out = []
    for r in g.by_lhs.get(c, ()):
        f, null = first_of_sequence(r.rhs, table.structural_first, table.nullable, g.terminals)
        if omega in f:
            out.append(r)
        elif null:
            if rest_first is None:
                rf, rnull = first_of_sequence(rest, table.structural_first, table.nullable, g.terminals)
                rest_first = rf | {END} if rnull else rf
            if omega in rest_first:
                out.append(r)
    out.sort(key=lambda r: (-r.prob, r.id))
    return out


# ---------------------------------------------------------------------------
# text formats


def _fmt(p: float) -> str:
    return repr(float(p))


def write_grammar(g: PCFG) -> str:
    lines = [f"T {serialize(t)}" for t in sorted(g.terminals, key=serialize)]
    lines += [f"R {serialize(s)} {_fmt(p)}" for s, p in g.roots.items()]
    for r in g.rules:
        rhs = "".join(" " + serialize(s) for s in r.rhs)
        lines.append(f"P {serialize(r.lhs)} ->{rhs} {_fmt(r.prob)} {r.count}")
    return "\n".join(lines) + "\n"


def read_grammar(text: str) -> PCFG:
    terminals, roots, rules = set(), {}, []
    try:
        for lineno, line in enumerate(text.splitlines(), 1):
            parts = line.split()
            if not parts:
                continue
            tag = parts[0]
            if tag == "T":
                terminals.add(parse_symbol(parts[1]))
            elif tag == "R":
                roots[parse_symbol(parts[1])] = float(parts[2])
            elif tag == "P":
                if parts[2] != "->":
                    raise GrammarError(f"line {lineno}: expected '->'")
                rhs = tuple(parse_symbol(s) for s in parts[3:-2])
                rules.append(Rule(len(rules), parse_symbol(parts[1]), rhs, float(parts[-2]), int(parts[-1])))
            else:
                raise GrammarError(f"line {lineno}: unknown record {tag!r}")
    except (IndexError, ValueError, SymbolError) as exc:
        if isinstance(exc, GrammarError):
            raise
        raise GrammarError(f"malformed grammar file: {exc}") from None
    return PCFG(rules, frozenset(terminals), roots)


def write_lookahead(table: LookaheadTable) -> str:
    lines = []
    for c, dist in table.first_prob.items():
        for w, p in dist.items():
            lines.append(f"F {serialize(c)} {serialize(w)} {_fmt(p)}")
    for c, p in table.empty_prob.items():
        lines.append(f"E {serialize(c)} {_fmt(p)}")
    return "\n".join(lines) + "\n"


def read_lookahead(text: str, g: PCFG, floor: float = 0.0) -> LookaheadTable:
    first_prob: dict = {}
    empty_prob: dict = {}
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "F":
            first_prob.setdefault(parse_symbol(parts[1]), {})[parse_symbol(parts[2])] = float(parts[3])
        elif parts[0] == "E":
            c = parse_symbol(parts[1])
            first_prob.setdefault(c, {})
            empty_prob[c] = float(parts[2])
        else:
            raise GrammarError(f"unknown look-ahead record {parts[0]!r}")
    first_prob = {c: first_prob[c] for c in empty_prob}
    sfirst, nullable = structural_sets(g)
    return LookaheadTable(first_prob, empty_prob, sfirst, nullable, g.terminals, floor)


def rule_lookup(g: PCFG) -> dict:
    return {(r.lhs, r.rhs): r for r in g.rules}


def tree_logprob(g: PCFG, t: Tree, lookup: dict | None = None) -> float:
    """Exactly rounded log probability of a tree, root probability included.

    Returns ``-inf`` if the tree uses a rule or root the grammar lacks.
    """
    lookup = lookup if lookup is not None else rule_lookup(g)
    if t.label not in g.roots:
        return float("-inf")
    logs = [math.log(g.roots[t.label])]
    stack = [t]
    while stack:
        n = stack.pop()
        if n.is_leaf:
            continue
        r = lookup.get((n.label, _rhs(n)))
        if r is None:
            return float("-inf")
        logs.append(r.logprob)
        stack.extend(n.children)
    return math.fsum(logs)
