"""Exhaustive reference parsers.

:func:`mlp_parse` finds the maximum likelihood parse with a bottom-up
Viterbi chart over dotted rules.  Dotted items binarize n-ary rules on the
fly; nullable prefixes are folded in with their best empty derivation; and
within a span, unary and empty-sibling closure runs as a best-first agenda,
which is exact because every rule probability is at most one.

:func:`enumerate_parses` lists every parse by brute force and is meant for
checking the other parsers on tiny inputs.
"""
from __future__ import annotations

import functools
import heapq
import itertools
import math
from typing import Sequence

from .grammar import PCFG, rule_lookup, tree_logprob
from .symbols import Symbol
from .treebank import EPSILON_LEAF, Tree, write_tree

NEG_INF = float("-inf")
# scores closer than this are re-ranked on exact sums (then on bracketing)
_NEAR = 1e-12


class EnumerationError(RuntimeError):
    pass


def _better(a: tuple, b: tuple | None) -> bool:
    """Is candidate ``a`` = (exact_logprob, text) preferred over ``b``?"""
    if b is None:
        return True
    if a[0] != b[0]:
        return a[0] > b[0]
    return a[1] < b[1]


class _Chart:
    def __init__(self, g: PCFG, words: Sequence[Symbol]):
        self.g = g
        self.words = list(words)
        self.lookup = rule_lookup(g)
        self.terminals = g.terminals
        self.rules = g.rules
        self._best_empty()
        self._starts()

    # -- empty derivations -------------------------------------------------

    def _best_empty(self):
        """Best empty-yield derivation per nullable category."""
        g = self.g
        best: dict = {}  # X -> (score, tree)
        while True:
            cands: dict = {}
            for r in g.rules:
                if r.lhs in best or any(s in g.terminals or s not in best for s in r.rhs):
                    continue
                score = r.logprob + sum(best[s][0] for s in r.rhs)
                kids = tuple(best[s][1] for s in r.rhs) or (EPSILON_LEAF,)
                t = Tree(r.lhs, kids)
                old = cands.get(r.lhs)
                if old is None or self._prefer(score, t, old[0], old[1]):
                    cands[r.lhs] = (score, t)
            if not cands:
                break
            # finalize the single best candidate, as in Knuth's algorithm
            x = max(cands, key=lambda k: (cands[k][0], k))
            best[x] = cands[x]
        self.empty = best
        self.eps_prefix = []
        for r in g.rules:
            acc = [r.logprob]
            for s in r.rhs:
                if s in best:
                    acc.append(acc[-1] + best[s][0])
                else:
                    break
            self.eps_prefix.append(acc)

    def _starts(self):
        # (rule, d) pairs whose symbol d follows an all-nullable prefix
        self.starts: dict = {}
        for r in self.rules:
            for d in range(len(self.eps_prefix[r.id])):
                if d < len(r.rhs):
                    self.starts.setdefault(r.rhs[d], []).append((r.id, d))

    def _prefer(self, s1, t1, s2, t2) -> bool:
        if abs(s1 - s2) > _NEAR * max(1.0, abs(s1)):
            return s1 > s2
        a = (tree_logprob_local(self, t1), write_tree(t1))
        b = (tree_logprob_local(self, t2), write_tree(t2))
        return _better(a, b)

    # -- tree reconstruction ----------------------------------------------

    def const_tree(self, x: Symbol, i: int, j: int) -> Tree:
        if i == j:
            return self.empty[x][1]
        _, rid = self.const[i, j][x]
        r = self.rules[rid]
        return Tree(x, tuple(self.dotted_children(rid, len(r.rhs), i, j)))

    def dotted_children(self, rid: int, d: int, i: int, j: int) -> list:
        out: list = []
        while d > 0:
            r = self.rules[rid]
            if i == j:
                out.extend(reversed([self.empty[s][1] for s in r.rhs[:d]]))
                break
            _, (k, kind) = self.dotted[i, j][rid, d]
            sym = r.rhs[d - 1]
            if kind == "t":
                out.append(Tree(sym))
            elif kind == "e":
                out.append(self.empty[sym][1])
            else:
                out.append(self.const_tree(sym, k, j))
            d -= 1
            j = k
        out.reverse()
        return out

    # -- parsing -----------------------------------------------------------

    def run(self):
        n = len(self.words)
        self.const: dict = {}
        self.dotted: dict = {}
        self.next_index: dict = {}  # (i, j) -> {symbol: [(rid, d, score)]}
        for length in range(1, n + 1):
            for i in range(0, n - length + 1):
                self._span_closure(i, i + length)

    def _span_closure(self, i: int, j: int):
        words = self.words
        rules = self.rules
        cand: dict = {}
        heap: list = []
        counter = itertools.count()
        const_ij: dict = {}
        dotted_ij: dict = {}
        nexts: dict = {}
        self.const[i, j] = const_ij
        self.dotted[i, j] = dotted_ij
        self.next_index[i, j] = nexts

        def relax(item, score, bp):
            old = cand.get(item)
            if old is not None:
                if abs(score - old[0]) > _NEAR * max(1.0, abs(score)):
                    if score < old[0]:
                        return
                elif not self._prefer_items(item, score, bp, old[0], old[1], i, j):
                    return
            cand[item] = (score, bp)
            heapq.heappush(heap, (-score, next(counter), item))

        # seeds from strictly shorter spans
        for k in range(i + 1, j):
            left = self.next_index[i, k]
            right = self.const[k, j]
            for x, (xs, _) in right.items():
                for rid, d, sc in left.get(x, ()):
                    relax(("d", rid, d + 1), sc + xs, (k, "c"))
        w = words[j - 1]
        if j - 1 > i:
            for rid, d, sc in self.next_index[i, j - 1].get(w, ()):
                relax(("d", rid, d + 1), sc, (j - 1, "t"))
        else:
            for rid, d in self.starts.get(w, ()):
                relax(("d", rid, d + 1), self.eps_prefix[rid][d], (i, "t"))

        done: set = set()
        while heap:
            negs, _, item = heapq.heappop(heap)
            if item in done:
                continue
            score, bp = cand[item]
            if -negs != score:
                continue
            done.add(item)
            if item[0] == "c":
                x = item[1]
                const_ij[x] = (score, bp)
                for rid, d in self.starts.get(x, ()):
                    relax(("d", rid, d + 1), self.eps_prefix[rid][d] + score, (i, "c"))
                continue
            _, rid, d = item
            dotted_ij[rid, d] = (score, bp)
            r = rules[rid]
            if d == len(r.rhs):
                relax(("c", r.lhs), score, rid)
            else:
                nxt = r.rhs[d]
                nexts.setdefault(nxt, []).append((rid, d, score))
                if nxt in self.empty:
                    relax(("d", rid, d + 1), score + self.empty[nxt][0], (j, "e"))

    def _prefer_items(self, item, s1, bp1, s2, bp2, i, j) -> bool:
        return _better(self._item_key(item, bp1, i, j), self._item_key(item, bp2, i, j))

    def _item_key(self, item, bp, i, j) -> tuple:
        """Exact log probability and bracketing of a candidate, for near ties."""
        if item[0] == "c":
            rid, label, kids = bp, item[1], self._children_with(bp, len(self.rules[bp].rhs), i, j)
        else:
            _, rid, d = item
            label, kids = Symbol("·"), self._children_with(rid, d, i, j, bp)
        logs = [self.rules[rid].logprob] + [tree_logprob_local(self, k) for k in kids]
        return math.fsum(logs), write_tree(Tree(label, tuple(kids)))

    def _children_with(self, rid, d, i, j, bp=None) -> list:
        # children of dotted (rid, d) over (i, j), the last step given by bp
        if bp is None:
            return self.dotted_children(rid, d, i, j)
        k, kind = bp
        sym = self.rules[rid].rhs[d - 1]
        if kind == "t":
            last = Tree(sym)
        elif kind == "e":
            last = self.empty[sym][1]
        else:
            last = self.const_tree(sym, k, j) if (k, j) != (i, j) or sym in self.const[i, j] else None
            if last is None:
                raise AssertionError("candidate refers to an unfinished constituent")
        return self.dotted_children(rid, d - 1, i, k) + [last]


def tree_logprob_local(chart: _Chart, t: Tree) -> float:
    """Exact sum of rule log probabilities in ``t`` (no root term)."""
    logs = []
    stack = [t]
    while stack:
        n = stack.pop()
        if n.is_leaf:
            continue
        rhs = tuple(c.label for c in n.children if not c.is_epsilon)
        logs.append(chart.lookup[n.label, rhs].logprob)
        stack.extend(n.children)
    return math.fsum(logs)


def mlp_parse(g: PCFG, words: Sequence[Symbol]) -> tuple[Tree, float] | None:
    """The most probable parse of ``words`` and its probability, or None."""
    words = list(words)
    if not words or any(w not in g.terminals for w in words):
        return None
    chart = _Chart(g, words)
    chart.run()
    top = chart.const[0, len(words)]
    best = None
    for root, p in g.roots.items():
        if root not in top:
            continue
        t = chart.const_tree(root, 0, len(words))
        key = (tree_logprob(g, t, chart.lookup), write_tree(t))
        if best is None or _better(key, best[0]):
            best = (key, t)
    if best is None:
        return None
    (logp, _), t = best
    return t, math.exp(logp)


def mlp_logprob(g: PCFG, words: Sequence[Symbol]) -> tuple[Tree, float] | None:
    """Like :func:`mlp_parse` but returns the log probability."""
    res = mlp_parse(g, words)
    if res is None:
        return None
    return res[0], tree_logprob(g, res[0])


# ---------------------------------------------------------------------------
# brute force


def _cycle_check(g: PCFG):
    """Reject grammars where a category can rewrite to itself with probability one."""
    empty = _Chart(g, []).empty
    nts = sorted(g.nonterminals)
    idx = {s: i for i, s in enumerate(nts)}
    n = len(nts)
    best = [[NEG_INF] * n for _ in range(n)]
    for r in g.rules:
        for pos, y in enumerate(r.rhs):
            if y in g.terminals:
                continue
            others = r.rhs[:pos] + r.rhs[pos + 1:]
            if all(s in empty for s in others):
                score = r.logprob + sum(empty[s][0] for s in others)
                a, b = idx[r.lhs], idx[y]
                best[a][b] = max(best[a][b], score)
    for k in range(n):
        bk = best[k]
        for a in range(n):
            ak = best[a][k]
            if ak == NEG_INF:
                continue
            row = best[a]
            for b in range(n):
                s = ak + bk[b]
                if s > row[b]:
                    row[b] = s
    for a in range(n):
        if best[a][a] >= -1e-15:
            raise EnumerationError(
                f"{nts[a]} rewrites to itself with probability one; the number of parses is unbounded"
            )


def _derivable(g: PCFG, words: list) -> set:
    """Every (symbol, i, j) such that the symbol can derive words[i:j]."""
    n = len(words)
    out = {(w, i, i + 1) for i, w in enumerate(words)}
    changed = True
    while changed:
        changed = False
        for r in g.rules:
            for i in range(n + 1):
                reach = {i}
                for x in r.rhs:
                    reach = {k for h in reach for k in range(h, n + 1) if (x, h, k) in out}
                    if not reach:
                        break
                for j in reach:
                    if (r.lhs, i, j) not in out:
                        out.add((r.lhs, i, j))
                        changed = True
    return out


def enumerate_parses(g: PCFG, words: Sequence[Symbol], cap: int = 10_000) -> list[tuple[Tree, float]]:
    """Every parse of ``words`` with its exact probability.

    Trees in which a category derives the same span twice on one path are
    skipped: such cycles only multiply in factors below one, so they never
    hold the best parse.  Raises :class:`EnumerationError` if a cycle has
    probability one or more than ``cap`` parses exist.
    """
    words = list(words)
    if len(words) > 10:
        raise ValueError("brute-force enumeration is limited to 10 terminals")
    _cycle_check(g)
    lookup_rules = g.by_lhs
    terminals = g.terminals
    n = len(words)
    count = 0
    derivable = _derivable(g, words)

    @functools.lru_cache(maxsize=None)
    def seq_ok(rhs, i, j) -> bool:
        reach = {i}
        for x in rhs:
            reach = {k for h in reach for k in range(h, j + 1) if (x, h, k) in derivable}
            if not reach:
                return False
        return j in reach

    def derive(x: Symbol, i: int, j: int, path: frozenset):
        if x in terminals:
            if j == i + 1 and words[i] == x:
                yield Tree(x), []
            return
        key = (x, i, j)
        if key in path:
            return
        path = path | {key}
        for r in lookup_rules.get(x, ()):
            for kids, logs in seq(r.rhs, 0, i, j, path):
                yield Tree(x, tuple(kids) or (EPSILON_LEAF,)), logs + [r.logprob]

    def seq(rhs, pos, i, j, path):
        if pos == len(rhs):
            if i == j:
                yield [], []
            return
        x = rhs[pos]
        hi = i + 1 if x in terminals else j
        rest_rhs = rhs[pos + 1:]
        for k in range(i, min(hi, j) + 1):
            if (x, i, k) not in derivable or not seq_ok(rest_rhs, k, j):
                continue
            for t, logs in derive(x, i, k, path):
                for rest, rlogs in seq(rhs, pos + 1, k, j, path):
                    yield [t] + rest, logs + rlogs

    out = []
    for root, p in g.roots.items():
        for t, logs in derive(root, 0, n, frozenset()):
            count += 1
            if count > cap:
                raise EnumerationError(f"more than {cap} parses ({count - 1} listed so far)")
            out.append((t, math.exp(math.fsum(logs + [math.log(p)]))))
    return out
