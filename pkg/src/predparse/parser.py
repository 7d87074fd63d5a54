"""Incremental best-first top-down parsing with an adaptive beam.

Each analysis keeps its own stack of categories still to be expanded and its
leftmost derivation so far; there is no chart and no sharing of work between
analyses.  Stacks and histories are persistent linked cells ``(head, tail)``
so successors share structure with their parent and never copy it.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .grammar import END, GrammarError, LookaheadTable, PCFG, Rule
from .symbols import Symbol
from .treebank import EPSILON_LEAF, Tree, write_tree

NO_PARSE = "no-parse"
STATE_BOUND = "state-bound-exceeded"
SKIPPED = "skipped"

NEG_INF = float("-inf")


@dataclass(frozen=True)
class BeamConfig:
    beam_factor: float = 1e-4
    max_states_per_word: int = 100_000
    lap_floor: float = 0.0

    def __post_init__(self):
        if not 0 < self.beam_factor <= 1:
            raise ValueError(f"beam factor must lie in (0, 1], got {self.beam_factor}")
        if self.max_states_per_word < 1:
            raise ValueError("max_states_per_word must be at least 1")


@dataclass
class ParseOutput:
    tree: Tree | None
    probability: float
    log_prob: float
    states_considered: int
    failure: str | None = None
    message: str = ""

    @property
    def parsed(self) -> bool:
        return self.failure is None


class ReplayError(ValueError):
    pass


def unlink(cells) -> list:
    out = []
    while cells is not None:
        out.append(cells[0])
        cells = cells[1]
    return out


def replay_history(g: PCFG, history: Sequence[int]) -> Tree:
    """Rebuild the tree of a leftmost derivation given as rule ids."""
    rules = g.rules
    if not history:
        raise ReplayError("empty derivation")
    it = iter(history)

    def take(sym: Symbol) -> Rule:
        try:
            rid = next(it)
        except StopIteration:
            raise ReplayError(f"derivation ends with {sym} unexpanded") from None
        if not 0 <= rid < len(rules):
            raise ReplayError(f"unknown rule id {rid}")
        r = rules[rid]
        if r.lhs != sym:
            raise ReplayError(f"rule {r} cannot expand {sym}")
        return r

    first = rules[history[0]] if 0 <= history[0] < len(rules) else None
    if first is None:
        raise ReplayError(f"unknown rule id {history[0]}")
    # iterative build: frames of (symbol, rule, children built so far)
    root_rule = take(first.lhs)
    frames = [(root_rule, [])]
    while True:
        r, kids = frames[-1]
        if len(kids) == len(r.rhs):
            frames.pop()
            done = Tree(r.lhs, tuple(kids) if kids else (EPSILON_LEAF,))
            if not frames:
                break
            frames[-1][1].append(done)
            continue
        sym = r.rhs[len(kids)]
        if sym in g.terminals:
            kids.append(Tree(sym))
        else:
            frames.append((take(sym), []))
    if next(it, None) is not None:
        raise ReplayError("derivation has rules left over after the tree is complete")
    return done


def derivation_logprob(g: PCFG, history: Sequence[int]) -> float:
    """Exactly rounded log probability of a derivation, root included."""
    rules = g.rules
    root = rules[history[0]].lhs
    return math.fsum([math.log(g.roots[root])] + [rules[i].logprob for i in history])


class _Compiled:
    """Integer-indexed view of a grammar plus look-ahead table."""

    def __init__(self, g: PCFG, table: LookaheadTable):
        symbols = sorted(g.terminals) + sorted(g.nonterminals) + [END]
        self.symbols = symbols
        self.index = {s: i for i, s in enumerate(symbols)}
        self.end = self.index[END]
        n = len(symbols)
        self.terminal = [s in g.terminals or s == END for s in symbols]
        idx = self.index
        # look-ahead: first[c] maps terminal id -> p
        self.first = [dict() for _ in range(n)]
        self.empty = [0.0] * n
        for s in symbols:
            i = idx[s]
            if self.terminal[i]:
                self.first[i] = {i: 1.0}
                continue
            if s not in table.first_prob:
                raise GrammarError(f"look-ahead table has no entry for {s}")
            self.first[i] = {idx[w]: p for w, p in table.first_prob[s].items() if w in idx}
            self.empty[i] = table.empty_prob[s]
        self.nullable = [not self.terminal[i] and symbols[i] in table.nullable for i in range(n)]
        self.sfirst = [frozenset() for _ in range(n)]
        for s, fs in table.structural_first.items():
            self.sfirst[idx[s]] = frozenset(idx[w] for w in fs)
        for i in range(n):
            if self.terminal[i]:
                self.sfirst[i] = frozenset((i,))
        # rules
        self.rule_logp = [r.logprob for r in g.rules]
        self.rule_rhs = [tuple(idx[s] for s in r.rhs) for r in g.rules]
        self.by_lhs = [[] for _ in range(n)]
        for r in sorted(g.rules, key=lambda r: (-r.prob, r.id)):
            rhs = self.rule_rhs[r.id]
            f, null = set(), True
            for s in rhs:
                f |= self.sfirst[s]
                if not self.nullable[s]:
                    null = False
                    break
            self.by_lhs[idx[r.lhs]].append((r.id, frozenset(f), null))
        self._cand: dict = {}
        self.roots = [(idx[s], math.log(p)) for s, p in g.roots.items()]

    def candidates(self, c: int, w: int):
        key = (c, w)
        hit = self._cand.get(key)
        if hit is None:
            hit = [(rid, w not in f) for rid, f, null in self.by_lhs[c] if w in f or null]
            self._cand[key] = hit
        return hit

    def rest_reaches(self, stack, w: int) -> bool:
        while stack is not None:
            s = stack[0]
            if w in self.sfirst[s]:
                return True
            if not self.nullable[s]:
                return False
            stack = stack[1]
        return w == self.end

    def lap(self, stack, w: int, floor: float = 0.0) -> float:
        prefix = []
        base = 1.0 if w == self.end else 0.0
        empty = self.empty
        while stack is not None:
            s = stack[0]
            prefix.append(s)
            if empty[s] == 0.0:
                base = 0.0
                break
            stack = stack[1]
        val = base
        first = self.first
        for s in reversed(prefix):
            val = first[s].get(w, 0.0) + empty[s] * val
        if val > 1.0:
            val = 1.0
        if val < floor:
            val = floor
        return val


def _log(x: float) -> float:
    return math.log(x) if x > 0.0 else NEG_INF


class PredictiveParser:
    """Parser bound to one grammar and look-ahead table.

    Compiling the grammar is the expensive part, so reuse one instance for a
    whole test set.
    """

    def __init__(self, g: PCFG, table: LookaheadTable, config: BeamConfig | None = None):
        self.grammar = g
        self.table = table
        self.config = config or BeamConfig()
        self._c = _Compiled(g, table)

    def parse(self, words: Sequence[Symbol], config: BeamConfig | None = None) -> ParseOutput:
        cfg = config or self.config
        c = self._c
        g = self.grammar
        unknown = [w for w in words if w not in g.terminals]
        if not words:
            return ParseOutput(None, 0.0, NEG_INF, 0, NO_PARSE, "empty input")
        if unknown:
            return ParseOutput(None, 0.0, NEG_INF, 0, NO_PARSE, f"unknown terminal {unknown[0]}")
        inputs = [c.index[w] for w in words] + [c.end]
        log_alpha = math.log(cfg.beam_factor)
        max_states = cfg.max_states_per_word
        rule_logp, rule_rhs = c.rule_logp, c.rule_rhs
        terminal = c.terminal
        floor = max(cfg.lap_floor, self.table.floor)

        def lap(stack, w):
            return c.lap(stack, w, floor)

        seq = 0
        states = 0
        pending: list = []
        w0 = inputs[0]
        for root, lp in c.roots:
            stack = (root, None)
            fom = lp + _log(lap(stack, w0))
            pending.append((-fom, seq, lp, stack, None))
            seq += 1
        heapq.heapify(pending)

        for pos, w in enumerate(inputs):
            success: list = []  # (-log_prob, seq, log_prob, stack, history)
            best = NEG_INF
            word_states = 0
            while pending:
                top = pending[0]
                if success and -top[0] < log_alpha + math.log(len(success)) + best:
                    break
                negf, _, lp, stack, hist = heapq.heappop(pending)
                if stack is None:
                    if w == c.end:
                        success.append((-lp, seq, lp, None, hist))
                        seq += 1
                        best = max(best, lp)
                    continue
                sym, rest = stack
                if terminal[sym]:
                    if sym == w:
                        success.append((-lp, seq, lp, rest, hist))
                        seq += 1
                        if lp > best:
                            best = lp
                    continue
                rest_ok = None
                for rid, needs_rest in c.candidates(sym, w):
                    if needs_rest:
                        if rest_ok is None:
                            rest_ok = c.rest_reaches(rest, w)
                        if not rest_ok:
                            continue
                    new = rest
                    for s in reversed(rule_rhs[rid]):
                        new = (s, new)
                    nlp = lp + rule_logp[rid]
                    fom = nlp + _log(lap(new, w))
                    heapq.heappush(pending, (-fom, seq, nlp, new, (rid, hist)))
                    seq += 1
                    states += 1
                    word_states += 1
                if word_states > max_states:
                    return ParseOutput(
                        None, 0.0, NEG_INF, states, STATE_BOUND,
                        f"more than {max_states} states at position {pos}",
                    )
            if not success:
                where = "end of input" if w == c.end else f"position {pos}"
                return ParseOutput(None, 0.0, NEG_INF, states, NO_PARSE, f"no analysis survives at {where}")
            if w == c.end:
                return self._finish(success, states)
            nxt = inputs[pos + 1]
            success.sort()
            pending = []
            for _, _, lp, stack, hist in success:
                fom = lp + _log(lap(stack, nxt))
                pending.append((-fom, seq, lp, stack, hist))
                seq += 1
            heapq.heapify(pending)
        raise AssertionError("unreachable")

    def _finish(self, success: list, states: int) -> ParseOutput:
        g = self.grammar
        best = max(item[2] for item in success)
        slack = 1e-9 * max(1.0, abs(best))
        chosen = None
        for _, _, lp, _, hist in success:
            if lp < best - slack:
                continue
            history = unlink(hist)[::-1]
            exact = derivation_logprob(g, history)
            if chosen is None or exact > chosen[0]:
                chosen = (exact, None, history)
            elif exact == chosen[0]:
                # equal probability: lowest bracketing wins
                if chosen[1] is None:
                    chosen = (chosen[0], write_tree(replay_history(g, chosen[2])), chosen[2])
                text = write_tree(replay_history(g, history))
                if text < chosen[1]:
                    chosen = (exact, text, history)
        exact, _, history = chosen
        tree = replay_history(g, history)
        return ParseOutput(tree, math.exp(exact), exact, states)


def parse_sentence(g: PCFG, table: LookaheadTable, words: Sequence[Symbol], config: BeamConfig | None = None) -> ParseOutput:
    return PredictiveParser(g, table, config).parse(words)


@dataclass
class CorpusParse:
    outputs: list[ParseOutput]
    skipped: list[int]

    @property
    def candidates(self) -> int:
        return len(self.outputs) - len(self.skipped)

    @property
    def parsed(self) -> int:
        return sum(1 for o in self.outputs if o.failure is None)

    @property
    def coverage(self) -> float:
        return 100.0 * self.parsed / self.candidates if self.candidates else 0.0


def parse_corpus(
    g: PCFG,
    table: LookaheadTable,
    sentences: Iterable[Sequence[Symbol]],
    config: BeamConfig | None = None,
    max_length: int = 40,
    parser: PredictiveParser | None = None,
) -> CorpusParse:
    """Parse every sentence; those longer than ``max_length`` are skipped."""
    parser = parser or PredictiveParser(g, table, config)
    outputs, skipped = [], []
    for i, words in enumerate(sentences):
        words = list(words)
        if max_length is not None and len(words) > max_length:
            outputs.append(ParseOutput(None, 0.0, NEG_INF, 0, SKIPPED, f"length {len(words)} > {max_length}"))
            skipped.append(i)
            continue
        outputs.append(parser.parse(words, config))
    return CorpusParse(outputs, skipped)
