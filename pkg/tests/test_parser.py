import heapq
import math

import pytest

from conftest import AMBIGUOUS, FLAT_NP, LEFT_RECURSIVE, grammar_from, trees, words
import predparse.parser as parser_mod
from predparse.grammar import estimate_lookahead, induce_pcfg, rule_lookup
from predparse.oracle import mlp_parse
from predparse.parser import (
    NO_PARSE, SKIPPED, STATE_BOUND, BeamConfig, PredictiveParser, ReplayError, _Compiled, derivation_logprob,
    parse_corpus, parse_sentence, replay_history,
)
from predparse.symbols import Symbol
from predparse.transform import apply_pipeline, detransform
from predparse.treebank import normalize, read_trees, write_tree, yield_of


def setup(text, spec=""):
    ts = [apply_pipeline(spec, t) for t in trees(text)]
    g = induce_pcfg(ts)
    return g, estimate_lookahead(ts, g)


def history_of(g, t):
    lookup = rule_lookup(g)
    out, stack = [], [t]
    while stack:
        n = stack.pop()
        if n.is_leaf:
            continue
        out.append(lookup[n.label, tuple(c.label for c in n.children if not c.is_epsilon)].id)
        stack.extend(reversed(n.children))
    return out


def test_single_derivation():
    g, t = setup("(S a b)")
    out = parse_sentence(g, t, words("a b"))
    assert write_tree(out.tree) == "(S a b)"
    assert out.probability == 1.0


def test_filter_kills_sibling():
    g, t = setup("(S a a) (S a b)")
    out = parse_sentence(g, t, words("a b"))
    assert write_tree(out.tree) == "(S a b)"
    assert out.probability == 0.5


def test_left_recursion_hits_state_bound():
    g, t = setup(LEFT_RECURSIVE)
    out = parse_sentence(g, t, words("a b b"), BeamConfig(1e-4, max_states_per_word=10))
    assert out.failure == STATE_BOUND
    assert out.tree is None


def test_left_corner_fixes_left_recursion():
    g, t = setup(LEFT_RECURSIVE, "lc,rb1")
    out = parse_sentence(g, t, words("a b b"), BeamConfig(1e-4, max_states_per_word=10))
    assert out.parsed
    assert write_tree(detransform(out.tree)) == "(S (S (S a) b) b)"
    assert out.probability == pytest.approx(0.4 ** 2 * 0.6, rel=1e-12)


def test_unknown_terminal_and_empty_input():
    g, t = setup("(S a b)")
    assert parse_sentence(g, t, words("a z")).failure == NO_PARSE
    assert parse_sentence(g, t, []).failure == NO_PARSE


def test_no_parse():
    g, t = setup("(S a b)")
    out = parse_sentence(g, t, words("b a"))
    assert out.failure == NO_PARSE and out.tree is None and out.probability == 0.0


def test_replay_simple():
    g, _ = setup("(S a b)")
    assert write_tree(replay_history(g, [0])) == "(S a b)"


def test_replay_flat_np_rb0():
    rb0 = apply_pipeline("rb0", normalize(read_trees(FLAT_NP, raw=True).trees[0]))
    g = induce_pcfg([rb0])
    assert replay_history(g, history_of(g, rb0)) == rb0


def test_replay_errors():
    g, _ = setup("(S (A a) b)")
    hist = history_of(g, trees("(S (A a) b)")[0])
    with pytest.raises(ReplayError):
        replay_history(g, hist[:-1])
    with pytest.raises(ReplayError):
        replay_history(g, hist + hist)
    with pytest.raises(ReplayError):
        replay_history(g, [])


def test_replay_probability_matches(toy_train, toy_test):
    ts = [apply_pipeline("rb1", t) for t in toy_train]
    g = induce_pcfg(ts)
    p = PredictiveParser(g, estimate_lookahead(ts, g))
    for t in toy_test[:10]:
        out = p.parse(yield_of(t))
        assert derivation_logprob(g, history_of(g, out.tree)) == out.log_prob
        assert math.exp(out.log_prob) == out.probability


def test_parse_corpus_coverage_and_skips():
    g, t = setup("(S a b)")
    res = parse_corpus(g, t, [words("a b"), words("b b")])
    assert res.coverage == 50.0
    assert parse_corpus(g, t, []).outputs == []
    long = parse_corpus(g, t, [[Symbol("a")] * 41])
    assert long.outputs[0].failure == SKIPPED
    assert long.candidates == 0 and long.skipped == [0]


def test_states_equal_pending_pushes(toy_train, toy_test, monkeypatch):
    ts = [apply_pipeline("rb0", t) for t in toy_train]
    g = induce_pcfg(ts)
    p = PredictiveParser(g, estimate_lookahead(ts, g))
    pushes = []

    class CountingHeap:
        def __getattr__(self, name):
            return getattr(heapq, name)

        @staticmethod
        def heappush(h, item):
            pushes.append(1)
            heapq.heappush(h, item)

    monkeypatch.setattr(parser_mod, "heapq", CountingHeap())
    for t in toy_test[:8]:
        pushes.clear()
        out = p.parse(yield_of(t))
        assert out.states_considered == len(pushes)


def test_determinism(toy_train, toy_test):
    ts = [apply_pipeline("lc,rb1", t) for t in toy_train]
    g = induce_pcfg(ts)
    table = estimate_lookahead(ts, g)
    runs = []
    for _ in range(2):
        p = PredictiveParser(g, table)
        runs.append([(o.states_considered, o.log_prob, o.tree) for o in (p.parse(yield_of(t)) for t in toy_test)])
    assert runs[0] == runs[1]


def test_fom_never_exceeds_probability(toy_train):
    ts = [apply_pipeline("rb0", t) for t in toy_train]
    g = induce_pcfg(ts)
    c = _Compiled(g, estimate_lookahead(ts, g))
    syms = list(range(len(c.symbols)))
    import random

    rng = random.Random(0)
    for _ in range(2000):
        stack = None
        for s in rng.sample(syms, rng.randrange(5)):
            stack = (s, stack)
        assert 0.0 <= c.lap(stack, rng.choice(syms)) <= 1.0


@pytest.mark.parametrize("spec", ["", "rb0", "lc,rb1"])
def test_beam_is_monotone(spec, toy_train, toy_test):
    ts = [apply_pipeline(spec, t) for t in toy_train]
    g = induce_pcfg(ts)
    p = PredictiveParser(g, estimate_lookahead(ts, g))
    for t in toy_test:
        prev = None
        for alpha in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
            out = p.parse(yield_of(t), BeamConfig(alpha))
            if prev is not None:
                assert out.states_considered >= prev.states_considered
                assert out.parsed or not prev.parsed
            prev = out


def test_exhaustive_limit_matches_oracle():
    g, t = setup(AMBIGUOUS)
    p = PredictiveParser(g, t, BeamConfig(1e-12))
    for n in range(1, 5):
        out = p.parse([Symbol("a")] * n)
        tree, prob = mlp_parse(g, [Symbol("a")] * n)
        assert out.tree == tree
        assert out.probability == pytest.approx(prob, rel=1e-12)


def test_beam_config_validation():
    with pytest.raises(ValueError):
        BeamConfig(beam_factor=0)
    with pytest.raises(ValueError):
        BeamConfig(beam_factor=2)
    with pytest.raises(ValueError):
        BeamConfig(max_states_per_word=0)
