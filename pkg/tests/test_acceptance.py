"""Acceptance criteria 1-8.

Each test records a PASS/FAIL line; the lines are printed together at the
end of the pytest run (see conftest.py), and also when this file is run as
a script.  Criterion 8 needs the Penn Treebank: set PREDPARSE_WSJ_TRAIN to
sections 02-21 and PREDPARSE_WSJ_TEST to section 23 (files or directories
of .mrg files).
"""
import functools
import itertools
import math
import os
import random
import time

import pytest

from conftest import AMBIGUOUS, FLAT_NP, LEFT_RECURSIVE, trees, words
from test_grammar import grammar_first_probs
from predparse import data_path
from predparse.cli import Experiment, load_trees
from predparse.evaluation import aggregate, parseval
from predparse.grammar import LookaheadTable, END, estimate_lookahead, induce_pcfg, lap
from predparse.oracle import enumerate_parses, mlp_parse
from predparse.parser import STATE_BOUND, BeamConfig, PredictiveParser, parse_corpus
from predparse.symbols import Symbol
from predparse.transform import TransformSpec, apply_pipeline, detransform
from predparse.treebank import normalize, read_trees, write_tree, yield_of

RESULTS: dict = {}


def record(number, name):
    """Run the body, noting PASS or FAIL for the criterion."""

    def wrap(fn):
        @functools.wraps(fn)
        def test(*args, **kwargs):
            start = time.perf_counter()
            try:
                fn(*args, **kwargs)
            except pytest.skip.Exception:
                RESULTS[number] = f"SKIP criterion {number} ({name}): Penn Treebank not supplied"
                raise
            except BaseException as exc:
                RESULTS[number] = f"FAIL criterion {number} ({name}): {type(exc).__name__}: {str(exc)[:200]}"
                raise
            RESULTS[number] = f"PASS criterion {number} ({name}) in {time.perf_counter() - start:.2f}s"

        return test

    return wrap


@record(1, "flat NP binarizations")
def test_criterion_1_flat_np():
    start = time.perf_counter()
    t = normalize(read_trees(FLAT_NP, raw=True).trees[0])
    expected = {
        "lb": "(NP (DT+JJ+JJ (DT+JJ DT JJ) JJ) NN)",
        "rb2": "(NP DT (NP-DT JJ (NP-DT-JJ JJ NN)))",
        "rb1": "(NP DT (NP-DT JJ (NP-DT-JJ JJ (NP-DT-JJ-JJ NN))))",
        "rb0": "(NP DT (NP-DT JJ (NP-DT-JJ JJ (NP-DT-JJ-JJ NN (NP-DT-JJ-JJ-NN -NONE-)))))",
    }
    for spec, text in expected.items():
        out = apply_pipeline(spec, t)
        assert write_tree(out) == text
        assert read_trees(text).trees == [out]
    assert time.perf_counter() - start < 1.0


PIPELINES = ["lb", "rb2", "rb1", "rb0", "lc", "pa", "lca", "pa,rb0", "lc,rb1", "lc,rb1,ann", "rb2,lc", "lca,rb0",
             "pa,lc,rb1"]


@record(2, "round trip over 13 pipelines")
def test_criterion_2_round_trip(fixture_trees):
    start = time.perf_counter()
    assert len(fixture_trees) >= 200
    for spec in PIPELINES:
        for t in fixture_trees:
            out = apply_pipeline(spec, t)
            assert yield_of(out) == yield_of(t), (spec, write_tree(t))
            assert detransform(out) == t, (spec, write_tree(t))
    assert time.perf_counter() - start < 10.0


def _all_strings(terminals, max_len):
    for n in range(1, max_len + 1):
        yield from (list(p) for p in itertools.product(sorted(terminals), repeat=n))


def _oracle_cases(toy_train, toy_test):
    """(name, grammar, table, sentences) for the oracle comparison."""
    cases = []

    def add(name, ts, sentences=None):
        g = induce_pcfg(ts)
        cases.append((name, g, estimate_lookahead(ts, g), sentences or list(_all_strings(g.terminals, 6))))

    add("S -> S S | a", trees(AMBIGUOUS))
    add("S -> a b", trees("(S a b) (S a (S a b) b)"))
    add("left recursion, lc,rb1", [apply_pipeline("lc,rb1", t) for t in trees(LEFT_RECURSIVE)])
    attach = trees("(S (NP n) (VP v (NP n) (PP p (NP n)))) (S (NP n) (VP v (NP (NP n) (PP p (NP n))))) "
                   "(S (NP n) (VP v)) (S (NP (NP n) (PP p (NP n))) (VP v))")
    add("attachment, rb0", [apply_pipeline("rb0", t) for t in attach])
    add("unary and empty", trees("(S (A (B a)) (C -NONE-)) (S (A a) (C c)) (S (A (B a)) (C c)) (S (B a) (A a))"))
    short = [yield_of(t) for t in toy_train + toy_test if len(yield_of(t)) <= 6]
    add("toy treebank, rb1", [apply_pipeline("rb1", t) for t in toy_train], short)
    return cases


@record(3, "oracle equivalence")
def test_criterion_3_oracle_equivalence(toy_train, toy_test):
    start = time.perf_counter()
    # the headline value, exactly in log space
    g = induce_pcfg(trees(AMBIGUOUS))
    out = PredictiveParser(g, estimate_lookahead(trees(AMBIGUOUS), g), BeamConfig(1e-12)).parse(words("a a a"))
    assert out.log_prob == math.fsum([math.log(1.0)] + [math.log(0.4)] * 2 + [math.log(0.6)] * 3)
    assert out.probability == pytest.approx(0.03456, rel=1e-12)
    cases = _oracle_cases(toy_train, toy_test)
    assert len(cases) >= 5
    compared = 0
    for name, g, table, sentences in cases:
        parser = PredictiveParser(g, table, BeamConfig(1e-12, max_states_per_word=10 ** 7))
        for w in sentences:
            res = mlp_parse(g, w)
            out = parser.parse(w)
            if res is None:
                assert not out.parsed, (name, w)
                continue
            tree, p = res
            assert out.parsed, (name, w, out.failure)
            assert out.tree == tree, (name, w)
            assert out.probability == pytest.approx(p, rel=1e-12), (name, w)
            best = max(q for _, q in enumerate_parses(g, w, cap=100_000))
            assert best == pytest.approx(p, rel=1e-12), (name, w)
            compared += 1
    assert compared > 50
    assert time.perf_counter() - start < 30.0


@record(4, "left recursion")
def test_criterion_4_left_recursion():
    start = time.perf_counter()
    train = load_trees(data_path("leftrec-train.mrg"))
    test = load_trees(data_path("leftrec-test.mrg"))
    sentences = [yield_of(t) for t in test]
    cfg = BeamConfig(1e-4, max_states_per_word=10)
    g = induce_pcfg(train)
    assert {str(r): r.prob for r in g.rules} == {"S -> S b": 0.4, "S -> a": 0.6}
    plain = parse_corpus(g, estimate_lookahead(train, g), sentences, cfg)
    assert all(o.failure == STATE_BOUND for o in plain.outputs)
    lc = [apply_pipeline("lc,rb1", t) for t in train]
    g2 = induce_pcfg(lc)
    fixed = parse_corpus(g2, estimate_lookahead(lc, g2), sentences, cfg)
    assert fixed.coverage == 100.0
    for gold, out in zip(test, fixed.outputs):
        w = yield_of(gold)
        (only,) = enumerate_parses(g, w)
        assert detransform(out.tree) == gold == only[0]
        assert out.probability == pytest.approx(only[1], rel=1e-12)
    assert fixed.outputs[2].probability == pytest.approx(0.096, rel=1e-12)
    assert time.perf_counter() - start < 5.0


@record(5, "look-ahead probability")
def test_criterion_5_lap():
    rng = random.Random(5)
    terms = [Symbol(f"t{i}") for i in range(4)]
    for _ in range(2000):
        cats = [Symbol(f"C{i}") for i in range(rng.randint(1, 6))]
        first, empty = {}, {}
        for c in cats:
            weights = [rng.random() for _ in range(5)]
            if rng.random() < 0.4:
                weights[4] = 0.0
            total = sum(weights)
            first[c] = {t: w / total for t, w in zip(terms, weights)}
            empty[c] = weights[4] / total
        table = LookaheadTable(first, empty, {}, frozenset(), frozenset(terms))
        stack = [rng.choice(cats) for _ in range(rng.randint(0, 7))]
        omega = rng.choice(terms + [END])
        val = lap(stack, omega, table)
        assert 0.0 <= val <= 1.0
        # the recursion, evaluated independently from the top down
        def rec(s):
            if not s:
                return 1.0 if omega == END else 0.0
            return table.first(s[0], omega) + table.empty(s[0]) * rec(s[1:])
        assert val == pytest.approx(min(1.0, rec(stack)), rel=1e-12, abs=1e-15)
    corpora = [
        "(S (A a) (B b)) (S (A -NONE-) (B b))",
        "(S (A a) (A a)) (S (A a) (B b))",
        "(NP DT (NP-DT JJ (NP-DT-JJ NN (NP-DT-JJ-NN -NONE-))))",
    ]
    for text in corpora:
        ts = read_trees(text).trees
        g = induce_pcfg(ts)
        table = estimate_lookahead(ts, g)
        F, E = grammar_first_probs(g)
        for c in g.nonterminals:
            assert abs(table.empty(c) - E[c]) <= 1e-9
            for w in g.terminals:
                assert abs(table.first(c, w) - F[c].get(w, 0.0)) <= 1e-9


SWEEP = [1e-3, 1e-4, 1e-5, 1e-6]
SWEEP_SPECS = ["", "lb", "rb2", "rb1", "rb0", "lc", "lc,rb1", "lc,rb1,ann", "pa,rb0", "lca,rb0"]


@record(6, "beam monotonicity")
def test_criterion_6_beam_sweep(toy_train, toy_test):
    start = time.perf_counter()
    sentences = [yield_of(t) for t in toy_test]
    for spec in SWEEP_SPECS:
        ts = [apply_pipeline(spec, t) for t in toy_train]
        g = induce_pcfg(ts)
        parser = PredictiveParser(g, estimate_lookahead(ts, g))
        prev = None
        for alpha in SWEEP:
            res = parse_corpus(g, None, sentences, BeamConfig(alpha), parser=parser)
            states = sum(o.states_considered for o in res.outputs) / res.candidates
            if prev is not None:
                assert states >= prev[0], (spec, alpha)
                assert res.coverage >= prev[1], (spec, alpha)
            prev = (states, res.coverage)
    assert time.perf_counter() - start < 60.0


@record(7, "evaluation")
def test_criterion_7_evaluation(fixture_trees, toy_train, toy_test):
    gold, cand = trees("(S (NP DT NN) (VP VB)) (S (NP DT) (VP NN VB))")
    p, r, *_ = parseval(gold, cand)
    assert p == 1 / 3 and r == 1 / 3
    for t in fixture_trees:
        assert parseval(t, t)[:2] == (1.0, 1.0)
    exp = Experiment(TransformSpec.parse("rb0"), toy_train, toy_test)
    report, _ = exp.run(BeamConfig(1e-6), 40)
    assert report.pct_parsed == 100.0
    assert report.prob_ratio == 1.0


# reference rows: (pipeline, rules, coverage, states, lp/lr)
WSJ_ROWS = {
    "RB0": ("rb0", 41084, 97.37, 13868, 0.73207),
    "LC o RB": ("lc,rb1", 53494, 96.7, 8125, 0.77830),
    "PA o LC o RB": ("pa,lc,rb1", 80245, 93.52, 4455, 0.81144),
}


@record(8, "WSJ reproduction")
def test_criterion_8_wsj():
    train_path, test_path = os.environ.get("PREDPARSE_WSJ_TRAIN"), os.environ.get("PREDPARSE_WSJ_TEST")
    if not (train_path and test_path):
        pytest.skip("set PREDPARSE_WSJ_TRAIN and PREDPARSE_WSJ_TEST to run the WSJ reproduction")
    train, test = load_trees(train_path), load_trees(test_path)
    for name, (spec, rules, coverage, states, lplr) in WSJ_ROWS.items():
        exp = Experiment(TransformSpec.parse(spec), train, test)
        report, _ = exp.run(BeamConfig(1e-4), 40)
        print(f"{name}: rules {report.rules_in_grammar} (reference {rules}), coverage {report.pct_parsed:.2f} "
              f"(reference {coverage}), states {report.avg_states:.0f} (reference {states}), "
              f"LP/LR {report.avg_lp_lr:.5f} (reference {lplr})")
        assert abs(report.pct_parsed - coverage) <= 1.0, name
        assert abs(report.avg_lp_lr - lplr) <= 0.01, name
        assert abs(report.avg_states - states) <= 0.25 * states, name
        # preprocessing choices move the rule count; require it only on request
        if os.environ.get("PREDPARSE_WSJ_EXACT_RULES"):
            assert report.rules_in_grammar == rules, name


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
