import pytest

from predparse import data_path
from predparse.cli import load_trees
from predparse.grammar import induce_pcfg
from predparse.symbols import Symbol
from predparse.treebank import read_trees


def words(text):
    return [Symbol(w) for w in text.split()]


def trees(text):
    return read_trees(text).trees


def grammar_from(text):
    ts = trees(text)
    return induce_pcfg(ts), ts


# trees inducing P(S -> S S) = 0.4, P(S -> a) = 0.6
AMBIGUOUS = "(S (S (S a) (S a)) (S a))"
# trees inducing P(S -> S b) = 0.4, P(S -> a) = 0.6
LEFT_RECURSIVE = "(S a) (S (S a) b) (S (S a) b)"
FLAT_NP = "(NP (DT the) (JJ fat) (JJ happy) (NN cat))"


@pytest.fixture(scope="session")
def toy_train():
    return load_trees(data_path("toy-train.mrg"))


@pytest.fixture(scope="session")
def toy_test():
    return load_trees(data_path("toy-test.mrg"))


@pytest.fixture(scope="session")
def fixture_trees(toy_train, toy_test):
    return toy_train + toy_test + trees(LEFT_RECURSIVE) + trees(AMBIGUOUS)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
