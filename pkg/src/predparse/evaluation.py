"""Labelled bracket scoring and the summary table for an experiment."""
from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Sequence

from .parser import ParseOutput, SKIPPED
from .treebank import Tree, write_tree, yield_of


class EvaluationError(ValueError):
    pass


def constituents(t: Tree) -> Counter:
    """Multiset of (label, start, end) over the internal nodes of ``t``."""
    out: Counter = Counter()

    def walk(n: Tree, start: int) -> int:
        if n.is_leaf:
            return start if n.is_epsilon else start + 1
        if not n.label.plain:
            raise EvaluationError(f"marked label {n.label} in {write_tree(t)}; detransform before scoring")
        end = start
        for c in n.children:
            end = walk(c, end)
        out[n.label.base, start, end] += 1
        return end

    walk(t, 0)
    return out


def parseval(gold: Tree, candidate: Tree) -> tuple[float, float, int, int, int]:
    """(precision, recall, matched, gold count, candidate count)."""
    if yield_of(gold) != yield_of(candidate):
        raise EvaluationError("gold and candidate trees have different yields")
    g = constituents(gold)
    c = constituents(candidate)
    matched = sum((g & c).values())
    ng, nc = sum(g.values()), sum(c.values())
    return matched / nc, matched / ng, matched, ng, nc


@dataclass
class Report:
    transform: str
    rules_in_grammar: int
    pct_parsed: float
    avg_states: float
    avg_lp_lr: float
    mlp_lp_lr: float
    prob_ratio: float
    precision: float = 0.0
    recall: float = 0.0
    mlp_precision: float = 0.0
    mlp_recall: float = 0.0
    prob_ratio_of_means: float = 0.0
    sentences: int = 0
    parsed: int = 0
    beam_factor: float | None = None


# column headings, in output order
COLUMNS = {
    "transform": "Transform",
    "rules_in_grammar": "Rules in Grammar",
    "pct_parsed": "Pct. of Sentences Parsed",
    "avg_states": "Avg. States Considered",
    "avg_lp_lr": "Avg. Labelled Precision and Recall",
    "mlp_lp_lr": "Avg. MLP Labelled Prec/Rec",
    "prob_ratio": "Ratio of Avg. Prob to Avg. MLP Prob",
    "precision": "Labelled Precision",
    "recall": "Labelled Recall",
    "mlp_precision": "MLP Labelled Precision",
    "mlp_recall": "MLP Labelled Recall",
    "prob_ratio_of_means": "Ratio of Mean Prob to Mean MLP Prob",
    "sentences": "Sentences",
    "parsed": "Parsed",
    "beam_factor": "Beam Factor",
}


def _logsumexp(xs: Sequence[float]) -> float:
    m = max(xs)
    if m == float("-inf"):
        return m
    return m + math.log(math.fsum(math.exp(x - m) for x in xs))


def aggregate(
    golds: Sequence[Tree],
    outputs: Sequence[ParseOutput],
    parses: Sequence[Tree | None],
    mlp_parses: Sequence[tuple[Tree, float] | None],
    rules_in_grammar: int = 0,
    transform: str = "",
    beam_factor: float | None = None,
) -> Report:
    """Summarize one run.

    ``parses`` holds the detransformed parser trees and ``mlp_parses`` the
    detransformed oracle trees with their log probabilities (grammar space),
    all aligned with ``golds``.  Sentences whose output was skipped for
    length are left out entirely.  Accuracy and probability columns are
    taken over the sentences the parser parsed.
    """
    if not len(golds) == len(outputs) == len(parses) == len(mlp_parses):
        raise EvaluationError("gold trees, parser outputs and oracle parses are not aligned")
    candidates = 0
    parsed = 0
    states = 0
    tot = Counter()
    ratios, lps, mlps = [], [], []
    for gold, out, tree, mlp in zip(golds, outputs, parses, mlp_parses):
        if out.failure == SKIPPED:
            continue
        candidates += 1
        states += out.states_considered
        if not out.parsed:
            continue
        if tree is None:
            raise EvaluationError("a parsed sentence has no tree")
        parsed += 1
        _, _, m, ng, nc = parseval(gold, tree)
        tot["m"] += m
        tot["g"] += ng
        tot["c"] += nc
        if mlp is None:
            raise EvaluationError("the parser found a parse the oracle did not")
        mtree, mlp_lp = mlp
        _, _, m, ng, nc = parseval(gold, mtree)
        tot["mm"] += m
        tot["mg"] += ng
        tot["mc"] += nc
        ratios.append(math.exp(out.log_prob - mlp_lp))
        lps.append(out.log_prob)
        mlps.append(mlp_lp)

    def div(a, b):
        return a / b if b else 0.0

    p, r = div(tot["m"], tot["c"]), div(tot["m"], tot["g"])
    mp, mr = div(tot["mm"], tot["mc"]), div(tot["mm"], tot["mg"])
    return Report(
        transform=transform,
        rules_in_grammar=rules_in_grammar,
        pct_parsed=100.0 * div(parsed, candidates),
        avg_states=div(states, candidates),
        avg_lp_lr=(p + r) / 2,
        mlp_lp_lr=(mp + mr) / 2,
        prob_ratio=math.fsum(ratios) / len(ratios) if ratios else 0.0,
        precision=p,
        recall=r,
        mlp_precision=mp,
        mlp_recall=mr,
        prob_ratio_of_means=math.exp(_logsumexp(lps) - _logsumexp(mlps)) if lps else 0.0,
        sentences=candidates,
        parsed=parsed,
        beam_factor=beam_factor,
    )


def _row(rep: Report) -> dict:
    d = asdict(rep)
    return {COLUMNS[k]: ("" if d[k] is None else d[k]) for k in COLUMNS}


def reports_to_csv(reports: Sequence[Report]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(COLUMNS.values()), lineterminator="\n")
    w.writeheader()
    for rep in reports:
        w.writerow(_row(rep))
    return buf.getvalue()


def reports_to_json(reports: Sequence[Report]) -> str:
    return json.dumps([_row(r) for r in reports], indent=2) + "\n"
