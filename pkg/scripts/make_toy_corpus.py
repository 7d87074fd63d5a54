"""Regenerate the bundled toy treebanks in src/predparse/data.

The trees are sampled from a small hand-written Penn-style grammar with a
fixed seed, so the output is reproducible.  Test trees are kept only if every
rule they use (after normalization) also occurs in the training trees.
"""
from __future__ import annotations

import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from predparse.grammar import induce_pcfg  # noqa: E402
from predparse.treebank import normalize, read_trees, yield_of  # noqa: E402

DATA = ROOT / "src" / "predparse" / "data"

WORDS = {
    "DT": ["the", "a", "every"],
    "NN": ["cat", "dog", "park", "telescope", "idea"],
    "NNS": ["cats", "dogs", "ideas"],
    "NNP": ["Kim", "Sandy"],
    "PRP": ["she", "they"],
    "JJ": ["fat", "happy", "old"],
    "RB": ["very", "quite"],
    "VBD": ["saw", "liked", "said"],
    "VBZ": ["seems", "is"],
    "MD": ["will", "can"],
    "VB": ["see", "like"],
    "IN": ["in", "with", "near"],
    "CC": ["and"],
    "TO": ["to"],
    "WDT": ["that"],
    ".": ["."],
    ",": [","],
}

# category -> weighted expansions; names not in LABEL are written verbatim
RULES = {
    "S": [(6, ["NP-SBJ", "VP", "."]), (3, ["NP-SBJ", "VP"]), (1, ["PP-TMP", ",", "NP-SBJ", "VP", "."]),
          (1, ["S", ",", "CC", "S"])],
    "NP": [(4, ["DT", "NN"]), (3, ["DT", "JJ", "NN"]), (1, ["DT", "JJ", "JJ", "NN"]), (2, ["NNP"]),
           (1, ["NNS"]), (2, ["NP", "PP"]), (1, ["NP", "SBAR"])],
    "NP-SBJ": [(4, ["DT", "NN"]), (2, ["PRP"]), (2, ["NNP"]), (1, ["DT", "JJ", "NN"]), (1, ["NP", "PP-LOC"])],
    "VP": [(4, ["VBD", "NP"]), (2, ["VBD", "NP", "PP-LOC"]), (2, ["VBZ", "ADJP-PRD"]), (2, ["MD", "VP-B"]),
           (1, ["VBD", "SBAR"]), (1, ["VBD", "S-NONE"])],
    "VP-B": [(3, ["VB", "NP"]), (1, ["VB", "NP", "PP"])],
    "S-NONE": [(1, ["NP-SBJ-EMPTY", "VP-TO"])],
    "VP-TO": [(1, ["TO", "VP-B"])],
    "NP-SBJ-EMPTY": [(1, ["NONE*"])],
    "PP": [(1, ["IN", "NP"])],
    "PP-LOC": [(1, ["IN", "NP"])],
    "PP-TMP": [(1, ["IN", "NP"])],
    "ADJP-PRD": [(3, ["JJ"]), (1, ["RB", "JJ"])],
    "SBAR": [(2, ["IN-THAT", "S-EMB"]), (1, ["WHNP", "S-REL"])],
    "IN-THAT": [(1, ["that-IN"])],
    "S-EMB": [(1, ["NP-SBJ", "VP"])],
    "WHNP": [(1, ["WDT"])],
    "S-REL": [(1, ["NP-SBJ", "VP-GAP"])],
    "VP-GAP": [(1, ["VBD", "NP-TRACE"])],
    "NP-TRACE": [(1, ["NONE*T*"])],
}

# category name -> label actually written
LABEL = {
    "VP-B": "VP", "S-NONE": "S", "VP-TO": "VP", "NP-SBJ-EMPTY": "NP-SBJ", "S-EMB": "S", "S-REL": "S",
    "VP-GAP": "VP", "NP-TRACE": "NP", "IN-THAT": "IN",
}

RECURSIVE = {"S", "NP", "SBAR", "PP", "PP-LOC", "VP-B", "S-NONE", "S-EMB", "S-REL"}


def sample(rng: random.Random, cat: str, depth: int) -> str:
    if cat in WORDS:
        return f"({cat} {rng.choice(WORDS[cat])})"
    if cat.startswith("NONE"):
        return f"(-NONE- {cat[4:] or '*'})"
    if cat == "that-IN":
        return "that"
    options = RULES[cat]
    if depth > 3:
        # deep enough: avoid further embedding where possible
        options = [o for o in options if not any(c in RECURSIVE for c in o[1])] or options[:1]
    weights = [w for w, _ in options]
    rhs = rng.choices([r for _, r in options], weights)[0]
    kids = " ".join(sample(rng, c, depth + 1) for c in rhs)
    return f"({LABEL.get(cat, cat)} {kids})"


def rules_of(trees) -> set:
    return {(r.lhs, r.rhs) for r in induce_pcfg(trees).rules}


def main():
    rng = random.Random(20260101)
    train_raw, test_raw = [], []
    train_norm = []
    while len(train_raw) < 240:
        text = "( " + sample(rng, "S", 0) + " )"
        t = normalize(read_trees(text, raw=True).trees[0])
        if len(yield_of(t)) > 18:
            continue
        train_raw.append(text)
        train_norm.append(t)
    seen = rules_of(train_norm)
    while len(test_raw) < 30:
        text = "( " + sample(rng, "S", 0) + " )"
        t = normalize(read_trees(text, raw=True).trees[0])
        if not 3 <= len(yield_of(t)) <= 12 or not rules_of([t]) <= seen:
            continue
        test_raw.append(text)
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "toy-train.mrg").write_text("\n".join(train_raw) + "\n", encoding="utf-8")
    (DATA / "toy-test.mrg").write_text("\n".join(test_raw) + "\n", encoding="utf-8")
    # left-recursive toy: S -> S b (0.4) | a (0.6)
    (DATA / "leftrec-train.mrg").write_text("(S a)\n(S (S a) b)\n(S (S a) b)\n", encoding="utf-8")
    test = []
    for n in range(0, 6):
        t = "(S a)"
        for _ in range(n):
            t = f"(S {t} b)"
        test.append(t)
    (DATA / "leftrec-test.mrg").write_text("\n".join(test) + "\n", encoding="utf-8")
    print(f"wrote {len(train_raw)} training and {len(test_raw)} test trees to {DATA}")


if __name__ == "__main__":
    main()
