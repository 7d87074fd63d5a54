"""Command-line driver: ``predparse experiment|sweep|induce|transform|parse|mlp|eval``."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from .evaluation import EvaluationError, Report, aggregate, parseval, reports_to_csv, reports_to_json
from .grammar import (
    GrammarError, estimate_lookahead, induce_pcfg, read_grammar, read_lookahead, tree_logprob, write_grammar,
    write_lookahead,
)
from .oracle import mlp_parse
from .parser import BeamConfig, PredictiveParser, parse_corpus
from .symbols import Symbol, SymbolError
from .transform import TransformError, TransformSpec, apply_pipeline, detransform
from .treebank import NormalizeError, TreeParseError, normalize, read_trees, write_tree, write_trees, yield_of

log = logging.getLogger("predparse")

EXIT_OK, EXIT_CONFIG, EXIT_PIPELINE = 0, 1, 2


class ConfigError(Exception):
    pass


class PipelineError(Exception):
    def __init__(self, stage: str, item: str, cause: Exception):
        super().__init__(f"{stage} failed on {item}: {cause}")


# ---------------------------------------------------------------------------
# helpers


def _read_text(path) -> str:
    path = Path(path)
    try:
        if path.is_dir():
            # a treebank directory such as wsj/02..21: every .mrg file, in path order
            files = sorted(path.rglob("*.mrg"))
            if not files:
                raise ConfigError(f"no .mrg files under {path}")
            return "\n".join(f.read_text(encoding="utf-8") for f in files)
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def _spec(text: str) -> TransformSpec:
    try:
        return TransformSpec.parse(text)
    except TransformError as exc:
        raise ConfigError(str(exc)) from None


def _alpha(text) -> float:
    try:
        a = float(text)
    except ValueError:
        raise ConfigError(f"beam factor {text!r} is not a number") from None
    if not 0 < a <= 1:
        raise ConfigError(f"beam factor {a} is outside (0, 1]")
    return a


def load_trees(path, input_format: str = "raw", stage: str = "read") -> list:
    """Read a tree file; raw treebank input is normalized on the way in."""
    text = _read_text(path)
    try:
        corpus = read_trees(text, raw=input_format == "raw", source=str(path))
    except TreeParseError as exc:
        raise PipelineError(stage, str(path), exc) from None
    if input_format != "raw":
        return corpus.trees
    out = []
    for t, where in zip(corpus.trees, corpus.provenance):
        try:
            out.append(normalize(t))
        except NormalizeError as exc:
            raise PipelineError("normalize", where, exc) from None
    return out


def transform_all(spec: TransformSpec, trees, stage: str = "transform") -> list:
    out = []
    for i, t in enumerate(trees):
        try:
            out.append(apply_pipeline(spec, t))
        except TransformError as exc:
            raise PipelineError(stage, f"tree {i}", exc) from None
    return out


def _beam(args, alpha: float | None = None) -> BeamConfig:
    if args.max_states < 1:
        raise ConfigError("--max-states must be at least 1")
    return BeamConfig(beam_factor=alpha if alpha is not None else _alpha(args.beam_factor),
                      max_states_per_word=args.max_states)


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc.strerror}") from None
    return out


def _write(path: Path | None, text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _fmt_float(x) -> str:
    return "-inf" if x == float("-inf") else repr(float(x))


# ---------------------------------------------------------------------------
# experiment


class Experiment:
    """A trained grammar with its look-ahead table and test set."""

    def __init__(self, spec: TransformSpec, train: list, test: list):
        self.spec = spec
        self.train = transform_all(spec, train, "transform train")
        try:
            self.grammar = induce_pcfg(self.train)
            self.table = estimate_lookahead(self.train, self.grammar)
        except GrammarError as exc:
            raise PipelineError("induce", "training corpus", exc) from None
        # trees that already carry marks are compared in their original form
        try:
            self.golds = [detransform(t) for t in test]
        except TransformError as exc:
            raise PipelineError("detransform gold", "test corpus", exc) from None
        self.sentences = [yield_of(t) for t in self.golds]
        self.parser = PredictiveParser(self.grammar, self.table)
        self._mlp: dict = {}

    def mlp(self, i: int):
        if i not in self._mlp:
            try:
                res = mlp_parse(self.grammar, self.sentences[i])
            except RecursionError as exc:
                raise PipelineError("mlp", f"sentence {i}", exc) from None
            if res is None:
                self._mlp[i] = None
            else:
                tree, _ = res
                self._mlp[i] = (self._detransform(tree, "mlp", i), tree_logprob(self.grammar, tree))
        return self._mlp[i]

    def _detransform(self, tree, stage, i):
        try:
            return detransform(tree)
        except TransformError as exc:
            raise PipelineError(f"detransform {stage}", f"sentence {i}", exc) from None

    def run(self, config: BeamConfig, max_length: int) -> tuple[Report, list[str]]:
        result = parse_corpus(self.grammar, self.table, self.sentences, config, max_length, self.parser)
        parses, mlps, lines = [], [], []
        for i, out in enumerate(result.outputs):
            tree = self._detransform(out.tree, "parse", i) if out.parsed else None
            mlp = self.mlp(i) if out.parsed else None
            parses.append(tree)
            mlps.append(mlp)
            status = out.failure or "ok"
            lines.append("\t".join([
                str(i), str(len(self.sentences[i])), status, str(out.states_considered),
                _fmt_float(out.log_prob), _fmt_float(mlp[1]) if mlp else "",
                write_tree(tree) if tree is not None else "",
            ]))
        try:
            report = aggregate(
                self.golds, result.outputs, parses, mlps,
                rules_in_grammar=len(self.grammar), transform=str(self.spec) or "none",
                beam_factor=config.beam_factor,
            )
        except EvaluationError as exc:
            raise PipelineError("evaluate", "test corpus", exc) from None
        return report, lines


LOG_HEADER = "sentence\tlength\tstatus\tstates\tlog_prob\tmlp_log_prob\ttree\n"


def _emit_reports(reports, out: Path, name: str, fmt: str):
    text = reports_to_csv(reports) if fmt == "csv" else reports_to_json(reports)
    (out / f"{name}.{fmt}").write_text(text, encoding="utf-8")
    return text


def cmd_experiment(args) -> int:
    specs = [_spec(s) for s in (args.transform or [""])]
    config = _beam(args)
    out = _out_dir(args.out)
    train = load_trees(args.train, args.input_format, "read train")
    test = load_trees(args.test, args.input_format, "read test")
    reports = []
    for spec in specs:
        exp = Experiment(spec, train, test)
        report, lines = exp.run(config, args.max_length)
        reports.append(report)
        tag = str(spec).replace(",", "_") or "none"
        (out / f"sentences-{tag}.tsv").write_text(LOG_HEADER + "".join(l + "\n" for l in lines), encoding="utf-8")
        log.info("%s: %d rules, %.2f%% parsed", report.transform, report.rules_in_grammar, report.pct_parsed)
    sys.stdout.write(_emit_reports(reports, out, "report", args.format))
    return EXIT_OK


def parse_alpha_list(text: str) -> list[float]:
    values = [_alpha(v) for v in text.split(",") if v.strip()]
    if len(values) < 2:
        raise ConfigError("--sweep needs at least two beam factors")
    return sorted(set(values), reverse=True)


def cmd_sweep(args) -> int:
    alphas = parse_alpha_list(args.sweep)
    specs = [_spec(s) for s in (args.transform or [""])]
    out = _out_dir(args.out)
    train = load_trees(args.train, args.input_format, "read train")
    test = load_trees(args.test, args.input_format, "read test")
    reports = []
    for spec in specs:
        exp = Experiment(spec, train, test)
        for a in alphas:
            report, _ = exp.run(_beam(args, a), args.max_length)
            reports.append(report)
    sys.stdout.write(_emit_reports(reports, out, "sweep", args.format))
    return EXIT_OK


# ---------------------------------------------------------------------------
# module-level commands


def cmd_induce(args) -> int:
    spec = _spec(args.transform or "")
    trees = transform_all(spec, load_trees(args.train, args.input_format))
    try:
        g = induce_pcfg(trees)
        table = estimate_lookahead(trees, g)
    except GrammarError as exc:
        raise PipelineError("induce", str(args.train), exc) from None
    out = _out_dir(args.out)
    (out / "grammar.txt").write_text(write_grammar(g), encoding="utf-8")
    (out / "lookahead.txt").write_text(write_lookahead(table), encoding="utf-8")
    print(f"{len(g)} rules written to {out / 'grammar.txt'}")
    return EXIT_OK


def cmd_transform(args) -> int:
    trees = load_trees(args.input, args.input_format)
    if args.detransform:
        try:
            trees = [detransform(t) for t in trees]
        except TransformError as exc:
            raise PipelineError("detransform", str(args.input), exc) from None
    else:
        trees = transform_all(_spec(args.transform or ""), trees)
    _write(args.output, write_trees(trees))
    return EXIT_OK


def _load_grammar(args):
    try:
        g = read_grammar(_read_text(args.grammar))
        table = read_lookahead(_read_text(args.lookahead), g) if getattr(args, "lookahead", None) else None
    except (GrammarError, SymbolError) as exc:
        raise ConfigError(f"bad grammar files: {exc}") from None
    return g, table


def _sentences(path) -> list[list[Symbol]]:
    return [[Symbol(w) for w in line.split()] for line in _read_text(path).splitlines() if line.strip()]


def cmd_parse(args) -> int:
    g, table = _load_grammar(args)
    if table is None:
        raise ConfigError("parse needs --lookahead")
    parser = PredictiveParser(g, table, _beam(args))
    lines = []
    for i, words in enumerate(_sentences(args.input)):
        out = parser.parse(words)
        if not out.parsed:
            lines.append(f"# sentence {i}: {out.failure} ({out.message}); states {out.states_considered}\n")
            continue
        tree = out.tree
        if args.detransform:
            try:
                tree = detransform(tree)
            except TransformError as exc:
                raise PipelineError("detransform", f"sentence {i}", exc) from None
        lines.append(f"{write_tree(tree)}\t{_fmt_float(out.log_prob)}\t{out.states_considered}\n")
    _write(args.output, "".join(lines))
    return EXIT_OK


def cmd_mlp(args) -> int:
    g, _ = _load_grammar(args)
    lines = []
    for i, words in enumerate(_sentences(args.input)):
        res = mlp_parse(g, words)
        if res is None:
            lines.append(f"# sentence {i}: no parse\n")
            continue
        tree, p = res
        if args.detransform:
            tree = detransform(tree)
        lines.append(f"{write_tree(tree)}\t{_fmt_float(math.log(p))}\n")
    _write(args.output, "".join(lines))
    return EXIT_OK


def cmd_eval(args) -> int:
    golds = load_trees(args.gold, args.input_format)
    # candidate files are parser output: canonical trees, optionally followed by tab fields
    text = "\n".join(line.split("\t")[0] for line in _read_text(args.candidate).splitlines() if not line.startswith("#"))
    try:
        cands = read_trees(text).trees
    except TreeParseError as exc:
        raise PipelineError("read candidate", str(args.candidate), exc) from None
    if len(cands) != len(golds):
        raise PipelineError("evaluate", str(args.candidate), EvaluationError(f"{len(cands)} candidates for {len(golds)} gold trees"))
    m = g = c = 0
    for i, (gold, cand) in enumerate(zip(golds, cands)):
        try:
            _, _, mi, gi, ci = parseval(detransform(gold), detransform(cand))
        except (EvaluationError, TransformError) as exc:
            raise PipelineError("evaluate", f"sentence {i}", exc) from None
        m, g, c = m + mi, g + gi, c + ci
    p = m / c if c else 0.0
    r = m / g if g else 0.0
    print(f"precision\t{p!r}\nrecall\t{r!r}\nlp_lr\t{(p + r) / 2!r}\nmatched\t{m}\ngold\t{g}\ncandidate\t{c}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="predparse", description="Treebank grammar transforms and a predictive beam parser.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def io_format(p):
        p.add_argument("--input-format", choices=("raw", "canonical"), default="raw",
                       help="raw: Penn treebank labels, normalized on input; canonical: files written by this tool")

    def beam(p):
        p.add_argument("--beam-factor", default="1e-4")
        p.add_argument("--max-states", type=int, default=100_000, help="per-word bound on rule expansions")

    for name, fn in (("experiment", cmd_experiment), ("sweep", cmd_sweep)):
        p = sub.add_parser(name)
        p.add_argument("--train", required=True)
        p.add_argument("--test", required=True)
        p.add_argument("--transform", action="append", help='pipeline such as "pa,rb0"; repeat for several rows')
        beam(p)
        p.add_argument("--max-length", type=int, default=40)
        p.add_argument("--out", required=True)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        io_format(p)
        if name == "sweep":
            p.add_argument("--sweep", default="1e-3,1e-4,1e-5,1e-6")
        p.set_defaults(func=fn)

    p = sub.add_parser("induce")
    p.add_argument("--train", required=True)
    p.add_argument("--transform", default="")
    p.add_argument("--out", required=True)
    io_format(p)
    p.set_defaults(func=cmd_induce)

    p = sub.add_parser("transform")
    p.add_argument("--input", required=True)
    p.add_argument("--transform", default="")
    p.add_argument("--detransform", action="store_true")
    p.add_argument("--output")
    io_format(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("parse")
    p.add_argument("--grammar", required=True)
    p.add_argument("--lookahead", required=True)
    p.add_argument("--input", required=True, help="one sentence of space-separated terminals per line")
    p.add_argument("--output")
    p.add_argument("--detransform", action="store_true")
    beam(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("mlp")
    p.add_argument("--grammar", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--detransform", action="store_true")
    p.set_defaults(func=cmd_mlp)

    p = sub.add_parser("eval")
    p.add_argument("--gold", required=True)
    p.add_argument("--candidate", required=True)
    io_format(p)
    p.set_defaults(func=cmd_eval)
    return ap


def main(argv=None) -> int:
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"predparse: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PipelineError as exc:
        print(f"predparse: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
