"""Treebank grammar transforms and an incremental top-down beam parser."""
from importlib import resources

from .evaluation import Report, aggregate, parseval
from .grammar import PCFG, LookaheadTable, estimate_lookahead, induce_pcfg, lap
from .oracle import enumerate_parses, mlp_parse
from .parser import BeamConfig, ParseOutput, PredictiveParser, parse_corpus, parse_sentence
from .symbols import Symbol, parse_symbol, serialize
from .transform import TransformSpec, apply_pipeline, detransform
from .treebank import Tree, normalize, read_file, read_trees, write_tree, yield_of

__version__ = "0.1.0"


def data_path(name: str):
    """Path of a bundled toy treebank, e.g. ``data_path("toy-train.mrg")``."""
    return resources.files(__name__) / "data" / name


__all__ = [
    "BeamConfig", "LookaheadTable", "PCFG", "ParseOutput", "PredictiveParser", "Report", "Symbol", "Tree",
    "TransformSpec", "aggregate", "apply_pipeline", "data_path", "detransform", "enumerate_parses",
    "estimate_lookahead", "induce_pcfg", "lap", "mlp_parse", "normalize", "parse_corpus", "parse_sentence",
    "parse_symbol", "parseval", "read_file", "read_trees", "serialize", "write_tree", "yield_of",
]
