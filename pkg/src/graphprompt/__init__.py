"""Compile attributed graphs into tree-structured LLM prompts and evaluate node classification."""

from .config import RunConfig, load_config
from .evaluation import EvalReport, ablation_sweep, nshot_sweep, run_eval
from .graph import Graph, GraphError, Split, load_graph, load_split
from .parsing import Prediction, parse_answer
from .pipeline import Compiler

__version__ = "0.1.0"

__all__ = [
    "Compiler",
    "EvalReport",
    "Graph",
    "GraphError",
    "Prediction",
    "RunConfig",
    "Split",
    "ablation_sweep",
    "load_config",
    "load_graph",
    "load_split",
    "nshot_sweep",
    "parse_answer",
    "run_eval",
]
