"""Balance theory analysis and link sign prediction for signed bipartite networks."""
from .errors import SignedBipartiteError
from .graph import (SignedBipartiteGraph, SplitSpec, parse_edge_list, read_edge_list,
                    signed_degrees, split_edges)
from .motifs import (ButterflyCensus, CaterpillarProfile, BalanceSuggestionMatrix,
                     balance_suggestion_matrix, count_butterflies, count_caterpillars,
                     enumerate_butterflies_bruteforce, expected_fractions, surprise)
from .evaluation import METHODS, auc, f1, generate_planted_graph, grid_search, run_experiment

__all__ = [
    "SignedBipartiteError", "SignedBipartiteGraph", "SplitSpec", "parse_edge_list",
    "read_edge_list", "signed_degrees", "split_edges", "ButterflyCensus", "CaterpillarProfile",
    "BalanceSuggestionMatrix", "balance_suggestion_matrix", "count_butterflies",
    "count_caterpillars", "enumerate_butterflies_bruteforce", "expected_fractions", "surprise",
    "METHODS", "auc", "f1", "generate_planted_graph", "grid_search", "run_experiment",
]
