"""Sketch-based, error-adaptive influence maximization under Independent Cascade."""
from .diffusion import FrontierState, ReachSet, frontier_stats, simulate
from .errors import ParseError, ValidationError
from .graph import (Constant, CsrGraph, EdgeList, WeightedCascade, assign_weights, build_csr,
                    load_graph, parse_edge_list, parse_weight_model)
from .hashing import (H_MAX, EdgeHashCache, SimulationSet, bias_report, edge_hash, edge_live,
                      murmur3_32, sample_probability)
from .oracle import OracleConfig, OracleScore, greedy_baseline, oracle_influence
from .seeder import ErrorPolicy, SeedResult, exact_reach, select_seeds, should_rebuild
from .sketch import (PHI, SeedSketch, SketchMatrix, count_distinct_registers, estimate,
                     estimate_merged, init_vertex_registers, merge)

__version__ = "0.1.0"
