"""Command-line frontend: select, evaluate, bias-stats, bench."""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import math
import os
import resource
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .diffusion import DEFAULT_EPS_C, MODES
from .errors import ValidationError
from .graph import CsrGraph, assign_weights, build_csr, load_graph, parse_weight_model
from .hashing import SimulationSet, bias_report
from .oracle import DEFAULT_R, OracleConfig, oracle_influence, write_scores_csv
from .seeder import DEFAULT_EPS_G, DEFAULT_EPS_L, DEFAULT_J, ErrorPolicy, select_seeds
from . import synthetic

log = logging.getLogger("sketchim")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INVALID = 4
FORMAT_VERSION = 1

BENCH_COLUMNS = [
    "format_version", "graph", "w", "K", "J", "policy", "eps_l", "eps_g", "eps_c",
    "master_seed", "wall_time_s", "peak_rss_mb", "builds", "rebuilds", "sigma_final",
    "oracle_mean", "oracle_stderr", "oracle_R",
]


def _float(x: float):
    return "inf" if math.isinf(x) else x


@dataclass
class RunConfig:
    graph_path: str
    directed: bool = True
    weights: str = "const:0.01"
    K: int = 50
    J: int = DEFAULT_J
    eps_l: float = DEFAULT_EPS_L
    eps_g: float = DEFAULT_EPS_G
    eps_c: float = DEFAULT_EPS_C
    master_seed: int = 0
    threads: Optional[int] = None
    mode: str = "strict"
    output: Optional[str] = None

    def validate(self) -> None:
        parse_weight_model(self.weights)
        if self.K < 0:
            raise ValidationError(f"--k must be >= 0, got {self.K}")
        if self.J < 1:
            raise ValidationError(f"--J must be >= 1, got {self.J}")
        if min(self.eps_l, self.eps_g, self.eps_c) < 0:
            raise ValidationError("error thresholds must be >= 0")
        if self.mode not in MODES:
            raise ValidationError(f"--mode must be one of {MODES}")
        if self.threads is not None and self.threads < 1:
            raise ValidationError("--threads must be >= 1")

    @property
    def policy(self) -> ErrorPolicy:
        return ErrorPolicy(self.eps_l, self.eps_g, self.eps_c)

    def echo(self) -> dict:
        # threads is deliberately left out: results must not depend on it
        return {
            "graph": self.graph_path, "directed": self.directed, "weights": self.weights,
            "K": self.K, "J": self.J, "eps_l": _float(self.eps_l), "eps_g": _float(self.eps_g),
            "eps_c": _float(self.eps_c), "master_seed": self.master_seed, "mode": self.mode,
        }


def open_graph(spec: str, directed: bool, weights: Optional[str]) -> CsrGraph:
    """Load a file, or generate one from ``gen:<kind>:<params>``."""
    model = parse_weight_model(weights) if weights else None
    if spec.startswith("gen:"):
        edges = synthetic.from_spec(spec[4:])
        if model is not None:
            edges = assign_weights(edges, model)
        return build_csr(edges)
    return load_graph(spec, directed=directed, model=model)


@contextmanager
def _output(path: Optional[str]):
    """Yield a text stream; files appear only once everything was written."""
    if path in (None, "-"):
        yield sys.stdout
        sys.stdout.flush()
        return
    tmp = f"{path}.partial"
    try:
        with open(tmp, "w", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def _write(text: str, path: Optional[str]) -> None:
    with _output(path) as fh:
        fh.write(text)


def _step_table(result, graph: CsrGraph) -> str:
    lines = [f"{'k':>3} {'vertex':>10} {'e':>10} {'delta':>10} {'sigma':>10} "
             f"{'err_l':>8} {'err_g':>8} rebuilt"]
    for k, s in enumerate(result.steps, start=1):
        lines.append(f"{k:>3} {int(graph.ids[s.vertex]):>10} {s.estimate:>10.3f} {s.delta:>10.3f} "
                     f"{s.sigma:>10.3f} {s.err_l:>8.4f} {s.err_g:>8.4f} {s.rebuilt}")
    return "\n".join(lines)


def cmd_select(cfg: RunConfig) -> int:
    cfg.validate()
    graph = open_graph(cfg.graph_path, cfg.directed, cfg.weights)
    sims = SimulationSet.from_seed(cfg.J, cfg.master_seed)
    t0 = time.perf_counter()
    result = select_seeds(graph, cfg.K, sims, cfg.policy, cfg.mode, cfg.threads)
    log.info("selected %d seeds in %.3fs (%d sketch builds)",
             len(result.seeds), time.perf_counter() - t0, result.builds)
    if result.steps:
        log.info("\n%s", _step_table(result, graph))
    _write(result.to_json(graph, cfg.echo()), cfg.output)
    return EXIT_OK


def read_seed_file(path: str) -> list[int]:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict) and "seeds" in doc:
        return [int(x) for x in doc["seeds"]]
    if isinstance(doc, list):
        return [int(x) for x in doc]
    try:
        return [int(tok) for tok in text.replace(",", " ").split()]
    except ValueError:
        raise ValidationError(f"{path}: expected whitespace-separated vertex ids") from None


def cmd_evaluate(args) -> int:
    graph = open_graph(args.graph, not args.undirected, args.w)
    labels = read_seed_file(args.seeds)
    seeds = graph.index_of(labels)
    config = OracleConfig(args.R, args.rng_seed)
    if args.prefixes:
        scores = [oracle_influence(graph, seeds[:k], config, args.threads)
                  for k in range(1, len(seeds) + 1)]
    else:
        scores = [oracle_influence(graph, seeds, config, args.threads)]
    final = scores[-1] if scores else oracle_influence(graph, [], config)
    print(f"{final.mean:.4f} ± {final.stderr:.4f} (|S|={final.seed_set_size}, R={final.R})")
    if args.output:
        with _output(args.output) as fh:
            write_scores_csv(scores, fh)
    return EXIT_OK


def cmd_bias_stats(args) -> int:
    # sampling probabilities do not depend on edge weights; const:1 accepts raw weighted files
    graph = open_graph(args.graph, not args.undirected, "const:1.0")
    sims = SimulationSet.from_seed(args.J, args.seed)
    report = bias_report(graph, sims, args.samples, args.bins)
    log.info("draws=%d max_deviation=%.6f", report.draws, report.max_deviation)
    with _output(args.output) as fh:
        report.write_csv(fh)
    return EXIT_OK


def _policy_from_spec(spec) -> tuple[str, ErrorPolicy]:
    if isinstance(spec, str):
        named = {
            "default": ErrorPolicy(),
            "never": ErrorPolicy.never_rebuild(),
            "always": ErrorPolicy.always_rebuild(),
        }
        if spec not in named:
            raise ValidationError(f"unknown policy {spec!r}")
        return spec, named[spec]
    p = ErrorPolicy(float(spec.get("eps_l", DEFAULT_EPS_L)), float(spec.get("eps_g", DEFAULT_EPS_G)),
                    float(spec.get("eps_c", DEFAULT_EPS_C)))
    return spec.get("name", f"l{p.eps_l}-g{p.eps_g}-c{p.eps_c}"), p


def run_sweep(sweep: dict, threads: Optional[int] = None):
    """Yield one result row per (graph, w, K, J, policy, seed) combination."""
    graphs = sweep.get("graphs") or []
    if not graphs:
        raise ValidationError("sweep needs at least one graph")
    oracle = sweep.get("oracle", {})
    ocfg = OracleConfig(int(oracle.get("R", DEFAULT_R)), int(oracle.get("rng_seed", 0)))
    mode = sweep.get("mode", "strict")
    policies = [_policy_from_spec(p) for p in sweep.get("policies", ["default"])]
    for gspec, w in itertools.product(graphs, sweep.get("weights", ["const:0.01"])):
        if isinstance(gspec, str):
            gspec = {"path": gspec}
        name = gspec.get("path") or "gen:" + gspec["generator"]
        graph = open_graph(name, gspec.get("directed", True), w)
        for K, J, (pname, policy), seed in itertools.product(
                sweep.get("K", [50]), sweep.get("J", [DEFAULT_J]), policies, sweep.get("seeds", [0])):
            sims = SimulationSet.from_seed(int(J), int(seed))
            t0 = time.perf_counter()
            result = select_seeds(graph, min(int(K), graph.n), sims, policy, mode, threads)
            wall = time.perf_counter() - t0
            score = oracle_influence(graph, result.seeds, ocfg, threads)
            yield {
                "format_version": FORMAT_VERSION, "graph": name, "w": w, "K": K, "J": J,
                "policy": pname, "eps_l": _float(policy.eps_l), "eps_g": _float(policy.eps_g),
                "eps_c": policy.eps_c, "master_seed": seed, "wall_time_s": f"{wall:.4f}",
                "peak_rss_mb": f"{resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024:.1f}",
                "builds": result.builds, "rebuilds": result.rebuilds,
                "sigma_final": f"{result.sigma_final:.4f}", "oracle_mean": f"{score.mean:.4f}",
                "oracle_stderr": f"{score.stderr:.4f}", "oracle_R": score.R,
            }


def cmd_bench(args) -> int:
    sweep = json.loads(Path(args.sweep).read_text())
    with _output(args.output) as out:
        writer = csv.DictWriter(out, fieldnames=BENCH_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in run_sweep(sweep, args.threads):
            writer.writerow(row)
            out.flush()
    return EXIT_OK


def _env_int(name: str, default: Optional[int]) -> Optional[int]:
    val = os.environ.get(name)
    return int(val) if val else default


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sketchim", description=(
        "Sketch-based influence maximization under the Independent Cascade model."))
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    ap.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    sub = ap.add_subparsers(dest="command", required=True)

    def graph_args(p, weights=True):
        p.add_argument("--graph", required=True,
                       help="edge list, CSR1 cache, or gen:<kind>:<k=v,...> generator spec")
        p.add_argument("--undirected", action="store_true", help="emit both directions per line")
        if weights:
            p.add_argument("--w", default="const:0.01",
                           help="weight model: const:<w> or wc (default const:0.01)")

    threads_default = _env_int("SKETCHIM_THREADS", None)

    s = sub.add_parser("select", help="pick K seeds")
    graph_args(s)
    s.add_argument("--k", type=int, default=50, help="number of seeds (default 50)")
    s.add_argument("--J", type=int, default=DEFAULT_J, help="simulations / registers (default 256)")
    s.add_argument("--eps-l", type=float, default=DEFAULT_EPS_L, help="local error threshold (0.3)")
    s.add_argument("--eps-g", type=float, default=DEFAULT_EPS_G, help="global error threshold (0.01)")
    s.add_argument("--eps-c", type=float, default=DEFAULT_EPS_C, help="early-exit ratio (0.02)")
    s.add_argument("--seed", type=int, default=_env_int("SKETCHIM_SEED", 0),
                   help="master seed for simulation salts (env SKETCHIM_SEED, default 0)")
    s.add_argument("--threads", type=int, default=threads_default,
                   help="worker threads (env SKETCHIM_THREADS, default all cores)")
    s.add_argument("--mode", choices=MODES, default="strict",
                   help="strict: deterministic snapshot iterations; relaxed: in-place reads")
    s.add_argument("--output", "-o", help="write SeedResult JSON here (default stdout)")
    s.set_defaults(func=lambda a: cmd_select(RunConfig(
        a.graph, not a.undirected, a.w, a.k, a.J, a.eps_l, a.eps_g, a.eps_c, a.seed,
        a.threads, a.mode, a.output)))

    e = sub.add_parser("evaluate", help="oracle influence of a seed set")
    graph_args(e)
    e.add_argument("--seeds", required=True, help="SeedResult JSON or whitespace-separated ids")
    e.add_argument("--R", type=int, default=DEFAULT_R, help="Monte-Carlo rounds (default 10000)")
    e.add_argument("--rng-seed", type=int, default=_env_int("SKETCHIM_SEED", 0),
                   help="mt19937 base seed (default 0)")
    e.add_argument("--prefixes", action="store_true", help="score every prefix S[:k]")
    e.add_argument("--threads", type=int, default=threads_default)
    e.add_argument("--output", "-o", help="CSV: seed_set_size,mean,stderr,R")
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bias-stats", help="uniformity of hash-based sampling probabilities")
    graph_args(b, weights=False)
    b.add_argument("--J", type=int, default=DEFAULT_J)
    b.add_argument("--samples", type=int, default=None, help="number of (edge, r) draws (default all)")
    b.add_argument("--bins", type=int, default=100)
    b.add_argument("--seed", type=int, default=_env_int("SKETCHIM_SEED", 0))
    b.add_argument("--output", "-o", help="CSV path (default stdout)")
    b.set_defaults(func=cmd_bias_stats)

    w = sub.add_parser("bench", help="run a JSON sweep and emit one CSV row per configuration")
    w.add_argument("--sweep", required=True, help="sweep description (JSON)")
    w.add_argument("--threads", type=int, default=threads_default)
    w.add_argument("--output", "-o", help="CSV path (default stdout)")
    w.set_defaults(func=cmd_bench)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, TypeError) as exc:  # ValidationError, bad JSON, bad sweep
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
