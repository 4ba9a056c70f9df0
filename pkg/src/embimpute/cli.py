"""Command-line front end: impute, graph-stats, eval knn, synth.

Exit codes: 0 success, 1 validation or usage failure (single-line
diagnostic on stderr), 2 imputation hit the iteration cap without
converging (output still written). Tables go to stdout as TSV; everything
diagnostic goes to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, ValidationError
from .embedding_io import (
    load_domain_csv,
    load_embeddings,
    load_labels_csv,
    save_embeddings,
)
from .evaluation import (
    LabeledEmbeddings,
    SyntheticTransferSpec,
    knn_accuracy,
    run_synthetic_transfer,
    sensitivity_sweep,
)
from .imputation_engine import ImputationConfig
from .manifold_graph import build_graph, graph_stats
from .domain_geometry import euclidean_distance_matrix
from .pipeline import impute_embeddings
from .weight_solver import write_coordinate_text


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


@dataclass
class RunManifest:
    """Machine-readable record of one impute run, as key=value lines."""

    config: dict = field(default_factory=dict)
    digests: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    convergence: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = []
        for key, value in self.config.items():
            out.append(f"{key}={value}")
        for key, value in self.digests.items():
            out.append(f"{key}_sha256={value}")
        for key, value in self.timings.items():
            out.append(f"time_{key}={value:.6f}")
        for key, value in self.convergence.items():
            out.append(f"{key}={value}")
        return out

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.lines():
                fh.write(line + "\n")


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _bool_text(flag: bool) -> str:
    return "true" if flag else "false"


def _cmd_impute(args) -> int:
    config = ImputationConfig(
        eta=args.eta, max_iter=args.max_iter, seed=args.seed, init_sigma=args.init_sigma
    )
    timings = {}
    start = time.perf_counter()
    domain = load_domain_csv(args.domain)
    table = load_embeddings(args.embeddings)
    timings["load"] = time.perf_counter() - start

    progress = sys.stderr if args.progress else None
    run = impute_embeddings(
        domain, table, delta=args.delta, config=config, workers=args.threads,
        progress=progress,
    )
    timings.update(run.timings)

    start = time.perf_counter()
    save_embeddings(run.table, args.out)
    timings["save"] = time.perf_counter() - start

    if args.dump_weights:
        if run.weights is None:
            print("note: nothing to impute; no weight matrix to dump", file=sys.stderr)
        else:
            write_coordinate_text(run.weights, args.dump_weights)

    result = run.result
    if args.manifest:
        manifest = RunManifest(
            config={
                "domain": args.domain,
                "embeddings": args.embeddings,
                "out": args.out,
                "delta": args.delta,
                "eta": args.eta,
                "max_iter": args.max_iter,
                "seed": args.seed,
                "init_sigma": args.init_sigma,
                "threads": args.threads,
            },
            digests={"domain": _sha256(args.domain), "embeddings": _sha256(args.embeddings)},
            timings=timings,
            convergence={
                "n": run.problem.p + run.problem.q,
                "p": run.problem.p,
                "q": run.problem.q,
                "iterations": result.iterations,
                "final_relative_change": f"{result.final_relative_change:.17g}",
                "converged": _bool_text(result.converged),
            },
        )
        manifest.write(args.manifest)

    print(
        f"imputed {run.problem.q} of {run.problem.p + run.problem.q} entities "
        f"in {result.iterations} iterations "
        f"(converged={_bool_text(result.converged)})",
        file=sys.stderr,
    )
    return 0 if result.converged else 2


def _cmd_graph_stats(args) -> int:
    domain = load_domain_csv(args.domain)
    graph = build_graph(euclidean_distance_matrix(domain), args.delta)
    stats = graph_stats(graph)
    for key in ("vertices", "edges", "min_in_degree", "max_in_degree"):
        print(f"{key}={stats[key]}")
    print(f"connected={_bool_text(stats['connected'])}")
    return 0


def _cmd_eval_knn(args) -> int:
    table = load_embeddings(args.embeddings)
    labels = load_labels_csv(args.labels)
    tokens = [tok for tok in table.entries if tok in labels]
    if not tokens:
        raise ValidationError("no embedding token has a label")
    names = tuple(sorted({labels[tok] for tok in tokens}))
    code = {name: j for j, name in enumerate(names)}
    data = LabeledEmbeddings(
        np.array([table.entries[tok] for tok in tokens]),
        np.array([code[labels[tok]] for tok in tokens]),
        names,
    )
    try:
        ks = [int(v) for v in args.k.split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse k list '{args.k}'") from None
    if not ks:
        raise ValidationError("at least one k value is required")
    print("k\taccuracy")
    for k in ks:
        print(f"{k}\t{knn_accuracy(data, k):.3f}")
    return 0


def _cmd_synth(args) -> int:
    spec = SyntheticTransferSpec(
        n=args.n,
        p=args.p,
        manifold_dim=args.manifold_dim,
        affinity_dim=args.affinity_dim,
        semantic_dim=args.semantic_dim,
        noise_sigma=args.noise_sigma,
        n_labels=args.n_labels,
        seed=args.seed,
    )
    config = ImputationConfig(
        eta=args.eta, max_iter=args.max_iter, seed=args.seed, init_sigma=args.init_sigma
    )
    if args.sweep:
        if not args.sweep_values:
            raise ValidationError("--sweep requires --sweep-values")
        values = [float(v) for v in args.sweep_values.split(",") if v.strip()]
        table = sensitivity_sweep(args.sweep, values, spec, config, args.delta, args.knn_k)
        print(f"{args.sweep}\taccuracy")
        for value, accuracy in table:
            print(f"{value:g}\t{accuracy:.3f}")
        return 0
    report = run_synthetic_transfer(spec, config, args.delta, args.knn_k)
    print("n\tp\tq\tk\timputed_accuracy\ttruth_accuracy\tbaseline_accuracy\titerations\tconverged")
    print(
        f"{report.n}\t{report.p}\t{report.q}\t{report.k}"
        f"\t{report.imputed_accuracy:.3f}\t{report.truth_accuracy:.3f}"
        f"\t{report.baseline_accuracy:.3f}\t{report.iterations}"
        f"\t{_bool_text(report.converged)}"
    )
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="embimpute", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    impute = sub.add_parser("impute", help="recover missing embedding vectors")
    impute.add_argument("--domain", required=True, help="domain matrix CSV")
    impute.add_argument("--embeddings", required=True, help="embedding text file")
    impute.add_argument("--out", required=True, help="output embedding path")
    impute.add_argument("--delta", type=int, default=8, help="graph minimum in-degree")
    impute.add_argument("--eta", type=float, default=1e-2, help="relative-change stop threshold")
    impute.add_argument("--max-iter", type=int, default=1000)
    impute.add_argument("--seed", type=int, default=0)
    impute.add_argument("--init-sigma", type=float, default=0.1)
    impute.add_argument("--threads", type=int, default=os.cpu_count())
    impute.add_argument("--manifest", default=None, help="write key=value run record here")
    impute.add_argument("--dump-weights", default=None, help="dump weight matrix as 'i j w' text")
    impute.add_argument("--progress", action="store_true", help="per-iteration lines on stderr")
    impute.set_defaults(func=_cmd_impute)

    stats = sub.add_parser("graph-stats", help="inspect the neighbor graph")
    stats.add_argument("--domain", required=True)
    stats.add_argument("--delta", type=int, default=8)
    stats.set_defaults(func=_cmd_graph_stats)

    evaluate = sub.add_parser("eval", help="embedding evaluation")
    eval_sub = evaluate.add_subparsers(dest="eval_command", parser_class=_Parser)
    knn = eval_sub.add_parser("knn", help="leave-one-out k-NN accuracy")
    knn.add_argument("--embeddings", required=True)
    knn.add_argument("--labels", required=True, help="CSV with entity,label header")
    knn.add_argument("--k", required=True, help="comma-separated k values")
    knn.set_defaults(func=_cmd_eval_knn)

    synth = sub.add_parser("synth", help="synthetic two-space transfer experiment")
    synth.add_argument("--n", type=int, default=300)
    synth.add_argument("--p", type=int, default=200)
    synth.add_argument("--manifold-dim", type=int, default=4)
    synth.add_argument("--affinity-dim", type=int, default=16)
    synth.add_argument("--semantic-dim", type=int, default=12)
    synth.add_argument("--noise-sigma", type=float, default=0.0)
    synth.add_argument("--n-labels", type=int, default=5)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--delta", type=int, default=8)
    synth.add_argument("--eta", type=float, default=1e-2)
    synth.add_argument("--max-iter", type=int, default=1000)
    synth.add_argument("--init-sigma", type=float, default=0.1)
    synth.add_argument("--knn-k", type=int, default=5)
    synth.add_argument("--sweep", choices=("delta", "eta"), default=None)
    synth.add_argument("--sweep-values", default=None, help="comma-separated sweep values")
    synth.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise _UsageError("a subcommand is required (impute, graph-stats, eval, synth)")
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValidationError, ConvergenceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
