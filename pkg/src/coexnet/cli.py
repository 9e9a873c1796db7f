"""Command-line front end: ``coexnet fit | cluster | simulate | export | validate``.

Every command writes its outputs plus a ``manifest.json`` listing inputs,
effective configuration and SHA-256 checksums of every output file.

Exit codes: 0 success, 2 input error, 3 numerical error, 4 internal
invariant violation.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import io as fmt
from .cluster import cluster_network
from .data import read_data, read_labels
from .errors import CoexnetError, InputError, InvariantViolation, NotChordal, PreconditionError
from .graph import is_chordal, perfect_sequence
from .search import SearchConfig, decomposable_search, min_bic_forest
from .simulate import PRESETS, SimulationPlan, run_study
from .stats import estimate_covariance, fit_model

logger = logging.getLogger("coexnet")

MANIFEST_FORMAT = "coexnet.manifest/1"
SIGMA_LIMIT = 5000


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class _Run:
    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.args = args
        self.out_dir = Path(args.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.outputs: list[Path] = []
        self.inputs: list[Path] = []
        self.timings: dict[str, float] = {}
        self._t0 = time.perf_counter()

    def input(self, path) -> Path:
        path = Path(path)
        if not path.exists():
            raise InputError(f"input file not found: {path}")
        self.inputs.append(path)
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.write_text(text)
        self.outputs.append(path)
        return path

    def write_npy(self, name: str, array: np.ndarray) -> Path:
        path = self.out_dir / name
        with open(path, "wb") as fh:
            np.save(fh, np.ascontiguousarray(array), allow_pickle=False)
        self.outputs.append(path)
        return path

    def lap(self, label: str) -> None:
        now = time.perf_counter()
        self.timings[label] = round(now - self._t0, 6)
        self._t0 = now

    def manifest(self) -> None:
        config = {k: v for k, v in sorted(vars(self.args).items()) if k not in ("func", "command") and not k.startswith("_")}
        body = {
            "format": MANIFEST_FORMAT,
            "tool": "coexnet",
            "version": __version__,
            "command": self.command,
            "argv": ["coexnet", *getattr(self.args, "_argv", [])],
            "config": config,
            "seed": getattr(self.args, "seed", None),
            "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in self.inputs],
            "outputs": [{"path": p.name, "sha256": _sha256(p)} for p in self.outputs],
            "timings": self.timings,
        }
        (self.out_dir / "manifest.json").write_text(json.dumps(body, indent=2, sort_keys=True, default=str) + "\n")


def _fraction(text: str) -> Fraction:
    """``0.5`` or ``6/11``; kept exact so clique fractions compare without rounding."""
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number or fraction: {text!r}") from None
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError(f"alpha must lie in [0, 1], got {text}")
    return value


def _search_config(args) -> SearchConfig:
    return SearchConfig(
        max_edges=args.max_edges,
        max_clique_size=args.max_clique_size,
        emit_trace=args.emit_trace,
    )


def _load_graph(run: _Run, model_path) -> tuple[fmt.GraphDocument, Path]:
    """Accept a model directory (uses its ``graph.json``) or a graph file."""
    path = Path(model_path)
    if path.is_dir():
        path = path / "graph.json"
    doc = fmt.read_graph(run.input(path))
    return doc, path


def cmd_fit(args) -> _Run:
    run = _Run("fit", args)
    data = read_data(run.input(args.input), run.input(args.labels) if args.labels else None, log2=args.log2)
    run.lap("read")
    cfg = _search_config(args)
    model, trace = min_bic_forest(data, cfg)
    if args.mode == "decomposable":
        model, t2 = decomposable_search(data, model, cfg)
        trace = trace.extend(t2)
    trace.check()
    run.lap("search")
    doc = fmt.labels_document(model.graph, data.names, data.de_labels)
    run.write_text("graph.json", fmt.graph_to_json(doc))
    for extra in args.format or ():
        if extra in ("graphml", "dot"):
            run.write_text(f"graph.{extra}", fmt.write_graph(doc, extra))
    sigma_name = None
    if not args.no_sigma and data.p <= SIGMA_LIMIT:
        sigma_name = "sigma.npy"
        run.write_npy(sigma_name, estimate_covariance(data, model.sequence))
        run.lap("covariance")
    run.write_text("model.json", fmt.model_to_json(model, data.names, sigma_name))
    if args.emit_trace:
        from io import StringIO

        buf = StringIO()
        trace.to_jsonl(buf)
        run.write_text("trace.jsonl", buf.getvalue())
    logger.info("fitted %d edges, BIC %.6f", model.graph.edge_count, model.bic)
    return run


def _labels_for(run: _Run, args, doc: fmt.GraphDocument) -> np.ndarray:
    if args.labels:
        return read_labels(run.input(args.labels), doc.names)
    if "de" in doc.attrs:
        return np.array([int(x) for x in doc.attrs["de"]], dtype=bool)
    raise InputError("no DE labels: pass --labels or use a graph file that carries them")


def cmd_cluster(args) -> _Run:
    run = _Run("cluster", args)
    doc, _ = _load_graph(run, args.model)
    if not is_chordal(doc.graph):
        raise NotChordal(f"graph in {args.model} is not chordal")
    labels = _labels_for(run, args, doc)
    cg, genes = cluster_network(doc.graph, labels, args.alpha)
    run.lap("cluster")
    run.write_text("clusters.csv", fmt.cluster_table(cg, doc.names))
    run.write_text("genes.csv", fmt.gene_table(cg, genes, doc.names, labels))
    cdoc = fmt.cluster_graph_document(cg)
    for kind in args.format or ("dot", "graphml"):
        if kind in ("json", "graphml", "dot"):
            run.write_text(f"cluster_graph.{kind}", fmt.write_graph(cdoc, kind))
    logger.info("%d clusters, %d cluster-graph edges", len(cg.clusters), len(cg.edges))
    return run


def cmd_simulate(args) -> _Run:
    run = _Run("simulate", args)
    doc, graph_path = _load_graph(run, args.model)
    if not is_chordal(doc.graph):
        raise NotChordal(f"graph in {args.model} is not chordal")
    labels = _labels_for(run, args, doc)
    ps = perfect_sequence(doc.graph)
    sigma = None
    model_json = graph_path.parent / "model.json"
    if model_json.exists():
        meta = fmt.model_from_json(run.input(model_json).read_text())
        if meta.get("sigma"):
            sigma = np.load(run.input(graph_path.parent / meta["sigma"]), allow_pickle=False)
    if sigma is None:
        if not args.input:
            raise PreconditionError("model has no stored covariance; pass --input with the reference data")
        data = read_data(run.input(args.input), log2=args.log2)
        if data.n <= ps.max_clique_size:
            worst = sorted(doc.names[v] for v in max(ps.cliques, key=len))
            raise PreconditionError(
                f"n = {data.n} observations do not exceed the size of clique {{{', '.join(worst)}}} ({len(worst)})"
            )
        sigma = estimate_covariance(data, ps)
    _, genes = cluster_network(doc.graph, labels, args.alpha, ps)
    ref = np.full(doc.graph.vertex_count, np.nan)
    for g in genes:
        ref[g.vertex] = g.rho
    preset = PRESETS[args.preset]
    sizes = tuple(args.sample_sizes) if args.sample_sizes else preset["sample_sizes"]
    reps = args.replicates or preset["replicates"]
    plan = SimulationPlan(
        sigma=sigma,
        reference_rho=ref,
        labels=labels,
        sample_sizes=sizes,
        replicates=reps,
        seed=args.seed,
        alpha=args.alpha,
        config=SearchConfig(max_clique_size=args.max_clique_size) if args.max_clique_size else SearchConfig(),
    )
    report = run_study(plan, workers=args.threads)
    run.lap("study")
    run.write_text("mse.csv", report.to_csv())
    run.write_text("mse.json", report.to_json())
    return run


def cmd_export(args) -> _Run:
    run = _Run("export", args)
    doc, path = _load_graph(run, args.model)
    for kind in args.format or ("json",):
        if kind == "csv":
            raise InputError("csv is not a graph export format; use json, graphml or dot")
        run.write_text(f"{path.stem}.{kind}", fmt.write_graph(doc, kind))
    return run


def cmd_validate(args) -> _Run:
    """Re-check a fitted model directory: chordality, stored BIC and covariance."""
    run = _Run("validate", args)
    doc, graph_path = _load_graph(run, args.model)
    report = {"chordal": is_chordal(doc.graph), "vertex_count": doc.graph.vertex_count, "edge_count": doc.graph.edge_count}
    if not report["chordal"]:
        raise NotChordal(f"graph in {args.model} is not chordal")
    ps = perfect_sequence(doc.graph)
    model_json = graph_path.parent / "model.json"
    if model_json.exists():
        meta = fmt.model_from_json(run.input(model_json).read_text())
        if meta["edge_count"] != doc.graph.edge_count:
            raise InvariantViolation("model.json edge count disagrees with the graph")
        if args.input:
            data = read_data(run.input(args.input), log2=args.log2)
            model = fit_model(data, doc.graph)
            report["bic"] = model.bic
            if not math.isclose(model.bic, meta["bic"], rel_tol=1e-8):
                raise InvariantViolation(f"stored BIC {meta['bic']} differs from recomputed {model.bic}")
        if meta.get("sigma"):
            sigma = np.load(run.input(graph_path.parent / meta["sigma"]), allow_pickle=False)
            prec = np.linalg.inv(sigma)
            d = np.sqrt(np.diag(prec))
            scaled = np.abs(prec / np.outer(d, d))
            worst = max((scaled[i, j] for i, j in doc.graph.non_edges()), default=0.0)
            report["max_non_edge_partial"] = float(worst)
            if worst > 1e-6:
                raise InvariantViolation(f"non-edge precision entry {worst:.3g} exceeds 1e-6")
    report["cliques"] = len(ps.cliques)
    run.write_text("validate.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    return run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coexnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"coexnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=".", help="directory for outputs and manifest.json")
    common.add_argument("--config", help="JSON file of flag defaults; explicit flags win")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="worker processes (output does not depend on it)")
    common.add_argument("--log2", action="store_true", help="log2-transform input values")
    common.add_argument("--format", action="append", choices=("json", "graphml", "dot", "csv"))
    common.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("fit", parents=[common], help="learn a network by stepwise BIC search")
    p.add_argument("--input", required=True)
    p.add_argument("--labels")
    p.add_argument("--mode", choices=("forest", "decomposable"), default="decomposable")
    p.add_argument("--max-clique-size", type=int)
    p.add_argument("--max-edges", type=int)
    p.add_argument("--emit-trace", action="store_true")
    p.add_argument("--no-sigma", action="store_true", help="do not store the fitted covariance")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cluster", parents=[common], help="cluster graph and uncertainty indices")
    p.add_argument("--model", required=True, help="model directory or graph file")
    p.add_argument("--labels")
    p.add_argument("--alpha", type=_fraction, help="DEGD threshold, e.g. 0.5 or 6/11 (default: DE fraction)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo recovery study")
    p.add_argument("--model", required=True)
    p.add_argument("--labels")
    p.add_argument("--input", help="reference data, needed when the model has no stored covariance")
    p.add_argument("--alpha", type=_fraction, help="DEGD threshold, e.g. 0.5 or 6/11 (default: DE fraction)")
    p.add_argument("--preset", choices=sorted(PRESETS), default="toy")
    p.add_argument("--sample-sizes", type=int, nargs="+")
    p.add_argument("--replicates", type=int)
    p.add_argument("--max-clique-size", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("export", parents=[common], help="convert a graph file")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("validate", parents=[common], help="re-check a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--input")
    p.set_defaults(func=cmd_validate)
    return parser


def _parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            defaults = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config file {args.config}: {exc}") from None
        sub = next(a for a in parser._subparsers._group_actions if isinstance(a, argparse._SubParsersAction))
        sub.choices[args.command].set_defaults(**{k.replace("-", "_"): v for k, v in defaults.items()})
        args = parser.parse_args(argv)
    args._argv = list(sys.argv[1:] if argv is None else argv)
    return args


def main(argv=None) -> int:
    try:
        args = _parse(argv)
    except InputError as exc:
        print(f"coexnet: error: {exc}", file=sys.stderr)
        return exc.exit_code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        run = args.func(args)
        run.manifest()
    except CoexnetError as exc:
        print(f"coexnet: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"coexnet: input error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
