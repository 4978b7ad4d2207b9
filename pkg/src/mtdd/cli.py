"""Command-line pipeline: prep, train, select-targets, make-spec, benchmark, optimize, report.

Exit codes: 0 ok, 1 usage, 2 empty or degenerate data, 3 missing or invalid
artifact, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__

log = logging.getLogger("mtdd")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ARTIFACT, EXIT_INTERNAL = 0, 1, 2, 3, 4
TOY_NITROGEN = "toy-nitrogen"


class UsageError(Exception):
    pass


class ArtifactError(Exception):
    pass


class InvariantViolation(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# manifests


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out: str | Path, args, inputs: list, started: float, seed=None, extra=None) -> Path:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "command": args.command,
        "config": config,
        "inputs": {str(p): file_digest(p) for p in inputs if p and Path(p).is_file()},
        "outputs": {str(out): file_digest(out)} if Path(out).is_file() else {},
        "seed": seed,
        "toolkit_version": __version__,
        "timing": {"started": started, "seconds": round(time.time() - started, 3)},
    }
    if extra:
        manifest.update(extra)
    path = Path(str(out) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path


def _need(path: str | None, what: str) -> Path:
    if path is None:
        raise UsageError(f"{what} is required")
    p = Path(path)
    if not p.is_file():
        raise ArtifactError(f"{what} not found: {p}")
    return p


def _read_smiles_records(path: Path) -> list[tuple[str, str | None]]:
    from .chem import read_smiles_file

    return list(read_smiles_file(path))


# ---------------------------------------------------------------------------
# commands


def cmd_prep(args) -> int:
    from .chem import ChemError, parse_smiles
    from .datasets import preprocess_library

    started = time.time()
    lib_in = _need(args.library, "library file")
    records = _read_smiles_records(lib_in)
    if not records:
        log.error("library file %s holds no records", lib_in)
        return EXIT_DATA
    refs = []
    if args.references:
        for smi, _ in _read_smiles_records(_need(args.references, "reference file")):
            try:
                refs.append(parse_smiles(smi))
            except ChemError:
                log.warning("skipping unparseable reference %s", smi)
    lib = preprocess_library(
        records,
        refs,
        similarity_cutoff=args.similarity_cutoff,
        max_length=args.max_length,
        source=str(lib_in),
    )
    lib.save(args.out)
    report_path = args.report or str(args.out) + ".rejections.json"
    Path(report_path).write_text(json.dumps(lib.report.to_dict(), indent=2) + "\n")
    counts = lib.report.counts
    if sum(counts.values()) != lib.report.n_input - lib.report.n_output:
        raise InvariantViolation("rejection counts do not add up")
    write_manifest(args.out, args, [lib_in, args.references], started, extra={"rejections": counts})
    print(f"kept {lib.report.n_output} of {lib.report.n_input}; rejected {counts}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .datasets import LoSplitConfig, lo_split
    from .qsar import AutoMLConfig, read_bioassay_csv, run_search

    started = time.time()
    data = _need(args.data, "bioassay CSV")
    file_cfg = json.loads(_need(args.config, "AutoML config").read_text()) if args.config else {}
    seed = args.seed if args.seed is not None else file_cfg.get("search_seed")
    max_candidates = args.max_candidates if args.max_candidates is not None else file_cfg.get("max_candidates")
    if args.strict_repro and (seed is None or max_candidates is None):
        raise UsageError("--strict-repro needs --seed and --max-candidates")
    algorithms = args.algorithms.split(",") if args.algorithms else file_cfg.get("candidate_algorithms")
    cfg_kwargs = {
        "time_budget": args.time_budget if args.time_budget is not None else file_cfg.get("time_budget", 3600.0),
        "search_seed": seed or 0,
        "max_candidates": max_candidates,
        "n_jobs": args.threads,
    }
    if algorithms:
        cfg_kwargs["candidate_algorithms"] = tuple(algorithms)
    try:
        cfg = AutoMLConfig(**cfg_kwargs)
        split_cfg = LoSplitConfig(args.similarity, args.min_cluster, args.max_cluster)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    dataset = read_bioassay_csv(data, provenance=data.name)
    dataset.require_trainable()
    split = lo_split(dataset, split_cfg, seed=seed or 0)
    result = run_search(dataset, split, cfg)
    model = replace(result.model, name=args.name or data.stem)
    model.save(args.out)
    m = model.metrics
    write_manifest(args.out, args, [data, args.config], started, seed=seed, extra={"metrics": m})
    print(f"{model.algorithm}: roc_auc={m.get('roc_auc')} accuracy={m.get('accuracy')} (candidate {m['candidate_index']} of {m['candidates_evaluated']})")
    return EXIT_OK


def cmd_select_targets(args) -> int:
    from .targetsel import load_annotations, load_synonyms, select_targets

    started = time.time()
    anns = load_annotations(_need(args.annotations, "annotation file"))
    synonyms = load_synonyms(_need(args.synonyms, "synonym file")) if args.synonyms else None
    targets = select_targets(anns, args.condition, args.threshold, args.aggregation, synonyms)
    text = json.dumps({"condition": args.condition, "targets": targets}, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        write_manifest(args.out, args, [args.annotations, args.synonyms], started)
    print("\n".join(targets))
    return EXIT_OK


def cmd_make_spec(args) -> int:
    from .scoring import SPEC_SCHEMA_VERSION, load_spec

    out = Path(args.out)
    base = out.resolve().parent

    def rel(p):
        _need(p, "artifact")
        return os.path.relpath(Path(p).resolve(), base)

    data = {
        "schema_version": SPEC_SCHEMA_VERSION,
        "name": args.name,
        "target_models": [rel(p) for p in args.target_model],
        "bbb_model": rel(args.bbb_model) if args.bbb_model else None,
        "use_cns_mpo": not args.no_cns_mpo,
        "use_sa_score": not args.no_sa_score,
        "sa_table": rel(args.sa_table) if args.sa_table else None,
        "aggregation": args.aggregation,
    }
    out.write_text(json.dumps(data, indent=2) + "\n")
    load_spec(out)  # refuse to leave an unloadable spec behind
    print(f"wrote {out}")
    return EXIT_OK


def _molecule_list(path: Path) -> list[str]:
    smiles = [s for s, _ in _read_smiles_records(path)]
    if not smiles:
        raise ValueError(f"no molecules in {path}")
    return smiles


def _write_report(report, args) -> None:
    report.save(args.out)
    if args.csv:
        report.save_csv(args.csv)


def cmd_benchmark(args) -> int:
    from .scoring import evaluate_set, load_spec

    started = time.time()
    spec = load_spec(_need(args.spec, "benchmark spec"))
    mols_path = _need(args.molecules, "molecule file")
    report = evaluate_set(_molecule_list(mols_path), spec, args.method, threads=args.threads)
    _write_report(report, args)
    write_manifest(args.out, args, [args.spec, mols_path], started)
    print(f"{spec.name}: score {report.score:.4f} over {len(report.top)} molecules")
    return EXIT_OK


def _ga_config(args):
    from .optimizers import SMILES_GA_PATIENCE, GAConfig

    patience = args.patience
    if patience is None:
        patience = SMILES_GA_PATIENCE if args.algorithm == "smiles-ga" else 5
    try:
        return GAConfig(
            generations=args.generations,
            population_size=args.population,
            offspring_size=args.offspring,
            mutation_rate=args.mutation_rate,
            patience=patience,
            seed=args.seed if args.seed is not None else 0,
            oracle_budget=args.oracle_budget,
            threads=args.threads,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_optimize(args) -> int:
    from .optimizers import OPTIMIZERS, nitrogen_score
    from .scoring import MoleculeScore, Scorer, evaluate_set, load_spec, report_from_scores

    started = time.time()
    if args.strict_repro and args.seed is None:
        raise UsageError("--strict-repro needs --seed")
    cfg = _ga_config(args)
    pool_path = _need(args.pool, "pool file")
    pool = _molecule_list(pool_path)
    toy = args.benchmark == TOY_NITROGEN
    spec = None if toy else load_spec(_need(args.benchmark, "benchmark spec"))
    scoring = nitrogen_score if toy else Scorer(spec)
    state = OPTIMIZERS[args.algorithm](scoring, pool, cfg)

    best = [m for m, _ in state.population] + [state.best_so_far[0]]
    if toy:
        from .chem import write_smiles

        scores = [
            MoleculeScore(write_smiles(m), v, None, None, None, v)
            for m, v in zip(best, nitrogen_score(best))
        ]
        report = report_from_scores(scores, TOY_NITROGEN, args.algorithm, "guacamol_top_1_10_100")
    else:
        report = evaluate_set(best, spec, args.algorithm, threads=args.threads)
    scores = [r.best for r in state.trace]
    if any(b < a for a, b in zip(scores, scores[1:])):
        raise InvariantViolation("best-so-far decreased across generations")
    _write_report(report, args)
    trace_path = args.trace or str(args.out) + ".trace.tsv"
    Path(trace_path).write_text(state.trace_tsv())
    write_manifest(
        args.out,
        args,
        [pool_path] + ([] if toy else [args.benchmark]),
        started,
        seed=cfg.seed,
        extra={"ga_config": cfg.to_dict(), "state": {k: v for k, v in state.summary().items() if k != "population"}},
    )
    print(
        f"{args.algorithm}: best {state.best_so_far[1]:.4f} after {state.generation_index} generations, "
        f"{state.oracle_calls} oracle calls ({state.stop_reason}); report score {report.score:.4f}"
    )
    return EXIT_OK


def cmd_build_sa_table(args) -> int:
    from .chem import ChemError, parse_smiles
    from .sascore import build_fragment_table

    started = time.time()
    corpus = _need(args.corpus, "corpus file")
    mols = []
    for smi, _ in _read_smiles_records(corpus):
        try:
            mols.append(parse_smiles(smi))
        except ChemError:
            continue
    table = build_fragment_table(mols, source=corpus.name)
    table.save(args.out)
    write_manifest(args.out, args, [corpus], started)
    print(f"{len(table.scores)} fragments from {len(mols)} molecules")
    return EXIT_OK


def cmd_report(args) -> int:
    from .scoring import validate_report

    path = _need(args.input, "report")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path} is not JSON: {exc}") from exc
    problems = validate_report(data)
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return EXIT_ARTIFACT
    print(f"{data['benchmark']} / {data['method']}: {data['score']:.4f} ({data['aggregation']}, {data['n_top']} molecules)")
    for name, st in data["components"].items():
        print(f"  {name:16s} {st['mean']:.4f} +/- {st['std']:.4f}")
    for i, row in enumerate(data["top"][: args.top], 1):
        print(f"  {i:3d} {row['final']:.4f} {row['molecule']}")
    return EXIT_OK


def cmd_fetch(args) -> int:
    from .datasets import fetch_remote_dataset

    started = time.time()
    rows = fetch_remote_dataset(args.url, args.cache_dir, offline=args.offline, timeout=args.timeout)
    if not rows:
        log.error("payload from %s is empty", args.url)
        return EXIT_DATA
    with open(args.out, "w") as fh:
        fh.write("smiles,activity\n")
        for smi, y in rows:
            fh.write(f"{smi},{y}\n")
    write_manifest(args.out, args, [], started, extra={"url": args.url})
    print(f"{len(rows)} records")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("--strict-repro", action="store_true", help="require seeds and count-based budgets")
    common.add_argument("--log-level", default="WARNING")

    p = _Parser(prog="mtdd", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"mtdd {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("prep", parents=[common], help="clean a compound library")
    s.add_argument("--library", required=True, help="SMILES file (smiles[TAB id] per line)")
    s.add_argument("--references", help="SMILES file of reference drugs to stay dissimilar from")
    s.add_argument("--out", required=True)
    s.add_argument("--report", help="rejection report path (default <out>.rejections.json)")
    s.add_argument("--similarity-cutoff", type=float, default=0.323, help="max Tanimoto to references (0.323)")
    s.add_argument("--max-length", type=int, default=100, help="max SMILES characters (100)")
    s.set_defaults(func=cmd_prep)

    s = sub.add_parser("train", parents=[common], help="Lo split + AutoML search for one target")
    s.add_argument("--data", required=True, help="CSV with smiles,activity columns")
    s.add_argument("--out", required=True)
    s.add_argument("--config", help="JSON AutoML config; flags override it")
    s.add_argument("--seed", type=int)
    s.add_argument("--time-budget", type=float, help="search seconds (default 3600)")
    s.add_argument("--max-candidates", type=int, help="count budget for reproducible runs")
    s.add_argument("--algorithms", help="comma list of decision-tree,random-forest,extra-trees,gradient-boosting")
    s.add_argument("--similarity", type=float, default=0.323, help="Lo split neighbour threshold (0.323)")
    s.add_argument("--min-cluster", type=int, default=5)
    s.add_argument("--max-cluster", type=int, default=50)
    s.add_argument("--name")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("select-targets", parents=[common], help="co-occurrence target selection")
    s.add_argument("--annotations", required=True)
    s.add_argument("--condition", required=True)
    s.add_argument("--synonyms")
    s.add_argument("--threshold", type=float, default=0.7, help="selection threshold (0.7)")
    s.add_argument("--aggregation", choices=("mean", "min", "max"), default="mean")
    s.add_argument("--out")
    s.set_defaults(func=cmd_select_targets)

    s = sub.add_parser("make-spec", parents=[common], help="assemble a benchmark spec file")
    s.add_argument("--name", required=True)
    s.add_argument("--target-model", action="append", required=True)
    s.add_argument("--bbb-model")
    s.add_argument("--sa-table")
    s.add_argument("--no-cns-mpo", action="store_true")
    s.add_argument("--no-sa-score", action="store_true")
    s.add_argument("--aggregation", choices=("guacamol_top_1_10_100", "mean_top_100"), default="guacamol_top_1_10_100")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_make_spec)

    s = sub.add_parser("benchmark", parents=[common], help="score a molecule set against a spec")
    s.add_argument("--spec", required=True)
    s.add_argument("--molecules", required=True)
    s.add_argument("--method", default="molecule-set")
    s.add_argument("--out", required=True)
    s.add_argument("--csv", help="also write the top molecules as CSV")
    s.set_defaults(func=cmd_benchmark)

    s = sub.add_parser(
        "optimize",
        parents=[common],
        help="run a generator against a benchmark",
        description="Defaults: 1000 generations, population 100, 200 offspring, mutation rate 0.01, "
        "patience 5 (graph-ga) or 50 (smiles-ga).",
    )
    s.add_argument("--algorithm", choices=("graph-ga", "smiles-ga", "screening"), required=True)
    s.add_argument("--benchmark", required=True, help=f"spec file, or '{TOY_NITROGEN}' for the toy objective")
    s.add_argument("--pool", required=True, help="starting library (SMILES file)")
    s.add_argument("--seed", type=int)
    s.add_argument("--generations", type=int, default=1000)
    s.add_argument("--population", type=int, default=100)
    s.add_argument("--offspring", type=int, default=200)
    s.add_argument("--mutation-rate", type=float, default=0.01)
    s.add_argument("--patience", type=int, help="5 for graph-ga, 50 for smiles-ga")
    s.add_argument("--oracle-budget", type=int)
    s.add_argument("--out", required=True)
    s.add_argument("--trace", help="per-generation trace (default <out>.trace.tsv)")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("build-sa-table", parents=[common], help="fragment table for SA scoring")
    s.add_argument("--corpus", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_build_sa_table)

    s = sub.add_parser("report", parents=[common], help="validate and print a benchmark report")
    s.add_argument("--input", required=True)
    s.add_argument("--top", type=int, default=10)
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("fetch", parents=[common], help="download a smiles,label dataset with caching")
    s.add_argument("--url", required=True)
    s.add_argument("--cache-dir", default=os.path.join(os.path.expanduser("~"), ".cache", "mtdd"))
    s.add_argument("--offline", action="store_true", help="never touch the network")
    s.add_argument("--timeout", type=float, default=30.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fetch)
    return p


def _exit_code(exc: BaseException) -> int:
    from .datasets import AllRecordsRejected, MalformedPayload, NetworkFailure, NoClusterFound
    from .optimizers import PoolTooSmall
    from .qsar import EmptyDataset, SingleClassDataset
    from .qsar.model import ModelFormatError
    from .sascore import EmptyCorpus, TableFormatError
    from .scoring import EmptyInput, SpecError
    from .targetsel import NoAnnotationsForCondition

    if isinstance(exc, UsageError):
        return EXIT_USAGE
    if isinstance(exc, (ArtifactError, SpecError, ModelFormatError, TableFormatError, MalformedPayload, NetworkFailure, FileNotFoundError)):
        return EXIT_ARTIFACT
    if isinstance(
        exc,
        (AllRecordsRejected, EmptyDataset, SingleClassDataset, NoClusterFound, NoAnnotationsForCondition, EmptyInput, PoolTooSmall, EmptyCorpus),
    ):
        return EXIT_DATA
    if isinstance(exc, InvariantViolation):
        return EXIT_INTERNAL
    if isinstance(exc, ValueError):
        return EXIT_DATA
    return EXIT_INTERNAL


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("mtdd: error: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except Exception as exc:  # mapped onto the exit-code contract
        code = _exit_code(exc)
        print(f"mtdd {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        if code == EXIT_INTERNAL:
            log.exception("internal error")
        return code


if __name__ == "__main__":
    sys.exit(main())
