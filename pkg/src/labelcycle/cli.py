"""Command-line front door. Exit codes: 0 success, 1 usage, 2 data error,
3 internal failure."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import (
    EXIT_DATA,
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_USAGE,
    DataError,
    LabelCycleError,
    UsageError,
)
from .ioutil import atomic_write_text, canonical_json, read_jsonl
from .store import BASES, effective_label_map, load_label_file


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad arguments; the contract reserves 2 for data
    # errors, so route usage problems through our own exception.
    def error(self, message):
        raise UsageError(message)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--state-dir", help="state directory holding the corpus and rounds")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument(
        "--deterministic",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="pin timestamps and RNG so reruns reproduce artifacts byte for byte",
    )
    return p


def build_parser() -> _Parser:
    common = _common()
    parser = _Parser(prog="labelcycle", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("ingest", parents=[common], help="load a corpus JSONL into a state dir")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument(
        "--cohort-tag",
        action="append",
        default=[],
        metavar="TAG=COHORT",
        help="map a source hashtag to a cohort for records without one",
    )

    p = sub.add_parser("clean", parents=[common], help="normalize raw posts into token lists")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="flat key=value cleaning config file")

    p = sub.add_parser("train", parents=[common], help="train an embedding model")
    p.add_argument("--kind", required=True, choices=["cbow", "skipgram", "pvdm", "bow"])
    p.add_argument("--in", dest="infile", required=True, help="cleaned JSONL")
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--epochs", type=int)
    p.add_argument("--buckets", type=int, help="subword hash buckets (0 disables subwords)")
    p.add_argument("--model-out", help="where to save the trained model")
    p.add_argument("--vectors-out", help="write per-document vectors as JSONL")

    p = sub.add_parser("cluster", parents=[common], help="k-means over document vectors")
    p.add_argument("--vectors", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--out", required=True, help="assignment JSONL")

    p = sub.add_parser("silhouette", parents=[common], help="score a clustering, or sweep k")
    p.add_argument("--vectors", required=True)
    p.add_argument("--assignment", help="assignment JSONL to score")
    p.add_argument("--sweep", help="comma-separated k values; emits CSV (k,wgss,silhouette)")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--out", help="write the sweep CSV here instead of stdout")

    p = sub.add_parser("propagate", parents=[common], help="label unanimous clusters")
    p.add_argument("--assignment", required=True)
    p.add_argument("--labels", required=True, help="label records JSONL")
    p.add_argument("--min-labeled", type=int, default=5)
    p.add_argument("--unanimity", type=float, default=1.0)
    p.add_argument("--basis", default="post_only", choices=sorted(BASES))
    p.add_argument("--round", type=int, default=0)
    p.add_argument("--out", help="write new label records JSONL")
    p.add_argument("--report", help="write the propagation report JSON")

    p = sub.add_parser("cv", parents=[common], help="cross-validate the propagation rule")
    p.add_argument("--assignment", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--min-labeled", type=int, default=5)
    p.add_argument("--unanimity", type=float, default=1.0)
    p.add_argument("--basis", default="post_only", choices=sorted(BASES))

    p = sub.add_parser("irr", parents=[common], help="percent agreement between two raters")
    p.add_argument("--labels-a", required=True)
    p.add_argument("--labels-b", required=True)
    p.add_argument("--basis", default="post_only", choices=sorted(BASES))
    p.add_argument("--strata", help="JSON file mapping stratum name to post ids")
    p.add_argument("--json", action="store_true", help="emit JSON instead of the table")

    p = sub.add_parser("suggest", parents=[common], help="rubric suggestion for hashtags")
    p.add_argument("--tags", help="comma-separated hashtags")
    p.add_argument("--post-id", help="look a post's hashtags up in the state dir")
    p.add_argument("--lexicon", help="hashtag lexicon CSV (default: bundled demo)")

    p = sub.add_parser("project", parents=[common], help="2-D projection for plotting")
    p.add_argument("--method", required=True, choices=["pca", "tsne"])
    p.add_argument("--vectors", help="vectors file; defaults to the latest round's")
    p.add_argument("--out", help="coords CSV; defaults into the state dir")
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iters", type=int, default=1000)

    p = sub.add_parser("cycle", parents=[common], help="run one semi-supervised round")
    p.add_argument("--kind", default="cbow", choices=["cbow", "skipgram", "pvdm", "bow"])
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--epochs", type=int)
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--buckets", type=int)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--min-labeled", type=int, default=5)
    p.add_argument("--unanimity", type=float, default=1.0)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--basis", default="post_only", choices=sorted(BASES))
    p.add_argument("--queue-size", type=int, default=50)
    p.add_argument("--lexicon", help="hashtag lexicon CSV for queue suggestions")
    p.add_argument(
        "--no-retrain",
        action="store_true",
        help="reuse the previous round's model instead of retraining",
    )

    p = sub.add_parser("report", parents=[common], help="per-round accuracy table")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("serve", parents=[common], help="run the labeling HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.add_argument("--static", help="directory of console static files to serve at /")

    return parser


# -- shared file plumbing -------------------------------------------------------------


def _require_state_dir(args) -> Path:
    if not args.state_dir:
        raise UsageError("this command needs --state-dir")
    return Path(args.state_dir)


def _load_store(args):
    from .store import CorpusStore

    state_dir = _require_state_dir(args)
    if not (state_dir / "corpus.jsonl").exists():
        raise DataError(f"no corpus in {state_dir}; run ingest first")
    return CorpusStore(state_dir)


def _load_cleaned(path: str) -> tuple[list[str], list[list[str]]]:
    ids, docs = [], []
    try:
        for lineno, obj in read_jsonl(path):
            try:
                ids.append(str(obj["post_id"]))
                docs.append([str(t) for t in obj["tokens"]])
            except (KeyError, TypeError):
                raise DataError(f"{path}:{lineno}: expected post_id and tokens fields")
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if not ids:
        raise DataError(f"{path}: no documents")
    return ids, docs


def _load_vectors(path: str) -> tuple[list[str], np.ndarray]:
    """Vectors live either as JSONL rows (post_id, vector) or as an .npy
    matrix with a vector_ids.json sibling (the round-artifact layout)."""
    p = Path(path)
    if p.suffix == ".npy":
        ids_path = p.parent / "vector_ids.json"
        if not ids_path.exists():
            raise DataError(f"{ids_path} not found next to {p.name}")
        ids = json.loads(ids_path.read_text(encoding="utf-8"))
        matrix = np.load(p)
        if len(ids) != len(matrix):
            raise DataError(f"{p}: {len(matrix)} rows but {len(ids)} ids")
        return ids, matrix
    ids, rows = [], []
    try:
        for lineno, obj in read_jsonl(p):
            try:
                ids.append(str(obj["post_id"]))
                rows.append([float(x) for x in obj["vector"]])
            except (KeyError, TypeError, ValueError):
                raise DataError(f"{p}:{lineno}: expected post_id and numeric vector")
    except ValueError as exc:
        raise DataError(f"{p}: {exc}") from exc
    if not rows:
        raise DataError(f"{p}: no vectors")
    return ids, np.asarray(rows, dtype=np.float64)


def _load_assignment(path: str) -> dict[str, int]:
    mapping = {}
    try:
        for lineno, obj in read_jsonl(path):
            try:
                mapping[str(obj["post_id"])] = int(obj["cluster"])
            except (KeyError, TypeError, ValueError):
                raise DataError(f"{path}:{lineno}: expected post_id and cluster fields")
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if not mapping:
        raise DataError(f"{path}: no assignments")
    return mapping


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


# -- subcommand bodies ---------------------------------------------------------------


def cmd_ingest(args) -> int:
    from .store import CorpusStore

    state_dir = _require_state_dir(args)
    cohorts = {}
    for spec_item in args.cohort_tag:
        tag, sep, cohort = spec_item.partition("=")
        if not sep or not tag or not cohort:
            raise UsageError(f"--cohort-tag wants TAG=COHORT, got {spec_item!r}")
        cohorts[tag.lower().lstrip("#")] = cohort
    store = CorpusStore.ingest(args.infile, state_dir, cohorts or None)
    print(f"ingested {len(store)} posts into {state_dir}")
    return EXIT_OK


def cmd_clean(args) -> int:
    from .cleaning import CleaningConfig, clean, parse_config_text
    from .store import load_corpus_file

    config = CleaningConfig()
    if args.config:
        config = parse_config_text(Path(args.config).read_text(encoding="utf-8"))
    posts = load_corpus_file(args.infile)
    lines = []
    for pid in sorted(posts):
        doc = clean(posts[pid], config)
        lines.append(canonical_json(doc.to_json()) + "\n")
    atomic_write_text(args.out, "".join(lines))
    print(f"cleaned {len(lines)} posts -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .embedding import train_model
    from .subword import SubwordIndex
    from .training import TrainingConfig
    from .vocab import build_vocab

    ids, docs = _load_cleaned(args.infile)
    if args.kind == "bow":
        from .bow import bow_dense, bow_vectorize

        if not args.vectors_out:
            raise UsageError("--kind bow needs --vectors-out")
        vocab = build_vocab(docs, min_count=args.min_count)
        if len(vocab) == 0:
            raise DataError("vocabulary is empty; lower --min-count")
        lines = []
        for pid, doc in zip(ids, docs):
            dense = bow_dense(bow_vectorize(doc, vocab), len(vocab))
            lines.append(canonical_json({"post_id": pid, "vector": dense}) + "\n")
        atomic_write_text(args.vectors_out, "".join(lines))
        print(f"bow vectors for {len(ids)} documents (V={len(vocab)}) -> {args.vectors_out}")
        return EXIT_OK

    config = TrainingConfig(
        dim=args.dim,
        window=args.window,
        epochs=args.epochs,
        seed=args.seed,
        deterministic_mode=args.deterministic,
    )
    subwords = SubwordIndex(bucket_count=args.buckets) if args.buckets is not None else None
    model = train_model(
        docs, args.kind, config, min_count=args.min_count,
        subwords=subwords, doc_ids=ids,
    )
    print(
        f"trained {args.kind}: V={len(model.vocab)}, dim={model.dim}, "
        f"final loss {model.losses[-1]:.4f}"
    )
    if args.model_out:
        model.save(args.model_out)
        print(f"model -> {args.model_out}")
    if args.vectors_out:
        lines = []
        if args.kind == "pvdm":
            vectors = model.doc_vecs
        else:
            vectors = [model.embed_document(d)[0] for d in docs]
        for pid, vec in zip(ids, vectors):
            row = {"post_id": pid, "vector": [float(x) for x in vec]}
            lines.append(canonical_json(row) + "\n")
        atomic_write_text(args.vectors_out, "".join(lines))
        print(f"vectors -> {args.vectors_out}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    from .cluster import kmeans

    ids, matrix = _load_vectors(args.vectors)
    model, assignment = kmeans(
        matrix, args.k, restarts=args.restarts, seed=args.seed, ids=ids
    )
    lines = [
        canonical_json({"post_id": pid, "cluster": int(c)}) + "\n"
        for pid, c in zip(ids, assignment.labels)
    ]
    atomic_write_text(args.out, "".join(lines))
    _print_json(
        {"k": args.k, "wgss": model.wgss, "sizes": assignment.sizes, "out": args.out}
    )
    return EXIT_OK


def cmd_silhouette(args) -> int:
    from .cluster import silhouette, silhouette_sweep

    ids, matrix = _load_vectors(args.vectors)
    if args.sweep:
        try:
            k_list = [int(k) for k in args.sweep.split(",") if k.strip()]
        except ValueError:
            raise UsageError(f"--sweep wants comma-separated integers, got {args.sweep!r}")
        rows = silhouette_sweep(matrix, k_list, restarts=args.restarts, seed=args.seed)
        csv_lines = ["k,wgss,silhouette"]
        csv_lines += [f"{r['k']},{r['wgss']!r},{r['silhouette']!r}" for r in rows]
        text = "\n".join(csv_lines) + "\n"
        if args.out:
            atomic_write_text(args.out, text)
            print(f"sweep -> {args.out}")
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if not args.assignment:
        raise UsageError("silhouette needs --assignment or --sweep")
    mapping = _load_assignment(args.assignment)
    missing = [pid for pid in ids if pid not in mapping]
    if missing:
        raise DataError(f"assignment is missing {len(missing)} vector ids (e.g. {missing[0]!r})")
    labels = np.asarray([mapping[pid] for pid in ids])
    mean, _ = silhouette(matrix, labels)
    _print_json({"mean_silhouette": mean, "n": len(ids)})
    return EXIT_OK


def _policy_from(args):
    from .propagation import PropagationPolicy

    return PropagationPolicy(min_labeled=args.min_labeled, unanimity_threshold=args.unanimity)


def cmd_propagate(args) -> int:
    from .propagation import propagate

    mapping = _load_assignment(args.assignment)
    records = load_label_file(args.labels)
    labeled = effective_label_map(
        records, args.basis, sources=("manual", "propagated"), mask_removed=False
    )
    report, new_records = propagate(
        mapping, labeled, _policy_from(args), round_id=args.round, basis=args.basis
    )
    if args.out:
        lines = [canonical_json(r.to_json()) + "\n" for r in new_records]
        atomic_write_text(args.out, "".join(lines))
    if args.report:
        atomic_write_text(args.report, canonical_json(report.to_json()) + "\n")
    _print_json(report.to_json())
    return EXIT_OK


def cmd_cv(args) -> int:
    from .propagation import cross_validate

    mapping = _load_assignment(args.assignment)
    records = load_label_file(args.labels)
    labeled = effective_label_map(records, args.basis, sources=("manual", "propagated"))
    report = cross_validate(
        mapping, labeled, _policy_from(args), folds=args.folds, seed=args.seed
    )
    _print_json(report.to_json())
    return EXIT_OK


def cmd_irr(args) -> int:
    from .agreement import compute_irr

    labels_a = effective_label_map(
        load_label_file(args.labels_a), args.basis, sources=("manual",), mask_removed=False
    )
    labels_b = effective_label_map(
        load_label_file(args.labels_b), args.basis, sources=("manual",), mask_removed=False
    )
    strata = None
    if args.strata:
        raw = json.loads(Path(args.strata).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise DataError(f"{args.strata}: expected an object of stratum -> post ids")
        strata = {str(k): [str(p) for p in v] for k, v in raw.items()}
    report = compute_irr(labels_a, labels_b, strata)
    if args.json:
        _print_json(report.to_json())
        return EXIT_OK
    header = ["stratum", "n", "same%", "different%", "completely%", "partially%"]
    print("  ".join(h.rjust(12) for h in header))
    for s in report.strata:
        j = s.to_json()
        cells = [
            s.name,
            str(s.comparable),
            f"{j['percent_same']:.1f}",
            f"{j['percent_different']:.1f}",
            f"{j['percent_completely_incorrect']:.1f}",
            f"{j['percent_partially_incorrect']:.1f}",
        ]
        print("  ".join(c.rjust(12) for c in cells))
    return EXIT_OK


def cmd_suggest(args) -> int:
    from .agreement import DEFAULT_RUBRIC, demo_lexicon_path, load_lexicon, suggest_label

    lexicon = load_lexicon(args.lexicon or demo_lexicon_path())
    if args.tags is not None:
        from .store import Post

        tags = tuple(t for t in args.tags.split(",") if t.strip())
        post = Post(post_id="(cli)", raw_text="", cohort="control", source_hashtags=tags)
    elif args.post_id:
        store = _load_store(args)
        post = store.post(args.post_id)
    else:
        raise UsageError("suggest needs --tags or --post-id")
    suggestion = suggest_label(post, lexicon, DEFAULT_RUBRIC)
    _print_json(suggestion.to_json() if suggestion else None)
    return EXIT_OK


def cmd_project(args) -> int:
    from .pipeline import latest_round, load_round_artifact, round_dir
    from .projection import export_projection, pca, tsne
    from .service import projection_csv_path

    assignment = None
    labels = None
    if args.vectors:
        ids, matrix = _load_vectors(args.vectors)
        out = args.out
        if not out:
            raise UsageError("project needs --out when --vectors is given")
    else:
        store = _load_store(args)
        current = latest_round(store.state_dir)
        if current is None:
            raise DataError("no completed rounds; run `labelcycle cycle` first")
        ids, matrix = _load_vectors(str(round_dir(store.state_dir, current) / "vectors.npy"))
        assignment = load_round_artifact(store.state_dir, current, "assignment.json")[
            "assignment"
        ]
        labels = store.effective_labels("post_only", sources=("manual", "propagated"))
        labels = {p: v for p, v in labels.items() if p in set(ids)}
        out = args.out or str(projection_csv_path(store.state_dir, current, args.method))

    if args.method == "pca":
        result = pca(matrix, 2, ids=ids)
    else:
        result = tsne(
            matrix, perplexity=args.perplexity, iters=args.iters, seed=args.seed, ids=ids
        )
    text = export_projection(result, assignment=assignment, labels=labels)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out, text)
    print(f"{args.method} projection of {len(ids)} points -> {out}")
    return EXIT_OK


def cmd_cycle(args) -> int:
    from .pipeline import CycleConfig, run_cycle_round

    store = _load_store(args)
    kwargs = dict(
        kind=args.kind,
        dim=args.dim,
        window=args.window,
        epochs=args.epochs,
        min_count=args.min_count,
        k=args.k,
        restarts=args.restarts,
        min_labeled=args.min_labeled,
        unanimity=args.unanimity,
        folds=args.folds,
        basis=args.basis,
        seed=args.seed,
        deterministic=args.deterministic,
        retrain=not args.no_retrain,
        queue_size=args.queue_size,
        lexicon_path=args.lexicon,
    )
    if args.buckets is not None:
        kwargs["bucket_count"] = args.buckets
    state = run_cycle_round(store, CycleConfig(**kwargs))
    _print_json(state.to_json())
    return EXIT_OK


def cmd_report(args) -> int:
    from .pipeline import cycle_report, render_report_text

    store = _load_store(args)
    report = cycle_report(store)
    if args.json:
        _print_json(report)
    else:
        sys.stdout.write(render_report_text(report))
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve

    state_dir = _require_state_dir(args)
    if not (state_dir / "corpus.jsonl").exists():
        raise DataError(f"no corpus in {state_dir}; run ingest first")
    serve(state_dir, host=args.host, port=args.port, static_dir=args.static)
    return EXIT_OK


_COMMANDS = {
    "ingest": cmd_ingest,
    "clean": cmd_clean,
    "train": cmd_train,
    "cluster": cmd_cluster,
    "silhouette": cmd_silhouette,
    "propagate": cmd_propagate,
    "cv": cmd_cv,
    "irr": cmd_irr,
    "suggest": cmd_suggest,
    "project": cmd_project,
    "cycle": cmd_cycle,
    "report": cmd_report,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return EXIT_USAGE
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LabelCycleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        # missing/unreadable input files are data problems, not bugs
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - contract: unexpected failure exits 3
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
