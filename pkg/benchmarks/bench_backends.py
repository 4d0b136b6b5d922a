#!/usr/bin/env python3
"""Benchmark the pure-numpy training kernels against the compiled extension.

Usage: python3 benchmarks/bench_backends.py [--docs N] [--dim D] [--epochs E]

Each backend trains the same synthetic corpus with the same config; the
report shows wall time per epoch and the resulting loss so a speedup that
broke the math would be visible immediately.
"""

import argparse
import json
import subprocess
import sys
import time
from pathlib import Path

TESTS = Path(__file__).resolve().parent.parent / "tests"

WORKER = """
import json, os, sys, time
sys.path.insert(0, {tests!r})
import numpy as np
from labelcycle.training import TrainingConfig, active_backend
from labelcycle.embedding import train_model
from labelcycle.subword import SubwordIndex
from synthcorpus import synonym_pair_corpus

args = json.loads(sys.argv[1])
docs, pairs = synonym_pair_corpus(
    seed=13, n_docs=args["docs"], n_groups=10, ctx_per_group=19, doc_len=8
)
cfg = TrainingConfig(dim=args["dim"], window=5, epochs=args["epochs"], seed=21)

results = {{}}
for kind in ("cbow", "skipgram", "pvdm"):
    kw = dict(min_count=5, subwords=SubwordIndex(bucket_count=1 << 15))
    if kind == "pvdm":
        kw["doc_ids"] = [f"d{{i}}" for i in range(len(docs))]
    t0 = time.perf_counter()
    model = train_model(docs, kind, cfg, **kw)
    dt = time.perf_counter() - t0
    results[kind] = {{
        "seconds": dt,
        "sec_per_epoch": dt / args["epochs"],
        "final_loss": model.losses[-1],
    }}
print(json.dumps({{"backend": active_backend(), "kinds": results}}))
"""


def run_backend(backend: str, args: argparse.Namespace) -> dict:
    import os

    env = dict(os.environ, LABELCYCLE_BACKEND=backend)
    payload = json.dumps({"docs": args.docs, "dim": args.dim, "epochs": args.epochs})
    proc = subprocess.run(
        [sys.executable, "-c", WORKER.format(tests=str(TESTS)), payload],
        capture_output=True, text=True, env=env,
    )
    if proc.returncode != 0:
        print(proc.stderr, file=sys.stderr)
        raise SystemExit(f"{backend} run failed")
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=1000)
    parser.add_argument("--dim", type=int, default=100)
    parser.add_argument("--epochs", type=int, default=2)
    args = parser.parse_args()

    print(f"corpus: {args.docs} docs, dim={args.dim}, epochs={args.epochs}\n")
    reports = {}
    for backend in ("pure", "compiled"):
        try:
            reports[backend] = run_backend(backend, args)
        except SystemExit as exc:
            print(f"  {backend}: {exc}")

    if not reports:
        raise SystemExit("no backend ran")

    header = f"{'kind':<10} {'backend':<9} {'s/epoch':>9} {'total s':>9} {'final loss':>11}"
    print(header)
    print("-" * len(header))
    for kind in ("cbow", "skipgram", "pvdm"):
        for backend, rep in reports.items():
            row = rep["kinds"][kind]
            print(
                f"{kind:<10} {backend:<9} {row['sec_per_epoch']:>9.3f}"
                f" {row['seconds']:>9.2f} {row['final_loss']:>11.4f}"
            )
        if len(reports) == 2:
            speedup = (
                reports["pure"]["kinds"][kind]["sec_per_epoch"]
                / reports["compiled"]["kinds"][kind]["sec_per_epoch"]
            )
            print(f"{'':<10} speedup  {speedup:>8.1f}x")
        print()


if __name__ == "__main__":
    main()
