"""Cluster-unanimity label propagation and its k-fold evaluation.

A cluster receives a label only when enough of its members carry manual
labels and those labels agree; every unlabeled member then inherits the
cluster's label. Cross-validation holds out one fold of the manual labels,
propagates from the rest, and scores only the held-out posts that actually
received a label (coverage is reported separately, never folded into
accuracy).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .errors import DataError
from .store import LabelRecord

_FRAC_SLACK = 1e-12  # "fraction >= threshold" must tolerate float division

PROPAGATION_RATER = "propagation"


@dataclass(frozen=True)
class PropagationPolicy:
    min_labeled: int = 5
    unanimity_threshold: float = 1.0
    eligible_values: frozenset = frozenset({"yes", "no", "unclear"})

    def __post_init__(self):
        if self.min_labeled < 1:
            raise DataError("min_labeled must be at least 1")
        if not 0.0 < self.unanimity_threshold <= 1.0:
            raise DataError("unanimity_threshold must be in (0, 1]")
        if not self.eligible_values:
            raise DataError("eligible_values must not be empty")
        object.__setattr__(self, "eligible_values", frozenset(self.eligible_values))


@dataclass
class ClusterDecision:
    cluster_id: int
    size: int
    labeled_count: int  # manual labels with eligible values
    histogram: dict[str, int]
    decided: bool
    value: Optional[str]
    manual_count: int = 0  # manual labels of any value (never overwritten)


@dataclass
class PropagationReport:
    clusters: list[ClusterDecision]
    newly_labeled: int
    per_value_totals: dict[str, int]
    applicable: bool  # False when no cluster met the policy

    def to_json(self) -> dict:
        return {
            "schema": "propagation-report/1",
            "applicable": self.applicable,
            "newly_labeled": self.newly_labeled,
            "per_value_totals": dict(sorted(self.per_value_totals.items())),
            "clusters": [
                {
                    "cluster_id": c.cluster_id,
                    "size": c.size,
                    "labeled_count": c.labeled_count,
                    "manual_count": c.manual_count,
                    "histogram": dict(sorted(c.histogram.items())),
                    "decided": c.decided,
                    "value": c.value,
                }
                for c in self.clusters
            ],
        }


@dataclass
class CVReport:
    folds: int
    rows: list[dict]  # per fold: held_out, applied, correct, accuracy (None if nothing applied)
    mean_accuracy: Optional[float]
    coverage: float
    applicable: bool
    seed: int = 0

    def to_json(self) -> dict:
        return {
            "schema": "cv-report/1",
            "folds": self.folds,
            "seed": self.seed,
            "applicable": self.applicable,
            "mean_accuracy": self.mean_accuracy,
            "coverage": self.coverage,
            "rows": self.rows,
        }


def _members_by_cluster(assignment: Mapping[str, int]) -> dict[int, list[str]]:
    out: dict[int, list[str]] = {}
    for post_id, cluster in assignment.items():
        out.setdefault(int(cluster), []).append(post_id)
    return out


def cluster_decisions(
    assignment: Mapping[str, int],
    manual_labels: Mapping[str, str],
    policy: PropagationPolicy,
) -> list[ClusterDecision]:
    """Apply the policy to every cluster. Pure; no records are minted.

    Only labels whose value is in policy.eligible_values count toward the
    histogram and min_labeled, but any manual label protects its post from
    being overwritten.
    """
    for post_id in manual_labels:
        if post_id not in assignment:
            raise DataError(f"labeled post {post_id!r} is absent from the assignment")

    decisions = []
    for cluster_id, members in sorted(_members_by_cluster(assignment).items()):
        hist: Counter = Counter()
        manual_count = 0
        for post_id in members:
            value = manual_labels.get(post_id)
            if value is None:
                continue
            manual_count += 1
            if value in policy.eligible_values:
                hist[value] += 1
        labeled_count = sum(hist.values())

        decided = False
        value = None
        if labeled_count >= policy.min_labeled:
            top = max(hist.values())
            winners = [v for v, c in hist.items() if c == top]
            fraction = top / labeled_count
            # a tie at the threshold is ambiguous, not unanimous
            if len(winners) == 1 and fraction >= policy.unanimity_threshold - _FRAC_SLACK:
                decided = True
                value = winners[0]

        decisions.append(
            ClusterDecision(
                cluster_id=cluster_id,
                size=len(members),
                labeled_count=labeled_count,
                histogram=dict(hist),
                decided=decided,
                value=value,
                manual_count=manual_count,
            )
        )
    return decisions


def propagate(
    assignment: Mapping[str, int],
    manual_labels: Mapping[str, str],
    policy: PropagationPolicy = PropagationPolicy(),
    round_id: int = 0,
    basis: str = "post_only",
    created_at: str = "",
) -> tuple[PropagationReport, list[LabelRecord]]:
    """Label every unlabeled member of each decided cluster.

    Returns the report plus the new records (source="propagated"). Posts
    that already carry any manual label are never touched.
    """
    decisions = cluster_decisions(assignment, manual_labels, policy)
    members = _members_by_cluster(assignment)

    records: list[LabelRecord] = []
    per_value: Counter = Counter()
    for decision in decisions:
        if not decision.decided:
            continue
        for post_id in members[decision.cluster_id]:
            if post_id in manual_labels:
                continue
            records.append(
                LabelRecord(
                    post_id=post_id,
                    rater_id=PROPAGATION_RATER,
                    value=decision.value,
                    basis=basis,
                    source="propagated",
                    round=round_id,
                    created_at=created_at,
                )
            )
            per_value[decision.value] += 1

    report = PropagationReport(
        clusters=decisions,
        newly_labeled=len(records),
        per_value_totals=dict(per_value),
        applicable=any(d.decided for d in decisions),
    )
    return report, records


def cross_validate(
    assignment: Mapping[str, int],
    manual_labels: Mapping[str, str],
    policy: PropagationPolicy = PropagationPolicy(),
    folds: int = 10,
    seed: int = 1,
) -> CVReport:
    """Strict leave-out k-fold evaluation of the propagation rule.

    Each fold's labels are fully hidden while the remaining labels drive
    propagation; a held-out post scores iff its cluster was decided. Fold
    accuracy is None when the fold applied no labels; the mean skips such
    folds, and an all-None run is marked not applicable.
    """
    for post_id in manual_labels:
        if post_id not in assignment:
            raise DataError(f"labeled post {post_id!r} is absent from the assignment")
    n = len(manual_labels)
    if folds < 2:
        raise DataError("cross-validation needs at least 2 folds")
    if n < folds:
        raise DataError(f"need at least {folds} manual labels for {folds} folds, have {n}")

    ids = sorted(manual_labels)
    rng = np.random.default_rng(seed)
    rng.shuffle(ids)
    groups = np.array_split(np.asarray(ids, dtype=object), folds)

    rows = []
    total_applied = 0
    total_correct = 0
    for j, group in enumerate(groups):
        held = set(group.tolist())
        train = {p: v for p, v in manual_labels.items() if p not in held}
        decided = {
            d.cluster_id: d.value
            for d in cluster_decisions(assignment, train, policy)
            if d.decided
        }
        applied = 0
        correct = 0
        for post_id in held:
            value = decided.get(assignment[post_id])
            if value is None:
                continue
            applied += 1
            correct += int(value == manual_labels[post_id])
        rows.append(
            {
                "fold": j,
                "held_out": len(held),
                "applied": applied,
                "correct": correct,
                "accuracy": (correct / applied) if applied else None,
            }
        )
        total_applied += applied
        total_correct += correct

    scored = [r["accuracy"] for r in rows if r["accuracy"] is not None]
    return CVReport(
        folds=folds,
        rows=rows,
        mean_accuracy=(sum(scored) / len(scored)) if scored else None,
        coverage=total_applied / n,
        applicable=bool(scored),
        seed=seed,
    )


def ambiguous_clusters(
    assignment: Mapping[str, int],
    manual_labels: Mapping[str, str],
    policy: PropagationPolicy = PropagationPolicy(),
    sample_size: int = 10,
) -> list[dict]:
    """Clusters the policy could not decide, ranked for the labeling queue:
    biggest first, least-labeled breaking ties. Samples are unlabeled post
    ids in sorted order."""
    decisions = cluster_decisions(assignment, manual_labels, policy)
    members = _members_by_cluster(assignment)
    failing = [d for d in decisions if not d.decided]
    failing.sort(key=lambda d: (-d.size, d.labeled_count, d.cluster_id))
    out = []
    for d in failing:
        unlabeled = sorted(p for p in members[d.cluster_id] if p not in manual_labels)
        out.append(
            {
                "cluster_id": d.cluster_id,
                "size": d.size,
                "labeled_count": d.labeled_count,
                "histogram": dict(sorted(d.histogram.items())),
                "sample_unlabeled": unlabeled[:sample_size],
            }
        )
    return out
