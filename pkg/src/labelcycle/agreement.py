"""Inter-rater agreement and hashtag-lexicon label suggestion.

Agreement is plain percent agreement over the posts both raters labeled,
split into completely incorrect (yes vs no) and partially incorrect
(exactly one rater said unclear). Pairs where either side is "removed"
are excluded before any percentage is taken.

Suggestions are deliberately weak signals: they are stored with
source="suggested" and never promote themselves to manual labels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .errors import DataError
from .store import Post

LEXICON_CLASSES = ("yes", "maybe", "no", "unknown")


@dataclass
class StratumAgreement:
    name: str
    universe: int  # posts labeled by both raters
    excluded: int  # pairs dropped because either side said removed
    comparable: int
    same: int
    completely_incorrect: int  # yes vs no
    partially_incorrect: int  # exactly one side unclear

    @property
    def different(self) -> int:
        return self.completely_incorrect + self.partially_incorrect

    def _pct(self, count: int) -> float:
        return 100.0 * count / self.comparable

    def to_json(self) -> dict:
        return {
            "stratum": self.name,
            "universe": self.universe,
            "excluded": self.excluded,
            "comparable": self.comparable,
            "same": self.same,
            "percent_same": self._pct(self.same),
            "percent_different": self._pct(self.different),
            "percent_completely_incorrect": self._pct(self.completely_incorrect),
            "percent_partially_incorrect": self._pct(self.partially_incorrect),
        }


@dataclass
class AgreementReport:
    strata: list[StratumAgreement]

    def stratum(self, name: str) -> StratumAgreement:
        for s in self.strata:
            if s.name == name:
                return s
        raise DataError(f"no stratum named {name!r} in the report")

    def to_json(self) -> dict:
        return {"schema": "irr-report/1", "strata": [s.to_json() for s in self.strata]}


def _classify_pair(a: str, b: str) -> str:
    if a == b:
        return "same"
    if {a, b} == {"yes", "no"}:
        return "completely"
    return "partially"  # exactly one side is unclear


def compute_irr(
    labels_a: Mapping[str, str],
    labels_b: Mapping[str, str],
    strata: Optional[Mapping[str, Iterable[str]]] = None,
) -> AgreementReport:
    """Percent agreement between two raters' label maps.

    The universe of a stratum is the posts both raters labeled (restricted
    to the stratum's ids when strata are given); pairs with a removed label
    on either side are excluded from the comparable set.
    """
    both = sorted(set(labels_a) & set(labels_b))
    if strata is None:
        strata = {"all": both}

    results = []
    for name, ids in strata.items():
        universe = [p for p in ids if p in labels_a and p in labels_b]
        comparable = []
        excluded = 0
        for post_id in universe:
            a, b = labels_a[post_id], labels_b[post_id]
            if a == "removed" or b == "removed":
                excluded += 1
            else:
                comparable.append((a, b))
        if not comparable:
            raise DataError(f"stratum {name!r} has no comparable label pairs")
        kinds = [_classify_pair(a, b) for a, b in comparable]
        results.append(
            StratumAgreement(
                name=name,
                universe=len(universe),
                excluded=excluded,
                comparable=len(comparable),
                same=kinds.count("same"),
                completely_incorrect=kinds.count("completely"),
                partially_incorrect=kinds.count("partially"),
            )
        )
    return AgreementReport(strata=results)


# -- lexicon ------------------------------------------------------------------------


@dataclass
class HashtagLexicon:
    classes: dict[str, str] = field(default_factory=dict)  # tag -> class
    notes: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.classes)

    def classify(self, tag: str) -> str:
        return self.classes.get(_norm_tag(tag), "unknown")


def _norm_tag(tag: str) -> str:
    return tag.strip().lstrip("#").lower()


def demo_lexicon_path() -> Path:
    """The small neutral lexicon shipped for demos and tests. Real
    deployments supply their own CSV."""
    return Path(__file__).parent / "data" / "demo_lexicon.csv"


def load_lexicon(path: str | Path) -> HashtagLexicon:
    """Read a hashtag,class,note CSV. Keys are normalized (lowercase, no
    '#'); duplicates and unknown classes are rejected with the row number."""
    lexicon = HashtagLexicon()
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"hashtag", "class"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise DataError(f"{path}: lexicon needs 'hashtag' and 'class' columns")
        for lineno, row in enumerate(reader, start=2):
            tag = _norm_tag(row["hashtag"] or "")
            cls = (row["class"] or "").strip().lower()
            if not tag:
                raise DataError(f"{path}:{lineno}: empty hashtag")
            if cls not in LEXICON_CLASSES:
                raise DataError(
                    f"{path}:{lineno}: unknown class {cls!r} for {tag!r}"
                    f" (expected one of {', '.join(LEXICON_CLASSES)})"
                )
            if tag in lexicon.classes:
                raise DataError(f"{path}:{lineno}: duplicate hashtag {tag!r}")
            lexicon.classes[tag] = cls
            lexicon.notes[tag] = (row.get("note") or "").strip()
    return lexicon


# -- rubric rules --------------------------------------------------------------------


@dataclass(frozen=True)
class RubricRule:
    rule_id: str
    condition: str
    outcome: str
    executable: bool = False
    requires: tuple[str, ...] = ()


@dataclass
class RubricRuleSet:
    rules: tuple[RubricRule, ...]

    def __post_init__(self):
        ids = [r.rule_id for r in self.rules]
        if len(ids) != len(set(ids)):
            raise DataError("rubric rule ids must be unique")

    def rule(self, rule_id: str) -> RubricRule:
        for r in self.rules:
            if r.rule_id == rule_id:
                return r
        raise DataError(f"no rubric rule {rule_id!r}")


DEFAULT_RUBRIC = RubricRuleSet(
    rules=(
        RubricRule(
            rule_id="R1",
            condition="a source hashtag is classified 'yes' in the lexicon",
            outcome="yes",
            executable=True,
            requires=("source_hashtags", "lexicon"),
        ),
        RubricRule(
            rule_id="R2C3",
            condition="every lexicon-classified source hashtag is 'maybe'",
            outcome="unclear",
            executable=True,
            requires=("source_hashtags", "lexicon"),
        ),
        RubricRule(
            rule_id="R2",
            condition="post text is topic-ambiguous; judge together with the"
            " poster's profile before deciding",
            outcome="rater judgment",
        ),
        RubricRule(
            rule_id="R3",
            condition="the decisive comment may come from someone other than"
            " the poster; attribute authorship before labeling",
            outcome="rater judgment",
        ),
        RubricRule(
            rule_id="R4",
            condition="profile-level signals (bio, other posts) contradict"
            " or confirm the post-only reading; record both bases",
            outcome="rater judgment",
        ),
        RubricRule(
            rule_id="R5",
            condition="when in doubt after all other rules, prefer 'unclear'"
            " over guessing",
            outcome="rater judgment",
        ),
    )
)


@dataclass(frozen=True)
class Suggestion:
    value: str
    rule_id: str
    matched_tags: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "rule_id": self.rule_id,
            "matched_tags": list(self.matched_tags),
        }


def suggest_label(
    post: Post,
    lexicon: HashtagLexicon,
    rules: RubricRuleSet = DEFAULT_RUBRIC,
) -> Optional[Suggestion]:
    """Apply the executable rubric rules to a post's source hashtags.

    Any yes-classified tag wins (rule R1). Otherwise, if the post's
    lexicon-classified tags are all 'maybe', suggest unclear (R2C3).
    Tags classified 'unknown' or absent from the lexicon carry no signal.
    The result depends only on the tag set, not its order.
    """
    classified = {}
    for tag in post.source_hashtags:
        cls = lexicon.classify(tag)
        if cls != "unknown":
            classified[_norm_tag(tag)] = cls

    yes_tags = tuple(sorted(t for t, c in classified.items() if c == "yes"))
    if yes_tags and rules.rule("R1").executable:
        return Suggestion(value="yes", rule_id="R1", matched_tags=yes_tags)
    if classified and all(c == "maybe" for c in classified.values()):
        if rules.rule("R2C3").executable:
            return Suggestion(
                value="unclear",
                rule_id="R2C3",
                matched_tags=tuple(sorted(classified)),
            )
    return None
