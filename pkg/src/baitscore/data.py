"""Challenge-corpus ingestion: instance/truth parsing, statistics, splits.

The corpus ships as two line-delimited JSON files: ``instances.jsonl``
(one post per line, with the linked-article fields inlined) and
``truth.jsonl`` (one crowd annotation per line).  Field names follow the
public corpus exactly (``postText``, ``targetTitle``, ...); unknown
fields are ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

import numpy as np

#: 4-point crowd judgment scale: not / slightly / considerably / heavily
#: clickbaiting.
JUDGMENT_SCALE = (0.0, 0.3, 0.66, 1.0)

#: Alternative scale used by corpus dumps that store judgments as thirds.
JUDGMENT_SCALE_THIRDS = (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0)

CLICKBAIT = "clickbait"
NO_CLICKBAIT = "no-clickbait"

#: Scores >= this threshold are classed as clickbait (ties go positive).
CLASS_THRESHOLD = 0.5


class IngestError(ValueError):
    """Malformed or inconsistent corpus input."""


@dataclass(frozen=True)
class Post:
    """One challenge instance: the tweet plus its linked-article fields.

    Every text field is always present; a field the corpus omitted is the
    empty string (or empty tuple for the list-valued fields).
    """

    id: str
    post_text: tuple[str, ...] = ()
    media_paths: tuple[str, ...] = ()
    timestamp: str = ""
    target_title: str = ""
    target_description: str = ""
    target_keywords: str = ""
    target_paragraphs: tuple[str, ...] = ()
    target_captions: tuple[str, ...] = ()

    def to_json_obj(self) -> dict:
        """Serialize back to the corpus line format (round-trip safe)."""
        return {
            "id": self.id,
            "postText": list(self.post_text),
            "postMedia": list(self.media_paths),
            "postTimestamp": self.timestamp,
            "targetTitle": self.target_title,
            "targetDescription": self.target_description,
            "targetKeywords": self.target_keywords,
            "targetParagraphs": list(self.target_paragraphs),
            "targetCaptions": list(self.target_captions),
        }


@dataclass(frozen=True)
class TruthAnnotation:
    """Crowd judgment record for one post.

    ``synthetic`` marks pseudo-labels produced by a model rather than by
    annotators; those carry an empty judgment list.
    """

    id: str
    judgments: tuple[float, ...]
    truth_mean: float
    truth_class: str
    synthetic: bool = False

    def __post_init__(self):
        if not self.synthetic and len(self.judgments) < 5:
            raise IngestError(
                f"truth {self.id!r}: expected at least 5 judgments, got {len(self.judgments)}"
            )
        if self.truth_class not in (CLICKBAIT, NO_CLICKBAIT):
            raise IngestError(f"truth {self.id!r}: unknown class {self.truth_class!r}")

    def to_json_obj(self) -> dict:
        obj = {
            "id": self.id,
            "truthJudgments": list(self.judgments),
            "truthMean": self.truth_mean,
            "truthClass": self.truth_class,
        }
        if self.synthetic:
            obj["truthSynthetic"] = True
        return obj


@dataclass
class Dataset:
    """An ordered collection of posts, optionally joined with truths."""

    posts: list[Post]
    truths: dict[str, TruthAnnotation] | None = None
    name: str = ""

    def __post_init__(self):
        seen = set()
        for post in self.posts:
            if post.id in seen:
                raise IngestError(f"duplicate post id {post.id!r}")
            seen.add(post.id)
        if self.truths is not None:
            missing = set(self.truths) - seen
            if missing:
                raise IngestError(
                    f"truth ids without matching posts: {sorted(missing)[:5]}"
                )

    def __len__(self) -> int:
        return len(self.posts)

    def truth_for(self, post: Post) -> TruthAnnotation:
        if self.truths is None or post.id not in self.truths:
            raise IngestError(f"post {post.id!r} has no truth annotation")
        return self.truths[post.id]

    @property
    def fully_labelled(self) -> bool:
        return self.truths is not None and all(p.id in self.truths for p in self.posts)


@dataclass(frozen=True)
class RatioStat:
    """Class balance of a labelled dataset."""

    n_posts: int
    n_clickbait: int
    n_not: int

    @property
    def ratio_not_per_clickbait(self) -> float:
        if self.n_clickbait == 0:
            return float("nan")
        return self.n_not / self.n_clickbait

    @property
    def defined(self) -> bool:
        return self.n_clickbait > 0

    def display(self) -> str:
        """Ratio in the conventional "1:x.xx" form (2 decimal places)."""
        if not self.defined:
            return "undefined (no clickbait posts)"
        return f"1:{self.ratio_not_per_clickbait:.2f}"


def _iter_lines(stream: Iterable[str] | IO[str]) -> Iterator[tuple[int, str]]:
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if line:
            yield lineno, line


def _as_str_list(value) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return (value,) if value else ()
    return tuple(str(v) for v in value)


def parse_instances(stream: Iterable[str] | IO[str], name: str = "") -> Dataset:
    """Parse an ``instances.jsonl`` stream into a Dataset (posts only).

    Raises IngestError with the offending line number on malformed JSON
    and with the offending id on duplicates.  Missing optional fields map
    to empty values; post order is preserved.
    """
    posts = []
    seen = set()
    for lineno, line in _iter_lines(stream):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or "id" not in obj:
            raise IngestError(f"line {lineno}: expected an object with an 'id' field")
        post_id = str(obj["id"])
        if post_id in seen:
            raise IngestError(f"duplicate post id {post_id!r} (line {lineno})")
        seen.add(post_id)
        posts.append(
            Post(
                id=post_id,
                post_text=_as_str_list(obj.get("postText")),
                media_paths=_as_str_list(obj.get("postMedia")),
                timestamp=str(obj.get("postTimestamp") or ""),
                target_title=str(obj.get("targetTitle") or ""),
                target_description=str(obj.get("targetDescription") or ""),
                target_keywords=str(obj.get("targetKeywords") or ""),
                target_paragraphs=_as_str_list(obj.get("targetParagraphs")),
                target_captions=_as_str_list(obj.get("targetCaptions")),
            )
        )
    return Dataset(posts=posts, name=name)


def serialize_instances(dataset: Dataset) -> Iterator[str]:
    """Render posts back to the one-object-per-line format."""
    for post in dataset.posts:
        yield json.dumps(post.to_json_obj(), ensure_ascii=False)


def class_for_score(score: float) -> str:
    return CLICKBAIT if score >= CLASS_THRESHOLD else NO_CLICKBAIT


def parse_truth(
    stream: Iterable[str] | IO[str],
    scale: tuple[float, ...] = JUDGMENT_SCALE,
    tolerance: float = 1e-6,
) -> dict[str, TruthAnnotation]:
    """Parse a ``truth.jsonl`` stream into an id -> TruthAnnotation map.

    The file's mean is recomputed from the judgment list and must agree
    within ``tolerance``; every judgment must sit on the 4-point scale
    (``scale`` swaps in the thirds-valued variant some dumps use).
    Records flagged ``truthSynthetic`` are accepted with an empty
    judgment list and no mean recheck against annotator scores.
    """
    truths: dict[str, TruthAnnotation] = {}
    for lineno, line in _iter_lines(stream):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or "id" not in obj:
            raise IngestError(f"line {lineno}: expected an object with an 'id' field")
        truth_id = str(obj["id"])
        if truth_id in truths:
            raise IngestError(f"duplicate truth id {truth_id!r} (line {lineno})")
        synthetic = bool(obj.get("truthSynthetic", False))
        judgments = tuple(float(j) for j in obj.get("truthJudgments") or ())
        file_mean = float(obj["truthMean"])
        if synthetic:
            mean = file_mean
        else:
            for j in judgments:
                if not any(abs(j - s) <= tolerance for s in scale):
                    raise IngestError(
                        f"truth {truth_id!r}: judgment {j} is not on the scale {scale}"
                    )
            if not judgments:
                raise IngestError(f"truth {truth_id!r}: empty judgment list")
            mean = mean_of(judgments)
            if abs(mean - file_mean) > tolerance:
                raise IngestError(
                    f"truth {truth_id!r}: stored mean {file_mean} differs from "
                    f"recomputed mean {mean} by more than {tolerance}"
                )
        truth_class = str(obj.get("truthClass") or class_for_score(mean))
        truths[truth_id] = TruthAnnotation(
            id=truth_id,
            judgments=judgments,
            truth_mean=mean,
            truth_class=truth_class,
            synthetic=synthetic,
        )
    return truths


def serialize_truth(truths: Iterable[TruthAnnotation]) -> Iterator[str]:
    for truth in truths:
        yield json.dumps(truth.to_json_obj(), ensure_ascii=False)


def mean_of(judgments: Iterable[float]) -> float:
    """Arithmetic mean of a non-empty judgment list."""
    values = list(judgments)
    if not values:
        raise IngestError("cannot average an empty judgment list")
    return sum(values) / len(values)


def join_truth(dataset: Dataset, truths: dict[str, TruthAnnotation]) -> Dataset:
    """Attach a truth map to a dataset, requiring a truth for every post."""
    missing = [p.id for p in dataset.posts if p.id not in truths]
    if missing:
        raise IngestError(
            f"{len(missing)} posts lack truth annotations (first: {missing[0]!r})"
        )
    extra = set(truths) - {p.id for p in dataset.posts}
    if extra:
        raise IngestError(f"truth ids without matching posts: {sorted(extra)[:5]}")
    return Dataset(posts=dataset.posts, truths=dict(truths), name=dataset.name)


def class_ratio(dataset: Dataset) -> RatioStat:
    """Count clickbait vs non-clickbait posts by the 0.5 mean threshold."""
    if dataset.truths is None:
        raise IngestError("class_ratio requires a labelled dataset")
    n_clickbait = 0
    n_not = 0
    for post in dataset.posts:
        truth = dataset.truth_for(post)
        if truth.truth_mean >= CLASS_THRESHOLD:
            n_clickbait += 1
        else:
            n_not += 1
    return RatioStat(n_posts=len(dataset), n_clickbait=n_clickbait, n_not=n_not)


def _round_half_up(x: float) -> int:
    # banker's rounding would make split sizes platform-convention
    # dependent; half always rounds up
    return int(np.floor(x + 0.5))


def train_val_split(
    dataset: Dataset, val_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled split into (train, validation).

    Validation gets round(val_fraction * n) posts; the two halves are
    disjoint and together contain every input post.
    """
    if not 0.0 < val_fraction < 1.0:
        raise IngestError(f"val_fraction must be in (0, 1), got {val_fraction}")
    n = len(dataset)
    if n < 2:
        raise IngestError(f"need at least 2 posts to split, got {n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_val = _round_half_up(val_fraction * n)
    val_idx = set(order[:n_val].tolist())
    train_posts = [p for i, p in enumerate(dataset.posts) if i not in val_idx]
    val_posts = [p for i, p in enumerate(dataset.posts) if i in val_idx]

    def subset(posts: list[Post], tag: str) -> Dataset:
        truths = None
        if dataset.truths is not None:
            truths = {p.id: dataset.truths[p.id] for p in posts if p.id in dataset.truths}
        name = f"{dataset.name}/{tag}" if dataset.name else tag
        return Dataset(posts=posts, truths=truths, name=name)

    return subset(train_posts, "train"), subset(val_posts, "val")


def load_dataset(
    instances_path: str,
    truth_path: str | None = None,
    name: str = "",
    scale: tuple[float, ...] = JUDGMENT_SCALE,
) -> Dataset:
    """File-path convenience wrapper over parse_instances / parse_truth."""
    with open(instances_path, encoding="utf-8") as f:
        dataset = parse_instances(f, name=name or instances_path)
    if truth_path is not None:
        with open(truth_path, encoding="utf-8") as f:
            truths = parse_truth(f, scale=scale)
        dataset = join_truth(dataset, truths)
    return dataset
