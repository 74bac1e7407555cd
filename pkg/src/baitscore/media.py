"""Image-side inputs: precomputed feature vectors, object tags, and the
category-proportion analysis.

This module never touches pixels.  It loads sidecar files produced by an
offline extractor (or by the synthetic generator below), serves the
2,048-dim vectors to the fusion model, and aggregates object detections
into per-class and per-score-bin category proportions, the tables behind
the proportion charts.

File formats:
  image vectors   one JSON object per line  {"id": "...", "vector": [2048 reals]}
  object tags     one JSON object per line  {"id": "...", "detections": [{"label": "...", "score": r}]}
  category map    two-column text           label<TAB>category
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

IMAGE_DIM = 2048

#: The object detector's 80-label training inventory.
COCO_LABELS = frozenset({
    "person",
    "bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck", "boat",
    "traffic light", "fire hydrant", "stop sign", "parking meter", "bench",
    "bird", "cat", "dog", "horse", "sheep", "cow", "elephant", "bear", "zebra",
    "giraffe",
    "backpack", "umbrella", "handbag", "tie", "suitcase",
    "frisbee", "skis", "snowboard", "sports ball", "kite", "baseball bat",
    "baseball glove", "skateboard", "surfboard", "tennis racket",
    "bottle", "wine glass", "cup", "fork", "knife", "spoon", "bowl",
    "banana", "apple", "sandwich", "orange", "broccoli", "carrot", "hot dog",
    "pizza", "donut", "cake",
    "chair", "couch", "potted plant", "bed", "dining table", "toilet",
    "tv", "laptop", "mouse", "remote", "keyboard", "cell phone",
    "microwave", "oven", "toaster", "sink", "refrigerator",
    "book", "clock", "vase", "scissors", "teddy bear", "hair drier",
    "toothbrush",
})

#: The eleven coarse buckets, in fixed output order.
CATEGORIES = (
    "personal", "vehicle", "traffic", "animal", "sports", "food",
    "dish", "furniture", "electronics", "appliances", "accessory",
)

DEFAULT_MIN_CONFIDENCE = 0.5


class MediaError(ValueError):
    """Malformed sidecar file or violated analysis precondition."""


# ---------------------------------------------------------------------------
# image vectors


class ImageVectorStore:
    """Immutable id -> 2,048-dim vector lookup."""

    def __init__(self, vectors: Mapping[str, np.ndarray], dim: int = IMAGE_DIM):
        self.dim = dim
        self._vectors: dict[str, np.ndarray] = {}
        for post_id, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (dim,):
                raise MediaError(
                    f"vector for id {post_id!r} has {arr.size} entries, expected {dim}"
                )
            if not np.all(np.isfinite(arr)):
                raise MediaError(f"vector for id {post_id!r} has non-finite entries")
            arr.flags.writeable = False
            self._vectors[post_id] = arr

    def get(self, post_id: str) -> np.ndarray | None:
        return self._vectors.get(post_id)

    def ids(self) -> list[str]:
        return list(self._vectors)

    def __contains__(self, post_id: str) -> bool:
        return post_id in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)


def load_image_vectors(source: str | Path | IO[str], dim: int = IMAGE_DIM) -> ImageVectorStore:
    """Parse an image-vector file; errors name the offending id."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as f:
            return load_image_vectors(f, dim=dim)
    vectors: dict[str, np.ndarray] = {}
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MediaError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or "id" not in obj or "vector" not in obj:
            raise MediaError(f"line {lineno}: expected {{'id', 'vector'}} object")
        post_id = str(obj["id"])
        if post_id in vectors:
            raise MediaError(f"duplicate image vector for id {post_id!r} (line {lineno})")
        vec = np.asarray(obj["vector"], dtype=np.float64)
        if vec.shape != (dim,):
            raise MediaError(
                f"vector for id {post_id!r} has {vec.size} entries, expected {dim}"
            )
        vectors[post_id] = vec
    store = ImageVectorStore(vectors, dim=dim)
    log.info("loaded %d image vectors (%d-dim)", len(store), dim)
    return store


def write_image_vectors(store: ImageVectorStore, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for post_id in store.ids():
            vec = store.get(post_id)
            f.write(json.dumps({"id": post_id, "vector": vec.tolist()}))
            f.write("\n")


def _stable_id_seed(post_id: str) -> int:
    digest = hashlib.sha256(post_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def generate_synthetic_vectors(
    ids: Iterable[str], seed: int = 0, dim: int = IMAGE_DIM, scale: float = 1.0
) -> ImageVectorStore:
    """Deterministic stand-in vectors for tests and dry runs.

    Each id's vector depends only on (seed, id), so subsets of a corpus
    get identical vectors regardless of ordering.  Values are non-negative,
    like pooled rectifier activations.
    """
    vectors = {}
    for post_id in ids:
        rng = np.random.default_rng([seed, _stable_id_seed(post_id)])
        vectors[post_id] = np.abs(rng.normal(0.0, scale, size=dim))
    return ImageVectorStore(vectors, dim=dim)


# ---------------------------------------------------------------------------
# object tags


@dataclass(frozen=True)
class Detection:
    label: str
    score: float


@dataclass(frozen=True)
class ObjectTagRecord:
    id: str
    detections: tuple[Detection, ...]


def load_object_tags(
    source: str | Path | IO[str], known_labels: frozenset[str] = COCO_LABELS
) -> list[ObjectTagRecord]:
    """Parse an object-tag file, checking labels against the detector
    inventory and confidences against [0, 1]."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as f:
            return load_object_tags(f, known_labels=known_labels)
    records = []
    seen = set()
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MediaError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or "id" not in obj:
            raise MediaError(f"line {lineno}: expected an object with an 'id' field")
        post_id = str(obj["id"])
        if post_id in seen:
            raise MediaError(f"duplicate object tags for id {post_id!r} (line {lineno})")
        seen.add(post_id)
        detections = []
        for det in obj.get("detections") or []:
            label = str(det.get("label", ""))
            if label not in known_labels:
                raise MediaError(
                    f"id {post_id!r}: unknown object label {label!r} (line {lineno})"
                )
            score = float(det.get("score", 0.0))
            if not 0.0 <= score <= 1.0:
                raise MediaError(
                    f"id {post_id!r}: confidence {score} outside [0, 1] (line {lineno})"
                )
            detections.append(Detection(label=label, score=score))
        records.append(ObjectTagRecord(id=post_id, detections=tuple(detections)))
    log.info("loaded object tags for %d images", len(records))
    return records


def write_object_tags(records: Sequence[ObjectTagRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            obj = {
                "id": record.id,
                "detections": [
                    {"label": d.label, "score": d.score} for d in record.detections
                ],
            }
            f.write(json.dumps(obj))
            f.write("\n")


# ---------------------------------------------------------------------------
# category map


@dataclass(frozen=True)
class CategoryMap:
    """Total mapping from the 80 object labels to the eleven buckets."""

    label_to_category: Mapping[str, str]

    def __post_init__(self):
        labels = set(self.label_to_category)
        missing = COCO_LABELS - labels
        if missing:
            raise MediaError(
                f"category map misses {len(missing)} labels (e.g. {sorted(missing)[:3]})"
            )
        extra = labels - COCO_LABELS
        if extra:
            raise MediaError(f"category map has unknown labels: {sorted(extra)[:3]}")
        cats = set(self.label_to_category.values())
        if len(cats) != len(CATEGORIES):
            raise MediaError(
                f"category map must use exactly {len(CATEGORIES)} categories, got {len(cats)}"
            )
        unknown = cats - set(CATEGORIES)
        if unknown:
            raise MediaError(f"unknown categories: {sorted(unknown)}")

    def category(self, label: str) -> str:
        try:
            return self.label_to_category[label]
        except KeyError:
            raise MediaError(f"no category for object label {label!r}") from None


def default_category_map_path() -> Path:
    from importlib import resources

    return Path(str(resources.files("baitscore") / "coco" / "category_map.tsv"))


def load_category_map(source: str | Path | IO[str] | None = None) -> CategoryMap:
    """Load a label<TAB>category file; None loads the bundled default."""
    if source is None:
        source = default_category_map_path()
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as f:
            return load_category_map(f)
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise MediaError(f"line {lineno}: expected 'label<TAB>category'")
        label, category = parts[0].strip(), parts[1].strip()
        if label in mapping:
            raise MediaError(f"line {lineno}: duplicate label {label!r}")
        mapping[label] = category
    return CategoryMap(label_to_category=mapping)


# ---------------------------------------------------------------------------
# proportion analysis


@dataclass(frozen=True)
class ProportionRow:
    """Category mix of one group (a class or a score bin).

    ``proportions`` covers every category in CATEGORIES order; rows with
    detections sum to 1, empty groups are all-zero and flagged.
    """

    key: str
    total_detections: int
    proportions: Mapping[str, float]

    @property
    def empty(self) -> bool:
        return self.total_detections == 0


def _count_categories(
    records: Iterable[ObjectTagRecord], cmap: CategoryMap, min_confidence: float
) -> tuple[dict[str, int], int]:
    """Detection counts per category, keeping scores at or above the floor."""
    counts = {cat: 0 for cat in CATEGORIES}
    total = 0
    for record in records:
        for det in record.detections:
            if det.score >= min_confidence:
                counts[cmap.category(det.label)] += 1
                total += 1
    return counts, total


def _proportion_row(key: str, counts: dict[str, int], total: int) -> ProportionRow:
    if total == 0:
        proportions = {cat: 0.0 for cat in CATEGORIES}
    else:
        proportions = {cat: counts[cat] / total for cat in CATEGORIES}
    return ProportionRow(key=key, total_detections=total, proportions=proportions)


def category_proportions(
    tags: Sequence[ObjectTagRecord],
    classes: Mapping[str, str],
    cmap: CategoryMap,
    min_confidence: float = DEFAULT_MIN_CONFIDENCE,
) -> list[ProportionRow]:
    """Per-class category mix over all detections at or above the floor.

    Every tag id must have a class.  Output rows are sorted by class
    label; each class present in ``classes`` values appears even when it
    ends up with zero detections (all-zero row, flagged via .empty).
    """
    missing = [t.id for t in tags if t.id not in classes]
    if missing:
        raise MediaError(
            f"{len(missing)} tag records have no class (first: {missing[0]!r})"
        )
    by_class: dict[str, list[ObjectTagRecord]] = {c: [] for c in sorted(set(classes.values()))}
    for record in tags:
        by_class[classes[record.id]].append(record)
    rows = []
    for class_label, records in by_class.items():
        counts, total = _count_categories(records, cmap, min_confidence)
        row = _proportion_row(class_label, counts, total)
        if row.empty:
            log.warning("class %r has no detections at confidence >= %s",
                        class_label, min_confidence)
        rows.append(row)
    return rows


@dataclass(frozen=True)
class TrendTable:
    """Per-score-bin category proportions (plot-ready)."""

    bins: int
    rows: tuple[ProportionRow, ...]  # key = formatted bin center, populated bins only
    bin_centers: tuple[float, ...]  # centers of populated bins, ascending
    empty_bins: tuple[float, ...]  # centers of omitted (empty) bins


def proportion_trend(
    tags: Sequence[ObjectTagRecord],
    scores: Mapping[str, float],
    cmap: CategoryMap,
    bins: int,
    min_confidence: float = DEFAULT_MIN_CONFIDENCE,
) -> TrendTable:
    """Category mix as a function of score, over equal-width bins of [0, 1].

    A score of exactly 1.0 lands in the last bin.  Bins with no
    detections are omitted from the rows and listed in empty_bins.
    """
    if bins < 2:
        raise MediaError(f"need at least 2 bins, got {bins}")
    missing = [t.id for t in tags if t.id not in scores]
    if missing:
        raise MediaError(
            f"{len(missing)} tag records have no score (first: {missing[0]!r})"
        )
    bad = {t.id: scores[t.id] for t in tags if not 0.0 <= scores[t.id] <= 1.0}
    if bad:
        post_id, score = next(iter(bad.items()))
        raise MediaError(f"score {score} for id {post_id!r} outside [0, 1]")

    by_bin: dict[int, list[ObjectTagRecord]] = {i: [] for i in range(bins)}
    for record in tags:
        index = min(int(scores[record.id] * bins), bins - 1)
        by_bin[index].append(record)

    rows = []
    centers = []
    empty = []
    for index in range(bins):
        center = (index + 0.5) / bins
        counts, total = _count_categories(by_bin[index], cmap, min_confidence)
        if total == 0:
            empty.append(center)
            log.warning("score bin centered at %.3f is empty; row omitted", center)
            continue
        rows.append(_proportion_row(f"{center:.6g}", counts, total))
        centers.append(center)
    return TrendTable(
        bins=bins,
        rows=tuple(rows),
        bin_centers=tuple(centers),
        empty_bins=tuple(empty),
    )


# ---------------------------------------------------------------------------
# delimited output


def proportions_csv(rows: Sequence[ProportionRow]) -> str:
    """CSV "class,category,proportion", categories in fixed order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["class", "category", "proportion"])
    for row in rows:
        for cat in CATEGORIES:
            writer.writerow([row.key, cat, f"{row.proportions[cat]:.9g}"])
    return buf.getvalue()


def trend_csv(trend: TrendTable) -> str:
    """CSV "bin_center,category,proportion", populated bins only."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_center", "category", "proportion"])
    for center, row in zip(trend.bin_centers, trend.rows):
        for cat in CATEGORIES:
            writer.writerow([f"{center:.6g}", cat, f"{row.proportions[cat]:.9g}"])
    return buf.getvalue()
