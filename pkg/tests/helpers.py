"""Shared builders for corpus fixtures used across the test modules."""

from __future__ import annotations

import json
from pathlib import Path

from baitscore.data import Dataset, Post, TruthAnnotation, class_for_score, mean_of


def truth_for(post_id: str, judgments: tuple[float, ...]) -> TruthAnnotation:
    mean = mean_of(judgments)
    return TruthAnnotation(
        id=post_id,
        judgments=tuple(judgments),
        truth_mean=mean,
        truth_class=class_for_score(mean),
    )


def make_dataset(rows, name: str = "test") -> Dataset:
    """rows: iterable of (id, tweet text, judgment tuple or None)."""
    posts = []
    truths: dict[str, TruthAnnotation] = {}
    labelled = False
    for post_id, tweet, judgments in rows:
        posts.append(Post(id=post_id, post_text=(tweet,)))
        if judgments is not None:
            labelled = True
            truths[post_id] = truth_for(post_id, tuple(judgments))
    return Dataset(posts=posts, truths=truths if labelled else None, name=name)


def separable_dataset(
    n: int = 64, marker: str = "revealed", plain: str = "plain", name: str = "sep"
) -> Dataset:
    """Half the posts carry a marker token and truth 1.0, half do not and
    get truth 0.0; filler words stop the vocabulary from being trivial."""
    rows = []
    for i in range(n):
        marked = i < n // 2
        tweet = " ".join(
            [marker if marked else plain, "story", f"filler{i % 5}", "today"]
        )
        rows.append((f"p{i}", tweet, (1.0,) * 5 if marked else (0.0,) * 5))
    return make_dataset(rows, name=name)


def write_corpus(dataset: Dataset, directory: Path, stem: str = "corpus"):
    """Write instances/truth JSONL files; returns their paths (truth path
    is None for unlabelled datasets)."""
    directory.mkdir(parents=True, exist_ok=True)
    instances = directory / f"{stem}-instances.jsonl"
    with open(instances, "w", encoding="utf-8") as f:
        for post in dataset.posts:
            f.write(json.dumps(post.to_json_obj()) + "\n")
    truth = None
    if dataset.truths is not None:
        truth = directory / f"{stem}-truth.jsonl"
        with open(truth, "w", encoding="utf-8") as f:
            for post in dataset.posts:
                f.write(json.dumps(dataset.truths[post.id].to_json_obj()) + "\n")
    return instances, truth
