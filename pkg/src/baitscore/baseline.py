"""Boosted-stump regression baseline over tf-idf unigram features.

The booster is AdaBoost.R2 with linear loss and depth-1 regression
stumps: each round resamples the training set by the example-weight
distribution, fits a stump on the resample, measures normalized absolute
error on the full set, and reweights.  Prediction is the lower weighted
median of the stump outputs.  Everything is deterministic for a fixed
seed.

tf-idf is fixed bit-for-bit: tf = raw term count, idf = ln((1+n)/(1+df)) + 1,
rows L2-normalized, closed vocabulary with columns in sorted term order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from baitscore import cues as cues_mod
from baitscore import text as text_mod

LINEAR = "linear"
LOSSES = (LINEAR, "square", "exponential")

DEFAULT_ESTIMATORS = 50


class BaselineError(ValueError):
    """Invalid inputs to the baseline fit/predict pipeline."""


# ---------------------------------------------------------------------------
# tf-idf


@dataclass(frozen=True)
class TfidfModel:
    """Closed-vocabulary tf-idf weighting fitted on one corpus."""

    vocabulary: Mapping[str, int]
    idf: np.ndarray
    n_docs: int

    def __post_init__(self):
        if len(self.vocabulary) != self.idf.shape[0]:
            raise BaselineError(
                f"vocabulary size {len(self.vocabulary)} != idf table size {self.idf.shape[0]}"
            )
        cols = sorted(self.vocabulary.values())
        if cols != list(range(len(cols))):
            raise BaselineError("vocabulary columns must be dense 0..V-1")
        if np.any(self.idf < 0):
            raise BaselineError("idf values must be non-negative")

    @property
    def n_terms(self) -> int:
        return len(self.vocabulary)


def tfidf_fit(corpus: Sequence[Sequence[str]]) -> TfidfModel:
    """Fit vocabulary and idf table; columns are sorted term order.

    idf = ln((1+n)/(1+df)) + 1, so terms in every document still get
    weight 1 and nothing is ever zeroed out.
    """
    if len(corpus) == 0:
        raise BaselineError("tfidf_fit needs a non-empty corpus")
    df: dict[str, int] = {}
    for doc in corpus:
        for term in set(doc):
            df[term] = df.get(term, 0) + 1
    terms = sorted(df)
    vocabulary = {term: col for col, term in enumerate(terms)}
    n = len(corpus)
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1.0 for t in terms])
    return TfidfModel(vocabulary=vocabulary, idf=idf, n_docs=n)


def tfidf_transform(model: TfidfModel, docs: Sequence[Sequence[str]]) -> sp.csr_matrix:
    """Sparse (n_docs, n_terms) matrix of L2-normalized tf-idf rows.

    Out-of-vocabulary terms are ignored; an empty (or fully OOV) document
    becomes a zero row.
    """
    data, indices, indptr = [], [], [0]
    for doc in docs:
        counts: dict[int, int] = {}
        for term in doc:
            col = model.vocabulary.get(term)
            if col is not None:
                counts[col] = counts.get(col, 0) + 1
        row_cols = sorted(counts)
        row = np.array([counts[c] * model.idf[c] for c in row_cols])
        norm = float(np.sqrt(np.sum(row**2)))
        if norm > 0:
            row = row / norm
        data.extend(row.tolist())
        indices.extend(row_cols)
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(docs), model.n_terms),
    )


# ---------------------------------------------------------------------------
# stumps


@dataclass(frozen=True)
class Stump:
    """Depth-1 regression split: value <= threshold goes left."""

    feature: int
    threshold: float
    left: float
    right: float

    def predict_column(self, column: np.ndarray) -> np.ndarray:
        return np.where(column <= self.threshold, self.left, self.right)


def _column(X, j: int) -> np.ndarray:
    if sp.issparse(X):
        return np.asarray(X[:, [j]].todense()).ravel()
    return np.asarray(X[:, j], dtype=np.float64).ravel()


def _best_split_for_column(x: np.ndarray, y: np.ndarray):
    """(sse, threshold, left_mean, right_mean) for the best split of one
    column, or None when the column is constant.  Thresholds are midpoints
    between consecutive distinct values; the lowest qualifying threshold
    wins SSE ties."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y[order]
    boundaries = np.nonzero(xs[:-1] < xs[1:])[0]
    if boundaries.size == 0:
        return None
    n = x.shape[0]
    cum_y = np.cumsum(ys)
    cum_y2 = np.cumsum(ys**2)
    total_y = cum_y[-1]
    total_y2 = cum_y2[-1]

    n_left = boundaries + 1
    sum_left = cum_y[boundaries]
    sq_left = cum_y2[boundaries]
    n_right = n - n_left
    sum_right = total_y - sum_left
    sq_right = total_y2 - sq_left
    sse = (sq_left - sum_left**2 / n_left) + (sq_right - sum_right**2 / n_right)
    best = int(np.argmin(sse))
    i = boundaries[best]
    return (
        float(sse[best]),
        float((xs[i] + xs[i + 1]) / 2.0),
        float(sum_left[best] / n_left[best]),
        float(sum_right[best] / n_right[best]),
    )


def fit_stump(X, y: np.ndarray) -> Stump:
    """Least-squares depth-1 stump; features scanned in ascending order
    and the first strictly-better split wins, so ties are deterministic.
    A fully constant X degenerates to a stump predicting the mean."""
    y = np.asarray(y, dtype=np.float64)
    n_features = X.shape[1]
    best = None
    for j in range(n_features):
        found = _best_split_for_column(_column(X, j), y)
        if found is None:
            continue
        if best is None or found[0] < best[0]:
            best = (found[0], j, found[1], found[2], found[3])
    if best is None:
        mean = float(y.mean())
        return Stump(feature=0, threshold=0.0, left=mean, right=mean)
    _, j, threshold, left, right = best
    return Stump(feature=j, threshold=threshold, left=left, right=right)


# ---------------------------------------------------------------------------
# AdaBoost.R2


@dataclass(frozen=True)
class StumpEnsemble:
    stumps: tuple[Stump, ...]
    stump_weights: tuple[float, ...]
    loss: str = LINEAR

    def __post_init__(self):
        if len(self.stumps) == 0:
            raise BaselineError("ensemble must contain at least one stump")
        if len(self.stumps) != len(self.stump_weights):
            raise BaselineError("one weight per stump required")
        weights = np.asarray(self.stump_weights)
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise BaselineError("stump weights must be finite and positive")
        if self.loss not in LOSSES:
            raise BaselineError(f"loss must be one of {LOSSES}, got {self.loss!r}")


@dataclass
class BoostRound:
    """Transcript of one boosting round, for oracle comparison in tests."""

    resample: np.ndarray
    stump: Stump
    error_max: float
    avg_loss: float
    beta: float | None
    stump_weight: float
    weights_after: np.ndarray
    kept: bool


def _loss_vector(errors: np.ndarray, loss: str) -> np.ndarray:
    error_max = float(errors.max())
    if error_max != 0.0:
        errors = errors / error_max
    if loss == "square":
        errors = errors**2
    elif loss == "exponential":
        errors = 1.0 - np.exp(-errors)
    return errors


def ab_fit(
    X,
    y: Sequence[float],
    n_estimators: int = DEFAULT_ESTIMATORS,
    seed: int = 0,
    loss: str = LINEAR,
    trace: list[BoostRound] | None = None,
) -> StumpEnsemble:
    """AdaBoost.R2 over depth-1 stumps.

    Per round: resample by the weight distribution, fit a stump on the
    resample, score normalized loss on the full set, then either stop
    (perfect fit, weight 1.0), stop on average loss >= 0.5 (the round's
    stump is discarded unless the ensemble would end up empty), or keep
    the stump with weight ln(1/beta) and reweight examples by
    beta^(1 - loss_i), renormalizing to a distribution.

    Pass ``trace`` to capture the per-round transcript.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if X.shape[0] != n:
        raise BaselineError(f"X has {X.shape[0]} rows but y has {n}")
    if n < 2:
        raise BaselineError("need at least 2 examples")
    if np.any((y < 0) | (y > 1)):
        raise BaselineError("targets must lie in [0, 1]")
    if n_estimators < 1:
        raise BaselineError(f"n_estimators must be >= 1, got {n_estimators}")
    if loss not in LOSSES:
        raise BaselineError(f"loss must be one of {LOSSES}, got {loss!r}")

    X_csc = sp.csc_matrix(X) if sp.issparse(X) else np.asarray(X, dtype=np.float64)
    rng = np.random.default_rng(seed)
    weights = np.full(n, 1.0 / n)
    stumps: list[Stump] = []
    stump_weights: list[float] = []

    for _ in range(n_estimators):
        resample = rng.choice(n, size=n, replace=True, p=weights)
        stump = fit_stump(
            X_csc[resample] if sp.issparse(X_csc) else X_csc[resample, :], y[resample]
        )
        predictions = stump.predict_column(_column(X_csc, stump.feature))
        errors = np.abs(predictions - y)
        error_max = float(errors.max())
        loss_vec = _loss_vector(errors, loss)
        avg_loss = float(np.sum(weights * loss_vec))

        if avg_loss <= 0.0:
            stumps.append(stump)
            stump_weights.append(1.0)
            if trace is not None:
                trace.append(BoostRound(resample, stump, error_max, avg_loss, None,
                                        1.0, weights.copy(), kept=True))
            break
        if avg_loss >= 0.5:
            if not stumps:
                # the ensemble may not end up empty; keep this one stump
                stumps.append(stump)
                stump_weights.append(1.0)
                if trace is not None:
                    trace.append(BoostRound(resample, stump, error_max, avg_loss, None,
                                            1.0, weights.copy(), kept=True))
            elif trace is not None:
                trace.append(BoostRound(resample, stump, error_max, avg_loss, None,
                                        0.0, weights.copy(), kept=False))
            break

        beta = avg_loss / (1.0 - avg_loss)
        stump_weight = math.log(1.0 / beta)
        stumps.append(stump)
        stump_weights.append(stump_weight)
        weights = weights * np.power(beta, 1.0 - loss_vec)
        weights = weights / weights.sum()
        if trace is not None:
            trace.append(BoostRound(resample, stump, error_max, avg_loss, beta,
                                    stump_weight, weights.copy(), kept=True))

    return StumpEnsemble(
        stumps=tuple(stumps), stump_weights=tuple(stump_weights), loss=loss
    )


def ab_predict(ensemble: StumpEnsemble, X) -> np.ndarray:
    """Lower weighted median of stump outputs per row, clamped to [0, 1]."""
    n = X.shape[0]
    columns: dict[int, np.ndarray] = {}
    outputs = np.empty((n, len(ensemble.stumps)))
    for k, stump in enumerate(ensemble.stumps):
        if stump.feature not in columns:
            columns[stump.feature] = _column(X, stump.feature)
        outputs[:, k] = stump.predict_column(columns[stump.feature])
    weights = np.asarray(ensemble.stump_weights)

    sorted_idx = np.argsort(outputs, axis=1, kind="stable")
    cdf = np.cumsum(weights[sorted_idx], axis=1)
    above = cdf >= 0.5 * cdf[:, -1][:, None]
    median_pos = above.argmax(axis=1)
    chosen = sorted_idx[np.arange(n), median_pos]
    return np.clip(outputs[np.arange(n), chosen], 0.0, 1.0)


# ---------------------------------------------------------------------------
# full baseline pipeline


@dataclass(frozen=True)
class BaselineModel:
    """tf-idf features (plus optional appended cue columns) and the
    boosted ensemble, with the knobs needed to rebuild features."""

    tfidf: TfidfModel
    ensemble: StumpEnsemble
    text_source: text_mod.DocumentSource = text_mod.DocumentSource.TWEET
    use_cues: bool = False
    cue_normalization: cues_mod.Normalization = cues_mod.Normalization.PER_TOKEN

    def to_json_obj(self) -> dict:
        terms = sorted(self.tfidf.vocabulary, key=self.tfidf.vocabulary.get)
        return {
            "tfidf": {
                "terms": terms,
                "idf": self.tfidf.idf.tolist(),
                "n_docs": self.tfidf.n_docs,
            },
            "ensemble": {
                "loss": self.ensemble.loss,
                "stumps": [
                    [s.feature, s.threshold, s.left, s.right] for s in self.ensemble.stumps
                ],
                "stump_weights": list(self.ensemble.stump_weights),
            },
            "text_source": self.text_source.value,
            "use_cues": self.use_cues,
            "cue_normalization": self.cue_normalization.value,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "BaselineModel":
        tf = obj["tfidf"]
        tfidf = TfidfModel(
            vocabulary={term: col for col, term in enumerate(tf["terms"])},
            idf=np.asarray(tf["idf"], dtype=np.float64),
            n_docs=int(tf["n_docs"]),
        )
        ens = obj["ensemble"]
        ensemble = StumpEnsemble(
            stumps=tuple(Stump(int(f), float(t), float(l), float(r))
                         for f, t, l, r in ens["stumps"]),
            stump_weights=tuple(float(w) for w in ens["stump_weights"]),
            loss=ens["loss"],
        )
        return cls(
            tfidf=tfidf,
            ensemble=ensemble,
            text_source=text_mod.DocumentSource.parse(obj["text_source"]),
            use_cues=bool(obj["use_cues"]),
            cue_normalization=cues_mod.Normalization(obj["cue_normalization"]),
        )


def save_baseline(model: BaselineModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model.to_json_obj(), f)
        f.write("\n")


def load_baseline(source: str | Path | IO[str]) -> BaselineModel:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as f:
            return load_baseline(f)
    return BaselineModel.from_json_obj(json.load(source))


def _doc_tokens(posts, source: text_mod.DocumentSource) -> list[list[str]]:
    return [
        text_mod.clean(text_mod.assemble_document(post, source)) for post in posts
    ]


def _features(
    tfidf: TfidfModel,
    text_source: text_mod.DocumentSource,
    use_cues: bool,
    cue_normalization: cues_mod.Normalization,
    posts,
    lexicons: cues_mod.CueLexicons | None,
):
    docs = _doc_tokens(posts, text_source)
    X = tfidf_transform(tfidf, docs)
    if not use_cues:
        return X
    if lexicons is None:
        raise BaselineError("this baseline uses cue columns; lexicons required")
    blocks = []
    for source in (text_mod.DocumentSource.TWEET, text_mod.DocumentSource.ARTICLE):
        rows = [
            cues_mod.extract_cues(tokens, lexicons, cue_normalization).as_list()
            for tokens in _doc_tokens(posts, source)
        ]
        blocks.append(np.asarray(rows, dtype=np.float64).reshape(len(posts), -1))
    return sp.hstack([X, sp.csr_matrix(np.concatenate(blocks, axis=1))], format="csr")


def baseline_features(
    model: BaselineModel, posts, lexicons: cues_mod.CueLexicons | None = None
):
    """tf-idf block, with cue columns for both tweet and article appended
    as dense extras when the model uses cues."""
    return _features(
        model.tfidf, model.text_source, model.use_cues, model.cue_normalization,
        posts, lexicons,
    )


def fit_baseline(
    dataset,
    text_source: text_mod.DocumentSource = text_mod.DocumentSource.TWEET,
    use_cues: bool = False,
    lexicons: cues_mod.CueLexicons | None = None,
    n_estimators: int = DEFAULT_ESTIMATORS,
    seed: int = 0,
    cue_normalization: cues_mod.Normalization = cues_mod.Normalization.PER_TOKEN,
) -> BaselineModel:
    """Fit tf-idf on the dataset's documents, then boost stumps on the
    resulting features against the truth means."""
    if dataset.truths is None or not dataset.fully_labelled:
        raise BaselineError("baseline fitting needs a fully labelled dataset")
    docs = _doc_tokens(dataset.posts, text_source)
    tfidf = tfidf_fit(docs)
    X = _features(tfidf, text_source, use_cues, cue_normalization,
                  dataset.posts, lexicons)
    y = [dataset.truth_for(post).truth_mean for post in dataset.posts]
    ensemble = ab_fit(X, y, n_estimators=n_estimators, seed=seed)
    return BaselineModel(
        tfidf=tfidf,
        ensemble=ensemble,
        text_source=text_source,
        use_cues=use_cues,
        cue_normalization=cue_normalization,
    )


def predict_baseline(
    model: BaselineModel, dataset, lexicons: cues_mod.CueLexicons | None = None
) -> np.ndarray:
    X = baseline_features(model, dataset.posts, lexicons)
    return ab_predict(model.ensemble, X)
