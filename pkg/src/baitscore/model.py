"""Fusion scoring networks: assembly, training, prediction, self-training.

Both architectures share a text-sequence branch (embedding into either a
two-layer 1-D CNN with max pooling, or an LSTM with a dense head) whose
output is optionally concatenated with a dense projection of extra
vector inputs (linguistic-cue blocks and/or an image feature vector)
before the final dense layer and sigmoid, which keeps every score in
[0, 1].  The fusion happens after each sub-network has produced its own
representation, not at the raw-feature level.

Training minimizes MSE against the crowd truth mean with ADAM, applying
an internal train/validation split, and is deterministic for a fixed
seed.  A trained model can stamp synthetic ("pseudo") labels onto an
unlabelled dataset, which is how the noisy-label corpus is built.
"""

from __future__ import annotations

import json
import logging
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from baitscore import autodiff as ad
from baitscore import cues as cues_mod
from baitscore import text as text_mod
from baitscore.data import (
    Dataset,
    Post,
    TruthAnnotation,
    class_for_score,
    IngestError,
)
from baitscore.media import ImageVectorStore, IMAGE_DIM

log = logging.getLogger(__name__)

CNN = "cnn"
LSTM = "lstm"

#: Recognized extra vector inputs, in their fixed concatenation order.
VECTOR_INPUTS = ("cues_tweet", "cues_article", "image_vector")

CUE_BLOCK_DIM = len(cues_mod.FAMILIES)


class ModelError(ValueError):
    """Invalid configuration or misuse of a trained model."""


@dataclass(frozen=True)
class ModelConfig:
    """Declarative description of one experiment's architecture and training.

    Defaults reproduce the reference configuration: 100-token sequences
    over a 10,000-word vocabulary, 200-dim embeddings, a 56-unit LSTM,
    and ADAM at its standard hyperparameters.
    """

    branch: str = LSTM
    text_source: text_mod.DocumentSource = text_mod.DocumentSource.TWEET
    vector_inputs: tuple[str, ...] = ()
    seq_length: int = text_mod.DEFAULT_SEQ_LENGTH
    vocab_size: int = text_mod.DEFAULT_MAX_WORDS
    embed_dim: int = 200
    lstm_units: int = 56
    filters_1: int = 64
    kernel_1: int = 3
    filters_2: int = 64
    kernel_2: int = 3
    dense_units: int = 32
    fusion_units: int = 32
    image_dim: int = IMAGE_DIM
    epochs: int = 3
    batch_size: int = 32
    learning_rate: float = 0.001
    val_fraction: float = 0.2
    cue_normalization: cues_mod.Normalization = cues_mod.Normalization.PER_TOKEN
    missing_image: str = "zeros"  # or "error"
    seed: int = 7
    dtype: str = "float64"

    def __post_init__(self):
        if self.branch not in (CNN, LSTM):
            raise ModelError(f"branch must be '{CNN}' or '{LSTM}', got {self.branch!r}")
        if self.epochs < 1:
            raise ModelError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ModelError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ModelError(f"val_fraction must be in [0, 1), got {self.val_fraction}")
        unknown = [v for v in self.vector_inputs if v not in VECTOR_INPUTS]
        if unknown:
            raise ModelError(
                f"unknown vector inputs {unknown}; expected a subset of {VECTOR_INPUTS}"
            )
        if len(set(self.vector_inputs)) != len(self.vector_inputs):
            raise ModelError(f"duplicate vector inputs: {self.vector_inputs}")
        if self.missing_image not in ("zeros", "error"):
            raise ModelError("missing_image must be 'zeros' or 'error'")
        if self.dtype not in ("float64", "float32"):
            raise ModelError("dtype must be 'float64' or 'float32'")

    @property
    def np_dtype(self):
        return np.float64 if self.dtype == "float64" else np.float32

    @property
    def uses_vectors(self) -> bool:
        return bool(self.vector_inputs)

    def vector_dim(self) -> int:
        """Width of the concatenated vector-input block."""
        widths = {
            "cues_tweet": CUE_BLOCK_DIM,
            "cues_article": CUE_BLOCK_DIM,
            "image_vector": self.image_dim,
        }
        return sum(widths[name] for name in self.ordered_vector_inputs())

    def ordered_vector_inputs(self) -> tuple[str, ...]:
        return tuple(name for name in VECTOR_INPUTS if name in self.vector_inputs)

    def to_json_obj(self) -> dict:
        obj = asdict(self)
        obj["text_source"] = self.text_source.value
        obj["vector_inputs"] = list(self.vector_inputs)
        obj["cue_normalization"] = self.cue_normalization.value
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ModelConfig":
        obj = dict(obj)
        obj["text_source"] = text_mod.DocumentSource.parse(obj["text_source"])
        obj["vector_inputs"] = tuple(obj.get("vector_inputs") or ())
        obj["cue_normalization"] = cues_mod.Normalization(obj["cue_normalization"])
        return cls(**obj)


# ---------------------------------------------------------------------------
# embeddings


def load_pretrained_embeddings(
    path: str | Path,
    vocab: text_mod.Vocabulary,
    embed_dim: int = 200,
    seed: int = 7,
    miss_scale: float = 0.05,
    vocab_size: int | None = None,
) -> tuple[np.ndarray, float]:
    """Embedding matrix (vocab_size + 1, embed_dim) from a text vector file.

    The file holds one word and ``embed_dim`` reals per whitespace-split
    line.  Row 0 stays all-zero for padding; vocabulary words absent from
    the file get seeded uniform(-miss_scale, miss_scale) rows.  Returns
    the matrix and the fraction of the vocabulary found in the file.
    """
    if vocab_size is None:
        vocab_size = vocab.max_words
    if len(vocab) > vocab_size:
        raise ModelError(f"vocabulary has {len(vocab)} words, budget is {vocab_size}")
    rng = np.random.default_rng(seed)
    n_rows = vocab_size + 1
    matrix = rng.uniform(-miss_scale, miss_scale, size=(n_rows, embed_dim))
    matrix[0, :] = 0.0
    found = 0
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            word = parts[0]
            idx = vocab.index(word)
            if idx is None or idx >= n_rows:
                continue
            values = parts[1:]
            if len(values) != embed_dim:
                raise ModelError(
                    f"{path}: line {lineno} has {len(values)} values, expected {embed_dim}"
                )
            matrix[idx, :] = np.asarray(values, dtype=np.float64)
            found += 1
    coverage = found / max(1, len(vocab))
    log.info("embeddings: %d/%d vocabulary words covered (%.1f%%)",
             found, len(vocab), 100.0 * coverage)
    return matrix, coverage


def random_embedding_matrix(
    vocab_size: int, embed_dim: int, seed: int, scale: float = 0.05
) -> np.ndarray:
    rng = np.random.default_rng(seed)
    matrix = rng.uniform(-scale, scale, size=(vocab_size + 1, embed_dim))
    matrix[0, :] = 0.0
    return matrix


# ---------------------------------------------------------------------------
# network


class Network:
    """Parameter set plus the forward pass for one configuration."""

    def __init__(self, config: ModelConfig, embedding_matrix: np.ndarray | None = None):
        if config.uses_vectors and config.vector_dim() == 0:
            raise ModelError("fusion requested but the vector block is empty")
        self.config = config
        self.params: "OrderedDict[str, ad.Parameter]" = OrderedDict()
        rng = np.random.default_rng([config.seed, 0])
        dt = config.np_dtype

        def param(name: str, value: np.ndarray) -> ad.Parameter:
            p = ad.Parameter(name, np.asarray(value, dtype=dt))
            self.params[name] = p
            return p

        def glorot(name, shape, fan_in, fan_out):
            return param(name, ad.glorot_uniform(shape, fan_in, fan_out, rng, dtype=dt))

        if embedding_matrix is None:
            embedding_matrix = random_embedding_matrix(
                config.vocab_size, config.embed_dim, config.seed
            )
        expected = (config.vocab_size + 1, config.embed_dim)
        if embedding_matrix.shape != expected:
            raise ModelError(
                f"embedding matrix shape {embedding_matrix.shape} != expected {expected}"
            )
        param("embedding", embedding_matrix)

        if config.branch == LSTM:
            u = config.lstm_units
            glorot("lstm/kernel", (config.embed_dim, 4 * u), config.embed_dim, 4 * u)
            glorot("lstm/recurrent", (u, 4 * u), u, 4 * u)
            param("lstm/bias", np.zeros(4 * u))
            glorot("text_dense/weight", (u, config.dense_units), u, config.dense_units)
            param("text_dense/bias", np.zeros(config.dense_units))
            text_out = config.dense_units
        else:
            f1, k1 = config.filters_1, config.kernel_1
            f2, k2 = config.filters_2, config.kernel_2
            glorot("conv1/kernel", (k1, config.embed_dim, f1), k1 * config.embed_dim, k1 * f1)
            param("conv1/bias", np.zeros(f1))
            glorot("conv2/kernel", (k2, f1, f2), k2 * f1, k2 * f2)
            param("conv2/bias", np.zeros(f2))
            glorot("text_dense/weight", (f2, config.dense_units), f2, config.dense_units)
            param("text_dense/bias", np.zeros(config.dense_units))
            text_out = config.dense_units

        head_in = text_out
        if config.uses_vectors:
            vdim = config.vector_dim()
            glorot("fusion_dense/weight", (vdim, config.fusion_units), vdim, config.fusion_units)
            param("fusion_dense/bias", np.zeros(config.fusion_units))
            head_in += config.fusion_units

        glorot("head/weight", (head_in, 1), head_in, 1)
        param("head/bias", np.zeros(1))

    def parameters(self) -> list[ad.Parameter]:
        return list(self.params.values())

    def _text_branch(self, seqs: np.ndarray, nodes: dict) -> ad.Tensor:
        cfg = self.config
        embedded = ad.embedding_lookup(nodes["embedding"], seqs)
        if cfg.branch == LSTM:
            u = cfg.lstm_units
            batch = seqs.shape[0]
            h = ad.constant(np.zeros((batch, u), dtype=cfg.np_dtype))
            c = ad.constant(np.zeros((batch, u), dtype=cfg.np_dtype))
            for t in range(seqs.shape[1]):
                x_t = ad.select_time(embedded, t)
                z = ad.add(
                    ad.add(ad.matmul(x_t, nodes["lstm/kernel"]),
                           ad.matmul(h, nodes["lstm/recurrent"])),
                    nodes["lstm/bias"],
                )
                i_gate = ad.sigmoid(ad.slice_last(z, 0, u))
                f_gate = ad.sigmoid(ad.slice_last(z, u, 2 * u))
                g_cell = ad.tanh(ad.slice_last(z, 2 * u, 3 * u))
                o_gate = ad.sigmoid(ad.slice_last(z, 3 * u, 4 * u))
                c = ad.add(ad.mul(f_gate, c), ad.mul(i_gate, g_cell))
                h = ad.mul(o_gate, ad.tanh(c))
            pooled = h
        else:
            conv1 = ad.relu(ad.add(ad.conv1d(embedded, nodes["conv1/kernel"]),
                                   nodes["conv1/bias"]))
            conv2 = ad.relu(ad.add(ad.conv1d(conv1, nodes["conv2/kernel"]),
                                   nodes["conv2/bias"]))
            pooled = ad.global_max_pool1d(conv2)
        return ad.relu(ad.add(ad.matmul(pooled, nodes["text_dense/weight"]),
                              nodes["text_dense/bias"]))

    def forward(self, seqs: np.ndarray, vectors: np.ndarray | None) -> ad.Tensor:
        """Score a batch: (B, seq_length) int indices, optional (B, vdim)
        vector block -> (B,) tensor of sigmoid outputs."""
        cfg = self.config
        if seqs.ndim != 2 or seqs.shape[1] != cfg.seq_length:
            raise ModelError(
                f"sequence batch must be (B, {cfg.seq_length}), got {seqs.shape}"
            )
        nodes = {name: p.node() for name, p in self.params.items()}
        branches = [self._text_branch(seqs, nodes)]
        if cfg.uses_vectors:
            if vectors is None:
                raise ModelError("this configuration needs a vector-input block")
            if vectors.shape != (seqs.shape[0], cfg.vector_dim()):
                raise ModelError(
                    f"vector block must be ({seqs.shape[0]}, {cfg.vector_dim()}), "
                    f"got {vectors.shape}"
                )
            vec = ad.constant(np.asarray(vectors, dtype=cfg.np_dtype))
            branches.append(
                ad.relu(ad.add(ad.matmul(vec, nodes["fusion_dense/weight"]),
                               nodes["fusion_dense/bias"]))
            )
        fused = branches[0] if len(branches) == 1 else ad.concat(branches, axis=1)
        out = ad.sigmoid(ad.add(ad.matmul(fused, nodes["head/weight"]), nodes["head/bias"]))
        return ad.reshape(out, (seqs.shape[0],))


def build(config: ModelConfig, embedding_matrix: np.ndarray | None = None) -> Network:
    """Untrained network for a configuration (seeded initialization)."""
    return Network(config, embedding_matrix)


# ---------------------------------------------------------------------------
# featurization


@dataclass
class FeaturePipeline:
    """Turns posts into model inputs under one fitted vocabulary."""

    config: ModelConfig
    vocab: text_mod.Vocabulary
    lexicons: cues_mod.CueLexicons | None = None
    image_store: ImageVectorStore | None = None

    def __post_init__(self):
        needs_cues = {"cues_tweet", "cues_article"} & set(self.config.vector_inputs)
        if needs_cues and self.lexicons is None:
            raise ModelError(f"vector inputs {sorted(needs_cues)} need lexicons")
        if "image_vector" in self.config.vector_inputs and self.image_store is None:
            raise ModelError("vector input 'image_vector' needs an image-vector store")

    def sequences(self, posts: Sequence[Post]) -> np.ndarray:
        cfg = self.config
        rows = []
        for post in posts:
            doc = text_mod.assemble_document(post, cfg.text_source)
            seq = text_mod.to_sequence(text_mod.clean(doc), self.vocab)
            rows.append(text_mod.pad(seq, cfg.seq_length))
        return np.asarray(rows, dtype=np.int64).reshape(len(posts), cfg.seq_length)

    def _cue_rows(self, posts: Sequence[Post], source: text_mod.DocumentSource) -> np.ndarray:
        rows = [
            cues_mod.extract_cues(
                text_mod.clean(text_mod.assemble_document(post, source)),
                self.lexicons,
                self.config.cue_normalization,
            ).as_list()
            for post in posts
        ]
        return np.asarray(rows, dtype=np.float64).reshape(len(posts), CUE_BLOCK_DIM)

    def _image_rows(self, posts: Sequence[Post]) -> np.ndarray:
        cfg = self.config
        rows = np.zeros((len(posts), cfg.image_dim))
        for i, post in enumerate(posts):
            vec = self.image_store.get(post.id)
            if vec is None:
                if cfg.missing_image == "error":
                    raise ModelError(f"post {post.id!r} has no image vector")
            else:
                rows[i, :] = vec
        return rows

    def vectors(self, posts: Sequence[Post]) -> np.ndarray | None:
        cfg = self.config
        if not cfg.uses_vectors:
            return None
        blocks = []
        for name in cfg.ordered_vector_inputs():
            if name == "cues_tweet":
                blocks.append(self._cue_rows(posts, text_mod.DocumentSource.TWEET))
            elif name == "cues_article":
                blocks.append(self._cue_rows(posts, text_mod.DocumentSource.ARTICLE))
            else:
                blocks.append(self._image_rows(posts))
        return np.concatenate(blocks, axis=1)

    def features(self, posts: Sequence[Post]) -> tuple[np.ndarray, np.ndarray | None]:
        return self.sequences(posts), self.vectors(posts)


def fit_vocabulary_for(
    config: ModelConfig, datasets: Iterable[Dataset]
) -> text_mod.Vocabulary:
    """Fit the shared vocabulary over every corpus the experiment touches
    (training and test text share one index space)."""

    def docs():
        for dataset in datasets:
            for post in dataset.posts:
                yield text_mod.clean(
                    text_mod.assemble_document(post, config.text_source)
                )

    return text_mod.fit_vocabulary(docs(), max_words=config.vocab_size)


# ---------------------------------------------------------------------------
# training


@dataclass
class EpochStats:
    epoch: int
    train_mse: float
    val_mse: float | None


@dataclass
class TrainedModel:
    """A trained network plus everything needed to reproduce its inputs."""

    network: Network
    pipeline: FeaturePipeline
    history: list[EpochStats] = field(default_factory=list)
    embedding_coverage: float | None = None

    @property
    def config(self) -> ModelConfig:
        return self.network.config

    def lexicon_fingerprint(self) -> str | None:
        if self.pipeline.lexicons is None:
            return None
        return self.pipeline.lexicons.fingerprint()


@dataclass(frozen=True)
class Prediction:
    id: str
    clickbait_score: float

    def to_json_obj(self) -> dict:
        return {"id": self.id, "clickbaitScore": self.clickbait_score}


def _truth_targets(dataset: Dataset) -> np.ndarray:
    return np.asarray([dataset.truth_for(p).truth_mean for p in dataset.posts])


def train(
    network: Network,
    dataset: Dataset,
    pipeline: FeaturePipeline,
    log_every: int = 0,
) -> TrainedModel:
    """Fit the network on a labelled dataset with ADAM on MSE.

    Applies the configured internal train/validation split, shuffles
    batches each epoch with the run seed, and records per-epoch losses.
    Single-threaded and deterministic for a fixed seed.
    """
    cfg = network.config
    if dataset.truths is None or len(dataset) == 0:
        raise ModelError("training needs a non-empty labelled dataset")
    if not dataset.fully_labelled:
        raise ModelError("training dataset has posts without truths")

    if cfg.val_fraction > 0.0 and len(dataset) >= 2:
        from baitscore.data import train_val_split

        train_set, val_set = train_val_split(dataset, cfg.val_fraction, cfg.seed)
        if len(val_set) == 0 or len(train_set) == 0:
            train_set, val_set = dataset, None
    else:
        train_set, val_set = dataset, None

    seqs, vecs = pipeline.features(train_set.posts)
    y = _truth_targets(train_set)
    val_data = None
    if val_set is not None:
        val_data = (*pipeline.features(val_set.posts), _truth_targets(val_set))

    optimizer = ad.AdamOptimizer(network.parameters(), lr=cfg.learning_rate)
    shuffle_rng = np.random.default_rng([cfg.seed, 1])
    n = len(train_set)
    history: list[EpochStats] = []
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(n)
        sse = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            batch_vecs = vecs[idx] if vecs is not None else None
            optimizer.zero_grad()
            out = network.forward(seqs[idx], batch_vecs)
            loss = ad.mse(out, y[idx])
            ad.backward(loss)
            optimizer.step()
            sse += float(loss.data) * len(idx)
        train_mse = sse / n
        val_mse = None
        if val_data is not None:
            val_mse = float(
                ad.mse(
                    _forward_in_batches(network, val_data[0], val_data[1], cfg.batch_size),
                    val_data[2],
                ).data
            )
        history.append(EpochStats(epoch=epoch, train_mse=train_mse, val_mse=val_mse))
        if log_every and (epoch % log_every == 0 or epoch == cfg.epochs):
            log.info("epoch %d/%d: train mse %.5f%s", epoch, cfg.epochs, train_mse,
                     f", val mse {val_mse:.5f}" if val_mse is not None else "")
    return TrainedModel(network=network, pipeline=pipeline, history=history)


def _forward_in_batches(
    network: Network, seqs: np.ndarray, vecs: np.ndarray | None, batch_size: int
) -> ad.Tensor:
    outs = []
    for start in range(0, seqs.shape[0], batch_size):
        batch_vecs = vecs[start : start + batch_size] if vecs is not None else None
        outs.append(network.forward(seqs[start : start + batch_size], batch_vecs).data)
    return ad.constant(np.concatenate(outs))


def predict(trained: TrainedModel, dataset: Dataset) -> list[Prediction]:
    """Score every post, preserving order; scores are clamped to [0, 1]."""
    cfg = trained.config
    seqs, vecs = trained.pipeline.features(dataset.posts)
    scores = _forward_in_batches(trained.network, seqs, vecs, cfg.batch_size).data
    scores = np.clip(scores, 0.0, 1.0)
    return [
        Prediction(id=post.id, clickbait_score=float(score))
        for post, score in zip(dataset.posts, scores)
    ]


def write_predictions(predictions: Sequence[Prediction], path: str | Path) -> None:
    """Challenge output file: {"id": ..., "clickbaitScore": ...} per line."""
    with open(path, "w", encoding="utf-8") as f:
        for pred in predictions:
            f.write(json.dumps(pred.to_json_obj()))
            f.write("\n")


def read_predictions(source) -> list[Prediction]:
    """Parse a prediction file; duplicate ids and bad records are errors."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as f:
            return read_predictions(f)
    preds = []
    seen = set()
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ModelError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or "id" not in obj or "clickbaitScore" not in obj:
            raise ModelError(f"line {lineno}: expected {{'id', 'clickbaitScore'}}")
        post_id = str(obj["id"])
        if post_id in seen:
            raise ModelError(f"duplicate prediction for id {post_id!r} (line {lineno})")
        seen.add(post_id)
        score = float(obj["clickbaitScore"])
        if not np.isfinite(score):
            raise ModelError(f"non-finite score for id {post_id!r} (line {lineno})")
        preds.append(Prediction(id=post_id, clickbait_score=score))
    return preds


def training_mse(trained: TrainedModel, dataset: Dataset) -> float:
    """Clean full-forward MSE of the trained model on a labelled dataset."""
    preds = predict(trained, dataset)
    y = _truth_targets(dataset)
    p = np.asarray([pr.clickbait_score for pr in preds])
    return float(np.mean((p - y) ** 2))


# ---------------------------------------------------------------------------
# self-training


def pseudo_label(trained: TrainedModel, unlabelled: Dataset) -> Dataset:
    """Stamp model scores onto an unlabelled dataset as synthetic truths.

    The predicted score becomes the truth mean (kept as a real, not
    binarized); the class follows the usual 0.5-or-greater rule; the
    judgment list stays empty and the record is flagged synthetic.
    """
    if unlabelled.truths is not None:
        raise ModelError("pseudo_label expects an unlabelled dataset")
    truths = {}
    for pred in predict(trained, unlabelled):
        truths[pred.id] = TruthAnnotation(
            id=pred.id,
            judgments=(),
            truth_mean=pred.clickbait_score,
            truth_class=class_for_score(pred.clickbait_score),
            synthetic=True,
        )
    return Dataset(posts=unlabelled.posts, truths=truths,
                   name=f"{unlabelled.name}+pseudo" if unlabelled.name else "pseudo")


def merge_noisy(labelled: Dataset, noisy: Dataset) -> Dataset:
    """Concatenate a labelled dataset with a pseudo-labelled one.

    Ids must be disjoint; every original record (post and truth) is
    carried over unchanged, and synthetic flags keep provenance visible.
    """
    if labelled.truths is None or noisy.truths is None:
        raise ModelError("merge_noisy needs two labelled datasets")
    overlap = {p.id for p in labelled.posts} & {p.id for p in noisy.posts}
    if overlap:
        raise IngestError(f"id collision between datasets: {sorted(overlap)[:5]}")
    name = " + ".join(n for n in (labelled.name, noisy.name) if n)
    return Dataset(
        posts=list(labelled.posts) + list(noisy.posts),
        truths={**labelled.truths, **noisy.truths},
        name=name,
    )


#: Corpus sizes for which the published tally differs from exact arithmetic.
_TALLY_MISMATCH = (19_538, 80_012, 99_551)


def merge_tally_note(n_labelled: int, n_noisy: int) -> str | None:
    """Footnote for the merge report when the combined count is known to
    disagree with the published tally for these corpus sizes."""
    ref_labelled, ref_noisy, ref_total = _TALLY_MISMATCH
    if (n_labelled, n_noisy) == (ref_labelled, ref_noisy):
        return (
            f"note: exact arithmetic gives {n_labelled + n_noisy:,} combined records; "
            f"the published tally for this corpus combination reports {ref_total:,} "
            "(one-record difference, cause unknown)"
        )
    return None


def merge_report(labelled: Dataset, noisy: Dataset, merged: Dataset) -> dict:
    """Bookkeeping summary of a pseudo-label merge, including the tally
    footnote when it applies."""
    from baitscore.data import class_ratio

    report = {
        "labelled_posts": len(labelled),
        "unlabelled_posts": len(noisy),
        "combined_posts": len(merged),
        "noisy_ratio": class_ratio(noisy).display(),
        "combined_ratio": class_ratio(merged).display(),
    }
    note = merge_tally_note(len(labelled), len(noisy))
    if note is not None:
        report["note"] = note
    return report


# ---------------------------------------------------------------------------
# persistence


def save_model(trained: TrainedModel, prefix: str | Path) -> None:
    """Write the <prefix>.ckpt / <prefix>.vocab.tsv / <prefix>.json trio."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    ad.save_checkpoint(str(prefix.with_suffix(".ckpt")), trained.network.parameters())
    with open(prefix.with_suffix(".vocab.tsv"), "w", encoding="utf-8") as f:
        trained.pipeline.vocab.save(f)
    meta = {
        "config": trained.config.to_json_obj(),
        "lexicon_fingerprint": trained.lexicon_fingerprint(),
        "embedding_coverage": trained.embedding_coverage,
        "history": [asdict(h) for h in trained.history],
    }
    with open(prefix.with_suffix(".json"), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2)
        f.write("\n")


def load_model(
    prefix: str | Path,
    lexicons: cues_mod.CueLexicons | None = None,
    image_store: ImageVectorStore | None = None,
) -> TrainedModel:
    """Rebuild a TrainedModel from the saved trio.

    Lexicons must be supplied when the config uses cue inputs; a changed
    lexicon directory is detected through the stored fingerprint.
    """
    prefix = Path(prefix)
    with open(prefix.with_suffix(".json"), encoding="utf-8") as f:
        meta = json.load(f)
    config = ModelConfig.from_json_obj(meta["config"])
    with open(prefix.with_suffix(".vocab.tsv"), encoding="utf-8") as f:
        vocab = text_mod.Vocabulary.load(f, max_words=config.vocab_size)
    values = ad.load_checkpoint(str(prefix.with_suffix(".ckpt")))
    network = Network(config)
    for name, param in network.params.items():
        if name not in values:
            raise ModelError(f"checkpoint is missing parameter {name!r}")
        if values[name].shape != param.value.shape:
            raise ModelError(
                f"checkpoint parameter {name!r} has shape {values[name].shape}, "
                f"expected {param.value.shape}"
            )
        param.value = values[name].astype(config.np_dtype)
        param.grad = np.zeros_like(param.value)
    stored = meta.get("lexicon_fingerprint")
    if stored and lexicons is not None and lexicons.fingerprint() != stored:
        log.warning("lexicon fingerprint %s differs from the stored %s",
                    lexicons.fingerprint(), stored)
    pipeline = FeaturePipeline(
        config=config, vocab=vocab, lexicons=lexicons, image_store=image_store
    )
    history = [EpochStats(**h) for h in meta.get("history", [])]
    return TrainedModel(
        network=network,
        pipeline=pipeline,
        history=history,
        embedding_coverage=meta.get("embedding_coverage"),
    )
