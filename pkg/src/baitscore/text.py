"""Text pipeline: cleaning, vocabulary fitting, integer sequences.

Raw tweet/article text becomes a fixed-length (default 100) integer
sequence over a frequency-capped vocabulary (default 10,000 words), with
index 0 reserved for padding.  Cleaning removes hashtags, mentions and
URLs whole, strips punctuation from the surviving tokens, and lowercases
(the pretrained embedding tables are lowercase-keyed).
"""

from __future__ import annotations

import string
import unicodedata
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import IO, Iterable

from baitscore.data import Post

DEFAULT_MAX_WORDS = 10_000
DEFAULT_SEQ_LENGTH = 100

_ASCII_PUNCT = set(string.punctuation)


class DocumentSource(str, Enum):
    """Which text a post contributes: the tweet, the article, or both.

    The article is always the concatenation title, keywords, description,
    paragraphs, in that order.
    """

    TWEET = "tweet"
    ARTICLE = "article"
    BOTH = "tweet+article"

    @classmethod
    def parse(cls, value: str) -> "DocumentSource":
        aliases = {"both": cls.BOTH, "tweet+article": cls.BOTH}
        value = value.strip().lower()
        if value in aliases:
            return aliases[value]
        try:
            return cls(value)
        except ValueError:
            raise ValueError(
                f"unknown text source {value!r}; expected tweet, article, or both"
            ) from None


@lru_cache(maxsize=4096)
def _is_punct(ch: str) -> bool:
    return ch in _ASCII_PUNCT or unicodedata.category(ch).startswith("P")


def clean(text: str) -> list[str]:
    """Lowercased whitespace tokens with hashtags/mentions/urls dropped.

    Tokens starting with '#' or '@' are dropped whole, as are tokens that
    look like URLs ('://' anywhere, or a leading 'www.').  Punctuation
    characters are stripped from the remaining tokens; tokens emptied by
    stripping vanish.
    """
    tokens = []
    for raw in text.split():
        tok = raw.lower()
        if tok.startswith("#") or tok.startswith("@"):
            continue
        if "://" in tok or tok.startswith("www."):
            continue
        tok = "".join(ch for ch in tok if not _is_punct(ch))
        if tok:
            tokens.append(tok)
    return tokens


@dataclass(frozen=True)
class Vocabulary:
    """Word -> index map with 1-based dense indices; 0 is the pad index."""

    word_to_index: dict[str, int]
    max_words: int = DEFAULT_MAX_WORDS

    def __len__(self) -> int:
        return len(self.word_to_index)

    def __contains__(self, word: str) -> bool:
        return word in self.word_to_index

    def index(self, word: str) -> int | None:
        return self.word_to_index.get(word)

    def save(self, stream: IO[str]) -> None:
        """Write the two-column "word<TAB>index" form, sorted by index."""
        for word, idx in sorted(self.word_to_index.items(), key=lambda kv: kv[1]):
            stream.write(f"{word}\t{idx}\n")

    @classmethod
    def load(cls, stream: IO[str], max_words: int = DEFAULT_MAX_WORDS) -> "Vocabulary":
        mapping = {}
        for line in stream:
            line = line.rstrip("\n")
            if not line:
                continue
            word, _, idx = line.rpartition("\t")
            mapping[word] = int(idx)
        _check_dense(mapping, max_words)
        return cls(word_to_index=mapping, max_words=max_words)


def _check_dense(mapping: dict[str, int], max_words: int) -> None:
    if not mapping:
        raise ValueError("empty vocabulary")
    indices = sorted(mapping.values())
    if indices != list(range(1, len(mapping) + 1)):
        raise ValueError("vocabulary indices must be dense and 1-based")
    if len(mapping) > max_words:
        raise ValueError(f"vocabulary exceeds max_words={max_words}")


def fit_vocabulary(
    corpus: Iterable[list[str]], max_words: int = DEFAULT_MAX_WORDS
) -> Vocabulary:
    """Rank words by descending corpus frequency and keep the top max_words.

    Ties break by first occurrence order in the corpus stream, so the fit
    is reproducible for a fixed document order.
    """
    counts: Counter[str] = Counter()
    n_docs = 0
    for tokens in corpus:
        n_docs += 1
        counts.update(tokens)
    if n_docs == 0 or not counts:
        raise ValueError("cannot fit a vocabulary on an empty corpus")
    ranked = counts.most_common(max_words)  # stable for equal counts
    mapping = {word: i for i, (word, _) in enumerate(ranked, start=1)}
    return Vocabulary(word_to_index=mapping, max_words=max_words)


def to_sequence(tokens: Iterable[str], vocab: Vocabulary) -> list[int]:
    """Map tokens to vocabulary indices, silently skipping OOV tokens."""
    return [idx for tok in tokens if (idx := vocab.index(tok)) is not None]


def pad(seq: list[int], length: int = DEFAULT_SEQ_LENGTH) -> list[int]:
    """Fix a sequence to exactly ``length`` entries.

    Short sequences are padded with zeros at the front; long ones keep
    their last ``length`` entries.
    """
    if length <= 0:
        raise ValueError(f"pad length must be positive, got {length}")
    if len(seq) >= length:
        return list(seq[-length:])
    return [0] * (length - len(seq)) + list(seq)


def assemble_document(post: Post, source: DocumentSource) -> str:
    """Join the post's text fields for the requested source.

    Empty fields are skipped so documents never carry runs of spaces.
    """
    tweet = " ".join(part for part in post.post_text if part)
    article_parts = [
        post.target_title,
        post.target_keywords,
        post.target_description,
        *post.target_paragraphs,
    ]
    article = " ".join(part for part in article_parts if part)
    if source is DocumentSource.TWEET:
        return tweet
    if source is DocumentSource.ARTICLE:
        return article
    return " ".join(part for part in (tweet, article) if part)
