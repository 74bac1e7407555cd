"""Clickbait intensity scoring for social media posts.

The package scores posts on a [0, 1] scale: 0 is not clickbaity at all,
1 is heavily clickbaity, and 0.5 is the conventional cut between the
"no-clickbait" and "clickbait" classes.  It ships two trainable neural
regressors (a 1-D CNN and an LSTM over token sequences, optionally fused
with linguistic-cue and image-feature vectors), a boosted-stump baseline
over tf-idf unigrams, a pseudo-label self-training loop, evaluation
metrics, and object-category analysis of post images.
"""

__version__ = "0.1.0"

from baitscore.data import Dataset, Post, TruthAnnotation, parse_instances, parse_truth
from baitscore.metrics import regression_metrics, classification_metrics

__all__ = [
    "Dataset",
    "Post",
    "TruthAnnotation",
    "parse_instances",
    "parse_truth",
    "regression_metrics",
    "classification_metrics",
    "__version__",
]
