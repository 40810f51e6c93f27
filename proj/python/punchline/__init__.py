"""Humor classification on aligned funny/serious headline pairs."""

from ._core import (
    Classifier,
    CorpusError,
    TTestResult,
    align,
    bootstrap_ci,
    jaccard_distance,
    js_divergence,
    lm_threshold_search,
    load_corpus,
    paired_t_test,
    read_attention_file,
    welch_t_test,
    word_tokenize,
)

__all__ = [
    "Classifier",
    "CorpusError",
    "TTestResult",
    "align",
    "bootstrap_ci",
    "jaccard_distance",
    "js_divergence",
    "lm_threshold_search",
    "load_corpus",
    "paired_t_test",
    "read_attention_file",
    "welch_t_test",
    "word_tokenize",
]
