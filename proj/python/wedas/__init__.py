"""Query/observation alignment metrics and offline analytics.

The heavy lifting lives in the compiled extension ``wedas._core``; this
package re-exports its operations under their public names.
"""

from wedas._core import (
    EngineError,
    alignment,
    eig_bound_check,
    grade_answer,
    jaccard,
    levenshtein,
    nls,
    normalize,
    pass_at_k,
    prune_by_threshold,
    rank_local,
    textualize,
    tfidf_cosine,
)

__all__ = [
    "EngineError",
    "alignment",
    "eig_bound_check",
    "grade_answer",
    "jaccard",
    "levenshtein",
    "nls",
    "normalize",
    "pass_at_k",
    "prune_by_threshold",
    "rank_local",
    "textualize",
    "tfidf_cosine",
]
