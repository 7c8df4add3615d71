"""scikit-learn compatible wrappers so the matching, vectorizing, clustering and
classification steps drop into ``sklearn.pipeline.Pipeline``."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .affdetect import load_pattern_db, match_url
from .cluster import LINKAGES, hcluster
from .corpus import extract_urls
from .disclose import DEFAULT_THRESHOLD, DTYPES, classify_disclosure, tokenize

NO_DISCLOSURE = "none"


def check_text_array(X, name: str = "X") -> list[str]:
    """Coerce a 1-d collection of strings to a list; reject anything else."""
    if isinstance(X, str):
        raise TypeError(f"{name} must be a sequence of strings, not a single string")
    arr = np.asarray(X, dtype=object)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    bad = [type(v).__name__ for v in arr if not isinstance(v, str)]
    if bad:
        raise TypeError(f"{name} must contain only strings, found {sorted(set(bad))}")
    return list(arr)


class AffiliateUrlDetector(ClassifierMixin, BaseEstimator):
    """Flag texts (descriptions or bare URLs) containing a URL that matches the pattern db.

    Matching is done on the URLs as written; resolve redirects first with
    :func:`affdisclose.urlresolve.resolve_corpus` to see intermediate hops.
    """

    def __init__(self, patterns_path=None):
        self.patterns_path = patterns_path

    def fit(self, X=None, y=None):
        self.db_ = load_pattern_db(self.patterns_path, strict=self.patterns_path is None)
        self.classes_ = np.array([False, True])
        return self

    def _matches(self, text: str):
        urls = extract_urls(text) or [text]
        return [m for u in urls for m in match_url(u, self.db_)]

    def predict(self, X):
        check_is_fitted(self, "db_")
        texts = check_text_array(X)
        return np.array([bool(self._matches(t)) for t in texts])

    def transform(self, X):
        """Company names matched per text."""
        check_is_fitted(self, "db_")
        return [sorted({m.company for m in self._matches(t)}) for t in check_text_array(X)]


class SentenceVectorizer(TransformerMixin, BaseEstimator):
    """Raw token counts over lowercased letter/digit runs."""

    def fit(self, X, y=None):
        texts = check_text_array(X)
        self.vocabulary_ = {t: j for j, t in enumerate(sorted({t for s in texts for t in tokenize(s)}))}
        return self

    def transform(self, X):
        check_is_fitted(self, "vocabulary_")
        texts = check_text_array(X)
        out = np.zeros((len(texts), len(self.vocabulary_)))
        for i, s in enumerate(texts):
            for t in tokenize(s):
                j = self.vocabulary_.get(t)
                if j is not None:
                    out[i, j] += 1
        return out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "vocabulary_")
        return np.array(sorted(self.vocabulary_, key=self.vocabulary_.get), dtype=object)


class SentenceClusterer(ClusterMixin, BaseEstimator):
    def __init__(self, threshold=DEFAULT_THRESHOLD, linkage="average"):
        self.threshold = threshold
        self.linkage = linkage

    def fit(self, X, y=None):
        if self.linkage not in LINKAGES:
            raise ValueError(f"linkage must be one of {LINKAGES}, got {self.linkage!r}")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        X = np.asarray(X, dtype=float)
        self.tree_ = hcluster(X, linkage=self.linkage)
        self.labels_ = self.tree_.labels(self.threshold)
        self.n_clusters_ = int(self.labels_.max()) + 1
        return self


class DisclosureClassifier(ClassifierMixin, BaseEstimator):
    """Rule cascade over sentences; sentences without a disclosure get ``"none"``."""

    def __init__(self, platform=None):
        self.platform = platform

    def fit(self, X=None, y=None):
        self.classes_ = np.array(sorted((*DTYPES, NO_DISCLOSURE)), dtype=object)
        return self

    def predict(self, X):
        check_is_fitted(self, "classes_")
        return np.array(
            [classify_disclosure(s, self.platform) or NO_DISCLOSURE for s in check_text_array(X)],
            dtype=object,
        )
