"""Agglomerative clustering of count vectors under Euclidean distance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

LINKAGES = ("single", "complete", "average")

# distances within this of the current minimum count as ties
TIE_TOLERANCE = 1e-9


class Merge(NamedTuple):
    left: int
    right: int
    distance: float
    size: int


@dataclass(frozen=True)
class ClusterTree:
    """Merge list in scipy convention: leaves are ``0..n-1``, merge ``k`` creates node ``n+k``."""

    n_leaves: int
    merges: tuple[Merge, ...]
    linkage: str = "average"

    def cut(self, threshold: float) -> list[list[int]]:
        """Connected components of merges with distance <= threshold.

        Clusters are lists of leaf indices, ordered by their smallest leaf.
        """
        if threshold < 0:
            raise ValueError("threshold must be >= 0")
        parent = list(range(self.n_leaves + len(self.merges)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for k, m in enumerate(self.merges):
            node = self.n_leaves + k
            if m.distance <= threshold:
                parent[find(m.left)] = node
                parent[find(m.right)] = node
        groups: dict[int, list[int]] = {}
        for leaf in range(self.n_leaves):
            groups.setdefault(find(leaf), []).append(leaf)
        return sorted(groups.values(), key=lambda g: g[0])

    def labels(self, threshold: float) -> np.ndarray:
        out = np.empty(self.n_leaves, dtype=int)
        for label, members in enumerate(self.cut(threshold)):
            out[members] = label
        return out


def pairwise_euclidean(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    sq = np.einsum("ij,ij->i", X, X)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    # integer count vectors: exact squared distances, so round off float noise
    if np.all(X == np.round(X)):
        d2 = np.round(d2)
    return np.sqrt(d2)


def hcluster(X, linkage: str = "average") -> ClusterTree:
    """Cluster the rows of ``X`` bottom-up.

    Ties (within :data:`TIE_TOLERANCE` of the minimum) go to the pair with the
    smallest (left node id, right node id). Linkage distances are updated with
    the Lance-Williams recurrences and a per-row nearest-neighbour cache.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need at least one vector")
    n = X.shape[0]
    D = pairwise_euclidean(X)
    np.fill_diagonal(D, np.inf)
    node_id = np.arange(n)
    size = np.ones(n, dtype=int)
    active = np.ones(n, dtype=bool)
    rowmin = D.min(axis=1) if n > 1 else np.full(1, np.inf)
    rowarg = D.argmin(axis=1) if n > 1 else np.zeros(1, dtype=int)
    merges: list[Merge] = []
    last = 0.0

    for step in range(n - 1):
        dmin = rowmin[active].min()
        cut = dmin + TIE_TOLERANCE
        cand = np.flatnonzero(active & (rowmin <= cut))
        a = cand[np.argmin(node_id[cand])]
        partners = np.flatnonzero(active & (D[a] <= cut))
        b = partners[np.argmin(node_id[partners])]
        left, right = sorted((int(node_id[a]), int(node_id[b])))
        dist = max(float(D[a, b]), last)
        last = dist
        na, nb = size[a], size[b]
        merges.append(Merge(left, right, dist, int(na + nb)))

        if linkage == "single":
            new = np.minimum(D[a], D[b])
        elif linkage == "complete":
            new = np.maximum(D[a], D[b])
        else:
            new = (na * D[a] + nb * D[b]) / (na + nb)
        active[b] = False
        D[b, :] = np.inf
        D[:, b] = np.inf
        new[~active] = np.inf
        new[a] = np.inf
        D[a, :] = new
        D[:, a] = new
        size[a] = na + nb
        node_id[a] = n + step
        rowmin[b] = np.inf

        stale = np.flatnonzero(active & ((rowarg == a) | (rowarg == b)))
        for r in stale:
            rowarg[r] = int(np.argmin(D[r]))
            rowmin[r] = D[r, rowarg[r]]
        better = active & (new < rowmin)
        rowmin[better] = new[better]
        rowarg[better] = a
        if active.sum() > 1:
            rowarg[a] = int(np.argmin(D[a]))
            rowmin[a] = D[a, rowarg[a]]
        else:
            rowmin[a] = np.inf
    return ClusterTree(n, tuple(merges), linkage)


def medoid(X: np.ndarray, members: Sequence[int]) -> int:
    sub = np.asarray(X, dtype=float)[list(members)]
    d = pairwise_euclidean(sub).sum(axis=1)
    return list(members)[int(np.argmin(d))]
