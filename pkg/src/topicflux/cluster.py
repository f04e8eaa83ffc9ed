"""Agglomerative hierarchical clustering of venue composite distributions.

Pairwise Euclidean distances between venue simplices feed an unweighted
average-linkage (UPGMA) agglomeration: at every step the two clusters with
the smallest mean cross-pair distance merge, ties breaking on the smallest
(node_a, node_b) id pair. Average linkage is monotone, so merge heights
never decrease.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .aggregate import DistributionTable


class ClusterError(ValueError):
    """Raised for malformed distance matrices or export formats."""


@dataclass(frozen=True)
class Merge:
    node_a: int
    node_b: int
    height: float
    new_id: int


@dataclass
class Dendrogram:
    """Merge tree over venue leaves.

    Leaves get node ids 0..N-1 in list order; the i-th merge creates node
    N+i. ``members`` maps every node id to the frozenset of leaf names under
    it, which is the basis for structural equality.
    """

    leaves: list[str]
    merges: list[Merge]
    members: dict[int, frozenset[str]]

    @property
    def root(self) -> int:
        return self.merges[-1].new_id if self.merges else 0

    def same_structure(self, other: "Dendrogram", tol: float = 0.0) -> bool:
        if set(self.leaves) != set(other.leaves) or len(self.merges) != len(other.merges):
            return False
        mine = sorted(
            (sorted(self.members[m.new_id]), m.height) for m in self.merges
        )
        theirs = sorted(
            (sorted(other.members[m.new_id]), m.height) for m in other.merges
        )
        return all(
            a[0] == b[0] and abs(a[1] - b[1]) <= tol for a, b in zip(mine, theirs)
        )


def pairwise_euclidean(table: DistributionTable) -> tuple[list[str], np.ndarray]:
    """Symmetric zero-diagonal Euclidean distance matrix over sorted venues."""
    keys = table.keys()
    if len(keys) < 2:
        raise ClusterError(f"need >= 2 venues, got {len(keys)}")
    n = len(keys)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            diff = table.entries[keys[i]] - table.entries[keys[j]]
            dist[i, j] = dist[j, i] = math.sqrt(float((diff * diff).sum()))
    return keys, dist


def agglomerate_average_link(dist: np.ndarray, leaves: list[str]) -> Dendrogram:
    """UPGMA agglomeration of a validated distance matrix."""
    dist = np.asarray(dist, dtype=float)
    n = len(leaves)
    if dist.shape != (n, n):
        raise ClusterError(f"distance matrix shape {dist.shape} does not match {n} leaves")
    if np.isnan(dist).any() or (dist < 0).any():
        raise ClusterError("distances must be finite and non-negative")
    if not np.allclose(dist, dist.T) or np.any(np.diag(dist) != 0):
        raise ClusterError("distance matrix must be symmetric with a zero diagonal")

    # Active cluster state: node id -> (size); d holds averaged inter-cluster
    # distances keyed by (small id, big id).
    size = {i: 1 for i in range(n)}
    d = {(i, j): float(dist[i, j]) for i in range(n) for j in range(i + 1, n)}
    members: dict[int, frozenset[str]] = {i: frozenset([leaves[i]]) for i in range(n)}
    merges: list[Merge] = []
    next_id = n
    while len(size) > 1:
        (a, b) = min(d, key=lambda p: (d[p], p))
        height = d[(a, b)]
        merges.append(Merge(a, b, height, next_id))
        members[next_id] = members[a] | members[b]
        sa, sb = size.pop(a), size.pop(b)
        # Lance-Williams update for unweighted average linkage.
        new_d = {}
        for c in size:
            da = d.pop((min(a, c), max(a, c)))
            db = d.pop((min(b, c), max(b, c)))
            new_d[(c, next_id)] = (sa * da + sb * db) / (sa + sb)
        del d[(a, b)]
        d.update(new_d)
        size[next_id] = sa + sb
        next_id += 1
    return Dendrogram(leaves=list(leaves), merges=merges, members=members)


def cluster_venues(table: DistributionTable) -> Dendrogram:
    keys, dist = pairwise_euclidean(table)
    return agglomerate_average_link(dist, keys)


# ---------------------------------------------------------------------------
# Exports. Newick uses the ultrametric convention: a node sits at half its
# merge height, so a two-leaf tree at height 0.4 prints "(A:0.2,B:0.2);".


def _node_label(dendro: Dendrogram, node: int) -> str:
    return dendro.leaves[node] if node < len(dendro.leaves) else f"n{node}"


def export_dendrogram(dendro: Dendrogram, fmt: str = "newick") -> str:
    if fmt == "newick":
        return _to_newick(dendro)
    if fmt == "merge-table":
        return _to_merge_table(dendro)
    raise ClusterError(f"unknown dendrogram format {fmt!r}")


def _to_newick(dendro: Dendrogram) -> str:
    n = len(dendro.leaves)
    if not dendro.merges:
        return f"{dendro.leaves[0]};"
    heights = {i: 0.0 for i in range(n)}
    children = {}
    for m in dendro.merges:
        heights[m.new_id] = m.height / 2.0
        children[m.new_id] = (m.node_a, m.node_b)

    def render(node: int, parent_height: float) -> str:
        length = parent_height - heights[node]
        if node < n:
            return f"{dendro.leaves[node]}:{length:.12g}"
        a, b = children[node]
        h = heights[node]
        return f"({render(a, h)},{render(b, h)}):{length:.12g}"

    root = dendro.root
    a, b = children[root]
    h = heights[root]
    return f"({render(a, h)},{render(b, h)});"


def _to_merge_table(dendro: Dendrogram) -> str:
    lines = ["node_a,node_b,height,new_node"]
    for m in dendro.merges:
        lines.append(
            f"{_node_label(dendro, m.node_a)},{_node_label(dendro, m.node_b)},"
            f"{m.height!r},n{m.new_id}"
        )
    return "\n".join(lines) + "\n"


def parse_merge_table(text: str) -> Dendrogram:
    """Rebuild a dendrogram from its merge-table CSV.

    Leaf names are recovered from the rows and ordered lexicographically,
    matching the sorted-venue order the pipeline clusters in.
    """
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != "node_a,node_b,height,new_node":
        raise ClusterError("bad merge-table header")
    rows = []
    internal: set[str] = set()
    for ln in lines[1:]:
        a, b, h, new = ln.split(",")
        rows.append((a, b, float(h), new))
        internal.add(new)
    # A label is a leaf exactly when it never appears in the new_node column.
    leaves = sorted({lab for a, b, _, _ in rows for lab in (a, b)} - internal)
    index = {name: i for i, name in enumerate(leaves)}
    members: dict[int, frozenset[str]] = {i: frozenset([name]) for name, i in index.items()}
    merges: list[Merge] = []
    label_to_id: dict[str, int] = dict(index)
    next_id = len(leaves)
    for a, b, h, new in rows:
        ia, ib = label_to_id[a], label_to_id[b]
        merges.append(Merge(ia, ib, h, next_id))
        members[next_id] = members[ia] | members[ib]
        label_to_id[new] = next_id
        next_id += 1
    if len(merges) != len(leaves) - 1:
        raise ClusterError("merge table does not describe a full tree")
    return Dendrogram(leaves=leaves, merges=merges, members=members)
