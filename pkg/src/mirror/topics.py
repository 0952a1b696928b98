"""Cluster the 2D map, label clusters, and assign zoom visibility levels.

Clustering is density-based in layout space (mutual-reachability distances
with a minimum cluster size; low-density points become noise) so labels
match what the user sees on the map. Labels come from a provider when one
is configured, with a TF-IDF term ranking as the deterministic fallback.
Frequent topics surface first: zoom levels are quantile buckets over major
topic frequencies, and subtopics only appear below their parent's level.
"""

from __future__ import annotations

import re
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree
from scipy.spatial import cKDTree

from .model import TopicLabel

_MIN_EDGE = 1e-12


# ---------------------------------------------------------------------------
# Density clustering (mutual reachability + condensed-tree extraction)
# ---------------------------------------------------------------------------

class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        self.parent[self.find(a)] = self.find(b)


def _mutual_reachability_mst(xy: np.ndarray, min_cluster_size: int) -> np.ndarray:
    """MST edges (dist, i, j) over mutual-reachability distances.

    Core distance of a point is the distance to its min_cluster_size-th
    nearest point (itself included); the candidate edge set is a kNN graph,
    with disconnected components stitched by their closest cross pairs.
    """
    n = len(xy)
    tree = cKDTree(xy)
    k_core = min(min_cluster_size, n)
    core = tree.query(xy, k=k_core)[0]
    core = core[:, -1] if k_core > 1 else np.zeros(n)

    kk = min(max(min_cluster_size + 1, 16), n)
    dists, nbrs = tree.query(xy, k=kk)
    rows = np.repeat(np.arange(n), kk - 1)
    cols = nbrs[:, 1:].ravel()
    mreach = np.maximum.reduce([dists[:, 1:].ravel(), core[rows], core[cols]])
    mreach = np.maximum(mreach, _MIN_EDGE)
    graph = sp.coo_matrix((mreach, (rows, cols)), shape=(n, n)).tocsr()

    mst = minimum_spanning_tree(graph).tocoo()
    edges = list(zip(mst.data, mst.row, mst.col))

    n_comp, labels = connected_components(mst, directed=False)
    while n_comp > 1:
        members0 = np.where(labels == labels[0])[0]
        others = np.where(labels != labels[0])[0]
        cross = cKDTree(xy[others]).query(xy[members0], k=1)
        best = int(np.argmin(cross[0]))
        i = members0[best]
        j = others[cross[1][best]]
        d = max(float(cross[0][best]), core[i], core[j], _MIN_EDGE)
        edges.append((d, i, j))
        labels[labels == labels[j]] = labels[0]
        n_comp -= 1

    return sorted((float(d), int(min(i, j)), int(max(i, j))) for d, i, j in edges)


def _single_linkage(n: int, edges) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dendrogram from sorted MST edges: children pairs, merge dists, sizes."""
    uf = _UnionFind(2 * n - 1)
    node_of_root = list(range(n))
    sizes = np.ones(2 * n - 1, dtype=np.int64)
    children = np.zeros((n - 1, 2), dtype=np.int64)
    merge_dist = np.zeros(n - 1)
    for step, (d, i, j) in enumerate(edges):
        ri, rj = uf.find(i), uf.find(j)
        new = n + step
        children[step] = (node_of_root[ri], node_of_root[rj])
        merge_dist[step] = d
        sizes[new] = sizes[node_of_root[ri]] + sizes[node_of_root[rj]]
        uf.union(ri, rj)
        node_of_root[uf.find(ri)] = new
    return children, merge_dist, sizes


def _collect_leaves(node: int, n: int, children: np.ndarray) -> list[int]:
    out, stack = [], [node]
    while stack:
        cur = stack.pop()
        if cur < n:
            out.append(cur)
        else:
            stack.extend(children[cur - n])
    return out


def cluster_points(xy: np.ndarray, min_cluster_size: int = 5) -> np.ndarray:
    """Label each point with a cluster id, -1 for noise. Deterministic.

    Builds the mutual-reachability single-linkage hierarchy, condenses it by
    min_cluster_size, and keeps the clusters that maximize stability
    (excess of mass); the root never counts as a cluster, so diffuse data
    is all noise.
    """
    xy = np.asarray(xy, dtype=np.float64)
    n = len(xy)
    labels = np.full(n, -1, dtype=np.int64)
    if n < max(min_cluster_size, 2):
        return labels

    edges = _mutual_reachability_mst(xy, min_cluster_size)
    children, merge_dist, sizes = _single_linkage(n, edges)
    root = 2 * n - 2

    # Condense: walk top-down; a child smaller than min_cluster_size sheds
    # its points at lambda = 1/dist, a child at least that size either
    # continues the current cluster or (when both qualify) starts a new one.
    birth = {0: 0.0}
    cluster_parent: dict[int, int | None] = {0: None}
    cluster_children: dict[int, list[int]] = {0: []}
    point_cluster = np.zeros(n, dtype=np.int64)
    point_lambda = np.zeros(n)
    next_cluster = 1
    stack = [(root, 0)]
    while stack:
        node, cluster = stack.pop()
        if node < n:
            point_cluster[node] = cluster
            point_lambda[node] = np.inf
            continue
        left, right = children[node - n]
        lam = 1.0 / max(merge_dist[node - n], _MIN_EDGE)
        big = [c for c in (left, right) if sizes[c] >= min_cluster_size]
        if len(big) == 2:
            for child in (left, right):
                birth[next_cluster] = lam
                cluster_parent[next_cluster] = cluster
                cluster_children.setdefault(cluster, []).append(next_cluster)
                cluster_children[next_cluster] = []
                stack.append((child, next_cluster))
                next_cluster += 1
        else:
            for child in (left, right):
                if sizes[child] >= min_cluster_size:
                    stack.append((child, cluster))
                else:
                    for leaf in _collect_leaves(child, n, children):
                        point_cluster[leaf] = cluster
                        point_lambda[leaf] = lam

    # Stability: points contribute (lambda_fall - lambda_birth), child
    # clusters contribute (lambda_split - lambda_birth) per member.
    stability = {c: 0.0 for c in birth}
    finite = np.isfinite(point_lambda)
    cap = point_lambda[finite].max() if finite.any() else 1.0
    for p in range(n):
        c = point_cluster[p]
        stability[c] += min(point_lambda[p], cap) - birth[c]
    subtree_size = Counter(point_cluster.tolist())
    for c in sorted(birth, reverse=True):
        parent = cluster_parent[c]
        if parent is not None:
            subtree_size[parent] += subtree_size[c]
            stability[parent] += subtree_size[c] * (birth[c] - birth[parent])

    # Excess-of-mass selection, children before parents; root excluded.
    selected = {}
    value = {}
    for c in sorted(birth, reverse=True):
        kids = cluster_children.get(c, [])
        kid_value = sum(value[k] for k in kids)
        if c == 0:
            selected[c] = False
            value[c] = kid_value
        elif not kids or stability[c] >= kid_value:
            selected[c] = True
            value[c] = stability[c]
            pending = list(kids)
            while pending:
                k = pending.pop()
                selected[k] = False
                pending.extend(cluster_children.get(k, []))
        else:
            selected[c] = False
            value[c] = kid_value

    # Points fall out of exactly one condensed cluster; walk up to the
    # nearest selected ancestor, if any.
    resolve_cache: dict[int, int] = {}

    def resolve(c: int) -> int:
        seen = []
        cur = c
        while cur is not None and cur not in resolve_cache:
            if selected.get(cur):
                resolve_cache[cur] = cur
                break
            seen.append(cur)
            cur = cluster_parent[cur]
        hit = resolve_cache.get(cur, -1) if cur is not None else -1
        for s in seen:
            resolve_cache[s] = hit
        return resolve_cache.get(c, -1)

    raw = np.array([resolve(int(c)) for c in point_cluster])
    # Relabel to consecutive ids ordered by (size desc, first point index).
    order = []
    for cid in np.unique(raw):
        if cid == -1:
            continue
        members = np.where(raw == cid)[0]
        order.append((-len(members), int(members[0]), cid))
    for new_id, (_, _, cid) in enumerate(sorted(order)):
        labels[raw == cid] = new_id
    return labels


# ---------------------------------------------------------------------------
# Labeling
# ---------------------------------------------------------------------------

STOPWORDS = frozenset("""
a an and are as at be but by for from has have i in is it its me my of on or
our so that the their this to was we what when which who will with you your
how not new one all out up down over about more
""".split())

_TOKEN_RE = re.compile(r"[a-z0-9][a-z0-9'&+-]*")

MAX_LABEL_WORDS = 4


class TopicLabeler(ABC):
    """Optional provider-backed labeler; None or bad output falls back to TF-IDF."""

    @abstractmethod
    def label(self, sample_summaries: list[str]) -> str | None:
        ...


def _doc_terms(text: str) -> list[str]:
    words = [w for w in _TOKEN_RE.findall(text.lower()) if len(w) > 1]
    content = [w for w in words if w not in STOPWORDS]
    bigrams = [f"{a} {b}" for a, b in zip(words, words[1:])
               if a not in STOPWORDS and b not in STOPWORDS]
    return content + bigrams


def rank_cluster_terms(member_docs: list[list[str]], idf: dict[str, float]) -> list[str]:
    tf = Counter()
    for terms in member_docs:
        tf.update(terms)
    scored = sorted(((term, count * idf.get(term, 1.0)) for term, count in tf.items()),
                    key=lambda kv: (-kv[1], kv[0]))
    return [term for term, _ in scored]


def corpus_idf(all_docs: list[list[str]]) -> dict[str, float]:
    n = len(all_docs)
    df = Counter()
    for terms in all_docs:
        df.update(set(terms))
    return {term: np.log((1.0 + n) / (1.0 + count)) + 1.0 for term, count in df.items()}


def _pick_label(ranked: list[str], taken: set[str], fallback: str) -> str:
    for term in ranked:
        candidate = " ".join(term.split()[:MAX_LABEL_WORDS])
        if candidate not in taken:
            return candidate
    return fallback


# ---------------------------------------------------------------------------
# Topic tree
# ---------------------------------------------------------------------------

@dataclass
class TopicNode:
    label: TopicLabel
    member_ids: list[str]
    subtopics: list["TopicNode"] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "label": self.label.to_dict(),
            "member_ids": self.member_ids,
            "subtopics": [s.to_dict() for s in self.subtopics],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TopicNode":
        return cls(
            label=TopicLabel.from_dict(data["label"]),
            member_ids=list(data["member_ids"]),
            subtopics=[cls.from_dict(s) for s in data.get("subtopics", [])],
        )


@dataclass
class TopicTree:
    """Two-level topic hierarchy; majors ordered by frequency descending."""

    topics: list[TopicNode] = field(default_factory=list)

    def all_nodes(self):
        for major in self.topics:
            yield major, None
            for sub in major.subtopics:
                yield sub, major

    def find(self, topic_id: str) -> TopicNode | None:
        for node, _ in self.all_nodes():
            if node.label.topic_id == topic_id:
                return node
        return None

    def members_of(self, topic_id: str) -> list[str]:
        node = self.find(topic_id)
        return list(node.member_ids) if node else []

    def to_dict(self) -> dict:
        return {"topics": [t.to_dict() for t in self.topics]}

    @classmethod
    def from_dict(cls, data: dict) -> "TopicTree":
        return cls(topics=[TopicNode.from_dict(t) for t in data.get("topics", [])])


def _make_node(topic_id: str, member_idx: np.ndarray, xy: np.ndarray,
               item_ids: list[str], label_text: str) -> TopicNode:
    centroid = xy[member_idx].mean(axis=0)
    return TopicNode(
        label=TopicLabel(topic_id=topic_id, label=label_text, frequency=len(member_idx),
                         centroid=(float(centroid[0]), float(centroid[1])), min_zoom=0),
        member_ids=[item_ids[i] for i in member_idx],
    )


def label_topics(assignments: np.ndarray, xy: np.ndarray, item_ids: list[str],
                 summaries: list[str], labeler: TopicLabeler | None = None,
                 min_cluster_size: int = 5) -> TopicTree:
    """Build the labeled two-level tree from major-cluster assignments.

    Subtopics come from re-clustering inside each major cluster with a
    smaller minimum size. The TF-IDF fallback ranks unigrams and bigrams of
    member summaries against the whole dataset; equal top terms across
    clusters disambiguate via the next-ranked term.
    """
    all_docs = [_doc_terms(s) for s in summaries]
    idf = corpus_idf(all_docs)
    taken: set[str] = set()

    def choose_label(member_idx: np.ndarray, fallback: str) -> str:
        if labeler is not None:
            sample = [summaries[i] for i in member_idx[:12]]
            try:
                provided = labeler.label(sample)
            except Exception:
                provided = None
            if provided and provided.strip():
                provided = " ".join(provided.split()[:MAX_LABEL_WORDS]).lower()
                if provided not in taken:
                    taken.add(provided)
                    return provided
        ranked = rank_cluster_terms([all_docs[i] for i in member_idx], idf)
        label_text = _pick_label(ranked, taken, fallback)
        taken.add(label_text)
        return label_text

    cluster_ids = [c for c in np.unique(assignments) if c >= 0]
    clusters = sorted(
        (np.where(assignments == cid)[0] for cid in cluster_ids),
        key=lambda m: (-len(m), int(m[0])),
    )

    tree = TopicTree()
    for t_i, member_idx in enumerate(clusters):
        topic_id = f"t{t_i}"
        node = _make_node(topic_id, member_idx, xy, item_ids,
                          choose_label(member_idx, topic_id))
        sub_mcs = max(3, min_cluster_size // 2)
        sub_assign = cluster_points(xy[member_idx], sub_mcs)
        sub_ids = [c for c in np.unique(sub_assign) if c >= 0]
        if len(sub_ids) > 1:  # a single subtopic is just the major again
            for s_i, sub_cid in enumerate(sub_ids):
                sub_members = member_idx[sub_assign == sub_cid]
                node.subtopics.append(
                    _make_node(f"{topic_id}.s{s_i}", sub_members, xy, item_ids,
                               choose_label(sub_members, f"{topic_id}.s{s_i}")))
            node.subtopics.sort(key=lambda s: (-s.label.frequency, s.label.topic_id))
        tree.topics.append(node)
    return tree


def assign_zoom_levels(tree: TopicTree, levels: int = 5) -> TopicTree:
    """Quantile-bucket majors into zoom levels; subtopics appear one level
    below their parent at the earliest.

    A cascading floor keeps min_zoom monotone: no topic with a strictly
    higher frequency is ever hidden at a zoom level where a rarer one shows.
    """
    if levels < 2:
        raise ValueError("levels must be >= 2")
    majors = sorted(tree.topics, key=lambda t: (-t.label.frequency, t.label.topic_id))
    bucket = {node.label.topic_id: (rank * levels) // max(len(majors), 1)
              for rank, node in enumerate(majors)}

    entries = []
    for node, parent in tree.all_nodes():
        entries.append((-node.label.frequency, 0 if parent is None else 1,
                        node.label.topic_id, node, parent))
    entries.sort(key=lambda e: e[:3])

    floor_z = 0
    running_max = 0
    prev_freq = None
    for neg_freq, _, _, node, parent in entries:
        freq = -neg_freq
        if prev_freq is not None and freq < prev_freq:
            floor_z = running_max
        if parent is None:
            base = min(bucket[node.label.topic_id], levels - 1)
        else:
            base = parent.label.min_zoom + 1
        z = max(base, floor_z)
        node.label = replace(node.label, min_zoom=z)
        running_max = max(running_max, z)
        prev_freq = freq
    tree.topics.sort(key=lambda t: (-t.label.frequency, t.label.topic_id))
    return tree


def build_topic_tree(xy: np.ndarray, item_ids: list[str], summaries: list[str],
                     min_cluster_size: int = 5, labeler: TopicLabeler | None = None,
                     levels: int = 5) -> tuple[TopicTree, np.ndarray]:
    """Cluster, label, and zoom-level the map in one call."""
    assignments = cluster_points(xy, min_cluster_size)
    tree = label_topics(assignments, xy, item_ids, summaries, labeler, min_cluster_size)
    assign_zoom_levels(tree, levels)
    # Re-derive point assignments in tree order so ids match topic ids.
    id_to_topic: dict[str, str] = {}
    for major in tree.topics:
        for item_id in major.member_ids:
            id_to_topic[item_id] = major.label.topic_id
    final = np.array([id_to_topic.get(item_id, "") for item_id in item_ids])
    return tree, final
