# Social graph storage, edge-list ingestion and partial observability.
#
# Copyright (C) 2024  The slcim authors
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 2 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.
#

__all__ = ["Graph", "ObservableGraph", "GraphError", "GraphFormatError", "InvalidNodeError",
           "PLAIN", "MATRIX_MARKET", "load_edge_list", "load_graph", "mask_network",
           "degree", "free_degree", "within_d_hops", "spectral_communities",
           "write_communities_csv"]

import csv
import logging
from collections import deque

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.sparse.csgraph import laplacian
from sklearn.cluster import KMeans

from slcim.utils import ensure_str

log = logging.getLogger("slcim")

PLAIN = "plain"
MATRIX_MARKET = "mtx"

_COMMENTS = ("%", "#")


class GraphError(ValueError):
    """Invalid graph or graph query."""
    pass


class GraphFormatError(GraphError):
    """The edge list could not be parsed."""
    pass


class InvalidNodeError(GraphError, IndexError):
    """A node index outside of the graph was used."""
    pass


class _AdjacencyView(object):
    """Read-only adjacency shared by the full and the observable graph."""

    def __init__(self, n, edges):
        self.n = n
        self.edges = frozenset(edges)
        neighbors = [[] for _i in range(n)]
        for i, j in self.edges:
            neighbors[i].append(j)
            neighbors[j].append(i)
        self.adjacency = [tuple(sorted(nbrs)) for nbrs in neighbors]
        self._hop_counts = {}

    def __len__(self):
        return self.n

    @property
    def num_edges(self):
        return len(self.edges)

    def check_node(self, v):
        if not 0 <= v < self.n:
            raise InvalidNodeError("Node %r is not in a graph of %d nodes" % (v, self.n))

    def neighbors(self, v):
        self.check_node(v)
        return self.adjacency[v]

    def hop_counts(self, d):
        """Memoized within_d_hops() of every node, the view never changes."""
        if d not in self._hop_counts:
            self._hop_counts[d] = [_bfs_count(self.adjacency, v, d) for v in range(self.n)]
        return self._hop_counts[d]

    def sparse_adjacency(self):
        if not self.edges:
            return scipy.sparse.csr_matrix((self.n, self.n))
        rows, cols = zip(*self.edges)
        data = np.ones(2 * len(rows))
        return scipy.sparse.coo_matrix((data, (rows + cols, cols + rows)),
                                       shape=(self.n, self.n)).tocsr()


class Graph(_AdjacencyView):
    """Undirected, unweighted social graph without self-loops."""

    def __init__(self, n, pairs):
        """
        :param n: number of nodes
        :type n: int

        :param pairs: node pairs, duplicates and self-loops are dropped
        :type pairs: iterable of (int, int)
        """
        if n < 1:
            raise GraphError("Graph needs at least one node")
        edges = set()
        for i, j in pairs:
            if not (0 <= i < n and 0 <= j < n):
                raise InvalidNodeError("Edge (%d, %d) is out of range for %d nodes" % (i, j, n))
            if i == j:
                continue
            edges.add((i, j) if i < j else (j, i))
        super().__init__(n, edges)

    def full_view(self):
        """Observable view with every edge visible."""
        return ObservableGraph(self, self.edges, 1.0)

    def __repr__(self):
        return "Graph(n=%d, edges=%d)" % (self.n, self.num_edges)


class ObservableGraph(_AdjacencyView):
    """The part of the graph visible to the parties when planning."""

    def __init__(self, base, visible_edges, p_nv):
        visible_edges = frozenset(visible_edges)
        if not visible_edges <= base.edges:
            raise GraphError("Visible edges must be a subset of the graph's edges")
        super().__init__(base.n, visible_edges)
        self.base = base
        self.p_nv = p_nv

    @property
    def visible_edges(self):
        return self.edges

    def __repr__(self):
        return "ObservableGraph(n=%d, visible=%d/%d, p_nv=%r)" % (
            self.n, self.num_edges, self.base.num_edges, self.p_nv)


def _parse_pair(tokens, lineno, shift):
    try:
        return int(tokens[0]) - shift, int(tokens[1]) - shift
    except (ValueError, IndexError):
        raise GraphFormatError("Malformed edge on line %d: %r" % (lineno, " ".join(tokens)))


def _data_lines(source):
    if isinstance(source, (bytes, str)):
        source = ensure_str(source).splitlines()
    for lineno, line in enumerate(source, 1):
        line = ensure_str(line).strip()
        if not line or line.startswith(_COMMENTS):
            continue
        yield lineno, line.split()


def load_edge_list(source, fmt=PLAIN, one_indexed=True):
    """Read an undirected graph from an edge list.

    :param source: byte or text stream (or the whole content) to read
    :type source: file object, bytes or str

    :param fmt: PLAIN whitespace separated pairs or MATRIX_MARKET coordinates
    :type fmt: str

    :param one_indexed: node ids of a PLAIN list start at 1; Matrix Market is always 1-indexed
    :type one_indexed: bool

    :rtype: Graph
    :raises GraphFormatError: on malformed lines, out-of-range ids or an empty stream
    """
    lines = _data_lines(source)

    if fmt == MATRIX_MARKET:
        try:
            lineno, header = next(lines)
        except StopIteration:
            raise GraphFormatError("Empty Matrix Market stream")
        try:
            rows, cols, _nnz = (int(x) for x in header[:3])
        except ValueError:
            raise GraphFormatError("Invalid Matrix Market size line %d: %r"
                                   % (lineno, " ".join(header)))
        n = max(rows, cols)
        pairs = []
        for lineno, tokens in lines:
            i, j = _parse_pair(tokens, lineno, 1)
            if not (0 <= i < n and 0 <= j < n):
                raise GraphFormatError("Entry on line %d is outside the %dx%d matrix"
                                       % (lineno, rows, cols))
            pairs.append((i, j))
    elif fmt == PLAIN:
        shift = 1 if one_indexed else 0
        pairs = []
        for lineno, tokens in lines:
            i, j = _parse_pair(tokens, lineno, shift)
            if i < 0 or j < 0:
                raise GraphFormatError("Node id below %d on line %d" % (shift, lineno))
            pairs.append((i, j))
        if not pairs:
            raise GraphFormatError("Edge list contains no edges")
        n = max(max(p) for p in pairs) + 1
    else:
        raise GraphFormatError("Unknown edge list format '%s'" % fmt)

    graph = Graph(n, pairs)
    log.info("Loaded %r", graph)
    return graph


def load_graph(path, one_indexed=True):
    """Load a graph from a file, Matrix Market when the name ends with .mtx."""
    fmt = MATRIX_MARKET if str(path).lower().endswith(".mtx") else PLAIN
    with open(path, "rb") as f:
        return load_edge_list(f, fmt, one_indexed)


def mask_network(g, p_nv, rng_seed):
    """Keep every edge independently with probability `p_nv`."""
    if not 0.0 <= p_nv <= 1.0:
        raise GraphError("Visibility probability must lie in [0, 1], got %r" % p_nv)
    edges = sorted(g.edges)
    rng = np.random.default_rng(rng_seed)
    keep = rng.random(len(edges)) < p_nv
    return ObservableGraph(g, (e for e, k in zip(edges, keep) if k), p_nv)


def degree(g, v):
    return len(g.neighbors(v))


def free_degree(g, v, free):
    """Number of neighbors of `v` inside the `free` set."""
    return sum(1 for w in g.neighbors(v) if w in free)


def _bfs_count(adjacency, v, d):
    seen = {v}
    frontier = deque([(v, 0)])
    while frontier:
        node, dist = frontier.popleft()
        if dist == d:
            continue
        for w in adjacency[node]:
            if w not in seen:
                seen.add(w)
                frontier.append((w, dist + 1))
    return len(seen) - 1


def within_d_hops(g, v, d=2):
    """Number of distinct nodes at distance 1..d from `v`."""
    g.check_node(v)
    if d < 1:
        raise GraphError("Hop count must be at least 1, got %r" % d)
    return _bfs_count(g.adjacency, v, d)


def _canonical_labels(labels):
    # number communities in order of first appearance
    mapping = {}
    return np.array([mapping.setdefault(label, len(mapping)) for label in labels], dtype=int)


def spectral_communities(g, k, rng_seed=0):
    """Partition the nodes into `k` communities.

    Nodes are embedded with the eigenvectors of the `k` smallest eigenvalues
    of the normalized Laplacian, the rows are normalized and clustered by
    k-means.

    :rtype: numpy array of labels in [0, k)
    """
    if not 1 <= k <= g.n:
        raise GraphError("Community count must lie in [1, %d], got %r" % (g.n, k))
    if k == 1:
        return np.zeros(g.n, dtype=int)

    lap = laplacian(g.sparse_adjacency().toarray(), normed=True)
    _values, vectors = scipy.linalg.eigh(lap, subset_by_index=[0, k - 1])
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    norms[norms < 1e-8] = 1.0
    embedding = vectors / norms

    km = KMeans(n_clusters=k, n_init=10, random_state=rng_seed).fit(embedding)
    return _canonical_labels(km.labels_)


def write_communities_csv(labels, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(("node_id", "label"))
    for node, label in enumerate(labels):
        writer.writerow((node, int(label)))
