"""Binary directed networks: construction, file I/O, and dyad summaries."""

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DirectedNetwork",
    "DyadValue",
    "NetworkFormatError",
    "NetworkSummary",
    "load_network",
    "save_network",
    "summarize",
    "symmetrize",
]


class NetworkFormatError(ValueError):
    """Raised when a network file cannot be parsed or fails validation."""


class DyadValue(enum.Enum):
    """The four joint states of the edge pair (y_ij, y_ji) for i < j."""

    MUTUAL = (1, 1)
    ASYM_OUT = (1, 0)
    ASYM_IN = (0, 1)
    NULL = (0, 0)

    @classmethod
    def from_pair(cls, y_ij, y_ji):
        return cls((int(y_ij), int(y_ji)))


@dataclass(frozen=True)
class DirectedNetwork:
    """A binary directed network with no self-loops.

    Parameters
    ----------
    adj : (n, n) array
        Binary adjacency matrix; entry (i, j) is 1 if there is a directed
        edge from node i to node j.
    node_labels : tuple of str, optional
        One label per node.
    """

    adj: np.ndarray
    node_labels: tuple | None = None

    def __post_init__(self):
        adj = np.asarray(self.adj)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency matrix must be square, got shape {adj.shape}")
        if adj.shape[0] < 2:
            raise ValueError("network needs at least 2 nodes")
        values = np.unique(adj)
        if not np.isin(values, [0, 1]).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if np.diagonal(adj).any():
            raise ValueError("self-loops are not allowed (diagonal must be zero)")
        if self.node_labels is not None and len(self.node_labels) != adj.shape[0]:
            raise ValueError("node_labels length must equal the node count")
        adj = adj.astype(np.int8)
        adj.flags.writeable = False
        object.__setattr__(self, "adj", adj)

    @property
    def n(self):
        return self.adj.shape[0]

    @property
    def n_edges(self):
        return int(self.adj.sum())

    def __eq__(self, other):
        if not isinstance(other, DirectedNetwork):
            return NotImplemented
        return np.array_equal(self.adj, other.adj)


@dataclass(frozen=True)
class NetworkSummary:
    """Density and dyad-census summary of a directed network."""

    n: int
    density: float
    mutual_tie_fraction: float
    dyad_counts: dict = field(default_factory=dict)


def load_network(path, format="edge-list"):
    """Read a directed network from disk.

    Parameters
    ----------
    path : str or Path
        File to read.
    format : {'edge-list', 'dense-matrix'}
        ``edge-list``: one "source,target" pair of 0-based node indices per
        line, with an optional first line "n=<int>" declaring the node
        count (otherwise n is one plus the largest index seen).
        ``dense-matrix``: n lines of n comma-separated 0/1 values.

    Returns
    -------
    DirectedNetwork
    """
    with open(path, "r", encoding="utf-8", newline=None) as fh:
        lines = fh.read().splitlines()
    if format == "edge-list":
        return _parse_edge_list(lines, path)
    if format == "dense-matrix":
        return _parse_dense_matrix(lines, path)
    raise ValueError(f"unknown network format: {format!r}")


def _parse_edge_list(lines, path):
    declared_n = None
    start = 0
    if lines and lines[0].strip().startswith("n="):
        try:
            declared_n = int(lines[0].strip()[2:])
        except ValueError:
            raise NetworkFormatError(f"{path}:1: bad node-count header {lines[0]!r}")
        start = 1

    edges = []
    for lineno, raw in enumerate(lines[start:], start=start + 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise NetworkFormatError(f"{path}:{lineno}: expected 'source,target', got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise NetworkFormatError(f"{path}:{lineno}: non-integer node index in {raw!r}")
        if i < 0 or j < 0:
            raise NetworkFormatError(f"{path}:{lineno}: node indices must be >= 0")
        if i == j:
            raise NetworkFormatError(f"{path}:{lineno}: self-loop ({i},{j}) is not allowed")
        if declared_n is not None and (i >= declared_n or j >= declared_n):
            raise NetworkFormatError(
                f"{path}:{lineno}: index out of range for declared n={declared_n}"
            )
        edges.append((i, j))

    n = declared_n if declared_n is not None else (max(max(e) for e in edges) + 1 if edges else 0)
    if n < 2:
        raise NetworkFormatError(f"{path}: network needs at least 2 nodes (got n={n})")
    adj = np.zeros((n, n), dtype=np.int8)
    for i, j in edges:
        adj[i, j] = 1
    return DirectedNetwork(adj)


def _parse_dense_matrix(lines, path):
    rows = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        try:
            row = [int(p) for p in parts]
        except ValueError:
            raise NetworkFormatError(f"{path}:{lineno}: non-integer matrix entry in {raw!r}")
        if any(v not in (0, 1) for v in row):
            raise NetworkFormatError(f"{path}:{lineno}: matrix entries must be 0 or 1")
        rows.append(row)
    if not rows:
        raise NetworkFormatError(f"{path}: empty matrix file")
    n = len(rows[0])
    for lineno, row in enumerate(rows, start=1):
        if len(row) != n:
            raise NetworkFormatError(f"{path}: row {lineno} has {len(row)} entries, expected {n}")
    if len(rows) != n:
        raise NetworkFormatError(f"{path}: matrix has {len(rows)} rows but {n} columns")
    adj = np.array(rows, dtype=np.int8)
    if np.diagonal(adj).any():
        raise NetworkFormatError(f"{path}: nonzero diagonal (self-loops are not allowed)")
    return DirectedNetwork(adj)


def save_network(net, path, format="edge-list"):
    """Write a network to disk in one of the formats read by load_network."""
    if format == "edge-list":
        lines = [f"n={net.n}"]
        srcs, dsts = np.nonzero(net.adj)
        lines.extend(f"{i},{j}" for i, j in zip(srcs.tolist(), dsts.tolist()))
    elif format == "dense-matrix":
        lines = [",".join(str(int(v)) for v in row) for row in net.adj]
    else:
        raise ValueError(f"unknown network format: {format!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def symmetrize(net):
    """Undirected version of a network: an edge wherever either direction has one."""
    adj = ((net.adj + net.adj.T) > 0).astype(np.int8)
    return DirectedNetwork(adj, node_labels=net.node_labels)


def summarize(net):
    """Compute density, reciprocity, and the dyad census.

    The dyad census counts each unordered pair {i, j} once, by the joint
    state (y_ij, y_ji) with i < j.  ``mutual_tie_fraction`` is the fraction
    of directed edges that are reciprocated, 2 * (#mutual dyads) / (#edges),
    and is defined as 0 for an edgeless network.
    """
    adj = net.adj
    n = net.n
    iu, ju = np.triu_indices(n, k=1)
    upper = adj[iu, ju]
    lower = adj[ju, iu]
    n_mutual = int(np.sum((upper == 1) & (lower == 1)))
    n_out = int(np.sum((upper == 1) & (lower == 0)))
    n_in = int(np.sum((upper == 0) & (lower == 1)))
    n_null = int(np.sum((upper == 0) & (lower == 0)))
    n_edges = net.n_edges
    density = n_edges / (n * (n - 1))
    mutual_frac = 2.0 * n_mutual / n_edges if n_edges > 0 else 0.0
    counts = {
        DyadValue.MUTUAL: n_mutual,
        DyadValue.ASYM_OUT: n_out,
        DyadValue.ASYM_IN: n_in,
        DyadValue.NULL: n_null,
    }
    return NetworkSummary(
        n=n,
        density=density,
        mutual_tie_fraction=mutual_frac,
        dyad_counts=counts,
    )
