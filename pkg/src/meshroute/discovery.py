"""Gateway-rooted BFS discovery: hop matrices, route tables and flooding cost."""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import ConsistencyError, ParameterError
from .netmodel import MeshNetwork

__all__ = [
    "MISSING",
    "HopMatrix",
    "RouteTable",
    "MessageLedger",
    "bfs_hops",
    "bfs_tree",
    "build_hop_matrix",
    "incomplete_discovery",
    "build_route_table",
    "flood_message_count",
    "validate_path",
]

#: Marker stored in integer hop arrays for cells without a known route.
MISSING = -1


@dataclass(eq=False)
class HopMatrix:
    """Gateway-by-node hop counts with explicit missing cells.

    ``hops`` is an ``int`` array that holds :data:`MISSING` wherever ``omega``
    is false; use :meth:`entry` or :meth:`as_float` rather than reading the
    marker directly.
    """

    hops: np.ndarray
    gateways: tuple[int, ...]

    def __post_init__(self):
        self.hops = np.asarray(self.hops, dtype=np.int64)
        if self.hops.shape[0] != len(self.gateways):
            raise ParameterError("one row per gateway required")
        if np.any(self.hops < MISSING):
            raise ParameterError("hop counts must be nonnegative or MISSING")

    @property
    def shape(self) -> tuple[int, int]:
        return self.hops.shape

    @property
    def omega(self) -> np.ndarray:
        """Boolean mask of observed cells."""
        return self.hops != MISSING

    @property
    def n_observed(self) -> int:
        return int(self.omega.sum())

    def entry(self, g: int, n: int) -> int | None:
        v = int(self.hops[g, n])
        return None if v == MISSING else v

    def as_float(self) -> np.ndarray:
        """Hops as floats with ``nan`` for missing cells."""
        out = self.hops.astype(np.float64)
        out[~self.omega] = np.nan
        return out

    def as_inf(self) -> np.ndarray:
        """Hops as floats with ``inf`` for missing cells (handy for ordering checks)."""
        out = self.hops.astype(np.float64)
        out[~self.omega] = np.inf
        return out

    def copy(self) -> "HopMatrix":
        return HopMatrix(self.hops.copy(), self.gateways)

    def to_csv(self, path=None) -> str:
        """Rows are gateways; missing cells are left empty."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gateway"] + list(range(self.hops.shape[1])))
        for g, row in zip(self.gateways, self.hops.tolist()):
            w.writerow([g] + ["" if v == MISSING else v for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "HopMatrix":
        text = Path(source).read_text() if isinstance(source, Path) else source
        rows = list(csv.reader(io.StringIO(text)))
        gws, hops = [], []
        for r in rows[1:]:
            gws.append(int(r[0]))
            hops.append([MISSING if c == "" else int(c) for c in r[1:]])
        return cls(np.array(hops, dtype=np.int64).reshape(len(gws), -1), tuple(gws))


@dataclass
class RouteTable:
    """Full node paths ``[g, ..., n]`` per (gateway, node); ``None`` when unroutable."""

    gateways: tuple[int, ...]
    n_nodes: int
    paths: dict = field(default_factory=dict)

    def path(self, gateway: int, node: int) -> list[int] | None:
        return self.paths.get((gateway, node))

    def hop_count(self, gateway: int, node: int) -> int | None:
        p = self.path(gateway, node)
        return None if p is None else len(p) - 1

    def routable(self) -> int:
        return sum(p is not None for p in self.paths.values())

    def to_csv(self, path=None, verified=None) -> str:
        """``gateway,target,hop_count,path,verified`` with space-separated node ids."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gateway", "target", "hop_count", "path", "verified"])
        for g in self.gateways:
            for n in range(self.n_nodes):
                p = self.paths.get((g, n))
                flag = True if verified is None else bool(verified.get((g, n), False))
                if p is None:
                    w.writerow([g, n, "", "", 0])
                else:
                    w.writerow([g, n, len(p) - 1, " ".join(map(str, p)), int(flag)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


class MessageLedger:
    """Broadcast counts per discovery phase and originating node."""

    def __init__(self):
        self.phases: dict[str, Counter] = {}

    def add(self, phase: str, node: int, count: int = 1) -> None:
        if count < 0:
            raise ParameterError("message counts are nonnegative")
        self.phases.setdefault(phase, Counter())[int(node)] += int(count)

    def total(self, phase: str | None = None) -> int:
        if phase is None:
            return sum(sum(c.values()) for c in self.phases.values())
        return sum(self.phases.get(phase, Counter()).values())

    def merge(self, other: "MessageLedger") -> "MessageLedger":
        for phase, counts in other.phases.items():
            self.phases.setdefault(phase, Counter()).update(counts)
        return self

    def totals(self) -> dict[str, int]:
        return {p: self.total(p) for p in self.phases}

    def __repr__(self):
        return f"MessageLedger({self.totals()})"


def bfs_tree(network: MeshNetwork, sources, use_observed: bool = True,
             max_depth: int = -1) -> tuple[np.ndarray, np.ndarray]:
    """Raw kernel output: ``(dist, parent)`` arrays, ``-1`` where unreached."""
    indptr, indices = network.csr(use_observed)
    src = np.asarray([network.check_node(s) for s in np.atleast_1d(sources)], dtype=np.int32)
    return _kernels.bfs_multi(indptr, indices, src, max_depth)


def bfs_hops(network: MeshNetwork, source: int, use_observed: bool = True) -> list[int | None]:
    """Shortest-path hop counts from ``source``; ``None`` for unreachable nodes."""
    dist, _ = bfs_tree(network, [source], use_observed)
    return [None if d < 0 else int(d) for d in dist[0].tolist()]


def build_hop_matrix(network: MeshNetwork, use_observed: bool = True) -> HopMatrix:
    dist, _ = bfs_tree(network, network.gateways, use_observed)
    return HopMatrix(dist.astype(np.int64), network.gateways)


def incomplete_discovery(network: MeshNetwork) -> tuple[HopMatrix, HopMatrix]:
    """First discovery round while links are blocked.

    Every node remembers the hop count it had in the last stable topology
    (all links up). During the round it accepts a gateway's discovery only
    if it arrives within that count; a later arrival came over a detour
    around a blocked link and is held back as provisional.

    Returns ``(accepted, provisional)``. ``accepted`` is the incomplete hop
    matrix (detoured and unreachable cells missing); ``provisional`` holds
    the detour hop counts the round did see, i.e. a plain BFS on the
    observed graph.
    """
    provisional = build_hop_matrix(network, use_observed=True)
    stable = build_hop_matrix(network, use_observed=False)
    acc = provisional.hops.copy()
    acc[(provisional.hops != stable.hops)] = MISSING
    return HopMatrix(acc, network.gateways), provisional


def validate_path(network: MeshNetwork, path, use_observed: bool = True) -> bool:
    """True if consecutive nodes of ``path`` are linked in the selected graph."""
    indptr, indices = network.csr(use_observed)
    for u, v in zip(path[:-1], path[1:]):
        nb = indices[indptr[u]:indptr[u + 1]]
        k = np.searchsorted(nb, v)
        if k >= len(nb) or nb[k] != v:
            return False
    return True


def _walk(parent_row: np.ndarray, source: int, node: int) -> list[int]:
    path = [node]
    while path[-1] != source:
        p = int(parent_row[path[-1]])
        if p < 0:
            raise ConsistencyError(f"broken parent chain at node {path[-1]}")
        path.append(p)
    return path[::-1]


def build_route_table(network: MeshNetwork, hop_matrix: HopMatrix,
                      use_observed: bool = True) -> RouteTable:
    """Parent-pointer BFS paths, cross-checked against ``hop_matrix``."""
    if hop_matrix.gateways != network.gateways:
        raise ConsistencyError("hop matrix gateways differ from network gateways")
    dist, parent = bfs_tree(network, network.gateways, use_observed)
    table = RouteTable(network.gateways, network.n_nodes)
    for gi, g in enumerate(network.gateways):
        for n in range(network.n_nodes):
            want = hop_matrix.entry(gi, n)
            if dist[gi, n] < 0:
                if want is not None:
                    raise ConsistencyError(f"hop matrix claims route {g}->{n} that BFS cannot find")
                table.paths[(g, n)] = None
                continue
            path = _walk(parent[gi], g, n)
            if want is None or len(path) - 1 != want or not validate_path(network, path, use_observed):
                raise ConsistencyError(f"route {g}->{n} disagrees with hop matrix entry {want}")
            table.paths[(g, n)] = path
    return table


def flood_message_count(network: MeshNetwork, sources, use_observed: bool = True,
                        phase: str = "flood", ledger: MessageLedger | None = None) -> MessageLedger:
    """One flood per source: every node the flood reaches rebroadcasts once."""
    sources = list(np.atleast_1d(sources))
    if not sources:
        raise ParameterError("at least one flooding source required")
    ledger = MessageLedger() if ledger is None else ledger
    dist, _ = bfs_tree(network, sources, use_observed)
    for row in dist:
        for node in np.flatnonzero(row >= 0).tolist():
            ledger.add(phase, node)
    return ledger
