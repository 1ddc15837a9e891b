"""Unit-disk planar mesh networks with gateways and temporarily blocked links."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ParameterError

__all__ = [
    "Region",
    "DensityParams",
    "MeshNetwork",
    "generate_network",
    "block_edges",
    "euclidean_distance",
    "neighbors",
    "density_of",
    "region_for_density",
    "nodes_for_density",
    "write_snapshot",
    "read_snapshot",
]


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle in meters."""

    width: float
    height: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ParameterError(f"degenerate region {self.width}x{self.height}")

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return (
            (pts[:, 0] >= self.x0)
            & (pts[:, 0] <= self.x0 + self.width)
            & (pts[:, 1] >= self.y0)
            & (pts[:, 1] <= self.y0 + self.height)
        )

    @classmethod
    def square(cls, side: float) -> "Region":
        return cls(side, side)


@dataclass(frozen=True)
class DensityParams:
    """Target density as expected neighbours per node.

    Not to be confused with the nuclear-norm weight of the completion solver,
    which lives in :class:`meshroute.completion.CompletionConfig`.
    """

    target_density: float
    node_count: int = 100
    radio_range: float = 1.0

    def __post_init__(self):
        if not self.target_density > 0:
            raise ParameterError("target_density must be positive")
        if self.node_count < 2:
            raise ParameterError("need at least two nodes for a density")

    def region(self) -> Region:
        return region_for_density(self.node_count, self.target_density, self.radio_range)


def density_of(n_nodes: int, area: float, radio_range: float) -> float:
    """Expected neighbour count ``(N-1) * pi * R^2 / area`` (border effects ignored)."""
    return (n_nodes - 1) * math.pi * radio_range**2 / area


def region_for_density(n_nodes: int, density: float, radio_range: float = 1.0) -> Region:
    """Square region giving ``density`` expected neighbours with ``n_nodes`` nodes."""
    if density <= 0:
        raise ParameterError("density must be positive")
    return Region.square(math.sqrt((n_nodes - 1) * math.pi * radio_range**2 / density))


def nodes_for_density(region: Region, density: float, radio_range: float = 1.0) -> int:
    """Node count giving ``density`` expected neighbours inside ``region``."""
    if density <= 0:
        raise ParameterError("density must be positive")
    return int(round(density * region.area / (math.pi * radio_range**2))) + 1


@dataclass(frozen=True, eq=False)
class MeshNetwork:
    """Immutable network realization.

    ``edges`` holds every true (unit-disk) link once as ``(i, j)`` with
    ``i < j``, sorted lexicographically; ``blocked`` is a boolean mask over
    those rows. The observed graph is the true graph minus blocked links.
    """

    positions: np.ndarray
    gateways: tuple[int, ...]
    radio_range: float
    region: Region
    edges: np.ndarray
    blocked: np.ndarray
    rng_seed: int | None = None
    _csr: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.positions.setflags(write=False)
        self.edges.setflags(write=False)
        self.blocked.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    @property
    def n_gateways(self) -> int:
        return len(self.gateways)

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def blocked_edges(self) -> np.ndarray:
        return self.edges[self.blocked]

    @property
    def observed_edges(self) -> np.ndarray:
        return self.edges[~self.blocked]

    @property
    def gateway_positions(self) -> np.ndarray:
        return self.positions[list(self.gateways)]

    def is_gateway(self, i: int) -> bool:
        return i in self.gateways

    def check_node(self, i) -> int:
        if not isinstance(i, (int, np.integer)) or not 0 <= i < self.n_nodes:
            raise ParameterError(f"unknown node id {i!r}")
        return int(i)

    def csr(self, use_observed: bool) -> tuple[np.ndarray, np.ndarray]:
        """CSR adjacency ``(indptr, indices)`` with ascending neighbour lists."""
        key = bool(use_observed)
        if key not in self._csr:
            e = self.observed_edges if use_observed else self.edges
            self._csr[key] = _build_csr(self.n_nodes, e)
        return self._csr[key]

    def adjacency(self, use_observed: bool) -> np.ndarray:
        """Dense boolean adjacency matrix."""
        a = np.zeros((self.n_nodes, self.n_nodes), dtype=bool)
        e = self.observed_edges if use_observed else self.edges
        a[e[:, 0], e[:, 1]] = True
        a[e[:, 1], e[:, 0]] = True
        return a

    def with_blocked(self, blocked: np.ndarray) -> "MeshNetwork":
        return MeshNetwork(
            positions=self.positions,
            gateways=self.gateways,
            radio_range=self.radio_range,
            region=self.region,
            edges=self.edges,
            blocked=np.asarray(blocked, dtype=bool).copy(),
            rng_seed=self.rng_seed,
        )

    def with_gateways(self, gateways) -> "MeshNetwork":
        gw = tuple(int(g) for g in gateways)
        _check_gateways(gw, self.n_nodes)
        return MeshNetwork(
            positions=self.positions,
            gateways=gw,
            radio_range=self.radio_range,
            region=self.region,
            edges=self.edges,
            blocked=self.blocked.copy(),
            rng_seed=self.rng_seed,
        )


def _build_csr(n: int, edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if edges.size == 0:
        return np.zeros(n + 1, dtype=np.int32), np.zeros(0, dtype=np.int32)
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int32)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, np.ascontiguousarray(dst, dtype=np.int32)


def _unit_disk_edges(positions: np.ndarray, radio_range: float) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    i, j = np.nonzero(np.triu(d2 <= radio_range * radio_range, k=1))
    return np.column_stack([i, j]).astype(np.int64).reshape(-1, 2)


def _check_gateways(gateways, n_nodes):
    if len(gateways) <= 2:
        raise ParameterError("at least three gateways are required")
    if len(gateways) >= n_nodes:
        raise ParameterError("gateways must be a strict subset of the nodes")
    if len(set(gateways)) != len(gateways):
        raise ParameterError("duplicate gateway ids")
    if any(not 0 <= g < n_nodes for g in gateways):
        raise ParameterError("gateway id out of range")


def network_from_positions(positions, gateways, radio_range=1.0, region=None, seed=None) -> MeshNetwork:
    """Build a network from explicit coordinates (unit-disk links, nothing blocked)."""
    pos = np.array(positions, dtype=np.float64).reshape(-1, 2)
    gw = tuple(int(g) for g in gateways)
    _check_gateways(gw, pos.shape[0])
    if radio_range <= 0:
        raise ParameterError("radio_range must be positive")
    if region is None:
        lo = pos.min(axis=0)
        span = np.maximum(pos.max(axis=0) - lo, 1e-9)
        region = Region(float(span[0]), float(span[1]), float(lo[0]), float(lo[1]))
    edges = _unit_disk_edges(pos, radio_range)
    return MeshNetwork(pos, gw, float(radio_range), region, edges,
                       np.zeros(len(edges), dtype=bool), seed)


def generate_network(n_nodes: int, n_gateways: int, region: Region | tuple,
                     radio_range: float = 1.0, seed: int | None = None) -> MeshNetwork:
    """Drop ``n_nodes`` nodes uniformly in ``region`` and pick gateways at random."""
    if not isinstance(region, Region):
        region = Region(*region)
    if n_gateways <= 2:
        raise ParameterError("at least three gateways are required")
    if n_gateways >= n_nodes:
        raise ParameterError("gateways must be a strict subset of the nodes")
    if radio_range <= 0:
        raise ParameterError("radio_range must be positive")
    rng = np.random.default_rng(seed)
    pos = np.empty((n_nodes, 2))
    pos[:, 0] = region.x0 + rng.uniform(0.0, region.width, n_nodes)
    pos[:, 1] = region.y0 + rng.uniform(0.0, region.height, n_nodes)
    gw = tuple(sorted(int(g) for g in rng.choice(n_nodes, n_gateways, replace=False)))
    edges = _unit_disk_edges(pos, radio_range)
    return MeshNetwork(pos, gw, float(radio_range), region, edges,
                       np.zeros(len(edges), dtype=bool), seed)


EdgeSampler = Callable[[np.random.Generator, np.ndarray, int], np.ndarray]


def uniform_edge_sampler(rng: np.random.Generator, edges: np.ndarray, count: int) -> np.ndarray:
    return rng.choice(len(edges), count, replace=False)


def block_edges(network: MeshNetwork, fraction: float, seed: int | None = None,
                sampler: EdgeSampler = uniform_edge_sampler) -> MeshNetwork:
    """Block ``floor(fraction * |E|)`` undirected links, replacing any previous blocking."""
    if not 0.0 <= fraction <= 1.0:
        raise ParameterError(f"fraction {fraction} outside [0, 1]")
    m = network.n_edges
    count = math.floor(round(fraction * m, 9))
    mask = np.zeros(m, dtype=bool)
    if count:
        idx = np.asarray(sampler(np.random.default_rng(seed), network.edges, count))
        mask[idx] = True
        if mask.sum() != count:
            raise ParameterError("edge sampler returned duplicate indices")
    return network.with_blocked(mask)


def euclidean_distance(network: MeshNetwork, i: int, j: int) -> float:
    i = network.check_node(i)
    j = network.check_node(j)
    return float(np.hypot(*(network.positions[i] - network.positions[j])))


def neighbors(network: MeshNetwork, i: int, use_observed: bool = True) -> set[int]:
    i = network.check_node(i)
    indptr, indices = network.csr(use_observed)
    return set(indices[indptr[i]:indptr[i + 1]].tolist())


# -- snapshots ---------------------------------------------------------------

def write_snapshot(network: MeshNetwork, path=None) -> str:
    """Serialize to the line format; returns the text and writes it if ``path`` is given.

    Layout::

        meshnet <N> <N_a> <R> <x0> <y0> <width> <height>
        node <id> <x> <y> <is_gateway>      (N lines)
        edge <i> <j> <blocked>              (one per true link)
    """
    out = io.StringIO()
    r = network.region
    out.write(f"meshnet {network.n_nodes} {network.n_gateways} {network.radio_range!r} "
              f"{r.x0!r} {r.y0!r} {r.width!r} {r.height!r}\n")
    gws = set(network.gateways)
    for i, (x, y) in enumerate(network.positions.tolist()):
        out.write(f"node {i} {x!r} {y!r} {int(i in gws)}\n")
    for (i, j), b in zip(network.edges.tolist(), network.blocked.tolist()):
        out.write(f"edge {i} {j} {int(b)}\n")
    text = out.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_snapshot(source) -> MeshNetwork:
    """Parse a snapshot from a path or from the text itself."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text()
    else:
        text = source
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0][0] != "meshnet":
        raise ParameterError("not a meshnet snapshot")
    _, n, na, rr, x0, y0, w, h = lines[0]
    n, na = int(n), int(na)
    pos = np.zeros((n, 2))
    gws = []
    edges, blocked = [], []
    for parts in lines[1:]:
        if parts[0] == "node":
            i = int(parts[1])
            pos[i] = float(parts[2]), float(parts[3])
            if parts[4] == "1":
                gws.append(i)
        elif parts[0] == "edge":
            edges.append((int(parts[1]), int(parts[2])))
            blocked.append(parts[3] == "1")
        else:
            raise ParameterError(f"unknown snapshot record {parts[0]!r}")
    if len(gws) != na:
        raise ParameterError("gateway count does not match header")
    e = np.array(edges, dtype=np.int64).reshape(-1, 2)
    return MeshNetwork(pos, tuple(sorted(gws)), float(rr),
                       Region(float(w), float(h), float(x0), float(y0)),
                       e, np.array(blocked, dtype=bool))
