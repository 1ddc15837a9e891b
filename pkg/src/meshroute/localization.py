"""Multihop localization from gateway positions and hop counts only.

A target never learns (or reveals) any non-gateway position or any one-hop
distance: the inputs are the gateway coordinates, the target's hop count to
each gateway, and its own neighbour count.

The localization program asks for ``Z = [[I, t], [t^T, y]] >= 0`` with
``tr(C_i Z) <= B_i`` for every gateway, where ``C_i = [a_i; -1][a_i^T, -1]``.
Expanding, ``tr(C_i Z) = ||a_i - t||^2 + (y - t^T t)`` and ``Z >= 0`` iff
``y >= t^T t``, so the smallest admissible ``y`` is ``t^T t`` and the program
is feasible exactly when the disks ``||t - a_i||^2 <= B_i`` intersect. That
intersection is what :func:`localize` searches, by averaged projections.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import _kernels
from .discovery import MISSING, MessageLedger, bfs_tree
from .errors import InsufficientAnchorsError, ParameterError
from .netmodel import MeshNetwork, Region, generate_network, nodes_for_density

__all__ = [
    "DensityEstimate",
    "HopLengthModel",
    "DistanceBounds",
    "LocalizationParams",
    "LocalizationEstimate",
    "vicinity_discovery",
    "calibrate_hop_length",
    "multihop_bounds",
    "csdp_matrices",
    "localize",
    "localize_nodes",
    "DEFAULT_DENSITY_GRID",
]

DEFAULT_DENSITY_GRID = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 14, 16, 18, 20, 25, 30, 40, 50)


@dataclass(frozen=True)
class DensityEstimate:
    node: int
    neighbor_count: int

    @property
    def lambda_tilde(self) -> float:
        return float(self.neighbor_count)


def vicinity_discovery(network: MeshNetwork, node: int, ledger: MessageLedger | None = None,
                       random_delay: bool = False) -> DensityEstimate:
    """Hello broadcast plus one reply per neighbour on the observed graph.

    ``random_delay`` marks replies as randomly delayed; it only changes the
    ledger phase name, no timing is simulated.
    """
    node = network.check_node(node)
    indptr, _ = network.csr(use_observed=True)
    count = int(indptr[node + 1] - indptr[node])
    if ledger is not None:
        _, indices = network.csr(use_observed=True)
        phase = "vicinity_delayed" if random_delay else "vicinity"
        ledger.add(phase, node)
        for nb in indices[indptr[node]:indptr[node + 1]].tolist():
            ledger.add(phase, nb)
    return DensityEstimate(node, count)


@dataclass(frozen=True)
class HopLengthModel:
    """Mean Euclidean progress per BFS hop as a function of local density."""

    densities: tuple[float, ...]
    hop_length: tuple[float, ...]
    samples: tuple[int, ...]
    radio_range: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        if len(self.densities) == 0 or len(self.densities) != len(self.hop_length):
            raise ParameterError("hop-length table is empty or ragged")
        if list(self.densities) != sorted(self.densities):
            raise ParameterError("densities must be ascending")

    def __call__(self, lambda_tilde: float) -> float:
        """Linear interpolation, clamped at both ends of the table."""
        return float(np.interp(lambda_tilde, self.densities, self.hop_length))

    def scaled(self, radio_range: float) -> "HopLengthModel":
        """Same curve for another radio range (progress scales with R)."""
        k = radio_range / self.radio_range
        return HopLengthModel(self.densities, tuple(h * k for h in self.hop_length),
                              self.samples, radio_range, self.seed)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda_tilde", "d_bfs", "samples"])
        for row in zip(self.densities, self.hop_length, self.samples):
            w.writerow([repr(float(row[0])), repr(float(row[1])), int(row[2])])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source, radio_range: float = 1.0) -> "HopLengthModel":
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            source = Path(source).read_text()
        rows = list(csv.DictReader(io.StringIO(source)))
        return cls(tuple(float(r["lambda_tilde"]) for r in rows),
                   tuple(float(r["d_bfs"]) for r in rows),
                   tuple(int(r["samples"]) for r in rows), radio_range)

    @classmethod
    def default(cls, radio_range: float = 1.0) -> "HopLengthModel":
        """Table shipped with the package (regenerate with ``meshroute calibrate``)."""
        text = resources.files("meshroute").joinpath("data/hop_length.csv").read_text()
        return cls.from_csv(text).scaled(radio_range)


def calibrate_hop_length(density_grid=DEFAULT_DENSITY_GRID, radio_range: float = 1.0,
                         samples: int = 1000, seed: int = 0,
                         region_side: float = 10.0) -> HopLengthModel:
    """Measure per-hop progress of BFS routes on random networks at each density.

    For each density, networks are drawn in a square of side
    ``region_side * R`` with as many nodes as that density requires; random
    connected node pairs contribute ``distance / hops`` until ``samples``
    pairs are collected. The resulting curve is made non-decreasing (running
    maximum) and capped at ``R``.
    """
    grid = sorted(float(d) for d in density_grid)
    if not grid or grid[0] <= 0 or len(set(grid)) != len(grid):
        raise ParameterError("density grid must be non-empty, positive and distinct")
    if samples < 1:
        raise ParameterError("samples must be positive")
    rng = np.random.default_rng(seed)
    means, counts = [], []
    for lam in grid:
        region = Region.square(region_side * radio_range)
        n_nodes = max(nodes_for_density(region, lam, radio_range), 4)
        ratios: list[float] = []
        attempts = 0
        while len(ratios) < samples:
            attempts += 1
            if attempts > 50 * samples:
                raise ParameterError(f"density {lam} too sparse to collect samples")
            net = generate_network(n_nodes, 3, region, radio_range, int(rng.integers(2**63)))
            src = rng.choice(n_nodes, size=min(n_nodes, 20), replace=False)
            dist, _ = bfs_tree(net, src, use_observed=False)
            for row, s in enumerate(src.tolist()):
                reach = np.flatnonzero(dist[row] > 0)
                if reach.size == 0:
                    continue
                t = int(rng.choice(reach))
                d = math.dist(net.positions[s], net.positions[t])
                ratios.append(d / dist[row, t])
        means.append(float(np.mean(ratios[:samples])))
        counts.append(samples)
    smooth = np.minimum(np.maximum.accumulate(means), radio_range)
    return HopLengthModel(tuple(grid), tuple(float(v) for v in smooth), tuple(counts),
                          radio_range, seed)


@dataclass(frozen=True)
class DistanceBounds:
    """Upper bounds (meters) on target-to-gateway distance for the usable gateways."""

    gateway_index: np.ndarray
    hops: np.ndarray
    upper: np.ndarray
    per_hop: float = 0.0

    @property
    def squared(self) -> np.ndarray:
        return self.upper**2

    def __len__(self):
        return len(self.upper)

    def range_guess(self) -> np.ndarray:
        """Point estimate of each distance: half a hop short of the bound."""
        per_hop = self.per_hop if self.per_hop > 0 else float(np.min(self.upper / self.hops))
        return (self.hops - 0.5) * per_hop


def multihop_bounds(hop_row, hop_length_model: HopLengthModel, lambda_tilde: float,
                    radio_range: float = 1.0) -> DistanceBounds:
    """``hops * d_bfs(lambda)``, never more than ``hops * R``; missing gateways dropped."""
    row = np.asarray([MISSING if v is None else v for v in hop_row], dtype=np.float64)
    row[np.isnan(row)] = MISSING
    usable = np.flatnonzero(row != MISSING)
    if usable.size < 3:
        raise InsufficientAnchorsError(f"{usable.size} gateways with known hops; need 3")
    hops = row[usable]
    if np.any(hops <= 0):
        raise ParameterError("target coincides with a gateway (zero hops)")
    per_hop = min(hop_length_model(lambda_tilde), radio_range)
    upper = np.minimum(hops * per_hop, hops * radio_range)
    return DistanceBounds(usable, hops.astype(np.int64), upper, per_hop)


@dataclass(frozen=True)
class LocalizationParams:
    tolerance: float = 1e-6
    max_iter: int = 50000
    epsilon: float = 1e-9
    # "multilateration" or "centroid"
    init: str = "multilateration"
    gn_iters: int = 20


@dataclass(frozen=True)
class LocalizationEstimate:
    theta_hat: np.ndarray
    feasible: bool
    max_violation: float
    iterations: int
    node: int | None = None


def csdp_matrices(gateway_positions, theta) -> tuple[list[np.ndarray], np.ndarray]:
    """``C_i`` per gateway and the rank-one ``Z`` for a candidate position."""
    a = np.asarray(gateway_positions, dtype=np.float64)
    t = np.asarray(theta, dtype=np.float64)
    cs = []
    for ai in a:
        v = np.append(ai, -1.0)
        cs.append(np.outer(v, v))
    z = np.eye(3)
    z[:2, 2] = t
    z[2, :2] = t
    z[2, 2] = t @ t
    return cs, z


def _multilaterate(centers: np.ndarray, ranges: np.ndarray, x0: np.ndarray, iters: int) -> np.ndarray:
    """Gauss-Newton least squares on ``||x - c_i|| - r_i``."""
    x = x0.copy()
    for _ in range(iters):
        diff = x - centers
        d = np.sqrt((diff**2).sum(axis=1)) + 1e-12
        jac = diff / d[:, None]
        step = np.linalg.lstsq(jac, d - ranges, rcond=None)[0]
        x -= step
        if step @ step < 1e-16:
            break
    return x if np.all(np.isfinite(x)) else x0


def localize(gateway_positions, bounds: DistanceBounds,
             params: LocalizationParams = LocalizationParams(), node: int | None = None) -> LocalizationEstimate:
    """Find a point in the intersection of the gateway disks.

    Projections start from a least-squares multilateration of the hop-based
    range guesses (or from the gateway centroid with ``init="centroid"``),
    so the feasible point returned sits near the bulk of the evidence
    instead of on the edge of the intersection closest to the centroid.
    """
    if len(bounds) < 3:
        raise InsufficientAnchorsError("need at least three gateway bounds")
    if np.any(bounds.upper <= 0):
        raise ParameterError("distance bounds must be positive")
    if params.init not in ("multilateration", "centroid"):
        raise ParameterError(f"unknown initialization {params.init!r}")
    centers = np.asarray(gateway_positions, dtype=np.float64)[bounds.gateway_index]
    b = bounds.squared
    x0 = centers.mean(axis=0)
    if params.init == "multilateration":
        x0 = _multilaterate(centers, bounds.range_guess(), x0, params.gn_iters)
    theta, _, iters = _kernels.project_disks(x0, centers, b, params.tolerance * 0.1, params.max_iter)
    theta = np.asarray(theta, dtype=np.float64)
    # strict lower bound: never sit exactly on a gateway
    d2 = ((centers - theta) ** 2).sum(axis=1)
    if np.any(d2 < params.epsilon):
        theta = theta + math.sqrt(params.epsilon)
        d2 = ((centers - theta) ** 2).sum(axis=1)
    viol = float(max(np.max(d2 - b), 0.0))
    return LocalizationEstimate(theta, viol <= params.tolerance, viol, int(iters), node)


def localize_nodes(gateway_positions, hop_rows: np.ndarray, neighbor_counts,
                   hop_length_model: HopLengthModel, radio_range: float = 1.0,
                   params: LocalizationParams = LocalizationParams(),
                   nodes=None) -> dict[int, LocalizationEstimate]:
    """Localize every column of ``hop_rows`` (gateways x nodes) that has three anchors.

    ``nodes`` restricts the work to a subset of columns. Columns with fewer
    than three known hops, or with a zero hop (the gateways themselves), are
    skipped.
    """
    hop_rows = np.asarray(hop_rows)
    cols = range(hop_rows.shape[1]) if nodes is None else nodes
    out = {}
    for n in cols:
        col = hop_rows[:, n]
        if np.any(col == 0):
            continue
        try:
            b = multihop_bounds(col, hop_length_model, float(neighbor_counts[n]), radio_range)
        except InsufficientAnchorsError:
            continue
        out[int(n)] = localize(gateway_positions, b, params, int(n))
    return out
