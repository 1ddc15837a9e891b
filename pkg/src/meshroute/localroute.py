"""Local route discovery around a target's estimated position.

Completion predictions are only hypotheses. A predicted improvement is
turned into a route by letting nearby relays flood a small neighbourhood;
only paths that such a flood (or the initial discovery) actually walked
enter the final table.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .discovery import MISSING, HopMatrix, MessageLedger, RouteTable, validate_path
from .errors import ConsistencyError, NoAnchorError, ParameterError
from .netmodel import MeshNetwork

__all__ = [
    "CandidateSet",
    "FloodCache",
    "LocalDiscovery",
    "FinalRoutingState",
    "select_candidates",
    "local_discovery",
    "finalize_routes",
]


@dataclass(frozen=True)
class CandidateSet:
    target: int
    gateway: int
    candidates: tuple[int, ...]
    ordering_key: tuple[int, ...]
    fallback: bool = False


def select_candidates(network: MeshNetwork, target_estimate, known_positions: dict,
                      hop_matrix: HopMatrix, gateway: int, target: int,
                      k_fallback: int = 3) -> CandidateSet:
    """Relays within radio range of ``target_estimate`` that ``gateway`` can already reach.

    ``known_positions`` maps node id to a position (exact for gateways,
    estimated otherwise); the network is consulted for its radio range and
    node count only. When nobody qualifies, the ``k_fallback`` reachable
    nodes closest to the estimate are returned with ``fallback`` set.
    """
    if gateway not in hop_matrix.gateways:
        raise ParameterError(f"{gateway} is not a gateway of this hop matrix")
    row = hop_matrix.hops[hop_matrix.gateways.index(gateway)]
    known = row != MISSING
    if not known.any():
        raise NoAnchorError(f"gateway {gateway} has no known routes")
    est = np.asarray(target_estimate, dtype=np.float64)
    ids, dists = [], []
    for n, p in known_positions.items():
        if n == target or not known[n]:
            continue
        ids.append(n)
        dists.append(math.dist(est, p))
    ids = np.asarray(ids, dtype=np.int64)
    dists = np.asarray(dists)
    inside = dists <= network.radio_range
    fallback = not inside.any()
    if fallback:
        chosen = ids[np.argsort(dists, kind="stable")[:k_fallback]]
    else:
        chosen = ids[inside]
    keyed = sorted((int(row[n]), int(n)) for n in chosen)
    return CandidateSet(target, gateway, tuple(n for _, n in keyed),
                        tuple(k for k, _ in keyed), fallback)


class FloodCache:
    """Bounded floods already performed in one realization.

    A relay that has flooded its neighbourhood keeps the result, so a later
    query reuses it without new messages.
    """

    def __init__(self, network: MeshNetwork, budget: int = 1, use_observed: bool = False,
                 ledger: MessageLedger | None = None, phase: str = "local"):
        if budget < 1:
            raise ParameterError("flood budget must be at least one hop")
        self.network = network
        self.budget = budget
        self.use_observed = use_observed
        self.ledger = MessageLedger() if ledger is None else ledger
        self.phase = phase
        self._floods: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def flood(self, node: int) -> tuple[np.ndarray, np.ndarray]:
        if node not in self._floods:
            indptr, indices = self.network.csr(self.use_observed)
            dist, parent = _kernels.bfs_multi(indptr, indices, np.array([node], dtype=np.int32),
                                              self.budget)
            dist, parent = dist[0], parent[0]
            # nodes at the flood horizon receive but do not rebroadcast
            for v in np.flatnonzero((dist >= 0) & (dist < self.budget)).tolist():
                self.ledger.add(self.phase, v)
            self._floods[node] = (dist, parent)
        return self._floods[node]

    @property
    def flooded(self) -> set[int]:
        return set(self._floods)

    def messages(self) -> int:
        return self.ledger.total(self.phase)


@dataclass
class LocalDiscovery:
    target: int
    gateway: int
    paths: dict = field(default_factory=dict)
    hops: int | None = None
    via: int | None = None

    @property
    def found(self) -> bool:
        return self.hops is not None


def local_discovery(network: MeshNetwork, candidate_set: CandidateSet, budget: int = 1,
                    cache: FloodCache | None = None, use_observed: bool = False) -> LocalDiscovery:
    """Flood from candidates in order until no remaining candidate can do better.

    ``paths`` maps each flooding candidate that reached the target to its
    local path ``[c, ..., target]``; ``hops`` is the best
    ``key(c) + len(local path)`` seen, i.e. the gateway-to-target hop count
    through the best relay.
    """
    if cache is None:
        cache = FloodCache(network, budget, use_observed)
    t = candidate_set.target
    out = LocalDiscovery(t, candidate_set.gateway)
    best = math.inf
    for c, key in zip(candidate_set.candidates, candidate_set.ordering_key):
        if key + 1 >= best:
            break
        dist, parent = cache.flood(c)
        if dist[t] < 0:
            continue
        path = [t]
        while path[-1] != c:
            path.append(int(parent[path[-1]]))
        out.paths[c] = path[::-1]
        if key + dist[t] < best:
            best = key + int(dist[t])
            out.hops, out.via = best, c
    return out


@dataclass
class FinalRoutingState:
    hop_matrix: HopMatrix
    route_table: RouteTable
    ledger: MessageLedger
    source: dict = field(default_factory=dict)
    predicted: np.ndarray | None = None

    def verified_flags(self) -> dict:
        return {k: v is not None for k, v in self.source.items()}

    def merge(self, discovery: LocalDiscovery) -> bool:
        """Adopt ``discovery`` if it beats the current entry; True when adopted."""
        if not discovery.found:
            return False
        hm = self.hop_matrix
        gi = hm.gateways.index(discovery.gateway)
        relay_route = self.route_table.path(discovery.gateway, discovery.via)
        if relay_route is None:
            raise ConsistencyError(
                f"relay {discovery.via} has no route from gateway {discovery.gateway}")
        path = relay_route + discovery.paths[discovery.via][1:]
        if len(path) - 1 != discovery.hops:
            raise ConsistencyError("discovered hop count disagrees with its path")
        cur = hm.hops[gi, discovery.target]
        if cur != MISSING and discovery.hops >= cur:
            return False
        hm.hops[gi, discovery.target] = discovery.hops
        key = (discovery.gateway, discovery.target)
        self.route_table.paths[key] = path
        self.source[key] = "local"
        return True

    def validate(self, network: MeshNetwork, use_observed: bool = False) -> None:
        """Check every route edge by edge; raises :class:`ConsistencyError`."""
        hm = self.hop_matrix
        for (g, n), p in self.route_table.paths.items():
            gi = hm.gateways.index(g)
            if p is None:
                if hm.hops[gi, n] != MISSING:
                    raise ConsistencyError(f"hop entry {g}->{n} has no route")
                continue
            if p[0] != g or p[-1] != n or len(p) - 1 != hm.hops[gi, n]:
                raise ConsistencyError(f"route {g}->{n} does not match its hop entry")
            # initial routes only use observed links; local ones may use recovered links
            observed_only = use_observed or self.source[(g, n)] == "initial"
            if not validate_path(network, p, use_observed=observed_only):
                raise ConsistencyError(f"route {g}->{n} uses a link that does not exist")


def finalize_routes(network: MeshNetwork, known: HopMatrix, known_routes: RouteTable,
                    discoveries=(), use_observed: bool = False,
                    ledger: MessageLedger | None = None,
                    predicted: np.ndarray | None = None) -> FinalRoutingState:
    """Merge local discoveries into the routes walked by the initial discovery.

    A discovery replaces an entry only when its route (relay route plus
    local path) is shorter; unconfirmed predictions leave the initial entry
    (or ``MISSING``) in place. ``predicted`` is kept for auditing only.
    Every emitted route is checked edge by edge.
    """
    table = RouteTable(known.gateways, network.n_nodes, dict(known_routes.paths))
    state = FinalRoutingState(
        known.copy(), table, ledger if ledger is not None else MessageLedger(),
        {k: ("initial" if p is not None else None) for k, p in table.paths.items()},
        predicted,
    )
    for d in discoveries:
        state.merge(d)
    state.validate(network, use_observed)
    return state
