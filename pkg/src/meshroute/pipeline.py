"""The proposed routing protocol end to end on one network realization.

Order of operations: vicinity discovery, incomplete gateway discovery,
discrete-aware completion of the hop matrix, multihop localization, local
discovery around every target whose predicted hop count beats the known
route, and the final merge.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .completion import CompletionConfig, CompletionResult, complete_hop_matrix
from .discovery import (
    MISSING,
    HopMatrix,
    MessageLedger,
    build_hop_matrix,
    build_route_table,
    flood_message_count,
    incomplete_discovery,
)
from .localization import (
    HopLengthModel,
    LocalizationEstimate,
    LocalizationParams,
    localize_nodes,
    vicinity_discovery,
)
from .localroute import FinalRoutingState, FloodCache, finalize_routes, local_discovery, select_candidates
from .netmodel import MeshNetwork

__all__ = ["ProtocolConfig", "ProtocolResult", "run_protocol"]


@dataclass(frozen=True)
class ProtocolConfig:
    completion: CompletionConfig = field(default_factory=CompletionConfig)
    localization: LocalizationParams = field(default_factory=LocalizationParams)
    flood_budget: int = 1
    k_fallback: int = 3
    max_passes: int = 10
    # blocked links are temporary: by the time local discovery runs they are back
    link_recovery: bool = True
    random_delay: bool = False


@dataclass
class ProtocolResult:
    final: FinalRoutingState
    accepted: HopMatrix
    provisional: HopMatrix
    completion: CompletionResult | None
    estimates: dict[int, LocalizationEstimate]
    ledger: MessageLedger
    targets: list = field(default_factory=list)
    passes: int = 0

    @property
    def hop_matrix(self) -> HopMatrix:
        return self.final.hop_matrix

    @property
    def local_messages(self) -> int:
        return self.ledger.total("local")


def _predictions(accepted: HopMatrix, provisional: HopMatrix,
                 completion: CompletionResult | None) -> np.ndarray:
    """Hop hypotheses per cell; ``-inf`` where completion had nothing to say.

    Columns without a single accepted entry are left out of completion; any
    route there is worth probing, hence the ``-inf``.
    """
    pred = np.full(accepted.shape, -np.inf)
    if completion is not None:
        have = completion.rounded != MISSING
        pred[have] = completion.rounded[have]
    pred[accepted.omega] = accepted.hops[accepted.omega]
    return pred


def _targets(accepted: HopMatrix, provisional: HopMatrix, pred: np.ndarray, lost: np.ndarray):
    """(gateway row, node) pairs whose prediction beats the best known route.

    Only ``lost`` cells qualify: those that had a route in the last stable
    topology. A node that never heard from a gateway has nothing to recover.
    """
    need = lost & (pred < provisional.as_inf())
    rows, cols = np.nonzero(need)
    order = np.lexsort((rows, cols, pred[rows, cols]))
    return [(int(rows[k]), int(cols[k])) for k in order]


def _localization_rows(provisional: HopMatrix, pred: np.ndarray) -> np.ndarray:
    """Hop rows handed to localization: the completed matrix.

    Where completion had nothing to offer, the detour count stands in; it
    over-counts the true hops, so the resulting bound is loose but valid.
    """
    rows = np.where(np.isfinite(pred), pred, provisional.hops)
    return np.where(rows < 0, MISSING, rows).astype(np.int64)


def run_protocol(network: MeshNetwork, config: ProtocolConfig = ProtocolConfig(),
                 hop_model: HopLengthModel | None = None) -> ProtocolResult:
    hop_model = hop_model or HopLengthModel.default(network.radio_range)
    ledger = MessageLedger()

    counts = np.array([vicinity_discovery(network, n, ledger, config.random_delay).neighbor_count
                       for n in range(network.n_nodes)])

    accepted, provisional = incomplete_discovery(network)
    # each node remembers whether it had any route to a gateway when all links were up
    lost = ~accepted.omega & build_hop_matrix(network, use_observed=False).omega
    flood_message_count(network, network.gateways, use_observed=True,
                        phase="gateway_flood", ledger=ledger)
    routes = build_route_table(network, provisional, use_observed=True)

    completion = None
    if lost.any():
        completion = complete_hop_matrix(accepted, config.completion)
    pred = _predictions(accepted, provisional, completion)
    targets = _targets(accepted, provisional, pred, lost)

    estimates: dict[int, LocalizationEstimate] = {}
    if targets:
        estimates = localize_nodes(network.gateway_positions, _localization_rows(provisional, pred),
                                   counts, hop_model, network.radio_range, config.localization)

    known_positions = {n: est.theta_hat for n, est in estimates.items()}
    for g, p in zip(network.gateways, network.gateway_positions):
        known_positions[g] = p

    use_observed = not config.link_recovery
    state = finalize_routes(network, provisional, routes, (), use_observed, ledger,
                            completion.rounded if completion is not None else None)
    cache = FloodCache(network, config.flood_budget, use_observed, ledger)
    passes = 0
    # repeat while routes keep improving: a fixed relay can fix its neighbours
    while targets and passes < config.max_passes:
        passes += 1
        improved = False
        for gi, t in targets:
            if t not in known_positions:
                continue
            cur = state.hop_matrix.hops[gi, t]
            if cur != MISSING and pred[gi, t] >= cur:
                continue
            cs = select_candidates(network, known_positions[t], known_positions,
                                   state.hop_matrix, network.gateways[gi], t, config.k_fallback)
            found = local_discovery(network, cs, config.flood_budget, cache, use_observed)
            improved |= state.merge(found)
        if not improved:
            break
    state.validate(network, use_observed)
    return ProtocolResult(state, accepted, provisional, completion, estimates, ledger,
                          targets, passes)
