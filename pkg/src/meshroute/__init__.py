"""Mesh routing lab.

Route discovery in multihop mesh networks with missing links: incomplete
gateway discovery, hop-matrix completion, hop-count localization and
local route discovery, plus a Monte-Carlo harness comparing the result
against a full re-flood and the full-graph bound.
"""
from ._kernels import BACKEND_NAME
from .completion import CompletionConfig, CompletionResult, complete_hop_matrix, complete_svt_only
from .discovery import MISSING, HopMatrix, MessageLedger, RouteTable, build_hop_matrix, incomplete_discovery
from .errors import (
    ConsistencyError,
    InsufficientAnchorsError,
    MeshRouteError,
    NoAnchorError,
    NumericError,
    ParameterError,
)
from .harness import ScenarioConfig, run_realization, sweep_density, sweep_incompleteness
from .localization import HopLengthModel, LocalizationParams, calibrate_hop_length, localize
from .netmodel import MeshNetwork, Region, block_edges, generate_network, read_snapshot, write_snapshot
from .pipeline import ProtocolConfig, run_protocol

__version__ = "0.1.0"
