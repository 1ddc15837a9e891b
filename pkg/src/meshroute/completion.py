r"""Discrete-aware completion of incomplete hop matrices.

The solver is an accelerated proximal-gradient loop for

.. math::

    \min_H \; \lambda \|H\|_* + \zeta \sum_{a \in S} \|\mathrm{vec}_{\bar\Omega}(H) - a\mathbf{1}\|_1
    \quad \text{s.t. } P_\Omega(H) = P_\Omega(O)

where the data constraint is re-imposed by projection on every iteration
and ``S = {1, ..., max(H) + 1}`` is the hop alphabet.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .discovery import MISSING, HopMatrix
from .errors import NumericError, ParameterError

__all__ = [
    "Alphabet",
    "CompletionConfig",
    "CompletionResult",
    "mask_project",
    "build_alphabet",
    "prox_discrete",
    "svt",
    "nuclear_norm",
    "discrete_penalty",
    "objective",
    "round_to_alphabet",
    "complete_hop_matrix",
    "complete_svt_only",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Alphabet:
    values: tuple[int, ...]

    def __post_init__(self):
        if not self.values:
            raise ParameterError("empty alphabet")
        if list(self.values) != sorted(set(self.values)):
            raise ParameterError("alphabet must be sorted and distinct")

    @classmethod
    def up_to(cls, top: int) -> "Alphabet":
        return cls(tuple(range(1, top + 1)))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def __contains__(self, v):
        return v in self.values

    def __len__(self):
        return len(self.values)


def fista_momentum(t: int) -> float:
    return (t - 1) / (t + 2)


@dataclass(frozen=True)
class CompletionConfig:
    """Solver settings; ``lambda_nn`` is the nuclear-norm weight (not a density)."""

    lambda_nn: float = 1.0
    zeta: float = 0.02
    p_norm: int = 1
    max_iters: int = 500
    tolerance: float = 1e-6
    momentum: Callable[[int], float] = fista_momentum
    track_objective: bool = False

    def __post_init__(self):
        if self.p_norm != 1:
            raise ParameterError("only p = 1 is supported for the discrete regularizer")
        if self.lambda_nn < 0 or self.zeta < 0:
            raise ParameterError("regularizer weights must be nonnegative")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be positive")
        if not self.tolerance > 0:
            raise ParameterError("tolerance must be positive")


@dataclass
class CompletionResult:
    completed: np.ndarray
    rounded: np.ndarray
    alphabet: Alphabet
    iterations_used: int
    converged: bool
    final_change: float
    unreachable: np.ndarray
    objective_history: list = field(default_factory=list)

    def predicted(self, g: int, n: int) -> int | None:
        v = int(self.rounded[g, n])
        return None if v == MISSING else v


def mask_project(matrix, omega) -> np.ndarray:
    """Keep entries where ``omega`` is true, zero the rest."""
    m = np.asarray(matrix, dtype=np.float64)
    return np.where(np.asarray(omega, dtype=bool), m, 0.0)


def build_alphabet(hop_matrix: HopMatrix | np.ndarray) -> Alphabet:
    """``{1, ..., max observed hop + 1}``; gateway self-zeros only lower the max."""
    hops = hop_matrix.hops if isinstance(hop_matrix, HopMatrix) else np.asarray(hop_matrix)
    seen = hops[hops != MISSING]
    if seen.size == 0:
        raise ParameterError("hop matrix has no observed entries")
    return Alphabet.up_to(int(seen.max()) + 1)


def prox_discrete(value, zeta: float, alphabet: Alphabet | np.ndarray):
    """Proximal map of ``zeta * sum_a |x - a|``; scalar in, scalar out."""
    if zeta < 0:
        raise ParameterError("zeta must be nonnegative")
    a = alphabet.as_array() if isinstance(alphabet, Alphabet) else np.asarray(alphabet, dtype=np.float64)
    arr = np.asarray(value, dtype=np.float64)
    out = _kernels.prox_discrete(arr.reshape(-1), float(zeta), a).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def svt(matrix, threshold: float) -> np.ndarray:
    """Soft-threshold the singular values of ``matrix`` by ``threshold``."""
    if threshold < 0:
        raise ParameterError("threshold must be nonnegative")
    m = np.asarray(matrix, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise NumericError("SVT input contains non-finite values")
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(str(exc)) from exc
    s = np.maximum(s - threshold, 0.0)
    return (u * s) @ vt


def nuclear_norm(matrix) -> float:
    return float(np.linalg.svd(np.asarray(matrix, dtype=np.float64), compute_uv=False).sum())


def discrete_penalty(matrix, omega, alphabet: Alphabet) -> float:
    x = np.asarray(matrix, dtype=np.float64)[~np.asarray(omega, dtype=bool)]
    return float(np.abs(x[:, None] - alphabet.as_array()[None, :]).sum())


def objective(matrix, observed, omega, alphabet: Alphabet, lambda_nn: float, zeta: float) -> float:
    resid = mask_project(np.asarray(matrix) - np.asarray(observed), omega)
    return (float((resid**2).sum()) + lambda_nn * nuclear_norm(matrix)
            + zeta * discrete_penalty(matrix, omega, alphabet))


def round_to_alphabet(values, alphabet: Alphabet) -> np.ndarray:
    """Nearest alphabet element, exact halves going to the smaller one."""
    a = alphabet.as_array()
    x = np.clip(np.asarray(values, dtype=np.float64), a[0], a[-1])
    # S is a run of consecutive integers
    return np.ceil(x - 0.5).astype(np.int64)


def _split(hop_matrix):
    if isinstance(hop_matrix, HopMatrix):
        hops = hop_matrix.hops
    else:
        hops = np.asarray(hop_matrix, dtype=np.int64)
    omega = hops != MISSING
    return hops, omega


def complete_hop_matrix(hop_matrix: HopMatrix | np.ndarray,
                        config: CompletionConfig = CompletionConfig(),
                        alphabet: Alphabet | None = None) -> CompletionResult:
    """Fill the missing cells of ``hop_matrix`` with alphabet-valued predictions.

    Columns without any observed entry carry no information and are left
    out; they come back as ``MISSING`` with ``unreachable`` set.
    """
    hops, omega_full = _split(hop_matrix)
    if not omega_full.any():
        raise ParameterError("cannot complete a matrix with no observed entries")
    alphabet = alphabet or build_alphabet(hops)
    if np.any(~omega_full.any(axis=1)):
        warnings.warn("some gateway rows have no observed entries", RuntimeWarning, stacklevel=2)

    unreachable = ~omega_full.any(axis=0)
    cols = ~unreachable
    omega = omega_full[:, cols]
    obs = np.where(omega, hops[:, cols], 0).astype(np.float64)
    missing = ~omega
    a = alphabet.as_array()

    history = []
    if not missing.any():
        h = obs
        iters, converged, change = 1, True, 0.0
    else:
        h1 = obs.copy()
        h2 = obs.copy()
        converged = False
        change = np.inf
        iters = 0
        for t in range(1, config.max_iters + 1):
            iters = t
            gamma = config.momentum(t)
            y = h1 + gamma * (h1 - h2)
            z = y.copy()
            z[missing] = _kernels.prox_discrete(y[missing], config.zeta, a)
            hn = svt(np.where(omega, obs, z), config.lambda_nn)
            change = float(np.linalg.norm(hn - h1) / max(np.linalg.norm(h1), 1e-12))
            h2, h1 = h1, hn
            if config.track_objective:
                history.append(objective(np.where(omega, obs, hn), obs, omega, alphabet,
                                         config.lambda_nn, config.zeta))
            if change < config.tolerance:
                converged = True
                break
        h = np.where(omega, obs, h1)
        if not converged:
            log.debug("completion stopped after %d iterations (change %.3g)", iters, change)

    completed = np.full(hops.shape, np.nan)
    completed[:, cols] = h
    rounded = np.full(hops.shape, MISSING, dtype=np.int64)
    sub = np.where(omega, hops[:, cols], round_to_alphabet(h, alphabet))
    rounded[:, cols] = sub
    return CompletionResult(completed, rounded, alphabet, iters, converged, change,
                            unreachable, history)


def complete_svt_only(hop_matrix: HopMatrix | np.ndarray, lambda_nn: float = 1.0,
                      max_iters: int = 500, tolerance: float = 1e-6,
                      alphabet: Alphabet | None = None) -> CompletionResult:
    """Same loop without the discrete regularizer (baseline for comparisons)."""
    cfg = CompletionConfig(lambda_nn=lambda_nn, zeta=0.0, max_iters=max_iters, tolerance=tolerance)
    return complete_hop_matrix(hop_matrix, cfg, alphabet)
