"""Monte-Carlo comparison of the proposed protocol, the re-flood baseline and the bound.

Three methods are scored on every realization:

``bound``
    BFS from the gateways over all links, blocked ones included.
``sota``
    A second BFS pass over the observed graph, which routes around the
    blocked links.
``proposed``
    :func:`meshroute.pipeline.run_protocol`.

Average hops are taken over the cells every method can route in that
realization, so all three averages describe the same gateway/node pairs;
each method's own unreachable rate is reported next to it.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .completion import CompletionConfig
from .discovery import build_hop_matrix, flood_message_count
from .errors import ConsistencyError, MeshRouteError, ParameterError
from .localization import HopLengthModel, LocalizationParams
from .netmodel import Region, block_edges, generate_network, nodes_for_density, region_for_density
from .pipeline import ProtocolConfig, run_protocol

__all__ = [
    "METHODS",
    "ScenarioConfig",
    "MethodMetrics",
    "RunMetrics",
    "SweepRow",
    "SweepResult",
    "run_realization",
    "run_many",
    "sweep_density",
    "sweep_incompleteness",
    "emit_results",
    "read_results",
]

log = logging.getLogger(__name__)

METHODS = ("bound", "sota", "proposed")
CSV_HEADER = ["density", "missing_fraction", "method", "mean_avg_hops", "std_avg_hops",
              "mean_messages", "unreachable_rate", "runs"]


@dataclass(frozen=True)
class ScenarioConfig:
    n_nodes: int = 100
    n_gateways: int = 10
    radio_range: float = 1.0
    density: float = 6.0
    # "region": keep N, size the square region; "nodes": keep region_side, scale N
    density_control: str = "region"
    region_side: float = 10.0
    missing_fraction: float = 0.1
    densities: tuple = (4.0, 6.0, 8.0, 10.0)
    missing_fractions: tuple = (0.1, 0.3)
    runs: int = 100
    base_seed: int = 0
    workers: int = 1
    methods: tuple = METHODS
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)

    def __post_init__(self):
        if self.runs < 1:
            raise ParameterError("runs must be at least 1")
        if not self.densities or not self.missing_fractions:
            raise ParameterError("sweep grids must be non-empty")
        if self.density_control not in ("region", "nodes"):
            raise ParameterError(f"unknown density control {self.density_control!r}")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ParameterError(f"unknown methods {sorted(unknown)}")
        for f in self.missing_fractions:
            if not 0.0 <= f <= 1.0:
                raise ParameterError(f"missing fraction {f} outside [0, 1]")

    def layout(self, density: float) -> tuple[int, Region]:
        """Node count and region realizing ``density`` under the chosen control."""
        if self.density_control == "region":
            return self.n_nodes, region_for_density(self.n_nodes, density, self.radio_range)
        region = Region.square(self.region_side)
        return nodes_for_density(region, density, self.radio_range), region

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "protocol"}
        p = self.protocol
        d["protocol"] = {
            "flood_budget": p.flood_budget,
            "k_fallback": p.k_fallback,
            "max_passes": p.max_passes,
            "link_recovery": p.link_recovery,
            "random_delay": p.random_delay,
            "completion": {k: v for k, v in asdict(p.completion).items() if k != "momentum"},
            "localization": asdict(p.localization),
        }
        for k in ("densities", "missing_fractions", "methods"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        proto = dict(d.pop("protocol", {}))
        comp = CompletionConfig(**proto.pop("completion", {}))
        loc = LocalizationParams(**proto.pop("localization", {}))
        for k in ("densities", "missing_fractions", "methods"):
            if k in d:
                d[k] = tuple(d[k])
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ParameterError(f"unknown config keys {sorted(extra)}")
        return cls(protocol=ProtocolConfig(completion=comp, localization=loc, **proto), **d)

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_file(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


@dataclass(frozen=True)
class MethodMetrics:
    avg_hops: float
    avg_hops_own: float
    unreachable: int
    messages: int


@dataclass(frozen=True)
class RunMetrics:
    seed: int
    density: float
    missing_fraction: float
    methods: dict
    cells: int
    completion_iterations: int = 0
    completion_converged: bool = True
    localization_error: float = float("nan")
    local_messages: int = 0
    reflood_messages: int = 0
    passes: int = 0


def _seeds(seed: int) -> tuple[int, int]:
    a, b = np.random.SeedSequence(seed).generate_state(2)
    return int(a), int(b)


def run_realization(config: ScenarioConfig, seed: int, density: float | None = None,
                    missing_fraction: float | None = None,
                    hop_model: HopLengthModel | None = None) -> RunMetrics:
    """One network, one blocking pattern, all methods on the same instance."""
    density = config.density if density is None else density
    missing = config.missing_fraction if missing_fraction is None else missing_fraction
    net_seed, block_seed = _seeds(seed)
    try:
        n, region = config.layout(density)
        net = generate_network(n, config.n_gateways, region, config.radio_range, net_seed)
        net = block_edges(net, missing, block_seed)

        hops = {}
        msgs = {}
        hops["bound"] = build_hop_matrix(net, use_observed=False)
        msgs["bound"] = flood_message_count(net, net.gateways, use_observed=False).total()

        first = flood_message_count(net, net.gateways, use_observed=True).total()
        hops["sota"] = build_hop_matrix(net, use_observed=True)
        msgs["sota"] = 2 * first

        res = None
        if "proposed" in config.methods:
            res = run_protocol(net, config.protocol, hop_model)
            hops["proposed"] = res.hop_matrix
            msgs["proposed"] = res.ledger.total()
    except MeshRouteError as exc:
        raise type(exc)(f"{exc} [seed={seed}, density={density}, missing={missing}]") from exc

    inf = {m: hops[m].as_inf() for m in hops}
    for m in hops:
        if np.any(inf["bound"] > inf[m]):
            raise ConsistencyError(f"{m} beats the full-graph bound [seed={seed}]")
    common = np.logical_and.reduce([np.isfinite(v) for v in inf.values()])
    out = {}
    for m in config.methods:
        v = inf[m]
        own = np.isfinite(v)
        out[m] = MethodMetrics(
            avg_hops=float(v[common].mean()) if common.any() else float("nan"),
            avg_hops_own=float(v[own].mean()) if own.any() else float("nan"),
            unreachable=int((~own).sum()),
            messages=int(msgs[m]),
        )

    extra = {}
    if res is not None:
        err = [math.dist(e.theta_hat, net.positions[k]) for k, e in res.estimates.items()]
        extra = dict(
            completion_iterations=res.completion.iterations_used if res.completion else 0,
            completion_converged=res.completion.converged if res.completion else True,
            localization_error=float(np.mean(err)) if err else float("nan"),
            local_messages=res.local_messages,
            passes=res.passes,
        )
    return RunMetrics(seed, float(density), float(missing), out, int(common.size),
                      reflood_messages=first, **extra)


def _task(args):
    config, seed, density, missing = args
    return run_realization(config, seed, density, missing)


def run_many(config: ScenarioConfig, density: float | None = None,
             missing_fraction: float | None = None) -> list[RunMetrics]:
    """``config.runs`` realizations with seeds ``base_seed + r``, in run order."""
    tasks = [(config, config.base_seed + r, density, missing_fraction) for r in range(config.runs)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            return list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * config.workers))))
    return [_task(t) for t in tasks]


@dataclass(frozen=True)
class SweepRow:
    density: float
    missing_fraction: float
    method: str
    mean_avg_hops: float
    std_avg_hops: float
    mean_messages: float
    unreachable_rate: float
    runs: int


@dataclass
class SweepResult:
    rows: list[SweepRow]
    runs: dict = field(default_factory=dict)

    def row(self, density: float, missing: float, method: str) -> SweepRow:
        for r in self.rows:
            if (math.isclose(r.density, density) and math.isclose(r.missing_fraction, missing)
                    and r.method == method):
                return r
        raise KeyError((density, missing, method))


def _aggregate(density, missing, runs: list[RunMetrics], methods) -> list[SweepRow]:
    rows = []
    for m in methods:
        hops = np.array([r.methods[m].avg_hops for r in runs])
        hops = hops[np.isfinite(hops)]
        rows.append(SweepRow(
            density=float(density),
            missing_fraction=float(missing),
            method=m,
            mean_avg_hops=float(hops.mean()) if hops.size else float("nan"),
            std_avg_hops=float(hops.std(ddof=1)) if hops.size > 1 else 0.0,
            mean_messages=float(np.mean([r.methods[m].messages for r in runs])),
            unreachable_rate=float(np.mean([r.methods[m].unreachable / r.cells for r in runs])),
            runs=len(runs),
        ))
    return rows


def _sweep(config: ScenarioConfig, densities, fractions) -> SweepResult:
    result = SweepResult([])
    for d in densities:
        for f in fractions:
            log.info("grid point density=%s missing=%s (%d runs)", d, f, config.runs)
            runs = run_many(config, d, f)
            result.runs[(float(d), float(f))] = runs
            result.rows.extend(_aggregate(d, f, runs, config.methods))
    return result


def sweep_density(config: ScenarioConfig) -> SweepResult:
    """Every density in ``config.densities`` crossed with every missing fraction."""
    return _sweep(config, config.densities, config.missing_fractions)


def sweep_incompleteness(config: ScenarioConfig) -> SweepResult:
    """Missing fractions at the single density ``config.density``."""
    return _sweep(config, [config.density], config.missing_fractions)


def emit_results(table, output_path, fmt: str = "csv", plot_data: bool = False,
                 x_axis: str = "density") -> list[Path]:
    """Write the sweep table; optionally one whitespace-separated file per curve.

    Plot-data files are named ``<stem>_<method>_<series>.dat`` and hold
    ``x mean std`` lines, where ``x`` is ``x_axis`` and the series is the
    other grid coordinate.
    """
    rows = table.rows if isinstance(table, SweepResult) else list(table)
    if not rows:
        raise ParameterError("nothing to emit: empty table")
    if fmt != "csv":
        raise ParameterError(f"unsupported format {fmt!r}")
    if x_axis not in ("density", "missing_fraction"):
        raise ParameterError(f"unknown x axis {x_axis!r}")
    path = Path(output_path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([repr(r.density), repr(r.missing_fraction), r.method, repr(r.mean_avg_hops),
                        repr(r.std_avg_hops), repr(r.mean_messages), repr(r.unreachable_rate), r.runs])
    written = [path]
    if plot_data:
        other = "missing_fraction" if x_axis == "density" else "density"
        curves = defaultdict(list)
        for r in rows:
            curves[(r.method, getattr(r, other))].append(r)
        for (method, series), pts in sorted(curves.items()):
            p = path.with_name(f"{path.stem}_{method}_{other}{series:g}.dat")
            with p.open("w") as fh:
                fh.write(f"# {x_axis} mean_avg_hops std_avg_hops\n")
                for r in sorted(pts, key=lambda r: getattr(r, x_axis)):
                    fh.write(f"{getattr(r, x_axis):g} {r.mean_avg_hops:.6f} {r.std_avg_hops:.6f}\n")
            written.append(p)
    return written


def read_results(path) -> list[SweepRow]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ParameterError("unexpected results header")
        return [SweepRow(float(r["density"]), float(r["missing_fraction"]), r["method"],
                         float(r["mean_avg_hops"]), float(r["std_avg_hops"]),
                         float(r["mean_messages"]), float(r["unreachable_rate"]), int(r["runs"]))
                for r in reader]


def with_overrides(config: ScenarioConfig, **kw) -> ScenarioConfig:
    """``dataclasses.replace`` that ignores ``None`` values (CLI plumbing)."""
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
