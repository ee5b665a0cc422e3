"""Scenario engine: sampling, mobility, integration, failures and the per-step loop."""
from __future__ import annotations

import logging
import math
import time
import zlib
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .association import ClusterSet, LloydKMeans, Matching, coverage_proportion, match_msds
from .config import GmmComponent, ScenarioConfig
from .controller import ControlInput, control_input
from .graph import CONNECTIVITY_TOL, build_graph, epidemic_bound, fiedler_value, laplacian
from .state import MapState, MsdState

log = logging.getLogger(__name__)

STREAMS = ("msd-init", "map-init", "mobility", "failure", "clustering")

# order of the stages inside one step; reported through the ``trace`` hook
STAGES = ("mobility", "clustering", "matching", "graph", "control", "integrate", "failure", "metrics")


class SimulationFault(RuntimeError):
    pass


def make_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent generators per concern, all derived from one master seed."""
    return {
        name: np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(zlib.crc32(name.encode()),)))
        for name in STREAMS
    }


@dataclass(frozen=True)
class MetricsRecord:
    t: float
    coverage: float
    fiedler: float
    connected: bool
    mean_epidemic_bound: float
    max_u_norm: float
    active_maps: int


def sample_msds(gmm: tuple[GmmComponent, ...], m: int, rng: np.random.Generator) -> MsdState:
    weights = np.array([c.weight for c in gmm], dtype=float)
    means = np.array([c.mean for c in gmm], dtype=float)
    try:
        chol = np.array([np.linalg.cholesky(np.asarray(c.cov, dtype=float)) for c in gmm])
    except np.linalg.LinAlgError:
        from .config import ConfigError
        raise ConfigError("covariance is not positive definite", ("gmm",)) from None
    if m == 0:
        return MsdState(np.zeros((0, 2)))
    comp = rng.choice(len(gmm), size=m, p=weights / weights.sum())
    z = rng.standard_normal((m, 2))
    y = means[comp] + np.einsum("nij,nj->ni", chol[comp], z)
    return MsdState(y)


def init_maps(config: ScenarioConfig, msds: MsdState, rng: np.random.Generator) -> MapState:
    if config.map_init_region == "auto":
        lo = msds.y.min(axis=0) - config.r
        hi = msds.y.max(axis=0) + config.r
    else:
        xmin, xmax, ymin, ymax = config.map_init_region
        lo, hi = np.array([xmin, ymin]), np.array([xmax, ymax])
    q = rng.uniform(lo, hi, size=(config.l, 2))
    vlo, vhi = config.map_init_velocity_box
    p = rng.uniform(vlo, vhi, size=(config.l, 2))
    return MapState(q, p, np.ones(config.l, dtype=bool))


def mobility_step(msds: MsdState, s: float, rng: np.random.Generator) -> MsdState:
    """Random walk: y <- y + s * U([-1, 1]^2), drawn fresh per MSD."""
    xi = rng.uniform(-1.0, 1.0, size=msds.y.shape)
    return MsdState(msds.y + s * xi)


def integrate_step(state: MapState, u: ControlInput, delta: float) -> MapState:
    """Semi-implicit Euler: velocity first, then position with the new velocity."""
    ids = state.active_ids
    acc = np.asarray(u.u, dtype=float)
    if not np.all(np.isfinite(acc[ids])):
        bad = ids[~np.all(np.isfinite(acc[ids]), axis=1)]
        raise SimulationFault(f"non-finite control input for MAPs {bad.tolist()}")
    p = state.p.copy()
    q = state.q.copy()
    p[ids] += delta * acc[ids]
    q[ids] += delta * p[ids]
    return state.replace(q=q, p=p)


def apply_failure(state: MapState, fraction: float, rng: np.random.Generator) -> MapState:
    """Deactivate floor(fraction * active) MAPs drawn uniformly without replacement."""
    if not 0 <= fraction <= 1:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    ids = state.active_ids
    n_fail = int(math.floor(fraction * len(ids) + 1e-9))
    if n_fail == 0:
        return state
    failed = rng.choice(ids, size=n_fail, replace=False)
    active = state.active.copy()
    active[failed] = False
    return state.replace(active=active)


@dataclass(frozen=True)
class StepView:
    """Everything observed at the end of a step (or at t = 0)."""

    t: float
    msds: MsdState
    maps: MapState
    matching: Matching
    centers: ClusterSet


class Sink(Protocol):
    def record(self, rec: MetricsRecord) -> None: ...

    def snapshot(self, view: StepView) -> None: ...

    def close(self) -> None: ...


def observe(config: ScenarioConfig, msds: MsdState, maps: MapState):
    """Matching over the active MAPs and the metrics that go with it."""
    ids = maps.active_ids
    q = maps.q[ids]
    matching = match_msds(msds.y, q, config.r, config.n_max)
    graph = build_graph(q, config.kernel, ids)
    lam2 = fiedler_value(laplacian(graph))
    bounds = epidemic_bound(graph.degrees, config.tau)
    coverage = coverage_proportion(matching, msds.m)
    return matching, graph, coverage, lam2, float(bounds.mean()) if len(bounds) else 0.0


@dataclass
class RunSummary:
    steps: int
    final: MetricsRecord | None
    converged: bool
    wall_time: float


class Scenario:
    """Stateful driver for one scenario run.

    ``reset`` samples the initial state; each ``step`` executes one pass of the
    loop mobility -> clustering -> matching -> graph -> control -> integrate ->
    failure -> metrics and returns the :class:`MetricsRecord`.
    """

    def __init__(self, config: ScenarioConfig, trace: Callable[[str, int], None] | None = None):
        self.config = config
        self.trace = trace
        self.reset()

    def reset(self):
        cfg = self.config
        self.rng = make_streams(cfg.seed)
        self.msds = sample_msds(cfg.gmm, cfg.m, self.rng["msd-init"])
        self.maps = init_maps(cfg, self.msds, self.rng["map-init"])
        self.clusterer = LloydKMeans(n_clusters=cfg.k, max_iter=cfg.lloyd_max_iter, tol=cfg.lloyd_tol,
                                     warm_start=True, random_state=self.rng["clustering"])
        self.clusterer.fit(self.msds.y)
        self.step_index = 0
        self.pending_failures = sorted(cfg.failures, key=lambda ev: ev.time)
        matching, *_ = observe(cfg, self.msds, self.maps)
        self.view = StepView(0.0, self.msds, self.maps, matching, self.clusterer.cluster_set())
        return self

    def time_at(self, n: int) -> float:
        return n * self.config.ts

    def failure_due(self) -> bool:
        t_next = self.time_at(self.step_index + 1)
        return bool(self.pending_failures) and self.pending_failures[0].time <= t_next + 1e-12

    def _stage(self, name: str):
        if self.trace is not None:
            self.trace(name, self.step_index)

    def step(self) -> MetricsRecord:
        cfg = self.config
        n = self.step_index + 1
        t = self.time_at(n)

        self._stage("mobility")
        self.msds = mobility_step(self.msds, cfg.s, self.rng["mobility"])

        self._stage("clustering")
        self.clusterer.fit(self.msds.y)
        centers = self.clusterer.cluster_set()

        self._stage("matching")
        ids = self.maps.active_ids
        q = self.maps.q[ids]
        matching = match_msds(self.msds.y, q, cfg.r, cfg.n_max)

        self._stage("graph")
        graph = build_graph(q, cfg.kernel, ids)

        self._stage("control")
        u = control_input(self.maps, graph, matching, centers, cfg.control)

        self._stage("integrate")
        self.maps = integrate_step(self.maps, u, cfg.delta)

        self._stage("failure")
        while self.pending_failures and self.pending_failures[0].time <= t + 1e-12:
            ev = self.pending_failures.pop(0)
            before = len(self.maps.active_ids)
            self.maps = apply_failure(self.maps, ev.fraction, self.rng["failure"])
            log.info("t=%.2f: failure of %d of %d active MAPs", t, before - len(self.maps.active_ids), before)

        self._stage("metrics")
        obs_matching, _, coverage, lam2, mean_bound = observe(cfg, self.msds, self.maps)
        rec = MetricsRecord(
            t=t,
            coverage=coverage,
            fiedler=lam2,
            connected=lam2 > CONNECTIVITY_TOL,
            mean_epidemic_bound=mean_bound,
            max_u_norm=u.max_norm,
            active_maps=int(self.maps.active.sum()),
        )
        if not all(math.isfinite(v) for v in (rec.coverage, rec.fiedler, rec.mean_epidemic_bound, rec.max_u_norm)):
            raise SimulationFault(f"non-finite metrics at t={t}: {rec}")
        self.view = StepView(t, self.msds, self.maps, obs_matching, centers)
        self.step_index = n
        return rec


def run_scenario(config: ScenarioConfig, sinks=(), snapshot_every: float | None = 1.0,
                 trace: Callable[[str, int], None] | None = None) -> RunSummary:
    """Run ``config`` to its horizon, emitting records and snapshots to ``sinks``.

    Snapshots are taken at t = 0, every ``snapshot_every`` seconds (``None``
    disables the cadence), and right before and after each failure event.
    Sinks are closed even when the run aborts.
    """
    start = time.perf_counter()
    sc = Scenario(config, trace=trace)
    n_steps = config.n_steps
    every = None
    if snapshot_every is not None and snapshot_every > 0:
        every = max(1, int(round(snapshot_every / config.ts)))
    last_snap = -1
    final = None

    def snap(step_no: int):
        nonlocal last_snap
        if step_no != last_snap:
            for s in sinks:
                s.snapshot(sc.view)
            last_snap = step_no

    try:
        snap(0)
        for n in range(1, n_steps + 1):
            failing = sc.failure_due()
            if failing:
                snap(n - 1)
            final = sc.step()
            for s in sinks:
                s.record(final)
            if failing or (every is not None and n % every == 0):
                snap(n)
    finally:
        for s in sinks:
            s.close()

    converged = final is not None and final.max_u_norm < config.convergence_tol
    return RunSummary(steps=n_steps, final=final, converged=converged, wall_time=time.perf_counter() - start)


def simulate(config: ScenarioConfig) -> list[MetricsRecord]:
    """Run without output sinks and return every metrics record."""
    sc = Scenario(config)
    return [sc.step() for _ in range(config.n_steps)]
