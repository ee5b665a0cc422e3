"""MAP adjacency structures and connectivity metrics."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelParams, bump, sigma_norm

CONNECTIVITY_TOL = 1e-9


@dataclass(frozen=True)
class GraphView:
    smooth_adjacency: np.ndarray
    binary_adjacency: np.ndarray
    degrees: np.ndarray
    active_index_map: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.active_index_map is None:
            object.__setattr__(self, "active_index_map", np.arange(len(self.degrees)))
        for arr in (self.smooth_adjacency, self.binary_adjacency, self.degrees, self.active_index_map):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.degrees)

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.binary_adjacency[i])


@dataclass(frozen=True)
class ConnectivityMetrics:
    fiedler: float
    connected: bool
    epidemic_bounds: np.ndarray
    coverage: float


def graph_from_adjacency(smooth, active_index_map=None) -> GraphView:
    smooth = np.array(smooth, dtype=float)
    np.fill_diagonal(smooth, 0.0)
    binary = (smooth > 0).astype(np.int64)
    return GraphView(smooth, binary, binary.sum(axis=1), active_index_map)


def build_graph(positions, params: KernelParams, active_index_map=None) -> GraphView:
    """Smooth adjacency a_ij = bump(|q_i - q_j|_sigma / |r|_sigma; gamma, 1), zero diagonal."""
    q = np.asarray(positions, dtype=float).reshape(-1, 2)
    diff = q[None, :, :] - q[:, None, :]
    z = sigma_norm(diff, params.epsilon) / params.r_sigma
    smooth = np.asarray(bump(z, params.gamma, 1.0), dtype=float).reshape(len(q), len(q))
    return graph_from_adjacency(smooth, active_index_map)


def laplacian(g: GraphView) -> np.ndarray:
    """Combinatorial Laplacian D - A of the binary graph."""
    a = g.binary_adjacency.astype(float)
    return np.diag(a.sum(axis=1)) - a


def fiedler_value(lap, tol: float = 1e-9) -> float:
    """Second-smallest eigenvalue of a symmetric Laplacian (0 for n < 2)."""
    lap = np.asarray(lap, dtype=float)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {lap.shape}")
    if lap.shape[0] < 2:
        return 0.0
    if not np.allclose(lap, lap.T, rtol=0.0, atol=tol):
        raise ValueError("laplacian must be symmetric")
    lam2 = float(np.linalg.eigvalsh(lap)[1])
    if -tol <= lam2 < 0:
        lam2 = 0.0
    return lam2


def is_connected(g: GraphView) -> bool:
    """Breadth-first reachability from node 0 over the binary adjacency."""
    n = g.n
    if n <= 1:
        return True
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in g.neighbors(i):
            if not seen[j]:
                seen[j] = True
                queue.append(j)
    return bool(seen.all())


def epidemic_bound(degrees, tau: float) -> np.ndarray:
    """Per-node upper bound 1 - 1/(1 + tau*d) on the steady-state informed probability."""
    if not tau > 0:
        raise ValueError("tau must be > 0")
    deg = np.asarray(degrees, dtype=float)
    return 1.0 - 1.0 / (1.0 + tau * deg)


def connectivity_metrics(g: GraphView, tau: float, coverage: float) -> ConnectivityMetrics:
    lam2 = fiedler_value(laplacian(g))
    return ConnectivityMetrics(
        fiedler=lam2,
        connected=lam2 > CONNECTIVITY_TOL,
        epidemic_bounds=epidemic_bound(g.degrees, tau),
        coverage=coverage,
    )
