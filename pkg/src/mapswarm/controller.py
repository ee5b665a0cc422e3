"""Distributed control law for the MAPs.

Each active MAP accelerates according to three local terms: a gradient term
(pairwise spacing plus attraction toward overloaded neighbours), velocity
consensus with its neighbours, and tracking of the nearest MSD cluster
center while coming to rest.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .association import ClusterSet, Matching
from .graph import GraphView
from .kernels import KernelParams, bump, psi, sigma_gradient, sigma_norm
from .state import MapState


@dataclass(frozen=True)
class ControlParams:
    kernel: KernelParams
    c1: float = 0.2
    c2: float = 0.1
    n_max: int = 80

    def __post_init__(self):
        if not self.c1 > 0:
            raise ValueError("c1 must be > 0")
        if not self.c2 > 0:
            raise ValueError("c2 must be > 0")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError("n_max must be a positive integer")


@dataclass(frozen=True)
class ControlInput:
    u: np.ndarray  # (L, 2), zero rows for inactive MAPs
    max_norm: float


def capacity_attraction(aspirants, params: ControlParams):
    """a * (1 - bump(|(N_u - N_max)^+|_sigma / |N_max|_sigma; 0, 1)), in [0, a)."""
    eps = params.kernel.epsilon
    excess = np.maximum(np.asarray(aspirants, dtype=float) - params.n_max, 0.0)
    ratio = sigma_norm(excess, eps, axis=None) / sigma_norm(float(params.n_max), eps)
    return params.kernel.a * (1.0 - np.asarray(bump(ratio, 0.0, 1.0)))


def gradient_term(i, positions, graph: GraphView, aspirants_per_map, params: ControlParams) -> np.ndarray:
    """Spacing and load-sharing force on MAP ``i`` (row index into ``positions``)."""
    q = np.asarray(positions, dtype=float)
    kp = params.kernel
    out = np.zeros(2)
    for j in graph.neighbors(i):
        diff = q[j] - q[i]
        weight = psi(sigma_norm(diff, kp.epsilon), kp) + capacity_attraction(aspirants_per_map[j], params)
        out += weight * sigma_gradient(diff, kp.epsilon)
    return out


def velocity_consensus(i, velocities, graph: GraphView) -> np.ndarray:
    p = np.asarray(velocities, dtype=float)
    out = np.zeros(2)
    for j in graph.neighbors(i):
        out += graph.smooth_adjacency[i, j] * (p[j] - p[i])
    return out


def goal_term(i, position, velocity, q_ref, params: ControlParams) -> np.ndarray:
    """Track ``q_ref`` and come to rest (reference velocity zero)."""
    return params.c1 * (np.asarray(q_ref, float) - position) + params.c2 * (0.0 - np.asarray(velocity, float))


def control_terms(q, p, graph: GraphView, aspirants_per_map, q_ref, params: ControlParams):
    """Vectorised gradient, consensus and goal terms for every row of ``q``.

    Returns three (n, 2) arrays. Rows correspond to ``q``; ``graph`` and
    ``aspirants_per_map`` must be indexed the same way.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    kp = params.kernel
    n = len(q)
    if n == 0:
        empty = np.zeros((0, 2))
        return empty, empty, empty

    diff = q[None, :, :] - q[:, None, :]  # diff[i, j] = q_j - q_i
    z = sigma_norm(diff, kp.epsilon)
    grad = sigma_gradient(diff, kp.epsilon)
    nbr = graph.binary_adjacency.astype(bool)
    weight = np.where(nbr, psi(z, kp) + capacity_attraction(aspirants_per_map, params)[None, :], 0.0)
    f = np.einsum("ij,ijk->ik", weight, grad)

    a = graph.smooth_adjacency
    g = a @ p - a.sum(axis=1)[:, None] * p

    h = params.c1 * (np.asarray(q_ref, dtype=float) - q) - params.c2 * p
    return f, g, h


def nearest_centers(q, centers) -> np.ndarray:
    """Nearest cluster center for each row of ``q`` (lowest index on ties)."""
    centers = np.asarray(centers, dtype=float)
    d2 = ((q[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return centers[np.argmin(d2, axis=1)]


def control_input(state: MapState, graph: GraphView, matching: Matching, centers: ClusterSet,
                  params: ControlParams) -> ControlInput:
    """Compute u for every MAP from one state snapshot.

    ``graph`` and ``matching`` must be built over the active MAPs in id order.
    """
    ids = state.active_ids
    u = np.zeros_like(state.q, dtype=float)
    if len(ids) == 0:
        return ControlInput(u, 0.0)
    q, p = state.q[ids], state.p[ids]
    q_ref = nearest_centers(q, centers.centers)
    f, g, h = control_terms(q, p, graph, matching.aspirants_per_map, q_ref, params)
    u[ids] = f + g + h
    return ControlInput(u, float(np.sqrt((u[ids] ** 2).sum(axis=1)).max()))
