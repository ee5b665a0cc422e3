"""Scalar and vector kernels shared by the graph, association and control code.

All functions accept numpy arrays and broadcast element-wise where that makes
sense. Parameters are validated once in :class:`KernelParams`, not per call.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class KernelParams:
    """Interaction parameters for the MAP overlay.

    epsilon: sigma-norm parameter.
    gamma: lower cut-off of the link-quality bump.
    r: communication range.
    d: desired minimum separation between MAPs.
    a, b: bound and shape of the un-even sigmoid.
    """

    epsilon: float = 0.1
    gamma: float = 0.2
    r: float = 24.0
    d: float = 20.0
    a: float = 5.0
    b: float = 5.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must be in (0, 1)")
        if not self.r > 0:
            raise ValueError("r must be > 0")
        if not 0 <= self.d < self.r:
            raise ValueError("d must be < r" if self.d >= self.r else "d must be >= 0")
        if not self.a > 0:
            raise ValueError("a must be > 0")
        if not self.b > 0:
            raise ValueError("b must be > 0")

    @property
    def c(self) -> float:
        return abs(self.a - self.b) / np.sqrt(4 * self.a * self.b)

    @cached_property
    def r_sigma(self) -> float:
        return float(sigma_norm(self.r, self.epsilon))

    @cached_property
    def d_sigma(self) -> float:
        return float(sigma_norm(self.d, self.epsilon))


def bump(z, z1: float, z0: float):
    """Smooth cut-off: 1 below ``z1``, cosine decay to 0 at ``z0``, 0 beyond."""
    if z1 < 0 or z0 <= z1:
        raise ValueError(f"invalid bump cut-offs z1={z1}, z0={z0}")
    z = np.asarray(z, dtype=float)
    out = 0.5 * (1.0 + np.cos(np.pi * (z - z1) / (z0 - z1)))
    out = np.where(z < z1, 1.0, out)
    out = np.where(z >= z0, 0.0, out)
    return out if out.ndim else float(out)


def sigma_norm(x, epsilon: float, axis: int | None = -1):
    """(1/eps) * (sqrt(1 + eps*|x|^2) - 1).

    Scalars are treated as 1-D vectors. For arrays the norm is taken along
    ``axis``; pass ``axis=None`` to treat each entry as a scalar.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or axis is None:
        sq = x * x
    else:
        sq = np.sum(x * x, axis=axis)
    out = (np.sqrt(1.0 + epsilon * sq) - 1.0) / epsilon
    return out if np.ndim(out) else float(out)


def sigma_gradient(x, epsilon: float):
    """Gradient of :func:`sigma_norm` with respect to ``x`` (last axis is the vector)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x / np.sqrt(1.0 + epsilon * x * x)
    sq = np.sum(x * x, axis=-1, keepdims=True)
    return x / np.sqrt(1.0 + epsilon * sq)


def phi(z, a: float, b: float):
    """Un-even sigmoid with phi(0) = 0, bounded in (-a, a)."""
    c = abs(a - b) / np.sqrt(4 * a * b)
    z = np.asarray(z, dtype=float) + c
    out = 0.5 * ((a + b) * z / np.sqrt(1.0 + z * z) + (a - b))
    return out if out.ndim else float(out)


def psi(z, params: KernelParams):
    """Pairwise action on a sigma-distance ``z``: repulsive below d, zero beyond r."""
    z = np.asarray(z, dtype=float)
    out = bump(z / params.r_sigma, params.gamma, 1.0) * phi(z - params.d_sigma, params.a, params.b)
    return out if np.ndim(out) else float(out)
