"""Communication graphs, doubly stochastic mixing matrices, and spectral quantities.

Five undirected families are supported: ring, meshgrid2d (open 4-neighbor
lattice), star, hypercube, and complete. Gossip weights use the
Metropolis-Hastings rule, which is symmetric and doubly stochastic on any
connected graph, with nonnegative entries.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import largest_eigenvalue_psd

TOPOLOGIES = ("ring", "meshgrid2d", "star", "hypercube", "complete")

# The contraction factor beta is the spectral norm of W - (1/n)*ones*ones'/n.
# At or above this threshold the matrix does not contract toward consensus.
_BETA_DEGENERATE = 1.0 - 1e-12


class ConnectivityWarning(UserWarning):
    """The weight matrix does not mix: the network is disconnected or periodic."""


def _connected(n, edges):
    """Single connected component check by union-find."""
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    root = find(0)
    return all(find(i) == root for i in range(n))


@dataclass(frozen=True)
class Graph:
    """Undirected communication graph over agents 0..n-1.

    Edges are stored canonically as (i, j) with i < j; the graph must be
    connected and free of self-loops.
    """

    n: int
    edges: frozenset
    kind: str

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 agents, got n={self.n}")
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop on agent {i} not allowed")
            if not (0 <= i < j < self.n):
                raise ValueError(f"edge ({i},{j}) is not canonical for n={self.n}")
        if not _connected(self.n, self.edges):
            raise ValueError(f"{self.kind} graph on {self.n} agents is not connected")

    def degrees(self):
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg


def _edge(i, j):
    return (i, j) if i < j else (j, i)


def build_topology(kind: str, n: int) -> Graph:
    """Construct one of the supported graph families on n agents.

    meshgrid2d requires n to be a perfect square; hypercube requires n to
    be a power of two.
    """
    if n < 2:
        raise ValueError(f"need at least 2 agents, got n={n}")
    if kind == "ring":
        edges = {_edge(i, (i + 1) % n) for i in range(n)}
    elif kind == "meshgrid2d":
        side = math.isqrt(n)
        if side * side != n:
            raise ValueError(f"meshgrid2d requires a perfect square number of agents; {n} is not")
        edges = set()
        for r in range(side):
            for c in range(side):
                v = r * side + c
                if c + 1 < side:
                    edges.add(_edge(v, v + 1))
                if r + 1 < side:
                    edges.add(_edge(v, v + side))
    elif kind == "star":
        edges = {(0, i) for i in range(1, n)}
    elif kind == "hypercube":
        if n & (n - 1) != 0:
            raise ValueError(f"hypercube requires a power-of-two number of agents; {n} is not")
        bits = n.bit_length() - 1
        edges = {_edge(v, v ^ (1 << b)) for v in range(n) for b in range(bits)}
    elif kind == "complete":
        edges = {(i, j) for i in range(n) for j in range(i + 1, n)}
    else:
        raise ValueError(f"unknown topology {kind!r}; expected one of {TOPOLOGIES}")
    return Graph(n=n, edges=frozenset(edges), kind=kind)


@dataclass(frozen=True)
class MixingMatrix:
    """Doubly stochastic gossip weight matrix with its cached contraction factor.

    beta = ||W - (1/n) ones ones'||_2 measures connectivity: beta = 0 for the
    exact-averaging matrix, and beta -> 1 as the network becomes sparse.
    """

    w: np.ndarray
    beta: float

    def __post_init__(self):
        w = self.w
        n = w.shape[0]
        if w.shape != (n, n):
            raise ValueError(f"weight matrix must be square, got {w.shape}")
        ones = np.ones(n)
        if np.max(np.abs(w @ ones - ones)) > 1e-12 or np.max(np.abs(w.T @ ones - ones)) > 1e-12:
            raise ValueError("weight matrix is not doubly stochastic to 1e-12")
        if np.min(w) < 0.0:
            raise ValueError("weight matrix has negative entries")
        if not self.beta < _BETA_DEGENERATE:
            raise ValueError(f"contraction factor beta={self.beta} does not satisfy beta < 1")

    @property
    def n(self):
        return self.w.shape[0]


def metropolis_weights(g: Graph) -> MixingMatrix:
    """Metropolis-Hastings gossip weights for a connected graph.

    w_ij = 1/(1 + max(deg_i, deg_j)) on edges, diagonal takes the slack.
    The result is symmetric, doubly stochastic, and nonnegative.
    """
    deg = g.degrees()
    w = np.zeros((g.n, g.n))
    for i, j in g.edges:
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return MixingMatrix(w=w, beta=spectral_gap(w))


def spectral_gap(w, *, warn: bool = True) -> float:
    """Spectral norm of W - (1/n) ones ones', the gossip contraction factor.

    Uses a symmetric eigendecomposition when W is symmetric and power
    iteration on the deflated matrix otherwise. Values at or above 1 mean
    the network is disconnected or periodic and are flagged with a
    ConnectivityWarning.
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    ones = np.ones(n)
    if np.max(np.abs(w @ ones - ones)) > 1e-8 or np.max(np.abs(w.T @ ones - ones)) > 1e-8:
        raise ValueError("matrix is not doubly stochastic")
    deflated = w - averaging_matrix(n)
    if np.array_equal(w, w.T):
        beta = float(np.max(np.abs(np.linalg.eigvalsh(deflated))))
    else:
        top = largest_eigenvalue_psd(deflated.T @ deflated, tol=1e-10, max_iter=10_000)
        beta = math.sqrt(max(top, 0.0))
    if warn and beta >= _BETA_DEGENERATE:
        warnings.warn(
            f"spectral gap {beta} >= 1: disconnected or periodic network",
            ConnectivityWarning,
            stacklevel=2,
        )
    return beta


def averaging_matrix(n: int) -> np.ndarray:
    """The exact global-averaging matrix (1/n) ones ones'."""
    return np.full((n, n), 1.0 / n)


def normalize_tau(tau):
    """Validate an averaging period: a positive integer or inf (never average)."""
    if isinstance(tau, float) and math.isinf(tau) and tau > 0:
        return math.inf
    if isinstance(tau, (int, float)) and float(tau).is_integer() and tau >= 1:
        return int(tau)
    raise ValueError(f"averaging period must be an integer >= 1 or inf, got {tau!r}")


def is_pga_step(k: int, tau) -> bool:
    """True when the step taking iterate k to k+1 is a global averaging round."""
    tau = normalize_tau(tau)
    if tau is math.inf:
        return False
    return (k + 1) % tau == 0


def effective_mixing(k: int, tau, w) -> np.ndarray:
    """Weight matrix applied at step k: global averaging every tau-th step, w otherwise.

    With tau = inf the gossip matrix is used at every step.
    """
    w = w.w if isinstance(w, MixingMatrix) else np.asarray(w, dtype=float)
    if is_pga_step(k, tau):
        return averaging_matrix(w.shape[0])
    return w
