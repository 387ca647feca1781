"""Synchronous round model for gradient tracking with periodic global averaging.

One step of the tracked recursion with mixing matrix M(k) is

    x(k+1) = M(k) (x(k) - alpha g(k))
    g(k+1) = M(k) g(k) + grad_F(x(k+1); xi(k+1)) - grad_F(x(k); xi(k))

where M(k) is the exact-averaging matrix every tau-th step and the gossip
matrix otherwise. Averaging steps are applied as an exact column-mean
broadcast, so the post-averaging consensus error is exactly zero. Because
every M(k) is doubly stochastic, the column means of g track the column
means of the latest stochastic gradients; that conservation law is checked
by the metrics module.

Randomness discipline: stochastic gradients for agent i at iteration k draw
from a counter-based stream addressed by (agent, iteration) under one master
seed, so trajectories are bitwise reproducible and independent of evaluation
order or sweep scheduling.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .metrics import record
from .problem import Dataset, NoiseModel, smoothness_constant, stochastic_gradient
from .theory import stepsize_bound
from .topology import (
    TOPOLOGIES,
    MixingMatrix,
    build_topology,
    is_pga_step,
    metropolis_weights,
    normalize_tau,
)

ALGORITHMS = ("gt-pga", "dgd")

# Any entry beyond this magnitude aborts the run as diverged.
DIVERGENCE_LIMIT = 1e12


class DivergenceError(RuntimeError):
    """An iterate left the trusted numeric range; carries the partial trajectory."""

    def __init__(self, k, max_magnitude, trajectory=None):
        super().__init__(
            f"iterates diverged at step {k}: max |entry| = {max_magnitude:.3e} "
            f"exceeds {DIVERGENCE_LIMIT:.0e}"
        )
        self.k = k
        self.max_magnitude = max_magnitude
        self.trajectory = trajectory


def gradient_stream(seed: int, agent: int, iteration: int):
    """Independent random stream for one (agent, iteration) cell.

    Streams are Philox counter blocks: the master seed is the key and the
    cell coordinates select the counter, so any cell can be regenerated in
    isolation.
    """
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, agent, iteration]))


class GradientStreams:
    """Pool view over the per-(agent, iteration) streams of one master seed.

    Repositions a single cached generator instead of constructing one per
    cell; draws are bit-identical to gradient_stream(seed, agent, iteration).
    Consume each returned stream before requesting the next, and do not share
    a pool across threads.
    """

    def __init__(self, seed: int):
        if not (isinstance(seed, (int, np.integer)) and seed >= 0):
            raise ValueError(f"master seed must be a nonnegative integer, got {seed!r}")
        self.seed = int(seed)
        self._bit_gen = np.random.Philox(key=self.seed)
        self._gen = np.random.Generator(self._bit_gen)
        self._state = self._bit_gen.state

    def stream(self, agent: int, iteration: int):
        st = self._state
        counter = st["state"]["counter"]
        counter[0] = 0
        counter[1] = 0
        counter[2] = agent
        counter[3] = iteration
        st["buffer_pos"] = 4  # mark the block buffer fully consumed
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bit_gen.state = st
        return self._gen


@dataclass(frozen=True)
class NetworkState:
    """Stacked per-agent iterates x, tracking variables g, and the cached
    stochastic gradients grad_prev the g-recursion subtracts next step."""

    x: np.ndarray
    g: np.ndarray
    grad_prev: np.ndarray
    k: int

    def __post_init__(self):
        if not (self.x.shape == self.g.shape == self.grad_prev.shape) or self.x.ndim != 2:
            raise ValueError(
                f"state matrices must share one (n, d) shape, got "
                f"{self.x.shape}, {self.g.shape}, {self.grad_prev.shape}"
            )


@dataclass(frozen=True)
class RunConfig:
    """One experiment cell: topology, dimensions, averaging period, stepsize
    (or "auto"), iteration budget, master seed, noise model, algorithm, and
    metric cadence."""

    topology: str = "ring"
    n: int = 64
    d: int = 20
    tau: float = math.inf
    alpha: float | str = "auto"
    iters: int = 2000
    seed: int = 0
    noise: NoiseModel = NoiseModel()
    algorithm: str = "gt-pga"
    cadence: int = 1
    auto_alpha_factor: float = 0.1

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}; expected one of {TOPOLOGIES}")
        normalize_tau(self.tau)
        if self.alpha != "auto":
            if not isinstance(self.alpha, (int, float)) or not self.alpha > 0:
                raise ValueError(f"stepsize must be positive or 'auto', got {self.alpha!r}")
        if self.iters < 1:
            raise ValueError(f"iteration budget must be >= 1, got {self.iters}")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.cadence < 1:
            raise ValueError(f"metric cadence must be >= 1, got {self.cadence}")
        if self.auto_alpha_factor <= 0:
            raise ValueError("auto stepsize factor must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Logged metric records (strictly increasing k), the final state, the
    config that produced them, and the stepsize actually used."""

    records: tuple
    final_state: NetworkState
    config: RunConfig
    alpha: float


def _fresh_gradients(ds, x_rows, noise, streams, iteration):
    """Stochastic gradients for all agents at their rows of x_rows, each
    drawn from its own (agent, iteration) stream."""
    need_rng = noise.mode == "minibatch" or noise.sigma > 0
    out = np.empty_like(x_rows)
    for i in range(ds.n):
        rng = streams.stream(i, iteration) if need_rng else None
        out[i] = stochastic_gradient(ds, i, x_rows[i], noise, rng)
    return out


def _check_finite(x, g, k):
    mx = max(float(np.max(np.abs(x))), float(np.max(np.abs(g))))
    if not math.isfinite(mx) or mx > DIVERGENCE_LIMIT:
        raise DivergenceError(k, mx)


def init_state(
    ds: Dataset,
    x0=None,
    noise: NoiseModel = NoiseModel(),
    streams: GradientStreams | None = None,
    seed: int = 0,
) -> NetworkState:
    """Initial state: iterates at x0 (default all zeros) and tracking
    variables seeded with the iteration-0 stochastic gradients."""
    if streams is None:
        streams = GradientStreams(seed)
    if x0 is None:
        x0 = np.zeros((ds.n, ds.d))
    else:
        x0 = np.array(x0, dtype=float)
        if x0.shape != (ds.n, ds.d):
            raise ValueError(f"x0 shape {x0.shape} does not match dataset ({ds.n}, {ds.d})")
    grad0 = _fresh_gradients(ds, x0, noise, streams, 0)
    return NetworkState(x=x0, g=grad0.copy(), grad_prev=grad0, k=0)


def _mix(w, tau, k, y):
    """Apply the step-k mixing matrix to the rows of y.

    Global-averaging steps broadcast the exact column mean, which makes the
    post-averaging rows identical bit-for-bit.
    """
    if is_pga_step(k, tau):
        return np.tile(y.mean(axis=0), (y.shape[0], 1))
    return w @ y


def gt_pga_step(
    state: NetworkState,
    w,
    tau,
    alpha: float,
    ds: Dataset,
    noise: NoiseModel,
    streams: GradientStreams,
) -> NetworkState:
    """One tracked descent-and-mix round; every tau-th round mixes with the
    exact-averaging matrix instead of the gossip matrix."""
    w = w.w if isinstance(w, MixingMatrix) else np.asarray(w, dtype=float)
    k = state.k
    x_new = _mix(w, tau, k, state.x - alpha * state.g)
    grad_new = _fresh_gradients(ds, x_new, noise, streams, k + 1)
    g_new = _mix(w, tau, k, state.g) + grad_new - state.grad_prev
    _check_finite(x_new, g_new, k + 1)
    return NetworkState(x=x_new, g=g_new, grad_prev=grad_new, k=k + 1)


def dgd_step(
    state: NetworkState,
    w,
    alpha: float,
    ds: Dataset,
    noise: NoiseModel,
    streams: GradientStreams,
) -> NetworkState:
    """One decentralized gradient descent round: x <- W (x - alpha grad_F).

    grad_prev always holds the stochastic gradient at the current iterate
    (stream (i, k) at x(k)), so the descent direction is the cached gradient;
    g is not used by the update and simply mirrors the cache.
    """
    w = w.w if isinstance(w, MixingMatrix) else np.asarray(w, dtype=float)
    k = state.k
    x_new = w @ (state.x - alpha * state.grad_prev)
    grad_new = _fresh_gradients(ds, x_new, noise, streams, k + 1)
    _check_finite(x_new, grad_new, k + 1)
    return NetworkState(x=x_new, g=grad_new, grad_prev=grad_new, k=k + 1)


def resolve_alpha(cfg: RunConfig, ds: Dataset, beta: float) -> float:
    """Stepsize for a run: the configured value, or for "auto" the theoretical
    bound when it applies (finite tau >= 2) and a damped 1/(2L) otherwise."""
    if cfg.alpha != "auto":
        return float(cfg.alpha)
    L = smoothness_constant(ds)
    if math.isinf(cfg.tau) or cfg.tau < 2:
        return cfg.auto_alpha_factor / (2.0 * L)
    return stepsize_bound(L, beta, int(cfg.tau))


def run(cfg: RunConfig, ds: Dataset, mixing=None, initial_state=None) -> Trajectory:
    """Execute one configured run and log metrics at the configured cadence.

    Metrics are recorded at k = 0, at every cadence-th iteration, and at the
    final iteration. `mixing` overrides the topology-derived gossip matrix
    (e.g. the identity for local-updates schedules); an override requires an
    explicit stepsize when its contraction factor is degenerate. On
    divergence the partial trajectory is attached to the raised error.
    """
    if (ds.n, ds.d) != (cfg.n, cfg.d):
        raise ValueError(
            f"dataset dims ({ds.n}, {ds.d}) do not match config ({cfg.n}, {cfg.d})"
        )
    if mixing is None:
        wm = metropolis_weights(build_topology(cfg.topology, cfg.n))
        w, beta = wm.w, wm.beta
    else:
        w = np.asarray(mixing, dtype=float)
        beta = 1.0  # not derived from a validated topology; "auto" rejects finite tau
    alpha = resolve_alpha(cfg, ds, beta)
    streams = GradientStreams(cfg.seed)
    state = initial_state if initial_state is not None else init_state(ds, None, cfg.noise, streams)
    records = [record(ds, state)]
    try:
        for _ in range(state.k, cfg.iters):
            if cfg.algorithm == "gt-pga":
                state = gt_pga_step(state, w, cfg.tau, alpha, ds, cfg.noise, streams)
            else:
                state = dgd_step(state, w, alpha, ds, cfg.noise, streams)
            if state.k % cfg.cadence == 0 or state.k == cfg.iters:
                records.append(record(ds, state))
    except DivergenceError as err:
        err.trajectory = Trajectory(tuple(records), state, cfg, alpha)
        raise
    return Trajectory(records=tuple(records), final_state=state, config=cfg, alpha=alpha)


def config_dict(cfg: RunConfig) -> dict:
    """JSON-safe rendering of a config (inf period becomes the token "inf")."""
    out = asdict(cfg)
    out["tau"] = "inf" if math.isinf(cfg.tau) else int(cfg.tau)
    return out


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(
        json.dumps(config_dict(cfg), sort_keys=True).encode()
    ).hexdigest()


def _write_matrix(path, mat):
    with open(path, "w", newline="\n") as fh:
        for row in np.atleast_2d(mat):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _read_matrix(path):
    with open(path) as fh:
        return np.array([[float(v) for v in line.split(",")] for line in fh if line.strip()])


def save_checkpoint(state: NetworkState, cfg: RunConfig, path) -> None:
    """Persist a state as CSV matrices plus a manifest for resumable runs."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    _write_matrix(path / "x.csv", state.x)
    _write_matrix(path / "g.csv", state.g)
    _write_matrix(path / "grad_prev.csv", state.grad_prev)
    manifest = {"k": state.k, "config_hash": config_hash(cfg), "config": config_dict(cfg)}
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def load_checkpoint(path):
    """Read back a checkpoint; returns (state, manifest)."""
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    state = NetworkState(
        x=_read_matrix(path / "x.csv"),
        g=_read_matrix(path / "g.csv"),
        grad_prev=_read_matrix(path / "grad_prev.csv"),
        k=manifest["k"],
    )
    return state, manifest
