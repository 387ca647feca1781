"""Regularized least-squares benchmark: synthetic data and gradient oracles.

Agent i holds local data (A_i, b_i) and the local objective

    f_i(x) = ||A_i x - b_i||^2 + lam * sum_j r(x[j]),

so the network objective f(x) = (1/n) sum_i f_i(x) carries a single copy of
the regularizer. The default regularizer r(t) = t^2/(1+t^2) is smooth,
nonconvex, and bounded in [0, 1); the unbounded variant r(t) = t/(1+t) is
available under the "unbounded" flag, guarded away from its pole at t = -1.

Gradients of the data term are evaluated through cached Gram matrices
A_i' A_i and moment vectors A_i' b_i, so every gradient path in the package
(exact, stacked, stochastic) produces bitwise-identical values at the same
point. Objective values use the raw residual so exact interpolation yields
exactly zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .linalg import largest_eigenvalue_psd

REGULARIZERS = ("bounded", "unbounded")
NOISE_MODES = ("additive", "minibatch")

# Gradient-Lipschitz constant of the default regularizer: |r''| peaks at t=0
# with value 2. The unbounded form has no global constant on its guarded
# domain; 2 (its curvature magnitude at 0) is used for both.
REGULARIZER_CURVATURE = 2.0

_POLE_GUARD = -1.0 + 1e-6


def _check_unbounded_domain(t):
    if np.min(t) <= _POLE_GUARD:
        raise ValueError(
            f"unbounded regularizer requires every coordinate > {_POLE_GUARD}; "
            f"got min {np.min(t)}"
        )


def regularizer_value(t, kind: str = "bounded"):
    """Per-coordinate regularizer r(t)."""
    t = np.asarray(t, dtype=float)
    if kind == "bounded":
        t2 = t * t
        return t2 / (1.0 + t2)
    if kind == "unbounded":
        _check_unbounded_domain(t)
        return t / (1.0 + t)
    raise ValueError(f"unknown regularizer {kind!r}; expected one of {REGULARIZERS}")


def regularizer_grad(t, kind: str = "bounded"):
    """Per-coordinate derivative r'(t)."""
    t = np.asarray(t, dtype=float)
    if kind == "bounded":
        u = 1.0 + t * t
        return 2.0 * t / (u * u)
    if kind == "unbounded":
        _check_unbounded_domain(t)
        u = 1.0 + t
        return 1.0 / (u * u)
    raise ValueError(f"unknown regularizer {kind!r}; expected one of {REGULARIZERS}")


@dataclass(frozen=True)
class NoiseModel:
    """Stochastic gradient oracle configuration.

    additive: exact gradient plus Gaussian noise with per-coordinate variance
    sigma^2/d, so the expected squared noise norm is exactly sigma^2.
    minibatch: the data term is estimated from `batch` rows sampled uniformly
    with replacement; the regularizer term stays exact.
    """

    mode: str = "additive"
    sigma: float = 0.0
    batch: int = 1

    def __post_init__(self):
        if self.mode not in NOISE_MODES:
            raise ValueError(f"unknown noise mode {self.mode!r}; expected one of {NOISE_MODES}")
        if self.sigma < 0:
            raise ValueError(f"noise scale must be nonnegative, got {self.sigma}")
        if self.batch < 1:
            raise ValueError(f"minibatch size must be >= 1, got {self.batch}")


@dataclass(frozen=True)
class Dataset:
    """Per-agent least-squares data with a shared nonconvex regularizer.

    a has shape (n, m, d), b has shape (n, m). planted keeps the per-agent
    generating vectors when the data is synthetic (None for imported data
    without them).
    """

    a: np.ndarray
    b: np.ndarray
    lam: float
    planted: np.ndarray | None = None
    seed: int | None = None
    regularizer: str = "bounded"

    def __post_init__(self):
        if self.a.ndim != 3:
            raise ValueError(f"design tensor must be (n, m, d), got shape {self.a.shape}")
        if self.b.shape != self.a.shape[:2]:
            raise ValueError(f"targets shape {self.b.shape} does not match designs {self.a.shape}")
        if self.lam < 0:
            raise ValueError(f"regularization weight must be nonnegative, got {self.lam}")
        if self.regularizer not in REGULARIZERS:
            raise ValueError(f"unknown regularizer {self.regularizer!r}")

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def m(self):
        return self.a.shape[1]

    @property
    def d(self):
        return self.a.shape[2]

    @cached_property
    def gram(self):
        """Per-agent Gram matrices A_i' A_i, shape (n, d, d)."""
        return np.matmul(self.a.transpose(0, 2, 1), self.a)

    @cached_property
    def atb(self):
        """Per-agent moment vectors A_i' b_i, shape (n, d)."""
        return np.matmul(self.a.transpose(0, 2, 1), self.b[:, :, None])[:, :, 0]


def generate_dataset(
    n: int,
    d: int,
    m: int,
    label_noise_std: float,
    seed: int,
    lam: float = 0.01,
    regularizer: str = "bounded",
) -> Dataset:
    """Synthetic heterogeneous dataset: standard Gaussian designs, per-agent
    planted vectors, targets b_i = A_i x~_i + z_i with Gaussian label noise.

    Fully determined by the seed; the planted vectors differ across agents so
    local minimizers are distinct.
    """
    if n < 1 or d < 1 or m < 1:
        raise ValueError(f"dimensions must be positive, got n={n}, d={d}, m={m}")
    if label_noise_std < 0:
        raise ValueError(f"label noise std must be nonnegative, got {label_noise_std}")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, m, d))
    planted = rng.standard_normal((n, d))
    b = np.matmul(a, planted[:, :, None])[:, :, 0]
    if label_noise_std > 0:
        b = b + label_noise_std * rng.standard_normal((n, m))
    return Dataset(a=a, b=b, lam=lam, planted=planted, seed=seed, regularizer=regularizer)


def local_value(ds: Dataset, i: int, x) -> float:
    """f_i(x) = ||A_i x - b_i||^2 + lam * sum_j r(x[j])."""
    x = np.asarray(x, dtype=float)
    r = ds.a[i] @ x - ds.b[i]
    return float(r @ r + ds.lam * regularizer_value(x, ds.regularizer).sum())


def objective_value(ds: Dataset, x) -> float:
    """Network objective f(x), the average of the local objectives."""
    x = np.asarray(x, dtype=float)
    res = np.matmul(ds.a, x) - ds.b
    data = float(np.sum(res * res)) / ds.n
    return data + ds.lam * float(regularizer_value(x, ds.regularizer).sum())


def local_gradient(ds: Dataset, i: int, x) -> np.ndarray:
    """Exact gradient of f_i at x, via the cached Gram matrix."""
    x = np.asarray(x, dtype=float)
    return 2.0 * (ds.gram[i] @ x - ds.atb[i]) + ds.lam * regularizer_grad(x, ds.regularizer)


def stacked_gradients(ds: Dataset, x_rows) -> np.ndarray:
    """Row i of the result is the exact gradient of f_i at x_rows[i]."""
    x_rows = np.asarray(x_rows, dtype=float)
    data = 2.0 * (np.matmul(ds.gram, x_rows[:, :, None])[:, :, 0] - ds.atb)
    return data + ds.lam * regularizer_grad(x_rows, ds.regularizer)


def mean_gradient(ds: Dataset, x) -> np.ndarray:
    """Gradient of the network objective f at a single point x."""
    x = np.asarray(x, dtype=float)
    return stacked_gradients(ds, np.broadcast_to(x, (ds.n, ds.d))).mean(axis=0)


def stochastic_gradient(ds: Dataset, i: int, x, nm: NoiseModel, rng) -> np.ndarray:
    """Unbiased stochastic gradient of f_i at x.

    All randomness is consumed from the provided stream, which the caller
    keys by (agent, iteration); with sigma = 0 in additive mode no randomness
    is consumed and the exact gradient is returned.
    """
    x = np.asarray(x, dtype=float)
    if nm.mode == "additive":
        g = local_gradient(ds, i, x)
        if nm.sigma > 0:
            g = g + (nm.sigma / np.sqrt(ds.d)) * rng.standard_normal(ds.d)
        return g
    if nm.batch > ds.m:
        raise ValueError(f"minibatch size {nm.batch} exceeds the {ds.m} local rows")
    idx = rng.integers(0, ds.m, size=nm.batch)
    rows = ds.a[i][idx]
    res = rows @ x - ds.b[i][idx]
    data = (ds.m / nm.batch) * 2.0 * (rows.T @ res)
    return data + ds.lam * regularizer_grad(x, ds.regularizer)


def smoothness_constant(ds: Dataset) -> float:
    """Gradient-Lipschitz constant of every f_i: max_i 2*lambda_max(A_i'A_i)
    plus the regularizer curvature scaled by lam."""
    top = max(largest_eigenvalue_psd(ds.gram[i], tol=1e-8, max_iter=10_000) for i in range(ds.n))
    return 2.0 * top + ds.lam * REGULARIZER_CURVATURE


def _write_matrix(path, mat):
    mat = np.atleast_2d(mat)
    with open(path, "w", newline="\n") as fh:
        for row in mat:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _read_matrix(path):
    with open(path) as fh:
        return np.array([[float(v) for v in line.split(",")] for line in fh if line.strip()])


def save_dataset(ds: Dataset, path) -> None:
    """Write per-agent CSV files plus a JSON manifest so runs are replayable."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "n": ds.n,
        "d": ds.d,
        "m": ds.m,
        "lam": ds.lam,
        "seed": ds.seed,
        "regularizer": ds.regularizer,
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    for i in range(ds.n):
        _write_matrix(path / f"agent_{i:03d}_A.csv", ds.a[i])
        _write_matrix(path / f"agent_{i:03d}_b.csv", ds.b[i][:, None])
    if ds.planted is not None:
        _write_matrix(path / "planted.csv", ds.planted)


def load_dataset(path) -> Dataset:
    """Inverse of save_dataset; round-trips bit-exactly through the CSV files."""
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    n = manifest["n"]
    a = np.stack([_read_matrix(path / f"agent_{i:03d}_A.csv") for i in range(n)])
    b = np.stack([_read_matrix(path / f"agent_{i:03d}_b.csv")[:, 0] for i in range(n)])
    planted_path = path / "planted.csv"
    planted = _read_matrix(planted_path) if planted_path.exists() else None
    return Dataset(
        a=a,
        b=b,
        lam=manifest["lam"],
        planted=planted,
        seed=manifest["seed"],
        regularizer=manifest["regularizer"],
    )
