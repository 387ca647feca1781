"""Convergence diagnostics computed from a network state with exact gradients.

All quantities here use true (noise-free) gradients regardless of the
stochastic oracle driving the run; the run loop controls how often they are
evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import Dataset, objective_value, stacked_gradients


@dataclass(frozen=True)
class MetricRecord:
    """One logged row: iteration, stationarity, consensus error, tracking
    residual, and the objective at the mean iterate."""

    k: int
    stationarity: float
    consensus: float
    tracking_residual: float
    fbar: float


def stationarity_metric(ds: Dataset, state) -> float:
    """||avg_i grad f_i(x_i)||^2 + ||grad f(x_bar)||^2 with exact gradients.

    For a consensual state the two terms coincide and the metric is exactly
    twice the squared gradient norm at the common point.
    """
    xbar = state.x.mean(axis=0)
    avg_grad = stacked_gradients(ds, state.x).mean(axis=0)
    grad_at_mean = stacked_gradients(ds, np.broadcast_to(xbar, state.x.shape)).mean(axis=0)
    return float(avg_grad @ avg_grad + grad_at_mean @ grad_at_mean)


def consensus_error(state) -> float:
    """Squared deviation of the agent iterates from their mean, sum_i ||x_i - x_bar||^2."""
    dev = state.x - state.x.mean(axis=0)
    return float(np.sum(dev * dev))


def tracking_residual(state) -> float:
    """Norm of mean(g) - mean(cached stochastic gradients).

    The tracking recursion conserves this difference at zero; the residual
    is its floating-point drift.
    """
    return float(np.linalg.norm(state.g.mean(axis=0) - state.grad_prev.mean(axis=0)))


def record(ds: Dataset, state) -> MetricRecord:
    """Evaluate all diagnostics for one state."""
    return MetricRecord(
        k=state.k,
        stationarity=stationarity_metric(ds, state),
        consensus=consensus_error(state),
        tracking_residual=tracking_residual(state),
        fbar=objective_value(ds, state.x.mean(axis=0)),
    )
