"""Small dense linear-algebra helpers shared by the topology and problem modules."""

import numpy as np


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge within its iteration budget."""

    def __init__(self, residual, max_iter):
        super().__init__(
            f"power iteration did not converge within {max_iter} iterations "
            f"(last residual {residual:.3e})"
        )
        self.residual = residual
        self.max_iter = max_iter


def largest_eigenvalue_psd(m, tol=1e-8, max_iter=10_000):
    """Largest eigenvalue of a symmetric positive-semidefinite matrix.

    Power iteration from a fixed start vector (deterministic). The start
    carries a small index-dependent tilt so it is not orthogonal to the
    leading eigenvector for the structured matrices used here.
    """
    m = np.asarray(m, dtype=float)
    d = m.shape[0]
    if d == 1:
        return float(m[0, 0])
    v = np.ones(d) + np.arange(d) / (10.0 * d)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = m @ v
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:  # v in the nullspace; for PSD input this means 0 is the top
            return 0.0
        v = w / norm_w
        lam_next = float(v @ (m @ v))
        if abs(lam_next - lam) <= tol * max(1.0, abs(lam_next)):
            return lam_next
        lam = lam_next
    residual = float(np.linalg.norm(m @ v - lam * v))
    raise PowerIterationError(residual, max_iter)
