"""Closed-form objectives used to check the optimizers against analytic answers."""
from __future__ import annotations

import numpy as np

from .model import fd_hvp


class Quadratic:
    """L(θ) = ½ θᵀAθ (A symmetric); the batch argument is ignored."""

    def __init__(self, A):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        if A.shape[0] != A.shape[1] or not np.allclose(A, A.T):
            raise ValueError("A must be square and symmetric")
        self.A = A

    @property
    def n_params(self) -> int:
        return self.A.shape[0]

    def loss(self, theta, batch=None) -> float:
        theta = np.asarray(theta, dtype=np.float64)
        return 0.5 * float(theta @ self.A @ theta)

    def grad(self, theta, batch=None) -> np.ndarray:
        return self.A @ np.asarray(theta, dtype=np.float64)

    def hvp(self, theta, batch, v, mode: str = "exact") -> np.ndarray:
        if mode == "fd":
            return fd_hvp(self, theta, batch, np.asarray(v, dtype=np.float64))
        return self.A @ np.asarray(v, dtype=np.float64)


class GaussianWells:
    """Weak bowl minus Gaussian dips:

        L(θ) = ½κ‖θ‖² − Σ_k D_k exp(−½ (θ−μ_k)ᵀ A_k (θ−μ_k))

    Each dip has curvature ≈ κI + D_k A_k at its centre, and its gradient norm
    peaks at the rim and then decays, so a narrow dip is a sharp minimum with
    a small basin while a wide one is flat.
    """

    def __init__(self, centers, hessians, depths, kappa: float = 0.05):
        self.centers = [np.asarray(c, dtype=np.float64) for c in centers]
        self.hessians = [np.atleast_2d(np.asarray(h, dtype=np.float64)) for h in hessians]
        self.depths = [float(d) for d in depths]
        self.kappa = float(kappa)

    @property
    def n_params(self) -> int:
        return self.centers[0].size

    def _terms(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        for c, A, D in zip(self.centers, self.hessians, self.depths):
            Ad = A @ (theta - c)
            yield A, Ad, D * np.exp(-0.5 * (theta - c) @ Ad)

    def loss(self, theta, batch=None) -> float:
        theta = np.asarray(theta, dtype=np.float64)
        return float(0.5 * self.kappa * theta @ theta - sum(e for _, _, e in self._terms(theta)))

    def grad(self, theta, batch=None) -> np.ndarray:
        g = self.kappa * np.asarray(theta, dtype=np.float64)
        for _, Ad, e in self._terms(theta):
            g = g + e * Ad
        return g

    def hessian(self, theta) -> np.ndarray:
        H = self.kappa * np.eye(self.n_params)
        for A, Ad, e in self._terms(theta):
            H = H + e * (A - np.outer(Ad, Ad))
        return H

    def hvp(self, theta, batch, v, mode: str = "exact") -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if mode == "fd":
            return fd_hvp(self, theta, batch, v)
        h = self.kappa * v
        for A, Ad, e in self._terms(theta):
            h = h + e * (A @ v - Ad * (Ad @ v))
        return h


SHARP_CENTER = (-1.0, 0.0)
FLAT_CENTER = (1.0, 0.0)


def two_well(sharp: float = 100.0, flat: float = 2.0, kappa: float = 0.05) -> GaussianWells:
    """Equal-depth sharp (curvature ~``sharp``) and flat (~``flat``) dips in 2-D."""
    return GaussianWells([SHARP_CENTER, FLAT_CENTER], [sharp * np.eye(2), flat * np.eye(2)],
                         [1.0, 1.0], kappa)
