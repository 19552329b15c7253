"""Paired Adam vs Adam+GAM runs on a sharp/flat two-well landscape."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..diffnet.toy import SHARP_CENTER, GaussianWells, two_well
from .core import AdamState, GamConfig, adam_step, cosine_lr, estimate_flatness, gam_step


@dataclass(frozen=True)
class PairedRun:
    seed: int
    theta0: np.ndarray
    theta_adam: np.ndarray
    theta_gam: np.ndarray
    flat_adam: float
    flat_gam: float


def descend(obj, theta0, steps: int, lr: float, gam: GamConfig | None = None) -> np.ndarray:
    theta = np.array(theta0, dtype=np.float64)
    state = AdamState.zeros(theta.size)
    for k in range(steps):
        eta = cosine_lr(k, steps, lr, 1e-8)
        if gam is None:
            theta, state = adam_step(state, theta, obj.grad(theta, None), eta)
        else:
            theta, state, _ = gam_step(obj, theta, None, gam, eta, state)
    return theta


def paired_runs(n_runs: int = 50, *, obj: GaussianWells | None = None, alpha: float = 1.0,
                gam_rho: float = 0.2, probe_rho: float = 0.2, probes: int = 500,
                steps: int = 400, lr: float = 0.02, init_radius: float = 0.3,
                seed: int = 0) -> list[PairedRun]:
    """Start both optimizers from the same point near the sharp well and probe flatness
    at each end point with the same probe stream."""
    obj = obj or two_well()
    gam = GamConfig(rho=gam_rho, alpha=alpha)
    center = np.array(SHARP_CENTER)
    runs = []
    for i in range(n_runs):
        rng = np.random.default_rng([seed, i])
        r = init_radius * np.sqrt(rng.random())
        ang = rng.uniform(0.0, 2.0 * np.pi)
        theta0 = center + r * np.array([np.cos(ang), np.sin(ang)])
        ta = descend(obj, theta0, steps, lr)
        tg = descend(obj, theta0, steps, lr, gam)
        fa = estimate_flatness(obj, ta, None, probe_rho, probes, np.random.default_rng([seed, i, 1])).value
        fg = estimate_flatness(obj, tg, None, probe_rho, probes, np.random.default_rng([seed, i, 1])).value
        runs.append(PairedRun(i, theta0, ta, tg, fa, fg))
    return runs
