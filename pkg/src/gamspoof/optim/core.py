"""Adam, gradient-norm-aware minimization, learning-rate schedule, stopping rule."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..diffnet.model import NumericError, Objective

ETA_0 = 5e-6
ETA_MIN = 1e-8


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, **hyper) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0, **hyper)


def adam_step(state: AdamState, theta: np.ndarray, g: np.ndarray, lr: float
              ) -> tuple[np.ndarray, AdamState]:
    g = np.asarray(g, dtype=np.float64)
    if g.shape != theta.shape or g.shape != state.m.shape:
        raise ValueError(f"shape mismatch: theta {theta.shape}, grad {g.shape}, state {state.m.shape}")
    if not np.all(np.isfinite(g)):
        raise NumericError("non-finite gradient in adam_step", step=state.t)
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    theta = theta - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return theta, replace(state, m=m, v=v, t=t)


@dataclass(frozen=True)
class GamConfig:
    rho: float = 0.05
    alpha: float = 0.3
    xi: float = 1e-12
    batch_size: int = 32
    rho_decay: bool = False  # linear decay of rho to 0 over training when set

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be > 0")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not self.xi > 0:
            raise ValueError("xi must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class GamStepTrace:
    h_loss: np.ndarray
    f: np.ndarray
    theta_adv: np.ndarray
    h_norm: np.ndarray
    combined: np.ndarray


class GamNumericError(NumericError):
    def __init__(self, msg: str, trace: dict):
        super().__init__(msg, **{k: "non-finite" for k, v in trace.items()
                                 if not np.all(np.isfinite(v))})
        self.trace = trace


def gam_direction(obj: Objective, theta: np.ndarray, batch, rho: float, alpha: float,
                  xi: float = 1e-12, hvp_mode: str = "exact") -> GamStepTrace:
    """Loss gradient plus alpha times the gradient of the first-order flatness."""
    partial: dict = {}
    try:
        h_loss = obj.grad(theta, batch)
        partial["h_loss"] = h_loss
        f = obj.hvp(theta, batch, h_loss / (np.linalg.norm(h_loss) + xi), mode=hvp_mode)
        partial["f"] = f
        theta_adv = theta + rho * f / (np.linalg.norm(f) + xi)
        partial["theta_adv"] = theta_adv
        g_adv = obj.grad(theta_adv, batch)
        h_norm = rho * obj.hvp(theta_adv, batch, g_adv / (np.linalg.norm(g_adv) + xi), mode=hvp_mode)
        partial["h_norm"] = h_norm
    except NumericError as exc:
        raise GamNumericError(f"GAM intermediate failed: {exc}", partial) from exc
    combined = h_loss + alpha * h_norm
    partial["combined"] = combined
    if not all(np.all(np.isfinite(v)) for v in partial.values()):
        raise GamNumericError("non-finite GAM intermediate", partial)
    return GamStepTrace(h_loss, f, theta_adv, h_norm, combined)


def gam_step(obj: Objective, theta: np.ndarray, batch, cfg: GamConfig, lr: float,
             adam: AdamState, rho: float | None = None, hvp_mode: str = "exact"
             ) -> tuple[np.ndarray, AdamState, GamStepTrace]:
    """One GAM iteration; the combined direction replaces the raw gradient in Adam."""
    trace = gam_direction(obj, theta, batch, cfg.rho if rho is None else rho,
                          cfg.alpha, cfg.xi, hvp_mode)
    theta, adam = adam_step(adam, theta, trace.combined, lr)
    return theta, adam, trace


def cosine_lr(step: int, total: int, eta0: float = ETA_0, eta_min: float = ETA_MIN) -> float:
    if total < 1 or not 0 <= step <= total:
        raise ValueError(f"need 0 <= step <= total and total >= 1, got {step}/{total}")
    eta = eta_min + 0.5 * (eta0 - eta_min) * (1.0 + math.cos(math.pi * step / total))
    # clamp away one-ulp rounding at the endpoints
    return min(max(eta, eta_min), eta0)


def early_stop(history, patience: int = 10) -> bool:
    """True once the best (earliest minimum) dev loss is more than ``patience`` epochs old."""
    history = list(history)
    if not history:
        raise ValueError("history must be non-empty")
    best = int(np.argmin(history))
    return (len(history) - 1 - best) >= patience


@dataclass(frozen=True)
class FlatnessEstimate:
    rho: float
    value: float
    n_samples: int
    running_max: np.ndarray = field(repr=False, default=None)


def sample_ball(rng: np.random.Generator, center: np.ndarray, radius: float, n: int) -> np.ndarray:
    """``n`` points uniformly distributed in the Euclidean ball."""
    d = center.size
    dirs = rng.standard_normal((n, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / d)
    return center + dirs * r[:, None]


def estimate_flatness(obj: Objective, theta: np.ndarray, batch, rho: float, n_samples: int,
                      rng: np.random.Generator) -> FlatnessEstimate:
    """Monte-Carlo lower bound of rho * max_{θ' in B(θ, rho)} ||∇L(θ')||.

    The first probe is θ itself; the remaining ``n_samples - 1`` are uniform in the ball.
    """
    if not rho > 0 or n_samples < 1:
        raise ValueError("need rho > 0 and n_samples >= 1")
    theta = np.asarray(theta, dtype=np.float64)
    norms = [np.linalg.norm(obj.grad(theta, batch))]
    if n_samples > 1:
        for p in sample_ball(rng, theta, rho, n_samples - 1):
            norms.append(np.linalg.norm(obj.grad(p, batch)))
    running = rho * np.maximum.accumulate(np.array(norms))
    return FlatnessEstimate(rho, float(running[-1]), n_samples, running)
