"""Feed-forward classifier over a flat parameter vector.

Gradients come from reverse-mode accumulation through the layers;
Hessian-vector products push a tangent direction through both the forward
and the reverse sweep (forward-over-reverse), so no Hessian is ever formed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np


class NumericError(FloatingPointError):
    def __init__(self, msg: str, **diagnostics):
        detail = ", ".join(f"{k}={v}" for k, v in diagnostics.items())
        super().__init__(f"{msg} ({detail})" if detail else msg)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Batch:
    features: np.ndarray  # (b, d_in)
    labels: np.ndarray  # (b, 2) soft labels, rows sum to 1

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        y = np.atleast_2d(np.asarray(self.labels, dtype=np.float64))
        if x.shape[0] < 1 or x.shape[0] != y.shape[0]:
            raise ValueError(f"batch shape mismatch: features {x.shape}, labels {y.shape}")
        if not np.allclose(y.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("label rows must sum to 1")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def size(self) -> int:
        return self.features.shape[0]


class Objective(Protocol):
    """What the optimizers need: loss, gradient and Hessian-vector product in θ."""

    def loss(self, theta: np.ndarray, batch) -> float: ...

    def grad(self, theta: np.ndarray, batch) -> np.ndarray: ...

    def hvp(self, theta: np.ndarray, batch, v: np.ndarray, mode: str = "exact") -> np.ndarray: ...


def fd_hvp(obj: Objective, theta: np.ndarray, batch, v: np.ndarray) -> np.ndarray:
    """Central difference of the gradient along ``v``."""
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return np.zeros_like(theta)
    eps = 1e-4 * (1.0 + np.linalg.norm(theta))
    u = v / nv
    return (obj.grad(theta + eps * u, batch) - obj.grad(theta - eps * u, batch)) * nv / (2.0 * eps)


@dataclass(frozen=True)
class ModelSpec:
    widths: tuple[int, ...] = (64, 64, 32, 2)
    leaky_slope: float = 0.01

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        object.__setattr__(self, "widths", widths)
        if len(widths) < 3:
            raise ValueError("need an input width, at least one hidden layer, and the output")
        if widths[-1] != 2:
            raise ValueError("final width must be 2 (bonafide, spoof)")
        if min(widths) < 1:
            raise ValueError("layer widths must be positive")


@dataclass(frozen=True)
class Segment:
    name: str
    shape: tuple[int, ...]
    offset: int

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


class ParamLayout:
    def __init__(self, segments: list[Segment]):
        self.segments = segments
        self.size = sum(s.size for s in segments)
        off = 0
        for s in segments:
            if s.offset != off:
                raise ValueError(f"segment {s.name} does not tile the vector at {off}")
            off += s.size

    @classmethod
    def for_spec(cls, spec: ModelSpec) -> "ParamLayout":
        segs, off = [], 0
        for i, (a, b) in enumerate(zip(spec.widths[:-1], spec.widths[1:])):
            segs.append(Segment(f"W{i}", (a, b), off))
            off += a * b
            segs.append(Segment(f"b{i}", (b,), off))
            off += b
        return cls(segs)

    def unpack(self, theta: np.ndarray) -> list[np.ndarray]:
        if theta.shape != (self.size,):
            raise ValueError(f"expected a vector of {self.size} parameters, got {theta.shape}")
        return [theta[s.offset:s.offset + s.size].reshape(s.shape) for s in self.segments]

    def describe(self) -> list[list]:
        return [[s.name, list(s.shape), s.offset] for s in self.segments]


def log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


class MLP:
    """LeakyReLU MLP with soft-label cross-entropy, averaged over the batch."""

    def __init__(self, spec: ModelSpec = ModelSpec()):
        self.spec = spec
        self.layout = ParamLayout.for_spec(spec)

    @property
    def n_params(self) -> int:
        return self.layout.size

    def init(self, rng: np.random.Generator) -> np.ndarray:
        theta = np.zeros(self.n_params)
        for seg in self.layout.segments:
            if seg.name.startswith("W"):
                fan_in = seg.shape[0]
                bound = np.sqrt(6.0 / fan_in)
                theta[seg.offset:seg.offset + seg.size] = rng.uniform(-bound, bound, seg.size)
        return theta

    def _layers(self, theta):
        parts = self.layout.unpack(np.asarray(theta, dtype=np.float64))
        return list(zip(parts[0::2], parts[1::2]))

    def logits(self, theta: np.ndarray, features: np.ndarray) -> np.ndarray:
        h = np.atleast_2d(np.asarray(features, dtype=np.float64))
        layers = self._layers(theta)
        s = self.spec.leaky_slope
        for i, (W, b) in enumerate(layers):
            z = h @ W + b
            h = np.where(z > 0, z, s * z) if i < len(layers) - 1 else z
        return h

    def scores(self, theta: np.ndarray, features: np.ndarray) -> np.ndarray:
        """Detection score: logit(bonafide) - logit(spoof)."""
        z = self.logits(theta, features)
        return z[:, 0] - z[:, 1]

    def _sweep(self, theta, batch: Batch, v=None, need_grad=True):
        X, Y = batch.features, batch.labels
        n = X.shape[0]
        s = self.spec.leaky_slope
        layers = self._layers(theta)
        tl = self._layers(v) if v is not None else None
        L = len(layers)

        hs, zs, rhs = [X], [], [np.zeros_like(X)]
        h, rh = X, rhs[0]
        for i, (W, b) in enumerate(layers):
            z = h @ W + b
            if tl is not None:
                rz = rh @ W + h @ tl[i][0] + tl[i][1]
            zs.append(z)
            if i < L - 1:
                d = np.where(z > 0, 1.0, s)
                h = z * d
                hs.append(h)
                if tl is not None:
                    rh = rz * d
                    rhs.append(rh)

        logits = zs[-1]
        if not np.all(np.isfinite(logits)):
            raise NumericError("non-finite logits", max_abs_param=float(np.max(np.abs(theta))))
        logp = log_softmax(logits)
        loss = float(-(Y * logp).sum() / n)
        if not np.isfinite(loss):
            raise NumericError("non-finite loss", min_logp=float(logp.min()))
        if not need_grad:
            return loss, None, None

        p = np.exp(logp)
        ysum = Y.sum(axis=1, keepdims=True)
        delta = (p * ysum - Y) / n
        rdelta = None
        if tl is not None:
            rp = p * (rz - (p * rz).sum(axis=1, keepdims=True))
            rdelta = rp * ysum / n

        grads = [None] * L
        rgrads = [None] * L
        for i in range(L - 1, -1, -1):
            W = layers[i][0]
            grads[i] = (hs[i].T @ delta, delta.sum(axis=0))
            if tl is not None:
                rgrads[i] = (rhs[i].T @ delta + hs[i].T @ rdelta, rdelta.sum(axis=0))
            if i > 0:
                d = np.where(zs[i - 1] > 0, 1.0, s)
                dh = delta @ W.T
                if tl is not None:
                    rdelta = (rdelta @ W.T + delta @ tl[i][0].T) * d
                delta = dh * d

        g = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])
        hv = None
        if tl is not None:
            hv = np.concatenate([np.concatenate([a.ravel(), b]) for a, b in rgrads])
        return loss, g, hv

    def loss(self, theta, batch: Batch) -> float:
        return self._sweep(theta, batch, need_grad=False)[0]

    def grad(self, theta, batch: Batch) -> np.ndarray:
        return self._sweep(theta, batch)[1]

    def loss_and_grad(self, theta, batch: Batch) -> tuple[float, np.ndarray]:
        loss, g, _ = self._sweep(theta, batch)
        return loss, g

    def hvp(self, theta, batch: Batch, v, mode: str = "exact") -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n_params,):
            raise ValueError(f"direction has shape {v.shape}, expected ({self.n_params},)")
        if mode == "fd":
            return fd_hvp(self, theta, batch, v)
        if mode != "exact":
            raise ValueError(f"unknown hvp mode {mode!r}")
        return self._sweep(theta, batch, v=v)[2]


def one_hot(is_bonafide) -> np.ndarray:
    """Soft-label rows ``[bonafide, spoof]``."""
    b = np.asarray(is_bonafide, dtype=bool).reshape(-1)
    return np.stack([b, ~b], axis=1).astype(np.float64)
