"""Small two-layer classifier with a batch-statistics normalization layer.

Architecture: input -> linear -> relu -> per-unit standardization over the
batch -> affine (gamma, beta_n) -> linear -> softmax. The affine pair
(gamma, beta_n) is what entropy-minimization adaptation updates; all losses
come with analytic gradients that backpropagate through the batch
statistics, checked against finite differences in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PROB_FLOOR, LabeledExample, format_float

VAR_EPS = 1e-5

PARAM_FIELDS = ("w1", "b1", "gamma", "beta_n", "w_out", "b_out")

MASK_ALL = "all"
MASK_NORM = "norm"  # gradients restricted to (gamma, beta_n)


class NonFiniteGradientError(ValueError):
    """Raised by sgd_step when a gradient block contains nan/inf."""

    def __init__(self, block: str):
        super().__init__(f"non-finite gradient in parameter block '{block}'")
        self.block = block


class PretrainError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """All trainable weights; treated as an immutable value everywhere."""

    w1: np.ndarray      # (D, H)
    b1: np.ndarray      # (H,)
    gamma: np.ndarray   # (H,) normalization scale
    beta_n: np.ndarray  # (H,) normalization shift
    w_out: np.ndarray   # (H, C)
    b_out: np.ndarray   # (C,)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.w1.shape[0], self.w1.shape[1], self.w_out.shape[1]

    def blocks(self):
        return [(name, getattr(self, name)) for name in PARAM_FIELDS]


# Gradients share the parameter layout; a separate name keeps call sites readable.
Grads = ModelParams


@dataclass(frozen=True)
class RunningStats:
    """Source-domain activation statistics, the batch-size-1 fallback."""

    mean: np.ndarray  # (H,)
    var: np.ndarray   # (H,)


@dataclass(frozen=True)
class ForwardCache:
    z: np.ndarray          # (N, H) pre-activations
    a: np.ndarray          # (N, H) post-relu
    mean: np.ndarray       # (H,) statistics actually used
    var: np.ndarray        # (H,)
    inv_std: np.ndarray    # (H,)
    a_hat: np.ndarray      # (N, H) standardized activations
    features: np.ndarray   # (N, H) penultimate features gamma * a_hat + beta_n
    logits: np.ndarray     # (N, C)
    probs: np.ndarray      # (N, C)
    batch_stats: bool


def init_params(input_dim: int, hidden_dim: int, num_classes: int, rng: np.random.Generator) -> ModelParams:
    w1 = rng.normal(0.0, math.sqrt(2.0 / input_dim), size=(input_dim, hidden_dim))
    w_out = rng.normal(0.0, math.sqrt(1.0 / hidden_dim), size=(hidden_dim, num_classes))
    return ModelParams(
        w1=w1,
        b1=np.zeros(hidden_dim),
        gamma=np.ones(hidden_dim),
        beta_n=np.zeros(hidden_dim),
        w_out=w_out,
        b_out=np.zeros(num_classes),
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward_batch(
    params: ModelParams,
    x: np.ndarray,
    running: RunningStats | None = None,
    freeze_stats: bool = False,
) -> ForwardCache:
    """Forward pass; batch statistics when N >= 2, running statistics for N = 1.

    `freeze_stats` forces the provided `running` statistics regardless of
    batch size (used when a small labeled subset should be normalized with
    the statistics of its full surrounding batch). The returned `features`
    rows are exactly the penultimate embeddings the annotation-selection
    math consumes.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected a (N, D) input matrix")
    n = x.shape[0]
    z = x @ params.w1 + params.b1
    a = np.maximum(z, 0.0)
    if n >= 2 and not freeze_stats:
        mean = a.mean(axis=0)
        var = a.var(axis=0)  # biased (1/N), invariant under sample duplication
        batch_stats = True
    else:
        if running is None:
            raise ValueError("normalization without batch statistics requires running statistics")
        mean, var = running.mean, running.var
        batch_stats = False
    inv_std = 1.0 / np.sqrt(var + VAR_EPS)
    a_hat = (a - mean) * inv_std
    features = params.gamma * a_hat + params.beta_n
    logits = features @ params.w_out + params.b_out
    probs = softmax(logits)
    return ForwardCache(z, a, mean, var, inv_std, a_hat, features, logits, probs, batch_stats)


def _backward(params: ModelParams, x: np.ndarray, cache: ForwardCache, d_logits: np.ndarray) -> Grads:
    """Backpropagate d(loss)/d(logits) to every parameter block.

    When batch statistics were used, mean and variance are functions of the
    batch and the chain rule picks up the usual three-term correction.
    """
    d_w_out = cache.features.T @ d_logits
    d_b_out = d_logits.sum(axis=0)
    d_features = d_logits @ params.w_out.T
    d_gamma = (d_features * cache.a_hat).sum(axis=0)
    d_beta = d_features.sum(axis=0)
    d_a_hat = d_features * params.gamma
    if cache.batch_stats:
        n = x.shape[0]
        d_a = (cache.inv_std / n) * (
            n * d_a_hat - d_a_hat.sum(axis=0) - cache.a_hat * (d_a_hat * cache.a_hat).sum(axis=0)
        )
    else:
        d_a = d_a_hat * cache.inv_std
    d_z = d_a * (cache.z > 0.0)
    d_w1 = x.T @ d_z
    d_b1 = d_z.sum(axis=0)
    return Grads(w1=d_w1, b1=d_b1, gamma=d_gamma, beta_n=d_beta, w_out=d_w_out, b_out=d_b_out)


def _apply_mask(grads: Grads, mask: str) -> Grads:
    if mask == MASK_ALL:
        return grads
    if mask == MASK_NORM:
        return Grads(
            w1=np.zeros_like(grads.w1),
            b1=np.zeros_like(grads.b1),
            gamma=grads.gamma,
            beta_n=grads.beta_n,
            w_out=np.zeros_like(grads.w_out),
            b_out=np.zeros_like(grads.b_out),
        )
    raise ValueError(f"unknown parameter mask '{mask}'")


def ce_loss_grad(
    params: ModelParams,
    x: np.ndarray,
    y: np.ndarray,
    running: RunningStats | None = None,
    freeze_stats: bool = False,
) -> tuple[float, Grads]:
    """Mean cross-entropy -ln p_y over the labeled examples, with gradient."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("cross-entropy needs at least one labeled example")
    cache = forward_batch(params, x, running, freeze_stats=freeze_stats)
    n = x.shape[0]
    picked = cache.probs[np.arange(n), y]
    loss = float(-np.log(np.clip(picked, PROB_FLOOR, 1.0)).mean())
    d_logits = cache.probs.copy()
    d_logits[np.arange(n), y] -= 1.0
    d_logits /= n
    return loss, _backward(params, x, cache, d_logits)


def entropy_loss_grad(
    params: ModelParams,
    x: np.ndarray,
    mask: str = MASK_NORM,
    running: RunningStats | None = None,
) -> tuple[float, Grads]:
    """Mean posterior entropy with gradient restricted to `mask`."""
    x = np.asarray(x, dtype=np.float64)
    cache = forward_batch(params, x, running)
    n = x.shape[0]
    logp = np.log(np.clip(cache.probs, PROB_FLOOR, 1.0))
    per_sample = -(cache.probs * logp).sum(axis=1)
    loss = float(per_sample.mean())
    # dH/du_k = -p_k (ln p_k + H) per sample
    d_logits = -cache.probs * (logp + per_sample[:, None]) / n
    return loss, _apply_mask(_backward(params, x, cache, d_logits), mask)


def pl_loss_grad(
    params: ModelParams,
    x: np.ndarray,
    tau: float,
    running: RunningStats | None = None,
) -> tuple[float, Grads]:
    """Pseudo-label cross-entropy over samples below the entropy gate.

    A sample participates when its posterior entropy is < tau * ln(C); its
    argmax class is used as a constant target (no gradient through the
    argmax or the gate). With no participating sample the loss and gradient
    are exactly zero.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must lie in (0, 1]")
    x = np.asarray(x, dtype=np.float64)
    cache = forward_batch(params, x, running)
    c = cache.probs.shape[1]
    logp = np.log(np.clip(cache.probs, PROB_FLOOR, 1.0))
    ent = -(np.where(cache.probs > 0, cache.probs * logp, 0.0)).sum(axis=1)
    passing = ent < tau * math.log(c)
    n_pass = int(passing.sum())
    if n_pass == 0:
        zero = Grads(*(np.zeros_like(b) for _, b in params.blocks()))
        return 0.0, zero
    yhat = cache.probs.argmax(axis=1)
    rows = np.flatnonzero(passing)
    loss = float(-logp[rows, yhat[rows]].mean())
    d_logits = np.zeros_like(cache.probs)
    d_logits[rows] = cache.probs[rows]
    d_logits[rows, yhat[rows]] -= 1.0
    d_logits /= n_pass
    return loss, _backward(params, x, cache, d_logits)


def sgd_step(params: ModelParams, grads: Grads, lr: float) -> ModelParams:
    """One plain gradient step; returns a fresh value, inputs untouched."""
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    new = {}
    for name, block in grads.blocks():
        if not np.all(np.isfinite(block)):
            raise NonFiniteGradientError(name)
        new[name] = getattr(params, name) - lr * block
    return ModelParams(**new)


def params_digest(params: ModelParams) -> bytes:
    """Stable byte digest, used to assert the frozen anchor never mutates."""
    import hashlib

    h = hashlib.sha256()
    for name, block in params.blocks():
        h.update(name.encode())
        h.update(np.ascontiguousarray(block, dtype=np.float64).tobytes())
    return h.digest()


def capture_running_stats(params: ModelParams, x: np.ndarray) -> RunningStats:
    """Activation mean/variance over a reference set (the source data)."""
    z = np.asarray(x, dtype=np.float64) @ params.w1 + params.b1
    a = np.maximum(z, 0.0)
    return RunningStats(mean=a.mean(axis=0), var=a.var(axis=0))


def accuracy(params: ModelParams, x: np.ndarray, y: np.ndarray, running: RunningStats | None = None) -> float:
    cache = forward_batch(params, x, running)
    return float((cache.probs.argmax(axis=1) == y).mean())


def pretrain_source(
    x: np.ndarray,
    y: np.ndarray,
    hidden_dim: int,
    num_classes: int,
    rng: np.random.Generator,
    lr: float = 0.5,
    target_acc: float = 0.98,
    max_epochs: int = 2000,
    min_acc: float = 0.90,
) -> tuple[ModelParams, RunningStats]:
    """Full-batch gradient descent on the source set.

    Stops once training accuracy reaches `target_acc` (or after
    `max_epochs`); raises PretrainError below `min_acc`, which indicates a
    degenerate generator configuration rather than an optimization bug.
    Running statistics are captured from the final weights over the whole
    source set.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    params = init_params(x.shape[1], hidden_dim, num_classes, rng)
    acc = accuracy(params, x, y)
    for _ in range(max_epochs):
        if acc >= target_acc:
            break
        _, grads = ce_loss_grad(params, x, y)
        params = sgd_step(params, grads, lr)
        acc = accuracy(params, x, y)
    if acc < min_acc:
        raise PretrainError(
            f"source pretraining stalled at accuracy {acc:.3f} < {min_acc:.2f}; "
            "the generator configuration is likely degenerate"
        )
    return params, capture_running_stats(params, x)


def labeled_to_arrays(examples: list[LabeledExample]) -> tuple[np.ndarray, np.ndarray]:
    x = np.stack([ex.x for ex in examples]).astype(np.float64)
    y = np.array([ex.y for ex in examples], dtype=np.int64)
    return x, y


MODEL_MAGIC = "#hiltta-model v1"


def _write_block(fh, name: str, arr: np.ndarray) -> None:
    fh.write(name + "\n")
    mat = np.atleast_2d(np.asarray(arr, dtype=np.float64))
    for row in mat:
        fh.write(" ".join(format_float(v) for v in row) + "\n")


def save_model(path, params: ModelParams, running: RunningStats) -> None:
    d, h, c = params.dims
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(MODEL_MAGIC + "\n")
        fh.write(f"D={d} H={h} C={c}\n")
        for name, block in params.blocks():
            _write_block(fh, name, block)
        _write_block(fh, "running_mean", running.mean)
        _write_block(fh, "running_var", running.var)


def load_model(path) -> tuple[ModelParams, RunningStats]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != MODEL_MAGIC:
        raise ValueError(f"{path}: not a model checkpoint (missing '{MODEL_MAGIC}')")
    dims = dict(part.split("=") for part in lines[1].split())
    d, h, c = int(dims["D"]), int(dims["H"]), int(dims["C"])
    shapes = {
        "w1": (d, h),
        "b1": (1, h),
        "gamma": (1, h),
        "beta_n": (1, h),
        "w_out": (h, c),
        "b_out": (1, c),
        "running_mean": (1, h),
        "running_var": (1, h),
    }
    blocks: dict[str, np.ndarray] = {}
    i = 2
    for name, (rows, cols) in shapes.items():
        if lines[i] != name:
            raise ValueError(f"{path}: expected block '{name}' at line {i + 1}, found '{lines[i]}'")
        i += 1
        mat = np.array(
            [[float(v) for v in lines[i + r].split()] for r in range(rows)], dtype=np.float64
        )
        if mat.shape != (rows, cols):
            raise ValueError(f"{path}: block '{name}' has shape {mat.shape}, expected {(rows, cols)}")
        blocks[name] = mat
        i += rows
    params = ModelParams(
        w1=blocks["w1"],
        b1=blocks["b1"][0],
        gamma=blocks["gamma"][0],
        beta_n=blocks["beta_n"][0],
        w_out=blocks["w_out"],
        b_out=blocks["b_out"][0],
    )
    running = RunningStats(mean=blocks["running_mean"][0], var=blocks["running_var"][0])
    return params, running
