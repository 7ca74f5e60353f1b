"""Unsupervised candidate adaptation over a discretized hyper-parameter pool.

Two adaptation losses are supported: entropy minimization restricted to the
normalization affine parameters ("tent") and thresholded pseudo-label
cross-entropy over all parameters ("pl"). Each pool entry yields one
candidate model per batch; candidates fork from the previously selected
model by default.
"""

from __future__ import annotations

from dataclasses import dataclass

from .net import MASK_NORM, ModelParams, entropy_loss_grad, pl_loss_grad, sgd_step

METHOD_TENT = "tent"
METHOD_PL = "pl"
METHODS = (METHOD_TENT, METHOD_PL)

# Search spaces, one value grid per tunable hyper-parameter.
TENT_LR_POOL = (5e-5, 1e-4, 2.5e-4, 5e-4, 1e-3, 2.5e-3, 5e-3)
PL_TAU_POOL = (0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0)
# Joint (learning rate x threshold) grid for dual selection.
DUAL_LR_POOL = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)
DUAL_TAU_POOL = (0.1, 0.2, 0.4, 0.6, 0.8)


@dataclass(frozen=True)
class HyperParam:
    """One candidate setting; lr and/or tau depending on the method."""

    lr: float | None = None
    tau: float | None = None

    def __post_init__(self):
        if self.lr is None and self.tau is None:
            raise ValueError("a hyper-parameter needs at least one of lr, tau")
        if self.lr is not None and self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.tau is not None and not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")

    def label(self) -> str:
        parts = []
        if self.lr is not None:
            parts.append(f"lr={self.lr:g}")
        if self.tau is not None:
            parts.append(f"tau={self.tau:g}")
        return ",".join(parts)


@dataclass(frozen=True)
class CandidatePool:
    method: str
    entries: tuple[HyperParam, ...]

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method '{self.method}' (expected one of {METHODS})")
        if len(self.entries) != len(set(self.entries)):
            raise ValueError("pool entries must be distinct")
        if not self.entries:
            raise ValueError("pool must not be empty")

    def __len__(self) -> int:
        return len(self.entries)


def default_pool(method: str) -> CandidatePool:
    if method == METHOD_TENT:
        return CandidatePool(method, tuple(HyperParam(lr=v) for v in TENT_LR_POOL))
    if method == METHOD_PL:
        return CandidatePool(method, tuple(HyperParam(tau=v) for v in PL_TAU_POOL))
    raise ValueError(f"unknown method '{method}'")


def dual_pool() -> CandidatePool:
    """Cartesian (lr, tau) grid for selecting two hyper-parameters at once."""
    entries = tuple(
        HyperParam(lr=lr, tau=tau) for lr in DUAL_LR_POOL for tau in DUAL_TAU_POOL
    )
    return CandidatePool(METHOD_PL, entries)


def pool_from_values(method: str, values: list[float]) -> CandidatePool:
    if method == METHOD_TENT:
        return CandidatePool(method, tuple(HyperParam(lr=v) for v in values))
    return CandidatePool(method, tuple(HyperParam(tau=v) for v in values))


def adapt_candidate(
    params: ModelParams,
    x_unlabeled,
    hp: HyperParam,
    method: str,
    steps: int = 1,
    pl_lr: float = 1e-3,
) -> ModelParams:
    """Run `steps` gradient steps of the method's loss on the unlabeled subset.

    Returns a fresh candidate; `params` is never mutated. steps=0 returns
    `params` itself (bit-exact no-op). Non-finite gradients propagate as
    NonFiniteGradientError for the caller to handle.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    current = params
    for _ in range(steps):
        if method == METHOD_TENT:
            if hp.lr is None:
                raise ValueError("tent candidates need a learning rate")
            _, grads = entropy_loss_grad(current, x_unlabeled, mask=MASK_NORM)
            current = sgd_step(current, grads, hp.lr)
        elif method == METHOD_PL:
            if hp.tau is None:
                raise ValueError("pl candidates need an entropy threshold")
            lr = hp.lr if hp.lr is not None else pl_lr
            _, grads = pl_loss_grad(current, x_unlabeled, hp.tau)
            current = sgd_step(current, grads, lr)
        else:
            raise ValueError(f"unknown method '{method}'")
    return current
