"""Adam with bias correction and the cosine-annealing learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def init(cls, params: dict) -> "AdamState":
        return cls(
            step=0,
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(
    params: dict,
    grads: dict,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    inplace: bool = False,
) -> tuple[dict, AdamState]:
    """One bias-corrected Adam update; returns new params and new state.

    inplace=True mutates the given params/state buffers (the training loop
    owns them); the default returns fresh arrays.
    """
    if set(grads) != set(params) or set(state.m) != set(params):
        raise PreconditionError("params, grads, and state must share the same groups")
    t = state.step + 1
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    new_params = params if inplace else {}
    new_m = state.m if inplace else {}
    new_v = state.v if inplace else {}
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.shape:
            raise PreconditionError(
                f"gradient for {k!r} has shape {g.shape}, parameter has {p.shape}"
            )
        if inplace:
            m, v = state.m[k], state.v[k]
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
        else:
            m = beta1 * state.m[k] + (1.0 - beta1) * g
            v = beta2 * state.v[k] + (1.0 - beta2) * g * g
            new_params[k] = p - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
            new_m[k] = m
            new_v[k] = v
    if inplace:
        state.step = t
        return params, state
    return new_params, AdamState(step=t, m=new_m, v=new_v)


def cosine_lr(epoch: int, lr0: float, eta_min: float, epochs: int) -> float:
    """eta_min + 0.5*(lr0 - eta_min)*(1 + cos(pi * epoch / (epochs - 1)));
    hits lr0 at epoch 0 and eta_min at the final epoch."""
    if not 0 <= epoch < epochs:
        raise PreconditionError(f"epoch {epoch} outside [0, {epochs})")
    if epochs == 1:
        return lr0
    return eta_min + 0.5 * (lr0 - eta_min) * (1.0 + np.cos(np.pi * epoch / (epochs - 1)))
