"""Optimizers: SGD with classical momentum, and Adam.

The landmark features are min-max scaled into [0, 1] and therefore
uncentered; the resulting error surface has a dominant common-mode
direction on which plain SGD either crawls or oscillates. Adam is the
default in the training harness for that reason; sgd_step remains fully
supported and tested.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import GradientSet, ParameterSet


def sgd_step(
    params: ParameterSet,
    grads: GradientSet,
    lr: float,
    momentum: float,
    state: ParameterSet,
) -> ParameterSet:
    """v <- momentum * v + g; p <- p - lr * v. Updates in place.

    ``state`` holds the velocities (start from ``params.zeros_like()``).
    lr = 0 is allowed and leaves the parameters bit-identical, which the
    training harness relies on for its no-op control runs.
    """
    if lr < 0:
        raise ValueError(f"learning rate must be >= 0, got {lr}")
    if not 0.0 <= momentum < 1.0:
        raise ValueError(f"momentum must be in [0, 1), got {momentum}")
    if not params.congruent_with(grads) or not params.congruent_with(state):
        raise ValueError("params, grads, and state must be shape-congruent")
    for (_, _, p), (_, _, g), (_, _, v) in zip(
        params.iter_tensors(), grads.iter_tensors(), state.iter_tensors()
    ):
        v *= v.dtype.type(momentum)
        v += g
        p -= p.dtype.type(lr) * v
    return params


@dataclass
class AdamState:
    step: int
    m: ParameterSet
    v: ParameterSet

    @classmethod
    def for_params(cls, params: ParameterSet) -> "AdamState":
        return cls(step=0, m=params.zeros_like(), v=params.zeros_like())


def adam_step(
    params: ParameterSet,
    grads: GradientSet,
    lr: float,
    state: AdamState,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> ParameterSet:
    """Bias-corrected Adam update, in place."""
    if lr < 0:
        raise ValueError(f"learning rate must be >= 0, got {lr}")
    if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
        raise ValueError("betas must be in [0, 1)")
    if not params.congruent_with(grads) or not params.congruent_with(state.m):
        raise ValueError("params, grads, and state must be shape-congruent")
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for (i, name, p), (_, _, g) in zip(params.iter_tensors(), grads.iter_tensors()):
        m = state.m.by_layer[i][name]
        v = state.v.by_layer[i][name]
        m *= m.dtype.type(beta1)
        m += m.dtype.type(1.0 - beta1) * g
        v *= v.dtype.type(beta2)
        v += v.dtype.type(1.0 - beta2) * (g * g)
        update = (m / m.dtype.type(c1)) / (np.sqrt(v / v.dtype.type(c2)) + p.dtype.type(eps))
        p -= p.dtype.type(lr) * update
    return params
