"""Named trainable parameters with gradient and Adam moment buffers."""

from dataclasses import dataclass

import numpy as np


@dataclass
class Param:
    value: np.ndarray
    grad: np.ndarray
    m: np.ndarray
    v: np.ndarray


class ParamStore:
    def __init__(self):
        self._params = {}
        self.step = 0

    def add(self, name, value):
        if name in self._params:
            raise KeyError(f"parameter {name!r} already exists")
        value = np.array(value, dtype=np.float64)
        self._params[name] = Param(
            value, np.zeros_like(value), np.zeros_like(value), np.zeros_like(value)
        )
        return value

    def __getitem__(self, name):
        return self._params[name].value

    def __contains__(self, name):
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def param(self, name):
        return self._params[name]

    def items(self):
        return self._params.items()

    def values(self):
        return {name: p.value for name, p in self._params.items()}

    def accumulate(self, grads, prefix=""):
        for key, g in grads.items():
            self._params[prefix + key].grad += g

    def zero_grad(self):
        for p in self._params.values():
            p.grad.fill(0.0)

    def n_values(self):
        return sum(p.value.size for p in self._params.values())


def adam_step(store, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8, t=None):
    """Apply one bias-corrected Adam update from the stored gradients.

    ``t`` is the 1-based step index; by default the store's own counter is
    advanced and used.
    """
    if t is None:
        store.step += 1
        t = store.step
    else:
        store.step = t
    if t < 1:
        raise ValueError(f"adam step index must be >= 1, got {t}")
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for p in store._params.values():
        g = p.grad
        p.m *= beta1
        p.m += (1.0 - beta1) * g
        p.v *= beta2
        p.v += (1.0 - beta2) * g * g
        p.value -= lr * (p.m / c1) / (np.sqrt(p.v / c2) + eps)
    return store
