"""Minimal Adam optimizer over named numpy parameter arrays.

Update rule (bias-corrected moments):

    m_t = b1*m + (1-b1)*g          v_t = b2*v + (1-b2)*g^2
    p  -= lr * (m_t/(1-b1^t)) / (sqrt(v_t/(1-b2^t)) + eps)
"""
from __future__ import annotations

import numpy as np


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {k: np.zeros_like(v) for k, v in self.params.items()}
        self._v = {k: np.zeros_like(v) for k, v in self.params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        """Apply one update from the given gradients; returns the live params."""
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for key, g in grads.items():
            m = self._m[key]
            v = self._v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / bc1
            v_hat = v / bc2
            self.params[key] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return self.params
