"""Gradient-based fitting of the response model.

Two entry points:

* update_knowledge_state: refit theta only, holding item parameters fixed,
  against a user's cumulative response history (runs every dialogue turn).
* calibrate_item_bank: joint full-batch fit of per-user theta and per-item
  (a, b) from an interaction log, with a projected to stay nonnegative.

CeirtCalibrator wraps the joint fit in a scikit-learn estimator so the
model composes with the usual tooling (get_params, clone, metrics).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .adam import Adam
from .errors import ArgumentError, DimensionError, NumericError
from .irt import (
    PROB_CLAMP,
    ItemParameters,
    KnowledgeState,
    OptimizerConfig,
    ResponseRecord,
    sigmoid,
)


def _clamp_probs(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


def _bce(p: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))


def update_knowledge_state(
    theta: KnowledgeState,
    history: list[ResponseRecord],
    cfg: OptimizerConfig,
) -> KnowledgeState:
    """Run cfg.epochs Adam steps on theta against the mean BCE over history.

    Item parameters are read-only here. Deterministic: no randomness is
    consumed, so identical inputs give bitwise-identical output.
    """
    if not history:
        raise ArgumentError("history must be nonempty")
    k = theta.k
    a = np.stack([rec.params.a for rec in history])  # (N, K)
    b_sum = np.array([float(np.sum(rec.params.b)) for rec in history])  # (N,)
    y = np.array([float(rec.outcome) for rec in history])

    opt = Adam({"theta": theta.theta}, lr=cfg.learning_rate,
               beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.epsilon_num)
    for step in range(cfg.epochs):
        t = opt.params["theta"]
        p = _clamp_probs(sigmoid(a @ t - b_sum))
        grad = ((p - y)[:, None] * a).mean(axis=0)
        opt.step({"theta": grad})
        if not np.all(np.isfinite(opt.params["theta"])):
            raise NumericError(f"non-finite theta at update step {step}")
    return KnowledgeState(theta=opt.params["theta"])


@dataclass(frozen=True)
class CalibrationResult:
    """Fitted parameters plus the per-epoch loss trace."""

    user_ids: list
    item_ids: list
    theta: np.ndarray  # (U, K)
    a: np.ndarray  # (I, K)
    b: np.ndarray  # (I, K)
    loss_history: list[float] = field(default_factory=list)
    degenerate_items: list = field(default_factory=list)

    @property
    def initial_loss(self) -> float:
        return self.loss_history[0]

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1]

    def theta_for(self, user_id) -> KnowledgeState:
        return KnowledgeState(theta=self.theta[self.user_ids.index(user_id)])

    def params_for(self, item_id) -> ItemParameters:
        i = self.item_ids.index(item_id)
        return ItemParameters(a=self.a[i], b=self.b[i])


def calibrate_item_bank(
    responses,
    n_concepts: int,
    cfg: OptimizerConfig,
    item_concepts: dict | None = None,
) -> CalibrationResult:
    """Jointly fit user abilities and item parameters by full-batch Adam.

    responses is an iterable of (user_id, item_id, outcome) triples with
    outcome in {0, 1}. item_concepts optionally maps item_id to the concept
    indices the item assesses; parameters only move on those components
    (a starts at 1 there, b at small noise, both 0 elsewhere). Discrimination
    is clamped at 0 after every step.

    Index assignment sorts ids, so permuting the input order changes the
    fitted loss only by float-summation noise (< 1e-9).
    """
    triples = list(responses)
    if not triples:
        raise ArgumentError("responses must be nonempty")
    if n_concepts < 1:
        raise ArgumentError("n_concepts must be >= 1")
    for u, i, y in triples:
        if y not in (0, 1):
            raise ArgumentError(f"outcome for user {u!r}, item {i!r} must be 0 or 1")

    user_ids = sorted({u for u, _, _ in triples}, key=str)
    item_ids = sorted({i for _, i, _ in triples}, key=str)
    u_index = {u: n for n, u in enumerate(user_ids)}
    i_index = {i: n for n, i in enumerate(item_ids)}
    n_users, n_items = len(user_ids), len(item_ids)

    ui = np.array([u_index[u] for u, _, _ in triples])
    ii = np.array([i_index[i] for _, i, _ in triples])
    y = np.array([float(o) for _, _, o in triples])
    n_obs = len(triples)

    mask = np.zeros((n_items, n_concepts))
    if item_concepts is None:
        mask[:] = 1.0
    else:
        for item_id, cols in item_concepts.items():
            if item_id not in i_index:
                continue
            for j in cols:
                if not 0 <= j < n_concepts:
                    raise ArgumentError(f"concept index {j} out of range for item {item_id!r}")
                mask[i_index[item_id], j] = 1.0
        if np.any(mask.sum(axis=1) == 0):
            missing = [item_ids[i] for i in np.flatnonzero(mask.sum(axis=1) == 0)]
            raise ArgumentError(f"items without concept tags: {missing}")

    rng = np.random.default_rng(cfg.seed)
    theta0 = rng.normal(0.0, 0.1, size=(n_users, n_concepts))
    a0 = mask.copy()
    b0 = mask * rng.normal(0.0, 0.1, size=(n_items, n_concepts))

    degenerate = []
    for item_id in item_ids:
        outcomes = {o for _, i, o in triples if i == item_id}
        if len(outcomes) == 1:
            degenerate.append(item_id)

    opt = Adam({"theta": theta0, "a": a0, "b": b0}, lr=cfg.learning_rate,
               beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.epsilon_num)
    loss_history = []

    def forward():
        theta, a, b = opt.params["theta"], opt.params["a"], opt.params["b"]
        z = np.einsum("nk,nk->n", a[ii], theta[ui]) - b[ii].sum(axis=1)
        return _clamp_probs(sigmoid(z))

    for step in range(cfg.epochs):
        p = forward()
        loss_history.append(_bce(p, y))
        resid = (p - y) / n_obs
        theta, a = opt.params["theta"], opt.params["a"]

        g_theta = np.zeros_like(theta)
        np.add.at(g_theta, ui, resid[:, None] * a[ii])
        g_a = np.zeros_like(a)
        np.add.at(g_a, ii, resid[:, None] * theta[ui])
        g_a *= mask
        g_b = np.zeros((n_items, n_concepts))
        np.add.at(g_b, ii, np.repeat(-resid[:, None], n_concepts, axis=1))
        g_b *= mask

        opt.step({"theta": g_theta, "a": g_a, "b": g_b})
        np.maximum(opt.params["a"], 0.0, out=opt.params["a"])
        if not all(np.all(np.isfinite(v)) for v in opt.params.values()):
            raise NumericError(f"non-finite parameter at calibration step {step}")

    loss_history.append(_bce(forward(), y))
    return CalibrationResult(
        user_ids=user_ids,
        item_ids=item_ids,
        theta=opt.params["theta"],
        a=opt.params["a"],
        b=opt.params["b"],
        loss_history=loss_history,
        degenerate_items=degenerate,
    )


class CeirtCalibrator(BaseEstimator):
    """Scikit-learn estimator over (user, item) -> correctness observations.

    X is an (n, 2) array-like of (user_id, item_id) pairs and y the binary
    outcomes. After fit, fitted abilities and item parameters are exposed as
    user_theta_, item_discrimination_, item_difficulty_.
    """

    def __init__(self, n_concepts=1, learning_rate=0.01, beta1=0.9, beta2=0.999,
                 epsilon_num=1e-8, epochs=200, seed=0, item_concepts=None):
        self.n_concepts = n_concepts
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon_num = epsilon_num
        self.epochs = epochs
        self.seed = seed
        self.item_concepts = item_concepts

    def fit(self, X, y):
        pairs = self._as_pairs(X)
        y = list(y)
        if len(y) != len(pairs):
            raise DimensionError(f"X has {len(pairs)} rows but y has {len(y)}")
        cfg = OptimizerConfig(
            learning_rate=self.learning_rate, beta1=self.beta1, beta2=self.beta2,
            epsilon_num=self.epsilon_num, epochs=self.epochs, seed=self.seed,
        )
        result = calibrate_item_bank(
            [(u, i, int(o)) for (u, i), o in zip(pairs, y)],
            n_concepts=self.n_concepts, cfg=cfg, item_concepts=self.item_concepts,
        )
        self.result_ = result
        self.user_ids_ = result.user_ids
        self.item_ids_ = result.item_ids
        self.user_theta_ = result.theta
        self.item_discrimination_ = result.a
        self.item_difficulty_ = result.b
        self.final_loss_ = result.final_loss
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X):
        self._check_fitted()
        pairs = self._as_pairs(X)
        u_index = {u: n for n, u in enumerate(self.user_ids_)}
        i_index = {i: n for n, i in enumerate(self.item_ids_)}
        probs = np.empty((len(pairs), 2))
        for n, (u, i) in enumerate(pairs):
            if u not in u_index:
                raise LookupError(f"unknown user id {u!r}")
            if i not in i_index:
                raise LookupError(f"unknown item id {i!r}")
            z = float(
                self.item_discrimination_[i_index[i]] @ self.user_theta_[u_index[u]]
                - self.item_difficulty_[i_index[i]].sum()
            )
            p = float(np.clip(sigmoid(z), PROB_CLAMP, 1.0 - PROB_CLAMP))
            probs[n] = (1.0 - p, p)
        return probs

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)

    def _check_fitted(self):
        if not hasattr(self, "result_"):
            raise NotFittedError("CeirtCalibrator is not fitted; call fit first")

    @staticmethod
    def _as_pairs(X):
        pairs = [tuple(row) for row in X]
        for row in pairs:
            if len(row) != 2:
                raise DimensionError("X rows must be (user_id, item_id) pairs")
        return pairs
