"""Concept-level two-parameter logistic response model.

A user's knowledge is a vector theta over K concepts. An item carries a
discrimination vector a and a difficulty vector b over the same concepts,
and the probability of a correct response is

    p = sigmoid( sum_j (a_j * theta_j - b_j) )

Higher theta_j means better understanding of concept j; a_j weights how
strongly the item separates users on that concept.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DimensionError, DomainError, UnknownConceptError
from .validation import as_float_vector, require_finite

# Probabilities are clamped away from {0, 1} before any log.
PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class Concept:
    concept_id: str
    name: str


@dataclass(frozen=True)
class ConceptSet:
    """Ordered, immutable set of concepts; index j of a concept is stable."""

    concepts: tuple[Concept, ...]

    def __post_init__(self):
        if len(self.concepts) < 1:
            raise ArgumentError("a concept set needs at least one concept")
        ids = [c.concept_id for c in self.concepts]
        if len(set(ids)) != len(ids):
            raise ArgumentError("concept ids must be unique")
        object.__setattr__(self, "concepts", tuple(self.concepts))

    @classmethod
    def from_pairs(cls, pairs) -> "ConceptSet":
        return cls(tuple(Concept(cid, name) for cid, name in pairs))

    @property
    def k(self) -> int:
        return len(self.concepts)

    @property
    def ids(self) -> list[str]:
        return [c.concept_id for c in self.concepts]

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.concepts]

    def index_of(self, concept_id: str) -> int:
        for j, c in enumerate(self.concepts):
            if c.concept_id == concept_id:
                return j
        raise UnknownConceptError(f"unknown concept id {concept_id!r}")

    def __contains__(self, concept_id: str) -> bool:
        return any(c.concept_id == concept_id for c in self.concepts)

    def __len__(self) -> int:
        return len(self.concepts)


@dataclass(frozen=True, eq=False)
class KnowledgeState:
    """Per-concept ability vector theta (unitless, unbounded)."""

    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", as_float_vector(self.theta, "theta"))

    @property
    def k(self) -> int:
        return int(self.theta.shape[0])

    def __eq__(self, other) -> bool:
        return isinstance(other, KnowledgeState) and np.array_equal(self.theta, other.theta)

    def __getitem__(self, j: int) -> float:
        return float(self.theta[j])

    def tolist(self) -> list[float]:
        return [float(x) for x in self.theta]


@dataclass(frozen=True, eq=False)
class ItemParameters:
    """Discrimination a (>= 0) and difficulty b, both length K."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = as_float_vector(self.a, "a")
        b = as_float_vector(self.b, "b", length=a.shape[0])
        if np.any(a < 0.0):
            raise DomainError("discrimination entries must be >= 0")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def k(self) -> int:
        return int(self.a.shape[0])

    @property
    def is_assessable(self) -> bool:
        """True when at least one discrimination entry is positive."""
        return bool(np.any(self.a > 0.0))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ItemParameters)
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
        )


@dataclass(frozen=True)
class ResponseRecord:
    """One observed (or simulated) outcome on an item."""

    item_id: str
    params: ItemParameters
    outcome: int  # 1 = correct, 0 = incorrect
    round: int = 0
    virtual: bool = False

    def __post_init__(self):
        if self.outcome not in (0, 1):
            raise ArgumentError(f"outcome must be 0 or 1, got {self.outcome!r}")
        if self.round < 0:
            raise ArgumentError("round must be >= 0")


@dataclass(frozen=True)
class OptimizerConfig:
    """Adam hyperparameters. Defaults suit per-turn theta updates."""

    learning_rate: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon_num: float = 1e-8
    epochs: int = 5
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise DomainError("learning_rate must be > 0")
        for name in ("beta1", "beta2"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise DomainError(f"{name} must lie in (0, 1)")
        if not self.epsilon_num > 0:
            raise DomainError("epsilon_num must be > 0")
        if self.epochs < 1:
            raise ArgumentError("epochs must be >= 1")

    @classmethod
    def for_calibration(cls, seed: int = 0, epochs: int = 200) -> "OptimizerConfig":
        """Defaults for joint item-bank fitting (smaller step, more epochs)."""
        return cls(learning_rate=0.01, epochs=epochs, seed=seed)


def sigmoid(z):
    """Numerically stable logistic function, elementwise."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def predict_correct(theta: KnowledgeState, params: ItemParameters) -> float:
    """Probability of a correct response, clamped into (0, 1).

    z is accumulated in concept-index order so results are reproducible
    bit-for-bit within a build.
    """
    if params.k != theta.k:
        raise DimensionError(
            f"item parameters have K={params.k} but knowledge state has K={theta.k}"
        )
    z = 0.0
    for j in range(theta.k):
        z += params.a[j] * theta.theta[j] - params.b[j]
    p = float(sigmoid(z))
    return min(max(p, PROB_CLAMP), 1.0 - PROB_CLAMP)


@dataclass(frozen=True)
class LossGradients:
    """Mean BCE loss with its gradients.

    d_theta is the gradient of the mean loss with respect to theta.
    d_a[r] and d_b[r] are the r-th record's own gradients, before the
    1/N mean aggregation.
    """

    loss: float
    d_theta: np.ndarray
    d_a: list[np.ndarray]
    d_b: list[np.ndarray]


def loss_and_gradients(theta: KnowledgeState, records: list[ResponseRecord]) -> LossGradients:
    """Binary cross-entropy over records with analytic gradients.

    loss = mean_r -[y ln p + (1-y) ln(1-p)]
    per record: dL/dtheta_j = (p-y) a_j, dL/da_j = (p-y) theta_j, dL/db_j = -(p-y)
    """
    if not records:
        raise ArgumentError("records must be nonempty")
    k = theta.k
    total = 0.0
    d_theta = np.zeros(k)
    d_a: list[np.ndarray] = []
    d_b: list[np.ndarray] = []
    for rec in records:
        if rec.params.k != k:
            raise DimensionError(
                f"record {rec.item_id!r} has K={rec.params.k}, expected {k}"
            )
        p = predict_correct(theta, rec.params)
        y = float(rec.outcome)
        total += -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
        resid = p - y
        d_theta += resid * rec.params.a
        d_a.append(resid * theta.theta)
        d_b.append(np.full(k, -resid))
    n = len(records)
    return LossGradients(loss=total / n, d_theta=d_theta / n, d_a=d_a, d_b=d_b)


def simulate_evidence(
    concept_ids,
    concept_set: ConceptSet,
    theta: KnowledgeState,
    round_index: int = 0,
) -> list[ResponseRecord]:
    """Positive proxy evidence for concepts a dialogue turn touched.

    Each concept gets one virtual correct response on an item discriminating
    only on that concept (a one-hot at 1.0) with difficulty pinned to the
    current theta there, so the evidence is maximally informative (p = 0.5
    at creation time) without inventing difficulty data.
    """
    concept_ids = list(concept_ids)
    if not concept_ids:
        raise ArgumentError("concept subset must be nonempty")
    if theta.k != concept_set.k:
        raise DimensionError(
            f"theta has K={theta.k} but concept set has K={concept_set.k}"
        )
    records = []
    for cid in concept_ids:
        j = concept_set.index_of(cid)
        a = np.zeros(concept_set.k)
        a[j] = 1.0
        b = np.zeros(concept_set.k)
        b[j] = theta.theta[j]
        records.append(
            ResponseRecord(
                item_id=f"virtual:{cid}:r{round_index}",
                params=ItemParameters(a=a, b=b),
                outcome=1,
                round=round_index,
                virtual=True,
            )
        )
    return records


def initial_knowledge_state(k: int, seed: int = 0) -> KnowledgeState:
    """Near-zero random start: theta ~ Normal(0, 0.1) keeps early p near 0.5."""
    rng = np.random.default_rng(seed)
    return KnowledgeState(theta=rng.normal(0.0, 0.1, size=k))


def render_proficiency(value: float, epsilon_low: float) -> str:
    """Banded text label for a single theta component."""
    require_finite(value, "theta component")
    if value < epsilon_low:
        return "novice"
    if value < 2.0 * epsilon_low:
        return "developing"
    return "proficient"
