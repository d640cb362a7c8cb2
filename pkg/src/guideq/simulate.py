"""Simulated-learner experiments: difficulty-gap ablation and policy races.

The learner model: answering an item of difficulty b on concept j succeeds
with probability sigmoid(a_sim * (theta*_j - b)); on a correct answer theta*_j
jumps up to b when b > theta*_j, otherwise nothing changes. The expected
single-round gain at gap g = b - theta* is therefore g * sigmoid(-a_sim * g),
which peaks near g = 1.28 - a desk-scale stand-in for the observation that
learning is fastest at a moderate challenge.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .corpus import CalibratedItem, ItemBank
from .errors import ArgumentError
from .guidance import suitability_score
from .irt import sigmoid
from .validation import as_float_vector, require_positive


@dataclass(frozen=True)
class SimulatedLearner:
    """Latent ability vector plus the response/gain dynamics parameters."""

    true_theta: np.ndarray
    a_sim: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "true_theta", as_float_vector(self.true_theta, "true_theta"))
        require_positive(self.a_sim, "a_sim")

    @property
    def k(self) -> int:
        return int(self.true_theta.shape[0])


@dataclass(frozen=True)
class AblationConfig:
    gap_grid: tuple[float, ...]
    rounds: int = 20
    seeds: tuple[int, ...] = tuple(range(20))

    def __post_init__(self):
        object.__setattr__(self, "gap_grid", tuple(float(g) for g in self.gap_grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.gap_grid:
            raise ArgumentError("gap_grid must be nonempty")
        if self.rounds < 1:
            raise ArgumentError("rounds must be >= 1")
        if not self.seeds:
            raise ArgumentError("seeds must be nonempty")


@dataclass(frozen=True)
class AblationResult:
    gaps: list[float]
    mean_gains: list[float]
    std_errs: list[float]
    n_seeds: int

    @property
    def peak_gap(self) -> float:
        return self.gaps[int(np.argmax(self.mean_gains))]

    def rows(self):
        """CSV rows: gap, mean_gain, std_err, seeds."""
        for g, m, s in zip(self.gaps, self.mean_gains, self.std_errs):
            yield g, m, s, self.n_seeds


def run_ablation(learner: SimulatedLearner, cfg: AblationConfig) -> AblationResult:
    """Sweep the difficulty-ability gap and measure cumulative knowledge gain.

    Items are always pitched at b = theta* + gap on the learner's first
    concept, so each round is a fresh draw at the same gap. Each seed reuses
    one stream of uniforms across every gap (common random numbers): the
    per-gap means stay unbiased while gap-to-gap comparisons, and hence the
    peak location, stabilize.
    """
    gaps = sorted(cfg.gap_grid)
    if not (min(gaps) < 1.0 < max(gaps)):
        raise ArgumentError("gap_grid must cover both sides of 1")
    gains = np.zeros((len(cfg.seeds), len(gaps)))
    for si, seed in enumerate(cfg.seeds):
        draws = np.random.default_rng(seed).random(cfg.rounds)
        for gi, gap in enumerate(gaps):
            theta = float(learner.true_theta[0])
            start = theta
            for t in range(cfg.rounds):
                b = theta + gap
                p = float(sigmoid(learner.a_sim * (theta - b)))
                if draws[t] < p and b > theta:
                    theta = b
            gains[si, gi] = theta - start
    mean_gains = [float(m) for m in gains.mean(axis=0)]
    if len(cfg.seeds) > 1:
        std_errs = [float(s) for s in gains.std(axis=0, ddof=1) / np.sqrt(len(cfg.seeds))]
    else:
        std_errs = [0.0] * len(gaps)
    return AblationResult(gaps=[float(g) for g in gaps], mean_gains=mean_gains,
                          std_errs=std_errs, n_seeds=len(cfg.seeds))


class Policy(str, Enum):
    SUITABILITY = "suitability"
    UNIFORM_RANDOM = "uniform_random"
    FIXED_EASIEST = "fixed_easiest"


@dataclass(frozen=True)
class PolicyTrace:
    policy: Policy
    seed: int
    theta_rounds: list[list[float]]  # rounds+1 entries, including the start
    accuracy_rounds: list[float]  # quiz accuracy after each round

    @property
    def final_mean_theta(self) -> float:
        return float(np.mean(self.theta_rounds[-1]))


@dataclass(frozen=True)
class ComparisonResult:
    traces: dict[Policy, list[PolicyTrace]] = field(default_factory=dict)

    def win_rate(self, challenger: Policy, baseline: Policy) -> float:
        """Fraction of seeds where challenger's final mean theta* wins (ties count)."""
        pairs = zip(self.traces[challenger], self.traces[baseline])
        wins = [c.final_mean_theta >= b.final_mean_theta for c, b in pairs]
        return float(np.mean(wins))


def split_quiz_set(bank: ItemBank, seed: int, fraction: float = 0.2):
    """Stratified held-out split: per concept, a seeded shuffle keeps ~fraction."""
    rng = np.random.default_rng([seed, 977])
    held, study = [], []
    by_concept: dict[str, list[CalibratedItem]] = {}
    for it in bank.items:
        by_concept.setdefault(it.concept_ids[0], []).append(it)
    for cid in sorted(by_concept):
        group = sorted(by_concept[cid], key=lambda it: it.item_id)
        order = rng.permutation(len(group))
        n_held = max(1, int(round(fraction * len(group))))
        for pos, idx in enumerate(order):
            (held if pos < n_held else study).append(group[idx])
    held.sort(key=lambda it: it.item_id)
    study.sort(key=lambda it: it.item_id)
    return study, held


def _eq1_probability(theta: np.ndarray, item: CalibratedItem) -> float:
    z = float(item.params.a @ theta - item.params.b.sum())
    return float(sigmoid(z))


def _pick(policy: Policy, items: list[CalibratedItem], theta: np.ndarray,
          bank: ItemBank, rng: np.random.Generator) -> CalibratedItem:
    if policy is Policy.UNIFORM_RANDOM:
        return items[int(rng.integers(0, len(items)))]
    if policy is Policy.FIXED_EASIEST:
        def easiness(it: CalibratedItem):
            cols = [bank.concept_set.index_of(c) for c in it.concept_ids]
            return (float(np.mean([it.params.b[j] for j in cols])), it.item_id)
        return min(items, key=easiness)
    def fit(it: CalibratedItem):
        # The match score is symmetric in the gap, but only b > theta can
        # teach under the gain rule, so upward items rank ahead of mastered
        # ones; within each group the gap score orders candidates.
        cols = [bank.concept_set.index_of(c) for c in it.concept_ids]
        upward = [suitability_score(float(theta[j]), float(it.params.b[j]))
                  for j in cols if float(it.params.b[j]) > float(theta[j])]
        if upward:
            return (0, -max(upward), it.item_id)
        best = max(suitability_score(float(theta[j]), float(it.params.b[j])) for j in cols)
        return (1, -best, it.item_id)
    return min(items, key=fit)


def run_policy_comparison(
    bank: ItemBank,
    policies,
    rounds: int,
    seeds,
    a_sim: float = 1.0,
    initial_theta=None,
) -> ComparisonResult:
    """Race study policies on the same seeds and score quiz accuracy per round.

    Each round the policy picks a study item, the learner answers it with the
    response model, and knowledge jumps per the gain rule on tagged concepts.
    Accuracy is the mean correct-response probability over the held-out set.
    """
    if rounds < 1:
        raise ArgumentError("rounds must be >= 1")
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ArgumentError("seeds must be nonempty")
    policies = [Policy(p) for p in policies]
    k = bank.concept_set.k
    theta0 = (np.zeros(k) if initial_theta is None
              else as_float_vector(initial_theta, "initial_theta", length=k))

    traces: dict[Policy, list[PolicyTrace]] = {p: [] for p in policies}
    for seed in seeds:
        study, held = split_quiz_set(bank, seed)
        if not held:
            raise ArgumentError("held-out quiz set is empty")
        for pi, policy in enumerate(policies):
            rng = np.random.default_rng([seed, 31 * pi + 7])
            theta = theta0.copy()
            theta_rounds = [[float(x) for x in theta]]
            accuracy_rounds = []
            for _ in range(rounds):
                item = _pick(policy, study, theta, bank, rng)
                p = float(sigmoid(a_sim * (item.params.a @ theta - item.params.b.sum())))
                correct = rng.random() < p
                if correct:
                    for cid in item.concept_ids:
                        j = bank.concept_set.index_of(cid)
                        b_j = float(item.params.b[j])
                        if b_j > theta[j]:
                            theta[j] = b_j
                theta_rounds.append([float(x) for x in theta])
                accuracy_rounds.append(
                    float(np.mean([_eq1_probability(theta, it) for it in held]))
                )
            traces[policy].append(PolicyTrace(
                policy=policy, seed=seed,
                theta_rounds=theta_rounds, accuracy_rounds=accuracy_rounds,
            ))
    return ComparisonResult(traces=traces)
