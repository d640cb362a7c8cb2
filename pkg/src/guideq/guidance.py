"""Inspiring-text selection and guiding-question quality control.

A text fragment suits a user best when its difficulty sits about one unit
above or below their knowledge state: the suitability score
exp(-(|theta - b| - 1)^2) peaks at gap 1. Generated questions are scored on
three components - information-gap alignment, concept specificity (a PMI
estimate over the item bank), and linguistic complexity - combined as a
weighted sum and filtered against a threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .corpus import CorpusStats, ItemBank, tokenize
from .errors import ArgumentError, DomainError, EmptyCandidateError, TemplateError
from .irt import KnowledgeState, sigmoid
from .prompts import fill_slots, load_template
from .validation import require_finite


class QuestionMode(str, Enum):
    UNDERSTANDING_BIASED = "understanding-biased"
    APPLICATION_BIASED = "application-biased"


@dataclass(frozen=True)
class QualityWeights:
    """Weights for (alignment, specificity, complexity); they must sum to 1."""

    alpha: float = 0.5
    beta: float = 0.3
    gamma: float = 0.2

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            require_finite(v, name)
            if v < 0:
                raise DomainError(f"{name} must be >= 0")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-9:
            raise DomainError(
                f"weights must sum to 1, got {self.alpha + self.beta + self.gamma!r}"
            )

    def combine(self, align: float, mi: float, complexity: float) -> float:
        return self.alpha * align + self.beta * mi + self.gamma * complexity


@dataclass(frozen=True)
class GuidanceConfig:
    epsilon_low: float = 1.0
    top_k_texts: int = 3
    quality_threshold: float = 0.3
    weights: QualityWeights = QualityWeights()
    low_state_rule: str = "minimum"  # or "first": stop at the first theta <= epsilon

    def __post_init__(self):
        require_finite(self.epsilon_low, "epsilon_low")
        if self.top_k_texts < 1:
            raise ArgumentError("top_k_texts must be >= 1")
        if self.low_state_rule not in ("minimum", "first"):
            raise ArgumentError("low_state_rule must be 'minimum' or 'first'")


@dataclass(frozen=True)
class GuidingQuestion:
    text: str
    target_concept: str
    align: float
    mi: float
    complexity: float
    quality: float
    mode: QuestionMode


@dataclass(frozen=True)
class InspiringText:
    fragment: str
    concept_id: str
    difficulty: float
    suitability: float


def suitability_score(theta_j: float, b_i: float) -> float:
    """exp(-(|theta_j - b_i| - 1)^2): equals 1 exactly when the gap is 1."""
    theta_j = require_finite(theta_j, "theta_j")
    b_i = require_finite(b_i, "b_i")
    gap = abs(theta_j - b_i)
    return math.exp(-((gap - 1.0) ** 2))


def detect_low_state(theta: KnowledgeState, epsilon_low: float,
                     rule: str = "minimum") -> tuple[int, float] | None:
    """The concept needing foundational work, or None if all exceed epsilon.

    "minimum" returns the lowest theta among those <= epsilon; "first"
    returns the first index scanning in concept order.
    """
    require_finite(epsilon_low, "epsilon_low")
    candidates = [(float(v), j) for j, v in enumerate(theta.theta) if v <= epsilon_low]
    if not candidates:
        return None
    if rule == "first":
        value, j = min(candidates, key=lambda c: c[1])
    else:
        value, j = min(candidates)
    return j, value


def select_inspiring_text(bank: ItemBank, theta: KnowledgeState,
                          focus: int | None = None, k: int = 3) -> list[InspiringText]:
    """Top-k source sentences by suitability against the current state.

    Candidates are the source sentences of items tagged with the focus
    concept (all concepts when focus is None), each scored at the item's
    difficulty component for that concept. Ties break on item_id ascending.
    """
    if k < 1:
        raise ArgumentError("k must be >= 1")
    if theta.k != bank.concept_set.k:
        raise ArgumentError(
            f"theta has K={theta.k} but bank has K={bank.concept_set.k}"
        )
    if focus is not None and not 0 <= focus < bank.concept_set.k:
        raise ArgumentError(f"focus index {focus} out of range for K={bank.concept_set.k}")
    indices = range(bank.concept_set.k) if focus is None else [focus]
    candidates = []
    for j in indices:
        cid = bank.concept_set.concepts[j].concept_id
        for it in bank.items_for_concept(cid):
            if not it.source_sentence:
                continue
            b_j = float(it.params.b[j])
            score = suitability_score(float(theta.theta[j]), b_j)
            candidates.append((-score, it.item_id, j, InspiringText(
                fragment=it.source_sentence, concept_id=cid,
                difficulty=b_j, suitability=score,
            )))
    if not candidates:
        focus_id = None if focus is None else bank.concept_set.concepts[focus].concept_id
        raise EmptyCandidateError(
            f"no text fragments available for focus {focus_id!r}"
        )
    candidates.sort(key=lambda c: c[:3])
    return [c[3] for c in candidates[:k]]


def _pmi(token: str, concept_id: str, bank: ItemBank) -> float:
    """ln(f(w,c) * N / (f(w) * f(c))) with item-granular counts; -inf if unseen."""
    stats = bank.stats
    f_w = stats.vocab_counts.get(token, 0)
    f_c = stats.concept_counts.get(concept_id, 0)
    if f_w == 0 or f_c == 0:
        return float("-inf")
    f_wc = sum(
        1 for it in bank.items_for_concept(concept_id) if token in set(tokenize(it.question))
    )
    if f_wc == 0:
        return float("-inf")
    return math.log(f_wc * stats.total_items / (f_w * f_c))


def concept_specificity(question: str, concept_id: str, bank: ItemBank) -> float:
    """Normalized mean positive PMI between the question's content tokens
    and the concept, in [0, 1].

    Content tokens exclude the bank's most frequent words; tokens the bank
    has never seen contribute 0.
    """
    stopwords = bank.stats.stopwords()
    content = [t for t in tokenize(question) if t not in stopwords]
    if not content:
        return 0.0
    total = sum(max(0.0, _pmi(t, concept_id, bank)) for t in content)
    return total / len(content) / math.log(bank.stats.total_items)


def complexity_index(question: str, stats: CorpusStats) -> float:
    """Sigmoid of the question length z-score against the corpus moments."""
    z = (len(tokenize(question)) - stats.mean_len) / stats.std_len
    return float(sigmoid(z))


def score_question(question: str, target: str, theta: KnowledgeState, bank: ItemBank,
                   weights: QualityWeights,
                   mode: QuestionMode = QuestionMode.UNDERSTANDING_BIASED) -> GuidingQuestion:
    """Score one candidate question against the target concept.

    align = 1 - theta_target (negative for over-known concepts, on purpose);
    mi is the bank-based specificity; complexity the length index; quality
    their weighted combination.
    """
    j = bank.concept_set.index_of(target)
    align = 1.0 - float(theta.theta[j])
    mi = concept_specificity(question, target, bank)
    complexity = complexity_index(question, bank.stats)
    return GuidingQuestion(
        text=question,
        target_concept=target,
        align=align,
        mi=mi,
        complexity=complexity,
        quality=weights.combine(align, mi, complexity),
        mode=mode,
    )


def filter_questions(candidates: list[GuidingQuestion],
                     threshold: float) -> tuple[list[GuidingQuestion], list[GuidingQuestion]]:
    """Partition into (accepted, rejected) by quality >= threshold, order kept."""
    accepted = [q for q in candidates if q.quality >= threshold]
    rejected = [q for q in candidates if q.quality < threshold]
    return accepted, rejected


def assemble_guidance_prompt(mode: QuestionMode, concepts: list[str],
                             texts: list[InspiringText]) -> str:
    """Instantiate the low- or high-state question-generation template."""
    if not concepts:
        raise TemplateError("concepts must be nonempty for prompt assembly")
    if not texts:
        raise TemplateError("inspiring texts must be nonempty for prompt assembly")
    name = "qg_low" if mode is QuestionMode.UNDERSTANDING_BIASED else "qg_high"
    return fill_slots(load_template(name), {
        "conversation_concepts": ", ".join(concepts),
        "Inspiring_Text": "\n".join(t.fragment for t in texts),
    })
