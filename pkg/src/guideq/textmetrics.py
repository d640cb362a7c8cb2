"""BLEU-4 and ROUGE-1/2/L over the shared tokenizer.

BLEU-4 uses modified n-gram precision (counts clipped at the maximum
reference count), uniform weights over n=1..4, a geometric mean with no
smoothing, and a brevity penalty against the closest-length reference.
ROUGE scores are F1 against the best-matching reference.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .corpus import tokenize
from .errors import ArgumentError


@dataclass(frozen=True)
class SimilarityScores:
    bleu4: float
    rouge1_f: float
    rouge2_f: float
    rougeL_f: float

    def __post_init__(self):
        for name in ("bleu4", "rouge1_f", "rouge2_f", "rougeL_f"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ArgumentError(f"{name} must lie in [0, 1], got {v!r}")


def ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidate_tokens: list[str], reference_token_lists: list[list[str]]) -> float:
    c = len(candidate_tokens)
    if c == 0:
        return 0.0
    log_precisions = []
    for n in range(1, 5):
        cand = ngrams(candidate_tokens, n)
        total = sum(cand.values())
        if total == 0:
            return 0.0
        clipped = 0
        for gram, count in cand.items():
            best = max(ngrams(ref, n).get(gram, 0) for ref in reference_token_lists)
            clipped += min(count, best)
        if clipped == 0:
            return 0.0
        log_precisions.append(math.log(clipped / total))
    # closest reference length; ties go to the shorter reference
    r = min((abs(len(ref) - c), len(ref)) for ref in reference_token_lists)[1]
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return bp * math.exp(sum(log_precisions) / 4.0)


def _f1(matches: int, cand_total: int, ref_total: int) -> float:
    if matches == 0 or cand_total == 0 or ref_total == 0:
        return 0.0
    precision = matches / cand_total
    recall = matches / ref_total
    return 2.0 * precision * recall / (precision + recall)


def rouge_n(candidate_tokens: list[str], reference_token_lists: list[list[str]],
            n: int) -> float:
    """Best-reference F1 on clipped n-gram overlap."""
    cand = ngrams(candidate_tokens, n)
    cand_total = sum(cand.values())
    best = 0.0
    for ref in reference_token_lists:
        refc = ngrams(ref, n)
        matches = sum(min(count, refc.get(gram, 0)) for gram, count in cand.items())
        best = max(best, _f1(matches, cand_total, sum(refc.values())))
    return best


def lcs_length(a: list[str], b: list[str]) -> int:
    """Classic O(len(a)*len(b)) longest-common-subsequence table."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            curr[j] = prev[j - 1] + 1 if x == y else max(prev[j], curr[j - 1])
        prev = curr
    return prev[-1]


def rouge_l(candidate_tokens: list[str], reference_token_lists: list[list[str]]) -> float:
    """Best-reference F1 on longest common subsequence."""
    best = 0.0
    for ref in reference_token_lists:
        lcs = lcs_length(candidate_tokens, ref)
        best = max(best, _f1(lcs, len(candidate_tokens), len(ref)))
    return best


def text_similarity(candidate: str, references: list[str]) -> SimilarityScores:
    """Score one candidate against one or more references.

    An empty candidate scores zero everywhere; an empty reference list is
    an argument error.
    """
    if not references:
        raise ArgumentError("references must be nonempty")
    cand = tokenize(candidate)
    refs = [tokenize(r) for r in references]
    if not cand:
        return SimilarityScores(0.0, 0.0, 0.0, 0.0)
    return SimilarityScores(
        bleu4=bleu4(cand, refs),
        rouge1_f=rouge_n(cand, refs, 1),
        rouge2_f=rouge_n(cand, refs, 2),
        rougeL_f=rouge_l(cand, refs),
    )
