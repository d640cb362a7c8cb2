"""Item bank: schema, loading/validation, tokenizer, and corpus statistics.

The bank is a JSON document with a concept lexicon (concept -> example
sentences) and four-option items tagged with concepts. Loading validates
strictly and rejects rather than repairs; statistics needed by the
question-quality scorer are derived at load time.
"""
from __future__ import annotations

import json
import string
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    ArgumentError,
    BankValidationError,
    ConflictError,
    DegenerateCorpusError,
)
from .irt import Concept, ConceptSet, ItemParameters

_PUNCT_TO_SPACE = str.maketrans({ch: " " for ch in string.punctuation})

# Content-word filtering for the specificity estimator: the most frequent
# bank tokens are treated as non-content words.
STOPWORD_COUNT = 50

# Pre-calibration difficulty offsets by declared cognitive level.
SCENARIO_DIFFICULTY_OFFSET = {"Theory": -0.5, "Application": 0.5, "Unlabeled": 0.0}


class Scenario(str, Enum):
    THEORY = "Theory"
    APPLICATION = "Application"
    UNLABELED = "Unlabeled"


def tokenize(text: str) -> list[str]:
    """Lowercase, replace punctuation with spaces, split on whitespace."""
    return text.lower().translate(_PUNCT_TO_SPACE).split()


@dataclass(frozen=True)
class ConceptEntry:
    """A concept with the corpus sentences that discuss it."""

    concept_id: str
    name: str
    sentences: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))


@dataclass(frozen=True)
class CalibratedItem:
    """A four-option question tagged with concepts and model parameters."""

    item_id: str
    question: str
    options: tuple[str, ...]
    answer_index: int
    concept_ids: tuple[str, ...]
    params: ItemParameters
    scenario: Scenario = Scenario.UNLABELED
    source_sentence: str = ""
    verified: bool = False
    experiment_related: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))
        object.__setattr__(self, "concept_ids", tuple(self.concept_ids))
        if len(self.options) != 4:
            raise BankValidationError(
                f"item {self.item_id!r}: field 'options' must have exactly 4 entries, "
                f"got {len(self.options)}"
            )
        if len(set(self.options)) != 4:
            raise BankValidationError(
                f"item {self.item_id!r}: field 'options' entries must be pairwise distinct"
            )
        if not isinstance(self.answer_index, int) or not 0 <= self.answer_index <= 3:
            raise BankValidationError(
                f"item {self.item_id!r}: field 'answer_index' must be an integer in 0..3"
            )
        if not self.concept_ids:
            raise BankValidationError(
                f"item {self.item_id!r}: field 'concepts' must be nonempty"
            )

    def with_flag(self, experiment_related: bool) -> "CalibratedItem":
        """Copy with the experiment-related flag set; text is untouched."""
        return replace(self, experiment_related=experiment_related)


@dataclass(frozen=True)
class CorpusStats:
    """Question-length moments and item-granular frequency tables.

    vocab_counts[w] is the number of items whose question contains token w
    (counted once per item); concept_counts[c] the number of items tagged c.
    """

    mean_len: float
    std_len: float
    vocab_counts: dict[str, int]
    concept_counts: dict[str, int]
    total_items: int

    def stopwords(self, top_n: int = STOPWORD_COUNT) -> frozenset[str]:
        """The top_n most frequent tokens; ties broken alphabetically."""
        ranked = sorted(self.vocab_counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return frozenset(w for w, _ in ranked[:top_n])


def compute_corpus_stats(items) -> CorpusStats:
    """Token-count moments (population std) plus frequency tables."""
    items = list(items)
    if len(items) < 2:
        raise ArgumentError("corpus statistics need at least 2 items")
    lengths = np.array([len(tokenize(it.question)) for it in items], dtype=float)
    std = float(np.std(lengths))
    if std == 0.0:
        raise DegenerateCorpusError(
            "all questions have the same token count; length spread must be > 0"
        )
    vocab: dict[str, int] = {}
    concept_counts: dict[str, int] = {}
    for it in items:
        for tok in set(tokenize(it.question)):
            vocab[tok] = vocab.get(tok, 0) + 1
        for cid in it.concept_ids:
            concept_counts[cid] = concept_counts.get(cid, 0) + 1
    return CorpusStats(
        mean_len=float(np.mean(lengths)),
        std_len=std,
        vocab_counts=vocab,
        concept_counts=concept_counts,
        total_items=len(items),
    )


@dataclass(frozen=True)
class ItemBank:
    concept_set: ConceptSet
    lexicon: tuple[ConceptEntry, ...]
    items: tuple[CalibratedItem, ...]
    stats: CorpusStats

    def __post_init__(self):
        object.__setattr__(self, "lexicon", tuple(self.lexicon))
        object.__setattr__(self, "items", tuple(self.items))

    @classmethod
    def build(cls, lexicon, items) -> "ItemBank":
        """Assemble and cross-validate a bank from its parts."""
        lexicon = tuple(lexicon)
        items = tuple(items)
        concept_set = ConceptSet(tuple(Concept(e.concept_id, e.name) for e in lexicon))
        seen = set()
        for it in items:
            if it.item_id in seen:
                raise ConflictError(f"duplicate item id {it.item_id!r}")
            seen.add(it.item_id)
            for cid in it.concept_ids:
                if cid not in concept_set:
                    raise ConflictError(
                        f"item {it.item_id!r} references unknown concept {cid!r}"
                    )
            if it.params.k != concept_set.k:
                raise BankValidationError(
                    f"item {it.item_id!r}: parameter vectors have length "
                    f"{it.params.k}, expected K={concept_set.k}"
                )
        return cls(
            concept_set=concept_set,
            lexicon=lexicon,
            items=items,
            stats=compute_corpus_stats(items),
        )

    def item(self, item_id: str) -> CalibratedItem:
        for it in self.items:
            if it.item_id == item_id:
                return it
        raise ConflictError(f"no item with id {item_id!r}")

    def items_for_concept(self, concept_id: str) -> list[CalibratedItem]:
        return [it for it in self.items if concept_id in it.concept_ids]

    def entry_for(self, concept_id: str) -> ConceptEntry:
        for e in self.lexicon:
            if e.concept_id == concept_id:
                return e
        raise ConflictError(f"no lexicon entry for concept {concept_id!r}")


def default_item_params(concept_ids, concept_set: ConceptSet, scenario: Scenario) -> ItemParameters:
    """Pre-calibration defaults: a=1 on tagged concepts, b offset by level."""
    k = concept_set.k
    a = np.zeros(k)
    b = np.zeros(k)
    offset = SCENARIO_DIFFICULTY_OFFSET[scenario.value]
    for cid in concept_ids:
        j = concept_set.index_of(cid)
        a[j] = 1.0
        b[j] = offset
    return ItemParameters(a=a, b=b)


_ITEM_FIELDS = {
    "id", "question", "options", "answer_index", "concepts",
    "a", "b", "scenario", "source_sentence", "verified", "experiment_related",
}
_ITEM_REQUIRED = {
    "id", "question", "options", "answer_index", "concepts",
    "scenario", "source_sentence", "verified",
}


def _validate_item_dict(raw: dict, concept_set: ConceptSet) -> CalibratedItem:
    item_id = raw.get("id", "<missing id>")
    unknown = set(raw) - _ITEM_FIELDS
    if unknown:
        raise BankValidationError(
            f"item {item_id!r}: unknown field(s) {sorted(unknown)}"
        )
    missing = _ITEM_REQUIRED - set(raw)
    if missing:
        raise BankValidationError(
            f"item {item_id!r}: missing required field(s) {sorted(missing)}"
        )
    try:
        scenario = Scenario(raw["scenario"])
    except ValueError:
        raise BankValidationError(
            f"item {item_id!r}: field 'scenario' must be one of "
            f"{[s.value for s in Scenario]}, got {raw['scenario']!r}"
        ) from None
    has_a, has_b = "a" in raw, "b" in raw
    if has_a != has_b:
        raise BankValidationError(
            f"item {item_id!r}: fields 'a' and 'b' must be given together"
        )
    concept_ids = raw["concepts"]
    if not isinstance(concept_ids, list) or not concept_ids:
        raise BankValidationError(f"item {item_id!r}: field 'concepts' must be a nonempty list")
    for cid in concept_ids:
        if cid not in concept_set:
            raise ConflictError(f"item {item_id!r} references unknown concept {cid!r}")
    if has_a:
        try:
            params = ItemParameters(a=raw["a"], b=raw["b"])
        except Exception as exc:
            raise BankValidationError(f"item {item_id!r}: fields 'a'/'b': {exc}") from exc
        if params.k != concept_set.k:
            raise BankValidationError(
                f"item {item_id!r}: fields 'a'/'b' must have length K={concept_set.k}"
            )
    else:
        params = default_item_params(concept_ids, concept_set, scenario)
    if not isinstance(raw["answer_index"], int) or isinstance(raw["answer_index"], bool):
        raise BankValidationError(f"item {item_id!r}: field 'answer_index' must be an integer")
    return CalibratedItem(
        item_id=raw["id"],
        question=raw["question"],
        options=tuple(raw["options"]),
        answer_index=raw["answer_index"],
        concept_ids=tuple(concept_ids),
        params=params,
        scenario=scenario,
        source_sentence=raw["source_sentence"],
        verified=bool(raw["verified"]),
        experiment_related=raw.get("experiment_related"),
    )


def load_item_bank(path) -> ItemBank:
    """Parse and validate a bank file; any violation raises, nothing is repaired."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BankValidationError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "concepts" not in data or "items" not in data:
        raise BankValidationError(f"{path}: top level must have 'concepts' and 'items'")

    lexicon = []
    seen_ids = set()
    for raw in data["concepts"]:
        for key in ("id", "name", "sentences"):
            if key not in raw:
                raise BankValidationError(
                    f"concept {raw.get('id', '<missing id>')!r}: missing field {key!r}"
                )
        if raw["id"] in seen_ids:
            raise ConflictError(f"duplicate concept id {raw['id']!r}")
        seen_ids.add(raw["id"])
        lexicon.append(ConceptEntry(raw["id"], raw["name"], tuple(raw["sentences"])))
    if not lexicon:
        raise BankValidationError(f"{path}: 'concepts' must be nonempty")

    concept_set = ConceptSet(tuple(Concept(e.concept_id, e.name) for e in lexicon))
    items = [_validate_item_dict(raw, concept_set) for raw in data["items"]]
    return ItemBank.build(lexicon, items)


def item_to_dict(item: CalibratedItem) -> dict:
    out = {
        "id": item.item_id,
        "question": item.question,
        "options": list(item.options),
        "answer_index": item.answer_index,
        "concepts": list(item.concept_ids),
        "a": [float(x) for x in item.params.a],
        "b": [float(x) for x in item.params.b],
        "scenario": item.scenario.value,
        "source_sentence": item.source_sentence,
        "verified": item.verified,
    }
    if item.experiment_related is not None:
        out["experiment_related"] = item.experiment_related
    return out


def save_item_bank(bank: ItemBank, path) -> None:
    """Write the bank back out; load(save(bank)) reproduces it exactly."""
    data = {
        "concepts": [
            {"id": e.concept_id, "name": e.name, "sentences": list(e.sentences)}
            for e in bank.lexicon
        ],
        "items": [item_to_dict(it) for it in bank.items],
    }
    Path(path).write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
