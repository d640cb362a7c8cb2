"""Model-assisted dataset construction, stage by stage.

Concepts -> Sentences -> QAPairs -> Filter. Each stage prompts the gateway
and parses a strict reply format; everything produced is marked unverified
until a human sets the flag. The filter stage only annotates items, it
never edits them.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .corpus import CalibratedItem, ConceptEntry, Scenario, default_item_params
from .errors import ArgumentError, GatewayError, LlmParseError, StageError
from .irt import Concept, ConceptSet
from .prompts import fill_slots, load_template, strip_list_marker


class PipelineStage(str, Enum):
    CONCEPTS = "concepts"
    SENTENCES = "sentences"
    QAPAIRS = "qapairs"
    FILTER = "filter"


@dataclass
class PipelineArtifacts:
    """Accumulates stage outputs; later stages read the earlier fields."""

    concept_set: ConceptSet | None = None
    lexicon: list[ConceptEntry] = field(default_factory=list)
    items: list[CalibratedItem] = field(default_factory=list)


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")


def _complete(gateway, prompt: str, stage: PipelineStage) -> str:
    try:
        return gateway.complete(prompt, "")
    except GatewayError as exc:
        raise StageError(f"stage {stage.value!r} failed: {exc}") from exc


def _concepts_stage(documents: list[str], gateway) -> ConceptSet:
    prompt = fill_slots(load_template("concepts"), {"documents": "\n\n".join(documents)})
    reply = _complete(gateway, prompt, PipelineStage.CONCEPTS)
    names = []
    for line in reply.splitlines():
        name = strip_list_marker(line)
        if name and name.lower() != "none" and name not in names:
            names.append(name)
    if not names:
        raise LlmParseError("no concepts found in reply", raw=reply)
    return ConceptSet(tuple(Concept(_slug(n), n) for n in names))


def _sentences_stage(documents: list[str], gateway,
                     concept_set: ConceptSet) -> list[ConceptEntry]:
    lexicon = []
    docs = "\n\n".join(documents)
    for concept in concept_set.concepts:
        prompt = fill_slots(load_template("sentences"),
                            {"concept_name": concept.name, "documents": docs})
        reply = _complete(gateway, prompt, PipelineStage.SENTENCES)
        sentences = [strip_list_marker(ln) for ln in reply.splitlines() if ln.strip()]
        sentences = [s for s in sentences if s.lower() != "none"]
        lexicon.append(ConceptEntry(concept.concept_id, concept.name, tuple(sentences)))
    return lexicon


_QA_LINE = re.compile(r"^\s*([A-D])\)\s*(.+?)\s*$")
_QA_ANSWER = re.compile(r"^\s*Answer:\s*([A-D])\b", re.IGNORECASE)
_QA_QUESTION = re.compile(r"^\s*Q:\s*(.+?)\s*$")


def parse_qa_block(reply: str) -> tuple[str, list[str], int]:
    """Parse the strict Q:/A)..D)/Answer: block; raises keeping the raw text."""
    question = None
    options: dict[str, str] = {}
    answer = None
    for line in reply.splitlines():
        m = _QA_QUESTION.match(line)
        if m and question is None:
            question = m.group(1)
            continue
        m = _QA_LINE.match(line)
        if m:
            options[m.group(1)] = m.group(2)
            continue
        m = _QA_ANSWER.match(line)
        if m:
            answer = m.group(1).upper()
    if question is None or sorted(options) != ["A", "B", "C", "D"] or answer is None:
        raise LlmParseError("reply does not match the QA block format", raw=reply)
    return question, [options[c] for c in "ABCD"], "ABCD".index(answer)


def _qapairs_stage(gateway, concept_set: ConceptSet,
                   lexicon: list[ConceptEntry]) -> list[CalibratedItem]:
    items = []
    for entry in lexicon:
        if not entry.sentences:
            raise ArgumentError(
                f"concept {entry.concept_id!r} has no sentences; run the sentences stage first"
            )
        for m, sentence in enumerate(entry.sentences):
            prompt = fill_slots(load_template("qapairs"),
                                {"concept_name": entry.name, "sentence": sentence})
            reply = _complete(gateway, prompt, PipelineStage.QAPAIRS)
            question, options, answer_index = parse_qa_block(reply)
            concept_ids = (entry.concept_id,)
            items.append(CalibratedItem(
                item_id=f"{entry.concept_id}:{m:03d}",
                question=question,
                options=tuple(options),
                answer_index=answer_index,
                concept_ids=concept_ids,
                params=default_item_params(concept_ids, concept_set, Scenario.UNLABELED),
                scenario=Scenario.UNLABELED,
                source_sentence=sentence,
                verified=False,
            ))
    return items


_FLAG = re.compile(r"experiment-related:\s*(yes|no)", re.IGNORECASE)


def _filter_stage(gateway, items: list[CalibratedItem]) -> list[CalibratedItem]:
    flagged = []
    for item in items:
        prompt = fill_slots(load_template("filter"), {"question": item.question})
        reply = _complete(gateway, prompt, PipelineStage.FILTER)
        m = _FLAG.search(reply) or (re.fullmatch(r"\s*(yes|no)\s*", reply, re.IGNORECASE))
        if not m:
            raise LlmParseError("filter reply is not a yes/no judgment", raw=reply)
        flagged.append(item.with_flag(m.group(1).lower() == "yes"))
    return flagged


def generate_dataset(documents: list[str], gateway, stage: PipelineStage,
                     prior: PipelineArtifacts | None = None) -> PipelineArtifacts:
    """Run one pipeline stage, threading earlier artifacts through `prior`."""
    if not documents:
        raise ArgumentError("documents must be nonempty")
    stage = PipelineStage(stage)
    artifacts = prior or PipelineArtifacts()
    if stage is PipelineStage.CONCEPTS:
        concept_set = _concepts_stage(documents, gateway)
        return replace_artifacts(artifacts, concept_set=concept_set)
    if artifacts.concept_set is None:
        raise ArgumentError(f"stage {stage.value!r} needs the concepts stage output")
    if stage is PipelineStage.SENTENCES:
        lexicon = _sentences_stage(documents, gateway, artifacts.concept_set)
        return replace_artifacts(artifacts, lexicon=lexicon)
    if stage is PipelineStage.QAPAIRS:
        if not artifacts.lexicon:
            raise ArgumentError("qapairs stage needs the sentences stage output")
        items = _qapairs_stage(gateway, artifacts.concept_set, artifacts.lexicon)
        return replace_artifacts(artifacts, items=items)
    if not artifacts.items:
        raise ArgumentError("filter stage needs the qapairs stage output")
    return replace_artifacts(artifacts, items=_filter_stage(gateway, artifacts.items))


def replace_artifacts(artifacts: PipelineArtifacts, **changes) -> PipelineArtifacts:
    out = PipelineArtifacts(
        concept_set=artifacts.concept_set,
        lexicon=list(artifacts.lexicon),
        items=list(artifacts.items),
    )
    for key, value in changes.items():
        setattr(out, key, value)
    return out
