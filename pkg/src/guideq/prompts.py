"""Prompt template loading and named-slot filling.

Templates ship as UTF-8 text assets. Slots are written {Like This} and can
contain spaces, so filling is explicit replacement rather than str.format.
"""
from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

from .errors import TemplateError
from .irt import ConceptSet, KnowledgeState, render_proficiency

TEMPLATE_NAMES = (
    "tutor", "qg_low", "qg_high", "cot", "zero_shot",
    "filter", "concepts", "sentences", "qapairs", "extract_concepts",
)

# Every slot any shipped template uses; leftover occurrences of these after
# filling indicate a caller bug and are rejected.
KNOWN_SLOTS = (
    "Knowledge State", "knowledge state", "conversation_concepts", "Inspiring_Text",
    "question", "documents", "concept_name", "sentence", "concept_names", "passage",
)


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    if name not in TEMPLATE_NAMES:
        raise TemplateError(f"unknown template {name!r}; available: {TEMPLATE_NAMES}")
    return (
        resources.files("guideq").joinpath("templates", f"{name}.txt").read_text("utf-8").strip()
    )


def fill_slots(template: str, slots: dict[str, str]) -> str:
    """Replace each {name} placeholder; missing or leftover slots are errors."""
    out = template
    for name, value in slots.items():
        placeholder = "{" + name + "}"
        if placeholder not in out:
            raise TemplateError(f"template has no slot {placeholder}")
        out = out.replace(placeholder, str(value))
    for name in KNOWN_SLOTS:
        if "{" + name + "}" in out:
            raise TemplateError(f"slot {{{name}}} left unfilled")
    return out


def render_knowledge_state(concept_set: ConceptSet, theta: KnowledgeState,
                           epsilon_low: float) -> str:
    """Textual proficiency summary inserted into the tutor prompt."""
    parts = [
        f"{c.name}: {render_proficiency(theta[j], epsilon_low)}"
        for j, c in enumerate(concept_set.concepts)
    ]
    return "; ".join(parts)


def tutor_prompt(concept_set: ConceptSet, theta: KnowledgeState, epsilon_low: float) -> str:
    return fill_slots(
        load_template("tutor"),
        {"Knowledge State": render_knowledge_state(concept_set, theta, epsilon_low)},
    )


_MARKER = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s*")


def strip_list_marker(line: str) -> str:
    return _MARKER.sub("", line).strip()
