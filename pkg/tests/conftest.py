"""Shared fixtures: a small calibrated bank and mock-gateway script builders."""
from __future__ import annotations

import numpy as np
import pytest

from guideq import (
    CalibratedItem,
    ConceptEntry,
    ItemBank,
    ItemParameters,
    MockReply,
    MockScript,
    Scenario,
)

CONCEPTS = [
    ("eor", "Enhanced Oil Recovery"),
    ("surfactant", "Surfactant Flooding"),
    ("steam", "Steam Injection"),
    ("co2", "CO2 Flooding"),
    ("polymer", "Polymer Flooding"),
]

# Each concept gets five items whose difficulty climbs in steps, so a
# suitability-driven policy can ladder a learner upward.
DIFFICULTY_LADDER = [0.8, 1.6, 2.4, 3.2, 4.0]

QUESTION_STEMS = {
    "eor": "how does enhanced oil recovery raise the recoverable fraction of a reservoir",
    "surfactant": "why does surfactant flooding lower interfacial tension between oil and water",
    "steam": "how does steam injection reduce crude viscosity in heavy oil pay zones",
    "co2": "when is co2 flooding miscible with reservoir oil at depth",
    "polymer": "how does polymer flooding improve the mobility ratio of the displacing water",
}

LEXICON_SENTENCES = {
    "eor": [
        "Enhanced oil recovery methods target the oil left behind after primary and secondary production.",
        "Tertiary recovery projects are screened against reservoir depth, pressure, and crude gravity.",
    ],
    "surfactant": [
        "Surfactant flooding lowers the interfacial tension so trapped oil ganglia can be mobilized.",
        "Adsorption of surfactant onto rock surfaces is a major cost driver in chemical floods.",
    ],
    "steam": [
        "Steam injection heats the crude and cuts its viscosity by orders of magnitude.",
        "Cyclic stimulation alternates soak periods with production from the same well.",
    ],
    "co2": [
        "CO2 flooding achieves miscibility above the minimum miscibility pressure.",
        "Carbon dioxide swells the oil phase and lightens residual hydrocarbons.",
    ],
    "polymer": [
        "Polymer flooding thickens the injected water to even out the displacement front.",
        "Hydrolyzed polyacrylamide is the workhorse polymer for mobility control.",
    ],
}

FILLER = (
    "consider the field case where engineers compare screening criteria before a pilot"
).split()


def build_toy_bank() -> ItemBank:
    k = len(CONCEPTS)
    lexicon = [
        ConceptEntry(cid, name, tuple(LEXICON_SENTENCES[cid]))
        for cid, name in CONCEPTS
    ]
    items = []
    for j, (cid, name) in enumerate(CONCEPTS):
        for m, b_val in enumerate(DIFFICULTY_LADDER):
            a = np.zeros(k)
            b = np.zeros(k)
            a[j] = 1.0
            b[j] = b_val
            # vary question length so corpus stats are well-defined
            extra = " ".join(FILLER[: (j + m) % 6])
            question = f"{QUESTION_STEMS[cid]} at stage {m} {extra}".strip() + "?"
            items.append(CalibratedItem(
                item_id=f"{cid}-{m}",
                question=question,
                options=(f"choice a{m}", f"choice b{m}", f"choice c{m}", f"choice d{m}"),
                answer_index=m % 4,
                concept_ids=(cid,),
                params=ItemParameters(a=a, b=b),
                scenario=Scenario.THEORY if m < 2 else Scenario.APPLICATION,
                source_sentence=LEXICON_SENTENCES[cid][m % 2],
                verified=True,
            ))
    return ItemBank.build(lexicon, items)


@pytest.fixture(scope="session")
def toy_bank() -> ItemBank:
    return build_toy_bank()


def build_policy_bank(n_concepts: int = 5, max_rung: float = 8.0, step: float = 0.5) -> ItemBank:
    """Synthetic calibrated bank with a dense difficulty ladder per concept,
    so adaptive item selection has fine-grained rungs to climb."""
    rungs = [step * r for r in range(1, int(max_rung / step) + 1)]
    lexicon = [
        ConceptEntry(f"c{j}", f"Concept {j}", (f"sentence about area {j}",))
        for j in range(n_concepts)
    ]
    items = []
    for j in range(n_concepts):
        for m, b_val in enumerate(rungs):
            a = np.zeros(n_concepts)
            b = np.zeros(n_concepts)
            a[j] = 1.0
            b[j] = b_val
            items.append(CalibratedItem(
                item_id=f"c{j}-{m:02d}",
                question=f"{'x ' * (m % 4)}study item {m} for area {j}?",
                options=(f"o1{m}", f"o2{m}", f"o3{m}", f"o4{m}"),
                answer_index=0,
                concept_ids=(f"c{j}",),
                params=ItemParameters(a=a, b=b),
                scenario=Scenario.UNLABELED,
                source_sentence=f"source {j} {m}",
            ))
    return ItemBank.build(lexicon, items)


@pytest.fixture(scope="session")
def policy_bank() -> ItemBank:
    return build_policy_bank()


def build_mi_fixture_bank() -> ItemBank:
    """Ten items engineered for hand-checkable specificity scores.

    Sixty filler tokens each appear in exactly 3 items, so the 50
    alphabetically-first fillers are the bank's stopwords. The marker token
    "wavetrap" appears only in the two items tagged "target", giving it
    PMI ln(2*10/(2*2)) = ln 5 against that concept.
    """
    n_items = 10
    questions = [[] for _ in range(n_items)]
    for f in range(60):
        for offset in (0, 3, 6):
            questions[(f + offset) % n_items].append(f"fill{f:02d}")
    questions[0].append("wavetrap")
    questions[1].append("wavetrap")
    lexicon = [
        ConceptEntry("target", "Target Concept", ("The wavetrap marker sentence.",)),
        ConceptEntry("rest", "Everything Else", ("Background material sentence.",)),
    ]
    items = []
    for i in range(n_items):
        cid = "target" if i < 2 else "rest"
        j = 0 if cid == "target" else 1
        a = np.zeros(2)
        b = np.zeros(2)
        a[j] = 1.0
        items.append(CalibratedItem(
            item_id=f"mi-{i}",
            question=" ".join(questions[i]),
            options=(f"o1-{i}", f"o2-{i}", f"o3-{i}", f"o4-{i}"),
            answer_index=0,
            concept_ids=(cid,),
            params=ItemParameters(a=a, b=b),
            scenario=Scenario.UNLABELED,
            source_sentence=f"source sentence {i}",
        ))
    return ItemBank.build(lexicon, items)


@pytest.fixture(scope="session")
def mi_bank() -> ItemBank:
    return build_mi_fixture_bank()


def tutor_reply(concept_name: str = "Enhanced Oil Recovery") -> str:
    return (
        f"{concept_name} raises the recoverable fraction by changing the forces "
        "that trap crude in the pore space."
    )


def questions_reply(concept_name: str = "Enhanced Oil Recovery") -> str:
    lines = [
        f"{i}. How does {concept_name} change the displacement efficiency at stage {i}?"
        for i in range(1, 6)
    ]
    return "\n".join(lines)


def make_turn_script(n_turns: int, concept_name: str = "Enhanced Oil Recovery") -> MockScript:
    """Two scripted replies per turn: the tutor response, then five questions."""
    entries = []
    for _ in range(n_turns):
        entries.append(MockReply(reply=tutor_reply(concept_name)))
        entries.append(MockReply(reply=questions_reply(concept_name)))
    return MockScript(tuple(entries))
