"""Turn-by-turn orchestration of the adaptive guidance loop.

Each turn: answer the query with the tutor prompt, infer which concepts the
response touched, inject positive evidence for them and refit theta, branch
on the lowest knowledge state, pick inspiring text, generate and score
guiding questions. A turn either commits atomically or leaves the session
untouched.
"""
from __future__ import annotations

import json
import secrets
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

import numpy as np

from .calibrate import update_knowledge_state
from .corpus import ItemBank
from .errors import (
    ArgumentError,
    DimensionError,
    EmptyCandidateError,
    RestoreError,
    SessionTerminatedError,
)
from .gateway import GatewayConfig, extract_concepts, parse_guiding_questions
from .guidance import (
    GuidanceConfig,
    GuidingQuestion,
    InspiringText,
    QualityWeights,
    QuestionMode,
    assemble_guidance_prompt,
    detect_low_state,
    filter_questions,
    score_question,
    select_inspiring_text,
)
from .irt import (
    Concept,
    ConceptSet,
    ItemParameters,
    KnowledgeState,
    OptimizerConfig,
    ResponseRecord,
    simulate_evidence,
)
from .prompts import tutor_prompt

SCHEMA_VERSION = 1
EXIT_WORD = "exit"


class Branch(str, Enum):
    LOW = "low"
    HIGH = "high"


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class TurnResult:
    response: str
    touched_concepts: list[str]
    theta_after: KnowledgeState
    guiding_questions: list[GuidingQuestion]
    branch: Branch
    inspiring_texts: list[InspiringText]
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class TurnRecord:
    """One committed turn in the session transcript."""

    round: int
    query: str
    response: str
    touched_concepts: tuple[str, ...]
    branch: Branch
    theta_after: tuple[float, ...]
    questions: tuple[GuidingQuestion, ...]
    inspiring_texts: tuple[InspiringText, ...]
    warnings: tuple[str, ...] = ()


@dataclass
class Session:
    session_id: str
    concept_set: ConceptSet
    initial_theta: KnowledgeState
    theta: KnowledgeState
    guidance: GuidanceConfig
    optimizer: OptimizerConfig
    gateway_cfg: GatewayConfig
    history: list[ResponseRecord] = field(default_factory=list)
    turns: list[TurnRecord] = field(default_factory=list)
    llm_calls: list[dict] = field(default_factory=list)
    created_at: str = ""
    updated_at: str = ""
    terminated: bool = False
    use_answer_evidence: bool = False

    @property
    def next_round(self) -> int:
        return len(self.turns)


def create_session(
    bank: ItemBank,
    initial_theta=None,
    guidance: GuidanceConfig | None = None,
    optimizer: OptimizerConfig | None = None,
    gateway_cfg: GatewayConfig | None = None,
    rng: np.random.Generator | None = None,
    clock=utc_now_iso,
    use_answer_evidence: bool = False,
) -> Session:
    """New session over a bank. Pass a seeded rng for reproducible id/theta."""
    k = bank.concept_set.k
    if rng is None:
        session_id = secrets.token_hex(16)
        theta_rng = np.random.default_rng()
    else:
        session_id = bytes(rng.integers(0, 256, size=16, dtype=np.uint8)).hex()
        theta_rng = rng
    if initial_theta is None:
        theta = KnowledgeState(theta=theta_rng.normal(0.0, 0.1, size=k))
    else:
        theta = initial_theta if isinstance(initial_theta, KnowledgeState) \
            else KnowledgeState(theta=initial_theta)
        if theta.k != k:
            raise DimensionError(f"initial theta has length {theta.k}, bank has K={k}")
    now = clock()
    return Session(
        session_id=session_id,
        concept_set=bank.concept_set,
        initial_theta=theta,
        theta=theta,
        guidance=guidance or GuidanceConfig(),
        optimizer=optimizer or OptimizerConfig(),
        gateway_cfg=gateway_cfg or GatewayConfig(),
        created_at=now,
        updated_at=now,
        use_answer_evidence=use_answer_evidence,
    )


def is_exit_query(query: str) -> bool:
    return EXIT_WORD in query.lower()


def run_turn(session: Session, query: str, bank: ItemBank, gateway,
             clock=utc_now_iso) -> TurnResult | None:
    """Execute one loop iteration; returns None when the query asks to exit.

    A gateway or parse failure aborts the turn with the session unchanged.
    Finding no inspiring text is survivable: the turn completes with no
    questions and a warning.
    """
    if session.terminated:
        raise SessionTerminatedError(f"session {session.session_id} has exited")
    if not query or not query.strip():
        raise ArgumentError("query must be nonempty")
    if is_exit_query(query):
        session.terminated = True
        session.updated_at = clock()
        return None

    round_index = session.next_round
    cfg = session.guidance
    warnings: list[str] = []
    calls_before = len(gateway.calls)

    # (1) tutor response conditioned on a textual rendering of theta
    p_t = tutor_prompt(session.concept_set, session.theta, cfg.epsilon_low)
    response = gateway.complete(p_t, query)
    calls_after_tutor = len(gateway.calls)

    # (2) concepts the response engaged
    touched = extract_concepts(response, session.concept_set, gateway, list(bank.lexicon))
    calls_after_extract = len(gateway.calls)

    # (3) positive evidence + theta refit over the cumulative history
    new_history = list(session.history)
    if touched:
        new_history.extend(
            simulate_evidence(touched, session.concept_set, session.theta, round_index)
        )
        theta_after = update_knowledge_state(session.theta, new_history, session.optimizer)
    else:
        warnings.append("no tracked concept matched the response; theta unchanged")
        theta_after = session.theta

    # (4) branch on the lowest knowledge state
    low = detect_low_state(theta_after, cfg.epsilon_low, cfg.low_state_rule)
    branch = Branch.LOW if low is not None else Branch.HIGH
    mode = (QuestionMode.UNDERSTANDING_BIASED if branch is Branch.LOW
            else QuestionMode.APPLICATION_BIASED)

    # (5) inspiring text focused on the low concept, or across all concepts
    focus = low[0] if low is not None else None
    try:
        texts = select_inspiring_text(bank, theta_after, focus, cfg.top_k_texts)
    except EmptyCandidateError as exc:
        warnings.append(str(exc))
        texts = []

    # (6)-(7) generate, parse, score, filter
    questions: list[GuidingQuestion] = []
    if texts:
        if touched:
            prompt_concepts = [
                session.concept_set.concepts[session.concept_set.index_of(cid)].name
                for cid in touched
            ]
        elif low is not None:
            prompt_concepts = [session.concept_set.concepts[low[0]].name]
        else:
            prompt_concepts = session.concept_set.names
        qg_prompt = assemble_guidance_prompt(mode, prompt_concepts, texts)
        reply = gateway.complete(qg_prompt, "Generate the guiding questions.")
        parsed = parse_guiding_questions(reply)
        target = _target_concept(session.concept_set, theta_after, touched, low)
        scored = [
            score_question(q, target, theta_after, bank, cfg.weights, mode)
            for q in parsed
        ]
        questions, rejected = filter_questions(scored, cfg.quality_threshold)
        if rejected:
            warnings.append(f"{len(rejected)} question(s) fell below quality threshold")

    # commit
    session.history = new_history
    session.theta = theta_after
    session.turns.append(TurnRecord(
        round=round_index,
        query=query,
        response=response,
        touched_concepts=tuple(touched),
        branch=branch,
        theta_after=tuple(theta_after.tolist()),
        questions=tuple(questions),
        inspiring_texts=tuple(texts),
        warnings=tuple(warnings),
    ))
    new_calls = gateway.calls[calls_before:]
    for idx, call in enumerate(new_calls, start=calls_before):
        if idx < calls_after_tutor:
            role = "tutor"
        elif idx < calls_after_extract:
            role = "concept_extraction"
        else:
            role = "question_generation"
        session.llm_calls.append({
            "round": round_index,
            "role": role,
            "prompt_hash": call.prompt_hash,
            "reply": call.reply,
        })
    session.updated_at = clock()
    return TurnResult(
        response=response,
        touched_concepts=list(touched),
        theta_after=theta_after,
        guiding_questions=questions,
        branch=branch,
        inspiring_texts=texts,
        warnings=warnings,
    )


def _target_concept(concept_set: ConceptSet, theta: KnowledgeState,
                    touched: list[str], low) -> str:
    if low is not None:
        return concept_set.concepts[low[0]].concept_id
    pool = touched or concept_set.ids
    return min(pool, key=lambda cid: theta[concept_set.index_of(cid)])


def answer_item(session: Session, bank: ItemBank, item_id: str, selected_index: int,
                clock=utc_now_iso) -> dict:
    """Grade a real quiz answer and append it as genuine response evidence.

    Theta is refit from the answer only when the session opted in; the
    record is kept either way for later calibration.
    """
    item = bank.item(item_id)
    if not isinstance(selected_index, int) or not 0 <= selected_index <= 3:
        raise ArgumentError("selected_index must be an integer in 0..3")
    correct = selected_index == item.answer_index
    session.history.append(ResponseRecord(
        item_id=item_id,
        params=item.params,
        outcome=1 if correct else 0,
        round=session.next_round,
        virtual=False,
    ))
    if session.use_answer_evidence:
        session.theta = update_knowledge_state(session.theta, session.history, session.optimizer)
    session.updated_at = clock()
    return {
        "item_id": item_id,
        "correct": correct,
        "answer_index": item.answer_index,
        "theta": session.theta.tolist(),
    }


# --- persistence ------------------------------------------------------------

def _record_to_dict(rec: ResponseRecord) -> dict:
    return {
        "item_id": rec.item_id,
        "a": [float(x) for x in rec.params.a],
        "b": [float(x) for x in rec.params.b],
        "outcome": rec.outcome,
        "round": rec.round,
        "virtual": rec.virtual,
    }


def _question_to_dict(q: GuidingQuestion) -> dict:
    return {
        "text": q.text, "target_concept": q.target_concept, "align": q.align,
        "mi": q.mi, "complexity": q.complexity, "quality": q.quality,
        "mode": q.mode.value,
    }


def _text_to_dict(t: InspiringText) -> dict:
    return {
        "fragment": t.fragment, "concept_id": t.concept_id,
        "difficulty": t.difficulty, "suitability": t.suitability,
    }


def session_to_dict(session: Session) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "session_id": session.session_id,
        "concepts": [
            {"id": c.concept_id, "name": c.name} for c in session.concept_set.concepts
        ],
        "initial_theta": session.initial_theta.tolist(),
        "theta": session.theta.tolist(),
        "history": [_record_to_dict(r) for r in session.history],
        "turns": [
            {
                "round": t.round,
                "query": t.query,
                "response": t.response,
                "touched_concepts": list(t.touched_concepts),
                "branch": t.branch.value,
                "theta_after": list(t.theta_after),
                "questions": [_question_to_dict(q) for q in t.questions],
                "inspiring_texts": [_text_to_dict(x) for x in t.inspiring_texts],
                "warnings": list(t.warnings),
            }
            for t in session.turns
        ],
        "llm_calls": list(session.llm_calls),
        "config": {
            "guidance": {
                "epsilon_low": session.guidance.epsilon_low,
                "top_k_texts": session.guidance.top_k_texts,
                "quality_threshold": session.guidance.quality_threshold,
                "weights": {
                    "alpha": session.guidance.weights.alpha,
                    "beta": session.guidance.weights.beta,
                    "gamma": session.guidance.weights.gamma,
                },
                "low_state_rule": session.guidance.low_state_rule,
            },
            "optimizer": {
                "learning_rate": session.optimizer.learning_rate,
                "beta1": session.optimizer.beta1,
                "beta2": session.optimizer.beta2,
                "epsilon_num": session.optimizer.epsilon_num,
                "epochs": session.optimizer.epochs,
                "seed": session.optimizer.seed,
            },
            "gateway": {
                "endpoint_url": session.gateway_cfg.endpoint_url,
                "model_name": session.gateway_cfg.model_name,
                "api_key_env": session.gateway_cfg.api_key_env,
                "timeout": session.gateway_cfg.timeout,
                "max_retries": session.gateway_cfg.max_retries,
                "temperature": session.gateway_cfg.temperature,
            },
        },
        "created_at": session.created_at,
        "updated_at": session.updated_at,
        "terminated": session.terminated,
        "use_answer_evidence": session.use_answer_evidence,
    }


def persist_session(session: Session, path) -> None:
    """Deterministic JSON dump: same session state, same bytes."""
    payload = json.dumps(session_to_dict(session), indent=2, sort_keys=True,
                         ensure_ascii=False)
    Path(path).write_text(payload + "\n", encoding="utf-8")


def write_call_log(session: Session, path) -> None:
    """JSON-lines gateway log: one {round, role, prompt_hash, reply} per call."""
    lines = [json.dumps(call, sort_keys=True, ensure_ascii=False)
             for call in session.llm_calls]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def _need(data: dict, key: str, context: str):
    if key not in data:
        raise RestoreError(f"session file is missing field {context}{key!r}")
    return data[key]


def restore_session(path) -> Session:
    """Inverse of persist_session; field-for-field lossless."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise RestoreError(f"session file is not valid JSON: {exc}") from exc
    if _need(data, "schema_version", "") != SCHEMA_VERSION:
        raise RestoreError(
            f"unsupported schema_version {data.get('schema_version')!r}"
        )
    try:
        concept_set = ConceptSet(tuple(
            Concept(c["id"], c["name"]) for c in _need(data, "concepts", "")
        ))
        cfg = _need(data, "config", "")
        guidance = GuidanceConfig(
            epsilon_low=cfg["guidance"]["epsilon_low"],
            top_k_texts=cfg["guidance"]["top_k_texts"],
            quality_threshold=cfg["guidance"]["quality_threshold"],
            weights=QualityWeights(**cfg["guidance"]["weights"]),
            low_state_rule=cfg["guidance"]["low_state_rule"],
        )
        optimizer = OptimizerConfig(**cfg["optimizer"])
        gateway_cfg = GatewayConfig(**cfg["gateway"])
        history = [
            ResponseRecord(
                item_id=r["item_id"],
                params=ItemParameters(a=r["a"], b=r["b"]),
                outcome=r["outcome"],
                round=r["round"],
                virtual=r["virtual"],
            )
            for r in _need(data, "history", "")
        ]
        turns = [
            TurnRecord(
                round=t["round"],
                query=t["query"],
                response=t["response"],
                touched_concepts=tuple(t["touched_concepts"]),
                branch=Branch(t["branch"]),
                theta_after=tuple(t["theta_after"]),
                questions=tuple(
                    GuidingQuestion(
                        text=q["text"], target_concept=q["target_concept"],
                        align=q["align"], mi=q["mi"], complexity=q["complexity"],
                        quality=q["quality"], mode=QuestionMode(q["mode"]),
                    )
                    for q in t["questions"]
                ),
                inspiring_texts=tuple(
                    InspiringText(**x) for x in t["inspiring_texts"]
                ),
                warnings=tuple(t["warnings"]),
            )
            for t in _need(data, "turns", "")
        ]
        session = Session(
            session_id=_need(data, "session_id", ""),
            concept_set=concept_set,
            initial_theta=KnowledgeState(theta=_need(data, "initial_theta", "")),
            theta=KnowledgeState(theta=_need(data, "theta", "")),
            guidance=guidance,
            optimizer=optimizer,
            gateway_cfg=gateway_cfg,
            history=history,
            turns=turns,
            llm_calls=list(_need(data, "llm_calls", "")),
            created_at=_need(data, "created_at", ""),
            updated_at=_need(data, "updated_at", ""),
            terminated=_need(data, "terminated", ""),
            use_answer_evidence=_need(data, "use_answer_evidence", ""),
        )
    except RestoreError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise RestoreError(f"session file field invalid: {exc}") from exc
    return session
