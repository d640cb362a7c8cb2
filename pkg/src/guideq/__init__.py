"""guideq: adaptive guiding-question engine.

Tracks a user's per-concept knowledge state with a concept-tagged 2PL
response model, selects difficulty-matched inspiring text, and generates
quality-scored guiding questions through a (mockable) chat-completion
gateway.
"""

from .calibrate import (
    CalibrationResult,
    CeirtCalibrator,
    calibrate_item_bank,
    update_knowledge_state,
)
from .corpus import (
    CalibratedItem,
    ConceptEntry,
    CorpusStats,
    ItemBank,
    Scenario,
    compute_corpus_stats,
    load_item_bank,
    save_item_bank,
    tokenize,
)
from .errors import GuideqError
from .gateway import (
    GatewayConfig,
    HttpGateway,
    MockGateway,
    MockReply,
    MockScript,
    extract_concepts,
    parse_guiding_questions,
)
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
    suitability_score,
)
from .irt import (
    Concept,
    ConceptSet,
    ItemParameters,
    KnowledgeState,
    OptimizerConfig,
    ResponseRecord,
    initial_knowledge_state,
    loss_and_gradients,
    predict_correct,
    simulate_evidence,
)
from .pipeline import PipelineArtifacts, PipelineStage, generate_dataset
from .reports import ThetaTrace, export_knowledge_report, trace_from_session
from .session import (
    Branch,
    Session,
    TurnResult,
    create_session,
    persist_session,
    restore_session,
    run_turn,
)
from .simulate import (
    AblationConfig,
    Policy,
    SimulatedLearner,
    run_ablation,
    run_policy_comparison,
)
from .textmetrics import SimilarityScores, text_similarity

__version__ = "0.1.0"

__all__ = [
    "AblationConfig", "Branch", "CalibratedItem", "CalibrationResult",
    "CeirtCalibrator", "Concept", "ConceptEntry", "ConceptSet", "CorpusStats",
    "GatewayConfig", "GuidanceConfig", "GuideqError", "GuidingQuestion",
    "HttpGateway", "InspiringText", "ItemBank", "ItemParameters",
    "KnowledgeState", "MockGateway", "MockReply", "MockScript",
    "OptimizerConfig", "PipelineArtifacts", "PipelineStage", "Policy",
    "QualityWeights", "QuestionMode", "ResponseRecord", "Scenario", "Session",
    "SimilarityScores", "SimulatedLearner", "ThetaTrace", "TurnResult",
    "assemble_guidance_prompt", "calibrate_item_bank", "compute_corpus_stats",
    "create_session", "detect_low_state", "export_knowledge_report",
    "extract_concepts", "filter_questions", "generate_dataset",
    "initial_knowledge_state", "load_item_bank", "loss_and_gradients",
    "parse_guiding_questions", "persist_session", "predict_correct",
    "restore_session", "run_ablation", "run_policy_comparison", "run_turn",
    "save_item_bank", "score_question", "select_inspiring_text",
    "simulate_evidence", "suitability_score", "text_similarity", "tokenize",
    "trace_from_session", "update_knowledge_state",
]
