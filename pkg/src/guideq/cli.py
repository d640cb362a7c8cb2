"""Command-line entry point binding the library for batch and interactive use.

Commands: ingest, calibrate, simulate, ablate, evaluate, serve, chat.
A JSON config file can predefine any flag value; explicit flags win.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .calibrate import calibrate_item_bank
from .corpus import ItemBank, item_to_dict, load_item_bank, save_item_bank
from .errors import ArgumentError, GuideqError
from .gateway import GatewayConfig, HttpGateway, MockGateway, MockReply, MockScript
from .guidance import GuidanceConfig
from .irt import OptimizerConfig
from .pipeline import PipelineArtifacts, PipelineStage, generate_dataset
from .reports import (
    ThetaTrace,
    export_ablation_csv,
    export_accuracy_csv,
    export_knowledge_report,
)
from .session import (
    create_session,
    persist_session,
    run_turn,
    utc_now_iso,
    write_call_log,
)
from .simulate import (
    AblationConfig,
    Policy,
    SimulatedLearner,
    run_ablation,
    run_policy_comparison,
)
from .textmetrics import text_similarity


def synthetic_clock():
    """Monotone fake timestamps so mock runs are byte-reproducible."""
    counter = itertools.count()

    def clock() -> str:
        return datetime.fromtimestamp(next(counter), tz=timezone.utc).isoformat()

    return clock


def load_mock_script(path) -> MockScript:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = []
    for entry in data:
        if isinstance(entry, str):
            entries.append(MockReply(reply=entry))
        else:
            entries.append(MockReply(reply=entry["reply"], match=entry.get("match")))
    return MockScript(tuple(entries))


def make_gateway_factory(args):
    if args.gateway == "mock":
        if not args.mock_script:
            raise ArgumentError("--gateway mock requires --mock-script")
        script = load_mock_script(args.mock_script)

        def factory():
            return MockGateway(script)

        return factory
    if not args.endpoint or not args.model:
        raise ArgumentError("--gateway live requires --endpoint and --model")
    cfg = GatewayConfig(endpoint_url=args.endpoint, model_name=args.model,
                        api_key_env=args.api_key_env)

    def factory():
        return HttpGateway(cfg)

    return factory


def parse_gap_grid(spec: str) -> list[float]:
    """Either comma-separated values or start:stop:step (stop inclusive)."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ArgumentError(f"--gaps must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ArgumentError("--gaps step must be > 0")
        return [float(g) for g in np.arange(start, stop + step / 2.0, step)]
    return [float(p) for p in spec.split(",") if p.strip()]


def _read_lines(path) -> list[str]:
    return [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]


# --- command handlers -------------------------------------------------------

def cmd_ingest(args) -> int:
    factory = make_gateway_factory(args)
    gateway = factory()
    documents = []
    for doc_path in args.docs:
        documents.append(Path(doc_path).read_text(encoding="utf-8"))
    artifacts = PipelineArtifacts()
    stages = [PipelineStage.CONCEPTS, PipelineStage.SENTENCES,
              PipelineStage.QAPAIRS, PipelineStage.FILTER]
    if args.stage != "all":
        stages = stages[: stages.index(PipelineStage(args.stage)) + 1]
    for stage in stages:
        artifacts = generate_dataset(documents, gateway, stage, artifacts)
        print(f"stage {stage.value}: done")
    data = {
        "concepts": [
            {"id": e.concept_id, "name": e.name, "sentences": list(e.sentences)}
            for e in artifacts.lexicon
        ] or [
            {"id": c.concept_id, "name": c.name, "sentences": []}
            for c in (artifacts.concept_set.concepts if artifacts.concept_set else ())
        ],
        "items": [item_to_dict(it) for it in artifacts.items],
    }
    out = Path(args.out or "bank.json")
    out.write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(artifacts.items)} items, unverified)")
    return 0


def _read_responses_csv(path) -> list[tuple[str, str, int]]:
    triples = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"user_id", "item_id", "outcome"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ArgumentError(f"responses CSV must have columns {sorted(required)}")
        for row in reader:
            triples.append((row["user_id"], row["item_id"], int(row["outcome"])))
    return triples


def cmd_calibrate(args) -> int:
    bank = load_item_bank(args.bank)
    if not args.responses:
        raise ArgumentError("calibrate requires --responses (user_id,item_id,outcome CSV)")
    triples = _read_responses_csv(args.responses)
    item_concepts = {
        it.item_id: [bank.concept_set.index_of(c) for c in it.concept_ids]
        for it in bank.items
    }
    cfg = OptimizerConfig.for_calibration(seed=args.seed, epochs=args.epochs or 200)
    result = calibrate_item_bank(triples, bank.concept_set.k, cfg, item_concepts)
    fitted = dict(zip(result.item_ids, range(len(result.item_ids))))
    new_items = []
    for it in bank.items:
        if it.item_id in fitted:
            new_items.append(type(it)(
                item_id=it.item_id, question=it.question, options=it.options,
                answer_index=it.answer_index, concept_ids=it.concept_ids,
                params=result.params_for(it.item_id), scenario=it.scenario,
                source_sentence=it.source_sentence, verified=it.verified,
                experiment_related=it.experiment_related,
            ))
        else:
            new_items.append(it)
    save_item_bank(ItemBank.build(bank.lexicon, new_items), args.bank)
    print(f"calibrated {len(fitted)} items over {len(result.user_ids)} users")
    print(f"loss: {result.initial_loss:.6f} -> {result.final_loss:.6f}")
    if result.degenerate_items:
        print(f"degenerate items (all-same outcomes): {', '.join(map(str, result.degenerate_items))}")
    return 0


def cmd_simulate(args) -> int:
    bank = load_item_bank(args.bank)
    seeds = list(range(args.seeds))
    comparison = run_policy_comparison(
        bank, list(Policy), rounds=args.rounds, seeds=seeds, a_sim=args.a_sim,
    )
    out_dir = Path(args.out or "simulate-out")
    out_dir.mkdir(parents=True, exist_ok=True)
    acc_path = export_accuracy_csv(comparison, out_dir / "accuracy.csv")
    traces = [
        ThetaTrace(
            trace_id=f"{policy.value}_seed{seeds[0]}",
            concept_ids=tuple(bank.concept_set.ids),
            thetas=tuple(tuple(row) for row in comparison.traces[policy][0].theta_rounds),
        )
        for policy in Policy
    ]
    written = export_knowledge_report(traces, out_dir)
    win = comparison.win_rate(Policy.SUITABILITY, Policy.UNIFORM_RANDOM)
    print(f"suitability vs uniform-random win rate: {win:.2f} over {len(seeds)} seeds")
    print(f"wrote {acc_path} and {len(written)} report files to {out_dir}")
    if args.emit_responses:
        _emit_responses(bank, args.users, args.seed, args.emit_responses)
    return 0


def _emit_responses(bank: ItemBank, n_users: int, seed: int, path) -> None:
    """Synthetic interaction log: n_users simulated users answer every item."""
    rng = np.random.default_rng([seed, 1311])
    k = bank.concept_set.k
    thetas = rng.normal(0.0, 1.0, size=(n_users, k))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "item_id", "outcome"])
        for u in range(n_users):
            for it in bank.items:
                z = float(it.params.a @ thetas[u] - it.params.b.sum())
                p = 1.0 / (1.0 + np.exp(-z))
                writer.writerow([f"user{u:03d}", it.item_id, int(rng.random() < p)])
    print(f"wrote synthetic responses for {n_users} users to {path}")


def cmd_ablate(args) -> int:
    cfg = AblationConfig(
        gap_grid=tuple(parse_gap_grid(args.gaps)),
        rounds=args.rounds,
        seeds=tuple(range(args.seeds)),
    )
    learner = SimulatedLearner(true_theta=np.zeros(1), a_sim=args.a_sim)
    result = run_ablation(learner, cfg)
    out = Path(args.out or "ablation.csv")
    export_ablation_csv(result, out)
    print(f"peak gap: {result.peak_gap}")
    print(f"wrote {out} ({len(result.gaps)} grid rows)")
    return 0


def cmd_evaluate(args) -> int:
    candidates = _read_lines(args.candidates)
    references = _read_lines(args.references)
    if not candidates:
        raise ArgumentError("candidates file is empty")
    rows = [text_similarity(c, references) for c in candidates]
    out = Path(args.out or "similarity.csv")
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["candidate_index", "bleu4", "rouge1_f", "rouge2_f", "rougeL_f"])
        for idx, s in enumerate(rows):
            writer.writerow([idx, repr(s.bleu4), repr(s.rouge1_f),
                             repr(s.rouge2_f), repr(s.rougeL_f)])
        means = [float(np.mean([getattr(s, f) for s in rows]))
                 for f in ("bleu4", "rouge1_f", "rouge2_f", "rougeL_f")]
        writer.writerow(["mean"] + [repr(m) for m in means])
    print("mean BLEU-4 {:.4f}  ROUGE-1 {:.4f}  ROUGE-2 {:.4f}  ROUGE-L {:.4f}".format(*means))
    print(f"wrote {out}")
    return 0


def cmd_serve(args) -> int:
    from .server import serve_api

    bank = load_item_bank(args.bank)
    factory = make_gateway_factory(args)
    serve_api(bank, factory, bind=args.bind, seed=args.seed)
    return 0


def cmd_chat(args) -> int:
    bank = load_item_bank(args.bank)
    factory = make_gateway_factory(args)
    gateway = factory()
    deterministic = args.gateway == "mock" and args.seed is not None
    clock = synthetic_clock() if deterministic else utc_now_iso
    rng = np.random.default_rng(args.seed) if args.seed is not None else None
    session = create_session(
        bank,
        guidance=GuidanceConfig(),
        rng=rng,
        clock=clock,
    )
    out = Path(args.out or "session.json")
    print(f"session {session.session_id} over {bank.concept_set.k} concepts; type 'exit' to end")
    while True:
        try:
            query = input("you> ")
        except EOFError:
            query = "exit"
        if not query.strip():
            continue
        result = run_turn(session, query, bank, gateway, clock)
        if result is None:
            break
        print(f"tutor> {result.response}")
        if result.touched_concepts:
            print(f"[concepts: {', '.join(result.touched_concepts)}; branch: {result.branch.value}]")
        for idx, q in enumerate(result.guiding_questions, start=1):
            print(f"  {idx}. {q.text}  (quality {q.quality:.2f})")
    persist_session(session, out)
    log_path = out.with_suffix(".calls.jsonl")
    write_call_log(session, log_path)
    print(f"session persisted to {out} (gateway log: {log_path})")
    return 0


# --- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="guideq",
        description="Adaptive guiding-question engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file predefining flag values")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output file or directory")

    def gateway_flags(p):
        p.add_argument("--gateway", choices=["mock", "live"], default="mock")
        p.add_argument("--endpoint", help="live gateway base URL")
        p.add_argument("--model", help="live gateway model name")
        p.add_argument("--mock-script", help="JSON reply script for the mock gateway")
        p.add_argument("--api-key-env", default="GUIDEQ_API_KEY",
                       help="environment variable holding the API key")

    p = sub.add_parser("ingest", help="run the dataset-generation pipeline")
    common(p)
    gateway_flags(p)
    p.add_argument("--docs", nargs="+", required=True, help="plain-text document files")
    p.add_argument("--stage", default="all",
                   choices=["all", "concepts", "sentences", "qapairs", "filter"])

    p = sub.add_parser("calibrate", help="fit item parameters from a response log")
    common(p)
    p.add_argument("--bank", required=True)
    p.add_argument("--responses", help="CSV with user_id,item_id,outcome")
    p.add_argument("--epochs", type=int, default=200)

    p = sub.add_parser("simulate", help="race study policies with a simulated learner")
    common(p)
    p.add_argument("--bank", required=True)
    p.add_argument("--rounds", type=int, default=20)
    p.add_argument("--seeds", type=int, default=25, help="number of seeds (0..n-1)")
    p.add_argument("--a-sim", type=float, default=1.0)
    p.add_argument("--emit-responses", help="also write a synthetic response CSV here")
    p.add_argument("--users", type=int, default=50,
                   help="simulated users for --emit-responses")

    p = sub.add_parser("ablate", help="sweep the difficulty-ability gap")
    common(p)
    p.add_argument("--gaps", default="0:3:0.25", help="start:stop:step or comma list")
    p.add_argument("--rounds", type=int, default=20)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--a-sim", type=float, default=1.0)

    p = sub.add_parser("evaluate", help="BLEU/ROUGE similarity of candidate questions")
    common(p)
    p.add_argument("--candidates", required=True, help="one candidate question per line")
    p.add_argument("--references", required=True, help="one reference question per line")

    p = sub.add_parser("serve", help="run the HTTP session service")
    common(p)
    gateway_flags(p)
    p.add_argument("--bank", required=True)
    p.add_argument("--bind", default="127.0.0.1:8000")

    p = sub.add_parser("chat", help="interactive terminal session")
    common(p)
    gateway_flags(p)
    p.add_argument("--bank", required=True)

    return parser


def apply_config_file(args: argparse.Namespace, argv: list[str]) -> None:
    """Fill in values from --config for flags not given on the command line."""
    if not args.config:
        return
    values = json.loads(Path(args.config).read_text(encoding="utf-8"))
    given = {a.split("=", 1)[0].lstrip("-").replace("-", "_") for a in argv
             if a.startswith("--")}
    for key, value in values.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and attr not in given:
            setattr(args, attr, value)


HANDLERS = {
    "ingest": cmd_ingest,
    "calibrate": cmd_calibrate,
    "simulate": cmd_simulate,
    "ablate": cmd_ablate,
    "evaluate": cmd_evaluate,
    "serve": cmd_serve,
    "chat": cmd_chat,
}


def dispatch(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        apply_config_file(args, argv)
        return HANDLERS[args.command](args)
    except GuideqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
