"""Knowledge-state reporting: per-round CSV traces and radar JSON payloads."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ArgumentError, DimensionError
from .session import Session


@dataclass(frozen=True)
class ThetaTrace:
    """Theta trajectory for one run: row r is the state after round r (row 0 is the start)."""

    trace_id: str
    concept_ids: tuple[str, ...]
    thetas: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "concept_ids", tuple(self.concept_ids))
        object.__setattr__(self, "thetas", tuple(tuple(float(x) for x in row)
                                                 for row in self.thetas))
        if not self.thetas:
            raise ArgumentError("a trace needs at least the starting theta")
        k = len(self.concept_ids)
        for row in self.thetas:
            if len(row) != k:
                raise DimensionError(
                    f"trace {self.trace_id!r}: row length {len(row)} != K={k}"
                )


def trace_from_session(session: Session) -> ThetaTrace:
    rows = [tuple(session.initial_theta.tolist())]
    rows.extend(t.theta_after for t in session.turns)
    return ThetaTrace(
        trace_id=session.session_id,
        concept_ids=tuple(session.concept_set.ids),
        thetas=tuple(rows),
    )


def export_knowledge_report(traces, out_dir) -> list[Path]:
    """Write one theta CSV and one radar JSON per trace; returns the paths.

    CSV is long-form with header round,concept_id,theta: one row per
    (round, concept). The radar JSON carries the final theta for plotting.
    """
    traces = list(traces)
    if not traces:
        raise ArgumentError("at least one trace is required")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for trace in traces:
        csv_path = out_dir / f"knowledge_{trace.trace_id}.csv"
        with csv_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "concept_id", "theta"])
            for round_index, row in enumerate(trace.thetas):
                for cid, value in zip(trace.concept_ids, row):
                    writer.writerow([round_index, cid, repr(value)])
        radar_path = out_dir / f"radar_{trace.trace_id}.json"
        radar_path.write_text(json.dumps({
            "concepts": list(trace.concept_ids),
            "theta": list(trace.thetas[-1]),
            "trace_id": trace.trace_id,
        }, indent=2) + "\n", encoding="utf-8")
        written.extend([csv_path, radar_path])
    return written


def export_ablation_csv(result, path) -> Path:
    """Ablation CSV with header gap,mean_gain,std_err,seeds."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gap", "mean_gain", "std_err", "seeds"])
        for gap, mean_gain, std_err, seeds in result.rows():
            writer.writerow([repr(gap), repr(mean_gain), repr(std_err), seeds])
    return path


def export_accuracy_csv(comparison, path) -> Path:
    """Per-policy per-seed per-round quiz accuracy, long form."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["policy", "seed", "round", "accuracy"])
        for policy, traces in comparison.traces.items():
            for trace in traces:
                for round_index, acc in enumerate(trace.accuracy_rounds, start=1):
                    writer.writerow([policy.value, trace.seed, round_index, repr(acc)])
    return path
