"""Trial records, the combined throughput score, and report aggregation.

The task score weighs correctness 0.8 and speed 0.2. It is evaluated as
(4c + v) / 5 so that the benchmark's round values (0.4, 1.0, 1.2) are
exact in floating point. Speed is the baseline-over-measured time ratio,
unbounded above; incomplete trials score zero speed by default so a fast
failure cannot outscore a slow success.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .mechanisms import GRASP_TASKS, MANIPULATION_TASKS, TASK_IDS

RECORD_VERSION = 1
BASELINE_FORMAT_VERSION = 1
REPORT_FORMAT_VERSION = 1

CORRECTNESS_WEIGHT = 0.8
SPEED_WEIGHT = 0.2


class ScoringError(ValueError):
    """Rejected scoring input."""


@dataclass(frozen=True)
class TrialRecord:
    """One finalized benchmark attempt."""

    task_id: str
    embodiment_id: str
    start_time: float
    end_time: float
    duration: float
    correctness: float
    events: tuple[tuple[float, float], ...] = ()  # (t, progress) increments
    source: str = "unknown"
    practice: bool = False
    final_state: dict = field(default_factory=dict)
    input_frames: int = 0
    dropped_frames: int = 0
    rejected_steps: int = 0

    def __post_init__(self):
        if not (0.0 <= self.correctness <= 1.0):
            raise ScoringError(f"correctness must be in [0, 1], got {self.correctness}")
        if self.duration <= 0:
            raise ScoringError(f"duration must be positive, got {self.duration}")
        times = [t for t, _ in self.events]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ScoringError("event log timestamps must be strictly increasing")
        object.__setattr__(self, "events", tuple((float(t), float(p)) for t, p in self.events))

    @property
    def completed(self) -> bool:
        return self.correctness >= 1.0

    def to_json(self) -> str:
        d = {
            "record_version": RECORD_VERSION,
            "task_id": self.task_id,
            "embodiment_id": self.embodiment_id,
            "start_time": self.start_time,
            "end_time": self.end_time,
            "duration": self.duration,
            "correctness": self.correctness,
            "events": [[t, p] for t, p in self.events],
            "source": self.source,
            "practice": self.practice,
            "final_state": self.final_state,
            "input_frames": self.input_frames,
            "dropped_frames": self.dropped_frames,
            "rejected_steps": self.rejected_steps,
        }
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "TrialRecord":
        d = json.loads(line)
        version = d.get("record_version")
        if version != RECORD_VERSION:
            raise ScoringError(f"unsupported record_version {version!r} (expected {RECORD_VERSION})")
        return cls(
            task_id=d["task_id"],
            embodiment_id=d["embodiment_id"],
            start_time=float(d["start_time"]),
            end_time=float(d["end_time"]),
            duration=float(d["duration"]),
            correctness=float(d["correctness"]),
            events=tuple((float(t), float(p)) for t, p in d.get("events", [])),
            source=d.get("source", "unknown"),
            practice=bool(d.get("practice", False)),
            final_state=d.get("final_state", {}),
            input_frames=int(d.get("input_frames", 0)),
            dropped_frames=int(d.get("dropped_frames", 0)),
            rejected_steps=int(d.get("rejected_steps", 0)),
        )


# ----------------------------------------------------------------------
# Trial store: append-only, one record per line
# ----------------------------------------------------------------------

def append_trial(path, record: TrialRecord) -> None:
    with open(path, "a") as f:
        f.write(record.to_json())
        f.write("\n")


def read_trials(path) -> list[TrialRecord]:
    records = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(TrialRecord.from_json(line))
    return records


# ----------------------------------------------------------------------
# Baselines
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class BaselineEntry:
    time: float  # mean human completion time, s
    note: str  # provenance
    n: int = 0  # trials behind the mean

    def __post_init__(self):
        if self.time <= 0:
            raise ScoringError(f"baseline time must be positive, got {self.time}")
        if not self.note:
            raise ScoringError("baseline entries require a provenance note")


@dataclass(frozen=True)
class BaselineTable:
    entries: dict[str, BaselineEntry]

    def __contains__(self, task_id) -> bool:
        return task_id in self.entries

    def time(self, task_id: str) -> float:
        try:
            return self.entries[task_id].time
        except KeyError:
            raise ScoringError(f"no baseline for task {task_id!r}") from None

    @property
    def complete(self) -> bool:
        return all(t in self.entries for t in TASK_IDS)

    def missing(self) -> list[str]:
        return [t for t in TASK_IDS if t not in self.entries]

    def to_dict(self) -> dict:
        return {
            "format_version": BASELINE_FORMAT_VERSION,
            "baselines": {
                t: {"time": e.time, "note": e.note, "n": e.n}
                for t, e in sorted(self.entries.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BaselineTable":
        version = data.get("format_version")
        if version != BASELINE_FORMAT_VERSION:
            raise ScoringError(
                f"unsupported baseline format_version {version!r} (expected {BASELINE_FORMAT_VERSION})"
            )
        return cls(entries={
            t: BaselineEntry(time=float(d["time"]), note=d["note"], n=int(d.get("n", 0)))
            for t, d in data["baselines"].items()
        })


def save_baselines(table: BaselineTable, path) -> None:
    import yaml

    with open(path, "w") as f:
        yaml.safe_dump(table.to_dict(), f, sort_keys=False)


def load_baselines(path) -> BaselineTable:
    import yaml

    with open(path) as f:
        return BaselineTable.from_dict(yaml.safe_load(f))


# ----------------------------------------------------------------------
# Scores
# ----------------------------------------------------------------------

def speed_score(baseline_time: float, duration: float, completed: bool) -> float:
    """Baseline-over-measured ratio for completed trials, else 0."""
    if baseline_time <= 0 or duration <= 0:
        raise ScoringError("times must be positive")
    if not completed:
        return 0.0
    return baseline_time / duration


@dataclass(frozen=True)
class TaskScore:
    correctness: float
    speed: float
    score: float

    @classmethod
    def combine(cls, correctness: float, speed: float) -> "TaskScore":
        if not (0.0 <= correctness <= 1.0):
            raise ScoringError(f"correctness must be in [0, 1], got {correctness}")
        if speed < 0:
            raise ScoringError(f"speed must be non-negative, got {speed}")
        return cls(correctness=correctness, speed=speed,
                   score=(4.0 * correctness + speed) / 5.0)


def task_score(correctness: float, speed: float) -> TaskScore:
    return TaskScore.combine(correctness, speed)


def trial_score(record: TrialRecord, baselines: BaselineTable,
                speed_requires_completion: bool = True) -> TaskScore:
    if record.task_id not in baselines:
        raise ScoringError(f"no baseline for task {record.task_id!r}")
    completed = record.completed if speed_requires_completion else True
    v = speed_score(baselines.time(record.task_id), record.duration, completed)
    return task_score(record.correctness, v)


def correctness_from_state(mechanism, state) -> float:
    """Correctness of a finalized trial from its mechanism end state."""
    return float(mechanism.progress(state))


# ----------------------------------------------------------------------
# Aggregation
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class TaskAggregate:
    task_id: str
    embodiment_id: str
    n: int
    mean: float
    std: float  # population
    mean_correctness: float
    mean_speed: float


@dataclass(frozen=True)
class EmbodimentAggregate:
    embodiment_id: str
    n_repetitions: int
    mean: float
    std: float  # population, across repetition-level task-averaged scores


@dataclass(frozen=True)
class BenchmarkReport:
    per_task: tuple[TaskAggregate, ...]
    per_embodiment: tuple[EmbodimentAggregate, ...]
    n_trials: int

    def radar_data(self) -> dict:
        """Per-embodiment task-mean arrays split into the manipulation and
        grasp spokes."""
        by_emb: dict[str, dict[str, float]] = {}
        for agg in self.per_task:
            by_emb.setdefault(agg.embodiment_id, {})[agg.task_id] = agg.mean
        return {
            "manipulation_labels": list(MANIPULATION_TASKS),
            "grasp_labels": list(GRASP_TASKS),
            "embodiments": {
                emb: {
                    "manipulation": [scores.get(t) for t in MANIPULATION_TASKS],
                    "grasp": [scores.get(t) for t in GRASP_TASKS],
                }
                for emb, scores in sorted(by_emb.items())
            },
        }

    def to_dict(self) -> dict:
        return {
            "format_version": REPORT_FORMAT_VERSION,
            "n_trials": self.n_trials,
            "per_task": [
                {
                    "task_id": a.task_id,
                    "embodiment_id": a.embodiment_id,
                    "n": a.n,
                    "mean": a.mean,
                    "std": a.std,
                    "mean_correctness": a.mean_correctness,
                    "mean_speed": a.mean_speed,
                }
                for a in self.per_task
            ],
            "per_embodiment": [
                {
                    "embodiment_id": a.embodiment_id,
                    "n_repetitions": a.n_repetitions,
                    "mean": a.mean,
                    "std": a.std,
                }
                for a in self.per_embodiment
            ],
            "radar": self.radar_data(),
        }


def aggregate(trials: list[TrialRecord], baselines: BaselineTable,
              include_practice: bool = False,
              speed_requires_completion: bool = True) -> BenchmarkReport:
    """Per-task mean/std plus the per-embodiment aggregate: each repetition's
    scores are averaged over tasks, then mean/std taken across repetitions."""
    recorded = [t for t in trials if include_practice or not t.practice]
    if not recorded:
        raise ScoringError("no trials to aggregate")
    for t in recorded:
        if t.task_id not in baselines:
            raise ScoringError(f"no baseline for task {t.task_id!r}")

    # sort each task's trials by start time so reductions are independent
    # of input ordering (float sums are order-sensitive)
    scores: dict[tuple[str, str], list[tuple[float, float, float, float]]] = {}
    for t in recorded:
        s = trial_score(t, baselines, speed_requires_completion)
        scores.setdefault((t.embodiment_id, t.task_id), []).append(
            (t.start_time, s.score, s.correctness, s.speed)
        )
    for rows in scores.values():
        rows.sort()

    per_task = []
    embodiments = sorted({e for e, _ in scores})
    for emb in embodiments:
        for task_id in TASK_IDS:
            key = (emb, task_id)
            if key not in scores:
                continue
            rows = scores[key]
            vals = np.array([s for _, s, _, _ in rows])
            per_task.append(TaskAggregate(
                task_id=task_id,
                embodiment_id=emb,
                n=len(vals),
                mean=float(vals.mean()),
                std=float(vals.std()),
                mean_correctness=float(np.mean([c for _, _, c, _ in rows])),
                mean_speed=float(np.mean([v for _, _, _, v in rows])),
            ))

    per_embodiment = []
    for emb in embodiments:
        # repetition index: rank within (embodiment, task) by start time
        reps: dict[int, list[float]] = {}
        for task_id in TASK_IDS:
            key = (emb, task_id)
            if key not in scores:
                continue
            for i, (_, s, _, _) in enumerate(scores[key]):
                reps.setdefault(i, []).append(s)
        rep_means = np.array([np.mean(v) for _, v in sorted(reps.items())])
        per_embodiment.append(EmbodimentAggregate(
            embodiment_id=emb,
            n_repetitions=len(rep_means),
            mean=float(rep_means.mean()),
            std=float(rep_means.std()),
        ))

    return BenchmarkReport(per_task=tuple(per_task), per_embodiment=tuple(per_embodiment),
                           n_trials=len(recorded))
