"""Run records, the outcome taxonomy, and the robustness metric suite.

All rates are computed with exact rational arithmetic and converted to
float at the very end, so they are reproducible bit-for-bit and an
independent brute-force recomputation lands on the same values.

With N tasks attempted k times each:

* completion rate    = completed runs / (N * k)
* task success rate  = correct runs / (N * k)
* writing robustness = per-task mean pairwise artifact similarity over
  all k-choose-2 attempt pairs, averaged over tasks (kernel pluggable,
  Jaccard over used atoms by default)
* decision robustness = the same pairwise scheme with the kernel
  replaced by outcome-category equality
* adoption probability = fraction of runs whose final artifact contains
  any planted (key, object) pair
* self repair = a correct run that avoided every planted pair even
  though some planted key sits on a solution path
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import TYPE_CHECKING, Callable, Mapping, Optional, Sequence

from .knowledge import EditSpec, FactKey
from .tasks import Task

if TYPE_CHECKING:  # pragma: no cover - typing only, avoids an import cycle
    from .engine import Proposal


class OutcomeCategory(str, Enum):
    """Execution-style outcome classes for one collaboration attempt.

    ``NO_ARTIFACT``: nothing was produced (collaboration failure).
    ``WRONG_OUTPUT``: a well-formed artifact that misses the ground truth.
    ``INVALID_FORM``: the artifact references constructs outside the task
    universe (malformed output).
    ``STALLED``: reserved for runner-level timeouts; never produced by
    deliberation itself.
    """

    CORRECT = "Correct"
    WRONG_OUTPUT = "WrongOutput"
    NO_ARTIFACT = "NoArtifact"
    INVALID_FORM = "InvalidForm"
    STALLED = "Stalled"


@dataclass(frozen=True)
class RunRecord:
    """Everything observed during one collaboration attempt."""

    task_id: str
    attempt_index: int
    completed: bool
    final_answer: Optional[str]
    atoms_used: frozenset[tuple[FactKey, str]]
    outcome: OutcomeCategory
    transcript: tuple["Proposal", ...] = ()
    seed: int = 0
    scenario_id: str = ""
    outcome_detail: Optional[str] = None

    def __post_init__(self) -> None:
        if self.attempt_index < 1:
            raise ValueError("attempt_index must be >= 1")
        if not self.completed and self.outcome is not OutcomeCategory.NO_ARTIFACT:
            raise ValueError("an attempt without an artifact must classify as NoArtifact")
        if self.completed and self.outcome is OutcomeCategory.NO_ARTIFACT:
            raise ValueError("a completed attempt cannot classify as NoArtifact")


def classify_outcome(
    final_answer: Optional[str],
    atoms_used: frozenset[tuple[FactKey, str]],
    task: Task,
) -> tuple[OutcomeCategory, Optional[str]]:
    """Map a final answer and its atoms onto the outcome taxonomy.

    No answer is ``NO_ARTIFACT``; a ground-truth match is ``CORRECT``;
    otherwise an artifact that mentions an identifier outside the task
    universe is ``INVALID_FORM`` (the offending identifier is returned
    as the detail) and anything else is ``WRONG_OUTPUT``.
    """
    if final_answer is None:
        return OutcomeCategory.NO_ARTIFACT, None
    if final_answer == task.ground_truth:
        return OutcomeCategory.CORRECT, None
    known = task.identifiers()
    for key, obj in sorted(atoms_used, key=lambda p: (p[0].sort_key(), p[1])):
        if key.subject not in known:
            return OutcomeCategory.INVALID_FORM, f"foreign-identifier:{key.subject}"
        if obj not in known:
            return OutcomeCategory.INVALID_FORM, f"foreign-identifier:{obj}"
    return OutcomeCategory.WRONG_OUTPUT, None


SimilarityKernel = Callable[
    [frozenset[tuple[FactKey, str]], frozenset[tuple[FactKey, str]]],
    "Fraction | float",
]


def jaccard_similarity(
    a: frozenset[tuple[FactKey, str]],
    b: frozenset[tuple[FactKey, str]],
) -> Fraction:
    """Symmetric set similarity; identical sets (even empty ones) score 1."""
    if not a and not b:
        return Fraction(1)
    return Fraction(len(a & b), len(a | b))


def exact_match_similarity(
    a: frozenset[tuple[FactKey, str]],
    b: frozenset[tuple[FactKey, str]],
) -> Fraction:
    return Fraction(1) if a == b else Fraction(0)


SIMILARITY_KERNELS: dict[str, SimilarityKernel] = {
    "jaccard": jaccard_similarity,
    "exact": exact_match_similarity,
}


def _by_task(records: Sequence[RunRecord]) -> "OrderedDict[str, list[RunRecord]]":
    groups: "OrderedDict[str, list[RunRecord]]" = OrderedDict()
    for record in records:
        groups.setdefault(record.task_id, []).append(record)
    return groups


def _balanced_groups(records: Sequence[RunRecord]) -> tuple["OrderedDict[str, list[RunRecord]]", int]:
    groups = _by_task(records)
    sizes = {len(g) for g in groups.values()}
    if len(sizes) != 1:
        raise ValueError("every task must carry the same number of attempts")
    return groups, sizes.pop()


def completion_rate(records: Sequence[RunRecord]) -> Optional[float]:
    """Fraction of attempts that produced any artifact; None when empty."""
    if not records:
        return None
    _balanced_groups(records)
    return float(Fraction(sum(1 for r in records if r.completed), len(records)))


def task_success_rate(records: Sequence[RunRecord]) -> Optional[float]:
    """Fraction of attempts whose artifact matched the ground truth."""
    if not records:
        return None
    _balanced_groups(records)
    hits = sum(1 for r in records if r.outcome is OutcomeCategory.CORRECT)
    return float(Fraction(hits, len(records)))


def _pairwise_mean(
    records: Sequence[RunRecord],
    pair_score: Callable[[RunRecord, RunRecord], "Fraction | float"],
) -> Optional[float]:
    if not records:
        return None
    groups, k = _balanced_groups(records)
    if k < 2:
        return None
    per_task = []
    pair_count = k * (k - 1) // 2
    for group in groups.values():
        total = sum(
            pair_score(group[p], group[q])
            for p in range(k)
            for q in range(p + 1, k)
        )
        per_task.append(Fraction(total) / pair_count)
    return float(sum(per_task) / len(per_task))


def writing_robustness(
    records: Sequence[RunRecord],
    similarity: SimilarityKernel = jaccard_similarity,
) -> Optional[float]:
    """Mean pairwise artifact similarity per task, averaged over tasks.

    Undefined (None) with fewer than two attempts per task.  The kernel
    must be symmetric, so a single evaluation per unordered pair is the
    same as averaging both orders.
    """
    return _pairwise_mean(records, lambda a, b: similarity(a.atoms_used, b.atoms_used))


def decision_robustness(records: Sequence[RunRecord]) -> Optional[float]:
    """Mean pairwise outcome-category agreement per task, over tasks."""
    return _pairwise_mean(
        records,
        lambda a, b: Fraction(1) if a.outcome is b.outcome else Fraction(0),
    )


def adoption_probability(
    records: Sequence[RunRecord],
    edits: Sequence[EditSpec],
) -> Optional[float]:
    """Fraction of runs whose final artifact carries a planted pair.

    Detection is exact membership of (key, planted object) pairs; a run
    that touches a planted key while holding its *true* object does not
    count as adoption.
    """
    if not edits:
        raise ValueError("adoption probability needs a non-empty edit list")
    if not records:
        return None
    planted = {(edit.key, edit.new_object) for edit in edits}
    hits = sum(1 for r in records if r.atoms_used & planted)
    return float(Fraction(hits, len(records)))


def self_repair_against_keys(
    record: RunRecord,
    edits: Sequence[EditSpec],
    path_keys: frozenset[FactKey],
) -> bool:
    """Self-repair check given the union of the task's path keys."""
    if not edits:
        raise ValueError("self-repair detection needs a non-empty edit list")
    if record.outcome is not OutcomeCategory.CORRECT:
        return False
    planted = {(edit.key, edit.new_object) for edit in edits}
    if record.atoms_used & planted:
        return False
    return any(edit.key in path_keys for edit in edits)


def detect_self_repair(
    record: RunRecord,
    edits: Sequence[EditSpec],
    task: Task,
) -> bool:
    """Did this run succeed while meaningfully avoiding the planted pairs?

    Requires a correct outcome, a final artifact disjoint from every
    (key, planted object) pair, and at least one planted key actually
    sitting on a solution path (avoiding an edit no path needs is
    vacuous, not repair).
    """
    path_keys: set[FactKey] = set()
    for path in task.paths:
        path_keys |= path.key_set()
    return self_repair_against_keys(record, edits, frozenset(path_keys))


def self_repair_rate(
    records: Sequence[RunRecord],
    edits_by_task: Mapping[str, Sequence[EditSpec]],
    path_keys_by_task: Mapping[str, frozenset[FactKey]],
) -> Optional[float]:
    """Fraction of runs that qualify as self-repair; None when empty."""
    if not records:
        return None
    hits = 0
    for record in records:
        edits = edits_by_task.get(record.task_id, ())
        if edits and self_repair_against_keys(
            record, edits, path_keys_by_task[record.task_id]
        ):
            hits += 1
    return float(Fraction(hits, len(records)))


@dataclass(frozen=True)
class MetricsReport:
    """Scenario-level metric summary; None marks an undefined metric."""

    cr: Optional[float]
    tsr: Optional[float]
    cwr: Optional[float]
    cdr: Optional[float]
    adoption_prob: Optional[float]
    self_repair_rate: Optional[float]
    n_tasks: int
    attempts_k: int

    def __post_init__(self) -> None:
        for name in ("cr", "tsr", "cwr", "cdr", "adoption_prob", "self_repair_rate"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")

    def to_dict(self) -> dict:
        return {
            "cr": self.cr,
            "tsr": self.tsr,
            "cwr": self.cwr,
            "cdr": self.cdr,
            "adoption_prob": self.adoption_prob,
            "self_repair_rate": self.self_repair_rate,
            "n_tasks": self.n_tasks,
            "attempts_k": self.attempts_k,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "MetricsReport":
        return cls(
            cr=data["cr"],
            tsr=data["tsr"],
            cwr=data["cwr"],
            cdr=data["cdr"],
            adoption_prob=data["adoption_prob"],
            self_repair_rate=data["self_repair_rate"],
            n_tasks=data["n_tasks"],
            attempts_k=data["attempts_k"],
        )
