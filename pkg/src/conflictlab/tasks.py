"""Tasks as families of minimal sufficient knowledge sets.

A task owns one or more solution paths.  A *chain* path is an ordered
sequence of hops where each hop's subject is the previous hop's expected
object; evaluation chases the hops through an agent's actual beliefs,
re-keying later hops on whatever the agent believes (so a counterfactual
belief at hop one propagates to a different final answer).  A *recipe*
path is an unordered set of required atoms; it is correct only when
every atom resolves to its expected object.

Generators build synthetic tasks with per-task namespaced identifiers so
keys never collide across tasks.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

from .knowledge import DisagreementSet, FactKey, KnowledgeBase, believed_object


class PathKind(str, Enum):
    CHAIN = "chain"
    RECIPE = "recipe"


@dataclass(frozen=True)
class SolutionPath:
    """One minimal sufficient set: ordered hops (chain) or a recipe."""

    path_id: str
    kind: PathKind
    steps: tuple[tuple[FactKey, str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ValueError("a path needs at least one step")
        if self.kind is PathKind.CHAIN:
            for (key, expected), (nxt, _) in zip(self.steps, self.steps[1:]):
                if nxt.subject != expected:
                    raise ValueError(
                        f"chain {self.path_id}: hop subject {nxt.subject!r} "
                        f"does not continue from {expected!r}"
                    )

    def key_set(self) -> frozenset[FactKey]:
        return frozenset(key for key, _ in self.steps)

    @property
    def final_object(self) -> str:
        return self.steps[-1][1]


@dataclass(frozen=True)
class Task:
    """A query plus the family of solution paths that can answer it."""

    task_id: str
    query: str
    paths: tuple[SolutionPath, ...]
    ground_truth: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "paths", tuple(self.paths))
        if not self.paths:
            raise ValueError("a task needs at least one path")
        ids = [p.path_id for p in self.paths]
        if len(set(ids)) != len(ids):
            raise ValueError("path ids must be unique")
        key_sets = [p.key_set() for p in self.paths]
        for i, a in enumerate(key_sets):
            for j, b in enumerate(key_sets):
                if i != j and a < b:
                    raise ValueError(
                        f"path {self.paths[i].path_id} is a strict subset of "
                        f"{self.paths[j].path_id}; paths must be pairwise minimal"
                    )
        for path in self.paths:
            if path.kind is PathKind.CHAIN and path.final_object != self.ground_truth:
                raise ValueError(f"chain {path.path_id} does not end at the ground truth")

    def path_by_id(self, path_id: str) -> SolutionPath:
        for path in self.paths:
            if path.path_id == path_id:
                return path
        raise KeyError(path_id)

    def atom_map(self) -> dict[FactKey, str]:
        """Union of all path atoms as a key -> expected object map."""
        atoms: dict[FactKey, str] = {}
        for path in self.paths:
            for key, expected in path.steps:
                atoms[key] = expected
        return atoms

    def identifiers(self) -> frozenset[str]:
        """Every identifier the task's universe mentions."""
        names = {self.ground_truth}
        for path in self.paths:
            for key, expected in path.steps:
                names.add(key.subject)
                names.add(expected)
        return frozenset(names)

    def shared_keys(self) -> frozenset[FactKey]:
        """Keys that appear in every path (unavoidable atoms)."""
        shared = self.paths[0].key_set()
        for path in self.paths[1:]:
            shared &= path.key_set()
        return shared


@dataclass(frozen=True)
class PathOutcome:
    """Result of evaluating one path against one knowledge base.

    ``used`` holds the (key, believed object) pairs actually consumed.
    For chains the keys reflect re-keying on believed intermediates;
    ``answer`` is the final believed object and is None when some hop
    was unresolvable.  ``missing`` counts unresolvable steps, which
    ranks paths when every path is incomplete.
    """

    answer: Optional[str]
    used: tuple[tuple[FactKey, str], ...]
    correct: bool
    incomplete: bool
    missing: int


def evaluate_path(path: SolutionPath, kb: KnowledgeBase) -> PathOutcome:
    """Evaluate ``path`` against ``kb``; incompleteness is a valid outcome."""
    if path.kind is PathKind.CHAIN:
        used: list[tuple[FactKey, str]] = []
        subject = path.steps[0][0].subject
        answer: Optional[str] = None
        for index, (declared, _) in enumerate(path.steps):
            key = FactKey(subject, declared.relation)
            believed = believed_object(kb, key)
            if believed is None:
                return PathOutcome(
                    answer=None,
                    used=tuple(used),
                    correct=False,
                    incomplete=True,
                    missing=len(path.steps) - index,
                )
            used.append((key, believed))
            subject = believed
            answer = believed
        return PathOutcome(
            answer=answer,
            used=tuple(used),
            correct=answer == path.final_object,
            incomplete=False,
            missing=0,
        )

    used = []
    missing = 0
    correct = True
    for key, expected in path.steps:
        believed = believed_object(kb, key)
        if believed is None:
            missing += 1
            correct = False
            continue
        used.append((key, believed))
        if believed != expected:
            correct = False
    return PathOutcome(
        answer=None,
        used=tuple(used),
        correct=correct and missing == 0,
        incomplete=missing > 0,
        missing=missing,
    )


def is_blocked(task: Task, delta: DisagreementSet) -> bool:
    """True when every path touches at least one contested key."""
    return all(path.key_set() & delta.keys() for path in task.paths)


def feasible_paths(task: Task, delta: DisagreementSet) -> list[SolutionPath]:
    """The paths whose key sets avoid the contested keys, in task order."""
    contested = delta.keys()
    return [path for path in task.paths if not (path.key_set() & contested)]


def fragility(task: Task, delta: DisagreementSet) -> float:
    """Fraction of paths knocked out by the disagreement set."""
    return float(1 - Fraction(len(feasible_paths(task, delta)), len(task.paths)))


def _token(rng: random.Random) -> str:
    return f"{rng.getrandbits(24):06x}"


def _namespace(seed: int) -> str:
    return f"k{seed % (1 << 40):010x}"


def generate_single_chain_task(seed: int, hops: int) -> Task:
    """A task with exactly one chain path of ``hops`` hops.

    Identifiers are fresh hex tokens under a per-task namespace derived
    from the seed, so equal seeds give structurally equal tasks and
    distinct seeds cannot share keys.
    """
    if hops < 1:
        raise ValueError("hops must be >= 1")
    rng = random.Random(seed)
    ns = _namespace(seed)
    entities = [f"{ns}.{_token(rng)}" for _ in range(hops + 1)]
    relations = [f"{ns}.r{_token(rng)}" for _ in range(hops)]
    steps = tuple(
        (FactKey(entities[i], relations[i]), entities[i + 1]) for i in range(hops)
    )
    path = SolutionPath(path_id="p0", kind=PathKind.CHAIN, steps=steps)
    return Task(
        task_id=f"chain-{ns}",
        query=f"{ns}.query",
        paths=(path,),
        ground_truth=entities[-1],
    )


def generate_multi_recipe_task(
    seed: int,
    n_paths: int,
    shared_keys: int,
    path_len: int = 4,
) -> Task:
    """A task with ``n_paths`` recipe paths over a common atom universe.

    Every path carries the same ``shared_keys`` unavoidable atoms plus
    private atoms of its own.  The first path is the canonical route
    with ``path_len - shared_keys`` private atoms; each later path is a
    workaround needing one private atom more than the one before it, so
    detours exist but cost more knowledge.  Relations are drawn from a
    small per-task pool so several atoms can share one relation.
    Rejects parameters that would leave the canonical path without
    private atoms (which would break pairwise minimality) and the
    degenerate ``path_len < shared_keys`` case.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if shared_keys < 0:
        raise ValueError("shared_keys must be >= 0")
    if shared_keys > path_len:
        raise ValueError("shared_keys cannot exceed path_len")
    private = path_len - shared_keys
    if private < 1 and n_paths > 1:
        raise ValueError(
            "shared_keys leaves no private atoms; paths would not be pairwise minimal"
        )
    if path_len < 1:
        raise ValueError("path_len must be >= 1")

    rng = random.Random(seed)
    ns = _namespace(seed)
    relation_pool = [f"{ns}.r{_token(rng)}" for _ in range(3)]

    def fresh_atom() -> tuple[FactKey, str]:
        key = FactKey(f"{ns}.{_token(rng)}", rng.choice(relation_pool))
        return key, f"{ns}.{_token(rng)}"

    shared = tuple(fresh_atom() for _ in range(shared_keys))
    paths = []
    for index in range(n_paths):
        private_steps = tuple(fresh_atom() for _ in range(private + index))
        paths.append(
            SolutionPath(
                path_id=f"p{index}",
                kind=PathKind.RECIPE,
                steps=shared + private_steps,
            )
        )
    return Task(
        task_id=f"recipe-{ns}",
        query=f"{ns}.query",
        paths=tuple(paths),
        ground_truth=f"{ns}.{_token(rng)}",
    )


def full_kb_for(task: Task) -> KnowledgeBase:
    """A faithful store holding every atom of the task's universe."""
    return KnowledgeBase(base_facts=task.atom_map())


def task_to_json(task: Task) -> str:
    """Serialize a task as a single JSON document."""
    doc = {
        "task_id": task.task_id,
        "query": task.query,
        "ground_truth": task.ground_truth,
        "paths": [
            {
                "path_id": path.path_id,
                "kind": path.kind.value,
                "steps": [
                    {"subject": key.subject, "relation": key.relation, "expected": expected}
                    for key, expected in path.steps
                ],
            }
            for path in task.paths
        ],
    }
    return json.dumps(doc, sort_keys=True)


def task_from_json(text: str) -> Task:
    """Inverse of :func:`task_to_json`."""
    doc = json.loads(text)
    paths = tuple(
        SolutionPath(
            path_id=p["path_id"],
            kind=PathKind(p["kind"]),
            steps=tuple(
                (FactKey(s["subject"], s["relation"]), s["expected"]) for s in p["steps"]
            ),
        )
        for p in doc["paths"]
    )
    return Task(
        task_id=doc["task_id"],
        query=doc["query"],
        paths=paths,
        ground_truth=doc["ground_truth"],
    )
