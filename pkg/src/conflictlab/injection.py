"""Constructing disagreement: mixed teams and task-critical edits.

General disagreement comes from heterogeneity: each agent family knows
a fixed fraction of any task's atom universe (membership is a stable
hash of family and key, so a family's gaps are the same in every run),
and each agent additionally samples its own subset of the family pool.
Replacing members of a homogeneous team with members of other families
therefore widens what the team jointly knows.

Task-critical disagreement comes from counterfactual edits: a target
policy picks keys on the task's solution paths, plausible wrong objects
are fabricated in the task's own identifier namespace, and the edits
are installed into exactly one agent, which becomes stubborn.  Editing
a non-final chain hop also plants the counterfactual continuation facts
into that agent so the wrong intermediate propagates to a wrong final
answer instead of a dead end.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Optional, Sequence, Union

from .engine import Agent, AgentProfile, Role, Team
from .knowledge import Atom, EditMethod, EditSpec, FactKey, KnowledgeBase, apply_edit
from .seeds import stable_seed, stable_uniform
from .tasks import PathKind, Task

DEFAULT_SIDE_EFFECT_RATE = 0.05
DEFAULT_POOL_COVERAGE = 0.8
DEFAULT_AGENT_COVERAGE = 0.9


class InjectionError(ValueError):
    """An edit command cannot be satisfied on the given task or team."""


class TargetPolicy(str, Enum):
    """How task-critical edit keys are selected."""

    RANDOM_PATH_ATOM = "random_path_atom"
    SHARED_ATOM_FIRST = "shared_atom_first"
    ANSWER_HOP = "answer_hop"
    INTERMEDIATE_HOP = "intermediate_hop"


@dataclass(frozen=True, slots=True)
class ReasoningTrio:
    """Three deliberating participants."""

    def team_size(self) -> int:
        return 3

    def replaceable_slots(self) -> int:
        return 3

    def tag(self) -> str:
        return "reasoning_trio"


@dataclass(frozen=True, slots=True)
class ProgrammingTeam:
    """One manager, ``n_coders`` coders, one executor."""

    n_coders: int = 3

    def __post_init__(self) -> None:
        if self.n_coders < 1:
            raise ValueError("a programming team needs at least one coder")

    def team_size(self) -> int:
        return self.n_coders + 2

    def replaceable_slots(self) -> int:
        return self.n_coders

    def tag(self) -> str:
        return f"programming_team:{self.n_coders}"


Topology = Union[ReasoningTrio, ProgrammingTeam]


@dataclass(frozen=True, slots=True)
class Homogeneous:
    family: str


@dataclass(frozen=True, slots=True)
class Mixed:
    base_family: str
    pool: tuple[str, ...]
    n_replace: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "pool", tuple(self.pool))
        if self.n_replace < 0:
            raise ValueError("n_replace must be >= 0")


Heterogeneity = Union[Homogeneous, Mixed]


@dataclass(frozen=True, slots=True)
class EditCommand:
    """One injection order: how many edits, installed how, placed where."""

    n_edits: int
    method: EditMethod = EditMethod.LOCAL_OVERRIDE
    target_policy: TargetPolicy = TargetPolicy.RANDOM_PATH_ATOM
    edited_agent_index: Optional[int] = None
    side_effect_rate: float = DEFAULT_SIDE_EFFECT_RATE

    def __post_init__(self) -> None:
        if self.n_edits < 0:
            raise ValueError("n_edits must be >= 0")
        if not 0.0 <= self.side_effect_rate <= 1.0:
            raise ValueError("side_effect_rate must be in [0, 1]")


@dataclass(frozen=True, slots=True)
class TaskSpec:
    """Parameters for the synthetic task generator a scenario uses."""

    kind: PathKind
    hops: int = 2
    n_paths: int = 3
    shared_keys: int = 0
    path_len: int = 4

    def __post_init__(self) -> None:
        if self.kind is PathKind.CHAIN and self.hops < 1:
            raise ValueError("hops must be >= 1")
        if self.kind is PathKind.RECIPE and self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")

    def generate(self, seed: int) -> Task:
        from .tasks import generate_multi_recipe_task, generate_single_chain_task

        if self.kind is PathKind.CHAIN:
            return generate_single_chain_task(seed, self.hops)
        return generate_multi_recipe_task(
            seed, self.n_paths, self.shared_keys, self.path_len
        )

    def fingerprint(self) -> str:
        if self.kind is PathKind.CHAIN:
            return f"chain:hops={self.hops}"
        return (
            f"recipe:n_paths={self.n_paths}:shared={self.shared_keys}"
            f":len={self.path_len}"
        )


PAIRWISE_METRICS = ("cwr", "cdr")
KNOWN_METRICS = ("cr", "tsr", "cwr", "cdr", "adoption", "self_repair")


@dataclass(frozen=True)
class ScenarioSpec:
    """One experiment condition: team recipe, tasks, edits, and scale."""

    scenario_id: str
    topology: Topology
    heterogeneity: Heterogeneity
    task: TaskSpec
    edits: tuple[EditCommand, ...] = ()
    rounds: int = 2
    attempts_k: int = 5
    n_tasks: int = 50
    pool_coverage: float = DEFAULT_POOL_COVERAGE
    agent_coverage: float = DEFAULT_AGENT_COVERAGE
    conformity: float = 0.5
    switch_propensity: float = 1.0
    requested_metrics: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "edits", tuple(self.edits))
        if not self.scenario_id or not all(
            c.isalnum() or c in "._-" for c in self.scenario_id
        ):
            raise ValueError("scenario_id must be a non-empty [A-Za-z0-9._-]+ token")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.attempts_k < 1:
            raise ValueError("attempts_k must be >= 1")
        if self.n_tasks < 1:
            raise ValueError("n_tasks must be >= 1")
        for name in ("pool_coverage", "agent_coverage", "conformity", "switch_propensity"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if isinstance(self.heterogeneity, Mixed):
            het = self.heterogeneity
            if het.n_replace >= self.topology.team_size():
                raise ValueError("n_replace must be smaller than the team size")
            if het.n_replace > self.topology.replaceable_slots():
                raise ValueError("n_replace exceeds the replaceable member count")
        if self.requested_metrics is not None:
            object.__setattr__(self, "requested_metrics", tuple(self.requested_metrics))
            for metric in self.requested_metrics:
                if metric not in KNOWN_METRICS:
                    raise ValueError(f"unknown metric {metric!r}")
                if metric in PAIRWISE_METRICS and self.attempts_k < 2:
                    raise ValueError(
                        f"metric {metric!r} is pairwise and needs attempts_k >= 2"
                    )


def _family_pool_member(family: str, key: FactKey, coverage: float) -> bool:
    return stable_uniform("pool", family, key.subject, key.relation) < coverage


def _sample_kb(
    universe: Mapping[FactKey, str],
    family: str,
    slot: int,
    seed: int,
    pool_coverage: float,
    agent_coverage: float,
) -> KnowledgeBase:
    rng = random.Random(stable_seed(seed, "agent-kb", family, slot))
    facts = {}
    for key in sorted(universe, key=FactKey.sort_key):
        draw = rng.random()
        if _family_pool_member(family, key, pool_coverage) and draw < agent_coverage:
            facts[key] = universe[key]
    return KnowledgeBase(base_facts=facts)


def family_pool(
    universe: Mapping[FactKey, str],
    family: str,
    coverage: float = DEFAULT_POOL_COVERAGE,
) -> set[FactKey]:
    """The subset of the universe a family can know at all."""
    return {k for k in universe if _family_pool_member(family, k, coverage)}


def make_mixed_team(
    base_family: str,
    pool: Sequence[str],
    n_replace: int,
    topology: Topology,
    seed: int,
    universe: Mapping[FactKey, str],
    *,
    pool_coverage: float = DEFAULT_POOL_COVERAGE,
    agent_coverage: float = DEFAULT_AGENT_COVERAGE,
    conformity: float = 0.5,
    switch_propensity: float = 1.0,
) -> Team:
    """Build a team over the task universe, optionally mixing families.

    The homogeneous team is built first; ``n_replace`` replaceable slots
    (participants or coders, never the manager or executor) are then
    re-assigned to the first ``n_replace`` families of ``pool``, one
    family per slot.  Everything is deterministic in ``seed``.
    """
    if n_replace > 0 and len(pool) < n_replace:
        raise ValueError("family pool is smaller than n_replace")
    if n_replace > topology.replaceable_slots():
        raise ValueError("n_replace exceeds the replaceable member count")

    if isinstance(topology, ReasoningTrio):
        slots = [(f"p{i}", Role.PARTICIPANT) for i in range(3)]
        replaceable = list(range(3))
    else:
        slots = [("mgr", Role.MANAGER)]
        slots += [(f"c{i}", Role.CODER) for i in range(1, topology.n_coders + 1)]
        slots += [("exe", Role.EXECUTOR)]
        replaceable = list(range(1, topology.n_coders + 1))

    families = [base_family] * len(slots)
    rng = random.Random(stable_seed(seed, "mix"))
    if n_replace:
        chosen = sorted(rng.sample(replaceable, n_replace))
        for offset, slot_index in enumerate(chosen):
            families[slot_index] = pool[offset]

    members = []
    roles = {}
    for slot_index, ((label, role), family) in enumerate(zip(slots, families)):
        agent_id = f"{label}.{family}"
        profile = AgentProfile(
            agent_id=agent_id,
            persona=f"persona-{rng.getrandbits(16):04x}",
            family=family,
            conformity=conformity,
            stubborn=False,
            switch_propensity=switch_propensity,
        )
        kb = _sample_kb(
            universe, family, slot_index, seed, pool_coverage, agent_coverage
        )
        members.append(Agent(profile, kb))
        roles[agent_id] = role
    return Team(members=tuple(members), roles=roles)


def _select_edit_keys(task: Task, cmd: EditCommand, rng: random.Random) -> list[FactKey]:
    all_keys = sorted(task.atom_map(), key=FactKey.sort_key)
    n = cmd.n_edits
    if n > len(all_keys):
        raise InjectionError(
            f"{cmd.n_edits} edits requested but task {task.task_id} only has "
            f"{len(all_keys)} distinct atoms"
        )
    policy = cmd.target_policy
    if policy is TargetPolicy.RANDOM_PATH_ATOM:
        return sorted(rng.sample(all_keys, n), key=FactKey.sort_key)
    if policy is TargetPolicy.SHARED_ATOM_FIRST:
        shared = sorted(task.shared_keys(), key=FactKey.sort_key)
        if n <= len(shared):
            return shared[:n]
        rest = [k for k in all_keys if k not in set(shared)]
        return shared + sorted(rng.sample(rest, n - len(shared)), key=FactKey.sort_key)
    chain_paths = [p for p in task.paths if p.kind is PathKind.CHAIN]
    if not chain_paths:
        raise InjectionError(f"{policy.value} needs a chain path; task has none")
    if policy is TargetPolicy.ANSWER_HOP:
        candidates = sorted({p.steps[-1][0] for p in chain_paths}, key=FactKey.sort_key)
        label = "answer-level hops"
    else:
        candidates = sorted(
            {key for p in chain_paths for key, _ in p.steps[:-1]},
            key=FactKey.sort_key,
        )
        label = "intermediate hops"
    if n > len(candidates):
        raise InjectionError(
            f"{policy.value} cannot place {n} edits: task {task.task_id} has "
            f"{len(candidates)} {label}"
        )
    return sorted(rng.sample(candidates, n), key=FactKey.sort_key)


def _fresh_wrong_object(task: Task, rng: random.Random, avoid: set[str]) -> str:
    ns = task.task_id.rsplit("-", 1)[-1]
    taken = set(task.identifiers()) | avoid
    while True:
        candidate = f"{ns}.{rng.getrandbits(24):06x}"
        if candidate not in taken:
            return candidate


def _plant(kb: KnowledgeBase, key: FactKey, obj: str, method: EditMethod) -> KnowledgeBase:
    if method is EditMethod.CONTEXT_OVERLAY:
        return KnowledgeBase(
            base_facts=kb.base_facts,
            local_overrides=kb.local_overrides,
            context_overlay=kb.context_overlay + (Atom(key.subject, key.relation, obj),),
        )
    overrides = dict(kb.local_overrides)
    overrides[key] = obj
    return KnowledgeBase(
        base_facts=kb.base_facts,
        local_overrides=overrides,
        context_overlay=kb.context_overlay,
    )


def _plant_propagation(
    kb: KnowledgeBase,
    task: Task,
    edit: EditSpec,
    rng: random.Random,
    avoid: set[str],
) -> KnowledgeBase:
    """Extend a non-final chain edit so the wrong belief chains onward.

    Without these continuation facts an edited intermediate hop would
    dead-end (the fabricated entity resolves nothing), and the edited
    agent would abstain instead of carrying a propagated wrong answer.
    """
    for path in task.paths:
        if path.kind is not PathKind.CHAIN:
            continue
        positions = [i for i, (key, _) in enumerate(path.steps) if key == edit.key]
        if not positions or positions[0] == len(path.steps) - 1:
            continue
        current = edit.new_object
        for key, _expected in path.steps[positions[0] + 1 :]:
            nxt = _fresh_wrong_object(task, rng, avoid)
            avoid.add(nxt)
            kb = _plant(kb, FactKey(current, key.relation), nxt, edit.method)
            current = nxt
        break
    return kb


def default_edited_index(team: Team) -> int:
    """First coder when the team has coders, else the first proposer."""
    proposers = team.proposers()
    for index, agent in enumerate(proposers):
        if team.roles[agent.profile.agent_id] is Role.CODER:
            return index
    return 0


def inject_task_critical(
    team: Team,
    task: Task,
    cmd: EditCommand,
    seed: int,
) -> tuple[Team, list[EditSpec]]:
    """Install ``cmd.n_edits`` counterfactual edits into one agent.

    Returns the modified team together with the edit list for trace
    analysis.  The edited agent is marked stubborn.  Only that agent's
    knowledge differs from the input team; a zero-edit command returns
    the team unchanged.
    """
    if cmd.n_edits == 0:
        return team, []
    rng = random.Random(seed)
    keys = _select_edit_keys(task, cmd, rng)
    universe = task.atom_map()

    proposers = team.proposers()
    index = cmd.edited_agent_index
    if index is None:
        index = default_edited_index(team)
    if not 0 <= index < len(proposers):
        raise InjectionError(
            f"edited_agent_index {index} outside the {len(proposers)} proposer slots"
        )
    target = proposers[index]

    avoid: set[str] = set()
    edits = []
    for key in keys:
        wrong = _fresh_wrong_object(task, rng, avoid)
        avoid.add(wrong)
        edits.append(
            EditSpec(
                key=key,
                true_object=universe[key],
                new_object=wrong,
                method=cmd.method,
                side_effect_rate=(
                    cmd.side_effect_rate
                    if cmd.method is EditMethod.GLOBAL_OVERRIDE
                    else 0.0
                ),
            )
        )

    kb = target.kb
    for edit in edits:
        kb = apply_edit(kb, edit, rng_seed=rng.getrandbits(64))
        kb = _plant_propagation(kb, task, edit, rng, avoid)
    edited = Agent(replace(target.profile, stubborn=True), kb)

    members = tuple(
        edited if m.profile.agent_id == target.profile.agent_id else m
        for m in team.members
    )
    return Team(members=members, roles=team.roles, aggregation=team.aggregation), edits


def build_team(
    spec: ScenarioSpec,
    seed: int,
    universe: Mapping[FactKey, str],
) -> Team:
    """Construct the scenario's team over a task universe."""
    het = spec.heterogeneity
    if isinstance(het, Homogeneous):
        base, pool, n_replace = het.family, (), 0
    else:
        base, pool, n_replace = het.base_family, het.pool, het.n_replace
    return make_mixed_team(
        base,
        pool,
        n_replace,
        spec.topology,
        seed,
        universe,
        pool_coverage=spec.pool_coverage,
        agent_coverage=spec.agent_coverage,
        conformity=spec.conformity,
        switch_propensity=spec.switch_propensity,
    )
