"""Agent behaviour and the round-based deliberation protocol.

Every non-executor member proposes once per round, in fixed member
order: it scores each solution path by how many of its steps clash with
objects already asserted in the transcript, evaluates the least
conflicted path it can actually complete against its own beliefs, and
publishes the answer together with the exact atoms it consumed.  After
each round every non-stubborn member runs a conformity update: for each
contested key it adopts the transcript's plurality object with
probability equal to its conformity (plurality ties resolve to the
lexicographically smallest object so runs stay deterministic).

The final answer is a majority vote over the last round's proposals;
incomplete proposals abstain unless nobody produced anything.
"""

from __future__ import annotations

import hashlib
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Mapping, Optional, Sequence

from .knowledge import FactKey, KnowledgeBase, believed_object
from .metrics import OutcomeCategory, RunRecord, classify_outcome
from .tasks import PathKind, PathOutcome, SolutionPath, Task, evaluate_path

MAJORITY_VOTE = "majority_vote"

Observer = Callable[[str, int, Optional[str], dict], None]


class Role(str, Enum):
    PARTICIPANT = "participant"
    MANAGER = "manager"
    CODER = "coder"
    EXECUTOR = "executor"


@dataclass(frozen=True, slots=True)
class AgentProfile:
    """Behavioural knobs for one agent.

    ``conformity`` is the per-key probability of adopting the
    transcript's plurality object after a round; ``switch_propensity``
    is the probability of actually moving to a better-scoring path when
    one exists; stubborn agents never revise contested beliefs.
    """

    agent_id: str
    persona: str = "default"
    family: str = "default"
    conformity: float = 0.5
    stubborn: bool = False
    switch_propensity: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.conformity <= 1.0:
            raise ValueError("conformity must be in [0, 1]")
        if not 0.0 <= self.switch_propensity <= 1.0:
            raise ValueError("switch_propensity must be in [0, 1]")


@dataclass(frozen=True)
class Agent:
    profile: AgentProfile
    kb: KnowledgeBase

    def with_kb(self, kb: KnowledgeBase) -> "Agent":
        return Agent(self.profile, kb)


@dataclass(frozen=True, slots=True)
class Proposal:
    """One agent's position in one round."""

    agent_id: str
    round: int
    chosen_path: str
    answer: Optional[str]
    atoms_used: frozenset[tuple[FactKey, str]]

    def __post_init__(self) -> None:
        if self.round < 1:
            raise ValueError("round must be >= 1")


@dataclass(frozen=True)
class Team:
    """Ordered members plus their roles.

    Either every member is a participant (deliberation group) or the
    team has exactly one manager, at least one coder, and exactly one
    executor (build group).  The executor never proposes.
    """

    members: tuple[Agent, ...]
    roles: Mapping[str, Role]
    aggregation: str = MAJORITY_VOTE

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "roles", dict(self.roles))
        if not self.members:
            raise ValueError("a team needs at least one member")
        ids = [m.profile.agent_id for m in self.members]
        if len(set(ids)) != len(ids):
            raise ValueError("agent ids must be unique")
        missing = [i for i in ids if i not in self.roles]
        if missing:
            raise ValueError(f"members without a role: {missing}")
        counts = Counter(self.roles[i] for i in ids)
        if counts[Role.PARTICIPANT] == len(self.members):
            return
        if (
            counts[Role.MANAGER] != 1
            or counts[Role.EXECUTOR] != 1
            or counts[Role.CODER] < 1
            or counts[Role.PARTICIPANT] != 0
        ):
            raise ValueError(
                "mixed-role teams need exactly one manager, one executor, "
                "and at least one coder"
            )

    def proposers(self) -> list[Agent]:
        return [m for m in self.members if self.roles[m.profile.agent_id] is not Role.EXECUTOR]


def participant_team(agents: Sequence[Agent], aggregation: str = MAJORITY_VOTE) -> Team:
    """Convenience constructor for an all-participant team."""
    return Team(
        members=tuple(agents),
        roles={a.profile.agent_id: Role.PARTICIPANT for a in agents},
        aggregation=aggregation,
    )


def artifact_label(task: Task, outcome: PathOutcome) -> str:
    """Stable label for a recipe artifact.

    Correct artifacts collapse onto the task's canonical ground-truth
    label no matter which path produced them; wrong artifacts get a
    digest of the atoms they used, so identical mistakes coincide and
    different mistakes split the vote.
    """
    if outcome.correct:
        return task.ground_truth
    ns = task.task_id.rsplit("-", 1)[-1]
    blob = "|".join(
        f"{key.subject},{key.relation},{obj}"
        for key, obj in sorted(outcome.used, key=lambda p: (p[0].sort_key(), p[1]))
    )
    digest = hashlib.sha256(f"{task.task_id}|{blob}".encode()).hexdigest()[:6]
    return f"{ns}.{digest}"


def _asserted_objects(transcript: Sequence[Proposal]) -> dict[FactKey, set[str]]:
    asserted: dict[FactKey, set[str]] = {}
    for proposal in transcript:
        for key, obj in proposal.atoms_used:
            asserted.setdefault(key, set()).add(obj)
    return asserted


def propose(
    agent: Agent,
    task: Task,
    transcript: Sequence[Proposal],
    rng: Optional[random.Random] = None,
) -> Proposal:
    """Produce the agent's proposal for the next round.

    The agent ranks every path by its transcript conflict count and
    proposes the top one, abstaining with an incomplete proposal when it
    cannot finish that path: under disagreement, avoiding a contested
    route outranks salvaging it with knowledge the team is fighting
    over.  Equal-conflict ties prefer a path the agent can actually
    complete, then the lowest path id.  Stubborn agents ignore both
    conflicts and their own gaps and stand by the canonical (lowest-id)
    route.  Only when *every* path is unfinishable does the agent fall
    back to the least-incomplete path.  When it proposed a different,
    still completable path last round, it moves with probability
    ``switch_propensity`` (no draw is consumed when the choice would not
    change, or when no ``rng`` is supplied).
    """
    asserted = _asserted_objects(transcript)
    outcomes = {path.path_id: evaluate_path(path, agent.kb) for path in task.paths}
    own = [p for p in transcript if p.agent_id == agent.profile.agent_id]
    round_no = own[-1].round + 1 if own else 1

    def conflict_count(path: SolutionPath) -> int:
        count = 0
        for key, _ in path.steps:
            believed = believed_object(agent.kb, key)
            if believed is None:
                continue
            others = asserted.get(key)
            if others and any(obj != believed for obj in others):
                count += 1
        return count

    if all(outcomes[p.path_id].incomplete for p in task.paths):
        chosen = min(task.paths, key=lambda p: (outcomes[p.path_id].missing, p.path_id))
        outcome = outcomes[chosen.path_id]
        return Proposal(
            agent_id=agent.profile.agent_id,
            round=round_no,
            chosen_path=chosen.path_id,
            answer=None,
            atoms_used=frozenset(outcome.used),
        )

    if agent.profile.stubborn:
        # Stubborn agents do not care who disagrees or what they are
        # missing: they stand by the canonical route.
        chosen = min(task.paths, key=lambda p: p.path_id)
    else:
        chosen = min(
            task.paths,
            key=lambda p: (conflict_count(p), outcomes[p.path_id].incomplete, p.path_id),
        )
    if own and rng is not None and chosen.path_id != own[-1].chosen_path:
        previous = outcomes.get(own[-1].chosen_path)
        if previous is not None and not previous.incomplete:
            if rng.random() >= agent.profile.switch_propensity:
                chosen = task.path_by_id(own[-1].chosen_path)
    outcome = outcomes[chosen.path_id]
    if outcome.incomplete:
        return Proposal(
            agent_id=agent.profile.agent_id,
            round=round_no,
            chosen_path=chosen.path_id,
            answer=None,
            atoms_used=frozenset(outcome.used),
        )
    if chosen.kind is PathKind.CHAIN:
        answer = outcome.answer
    else:
        answer = artifact_label(task, outcome)
    return Proposal(
        agent_id=agent.profile.agent_id,
        round=round_no,
        chosen_path=chosen.path_id,
        answer=answer,
        atoms_used=frozenset(outcome.used),
    )


def update_beliefs(
    agent: Agent,
    transcript: Sequence[Proposal],
    rng: random.Random,
) -> Agent:
    """Conformity update against the transcript's contested keys.

    For each key carrying >= 2 distinct asserted objects, the agent
    adopts the plurality object (ties: lexicographically smallest) into
    its local overrides with probability ``conformity``; keys are
    visited in sorted order and a draw is only consumed when the agent
    does not already hold the winning object.  Stubborn agents are
    returned unchanged.
    """
    if agent.profile.stubborn:
        return agent
    counts: dict[FactKey, Counter] = {}
    for proposal in transcript:
        for key, obj in proposal.atoms_used:
            counts.setdefault(key, Counter())[obj] += 1
    contested = {key: c for key, c in counts.items() if len(c) >= 2}
    if not contested:
        return agent
    overrides: Optional[dict[FactKey, str]] = None
    for key in sorted(contested, key=FactKey.sort_key):
        winner = min(contested[key].items(), key=lambda kv: (-kv[1], kv[0]))[0]
        if believed_object(agent.kb, key) == winner:
            continue
        if rng.random() < agent.profile.conformity:
            if overrides is None:
                overrides = dict(agent.kb.local_overrides)
            overrides[key] = winner
    if overrides is None:
        return agent
    return agent.with_kb(
        KnowledgeBase(
            base_facts=agent.kb.base_facts,
            local_overrides=overrides,
            context_overlay=agent.kb.context_overlay,
        )
    )


def aggregate(
    proposals: Sequence[Proposal],
    policy: str = MAJORITY_VOTE,
) -> tuple[Optional[str], frozenset[tuple[FactKey, str]]]:
    """Plurality vote over answers; incomplete proposals abstain.

    Ties break to the lexicographically smallest answer.  The returned
    atoms are those of the earliest proposal carrying the winning
    answer, so every run has a unique final artifact.  When every
    proposal is incomplete the answer is ``None`` and no atoms win.
    """
    if not proposals:
        raise ValueError("cannot aggregate an empty proposal sequence")
    if policy != MAJORITY_VOTE:
        raise ValueError(f"unknown aggregation policy {policy!r}")
    voted = [p for p in proposals if p.answer is not None]
    if not voted:
        return None, frozenset()
    tally = Counter(p.answer for p in voted)
    winner = min(tally.items(), key=lambda kv: (-kv[1], kv[0]))[0]
    for proposal in proposals:
        if proposal.answer == winner:
            return winner, proposal.atoms_used
    raise AssertionError("unreachable: winner must come from the proposals")


def deliberate(
    team: Team,
    task: Task,
    rounds: int,
    seed: int,
    scenario_id: str = "",
    attempt_index: int = 1,
    observer: Optional[Observer] = None,
) -> RunRecord:
    """Run the full deliberation protocol and return its record.

    Each round: proposals in fixed member order (executor excluded),
    then belief updates for every proposer against the transcript so
    far.  The final answer aggregates the *last* round's proposals, so
    the record reflects the team's settled positions.  Equal inputs and
    seed give identical records.  ``observer`` receives
    (kind, round, agent_id, payload) callbacks for trace logging.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    rng = random.Random(seed)
    indices = [
        i
        for i, m in enumerate(team.members)
        if team.roles[m.profile.agent_id] is not Role.EXECUTOR
    ]
    members = list(team.members)
    transcript: list[Proposal] = []
    last_round: list[Proposal] = []

    for round_no in range(1, rounds + 1):
        last_round = []
        for index in indices:
            proposal = propose(members[index], task, transcript, rng=rng)
            transcript.append(proposal)
            last_round.append(proposal)
            if observer is not None:
                observer(
                    "ProposalMade",
                    round_no,
                    proposal.agent_id,
                    {
                        "chosen_path": proposal.chosen_path,
                        "answer": proposal.answer,
                        "atoms_used": atoms_to_jsonable(proposal.atoms_used),
                    },
                )
        for index in indices:
            before = members[index]
            after = update_beliefs(before, transcript, rng)
            if after is not before and observer is not None:
                for key in sorted(after.kb.local_overrides, key=FactKey.sort_key):
                    obj = after.kb.local_overrides[key]
                    if before.kb.local_overrides.get(key) != obj:
                        observer(
                            "BeliefUpdated",
                            round_no,
                            before.profile.agent_id,
                            {
                                "subject": key.subject,
                                "relation": key.relation,
                                "object": obj,
                            },
                        )
            members[index] = after

    answer, atoms = aggregate(last_round, team.aggregation)
    if observer is not None:
        observer(
            "Aggregated",
            rounds,
            None,
            {"answer": answer, "atoms_used": atoms_to_jsonable(atoms)},
        )
    outcome, detail = classify_outcome(answer, atoms, task)
    if observer is not None:
        observer(
            "OutcomeClassified",
            rounds,
            None,
            {
                "outcome": outcome.value,
                "detail": detail,
                "completed": answer is not None,
            },
        )
    return RunRecord(
        task_id=task.task_id,
        attempt_index=attempt_index,
        completed=answer is not None,
        final_answer=answer,
        atoms_used=atoms,
        outcome=outcome,
        outcome_detail=detail,
        transcript=tuple(transcript),
        seed=seed,
        scenario_id=scenario_id,
    )


def atoms_to_jsonable(atoms: frozenset[tuple[FactKey, str]]) -> list[list[str]]:
    """Deterministic JSON form for an atom set: sorted [s, r, o] triples."""
    return [
        [key.subject, key.relation, obj]
        for key, obj in sorted(atoms, key=lambda p: (p[0].sort_key(), p[1]))
    ]


def atoms_from_jsonable(data: Sequence[Sequence[str]]) -> frozenset[tuple[FactKey, str]]:
    """Inverse of :func:`atoms_to_jsonable`."""
    return frozenset((FactKey(s, r), o) for s, r, o in data)
