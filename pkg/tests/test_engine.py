"""Agent behaviour, deliberation, aggregation, and the model theorems."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conflictlab.engine import (
    Agent,
    AgentProfile,
    Proposal,
    Role,
    Team,
    aggregate,
    deliberate,
    participant_team,
    propose,
    update_beliefs,
)
from conflictlab.knowledge import (
    Atom,
    EditMethod,
    EditSpec,
    FactKey,
    KnowledgeBase,
    apply_edit,
    believed_object,
    conflict_set,
)
from conflictlab.metrics import OutcomeCategory, detect_self_repair
from conflictlab.tasks import (
    PathKind,
    SolutionPath,
    Task,
    feasible_paths,
    full_kb_for,
    generate_multi_recipe_task,
    generate_single_chain_task,
    is_blocked,
)


def faithful_agent(task, agent_id, **profile_kw):
    return Agent(AgentProfile(agent_id=agent_id, **profile_kw), full_kb_for(task))


def edited_agent(task, agent_id, key=None, wrong="tt.wrong", **profile_kw):
    key = key or task.paths[0].steps[0][0]
    kb = apply_edit(
        full_kb_for(task),
        EditSpec(key, task.atom_map()[key], wrong, EditMethod.LOCAL_OVERRIDE),
        rng_seed=0,
    )
    profile_kw.setdefault("stubborn", True)
    return Agent(AgentProfile(agent_id=agent_id, **profile_kw), kb)


def proposal(agent_id, round_no, path, answer, atoms):
    return Proposal(
        agent_id=agent_id,
        round=round_no,
        chosen_path=path,
        answer=answer,
        atoms_used=frozenset(atoms),
    )


class TestPropose:
    def test_faithful_single_path_carries_ground_truth(self):
        task = generate_single_chain_task(21, 2)
        agent = faithful_agent(task, "a0")
        prop = propose(agent, task, [])
        assert prop.answer == task.ground_truth
        assert prop.round == 1 and prop.chosen_path == "p0"

    def test_conflicted_path_avoided(self):
        task = generate_multi_recipe_task(22, 2, 0, path_len=3)
        agent = faithful_agent(task, "a0")
        key, expected = task.paths[0].steps[0]
        transcript = [
            proposal("rival", 1, "p0", "something", [(key, "not-" + expected)])
        ]
        prop = propose(agent, task, transcript)
        assert prop.chosen_path == "p1"

    def test_stubborn_edited_agent_repeats_counterfactual(self):
        task = generate_single_chain_task(23, 1)
        agent = edited_agent(task, "a0", wrong="tt.wrong")
        first = propose(agent, task, [])
        transcript = [first, proposal("b", 1, "p0", task.ground_truth, [])]
        again = propose(agent, task, transcript)
        assert first.answer == again.answer == "tt.wrong"

    def test_incomplete_when_chosen_path_unfinishable(self):
        task = generate_multi_recipe_task(24, 2, 0, path_len=3)
        atoms = dict(task.atom_map())
        for key, _ in task.paths[0].steps:
            del atoms[key]
        agent = Agent(AgentProfile(agent_id="a0"), KnowledgeBase(base_facts=atoms))
        # without conflicts the completability tie-break picks p1
        assert propose(agent, task, []).chosen_path == "p1"
        # a conflict on p1 pushes the agent onto p0, which it cannot finish
        key, expected = task.paths[1].steps[0]
        transcript = [proposal("rival", 1, "p1", "z", [(key, "not-" + expected)])]
        prop = propose(agent, task, transcript)
        assert prop.chosen_path == "p0" and prop.answer is None

    def test_all_paths_incomplete_picks_least_incomplete(self):
        task = generate_multi_recipe_task(25, 2, 0, path_len=3)
        atoms = dict(task.atom_map())
        keep = {k for k, _ in task.paths[1].steps[:-1]}
        kb = KnowledgeBase(base_facts={k: v for k, v in atoms.items() if k in keep})
        agent = Agent(AgentProfile(agent_id="a0"), kb)
        prop = propose(agent, task, [])
        assert prop.answer is None and prop.chosen_path == "p1"

    def test_round_number_tracks_own_history(self):
        task = generate_single_chain_task(26, 1)
        agent = faithful_agent(task, "a0")
        first = propose(agent, task, [])
        second = propose(agent, task, [first])
        assert (first.round, second.round) == (1, 2)

    def test_atoms_used_resolvable_by_proposer(self):
        task = generate_multi_recipe_task(27, 3, 1, path_len=4)
        agent = faithful_agent(task, "a0")
        prop = propose(agent, task, [])
        for key, obj in prop.atoms_used:
            assert believed_object(agent.kb, key) == obj


class TestUpdateBeliefs:
    def setup_method(self):
        self.key = FactKey("s", "r")
        self.kb_z = KnowledgeBase(base_facts={self.key: "z"})
        self.transcript = [
            proposal("a", 1, "p0", "x", [(self.key, "x")]),
            proposal("b", 1, "p0", "x", [(self.key, "x")]),
            proposal("c", 1, "p0", "z", [(self.key, "z")]),
        ]

    def test_zero_conformity_unchanged(self):
        agent = Agent(AgentProfile(agent_id="c", conformity=0.0), self.kb_z)
        after = update_beliefs(agent, self.transcript, random.Random(0))
        assert after.kb == agent.kb

    def test_certain_adoption_of_majority(self):
        agent = Agent(AgentProfile(agent_id="c", conformity=1.0), self.kb_z)
        after = update_beliefs(agent, self.transcript, random.Random(0))
        assert believed_object(after.kb, self.key) == "x"

    def test_majority_preserved_after_update(self):
        agents = [
            Agent(AgentProfile(agent_id=i, conformity=1.0), kb)
            for i, kb in (
                ("a", KnowledgeBase(base_facts={self.key: "x"})),
                ("b", KnowledgeBase(base_facts={self.key: "x"})),
                ("c", self.kb_z),
            )
        ]
        rng = random.Random(1)
        updated = [update_beliefs(a, self.transcript, rng) for a in agents]
        beliefs = [believed_object(a.kb, self.key) for a in updated]
        assert beliefs == ["x", "x", "x"]

    def test_stubborn_agents_never_revise(self):
        agent = Agent(
            AgentProfile(agent_id="c", conformity=1.0, stubborn=True), self.kb_z
        )
        after = update_beliefs(agent, self.transcript, random.Random(0))
        assert after is agent

    def test_uncontested_keys_untouched(self):
        transcript = [proposal("a", 1, "p0", "x", [(self.key, "x")])]
        agent = Agent(AgentProfile(agent_id="b", conformity=1.0), self.kb_z)
        after = update_beliefs(agent, transcript, random.Random(0))
        assert believed_object(after.kb, self.key) == "z"


class TestAggregate:
    def test_plurality(self):
        props = [
            proposal("a", 1, "p0", "x", [("ka", "x")]),
            proposal("b", 1, "p0", "x", []),
            proposal("c", 1, "p0", "y", []),
        ]
        answer, atoms = aggregate(props)
        assert answer == "x" and atoms == frozenset({("ka", "x")})

    def test_tie_breaks_lexicographically(self):
        props = [
            proposal("a", 1, "p0", "zeta", []),
            proposal("b", 1, "p0", "alpha", []),
        ]
        assert aggregate(props)[0] == "alpha"

    def test_all_incomplete(self):
        props = [proposal(i, 1, "p0", None, []) for i in "abc"]
        assert aggregate(props) == (None, frozenset())

    def test_incomplete_excluded_when_any_answer_exists(self):
        props = [
            proposal("a", 1, "p0", None, []),
            proposal("b", 1, "p0", "x", []),
        ]
        assert aggregate(props)[0] == "x"

    def test_winning_atoms_from_earliest_winner(self):
        props = [
            proposal("a", 1, "p0", "x", [("ka", "x")]),
            proposal("b", 1, "p0", "x", [("kb", "x")]),
        ]
        assert aggregate(props)[1] == frozenset({("ka", "x")})

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])

    def test_unknown_policy_rejected(self):
        with pytest.raises(ValueError):
            aggregate([proposal("a", 1, "p0", "x", [])], policy="dictator")


class TestTeamValidation:
    def test_mixed_roles_need_manager_and_executor(self):
        task = generate_single_chain_task(31, 1)
        agents = [faithful_agent(task, f"a{i}") for i in range(3)]
        with pytest.raises(ValueError):
            Team(
                members=tuple(agents),
                roles={
                    "a0": Role.CODER,
                    "a1": Role.CODER,
                    "a2": Role.CODER,
                },
            )

    def test_duplicate_ids_rejected(self):
        task = generate_single_chain_task(32, 1)
        agent = faithful_agent(task, "dup")
        with pytest.raises(ValueError):
            participant_team([agent, agent])


class TestDeliberate:
    def test_unanimous_faithful_team(self):
        task = generate_single_chain_task(41, 2)
        team = participant_team([faithful_agent(task, f"a{i}") for i in range(3)])
        record = deliberate(team, task, rounds=1, seed=7)
        assert record.final_answer == task.ground_truth
        assert record.outcome is OutcomeCategory.CORRECT
        assert record.completed

    def test_faithful_majority_outvotes_edit(self):
        task = generate_single_chain_task(42, 1)
        team = participant_team(
            [
                edited_agent(task, "a0", wrong="tt.wrong"),
                faithful_agent(task, "a1", conformity=0.0),
                faithful_agent(task, "a2", conformity=0.0),
            ]
        )
        record = deliberate(team, task, rounds=1, seed=7)
        assert record.final_answer == task.ground_truth

    def test_majority_holds_over_two_rounds_with_full_conformity(self):
        task = generate_single_chain_task(43, 1)
        team = participant_team(
            [
                edited_agent(task, "a0", wrong="tt.wrong"),
                faithful_agent(task, "a1", conformity=1.0),
                faithful_agent(task, "a2", conformity=1.0),
            ]
        )
        record = deliberate(team, task, rounds=2, seed=7)
        assert record.final_answer == task.ground_truth

    def test_transcript_complete(self):
        task = generate_multi_recipe_task(44, 2, 0, path_len=3)
        members = [faithful_agent(task, f"m{i}") for i in range(5)]
        roles = {
            "m0": Role.MANAGER,
            "m1": Role.CODER,
            "m2": Role.CODER,
            "m3": Role.CODER,
            "m4": Role.EXECUTOR,
        }
        team = Team(members=tuple(members), roles=roles)
        rounds = 3
        record = deliberate(team, task, rounds=rounds, seed=7)
        assert len(record.transcript) == rounds * 4  # executor never proposes
        for round_no in range(1, rounds + 1):
            per_round = [p for p in record.transcript if p.round == round_no]
            assert [p.agent_id for p in per_round] == ["m0", "m1", "m2", "m3"]

    def test_determinism_byte_identical(self):
        task = generate_multi_recipe_task(45, 3, 1, path_len=4)
        team = participant_team(
            [faithful_agent(task, f"a{i}", conformity=0.7) for i in range(3)]
        )
        a = deliberate(team, task, rounds=3, seed=99)
        b = deliberate(team, task, rounds=3, seed=99)
        assert a == b

    def test_rounds_must_be_positive(self):
        task = generate_single_chain_task(46, 1)
        team = participant_team([faithful_agent(task, "a0")])
        with pytest.raises(ValueError):
            deliberate(team, task, rounds=0, seed=1)


class TestHomogeneousCollapse:
    @given(st.integers(0, 2**32), st.sampled_from([0.0, 0.5, 1.0]), st.integers(1, 3))
    @settings(max_examples=150, deadline=None)
    def test_identical_team_equals_solo_agent(self, seed, conformity, rounds):
        rng = random.Random(seed)
        if rng.random() < 0.5:
            task = generate_single_chain_task(seed, rng.randint(1, 3))
        else:
            task = generate_multi_recipe_task(seed, rng.randint(1, 3), rng.randint(0, 1), 4)
        atoms = task.atom_map()
        kb = KnowledgeBase(
            base_facts={k: v for k, v in atoms.items() if rng.random() < 0.7}
        )
        profile = dict(conformity=conformity, switch_propensity=rng.choice([0.0, 1.0]))
        team = participant_team(
            [Agent(AgentProfile(agent_id=f"a{i}", **profile), kb) for i in range(3)]
        )
        solo = participant_team(
            [Agent(AgentProfile(agent_id="a0", **profile), kb)]
        )
        team_record = deliberate(team, task, rounds=rounds, seed=seed)
        solo_record = deliberate(solo, task, rounds=rounds, seed=seed)
        assert team_record.final_answer == solo_record.final_answer


class TestModelTheorems:
    def test_blocked_chain_with_edited_majority_fails(self):
        task = generate_single_chain_task(51, 2)
        key = task.paths[0].steps[0][0]
        wrong = "tt.wrong"
        spec = EditSpec(key, task.atom_map()[key], wrong, EditMethod.LOCAL_OVERRIDE)
        base = full_kb_for(task)
        edited_kb = apply_edit(base, spec, 0)
        # the counterfactual must propagate: plant the continuation hop
        k2 = task.paths[0].steps[1][0]
        edited_kb = KnowledgeBase(
            base_facts=edited_kb.base_facts,
            local_overrides={
                **edited_kb.local_overrides,
                FactKey(wrong, k2.relation): "tt.counterfactual",
            },
            context_overlay=edited_kb.context_overlay,
        )
        team = participant_team(
            [
                Agent(AgentProfile(agent_id="a0", stubborn=True), edited_kb),
                Agent(AgentProfile(agent_id="a1", stubborn=True), edited_kb),
                Agent(AgentProfile(agent_id="a2", conformity=0.0), base),
            ]
        )
        delta = conflict_set([m.kb for m in team.members], set(task.atom_map()))
        assert is_blocked(task, delta)
        record = deliberate(team, task, rounds=2, seed=3)
        assert record.final_answer != task.ground_truth
        used_keys = {k for k, _ in record.atoms_used}
        assert used_keys & delta.keys()

    def test_blocked_run_artifact_touches_contested_keys(self):
        task = generate_multi_recipe_task(52, 2, 1, path_len=3)
        shared = next(iter(task.shared_keys()))
        base = full_kb_for(task)
        spec = EditSpec(
            shared, task.atom_map()[shared], "tt.wrong", EditMethod.LOCAL_OVERRIDE
        )
        team = participant_team(
            [
                Agent(AgentProfile(agent_id="a0", stubborn=True), apply_edit(base, spec, 0)),
                Agent(AgentProfile(agent_id="a1", conformity=0.0), base),
                Agent(AgentProfile(agent_id="a2", conformity=0.0), base),
            ]
        )
        delta = conflict_set([m.kb for m in team.members], set(task.atom_map()))
        assert is_blocked(task, delta)
        record = deliberate(team, task, rounds=2, seed=5)
        assert record.completed
        assert {k for k, _ in record.atoms_used} & delta.keys()

    @given(st.integers(0, 2**32))
    @settings(max_examples=100, deadline=None)
    def test_self_repair_theorem(self, seed):
        task = generate_multi_recipe_task(seed, 3, 0, path_len=3)
        base = full_kb_for(task)
        key, expected = task.paths[0].steps[0]
        spec = EditSpec(key, expected, "tt.wrong", EditMethod.LOCAL_OVERRIDE)
        team = participant_team(
            [
                Agent(
                    AgentProfile(agent_id="a0", stubborn=True, switch_propensity=1.0),
                    apply_edit(base, spec, 0),
                ),
                Agent(AgentProfile(agent_id="a1", switch_propensity=1.0), base),
                Agent(AgentProfile(agent_id="a2", switch_propensity=1.0), base),
            ]
        )
        delta = conflict_set([m.kb for m in team.members], set(task.atom_map()))
        assert feasible_paths(task, delta)
        record = deliberate(team, task, rounds=2, seed=seed)
        assert record.outcome is OutcomeCategory.CORRECT
        assert not ({k for k, _ in record.atoms_used} & delta.keys())
        assert detect_self_repair(record, [spec], task)
