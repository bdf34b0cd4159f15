"""Team mixing and task-critical edit injection."""

from __future__ import annotations

import pytest

from conflictlab.engine import Role
from conflictlab.injection import (
    EditCommand,
    Homogeneous,
    InjectionError,
    Mixed,
    ProgrammingTeam,
    ReasoningTrio,
    ScenarioSpec,
    TargetPolicy,
    TaskSpec,
    build_team,
    family_pool,
    inject_task_critical,
    make_mixed_team,
)
from conflictlab.knowledge import EditMethod, believed_object, conflict_set
from conflictlab.tasks import (
    PathKind,
    generate_multi_recipe_task,
    generate_single_chain_task,
    is_blocked,
)

FAMILIES = ("alpha", "beta", "gamma")


def universe_for(task):
    return task.atom_map()


class TestMakeMixedTeam:
    def setup_method(self):
        self.task = generate_multi_recipe_task(61, 3, 1, path_len=4)
        self.universe = universe_for(self.task)

    def test_programming_swap_keeps_manager_and_executor(self):
        team = make_mixed_team(
            "alpha", ("beta", "gamma"), 2, ProgrammingTeam(3), 9, self.universe
        )
        by_role = {}
        for member in team.members:
            by_role.setdefault(team.roles[member.profile.agent_id], []).append(member)
        assert by_role[Role.MANAGER][0].profile.family == "alpha"
        assert by_role[Role.EXECUTOR][0].profile.family == "alpha"
        coder_families = sorted(m.profile.family for m in by_role[Role.CODER])
        assert coder_families == ["alpha", "beta", "gamma"]

    def test_no_replacement_is_homogeneous(self):
        team = make_mixed_team("alpha", (), 0, ReasoningTrio(), 9, self.universe)
        assert {m.profile.family for m in team.members} == {"alpha"}

    def test_deterministic_in_seed(self):
        args = ("alpha", ("beta", "gamma"), 2, ProgrammingTeam(3), 13, self.universe)
        assert make_mixed_team(*args) == make_mixed_team(*args)

    def test_pool_too_small_rejected(self):
        with pytest.raises(ValueError):
            make_mixed_team("alpha", ("beta",), 2, ReasoningTrio(), 9, self.universe)

    def test_replace_count_bounded_by_replaceable(self):
        with pytest.raises(ValueError):
            make_mixed_team(
                "alpha", ("beta", "gamma", "delta", "epsilon"), 4,
                ProgrammingTeam(3), 9, self.universe,
            )

    def test_kbs_stay_inside_family_pool(self):
        team = make_mixed_team(
            "alpha", (), 0, ReasoningTrio(), 9, self.universe, pool_coverage=0.8
        )
        pool = family_pool(self.universe, "alpha", 0.8)
        for member in team.members:
            assert set(member.kb.base_facts) <= pool

    def test_mixed_union_strictly_wider_than_members(self):
        # Default family distributions; a per-seed assertion because on a
        # small universe a lucky member can occasionally dominate.
        for seed in (0, 2, 3, 5, 7):
            team = make_mixed_team(
                "alpha", ("beta", "gamma"), 2, ReasoningTrio(), seed, self.universe
            )
            union = set()
            for member in team.members:
                union |= set(member.kb.base_facts)
            for member in team.members:
                assert set(member.kb.base_facts) < union


class TestBuildTeam:
    def test_homogeneous_spec(self):
        spec = ScenarioSpec(
            scenario_id="s",
            topology=ReasoningTrio(),
            heterogeneity=Homogeneous("beta"),
            task=TaskSpec(kind=PathKind.CHAIN, hops=2),
            conformity=0.25,
            switch_propensity=0.75,
        )
        task = generate_single_chain_task(62, 2)
        team = build_team(spec, 4, universe_for(task))
        assert {m.profile.family for m in team.members} == {"beta"}
        assert all(m.profile.conformity == 0.25 for m in team.members)
        assert all(m.profile.switch_propensity == 0.75 for m in team.members)

    def test_mixed_spec(self):
        spec = ScenarioSpec(
            scenario_id="s",
            topology=ProgrammingTeam(3),
            heterogeneity=Mixed("alpha", ("beta", "gamma"), 2),
            task=TaskSpec(kind=PathKind.RECIPE),
        )
        task = generate_multi_recipe_task(63, 3, 0, path_len=4)
        team = build_team(spec, 4, universe_for(task))
        assert {m.profile.family for m in team.members} == set(FAMILIES)


class TestScenarioSpecValidation:
    def _spec(self, **kw):
        args = dict(
            scenario_id="s",
            topology=ReasoningTrio(),
            heterogeneity=Homogeneous("alpha"),
            task=TaskSpec(kind=PathKind.CHAIN),
        )
        args.update(kw)
        return ScenarioSpec(**args)

    def test_replace_must_be_smaller_than_team(self):
        with pytest.raises(ValueError):
            self._spec(heterogeneity=Mixed("alpha", ("b", "c", "d"), 3))

    def test_pairwise_metrics_need_two_attempts(self):
        with pytest.raises(ValueError):
            self._spec(attempts_k=1, requested_metrics=("cr", "cwr"))
        assert self._spec(attempts_k=1, requested_metrics=("cr", "tsr"))

    def test_unknown_metric_rejected(self):
        with pytest.raises(ValueError):
            self._spec(requested_metrics=("accuracy",))

    def test_scenario_id_must_be_path_safe(self):
        with pytest.raises(ValueError):
            self._spec(scenario_id="bad id")


class TestInjectTaskCritical:
    def trio(self, task, seed=3):
        return make_mixed_team(
            "alpha", (), 0, ReasoningTrio(), seed, universe_for(task),
            pool_coverage=1.0, agent_coverage=1.0,
        )

    def prog(self, task, seed=3):
        return make_mixed_team(
            "alpha", (), 0, ProgrammingTeam(3), seed, universe_for(task),
            pool_coverage=1.0, agent_coverage=1.0,
        )

    def test_zero_edits_is_identity(self):
        task = generate_single_chain_task(71, 2)
        team = self.trio(task)
        after, edits = inject_task_critical(
            team, task, EditCommand(n_edits=0), seed=5
        )
        assert after == team and edits == []

    def test_answer_hop_contests_exactly_the_answer_key(self):
        task = generate_single_chain_task(72, 1)
        team = self.trio(task)
        after, edits = inject_task_critical(
            team,
            task,
            EditCommand(n_edits=1, target_policy=TargetPolicy.ANSWER_HOP),
            seed=5,
        )
        assert [e.key for e in edits] == [task.paths[0].steps[-1][0]]
        delta = conflict_set([m.kb for m in after.members], set(universe_for(task)))
        assert delta.keys() == {task.paths[0].steps[-1][0]}

    def test_intermediate_hop_on_single_hop_rejected(self):
        task = generate_single_chain_task(73, 1)
        with pytest.raises(InjectionError):
            inject_task_critical(
                self.trio(task),
                task,
                EditCommand(n_edits=1, target_policy=TargetPolicy.INTERMEDIATE_HOP),
                seed=5,
            )

    def test_chain_policies_need_chain_paths(self):
        task = generate_multi_recipe_task(74, 2, 0, path_len=3)
        with pytest.raises(InjectionError):
            inject_task_critical(
                self.prog(task),
                task,
                EditCommand(n_edits=1, target_policy=TargetPolicy.ANSWER_HOP),
                seed=5,
            )

    def test_edit_count_fidelity_and_distinct_keys(self):
        task = generate_multi_recipe_task(75, 3, 2, path_len=5)
        assert len(universe_for(task)) >= 12
        team = self.prog(task)
        after, edits = inject_task_critical(
            team,
            task,
            EditCommand(n_edits=10, target_policy=TargetPolicy.RANDOM_PATH_ATOM),
            seed=5,
        )
        assert len(edits) == 10
        assert len({e.key for e in edits}) == 10
        delta = conflict_set([m.kb for m in after.members], set(universe_for(task)))
        assert len(delta.keys()) == 10

    def test_too_many_edits_rejected(self):
        task = generate_multi_recipe_task(76, 2, 0, path_len=3)
        n_atoms = len(universe_for(task))
        with pytest.raises(InjectionError):
            inject_task_critical(
                self.prog(task),
                task,
                EditCommand(n_edits=n_atoms + 1),
                seed=5,
            )

    def test_locality_only_edited_agent_changes(self):
        task = generate_multi_recipe_task(77, 3, 1, path_len=4)
        team = self.prog(task)
        after, edits = inject_task_critical(
            team, task, EditCommand(n_edits=2), seed=5
        )
        edited_index = 1  # default target: first coder, proposer slot 1
        for i, (before_m, after_m) in enumerate(zip(team.proposers(), after.proposers())):
            if i == edited_index:
                assert after_m.profile.stubborn
                assert before_m.kb != after_m.kb
            else:
                assert before_m == after_m

    def test_default_target_first_participant_in_trio(self):
        task = generate_single_chain_task(78, 2)
        team = self.trio(task)
        after, _ = inject_task_critical(team, task, EditCommand(n_edits=1), seed=5)
        assert after.members[0].profile.stubborn
        assert not after.members[1].profile.stubborn

    def test_shared_atom_first_blocks_when_shared_exist(self):
        task = generate_multi_recipe_task(79, 3, 2, path_len=4)
        team = self.prog(task)
        after, edits = inject_task_critical(
            team,
            task,
            EditCommand(n_edits=2, target_policy=TargetPolicy.SHARED_ATOM_FIRST),
            seed=5,
        )
        assert {e.key for e in edits} == task.shared_keys()
        delta = conflict_set([m.kb for m in after.members], set(universe_for(task)))
        assert is_blocked(task, delta)

    def test_edits_deterministic_in_seed(self):
        task = generate_multi_recipe_task(80, 3, 1, path_len=4)
        team = self.prog(task)
        cmd = EditCommand(n_edits=3)
        first = inject_task_critical(team, task, cmd, seed=5)
        second = inject_task_critical(team, task, cmd, seed=5)
        assert first == second

    def test_fabricated_objects_plausible_but_foreign(self):
        task = generate_multi_recipe_task(81, 2, 0, path_len=4)
        _, edits = inject_task_critical(
            self.prog(task), task, EditCommand(n_edits=3), seed=5
        )
        names = task.identifiers()
        ns = task.task_id.rsplit("-", 1)[-1]
        for edit in edits:
            assert edit.new_object not in names
            assert edit.new_object != edit.true_object
            assert edit.new_object.startswith(f"{ns}.")

    def test_intermediate_edit_propagates_to_wrong_final_answer(self):
        from conflictlab.tasks import evaluate_path

        task = generate_single_chain_task(82, 2)
        team = self.trio(task)
        after, edits = inject_task_critical(
            team,
            task,
            EditCommand(n_edits=1, target_policy=TargetPolicy.INTERMEDIATE_HOP),
            seed=5,
        )
        outcome = evaluate_path(task.paths[0], after.members[0].kb)
        assert not outcome.incomplete
        assert outcome.answer != task.ground_truth

    def test_global_override_side_effects_confined_to_target(self):
        task = generate_multi_recipe_task(83, 3, 1, path_len=5)
        team = self.prog(task)
        after, edits = inject_task_critical(
            team,
            task,
            EditCommand(
                n_edits=2,
                method=EditMethod.GLOBAL_OVERRIDE,
                side_effect_rate=1.0,
            ),
            seed=5,
        )
        for i, (before_m, after_m) in enumerate(zip(team.proposers(), after.proposers())):
            if i != 1:
                assert before_m == after_m

    def test_explicit_agent_index(self):
        task = generate_single_chain_task(84, 2)
        team = self.trio(task)
        after, _ = inject_task_critical(
            team, task, EditCommand(n_edits=1, edited_agent_index=2), seed=5
        )
        assert after.members[2].profile.stubborn

    def test_agent_index_out_of_range(self):
        task = generate_single_chain_task(85, 2)
        with pytest.raises(InjectionError):
            inject_task_critical(
                self.trio(task),
                task,
                EditCommand(n_edits=1, edited_agent_index=7),
                seed=5,
            )
