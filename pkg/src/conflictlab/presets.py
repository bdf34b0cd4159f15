"""Built-in scenario presets.

The named builders return paired baseline/edited conditions used by the
verification suite; ``paper_suite_config`` assembles the full sweep grid
(heterogeneity, edit methods, edit counts, rounds, team sizes) at desk
scale.
"""

from __future__ import annotations

from .injection import (
    EditCommand,
    Homogeneous,
    Mixed,
    ProgrammingTeam,
    ReasoningTrio,
    ScenarioSpec,
    TargetPolicy,
    TaskSpec,
)
from .knowledge import EditMethod
from .runner import ExperimentConfig
from .tasks import PathKind

FAMILIES = ("alpha", "beta", "gamma")


def _others(base: str) -> tuple[str, ...]:
    return tuple(f for f in FAMILIES if f != base)


def chain_edit_pair(
    n_tasks: int = 200,
    attempts_k: int = 5,
    method: EditMethod = EditMethod.LOCAL_OVERRIDE,
) -> tuple[ScenarioSpec, ScenarioSpec]:
    """Single-chain tasks, no edits vs one intermediate-hop edit.

    Full family coverage with partial per-agent coverage: fragility
    comes purely from the single evidential chain, not from family gaps.
    """
    common = dict(
        topology=ReasoningTrio(),
        heterogeneity=Homogeneous("alpha"),
        task=TaskSpec(kind=PathKind.CHAIN, hops=2),
        rounds=2,
        attempts_k=attempts_k,
        n_tasks=n_tasks,
        pool_coverage=1.0,
        agent_coverage=0.8,
        conformity=0.5,
        switch_propensity=1.0,
    )
    baseline = ScenarioSpec(scenario_id="chain-baseline", **common)
    edited = ScenarioSpec(
        scenario_id="chain-edited",
        edits=(
            EditCommand(
                n_edits=1,
                method=method,
                target_policy=TargetPolicy.INTERMEDIATE_HOP,
            ),
        ),
        **common,
    )
    return baseline, edited


def recipe_edit_pair(
    n_tasks: int = 200,
    attempts_k: int = 5,
    method: EditMethod = EditMethod.LOCAL_OVERRIDE,
) -> tuple[ScenarioSpec, ScenarioSpec]:
    """Multi-recipe tasks with three disjoint paths, no edits vs one edit."""
    common = dict(
        topology=ProgrammingTeam(n_coders=3),
        heterogeneity=Homogeneous("alpha"),
        task=TaskSpec(kind=PathKind.RECIPE, n_paths=3, shared_keys=0, path_len=3),
        rounds=2,
        attempts_k=attempts_k,
        n_tasks=n_tasks,
        pool_coverage=1.0,
        agent_coverage=0.95,
        conformity=0.5,
        switch_propensity=1.0,
    )
    baseline = ScenarioSpec(scenario_id="recipe-baseline", **common)
    edited = ScenarioSpec(
        scenario_id="recipe-edited",
        edits=(
            EditCommand(
                n_edits=1,
                method=method,
                target_policy=TargetPolicy.RANDOM_PATH_ATOM,
            ),
        ),
        **common,
    )
    return baseline, edited


def tolerance_sweep(
    n_tasks: int = 200,
    attempts_k: int = 5,
    method: EditMethod = EditMethod.LOCAL_OVERRIDE,
) -> list[ScenarioSpec]:
    """Edit-count sweep on recipes with two unavoidable shared atoms.

    Lower coverage and zero conformity isolate the routing effect: as
    more atoms are contested, teams are pushed off the canonical route
    onto longer detours they can complete less often.
    """
    specs = []
    for n_edits in (1, 5, 10):
        specs.append(
            ScenarioSpec(
                scenario_id=f"tolerance-{n_edits}",
                topology=ProgrammingTeam(n_coders=3),
                heterogeneity=Homogeneous("alpha"),
                task=TaskSpec(
                    kind=PathKind.RECIPE, n_paths=3, shared_keys=2, path_len=5
                ),
                edits=(
                    EditCommand(
                        n_edits=n_edits,
                        method=method,
                        target_policy=TargetPolicy.SHARED_ATOM_FIRST,
                    ),
                ),
                rounds=2,
                attempts_k=attempts_k,
                n_tasks=n_tasks,
                pool_coverage=1.0,
                agent_coverage=0.75,
                conformity=0.0,
                switch_propensity=1.0,
            )
        )
    return specs


def heterogeneity_suite(
    n_tasks: int = 200,
    attempts_k: int = 5,
) -> list[ScenarioSpec]:
    """Homogeneous trios per family plus the mixed trio on a base family."""
    common = dict(
        topology=ReasoningTrio(),
        task=TaskSpec(kind=PathKind.CHAIN, hops=2),
        rounds=2,
        attempts_k=attempts_k,
        n_tasks=n_tasks,
        pool_coverage=0.8,
        agent_coverage=0.9,
        conformity=0.5,
        switch_propensity=1.0,
    )
    specs = [
        ScenarioSpec(
            scenario_id=f"homog-{family}",
            heterogeneity=Homogeneous(family),
            **common,
        )
        for family in FAMILIES
    ]
    specs.append(
        ScenarioSpec(
            scenario_id="mixed-alpha",
            heterogeneity=Mixed("alpha", _others("alpha"), n_replace=2),
            **common,
        )
    )
    return specs


def paper_suite_config(base_seed: int = 42) -> ExperimentConfig:
    """The full sweep grid, downscaled for desk runs.

    Covers: homogeneous vs mixed teams in both topologies; zero and one
    task-critical edit per method on chains and recipes; the edit-count
    sweep {1, 5, 10}; rounds in {1, 2, 3}; coder counts in {3, 4, 5}.
    """
    n_tasks = 16
    k = 4
    specs: list[ScenarioSpec] = []

    chain_task = TaskSpec(kind=PathKind.CHAIN, hops=2)
    recipe_task = TaskSpec(kind=PathKind.RECIPE, n_paths=3, shared_keys=0, path_len=3)
    general = dict(
        rounds=2,
        attempts_k=k,
        n_tasks=n_tasks,
        pool_coverage=0.8,
        agent_coverage=0.9,
    )
    for family in FAMILIES:
        specs.append(
            ScenarioSpec(
                scenario_id=f"reasoning-homog-{family}",
                topology=ReasoningTrio(),
                heterogeneity=Homogeneous(family),
                task=chain_task,
                **general,
            )
        )
        specs.append(
            ScenarioSpec(
                scenario_id=f"reasoning-mixed-{family}",
                topology=ReasoningTrio(),
                heterogeneity=Mixed(family, _others(family), n_replace=2),
                task=chain_task,
                **general,
            )
        )
        specs.append(
            ScenarioSpec(
                scenario_id=f"programming-homog-{family}",
                topology=ProgrammingTeam(n_coders=3),
                heterogeneity=Homogeneous(family),
                task=recipe_task,
                **general,
            )
        )
        specs.append(
            ScenarioSpec(
                scenario_id=f"programming-mixed-{family}",
                topology=ProgrammingTeam(n_coders=3),
                heterogeneity=Mixed(family, _others(family), n_replace=2),
                task=recipe_task,
                **general,
            )
        )

    edit_methods = (
        ("overlay", EditMethod.CONTEXT_OVERLAY),
        ("local", EditMethod.LOCAL_OVERRIDE),
        ("global", EditMethod.GLOBAL_OVERRIDE),
    )
    critical_chain = dict(
        rounds=2,
        attempts_k=k,
        n_tasks=n_tasks,
        pool_coverage=1.0,
        agent_coverage=0.8,
    )
    critical_recipe = dict(critical_chain, agent_coverage=0.95)
    specs.append(
        ScenarioSpec(
            scenario_id="critical-chain-none",
            topology=ReasoningTrio(),
            heterogeneity=Homogeneous("alpha"),
            task=chain_task,
            **critical_chain,
        )
    )
    for label, method in edit_methods:
        specs.append(
            ScenarioSpec(
                scenario_id=f"critical-chain-{label}",
                topology=ReasoningTrio(),
                heterogeneity=Homogeneous("alpha"),
                task=chain_task,
                edits=(
                    EditCommand(
                        n_edits=1,
                        method=method,
                        target_policy=TargetPolicy.INTERMEDIATE_HOP,
                    ),
                ),
                **critical_chain,
            )
        )
    specs.append(
        ScenarioSpec(
            scenario_id="critical-recipe-none",
            topology=ProgrammingTeam(n_coders=3),
            heterogeneity=Homogeneous("alpha"),
            task=recipe_task,
            **critical_recipe,
        )
    )
    for label, method in edit_methods:
        specs.append(
            ScenarioSpec(
                scenario_id=f"critical-recipe-{label}",
                topology=ProgrammingTeam(n_coders=3),
                heterogeneity=Homogeneous("alpha"),
                task=recipe_task,
                edits=(
                    EditCommand(
                        n_edits=1,
                        method=method,
                        target_policy=TargetPolicy.RANDOM_PATH_ATOM,
                    ),
                ),
                **critical_recipe,
            )
        )

    for n_edits in (1, 5, 10):
        specs.append(
            ScenarioSpec(
                scenario_id=f"tolerance-{n_edits}",
                topology=ProgrammingTeam(n_coders=3),
                heterogeneity=Homogeneous("alpha"),
                task=TaskSpec(
                    kind=PathKind.RECIPE, n_paths=3, shared_keys=2, path_len=5
                ),
                edits=(
                    EditCommand(
                        n_edits=n_edits,
                        method=EditMethod.LOCAL_OVERRIDE,
                        target_policy=TargetPolicy.SHARED_ATOM_FIRST,
                    ),
                ),
                rounds=2,
                attempts_k=k,
                n_tasks=n_tasks,
                pool_coverage=1.0,
                agent_coverage=0.75,
                conformity=0.0,
                switch_propensity=1.0,
            )
        )

    def _programming_conditions(scenario_prefix: str, **overrides) -> list[ScenarioSpec]:
        rows = []
        base = dict(
            topology=ProgrammingTeam(n_coders=3),
            task=recipe_task,
            rounds=2,
            attempts_k=k,
            n_tasks=n_tasks,
            pool_coverage=0.8,
            agent_coverage=0.9,
        )
        base.update(overrides)
        rows.append(
            ScenarioSpec(
                scenario_id=f"{scenario_prefix}-plain",
                heterogeneity=Homogeneous("alpha"),
                **base,
            )
        )
        rows.append(
            ScenarioSpec(
                scenario_id=f"{scenario_prefix}-mixed",
                heterogeneity=Mixed("alpha", _others("alpha"), n_replace=2),
                **base,
            )
        )
        rows.append(
            ScenarioSpec(
                scenario_id=f"{scenario_prefix}-edited",
                heterogeneity=Homogeneous("alpha"),
                edits=(
                    EditCommand(
                        n_edits=1,
                        method=EditMethod.LOCAL_OVERRIDE,
                        target_policy=TargetPolicy.RANDOM_PATH_ATOM,
                    ),
                ),
                **base,
            )
        )
        return rows

    for rounds in (1, 2, 3):
        specs.extend(_programming_conditions(f"rounds-{rounds}", rounds=rounds))
    for coders in (3, 4, 5):
        specs.extend(
            _programming_conditions(
                f"coders-{coders}", topology=ProgrammingTeam(n_coders=coders)
            )
        )

    return ExperimentConfig(
        scenarios=tuple(specs),
        base_seed=base_seed,
        repetitions=3,
        output_dir="paper-suite",
        similarity_kernel="jaccard",
    )
