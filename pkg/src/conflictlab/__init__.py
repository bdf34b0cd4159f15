"""conflictlab: deterministic disagreement experiments for agent teams.

Agents hold layered triple stores, deliberate in rounds over tasks whose
solution structure is explicit (a single evidential chain or several
redundant recipes), and settle by majority vote.  Disagreement is
injected either as family heterogeneity or as targeted counterfactual
edits, and a metric suite measures completion, success, robustness,
adoption of planted facts, and self-repair.
"""

from .engine import (
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
from .injection import (
    EditCommand,
    Heterogeneity,
    Homogeneous,
    InjectionError,
    Mixed,
    ProgrammingTeam,
    ReasoningTrio,
    ScenarioSpec,
    TargetPolicy,
    TaskSpec,
    Topology,
    build_team,
    inject_task_critical,
    make_mixed_team,
)
from .knowledge import (
    Atom,
    DisagreementSet,
    EditMethod,
    EditSpec,
    FactKey,
    KnowledgeBase,
    apply_edit,
    believed_object,
    conflict_set,
    kb_from_jsonl,
    kb_overlap,
    kb_to_jsonl,
)
from .metrics import (
    MetricsReport,
    OutcomeCategory,
    RunRecord,
    adoption_probability,
    classify_outcome,
    completion_rate,
    decision_robustness,
    detect_self_repair,
    jaccard_similarity,
    self_repair_rate,
    task_success_rate,
    writing_robustness,
)
from .runner import (
    ConfigError,
    ExperimentConfig,
    load_config,
    load_config_file,
    render_report,
    replay_reports,
    run_experiment,
)
from .tasks import (
    PathKind,
    SolutionPath,
    Task,
    evaluate_path,
    feasible_paths,
    fragility,
    generate_multi_recipe_task,
    generate_single_chain_task,
    is_blocked,
    task_from_json,
    task_to_json,
)

__version__ = "0.1.0"
