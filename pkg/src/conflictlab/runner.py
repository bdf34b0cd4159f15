"""Configuration parsing, seeded scenario execution, traces, and reports.

A run walks scenario x repetition x task x attempt.  Child seeds are
derived by stable hashing of the coordinate tuple, so adding a scenario
never perturbs another scenario's randomness, and two scenarios that
share generator parameters see identical tasks and identical team
knowledge draws (the edit condition is then the only difference between
a baseline and its edited twin).

Traces are append-only JSON Lines, one file per scenario, one record
per event, with the fixed field set
{run, kind, scenario_id, task_id, attempt, round, agent_id, payload, seed}.
The trace files are the system of record: every metrics report is
recomputable from them alone (see :func:`replay_reports`).
"""

from __future__ import annotations

import configparser
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .engine import Proposal, atoms_from_jsonable, atoms_to_jsonable, deliberate
from .injection import (
    EditCommand,
    Homogeneous,
    InjectionError,
    Mixed,
    PAIRWISE_METRICS,
    ProgrammingTeam,
    ReasoningTrio,
    ScenarioSpec,
    TargetPolicy,
    TaskSpec,
    build_team,
    inject_task_critical,
)
from .knowledge import EditMethod, EditSpec, FactKey
from .metrics import (
    MetricsReport,
    OutcomeCategory,
    RunRecord,
    SIMILARITY_KERNELS,
    adoption_probability,
    completion_rate,
    decision_robustness,
    self_repair_rate,
    task_success_rate,
    writing_robustness,
)
from .seeds import stable_seed
from .tasks import PathKind, Task

TRACE_FIELDS = (
    "run",
    "kind",
    "scenario_id",
    "task_id",
    "attempt",
    "round",
    "agent_id",
    "payload",
    "seed",
)

ABSENT_MARK = "—"


class ConfigError(ValueError):
    """A configuration file failed validation; message carries context."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenarios: tuple[ScenarioSpec, ...]
    base_seed: int = 42
    repetitions: int = 5
    output_dir: str = "traces"
    similarity_kernel: str = "jaccard"

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if not self.scenarios:
            raise ConfigError("a configuration needs at least one scenario")
        ids = [s.scenario_id for s in self.scenarios]
        if len(set(ids)) != len(ids):
            raise ConfigError("scenario ids must be unique")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.similarity_kernel not in SIMILARITY_KERNELS:
            raise ConfigError(f"unknown similarity kernel {self.similarity_kernel!r}")


_EXPERIMENT_KEYS = {"base_seed", "repetitions", "output_dir", "similarity_kernel"}
_SCENARIO_KEYS = {
    "topology",
    "heterogeneity",
    "tasks",
    "edits",
    "rounds",
    "attempts_k",
    "n_tasks",
    "pool_coverage",
    "agent_coverage",
    "conformity",
    "switch_propensity",
    "metrics",
}


def _kv_tokens(where: str, text: str, allowed: set[str]) -> dict[str, str]:
    pairs = {}
    for token in text.split():
        if "=" not in token:
            raise ConfigError(f"{where}: expected key=value, got {token!r}")
        key, _, value = token.partition("=")
        if key not in allowed:
            raise ConfigError(f"{where}: unknown option {key!r}")
        pairs[key] = value
    return pairs


def _as_int(where: str, value: str) -> int:
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"{where}: expected an integer, got {value!r}") from exc


def _as_float(where: str, value: str) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"{where}: expected a number, got {value!r}") from exc


def _parse_topology(where: str, text: str):
    head, _, rest = text.strip().partition(" ")
    if head == "reasoning_trio":
        if rest.strip():
            raise ConfigError(f"{where}: reasoning_trio takes no options")
        return ReasoningTrio()
    if head == "programming_team":
        opts = _kv_tokens(where, rest, {"n_coders"})
        return ProgrammingTeam(n_coders=_as_int(where, opts.get("n_coders", "3")))
    raise ConfigError(f"{where}: unknown topology {head!r}")


def _parse_heterogeneity(where: str, text: str):
    head, _, rest = text.strip().partition(" ")
    if head == "homogeneous":
        opts = _kv_tokens(where, rest, {"family"})
        if "family" not in opts:
            raise ConfigError(f"{where}: homogeneous needs family=<tag>")
        return Homogeneous(family=opts["family"])
    if head == "mixed":
        opts = _kv_tokens(where, rest, {"base", "pool", "n_replace"})
        missing = {"base", "pool", "n_replace"} - set(opts)
        if missing:
            raise ConfigError(f"{where}: mixed needs {sorted(missing)}")
        pool = tuple(tag for tag in opts["pool"].split(",") if tag)
        return Mixed(
            base_family=opts["base"],
            pool=pool,
            n_replace=_as_int(where, opts["n_replace"]),
        )
    raise ConfigError(f"{where}: unknown heterogeneity {head!r}")


def _parse_tasks(where: str, text: str) -> TaskSpec:
    head, _, rest = text.strip().partition(" ")
    if head == "chain":
        opts = _kv_tokens(where, rest, {"hops"})
        return TaskSpec(kind=PathKind.CHAIN, hops=_as_int(where, opts.get("hops", "2")))
    if head == "recipe":
        opts = _kv_tokens(where, rest, {"n_paths", "shared_keys", "path_len"})
        return TaskSpec(
            kind=PathKind.RECIPE,
            n_paths=_as_int(where, opts.get("n_paths", "3")),
            shared_keys=_as_int(where, opts.get("shared_keys", "0")),
            path_len=_as_int(where, opts.get("path_len", "4")),
        )
    raise ConfigError(f"{where}: unknown task kind {head!r}")


def _parse_edits(where: str, text: str) -> tuple[EditCommand, ...]:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines or lines == ["none"]:
        return ()
    commands = []
    for line in lines:
        opts = _kv_tokens(
            where, line, {"n", "method", "target", "agent", "side_effect_rate"}
        )
        if "n" not in opts:
            raise ConfigError(f"{where}: an edit line needs n=<count>")
        try:
            method = EditMethod(opts.get("method", "local_override"))
        except ValueError as exc:
            raise ConfigError(f"{where}: unknown edit method {opts['method']!r}") from exc
        try:
            target = TargetPolicy(opts.get("target", "random_path_atom"))
        except ValueError as exc:
            raise ConfigError(f"{where}: unknown target policy {opts['target']!r}") from exc
        commands.append(
            EditCommand(
                n_edits=_as_int(where, opts["n"]),
                method=method,
                target_policy=target,
                edited_agent_index=(
                    _as_int(where, opts["agent"]) if "agent" in opts else None
                ),
                side_effect_rate=_as_float(where, opts.get("side_effect_rate", "0.05")),
            )
        )
    return tuple(commands)


def load_config(text: str) -> ExperimentConfig:
    """Parse and validate the INI-style experiment grammar.

    One optional ``[experiment]`` section plus one ``[scenario <id>]``
    section per scenario.  Unknown keys, malformed values, and duplicate
    scenario ids are rejected with the offending section and field named
    in the error.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc

    base_seed = 42
    repetitions = 5
    output_dir = "traces"
    kernel = "jaccard"
    scenarios = []

    for section in parser.sections():
        body = parser[section]
        if section == "experiment":
            for key in body:
                if key not in _EXPERIMENT_KEYS:
                    raise ConfigError(f"[experiment]: unknown key {key!r}")
            base_seed = _as_int("[experiment] base_seed", body.get("base_seed", "42"))
            repetitions = _as_int(
                "[experiment] repetitions", body.get("repetitions", "5")
            )
            output_dir = body.get("output_dir", "traces")
            kernel = body.get("similarity_kernel", "jaccard")
            continue
        head, _, scenario_id = section.partition(" ")
        if head != "scenario" or not scenario_id:
            raise ConfigError(f"unknown section [{section}]")
        where = f"[scenario {scenario_id}]"
        for key in body:
            if key not in _SCENARIO_KEYS:
                raise ConfigError(f"{where}: unknown key {key!r}")
        for required in ("topology", "heterogeneity", "tasks"):
            if required not in body:
                raise ConfigError(f"{where}: missing required key {required!r}")
        metrics_value = body.get("metrics")
        requested = tuple(metrics_value.split()) if metrics_value else None
        try:
            scenarios.append(
                ScenarioSpec(
                    scenario_id=scenario_id,
                    topology=_parse_topology(f"{where} topology", body["topology"]),
                    heterogeneity=_parse_heterogeneity(
                        f"{where} heterogeneity", body["heterogeneity"]
                    ),
                    task=_parse_tasks(f"{where} tasks", body["tasks"]),
                    edits=_parse_edits(f"{where} edits", body.get("edits", "")),
                    rounds=_as_int(f"{where} rounds", body.get("rounds", "2")),
                    attempts_k=_as_int(f"{where} attempts_k", body.get("attempts_k", "5")),
                    n_tasks=_as_int(f"{where} n_tasks", body.get("n_tasks", "50")),
                    pool_coverage=_as_float(
                        f"{where} pool_coverage", body.get("pool_coverage", "0.8")
                    ),
                    agent_coverage=_as_float(
                        f"{where} agent_coverage", body.get("agent_coverage", "0.9")
                    ),
                    conformity=_as_float(
                        f"{where} conformity", body.get("conformity", "0.5")
                    ),
                    switch_propensity=_as_float(
                        f"{where} switch_propensity", body.get("switch_propensity", "1.0")
                    ),
                    requested_metrics=requested,
                )
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{where}: {exc}") from exc

    try:
        return ExperimentConfig(
            scenarios=tuple(scenarios),
            base_seed=base_seed,
            repetitions=repetitions,
            output_dir=output_dir,
            similarity_kernel=kernel,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config_file(path: str | Path) -> ExperimentConfig:
    return load_config(Path(path).read_text(encoding="utf-8"))


@dataclass
class ScenarioExecution:
    """Everything one scenario produced, before reporting."""

    spec: ScenarioSpec
    records_by_rep: dict[int, list[RunRecord]]
    edits_by_task: dict[str, list[EditSpec]]
    path_keys_by_task: dict[str, frozenset[FactKey]]
    trace_lines: list[str]


@dataclass(frozen=True)
class ScenarioResult:
    spec: ScenarioSpec
    report: Optional[MetricsReport] = None
    error: Optional[str] = None


def scenario_tasks(spec: ScenarioSpec, base_seed: int) -> list[Task]:
    """The scenario's task list; shared by scenarios with equal generators."""
    fingerprint = spec.task.fingerprint()
    return [
        spec.task.generate(stable_seed("task", base_seed, fingerprint, index))
        for index in range(spec.n_tasks)
    ]


def _edit_payload(edits: Sequence[EditSpec]) -> list[dict]:
    return [
        {
            "subject": e.key.subject,
            "relation": e.key.relation,
            "true_object": e.true_object,
            "new_object": e.new_object,
            "method": e.method.value,
            "side_effect_rate": e.side_effect_rate,
        }
        for e in edits
    ]


def _edits_from_payload(data: Sequence[Mapping]) -> list[EditSpec]:
    return [
        EditSpec(
            key=FactKey(d["subject"], d["relation"]),
            true_object=d["true_object"],
            new_object=d["new_object"],
            method=EditMethod(d["method"]),
            side_effect_rate=d["side_effect_rate"],
        )
        for d in data
    ]


def execute_scenario(
    spec: ScenarioSpec,
    base_seed: int,
    repetitions: int,
    kernel_name: str,
    collect_traces: bool = True,
) -> ScenarioExecution:
    """Run every (repetition, task, attempt) cell of one scenario.

    With ``collect_traces`` off the trace lines are skipped, which makes
    in-memory sweeps faster; the records and metrics are unaffected.
    """
    tasks = scenario_tasks(spec, base_seed)
    records_by_rep: dict[int, list[RunRecord]] = {}
    edits_by_task: dict[str, list[EditSpec]] = {}
    path_keys_by_task: dict[str, frozenset[FactKey]] = {}
    trace_lines: list[str] = []
    run_ordinal = 0

    for task in tasks:
        keys: set[FactKey] = set()
        for path in task.paths:
            keys |= path.key_set()
        path_keys_by_task[task.task_id] = frozenset(keys)

    for rep in range(1, repetitions + 1):
        records = []
        for task_index, task in enumerate(tasks):
            universe = task.atom_map()
            for attempt in range(1, spec.attempts_k + 1):
                run_seed = stable_seed(
                    "run", base_seed, spec.scenario_id, rep, task_index, attempt
                )
                kb_seed = stable_seed("kb", base_seed, task.task_id, rep, attempt)
                team = build_team(spec, kb_seed, universe)
                run_edits: list[EditSpec] = []
                for cmd_index, cmd in enumerate(spec.edits):
                    edit_seed = stable_seed("edit", base_seed, task.task_id, cmd_index)
                    team, edits = inject_task_critical(team, task, cmd, edit_seed)
                    run_edits.extend(edits)
                edits_by_task[task.task_id] = run_edits

                events: list[tuple[str, Optional[int], Optional[str], dict]] = []
                if collect_traces:
                    events.append(
                        (
                            "RunStarted",
                            None,
                            None,
                            {
                                "repetition": rep,
                                "task_index": task_index,
                                "rounds": spec.rounds,
                                "attempts_k": spec.attempts_k,
                                "n_tasks": spec.n_tasks,
                                "kernel": kernel_name,
                                "edits": _edit_payload(run_edits),
                                "path_keys": [
                                    sorted(
                                        [k.subject, k.relation]
                                        for k in path.key_set()
                                    )
                                    for path in task.paths
                                ],
                            },
                        )
                    )
                record = deliberate(
                    team,
                    task,
                    spec.rounds,
                    run_seed,
                    scenario_id=spec.scenario_id,
                    attempt_index=attempt,
                    observer=(
                        (
                            lambda kind, rnd, agent, payload: events.append(
                                (kind, rnd, agent, payload)
                            )
                        )
                        if collect_traces
                        else None
                    ),
                )
                records.append(record)
                for kind, rnd, agent, payload in events:
                    trace_lines.append(
                        json.dumps(
                            {
                                "run": run_ordinal,
                                "kind": kind,
                                "scenario_id": spec.scenario_id,
                                "task_id": task.task_id,
                                "attempt": attempt,
                                "round": rnd,
                                "agent_id": agent,
                                "payload": payload,
                                "seed": run_seed,
                            }
                        )
                    )
                run_ordinal += 1
        records_by_rep[rep] = records

    return ScenarioExecution(
        spec=spec,
        records_by_rep=records_by_rep,
        edits_by_task=edits_by_task,
        path_keys_by_task=path_keys_by_task,
        trace_lines=trace_lines,
    )


def _mean(values: Iterable[Optional[float]]) -> Optional[float]:
    collected = list(values)
    if not collected or any(v is None for v in collected):
        return None
    return float(sum(Fraction(v) for v in collected) / len(collected))


def build_report(
    spec_k: int,
    spec_n_tasks: int,
    records_by_rep: Mapping[int, Sequence[RunRecord]],
    edits_by_task: Mapping[str, Sequence[EditSpec]],
    path_keys_by_task: Mapping[str, frozenset[FactKey]],
    kernel_name: str,
) -> MetricsReport:
    """Per-repetition metrics averaged across repetitions."""
    kernel = SIMILARITY_KERNELS[kernel_name]
    reps = [records_by_rep[rep] for rep in sorted(records_by_rep)]
    all_edits = [e for edits in edits_by_task.values() for e in edits]
    return MetricsReport(
        cr=_mean(completion_rate(r) for r in reps),
        tsr=_mean(task_success_rate(r) for r in reps),
        cwr=_mean(writing_robustness(r, kernel) for r in reps),
        cdr=_mean(decision_robustness(r) for r in reps),
        adoption_prob=(
            _mean(adoption_probability(r, all_edits) for r in reps) if all_edits else None
        ),
        self_repair_rate=(
            _mean(self_repair_rate(r, edits_by_task, path_keys_by_task) for r in reps)
            if all_edits
            else None
        ),
        n_tasks=spec_n_tasks,
        attempts_k=spec_k,
    )


def run_specs(
    specs: Sequence[ScenarioSpec],
    base_seed: int,
    repetitions: int = 1,
    kernel: str = "jaccard",
) -> dict[str, tuple[MetricsReport, ScenarioExecution]]:
    """In-memory execution of a spec list, without trace persistence."""
    out = {}
    for spec in specs:
        execution = execute_scenario(
            spec, base_seed, repetitions, kernel, collect_traces=False
        )
        report = build_report(
            spec.attempts_k,
            spec.n_tasks,
            execution.records_by_rep,
            execution.edits_by_task,
            execution.path_keys_by_task,
            kernel,
        )
        out[spec.scenario_id] = (report, execution)
    return out


def _execute_entry(args: tuple[ScenarioSpec, int, int, str]):
    spec, base_seed, repetitions, kernel = args
    try:
        return execute_scenario(spec, base_seed, repetitions, kernel)
    except InjectionError as exc:
        return (spec.scenario_id, str(exc))


def run_experiment(
    config: ExperimentConfig,
    out_dir: Optional[str | Path] = None,
    parallel: int = 1,
    write_traces: bool = True,
) -> list[ScenarioResult]:
    """Execute every scenario and (optionally) persist traces and report.

    Scenarios are independent work items; with ``parallel > 1`` they run
    in worker processes.  Output is written in configuration order after
    each scenario completes, so results are identical at any parallelism
    degree.  A scenario whose injection is unsatisfiable is marked
    failed and the rest continue.
    """
    jobs = [
        (spec, config.base_seed, config.repetitions, config.similarity_kernel)
        for spec in config.scenarios
    ]
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            outcomes = list(pool.map(_execute_entry, jobs))
    else:
        outcomes = [_execute_entry(job) for job in jobs]

    results = []
    target = Path(out_dir) if out_dir is not None else Path(config.output_dir)
    if write_traces:
        target.mkdir(parents=True, exist_ok=True)
    for spec, outcome in zip(config.scenarios, outcomes):
        if isinstance(outcome, tuple):
            results.append(ScenarioResult(spec=spec, error=outcome[1]))
            continue
        report = build_report(
            spec.attempts_k,
            spec.n_tasks,
            outcome.records_by_rep,
            outcome.edits_by_task,
            outcome.path_keys_by_task,
            config.similarity_kernel,
        )
        results.append(ScenarioResult(spec=spec, report=report))
        if write_traces:
            path = target / f"{spec.scenario_id}.jsonl"
            path.write_text("\n".join(outcome.trace_lines) + "\n", encoding="utf-8")
    if write_traces:
        (target / "report.json").write_text(
            render_report(results, "json") + "\n", encoding="utf-8"
        )
    return results


def render_report(results: Sequence[ScenarioResult], format: str = "table") -> str:
    """Render results as an aligned text table or a JSON document.

    Undefined metrics render as an em dash, never as zero; the best
    defined value in each of the CR/TSR/CWR/CDR columns is starred.
    """
    return render_report_rows(
        [(r.spec.scenario_id, r.report, r.error) for r in results], format
    )


def render_report_rows(
    rows: Sequence[tuple[str, Optional[MetricsReport], Optional[str]]],
    format: str = "table",
) -> str:
    if not rows:
        raise ValueError("nothing to render")
    if format == "json":
        doc = {"scenarios": {}}
        for scenario_id, report, error in rows:
            if report is None:
                doc["scenarios"][scenario_id] = {"error": error or "failed"}
            else:
                doc["scenarios"][scenario_id] = report.to_dict()
        return json.dumps(doc, indent=2, sort_keys=True)
    if format != "table":
        raise ValueError(f"unknown report format {format!r}")

    columns = ("cr", "tsr", "cwr", "cdr", "adoption_prob", "self_repair_rate")
    headers = ("scenario", "CR", "TSR", "CWR", "CDR", "ADOPT", "REPAIR")
    best: dict[str, Optional[float]] = {}
    for metric in ("cr", "tsr", "cwr", "cdr"):
        defined = [
            getattr(report, metric)
            for _, report, _ in rows
            if report is not None and getattr(report, metric) is not None
        ]
        best[metric] = max(defined) if defined else None

    cells = []
    for scenario_id, report, error in rows:
        if report is None:
            cells.append([scenario_id, f"FAILED: {error}"])
            continue
        row = [scenario_id]
        for metric in columns:
            value = getattr(report, metric)
            if value is None:
                row.append(ABSENT_MARK)
            else:
                mark = "*" if best.get(metric) == value else ""
                row.append(f"{value:.4f}{mark}")
        cells.append(row)

    widths = [len(h) for h in headers]
    for row in cells:
        for i, cell in enumerate(row[: len(widths)]):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    for row in cells:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines)


def reports_from_json(text: str) -> dict[str, MetricsReport]:
    """Load the JSON report form back into report objects."""
    doc = json.loads(text)
    reports = {}
    for scenario_id, body in doc["scenarios"].items():
        if "error" in body:
            continue
        reports[scenario_id] = MetricsReport.from_dict(body)
    return reports


def _proposal_from_payload(event: Mapping) -> Proposal:
    payload = event["payload"]
    return Proposal(
        agent_id=event["agent_id"],
        round=event["round"],
        chosen_path=payload["chosen_path"],
        answer=payload["answer"],
        atoms_used=atoms_from_jsonable(payload["atoms_used"]),
    )


@dataclass
class ReplayedScenario:
    scenario_id: str
    attempts_k: int
    n_tasks: int
    kernel: str
    records_by_rep: dict[int, list[RunRecord]]
    edits_by_task: dict[str, list[EditSpec]]
    path_keys_by_task: dict[str, frozenset[FactKey]]


def replay_trace_lines(scenario_id: str, lines: Iterable[str]) -> ReplayedScenario:
    """Reconstruct every run record of one scenario from its trace."""
    runs: dict[int, dict] = {}
    for line in lines:
        if not line.strip():
            continue
        event = json.loads(line)
        runs.setdefault(event["run"], {"proposals": []})
        bucket = runs[event["run"]]
        kind = event["kind"]
        if kind == "RunStarted":
            bucket["start"] = event
        elif kind == "ProposalMade":
            bucket["proposals"].append(_proposal_from_payload(event))
        elif kind == "Aggregated":
            bucket["aggregated"] = event
        elif kind == "OutcomeClassified":
            bucket["classified"] = event

    attempts_k = 0
    n_tasks = 0
    kernel = "jaccard"
    records_by_rep: dict[int, list[RunRecord]] = {}
    edits_by_task: dict[str, list[EditSpec]] = {}
    path_keys_by_task: dict[str, frozenset[FactKey]] = {}
    for ordinal in sorted(runs):
        bucket = runs[ordinal]
        start = bucket["start"]
        meta = start["payload"]
        attempts_k = meta["attempts_k"]
        n_tasks = meta["n_tasks"]
        kernel = meta["kernel"]
        task_id = start["task_id"]
        edits_by_task[task_id] = _edits_from_payload(meta["edits"])
        path_keys_by_task[task_id] = frozenset(
            FactKey(s, r) for path in meta["path_keys"] for s, r in path
        )
        aggregated = bucket["aggregated"]["payload"]
        classified = bucket["classified"]["payload"]
        record = RunRecord(
            task_id=task_id,
            attempt_index=start["attempt"],
            completed=classified["completed"],
            final_answer=aggregated["answer"],
            atoms_used=atoms_from_jsonable(aggregated["atoms_used"]),
            outcome=OutcomeCategory(classified["outcome"]),
            transcript=tuple(bucket["proposals"]),
            seed=start["seed"],
            scenario_id=scenario_id,
            outcome_detail=classified["detail"],
        )
        records_by_rep.setdefault(meta["repetition"], []).append(record)

    return ReplayedScenario(
        scenario_id=scenario_id,
        attempts_k=attempts_k,
        n_tasks=n_tasks,
        kernel=kernel,
        records_by_rep=records_by_rep,
        edits_by_task=edits_by_task,
        path_keys_by_task=path_keys_by_task,
    )


def replay_reports(trace_dir: str | Path) -> dict[str, MetricsReport]:
    """Recompute every scenario's metrics report from trace files alone."""
    reports = {}
    for path in sorted(Path(trace_dir).glob("*.jsonl")):
        scenario_id = path.stem
        replayed = replay_trace_lines(
            scenario_id, path.read_text(encoding="utf-8").splitlines()
        )
        reports[scenario_id] = build_report(
            replayed.attempts_k,
            replayed.n_tasks,
            replayed.records_by_rep,
            replayed.edits_by_task,
            replayed.path_keys_by_task,
            replayed.kernel,
        )
    return reports
