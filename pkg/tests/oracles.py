"""Independent brute-force recomputations of the metric suite.

These deliberately re-derive every metric straight from its defining
formula with explicit loops and exact rational arithmetic, sharing no
code with the package implementation.  The pairwise kernel is evaluated
in both argument orders and averaged, which for a symmetric kernel must
coincide with the implementation's single evaluation.
"""

from __future__ import annotations

from fractions import Fraction

from conflictlab.metrics import OutcomeCategory


def _tasks_in_order(records):
    seen = []
    for record in records:
        if record.task_id not in seen:
            seen.append(record.task_id)
    return seen


def _attempts(records, task_id):
    return [r for r in records if r.task_id == task_id]


def oracle_completion_rate(records):
    if not records:
        return None
    tasks = _tasks_in_order(records)
    n = len(tasks)
    k = len(_attempts(records, tasks[0]))
    total = Fraction(0)
    for task_id in tasks:
        for record in _attempts(records, task_id):
            total += 1 if record.completed else 0
    return float(total / (n * k))


def oracle_task_success_rate(records):
    if not records:
        return None
    tasks = _tasks_in_order(records)
    n = len(tasks)
    k = len(_attempts(records, tasks[0]))
    total = Fraction(0)
    for task_id in tasks:
        for record in _attempts(records, task_id):
            total += 1 if record.outcome is OutcomeCategory.CORRECT else 0
    return float(total / (n * k))


def oracle_writing_robustness(records, kernel):
    if not records:
        return None
    tasks = _tasks_in_order(records)
    k = len(_attempts(records, tasks[0]))
    if k < 2:
        return None
    outer = Fraction(0)
    for task_id in tasks:
        attempts = _attempts(records, task_id)
        inner = Fraction(0)
        pairs = 0
        for p in range(len(attempts)):
            for q in range(p + 1, len(attempts)):
                forward = kernel(attempts[p].atoms_used, attempts[q].atoms_used)
                backward = kernel(attempts[q].atoms_used, attempts[p].atoms_used)
                inner += (Fraction(forward) + Fraction(backward)) / 2
                pairs += 1
        outer += inner / pairs
    return float(outer / len(tasks))


def oracle_decision_robustness(records):
    if not records:
        return None
    tasks = _tasks_in_order(records)
    k = len(_attempts(records, tasks[0]))
    if k < 2:
        return None
    outer = Fraction(0)
    for task_id in tasks:
        attempts = _attempts(records, task_id)
        inner = Fraction(0)
        pairs = 0
        for p in range(len(attempts)):
            for q in range(p + 1, len(attempts)):
                inner += 1 if attempts[p].outcome is attempts[q].outcome else 0
                pairs += 1
        outer += Fraction(inner) / pairs
    return float(outer / len(tasks))


def oracle_adoption_probability(records, edits):
    if not records:
        return None
    planted = [(edit.key, edit.new_object) for edit in edits]
    hits = 0
    for record in records:
        used = False
        for pair in planted:
            if pair in record.atoms_used:
                used = True
        if used:
            hits += 1
    return float(Fraction(hits, len(records)))
