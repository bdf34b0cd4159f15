"""Atoms, layered knowledge bases, edits, and disagreement sets.

Knowledge is held as (subject, relation, object) triples.  A knowledge
base resolves a (subject, relation) key through three layers: an
in-context overlay (latest entry wins), local overrides, and base facts.
Edits emulate the externally observable behaviour of the common
knowledge-editing families:

* ``context_overlay`` appends the counterfactual to the overlay,
* ``local_override`` rewrites exactly the targeted key,
* ``global_override`` rewrites the key and may additionally corrupt
  other base facts that share the edited relation (collateral damage,
  drawn from an explicit seed).

All values are immutable after construction; operations return new
values and never mutate their inputs.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence


class EditMethod(str, Enum):
    """How a counterfactual is installed into an agent's knowledge."""

    CONTEXT_OVERLAY = "context_overlay"
    LOCAL_OVERRIDE = "local_override"
    GLOBAL_OVERRIDE = "global_override"


@dataclass(frozen=True, slots=True)
class FactKey:
    """Lookup key for a fact: the (subject, relation) pair."""

    subject: str
    relation: str

    def __post_init__(self) -> None:
        if not self.subject or not self.relation:
            raise ValueError("FactKey fields must be non-empty")

    def sort_key(self) -> tuple[str, str]:
        return (self.subject, self.relation)


@dataclass(frozen=True, slots=True)
class Atom:
    """A single (subject, relation, object) triple."""

    subject: str
    relation: str
    object: str

    def __post_init__(self) -> None:
        if not self.subject or not self.relation or not self.object:
            raise ValueError("Atom fields must be non-empty")

    @property
    def key(self) -> FactKey:
        return FactKey(self.subject, self.relation)


@dataclass(frozen=True)
class KnowledgeBase:
    """Layered belief store with deterministic resolution order.

    Resolution order for a key: context overlay (latest entry first),
    then local overrides, then base facts.  The layers are stored
    separately; an edit never rewrites an entry in place.
    """

    base_facts: Mapping[FactKey, str] = field(default_factory=dict)
    local_overrides: Mapping[FactKey, str] = field(default_factory=dict)
    context_overlay: tuple[Atom, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "base_facts", dict(self.base_facts))
        object.__setattr__(self, "local_overrides", dict(self.local_overrides))
        object.__setattr__(self, "context_overlay", tuple(self.context_overlay))

    @classmethod
    def from_atoms(cls, atoms: Iterable[Atom]) -> "KnowledgeBase":
        """Build a base-layer-only store from triples (later entries win)."""
        return cls(base_facts={a.key: a.object for a in atoms})

    def keys(self) -> set[FactKey]:
        """Every key this store resolves, across all layers."""
        keys = set(self.base_facts) | set(self.local_overrides)
        keys.update(a.key for a in self.context_overlay)
        return keys

    def resolved_atoms(self) -> dict[FactKey, str]:
        """The full resolution function as a key -> object map."""
        return {k: believed_object(self, k) for k in self.keys()}

    def is_empty(self) -> bool:
        return not (self.base_facts or self.local_overrides or self.context_overlay)


@dataclass(frozen=True, slots=True)
class EditSpec:
    """One counterfactual rewrite: key, true object, planted object, method.

    ``side_effect_rate`` is the per-fact collateral corruption probability
    and is only meaningful for ``global_override``; it must be 0 otherwise.
    """

    key: FactKey
    true_object: str
    new_object: str
    method: EditMethod
    side_effect_rate: float = 0.0

    def __post_init__(self) -> None:
        if not self.new_object:
            raise ValueError("new_object must be non-empty")
        if self.new_object == self.true_object:
            raise ValueError("edit must change the object")
        if not 0.0 <= self.side_effect_rate <= 1.0:
            raise ValueError("side_effect_rate must be in [0, 1]")
        if self.method is not EditMethod.GLOBAL_OVERRIDE and self.side_effect_rate != 0.0:
            raise ValueError("side_effect_rate is only valid for global_override")


@dataclass(frozen=True)
class DisagreementSet:
    """Keys on which at least two agents hold distinct objects."""

    contested: Mapping[FactKey, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        frozen = {k: frozenset(v) for k, v in dict(self.contested).items()}
        for key, objs in frozen.items():
            if len(objs) < 2:
                raise ValueError(f"contested entry for {key} needs >= 2 objects")
        object.__setattr__(self, "contested", frozen)

    def __bool__(self) -> bool:
        return bool(self.contested)

    def __contains__(self, key: FactKey) -> bool:
        return key in self.contested

    def keys(self) -> set[FactKey]:
        return set(self.contested)


EMPTY_DISAGREEMENT = DisagreementSet()


def believed_object(kb: KnowledgeBase, key: FactKey) -> Optional[str]:
    """Resolve ``key`` through the layers; ``None`` when the store lacks it."""
    for atom in reversed(kb.context_overlay):
        if atom.key == key:
            return atom.object
    hit = kb.local_overrides.get(key)
    if hit is not None:
        return hit
    return kb.base_facts.get(key)


def apply_edit(kb: KnowledgeBase, edit: EditSpec, rng_seed: int) -> KnowledgeBase:
    """Return a new store with ``edit`` installed; the input is untouched.

    ``global_override`` additionally walks every other base fact that
    shares the edited relation (in sorted key order) and, with
    probability ``side_effect_rate`` per fact, replaces its object with a
    fresh corrupted identifier.  Parametric overrides drop any stale
    overlay entries for the edited key: the edit shadows the previous
    belief entirely, whichever layer held it.  Equal inputs and seed
    give equal output.
    """
    if edit.method is EditMethod.GLOBAL_OVERRIDE and not 0.0 <= edit.side_effect_rate <= 1.0:
        raise ValueError("side_effect_rate must be in [0, 1]")

    if edit.method is EditMethod.CONTEXT_OVERLAY:
        appended = Atom(edit.key.subject, edit.key.relation, edit.new_object)
        return KnowledgeBase(
            base_facts=kb.base_facts,
            local_overrides=kb.local_overrides,
            context_overlay=kb.context_overlay + (appended,),
        )

    overrides = dict(kb.local_overrides)
    overrides[edit.key] = edit.new_object
    base = dict(kb.base_facts)
    if edit.method is EditMethod.GLOBAL_OVERRIDE:
        rng = random.Random(rng_seed)
        for key in sorted(base, key=FactKey.sort_key):
            if key == edit.key or key.relation != edit.key.relation:
                continue
            if rng.random() < edit.side_effect_rate:
                base[key] = f"{base[key]}~{rng.getrandbits(24):06x}"
    return KnowledgeBase(
        base_facts=base,
        local_overrides=overrides,
        context_overlay=tuple(a for a in kb.context_overlay if a.key != edit.key),
    )


def conflict_set(kbs: Sequence[KnowledgeBase], keys: Iterable[FactKey]) -> DisagreementSet:
    """Collect the keys from ``keys`` that resolve to >= 2 distinct objects.

    Absence never counts: a store that lacks a key contributes nothing
    to that key's entry.  Permuting ``kbs`` cannot change the result.
    """
    probe = set(keys)
    if not probe:
        raise ValueError("probe key set must be non-empty")
    contested: dict[FactKey, frozenset[str]] = {}
    for key in probe:
        seen = {obj for kb in kbs if (obj := believed_object(kb, key)) is not None}
        if len(seen) >= 2:
            contested[key] = frozenset(seen)
    return DisagreementSet(contested)


def kb_overlap(kb1: KnowledgeBase, kb2: KnowledgeBase) -> float:
    """Jaccard index of the two resolved atom sets.

    Two empty stores have identical (empty) resolution functions and
    overlap 1.0.
    """
    a = set(kb1.resolved_atoms().items())
    b = set(kb2.resolved_atoms().items())
    if not a and not b:
        return 1.0
    return float(Fraction(len(a & b), len(a | b)))


_LAYER_BASE = "base"
_LAYER_LOCAL = "local"
_LAYER_OVERLAY = "overlay"


def kb_to_jsonl(kb: KnowledgeBase) -> str:
    """Serialize a store as JSON Lines, one record per layer entry.

    Records carry {layer, subject, relation, object} and overlay records
    additionally carry their position as ``order``.  Base and local
    entries are emitted in sorted key order so equal stores serialize to
    equal bytes.
    """
    lines = []
    for layer, entries in ((_LAYER_BASE, kb.base_facts), (_LAYER_LOCAL, kb.local_overrides)):
        for key in sorted(entries, key=FactKey.sort_key):
            lines.append(
                json.dumps(
                    {
                        "layer": layer,
                        "subject": key.subject,
                        "relation": key.relation,
                        "object": entries[key],
                    },
                    sort_keys=True,
                )
            )
    for order, atom in enumerate(kb.context_overlay):
        lines.append(
            json.dumps(
                {
                    "layer": _LAYER_OVERLAY,
                    "subject": atom.subject,
                    "relation": atom.relation,
                    "object": atom.object,
                    "order": order,
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def kb_from_jsonl(text: str) -> KnowledgeBase:
    """Inverse of :func:`kb_to_jsonl`."""
    base: dict[FactKey, str] = {}
    local: dict[FactKey, str] = {}
    overlay: list[tuple[int, Atom]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        record = json.loads(line)
        try:
            layer = record["layer"]
            key = FactKey(record["subject"], record["relation"])
            obj = record["object"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"line {lineno}: malformed layer record") from exc
        if layer == _LAYER_BASE:
            base[key] = obj
        elif layer == _LAYER_LOCAL:
            local[key] = obj
        elif layer == _LAYER_OVERLAY:
            overlay.append((record["order"], Atom(key.subject, key.relation, obj)))
        else:
            raise ValueError(f"line {lineno}: unknown layer {layer!r}")
    overlay.sort(key=lambda pair: pair[0])
    return KnowledgeBase(
        base_facts=base,
        local_overrides=local,
        context_overlay=tuple(atom for _, atom in overlay),
    )
