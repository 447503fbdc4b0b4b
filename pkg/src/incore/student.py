"""Virtual-student model: status tracking and behavior generation.

The student mirrors the dyad's relationship level, accumulates or sheds
escalation depending on the teacher's strategy (scaled by reactivity), and
makes task progress only under cooperative strategies at low escalation.
Behavior is a pure lookup into a band-keyed repertoire; tags are opaque
strings that front-ends translate into speech and animation.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .config import MappingConfig
from .coreg import CoRegulationState
from .core import ActiveConflict, ValidationError, band, check_strategy, clamp

_BANDS = ("low", "mid", "high")
_POLARITIES = ("escalating", "compliant")


@dataclass(frozen=True)
class StudentStatus:
    """Relationship (shared with the teacher view), task progress, arousal."""

    relationship: float
    task: float
    escalation: float

    def __post_init__(self):
        for name in ("relationship", "task", "escalation"):
            value = float(getattr(self, name))
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"StudentStatus.{name} outside [0,1]: {value}")
            object.__setattr__(self, name, value)

    def to_dict(self) -> dict:
        return {
            "relationship": self.relationship,
            "task": self.task,
            "escalation": self.escalation,
        }


@dataclass(frozen=True)
class StudentPsyche:
    """The implemented internal conflict and how strongly it reacts."""

    conflict: ActiveConflict = ActiveConflict("K2", "active", 1.0)
    reactivity: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.reactivity <= 1.0:
            raise ValidationError(
                f"reactivity must be in (0,1], got {self.reactivity}"
            )

    def to_dict(self) -> dict:
        return {"conflict": self.conflict.to_dict(), "reactivity": self.reactivity}


@dataclass(frozen=True)
class StudentBehavior:
    """Abstract behavior command for the front-end."""

    utterance_tag: str
    animation_tag: str
    intensity: float

    def to_dict(self) -> dict:
        return {
            "utterance_tag": self.utterance_tag,
            "animation_tag": self.animation_tag,
            "intensity": self.intensity,
        }


@dataclass(frozen=True)
class RepertoireCell:
    utterance_tag: str
    animation_tag: str
    polarity: str

    def __post_init__(self):
        if self.polarity not in _POLARITIES:
            raise ValidationError(f"unknown polarity {self.polarity!r}")


class BehaviorRepertoire:
    """Band-keyed behavior table per implemented conflict."""

    def __init__(self, cells: dict[tuple[str, str, str], RepertoireCell]):
        self.cells = cells
        self.utterance_tags = frozenset(c.utterance_tag for c in cells.values())
        self.animation_tags = frozenset(c.animation_tag for c in cells.values())

    def lookup(
        self, conflict_key: str, escalation_band: str, relationship_band: str
    ) -> RepertoireCell:
        cell = self.cells.get((conflict_key, escalation_band, relationship_band))
        if cell is None:
            raise ValidationError(
                "repertoire has no entry for "
                f"({conflict_key!r}, {escalation_band!r}, {relationship_band!r})"
            )
        return cell

    def to_dict(self) -> dict:
        conflicts: dict[str, dict] = {}
        for (conflict_key, esc_band, rel_band), cell in sorted(self.cells.items()):
            conflicts.setdefault(conflict_key, {}).setdefault(esc_band, {})[rel_band] = {
                "utterance": cell.utterance_tag,
                "animation": cell.animation_tag,
                "polarity": cell.polarity,
            }
        return {"conflicts": conflicts}


def load_repertoire(source: Any = None) -> BehaviorRepertoire:
    """Load a repertoire from a YAML path/text/mapping; None loads the default."""
    if source is None:
        import importlib.resources

        source = (
            importlib.resources.files("incore.data")
            .joinpath("repertoire.yaml")
            .read_text(encoding="utf-8")
        )
    if isinstance(source, Path):
        source = source.read_text(encoding="utf-8")
    elif isinstance(source, str) and "\n" not in source and source.endswith((".yaml", ".yml")):
        source = Path(source).read_text(encoding="utf-8")
    if isinstance(source, str):
        try:
            document = yaml.safe_load(source)
        except yaml.YAMLError as exc:
            raise ValidationError(f"repertoire document does not parse: {exc}") from exc
    else:
        document = copy.deepcopy(source)
    if not isinstance(document, dict) or "conflicts" not in document:
        raise ValidationError(
            "repertoire document must be a mapping with a 'conflicts' table"
        )
    cells: dict[tuple[str, str, str], RepertoireCell] = {}
    for conflict_key, bands in (document["conflicts"] or {}).items():
        for esc_band, row in (bands or {}).items():
            if esc_band not in _BANDS:
                raise ValidationError(f"unknown escalation band {esc_band!r}")
            for rel_band, cell in (row or {}).items():
                if rel_band not in _BANDS:
                    raise ValidationError(f"unknown relationship band {rel_band!r}")
                try:
                    cells[(str(conflict_key), esc_band, rel_band)] = RepertoireCell(
                        utterance_tag=str(cell["utterance"]),
                        animation_tag=str(cell["animation"]),
                        polarity=str(cell.get("polarity", "compliant")),
                    )
                except (KeyError, TypeError) as exc:
                    raise ValidationError(f"bad repertoire cell {cell!r}") from exc
    return BehaviorRepertoire(cells)


def serialize_repertoire(repertoire: BehaviorRepertoire) -> str:
    return yaml.safe_dump(repertoire.to_dict(), sort_keys=True, default_flow_style=False)


def update_status(
    status: StudentStatus,
    teacher_strategy: str,
    coreg: CoRegulationState,
    psyche: StudentPsyche,
    config: MappingConfig,
) -> StudentStatus:
    """Advance the student status after one teacher turn.

    Relationship mirrors the co-regulation state. Escalation moves by the
    strategy's configured effect scaled by reactivity, clamped to [0,1].
    Task progresses by the configured gain when the new escalation is
    below the limit and the strategy is cooperative.
    """
    check_strategy(teacher_strategy)
    effect = config.escalation_effects[teacher_strategy]
    escalation = clamp(status.escalation + psyche.reactivity * effect)
    task = status.task
    if (
        escalation < config.task_gain_escalation_limit
        and teacher_strategy in config.task_gain_strategies
    ):
        task = clamp(task + config.task_gain)
    return StudentStatus(
        relationship=coreg.relationship,
        task=task,
        escalation=escalation,
    )


def generate_behavior(
    status: StudentStatus,
    psyche: StudentPsyche,
    repertoire: BehaviorRepertoire,
) -> StudentBehavior:
    """Deterministic behavior lookup from bands of the current status."""
    cell = repertoire.lookup(
        psyche.conflict.key, band(status.escalation), band(status.relationship)
    )
    if cell.polarity == "escalating":
        intensity = status.escalation
    else:
        intensity = 1.0 - status.escalation
    return StudentBehavior(cell.utterance_tag, cell.animation_tag, intensity)
