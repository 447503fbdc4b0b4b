"""Social norms, obligations, and the conflict-weighted obligation ranking.

The taxonomy is a flat list of norms, each owning obligations; norm events
reference them by id. Interpretation weighs each referenced obligation by
the active conflict (via the config's norm_weights table), doubles broken
ones by the salience factor, and reads the task focus off the ratio of
weight mass on task-dimension norms.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import yaml

from .config import MappingConfig
from .core import ActiveConflict, ValidationError

NORM_DIMENSIONS = ("task", "relationship")
NORM_ACTORS = ("teacher", "student")
EVENT_STATUSES = ("followed", "broken")


@dataclass(frozen=True)
class Obligation:
    id: str
    description: str = ""


@dataclass(frozen=True)
class SocialNorm:
    """A classroom rule with its concrete obligations."""

    id: str
    description: str
    applies_to: str
    dimension: str
    obligations: tuple[Obligation, ...]

    def __post_init__(self):
        if self.applies_to not in NORM_ACTORS:
            raise ValidationError(
                f"norm {self.id!r}: applies_to must be one of {NORM_ACTORS}"
            )
        if self.dimension not in NORM_DIMENSIONS:
            raise ValidationError(
                f"norm {self.id!r}: dimension must be one of {NORM_DIMENSIONS}"
            )
        if not self.obligations:
            raise ValidationError(f"norm {self.id!r} has no obligations")


@dataclass(frozen=True)
class NormEvent:
    """One followed/broken obligation observation inside a turn."""

    turn_index: int
    norm_id: str
    obligation_id: str
    status: str
    actor: str

    def __post_init__(self):
        if self.status not in EVENT_STATUSES:
            raise ValidationError(f"unknown norm-event status {self.status!r}")
        if self.actor not in NORM_ACTORS:
            raise ValidationError(f"unknown norm-event actor {self.actor!r}")

    def to_dict(self) -> dict:
        return {
            "norm_id": self.norm_id,
            "obligation_id": self.obligation_id,
            "status": self.status,
            "actor": self.actor,
        }


@dataclass(frozen=True)
class RankedObligations:
    """Conflict-weighted subjective ranking of the turn's obligations."""

    ranking: tuple[tuple[str, float], ...]
    most_important: str | None
    task_focus: float

    def to_dict(self) -> dict:
        return {
            "ranking": [[obligation_id, weight] for obligation_id, weight in self.ranking],
            "most_important": self.most_important,
            "task_focus": self.task_focus,
        }


class NormTaxonomy:
    """Validated norm collection with id lookup.

    Obligation ids must be globally unique (stricter than per-norm
    uniqueness) so a ranking can name obligations without qualification.
    """

    def __init__(self, norms: Sequence[SocialNorm]):
        self.norms: dict[str, SocialNorm] = {}
        self._obligation_to_norm: dict[str, str] = {}
        for norm in norms:
            if norm.id in self.norms:
                raise ValidationError(f"duplicate norm id {norm.id!r}")
            for obligation in norm.obligations:
                owner = self._obligation_to_norm.get(obligation.id)
                if owner is not None:
                    raise ValidationError(
                        f"obligation id {obligation.id!r} appears in both "
                        f"{owner!r} and {norm.id!r}"
                    )
                self._obligation_to_norm[obligation.id] = norm.id
            self.norms[norm.id] = norm

    def resolve(self, norm_id: str, obligation_id: str) -> tuple[SocialNorm, Obligation]:
        norm = self.norms.get(norm_id)
        if norm is None:
            raise ValidationError(f"unknown norm id {norm_id!r}")
        for obligation in norm.obligations:
            if obligation.id == obligation_id:
                return norm, obligation
        raise ValidationError(
            f"norm {norm_id!r} has no obligation {obligation_id!r}"
        )

    def to_dict(self) -> dict:
        return {
            "norms": [
                {
                    "id": norm.id,
                    "description": norm.description,
                    "applies_to": norm.applies_to,
                    "dimension": norm.dimension,
                    "obligations": [
                        {"id": o.id, "description": o.description}
                        for o in norm.obligations
                    ],
                }
                for norm in sorted(self.norms.values(), key=lambda n: n.id)
            ]
        }

    def __eq__(self, other) -> bool:
        return isinstance(other, NormTaxonomy) and self.to_dict() == other.to_dict()


def load_norms(source: Any = None) -> NormTaxonomy:
    """Load a taxonomy from a YAML path/text/mapping; None loads the default."""
    if source is None:
        import importlib.resources

        source = (
            importlib.resources.files("incore.data")
            .joinpath("norms.yaml")
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
            raise ValidationError(f"norms document does not parse: {exc}") from exc
    else:
        document = copy.deepcopy(source)
    if not isinstance(document, dict) or "norms" not in document:
        raise ValidationError("norms document must be a mapping with a 'norms' list")
    norms = []
    for entry in document["norms"] or []:
        try:
            obligations = tuple(
                Obligation(str(o["id"]), str(o.get("description", "")))
                for o in entry.get("obligations", [])
            )
            norms.append(
                SocialNorm(
                    id=str(entry["id"]),
                    description=str(entry.get("description", "")),
                    applies_to=str(entry["applies_to"]),
                    dimension=str(entry["dimension"]),
                    obligations=obligations,
                )
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad norm entry {entry!r}") from exc
    return NormTaxonomy(norms)


def serialize_norms(taxonomy: NormTaxonomy) -> str:
    return yaml.safe_dump(taxonomy.to_dict(), sort_keys=True, default_flow_style=False)


def interpret_norms(
    events: Sequence[NormEvent],
    conflict: ActiveConflict,
    taxonomy: NormTaxonomy,
    config: MappingConfig,
    actor: str | None = None,
) -> RankedObligations:
    """Rank the turn's referenced obligations by subjective importance.

    Each event contributes base 1.0 times the conflict-specific norm weight
    (missing keys default to 1.0), times the broken salience when the
    obligation was broken; contributions to the same obligation add up.
    task_focus is the share of weight mass on task-dimension norms, 0 for
    an empty turn. Pass actor to count only one side's events.
    """
    turns = {event.turn_index for event in events}
    if len(turns) > 1:
        raise ValidationError(f"norm events span multiple turns: {sorted(turns)}")

    weights: dict[str, float] = {}
    task_mass = 0.0
    total_mass = 0.0
    for event in events:
        if actor is not None and event.actor != actor:
            continue
        norm, obligation = taxonomy.resolve(event.norm_id, event.obligation_id)
        weight = config.norm_weight(norm.id, conflict)
        if event.status == "broken":
            weight *= config.broken_salience
        weights[obligation.id] = weights.get(obligation.id, 0.0) + weight
        total_mass += weight
        if norm.dimension == "task":
            task_mass += weight

    ranking = tuple(
        sorted(weights.items(), key=lambda item: (-item[1], item[0]))
    )
    return RankedObligations(
        ranking=ranking,
        most_important=ranking[0][0] if ranking else None,
        task_focus=task_mass / total_mass if total_mass > 0.0 else 0.0,
    )
