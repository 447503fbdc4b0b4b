"""Mapping configuration: loading, validation, canonical serialization.

The config is the single registry for every psychological mapping table the
engine consumes. A canonical default ships as package data
(incore/data/config.yaml); user documents are deep-merged over it, so a
partial file overrides just the keys it names.
"""

from __future__ import annotations

import copy
import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .core import (
    CONFLICT_CODES,
    CONFLICT_MODES,
    CRS_STRATEGIES,
    NEUTRAL_LEAD,
    OCC_LABELS,
    ActiveConflict,
    ConflictType,
    PadPoint,
    ValidationError,
)

DEFAULT_CONFIG_RESOURCE = "config.yaml"


@dataclass(frozen=True)
class MappingConfig:
    """Validated, read-only mapping registry.

    The lead-affect enumeration is the tie_priority tuple; every
    lead-keyed table covers exactly that set.
    """

    occ_centroids: Mapping[str, PadPoint]
    occ_to_lead: Mapping[str, str]
    lead_to_conflict: Mapping[str, ActiveConflict]
    lead_to_relationship_delta: Mapping[str, float]
    norm_weights: Mapping[tuple[str, str, str], float]
    crs_thresholds: tuple[float, float]
    tie_priority: tuple[str, ...]
    epsilon_tie: float
    broken_salience: float
    conflict_names: Mapping[str, str]
    escalation_effects: Mapping[str, float]
    task_gain: float
    task_gain_escalation_limit: float
    task_gain_strategies: tuple[str, ...]
    raw: dict = field(repr=False, compare=False, default_factory=dict)

    @property
    def lead_labels(self) -> tuple[str, ...]:
        return self.tie_priority

    def conflict_type(self, code: str) -> ConflictType:
        return ConflictType(code, self.conflict_names[code])

    def norm_weight(self, norm_id: str, conflict: ActiveConflict) -> float:
        return self.norm_weights.get((norm_id, conflict.code, conflict.mode), 1.0)

    def to_dict(self) -> dict:
        """Plain-data form, canonical key order, round-trip safe."""
        return {
            "tie_priority": list(self.tie_priority),
            "epsilon_tie": self.epsilon_tie,
            "crs_thresholds": {
                "low": self.crs_thresholds[0],
                "high": self.crs_thresholds[1],
            },
            "occ_centroids": {
                label: self.occ_centroids[label].to_dict()
                for label in sorted(self.occ_centroids)
            },
            "occ_to_lead": {
                label: self.occ_to_lead[label] for label in sorted(self.occ_to_lead)
            },
            "lead_to_conflict": {
                label: self.lead_to_conflict[label].to_dict()
                for label in sorted(self.lead_to_conflict)
            },
            "lead_to_relationship_delta": {
                label: self.lead_to_relationship_delta[label]
                for label in sorted(self.lead_to_relationship_delta)
            },
            "norm_weights": [
                {"norm": norm, "conflict": code, "mode": mode, "weight": weight}
                for (norm, code, mode), weight in sorted(self.norm_weights.items())
            ],
            "broken_salience": self.broken_salience,
            "conflict_names": dict(sorted(self.conflict_names.items())),
            "student": {
                "escalation_effects": dict(sorted(self.escalation_effects.items())),
                "task_gain": self.task_gain,
                "task_gain_escalation_limit": self.task_gain_escalation_limit,
                "task_gain_strategies": list(self.task_gain_strategies),
            },
        }


def _deep_merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _default_document() -> dict:
    text = (
        importlib.resources.files("incore.data")
        .joinpath(DEFAULT_CONFIG_RESOURCE)
        .read_text(encoding="utf-8")
    )
    return yaml.safe_load(text)


def _parse_source(source: Any) -> dict:
    """Accept a path, YAML text, mapping, or None (empty document)."""
    if source is None:
        return {}
    if isinstance(source, dict):
        return copy.deepcopy(source)
    if isinstance(source, Path):
        source = source.read_text(encoding="utf-8")
    elif isinstance(source, str) and "\n" not in source and source.endswith((".yaml", ".yml")):
        source = Path(source).read_text(encoding="utf-8")
    try:
        document = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        raise ValidationError(f"config document does not parse: {exc}") from exc
    if document is None:
        return {}
    if not isinstance(document, dict):
        raise ValidationError("config document must be a mapping at top level")
    return document


def _parse_thresholds(value: Any) -> tuple[float, float]:
    if isinstance(value, dict):
        try:
            low, high = float(value["low"]), float(value["high"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad crs_thresholds {value!r}") from exc
    elif isinstance(value, (list, tuple)) and len(value) == 2:
        low, high = float(value[0]), float(value[1])
    else:
        raise ValidationError(f"bad crs_thresholds {value!r}")
    if not (0.0 < low < high < 1.0):
        raise ValidationError(
            f"crs_thresholds must satisfy 0 < low < high < 1, got ({low}, {high})"
        )
    return (low, high)


def _parse_norm_weights(entries: Any) -> dict[tuple[str, str, str], float]:
    weights: dict[tuple[str, str, str], float] = {}
    if entries is None:
        return weights
    if not isinstance(entries, list):
        raise ValidationError("norm_weights must be a list of entries")
    for entry in entries:
        try:
            key = (str(entry["norm"]), str(entry["conflict"]), str(entry["mode"]))
            weight = float(entry["weight"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad norm_weights entry {entry!r}") from exc
        if key[1] not in CONFLICT_CODES:
            raise ValidationError(f"norm_weights entry names unknown conflict {key[1]!r}")
        if key[2] not in CONFLICT_MODES:
            raise ValidationError(f"norm_weights entry names unknown mode {key[2]!r}")
        if weight < 0.0:
            raise ValidationError(f"norm weight for {key} must be >= 0, got {weight}")
        weights[key] = weight
    return weights


def load_config(source: Any = None) -> MappingConfig:
    """Build a validated MappingConfig from a document merged over defaults.

    source may be None (pure defaults), a mapping, YAML text, or a path to
    a YAML file. Raises ValidationError naming the first problem found.
    """
    document = _deep_merge(_default_document(), _parse_source(source))

    tie_priority = tuple(str(label) for label in document.get("tie_priority", ()))
    if len(set(tie_priority)) != len(tie_priority):
        raise ValidationError("tie_priority contains duplicate labels")

    centroids: dict[str, PadPoint] = {}
    for label, point in (document.get("occ_centroids") or {}).items():
        if label not in OCC_LABELS:
            raise ValidationError(f"occ_centroids names unknown OCC label {label!r}")
        centroids[label] = PadPoint.from_dict(point)

    occ_to_lead = {
        str(label): str(lead)
        for label, lead in (document.get("occ_to_lead") or {}).items()
    }
    for label in occ_to_lead:
        if label not in OCC_LABELS:
            raise ValidationError(f"occ_to_lead names unknown OCC label {label!r}")

    lead_to_conflict: dict[str, ActiveConflict] = {}
    for label, spec in (document.get("lead_to_conflict") or {}).items():
        if isinstance(spec, (list, tuple)) and len(spec) >= 2:
            spec = {
                "code": spec[0],
                "mode": spec[1],
                "confidence": spec[2] if len(spec) > 2 else 1.0,
            }
        lead_to_conflict[str(label)] = ActiveConflict.from_dict(spec)

    deltas = {
        str(label): float(value)
        for label, value in (document.get("lead_to_relationship_delta") or {}).items()
    }

    student = document.get("student") or {}
    escalation_effects = {
        str(name): float(value)
        for name, value in (student.get("escalation_effects") or {}).items()
    }
    task_gain_strategies = tuple(
        str(name) for name in student.get("task_gain_strategies", ())
    )

    config = MappingConfig(
        occ_centroids=centroids,
        occ_to_lead=occ_to_lead,
        lead_to_conflict=lead_to_conflict,
        lead_to_relationship_delta=deltas,
        norm_weights=_parse_norm_weights(document.get("norm_weights")),
        crs_thresholds=_parse_thresholds(document.get("crs_thresholds")),
        tie_priority=tie_priority,
        epsilon_tie=float(document.get("epsilon_tie", 0.05)),
        broken_salience=float(document.get("broken_salience", 2.0)),
        conflict_names={
            str(code): str(name)
            for code, name in (document.get("conflict_names") or {}).items()
        },
        escalation_effects=escalation_effects,
        task_gain=float(student.get("task_gain", 0.1)),
        task_gain_escalation_limit=float(
            student.get("task_gain_escalation_limit", 0.5)
        ),
        task_gain_strategies=task_gain_strategies,
        raw=document,
    )
    violations = validate_config(config)
    if violations:
        raise ValidationError("; ".join(violations))
    return config


def validate_config(config: MappingConfig) -> list[str]:
    """Return every invariant violation; empty list means the config is valid."""
    violations: list[str] = []
    leads = set(config.tie_priority)

    if not config.tie_priority:
        violations.append("tie_priority is empty")
    if NEUTRAL_LEAD not in leads:
        violations.append(f"tie_priority must include {NEUTRAL_LEAD!r}")

    for label in OCC_LABELS:
        if label not in config.occ_centroids:
            violations.append(f"occ_centroids missing entry for {label!r}")
        if label not in config.occ_to_lead:
            violations.append(f"occ_to_lead missing entry for {label!r}")
        elif config.occ_to_lead[label] not in leads:
            violations.append(
                f"occ_to_lead[{label!r}] targets unknown lead "
                f"{config.occ_to_lead[label]!r}"
            )

    for label in config.tie_priority:
        if label not in config.lead_to_conflict:
            violations.append(f"lead_to_conflict missing entry for {label!r}")
        if label not in config.lead_to_relationship_delta:
            violations.append(
                f"lead_to_relationship_delta missing entry for {label!r}"
            )
        else:
            delta = config.lead_to_relationship_delta[label]
            if not -0.2 <= delta <= 0.2:
                violations.append(
                    f"lead_to_relationship_delta[{label!r}] = {delta} "
                    "outside [-0.2, 0.2]"
                )
    for label in config.lead_to_conflict:
        if label not in leads:
            violations.append(f"lead_to_conflict keys unknown lead {label!r}")
    for label in config.lead_to_relationship_delta:
        if label not in leads:
            violations.append(
                f"lead_to_relationship_delta keys unknown lead {label!r}"
            )

    for key, weight in config.norm_weights.items():
        if weight < 0.0:
            violations.append(f"norm weight for {key} is negative ({weight})")

    low, high = config.crs_thresholds
    if not (0.0 < low < high < 1.0):
        violations.append(f"crs_thresholds not strictly ordered: ({low}, {high})")

    if config.epsilon_tie < 0.0:
        violations.append(f"epsilon_tie must be >= 0, got {config.epsilon_tie}")
    if config.broken_salience < 0.0:
        violations.append(
            f"broken_salience must be >= 0, got {config.broken_salience}"
        )

    for code in CONFLICT_CODES:
        if code not in config.conflict_names:
            violations.append(f"conflict_names missing entry for {code!r}")

    for strategy in CRS_STRATEGIES:
        if strategy not in config.escalation_effects:
            violations.append(f"escalation_effects missing entry for {strategy!r}")
    for strategy in config.escalation_effects:
        if strategy not in CRS_STRATEGIES:
            violations.append(f"escalation_effects keys unknown strategy {strategy!r}")
    for strategy in config.task_gain_strategies:
        if strategy not in CRS_STRATEGIES:
            violations.append(
                f"task_gain_strategies names unknown strategy {strategy!r}"
            )
    if not 0.0 <= config.task_gain_escalation_limit <= 1.0:
        violations.append(
            "task_gain_escalation_limit outside [0,1]: "
            f"{config.task_gain_escalation_limit}"
        )

    return violations


def serialize_config(config: MappingConfig) -> str:
    """Canonical YAML form; stable under load/serialize round-trips."""
    return yaml.safe_dump(config.to_dict(), sort_keys=True, default_flow_style=False)


def default_config() -> MappingConfig:
    return load_config(None)
