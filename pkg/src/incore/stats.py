"""Annotation-corpus analytics: contingency tables, chi-square, Cramér's V.

Reads coded conflict instances (CSV or JSONL), expands ordered response
lists into the A_1..A_4 subcategory slots, cross-tabulates any two nominal
variables, and runs the chi-square test of independence with the p-value
from the in-repo incomplete gamma. Also aggregates detected conflicts from
session event logs into prevalence figures.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .core import ActiveConflict, ValidationError
from .eventlog import SessionEvent
from .gammainc import chi_square_sf

CORPUS_SOURCES = ("interview", "questionnaire", "automated")
RESPONSE_SEPARATOR = ";"
TABLE_VARIABLES = ("conflict", "conflict_code", "mode", "lead", "counter", "source", "participant")


@dataclass(frozen=True)
class AnnotationRecord:
    """One coded conflict instance with its ordered response lists."""

    participant_id: str
    instance_id: str
    conflict: ActiveConflict
    lead_affect_responses: tuple[str, ...]
    countertransference_responses: tuple[str, ...] = ()
    source: str = "interview"

    def __post_init__(self):
        if not self.lead_affect_responses:
            raise ValidationError(
                f"record {self.instance_id!r} has no lead-affect responses"
            )
        if self.source not in CORPUS_SOURCES:
            raise ValidationError(f"unknown record source {self.source!r}")


@dataclass(frozen=True)
class ContingencyTable:
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]
    n: int

    def __post_init__(self):
        if len(self.counts) != len(self.row_labels) or any(
            len(row) != len(self.col_labels) for row in self.counts
        ):
            raise ValidationError("contingency counts do not match labels")
        if any(cell < 0 for row in self.counts for cell in row):
            raise ValidationError("contingency counts must be non-negative")
        if self.n != sum(cell for row in self.counts for cell in row):
            raise ValidationError("contingency n does not equal the cell sum")

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.row_labels), len(self.col_labels))


@dataclass(frozen=True)
class TestResult:
    chi2: float
    df: int
    p: float
    cramers_v: float
    n: int

    def to_dict(self) -> dict:
        return {
            "chi2": self.chi2,
            "df": self.df,
            "p": self.p,
            "cramers_v": self.cramers_v,
            "n": self.n,
        }


def expand_subcategories(record: AnnotationRecord, slots: int = 4) -> dict[int, str]:
    """Spread ordered responses over 1-based subcategory slots.

    Response i fills slot i; a single response fills every slot; with more
    responses than fit, the extras are dropped; with 1 < k < slots
    responses the list cycles so every slot stays populated.
    """
    responses = record.lead_affect_responses
    if slots < 1:
        raise ValidationError(f"slots must be >= 1, got {slots}")
    return {
        slot: responses[(slot - 1) % len(responses)] for slot in range(1, slots + 1)
    }


def _expand(responses: Sequence[str], slot: int) -> str | None:
    if not responses:
        return None
    return responses[(slot - 1) % len(responses)]


def _variable_value(record: AnnotationRecord, variable: str, slot: int) -> str | None:
    if variable == "conflict":
        return record.conflict.key
    if variable == "conflict_code":
        return record.conflict.code
    if variable == "mode":
        return record.conflict.mode
    if variable == "lead":
        return _expand(record.lead_affect_responses, slot)
    if variable == "counter":
        return _expand(record.countertransference_responses, slot)
    if variable == "source":
        return record.source
    if variable == "participant":
        return record.participant_id
    raise ValidationError(
        f"unknown table variable {variable!r}; expected one of {TABLE_VARIABLES}"
    )


def build_table(
    corpus: Sequence[AnnotationRecord],
    row_var: str,
    col_var: str,
    slot: int = 1,
) -> ContingencyTable:
    """Cross-tabulate two nominal variables over the corpus.

    Records where either variable is empty (e.g. no countertransference
    responses) are skipped. Label order is sorted for reproducibility.
    """
    if not corpus:
        raise ValidationError("cannot build a contingency table from an empty corpus")
    pairs: list[tuple[str, str]] = []
    for record in corpus:
        row = _variable_value(record, row_var, slot)
        col = _variable_value(record, col_var, slot)
        if row is None or col is None:
            continue
        pairs.append((row, col))
    if not pairs:
        raise ValidationError(
            f"no record carries both {row_var!r} and {col_var!r}"
        )
    row_labels = tuple(sorted({row for row, _ in pairs}))
    col_labels = tuple(sorted({col for _, col in pairs}))
    row_index = {label: i for i, label in enumerate(row_labels)}
    col_index = {label: i for i, label in enumerate(col_labels)}
    counts = [[0] * len(col_labels) for _ in row_labels]
    for row, col in pairs:
        counts[row_index[row]][col_index[col]] += 1
    return ContingencyTable(
        row_labels=row_labels,
        col_labels=col_labels,
        counts=tuple(tuple(row) for row in counts),
        n=len(pairs),
    )


def _drop_zero_marginals(table: ContingencyTable) -> ContingencyTable:
    row_keep = [i for i, row in enumerate(table.counts) if sum(row) > 0]
    col_keep = [
        j
        for j in range(len(table.col_labels))
        if sum(row[j] for row in table.counts) > 0
    ]
    if len(row_keep) == len(table.row_labels) and len(col_keep) == len(table.col_labels):
        return table
    dropped_rows = [table.row_labels[i] for i in range(len(table.row_labels)) if i not in row_keep]
    dropped_cols = [table.col_labels[j] for j in range(len(table.col_labels)) if j not in col_keep]
    warnings.warn(
        f"dropping zero-marginal rows {dropped_rows} and columns {dropped_cols} "
        "before testing",
        stacklevel=3,
    )
    counts = tuple(
        tuple(table.counts[i][j] for j in col_keep) for i in row_keep
    )
    return ContingencyTable(
        row_labels=tuple(table.row_labels[i] for i in row_keep),
        col_labels=tuple(table.col_labels[j] for j in col_keep),
        counts=counts,
        n=table.n,
    )


def cramers_v(chi2: float, n: int, min_dim_minus_one: int) -> float:
    """Effect size sqrt(chi2 / (n * min(r-1, c-1)))."""
    if chi2 < 0.0:
        raise ValidationError(f"chi2 must be >= 0, got {chi2}")
    if n <= 0:
        raise ValidationError(f"n must be positive, got {n}")
    if min_dim_minus_one <= 0:
        raise ValidationError(
            f"min_dim_minus_one must be positive, got {min_dim_minus_one}"
        )
    return (chi2 / (n * min_dim_minus_one)) ** 0.5


def chi_square(table: ContingencyTable) -> TestResult:
    """Chi-square test of independence with Cramér's V.

    Zero-marginal rows/columns are dropped with a warning first; the
    p-value is the upper tail of the chi-square distribution at the
    resulting degrees of freedom.
    """
    table = _drop_zero_marginals(table)
    rows, cols = table.shape
    if rows < 2 or cols < 2 or table.n <= 0:
        raise ValidationError(
            f"table degenerates to {rows}x{cols} after dropping zero marginals"
        )
    row_sums = [sum(row) for row in table.counts]
    col_sums = [sum(row[j] for row in table.counts) for j in range(cols)]
    chi2 = 0.0
    for i in range(rows):
        for j in range(cols):
            expected = row_sums[i] * col_sums[j] / table.n
            if expected > 0.0:
                diff = table.counts[i][j] - expected
                chi2 += diff * diff / expected
    df = (rows - 1) * (cols - 1)
    return TestResult(
        chi2=chi2,
        df=df,
        p=chi_square_sf(chi2, df),
        cramers_v=cramers_v(chi2, table.n, min(rows - 1, cols - 1)),
        n=table.n,
    )


def frequency_report(
    corpus: Sequence[AnnotationRecord],
) -> dict[str, tuple[int, float]]:
    """Count and percentage (1 decimal) per conflict-mode key."""
    if not corpus:
        raise ValidationError("cannot report frequencies of an empty corpus")
    counts: dict[str, int] = {}
    for record in corpus:
        counts[record.conflict.key] = counts.get(record.conflict.key, 0) + 1
    total = len(corpus)
    return {
        key: (count, round(100.0 * count / total, 1))
        for key, count in sorted(counts.items())
    }


def lead_affect_prevalence(
    logs: Iterable[Sequence[SessionEvent]],
) -> dict[str, float]:
    """Share of turns per detected conflict across session logs.

    Each committed turn contributes the conflict of its effective (last)
    interpretation; percentages are rendered to 2 decimals.
    """
    counts: dict[str, int] = {}
    total = 0
    for events in logs:
        last_interpretation_per_turn: dict[int, dict] = {}
        for event in events:
            if event.kind == "interpretation":
                last_interpretation_per_turn[event.turn] = event.payload
        for payload in last_interpretation_per_turn.values():
            try:
                conflict = ActiveConflict.from_dict(payload["conflict"])
            except (KeyError, TypeError) as exc:
                raise ValidationError(f"malformed interpretation payload: {exc}") from exc
            counts[conflict.key] = counts.get(conflict.key, 0) + 1
            total += 1
    if total == 0:
        return {}
    return {
        key: round(100.0 * count / total, 2) for key, count in sorted(counts.items())
    }


# ----------------------------------------------------------------------
# corpus ingestion


def _split_responses(raw: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in raw.split(RESPONSE_SEPARATOR) if part.strip())


def _collect_slots(row: dict, prefix: str) -> tuple[str, ...]:
    values = []
    for i in range(1, 5):
        value = (row.get(f"{prefix}_{i}") or "").strip()
        if value:
            values.append(value)
    return tuple(values)


def _record_from_row(row: dict, line: int) -> AnnotationRecord:
    try:
        code = row["conflict_code"].strip()
        mode = (row.get("mode") or "").strip() or "none"
        leads = (
            _split_responses(row["leads"])
            if "leads" in row and (row.get("leads") or "").strip()
            else _collect_slots(row, "lead")
        )
        counters = (
            _split_responses(row["counters"])
            if "counters" in row and (row.get("counters") or "").strip()
            else _collect_slots(row, "counter")
        )
        return AnnotationRecord(
            participant_id=row["participant_id"].strip(),
            instance_id=row["instance_id"].strip(),
            conflict=ActiveConflict(code, mode),
            lead_affect_responses=leads,
            countertransference_responses=counters,
            source=(row.get("source") or "interview").strip(),
        )
    except (KeyError, ValidationError) as exc:
        raise ValidationError(f"corpus line {line}: {exc}") from exc


def read_corpus_csv(source: Path | str) -> list[AnnotationRecord]:
    """Read a corpus CSV; see docs for the header contract."""
    if isinstance(source, Path) or "\n" not in str(source):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = str(source)
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise ValidationError("corpus CSV has no header")
    required = {"participant_id", "instance_id", "conflict_code"}
    missing = required - set(reader.fieldnames)
    if missing:
        raise ValidationError(f"corpus CSV header missing {sorted(missing)}")
    return [
        _record_from_row(row, line)
        for line, row in enumerate(reader, start=2)
    ]


def read_corpus_jsonl(source: Path | str) -> list[AnnotationRecord]:
    """Read a corpus in JSONL form (one record object per line)."""
    if isinstance(source, Path) or "\n" not in str(source):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = str(source)
    records = []
    for line, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"corpus line {line}: not valid JSON: {exc}") from exc
        try:
            records.append(
                AnnotationRecord(
                    participant_id=str(data["participant_id"]),
                    instance_id=str(data["instance_id"]),
                    conflict=ActiveConflict(
                        str(data["conflict_code"]),
                        str(data.get("mode") or "none"),
                    ),
                    lead_affect_responses=tuple(data.get("leads") or ()),
                    countertransference_responses=tuple(data.get("counters") or ()),
                    source=str(data.get("source", "interview")),
                )
            )
        except (KeyError, ValidationError) as exc:
            raise ValidationError(f"corpus line {line}: {exc}") from exc
    return records


def read_corpus(path: Path | str) -> list[AnnotationRecord]:
    path = Path(path)
    if path.suffix.lower() == ".jsonl":
        return read_corpus_jsonl(path)
    return read_corpus_csv(path)
