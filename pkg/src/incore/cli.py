"""Command-line interface: serve, simulate, analyze, replay.

Exit codes: 0 ok, 1 usage, 2 validation (bad artifacts/inputs, including a
config-version mismatch on replay), 3 replay divergence.
"""

from __future__ import annotations

import glob as globlib
import json
import os
import sys
from pathlib import Path

import click

from .core import DivergenceError, IncoreError, ReplayError, ValidationError, VersionMismatchError
from .eventlog import read_log, write_log
from .policy import load_policy, run_policy, strategy_distribution
from .session import SessionArtifacts, replay_file
from .stats import (
    build_table,
    chi_square,
    frequency_report,
    lead_affect_prevalence,
    read_corpus,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3

ARTIFACT_DIR_ENV = "INCORE_ARTIFACTS"


def _artifact_path(explicit: str | None, filename: str) -> Path | None:
    """Resolve an artifact path: explicit flag, else env dir, else default."""
    if explicit:
        return Path(explicit)
    env_dir = os.environ.get(ARTIFACT_DIR_ENV)
    if env_dir:
        candidate = Path(env_dir) / filename
        if candidate.exists():
            return candidate
    return None


def _load_artifacts(config: str | None, norms: str | None, repertoire: str | None) -> SessionArtifacts:
    return SessionArtifacts.load(
        config_source=_artifact_path(config, "config.yaml"),
        norms_source=_artifact_path(norms, "norms.yaml"),
        repertoire_source=_artifact_path(repertoire, "repertoire.yaml"),
    )


artifact_options = [
    click.option("--config", type=click.Path(), default=None, help="Mapping config YAML."),
    click.option("--norms", type=click.Path(), default=None, help="Norm taxonomy YAML."),
    click.option("--repertoire", type=click.Path(), default=None, help="Behavior repertoire YAML."),
]


def with_artifact_options(command):
    for option in reversed(artifact_options):
        command = option(command)
    return command


@click.group()
def cli():
    """Deterministic co-regulation engine: sessions, simulation, analytics."""


@cli.command()
@with_artifact_options
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option(
    "--log-dir",
    type=click.Path(file_okay=False),
    default="incore-sessions",
    show_default=True,
    help="Directory for persisted session logs.",
)
def serve(config, norms, repertoire, host, port, log_dir):
    """Run the session service (HTTP + WebSocket)."""
    import uvicorn

    from .service import build_app

    artifacts = _load_artifacts(config, norms, repertoire)
    app = build_app(artifacts, Path(log_dir))
    uvicorn.run(app, host=host, port=port, log_level="info")


@cli.command()
@with_artifact_options
@click.option("--policy", "policy_path", type=click.Path(exists=True), required=True)
@click.option("--turns", default=10, show_default=True, type=int)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--session-id", default=None, help="Fixed session id (default: random).")
def simulate(config, norms, repertoire, policy_path, turns, out_path, session_id):
    """Run a scripted teacher policy and write the session log."""
    artifacts = _load_artifacts(config, norms, repertoire)
    policy = load_policy(Path(policy_path))
    session = run_policy(policy, artifacts, turns, session_id=session_id)
    write_log(out_path, session.event_log)
    distribution = strategy_distribution(session)
    click.echo(f"policy:   {policy.name}")
    click.echo(f"turns:    {turns}")
    click.echo(f"log:      {out_path} ({len(session.event_log)} events)")
    click.echo("strategies:")
    for strategy, count in distribution.items():
        click.echo(f"  {strategy:<16} {count}")
    click.echo(
        "final state: relationship {relationship:.3f}  task {task:.3f}  "
        "escalation {escalation:.3f}".format(**session.student.to_dict())
    )


@cli.command()
@click.option("--corpus", "corpus_path", type=click.Path(), default=None, help="Corpus CSV/JSONL.")
@click.option("--logs", "logs_glob", default=None, help="Glob over session JSONL logs.")
@click.option(
    "--report",
    type=click.Choice(["frequencies", "chi2", "prevalence"]),
    default="frequencies",
    show_default=True,
)
@click.option("--row-var", default="conflict", show_default=True)
@click.option("--col-var", default="lead", show_default=True)
@click.option("--slot", default=1, show_default=True, type=int)
@click.option("--json", "json_out", is_flag=True, help="Emit machine-readable JSON.")
def analyze(corpus_path, logs_glob, report, row_var, col_var, slot, json_out):
    """Analytics over an annotation corpus or session logs."""
    if report in ("frequencies", "chi2"):
        if not corpus_path:
            raise click.UsageError(f"--report {report} needs --corpus")
        corpus = read_corpus(corpus_path)
        if report == "frequencies":
            table = frequency_report(corpus)
            if json_out:
                click.echo(json.dumps(
                    {key: {"count": c, "percentage": p} for key, (c, p) in table.items()},
                    indent=2, sort_keys=True,
                ))
            else:
                total = sum(count for count, _ in table.values())
                click.echo(f"{'conflict':<14}{'count':>7}{'percent':>9}")
                for key, (count, pct) in table.items():
                    click.echo(f"{key:<14}{count:>7}{pct:>8.1f}%")
                click.echo(f"{'total':<14}{total:>7}{100.0:>8.1f}%")
        else:
            table = build_table(corpus, row_var, col_var, slot)
            result = chi_square(table)
            if json_out:
                click.echo(json.dumps(result.to_dict(), indent=2, sort_keys=True))
            else:
                click.echo(
                    f"chi2({result.df}) = {result.chi2:.2f}, p = {result.p:.4f}, "
                    f"V = {result.cramers_v:.3f}, N = {result.n}"
                )
        return
    # prevalence over logs
    if not logs_glob:
        raise click.UsageError("--report prevalence needs --logs")
    paths = sorted(globlib.glob(logs_glob))
    if not paths:
        raise ValidationError(f"no input: glob {logs_glob!r} matches no files")
    logs = [read_log(path) for path in paths]
    prevalence = lead_affect_prevalence(logs)
    if json_out:
        click.echo(json.dumps(prevalence, indent=2, sort_keys=True))
    else:
        click.echo(f"{'conflict':<14}{'percent':>9}")
        for key, pct in prevalence.items():
            click.echo(f"{key:<14}{pct:>8.2f}%")


@cli.command()
@with_artifact_options
@click.option("--log", "log_path", type=click.Path(exists=True), required=True)
def replay(config, norms, repertoire, log_path):
    """Verify a session log replays without divergence."""
    artifacts = _load_artifacts(config, norms, repertoire)
    session = replay_file(log_path, artifacts)
    click.echo(f"OK: {len(session.event_log)} events, {session.turn_index} turns committed")


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return EXIT_USAGE
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except DivergenceError as exc:
        click.echo(f"DIVERGENCE: {exc}", err=True)
        return EXIT_DIVERGENCE
    except VersionMismatchError as exc:
        click.echo(f"VERSION MISMATCH: {exc}", err=True)
        return EXIT_VALIDATION
    except (ValidationError, ReplayError) as exc:
        click.echo(f"VALIDATION ERROR: {exc}", err=True)
        return EXIT_VALIDATION
    except IncoreError as exc:
        click.echo(f"ERROR: {exc}", err=True)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
