"""Command line front door: ingest, chat, serve, eval."""
from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from .agent import ToolContext, run_agent
from .config import AppConfig, load_config
from .errors import MentorError
from .evaluation import EvalQuestion, load_dataset, run_eval
from .index import build_index_from_manifest
from .model import Message, Role, append_message, new_session
from .rag import rephrase_question
from .report import write_report_files
from .service import build_runtime, create_app

log = logging.getLogger(__name__)


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="TOML config file.")
@click.option("--verbose", is_flag=True, help="Log at INFO level.")
@click.pass_context
def cli(ctx: click.Context, config_path: str | None, verbose: bool) -> None:
    """Retrieval-augmented mentoring agent for cybersecurity study."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING)
    ctx.obj = load_config(config_path)


@cli.command()
@click.option("--manifest", required=True, type=click.Path(), help="JSONL manifest of corpus files.")
@click.pass_obj
def ingest(config: AppConfig, manifest: str) -> None:
    """Chunk, embed, and index the corpus named by the manifest."""
    if not Path(manifest).exists():
        raise MentorError(f"no manifest at {manifest}")
    runtime = build_runtime(config)
    _, result = build_index_from_manifest(
        manifest,
        runtime.embedder,
        size=config.chunk_size,
        overlap=config.chunk_overlap,
        index=runtime.index,
    )
    runtime.index.save(config.index_path)
    click.echo(f"indexed {result.document_count} documents / {result.chunk_count} chunks -> {config.index_path}")
    for error in result.errors:
        click.echo(f"skipped: {error}", err=True)


def _print_event(event) -> None:
    payload = event.payload
    if event.kind == "thinking":
        click.echo("[thinking]")
    elif event.kind == "tool_call":
        click.echo(f"[tool_call] {payload['tool']} <- {payload['input']}")
    elif event.kind == "tool_result":
        preview = " ".join(payload["observation"].split())
        if len(preview) > 200:
            preview = preview[:200] + "..."
        click.echo(f"[tool_result] {payload['tool']}: {preview}")
    elif event.kind == "answer":
        flag = "" if payload.get("verified") else " (unverified)"
        click.echo(f"[answer]{flag}\n{payload['text']}")
    elif event.kind == "sources":
        for ref in payload["sources"]:
            click.echo(f"[source] {ref['title']} ({ref['url']})")
    elif event.kind == "error":
        click.echo(f"[error] {payload.get('message', '')}", err=True)


@cli.command()
@click.option("--language", "language_hint", default=None, help="Preferred answer language tag.")
@click.pass_obj
def chat(config: AppConfig, language_hint: str | None) -> None:
    """Interactive session; reads questions from stdin until EOF or 'exit'."""
    runtime = build_runtime(config)
    session = new_session(language_hint)
    context = ToolContext(
        gateway=runtime.gateway, prompts_dir=config.prompts_dir, language_hint=language_hint
    )
    click.echo("mentor ready; type a question ('exit' to quit)")
    while True:
        click.echo("you> ", nl=False)
        line = sys.stdin.readline()
        if not line:
            break
        question = line.strip()
        if not question:
            continue
        if question.lower() in ("exit", "quit"):
            break
        asked = question
        if any(m.role in (Role.STUDENT, Role.ASSISTANT) for m in session.messages):
            asked = rephrase_question(question, session, runtime.gateway, max_turns=config.history_window)
        result = run_agent(
            session,
            asked,
            runtime.registry,
            config.agent,
            runtime.gateway,
            _print_event,
            context=context,
            history_window=config.history_window,
        )
        append_message(session, Message(role=Role.STUDENT, content=question))
        append_message(session, Message(role=Role.ASSISTANT, content=result.answer))
        runtime.store.save(session)
    click.echo("bye")


@cli.command()
@click.pass_obj
def serve(config: AppConfig) -> None:
    """Run the HTTP/SSE service."""
    import uvicorn

    host, port = config.host_port()
    uvicorn.run(create_app(config), host=host, port=port)


@cli.command(name="eval")
@click.option("--dataset", required=True, type=click.Path(), help="JSONL question set.")
@click.option("--rounds", default=3, show_default=True, type=int)
@click.option("--out", "out_path", default="report.md", show_default=True, type=click.Path())
@click.pass_obj
def eval_command(config: AppConfig, dataset: str, rounds: int, out_path: str) -> None:
    """Grade the agent on a dataset and write report.md plus .csv/.png siblings."""
    if not Path(dataset).exists():
        raise MentorError(f"no dataset at {dataset}")
    questions = load_dataset(dataset)
    runtime = build_runtime(config)
    context = ToolContext(gateway=runtime.gateway, prompts_dir=config.prompts_dir)

    def agent_runner(question: EvalQuestion) -> str:
        session = new_session()
        result = run_agent(
            session,
            question.question,
            runtime.registry,
            config.agent,
            runtime.gateway,
            context=context,
            history_window=config.history_window,
        )
        return result.answer

    verdict_log = Path(out_path).with_suffix(".verdicts.jsonl")
    report = run_eval(
        questions, agent_runner, runtime.gateway, rounds=rounds, log_path=verdict_log
    )
    paths = write_report_files(report, out_path)
    click.echo(f"report: {paths['markdown']}")
    click.echo(f"csv: {paths['csv']}")
    click.echo(f"figure: {paths['figure']}")
    click.echo(f"verdicts: {verdict_log}")
    if report.judge_failures:
        click.echo(f"judge failures: {report.judge_failures}", err=True)


def main(argv: list[str] | None = None) -> int:
    """Entry point with stable exit codes: 0 ok, 1 usage, 2 runtime failure."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as err:
        err.show(file=sys.stderr)
        return 1
    except click.Abort:
        return 1
    except click.ClickException as err:
        err.show(file=sys.stderr)
        return 2
    except (MentorError, OSError) as err:
        click.echo(f"error: {err}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
