"""Command-line entry points: serve, repl, eval run, forge noise/slice,
dataset validate."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .bench import (
    DatasetParseError,
    InvariantViolation,
    ReportFormat,
    emit_report,
    load_dataset,
    record_from_wire,
    render_outcomes_csv,
    run_eval,
)
from .dialogue import (
    AwaitClarification,
    ConfirmExecute,
    Drafting,
    Failed,
    ProviderReply,
    ReadyToExecute,
    Rejected,
    Session,
    SessionConfig,
    UserMessage,
    classify_intent,
)
from .exchange import OversellRejected, PriceFeed, Venue
from .extract import ExtractionPolicy
from .forge import NoiseSpec, ProtectedTokens, display_segment, inject_noise, slice_text
from .gateway import (
    ChatTurn,
    GatewayError,
    ProviderConfig,
    Role,
    complete,
    default_directory,
    load_provider_config,
    render_system_prompt,
)
from .orders import draft_to_json, missing_fields
from .rulebot import rule_extract


@click.group()
@click.version_option(package_name="tradetalk")
def main() -> None:
    """Trade instruction recognition, clarification, simulation, and evaluation."""


def _provider_from_option(path: str | None) -> ProviderConfig:
    return load_provider_config(path) if path else ProviderConfig()


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Service config file (key=value).")
@click.option("--host", default=None, help="Override bind host.")
@click.option("--port", type=int, default=None, help="Override bind port.")
def serve(config_path: str | None, host: str | None, port: int | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import ServiceSettings, create_app

    settings = ServiceSettings.load(config_path)
    app = create_app(settings)
    uvicorn.run(app, host=host or settings.host, port=port or settings.port)


@main.command()
@click.option("--provider-config", type=click.Path(exists=True), default=None)
@click.option("--feed", "feed_path", type=click.Path(exists=True), default=None)
@click.option("--symbols", "symbols_path", type=click.Path(exists=True), default=None)
@click.option("--max-turns", type=int, default=5, show_default=True)
def repl(provider_config: str | None, feed_path: str | None,
         symbols_path: str | None, max_turns: int) -> None:
    """Interactive dialogue loop on the terminal."""
    from importlib import resources

    provider_cfg = _provider_from_option(provider_config)
    directory = default_directory(symbols_path or provider_cfg.symbols_path or None)
    if feed_path:
        feed = PriceFeed.from_csv(feed_path)
    else:
        with resources.as_file(resources.files("tradetalk.data").joinpath("demo_feed.csv")) as p:
            feed = PriceFeed.from_csv(p)
    venue = Venue(feed)
    config = SessionConfig(max_turns=max_turns, policy=ExtractionPolicy.LENIENT)

    click.echo("Type a trade instruction (or 'quit'). Each completed order asks for confirmation.")
    session = Session(config, directory, executor=venue.execute)
    while True:
        try:
            text = click.prompt("you", prompt_suffix="> ")
        except (EOFError, click.Abort):
            click.echo("bye")
            return
        if text.strip().lower() in {"quit", "exit"}:
            return
        if session.terminal:
            session = Session(config, directory, executor=venue.execute)

        try:
            messages = session.step(UserMessage(text))
            if isinstance(session.state, Drafting):
                transcript = [
                    ChatTurn(Role.SYSTEM, render_system_prompt(directory)),
                    ChatTurn(Role.USER, text),
                ]
                reply = complete(transcript, provider_cfg)
                messages = session.step(ProviderReply(reply))
        except GatewayError as exc:
            click.echo(f"provider error: {exc}", err=True)
            continue

        state = session.state
        if isinstance(state, AwaitClarification):
            click.echo(f"draft: {draft_to_json(state.draft, indent=None)}")
        for message in messages:
            click.echo(f"bot: {message.text}")
        if isinstance(state, ReadyToExecute):
            click.echo(f"order ready: {draft_to_json_ready(state)}")
            if click.confirm("execute?", default=False):
                try:
                    for message in session.step(ConfirmExecute()):
                        click.echo(f"bot: {message.text}")
                except OversellRejected as exc:
                    click.echo(f"rejected: {exc}", err=True)
            positions = dict(venue.portfolio.positions)
            click.echo(f"positions: {positions}")
        elif isinstance(state, (Rejected, Failed)):
            pass  # notice already printed
        if session.terminal:
            session = Session(config, directory, executor=venue.execute)


def draft_to_json_ready(state: ReadyToExecute) -> str:
    from .orders import order_to_wire

    return json.dumps(order_to_wire(state.order), ensure_ascii=False)


@main.group(name="eval")
def eval_group() -> None:
    """Provider evaluation."""


@eval_group.command(name="run")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--provider-config", type=click.Path(exists=True), default=None,
              help="Provider config file; defaults to the built-in rule provider.")
@click.option("--parallelism", type=int, default=1, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["markdown", "csv"]), default="markdown",
              show_default=True)
@click.option("--policy", type=click.Choice(["strict", "lenient"]), default="strict",
              show_default=True)
@click.option("--detail", "detail_path", type=click.Path(), default=None,
              help="Also write a per-record CSV here.")
def eval_run(dataset_path: str, provider_config: str | None, parallelism: int,
             fmt: str, policy: str, detail_path: str | None) -> None:
    """Evaluate a provider on a JSONL dataset and print the metric report."""
    try:
        records = load_dataset(dataset_path)
    except (DatasetParseError, InvariantViolation) as exc:
        raise click.ClickException(f"{dataset_path}: {exc}") from exc
    provider_cfg = _provider_from_option(provider_config)
    outcomes, report = run_eval(
        records,
        provider_cfg,
        parallelism=parallelism,
        policy=ExtractionPolicy(policy),
    )
    click.echo(
        emit_report(report, outcomes, ReportFormat(fmt), provider_name=provider_cfg.name),
        nl=False,
    )
    if detail_path:
        Path(detail_path).write_text(render_outcomes_csv(outcomes), encoding="utf-8")
    errored = [o for o in outcomes if o.error is not None and not o.raw_reply]
    if errored:
        for outcome in errored:
            click.echo(f"error: {outcome.record_id}: {outcome.error}", err=True)
        sys.exit(1)


@main.group()
def forge() -> None:
    """Corpus augmentation over JSONL record streams (stdin to stdout)."""


def _stream_records():
    for line_no, line in enumerate(click.get_text_stream("stdin"), 1):
        if not line.strip():
            continue
        try:
            yield line_no, json.loads(line)
        except json.JSONDecodeError as exc:
            raise click.ClickException(f"stdin:{line_no}: invalid JSON: {exc}") from exc


@forge.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--filler-p", type=float, default=0.3, show_default=True)
@click.option("--punct-p", type=float, default=0.3, show_default=True)
@click.option("--code-mix-p", type=float, default=0.1, show_default=True)
@click.option("--fillers-file", type=click.Path(exists=True), default=None,
              help="Filler lexicon, one token per line.")
@click.option("--code-mix-file", type=click.Path(exists=True), default=None,
              help="Code-mix lexicon, one src<TAB>dst pair per line.")
@click.option("--symbols", "symbols_path", type=click.Path(exists=True), default=None)
def noise(seed: int, filler_p: float, punct_p: float, code_mix_p: float,
          fillers_file: str | None, code_mix_file: str | None,
          symbols_path: str | None) -> None:
    """Inject seeded noise into input_text; gold alignments are preserved."""
    from .forge import load_code_mix_lexicon, load_filler_lexicon

    directory = default_directory(symbols_path)
    kwargs: dict = {}
    if fillers_file:
        kwargs["modal_lexicon"] = load_filler_lexicon(fillers_file)
    if code_mix_file:
        kwargs["code_mix_lexicon"] = load_code_mix_lexicon(code_mix_file)
    spec = NoiseSpec(seed=seed, filler_p=filler_p, punct_p=punct_p,
                     code_mix_p=code_mix_p, **kwargs)
    protected = ProtectedTokens.from_directory(directory)
    out = click.get_text_stream("stdout")
    for _, obj in _stream_records():
        obj["input_text"] = inject_noise(obj["input_text"], spec, protected)
        obj["note"] = (obj.get("note", "") + f" noise(seed={seed})").strip()
        out.write(json.dumps(obj, ensure_ascii=False) + "\n")


@forge.command(name="slice")
@click.option("--target-words", type=int, default=10, show_default=True)
@click.option("--regold/--no-gold", default=True, show_default=True,
              help="Re-derive gold via the rule grammar, or emit segments without gold.")
@click.option("--symbols", "symbols_path", type=click.Path(exists=True), default=None)
def slice_cmd(target_words: int, regold: bool, symbols_path: str | None) -> None:
    """Split input_text into ~target-word segments, one record per segment."""
    from .orders import draft_to_wire

    directory = default_directory(symbols_path)
    out = click.get_text_stream("stdout")
    for _, obj in _stream_records():
        segments = slice_text(obj["input_text"], target_words)
        for i, segment in enumerate(segments):
            text = display_segment(segment)
            rec = dict(obj)
            rec["id"] = f"{obj['id']}-s{i}"
            rec["input_text"] = text
            rec["note"] = (obj.get("note", "") + f" slice({i + 1}/{len(segments)})").strip()
            if regold:
                env = rule_extract(text, directory)
                rec["category"] = classify_intent(text).value
                rec["gold"] = draft_to_wire(env.order)
                rec["gold_followups"] = sorted(
                    f.value for f in missing_fields(env.order)
                )
            else:
                rec["gold"] = None
                rec["gold_followups"] = []
            out.write(json.dumps(rec, ensure_ascii=False) + "\n")


@main.group()
def dataset() -> None:
    """Dataset utilities."""


@dataset.command()
@click.argument("path", type=click.Path(exists=True))
def validate(path: str) -> None:
    """Check dataset invariants; exits nonzero with diagnostics on violation."""
    problems: list[str] = []
    seen: set[str] = set()
    count = 0
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        count += 1
        try:
            obj = json.loads(line)
            record = record_from_wire(obj)
            if record.id in seen:
                problems.append(f"line {line_no}: duplicate id {record.id!r}")
            seen.add(record.id)
        except Exception as exc:
            problems.append(f"line {line_no}: {exc}")
    if problems:
        for problem in problems:
            click.echo(problem, err=True)
        sys.exit(1)
    click.echo(f"{path}: {count} records ok")


if __name__ == "__main__":
    main()
