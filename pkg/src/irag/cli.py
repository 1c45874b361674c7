"""Command-line shell: ingest | index | query | serve | eval | derange.

Exit codes: 0 success, 1 user error (bad input or invocation), 2 environment
error (missing files, unreachable gateway, corrupt index).
"""
from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from irag.chunking import chunk_document
from irag.config import AppConfig, load_config
from irag.errors import (
    ConfigError,
    GatewayError,
    GenerationError,
    IndexFormatError,
    IndexIntegrityError,
    IragError,
    RetrievalError,
)
from irag.evals import (
    ALL_METRICS,
    EvalConfig,
    ExplanationPipeline,
    derange as derange_pairs,
    load_dataset,
    render_report,
    run_evaluation,
    save_dataset,
)
from irag.gateway import gateway_from_url
from irag.generation import GenerationConfig, generate_explanation
from irag.index import build_index, load_index, save_index
from irag.ingest import FilterPolicy, ingest_export, read_corpus, write_corpus
from irag.retrieval import RetrievalConfig

logger = logging.getLogger(__name__)

# Malformed invocations are user errors per the exit-code contract.
click.UsageError.exit_code = 1

# Environment failures exit 2; everything else (bad input, bad data) exits 1.
_ENV_ERRORS = (
    OSError,
    GatewayError,
    IndexFormatError,
    IndexIntegrityError,
    RetrievalError,
    GenerationError,
)


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(2 if isinstance(exc, _ENV_ERRORS) else 1)


def _gateway_options(fn):
    fn = click.option("--gateway", "gateway_url", default=None,
                      help="Gateway URL, or mock:<seed> for the offline mock.")(fn)
    fn = click.option("--chat-model", default=None)(fn)
    fn = click.option("--embed-model", default=None)(fn)
    fn = click.option("--judge-model", default=None)(fn)
    fn = click.option("--playbook", default=None, type=click.Path(),
                      help="Mock playbook file (key -> scripted response).")(fn)
    fn = click.option("--config", "config_path", default=None, type=click.Path(),
                      help="irag.toml path (flags win over env over file).")(fn)
    return fn


def _resolve_config(config_path, **flag_overrides) -> AppConfig:
    overrides = {
        key: value for key, value in flag_overrides.items() if value is not None
    }
    return load_config(config_path=config_path, overrides=overrides)


def _build_gateway(cfg: AppConfig):
    return gateway_from_url(
        cfg.gateway_url,
        chat_model=cfg.chat_model,
        embed_model=cfg.embed_model,
        judge_model=cfg.judge_model or None,
        timeout_s=cfg.timeout_s,
        playbook_path=cfg.playbook or None,
    )


def _retrieval_cfg(cfg: AppConfig) -> RetrievalConfig:
    return RetrievalConfig(
        rewrites=cfg.rewrites,
        k_per_query=cfg.k_per_query,
        final_k=cfg.final_k,
        rerank_mode=cfg.rerank_mode,
        rerank_url=cfg.rerank_url or None,
    )


def _generation_cfg(cfg: AppConfig) -> GenerationConfig:
    return GenerationConfig(
        abstain_threshold=cfg.abstain_threshold,
        temperature=cfg.generation_temperature,
    )


def _load_index_checked(path: str):
    if not path:
        raise ConfigError("no index path given (flag --index or [index] path)")
    if not Path(path).is_file():
        raise FileNotFoundError(f"index file not found: {path}")
    return load_index(path)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable info-level logging.")
def main(verbose):
    """Grounded question answering over issue-tracker exports."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--format", "export_format", type=click.Choice(["csv", "jsonl"]),
              default=None, help="Defaults from the file extension.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--min-chars", default=40, show_default=True,
              help="Drop issues whose normalized text is shorter than this.")
@click.option("--keep-open", is_flag=True, help="Keep non-closed issues too.")
def ingest(input_path, export_format, out_path, min_chars, keep_open):
    """Parse, normalize, and filter an issue export into corpus.jsonl."""
    try:
        raw = Path(input_path).read_bytes()
        if export_format is None:
            export_format = "jsonl" if input_path.endswith((".jsonl", ".ndjson")) else "csv"
        tag = "json_lines" if export_format == "jsonl" else "csv"
        policy = FilterPolicy(closed_only=not keep_open, min_chars=min_chars)
        documents, parsed = ingest_export(raw, tag, policy)
        write_corpus(documents, out_path)
    except (IragError, OSError) as exc:
        _fail(exc)
    click.echo(
        f"ingest: {len(parsed.records)} rows parsed, {parsed.skipped} skipped, "
        f"{len(documents)} documents written to {out_path}"
    )


@main.group()
def index():
    """Index operations."""


@index.command("build")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--chunk-size", default=None, type=int)
@click.option("--overlap", default=None, type=int)
@click.option("--batch-size", default=None, type=int, help="Embedding batch size.")
@_gateway_options
def index_build(corpus_path, out_path, chunk_size, overlap, batch_size,
                gateway_url, chat_model, embed_model, judge_model, playbook,
                config_path):
    """Chunk a corpus, embed it, and write the index file."""
    try:
        cfg = _resolve_config(
            config_path, gateway_url=gateway_url, chat_model=chat_model,
            embed_model=embed_model, judge_model=judge_model, playbook=playbook,
            chunk_size=chunk_size, overlap=overlap, embed_batch=batch_size,
        )
        documents = read_corpus(corpus_path)
        chunks = []
        for doc in documents:
            chunks.extend(chunk_document(doc, cfg.chunk_size, cfg.overlap))
        gateway = _build_gateway(cfg)
        built = build_index(chunks, gateway, batch_size=cfg.embed_batch)
        save_index(built, out_path)
    except (IragError, OSError) as exc:
        _fail(exc)
    click.echo(
        f"index: {len(documents)} documents, {len(chunks)} chunks, "
        f"dimension {built.dimension}, written to {out_path}"
    )


@main.command()
@click.argument("question")
@click.option("--index", "index_path", default=None, type=click.Path())
@click.option("--rewrites", default=None, type=int)
@click.option("--rerank-mode", default=None,
              type=click.Choice(["judge", "external", "none"]))
@click.option("--abstain-threshold", default=None, type=float)
@_gateway_options
def query(question, index_path, rewrites, rerank_mode, abstain_threshold,
          gateway_url, chat_model, embed_model, judge_model, playbook, config_path):
    """Answer one question; prints the ExplanationResult JSON."""
    try:
        cfg = _resolve_config(
            config_path, gateway_url=gateway_url, chat_model=chat_model,
            embed_model=embed_model, judge_model=judge_model, playbook=playbook,
            index_path=index_path, rewrites=rewrites, rerank_mode=rerank_mode,
            abstain_threshold=abstain_threshold,
        )
        loaded = _load_index_checked(cfg.index_path)
        gateway = _build_gateway(cfg)
        result = generate_explanation(
            question, loaded, gateway, _retrieval_cfg(cfg), _generation_cfg(cfg)
        )
    except (IragError, OSError) as exc:
        _fail(exc)
    click.echo(result.to_json())


@main.command()
@click.option("--index", "index_path", default=None, type=click.Path())
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
@click.option("--cors-origin", "cors_origins", multiple=True,
              help="Allowed CORS origin (repeatable).")
@_gateway_options
def serve(index_path, host, port, cors_origins,
          gateway_url, chat_model, embed_model, judge_model, playbook, config_path):
    """Run the HTTP service over one index (read-only)."""
    try:
        cfg = _resolve_config(
            config_path, gateway_url=gateway_url, chat_model=chat_model,
            embed_model=embed_model, judge_model=judge_model, playbook=playbook,
            index_path=index_path, host=host, port=port,
            cors_origins=list(cors_origins) or None,
        )
        loaded = _load_index_checked(cfg.index_path)
        gateway = _build_gateway(cfg)
    except (IragError, OSError) as exc:
        _fail(exc)

    import uvicorn

    from irag.service import create_app

    app = create_app(
        loaded, gateway, _retrieval_cfg(cfg), _generation_cfg(cfg),
        cors_origins=cfg.cors_origins,
    )
    click.echo(f"serving {cfg.index_path} on http://{cfg.host}:{cfg.port}")
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")


@main.command("eval")
@click.option("--dataset", "dataset_path", required=True, type=click.Path())
@click.option("--index", "index_path", default=None, type=click.Path())
@click.option("--runs", default=3, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--metrics", default=",".join(ALL_METRICS), show_default=True,
              help="Comma-separated metric names.")
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="Write the report here (default: stdout).")
@click.option("--format", "report_format", default="markdown", show_default=True,
              type=click.Choice(["markdown", "csv", "json"]))
@click.option("--rerank-mode", default=None,
              type=click.Choice(["judge", "external", "none"]))
@_gateway_options
def eval_cmd(dataset_path, index_path, runs, seed, metrics, out_path, report_format,
             rerank_mode, gateway_url, chat_model, embed_model, judge_model,
             playbook, config_path):
    """Evaluate the pipeline on a QA dataset; writes the report."""
    try:
        cfg = _resolve_config(
            config_path, gateway_url=gateway_url, chat_model=chat_model,
            embed_model=embed_model, judge_model=judge_model, playbook=playbook,
            index_path=index_path, rerank_mode=rerank_mode,
        )
        pairs = load_dataset(dataset_path)
        loaded = _load_index_checked(cfg.index_path)
        gateway = _build_gateway(cfg)
        pipeline = ExplanationPipeline(
            loaded, gateway, _retrieval_cfg(cfg), _generation_cfg(cfg)
        )
        metric_list = tuple(m.strip() for m in metrics.split(",") if m.strip())
        report = run_evaluation(pairs, pipeline, EvalConfig(runs=runs, seed=seed,
                                                            metrics=metric_list))
        rendered = render_report(report, report_format)
    except (IragError, OSError) as exc:
        _fail(exc)
    if out_path:
        Path(out_path).write_text(rendered, encoding="utf-8")
        click.echo(f"eval: report written to {out_path}")
    else:
        click.echo(rendered, nl=False)


@main.command()
@click.option("--in", "input_path", required=True, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="Default: <input stem>_robustness.jsonl next to the input.")
@click.option("--seed", required=True, type=int)
def derange(input_path, out_path, seed):
    """Build the robustness dataset: mismatch every reference answer."""
    try:
        pairs = load_dataset(input_path)
        deranged = derange_pairs(pairs, seed)
        if out_path is None:
            source = Path(input_path)
            out_path = str(source.with_name(source.stem + "_robustness.jsonl"))
        save_dataset(deranged, out_path)
    except (IragError, OSError) as exc:
        _fail(exc)
    click.echo(f"derange: {len(deranged)} pairs written to {out_path}")


if __name__ == "__main__":
    main()
