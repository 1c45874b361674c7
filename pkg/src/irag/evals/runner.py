"""Evaluation runs: generate an answer per (question, run) cell, score it.

Cells are evaluated strictly in (run, question) order so a seeded mock run is
reproducible byte for byte; a pipeline failure invalidates that cell's scores
and the run continues. Means are taken over valid cells only and every report
keeps the full cell matrix plus a config snapshot (prompt hashes, thresholds,
seeds), so any mean can be recomputed from what is stored.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from irag.errors import IragError
from irag.evals.datasets import QAPair
from irag.evals.metrics import (
    ALL_METRICS,
    ARS_BINARY,
    ARS_ORDINAL,
    DOC_RELEVANCE,
    FAITHFULNESS,
    HELPFULNESS,
    MetricScore,
    score_answer_vs_reference,
    score_document_relevance,
    score_faithfulness,
    score_helpfulness,
)
from irag.gateway.judge import JUDGE_TEMPERATURE
from irag.generation import GenerationConfig, explain_with_context
from irag.index.store import VectorIndex
from irag.prompts import prompt_manifest
from irag.retrieval import RetrievalConfig

logger = logging.getLogger(__name__)


class ExplanationPipeline:
    """Bundles an index, a gateway, and the pipeline configuration."""

    def __init__(
        self,
        index: VectorIndex,
        gateway,
        retrieval_cfg: RetrievalConfig | None = None,
        generation_cfg: GenerationConfig | None = None,
    ):
        self.index = index
        self.gateway = gateway
        self.retrieval_cfg = retrieval_cfg or RetrievalConfig()
        self.generation_cfg = generation_cfg or GenerationConfig()

    def explain(self, query: str):
        return explain_with_context(
            query, self.index, self.gateway, self.retrieval_cfg, self.generation_cfg
        )

    def config_snapshot(self) -> dict:
        return {
            "retrieval": {
                "rewrites": self.retrieval_cfg.rewrites,
                "k_per_query": self.retrieval_cfg.k_per_query,
                "final_k": self.retrieval_cfg.final_k,
                "rerank_mode": self.retrieval_cfg.rerank_mode,
            },
            "abstain_threshold": self.generation_cfg.abstain_threshold,
            "generation_temperature": self.generation_cfg.temperature,
            "judge_temperature": JUDGE_TEMPERATURE,
            "gateway": {
                "chat_model": self.gateway.chat_model,
                "embed_model": self.gateway.embed_model,
                "judge_model": self.gateway.judge_model,
            },
            "index": {
                "entries": len(self.index),
                "dimension": self.index.dimension,
                "embedder_id": self.index.embedder_id,
                "checksum": self.index.source_checksum,
            },
            "prompts": prompt_manifest(),
        }


@dataclass
class EvalConfig:
    runs: int = 3
    seed: int = 0
    metrics: tuple = ALL_METRICS

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        unknown = set(self.metrics) - set(ALL_METRICS)
        if unknown:
            raise ValueError(f"unknown metrics: {sorted(unknown)}")


@dataclass
class EvalCell:
    qa_id: str
    run_index: int
    metric: str
    value: float
    valid: bool
    justification: str
    abstained: bool

    def to_dict(self) -> dict:
        return {
            "qa_id": self.qa_id,
            "run_index": self.run_index,
            "metric": self.metric,
            "value": self.value,
            "valid": self.valid,
            "justification": self.justification,
            "abstained": self.abstained,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalCell":
        return cls(**data)


@dataclass
class EvalReport:
    model: str
    dataset_tag: str
    runs: int
    metrics: list[str]
    cells: list[EvalCell]
    means: dict[str, float | None]
    invalid_cells: int
    abstention_rate: float | None
    config: dict = field(default_factory=dict)

    @property
    def has_valid_cells(self) -> bool:
        return any(cell.valid for cell in self.cells)

    def recompute_means(self) -> dict[str, float | None]:
        """Means straight from the stored matrix; must equal ``means``."""
        return _means_from_cells(self.cells, self.metrics)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "dataset_tag": self.dataset_tag,
            "runs": self.runs,
            "metrics": list(self.metrics),
            "means": dict(self.means),
            "invalid_cells": self.invalid_cells,
            "abstention_rate": self.abstention_rate,
            "cells": [cell.to_dict() for cell in self.cells],
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(
            model=data["model"],
            dataset_tag=data["dataset_tag"],
            runs=data["runs"],
            metrics=list(data["metrics"]),
            cells=[EvalCell.from_dict(c) for c in data["cells"]],
            means=dict(data["means"]),
            invalid_cells=data["invalid_cells"],
            abstention_rate=data["abstention_rate"],
            config=data.get("config", {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls.from_dict(json.loads(text))


def run_evaluation(
    dataset: list[QAPair], pipeline: ExplanationPipeline, cfg: EvalConfig | None = None
) -> EvalReport:
    cfg = cfg or EvalConfig()
    cells: list[EvalCell] = []
    abstentions: list[bool] = []

    for run_index in range(cfg.runs):
        for pair in dataset:
            cells.extend(_evaluate_cell(pair, run_index, pipeline, cfg, abstentions))

    means = _means_from_cells(cells, cfg.metrics)
    invalid = sum(1 for cell in cells if not cell.valid)
    report = EvalReport(
        model=pipeline.gateway.chat_model,
        dataset_tag=dataset[0].dataset_tag if dataset else "empty",
        runs=cfg.runs,
        metrics=list(cfg.metrics),
        cells=cells,
        means=means,
        invalid_cells=invalid,
        abstention_rate=(
            sum(abstentions) / len(abstentions) if abstentions else None
        ),
        config={
            "runs": cfg.runs,
            "seed": cfg.seed,
            "metrics": list(cfg.metrics),
            "dataset_size": len(dataset),
            **pipeline.config_snapshot(),
        },
    )
    if not dataset:
        logger.warning("evaluation ran on an empty dataset")
    if cells and not report.has_valid_cells:
        logger.warning("evaluation produced no valid cells; means are omitted")
    return report


def _evaluate_cell(
    pair: QAPair,
    run_index: int,
    pipeline: ExplanationPipeline,
    cfg: EvalConfig,
    abstentions: list[bool],
) -> list[EvalCell]:
    try:
        result, context = pipeline.explain(pair.question)
    except IragError as exc:
        logger.warning("cell (%s, run %d) failed: %s", pair.qa_id, run_index, exc)
        return [
            EvalCell(
                qa_id=pair.qa_id,
                run_index=run_index,
                metric=metric,
                value=0.0,
                valid=False,
                justification=f"pipeline error: {exc}",
                abstained=False,
            )
            for metric in cfg.metrics
        ]

    abstained = not result.context_found
    abstentions.append(abstained)
    gateway = pipeline.gateway
    cells = []
    for metric in cfg.metrics:
        if metric == ARS_BINARY:
            score = score_answer_vs_reference(
                pair.question, result.explanation, pair.reference_answer,
                "binary", gateway, pair.qa_id, run_index,
            )
        elif metric == ARS_ORDINAL:
            score = score_answer_vs_reference(
                pair.question, result.explanation, pair.reference_answer,
                "ordinal", gateway, pair.qa_id, run_index,
            )
        elif metric == HELPFULNESS:
            score = score_helpfulness(
                pair.question, result.explanation, gateway, pair.qa_id, run_index
            )
        elif metric == FAITHFULNESS:
            score = score_faithfulness(
                result.explanation, context, gateway,
                abstained=abstained, qa_id=pair.qa_id, run_index=run_index,
            )
        elif metric == DOC_RELEVANCE:
            score = score_document_relevance(
                pair.question, context, gateway, pair.qa_id, run_index
            )
        else:  # unreachable; EvalConfig validates
            raise ValueError(f"unknown metric {metric!r}")
        cells.append(_to_cell(score, abstained))
    return cells


def _to_cell(score: MetricScore, abstained: bool) -> EvalCell:
    return EvalCell(
        qa_id=score.qa_id,
        run_index=score.run_index,
        metric=score.metric,
        value=score.value,
        valid=score.valid,
        justification=score.justification,
        abstained=abstained,
    )


def _means_from_cells(cells: list[EvalCell], metrics) -> dict[str, float | None]:
    means: dict[str, float | None] = {}
    for metric in metrics:
        values = [cell.value for cell in cells if cell.metric == metric and cell.valid]
        means[metric] = sum(values) / len(values) if values else None
    return means
