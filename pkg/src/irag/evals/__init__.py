"""LLM-as-judge evaluation harness: datasets, metrics, runs, reports."""
from irag.evals.datasets import DATASET_TAGS, QAPair, derange, load_dataset, save_dataset
from irag.evals.metrics import (
    ALL_METRICS,
    ARS_BINARY,
    ARS_ORDINAL,
    BINARY_SCALE,
    DOC_RELEVANCE,
    FAITHFULNESS,
    HELPFULNESS,
    ORDINAL_SCALE,
    MetricScore,
    score_answer_vs_reference,
    score_document_relevance,
    score_faithfulness,
    score_helpfulness,
)
from irag.evals.report import render_report
from irag.evals.runner import (
    EvalCell,
    EvalConfig,
    EvalReport,
    ExplanationPipeline,
    run_evaluation,
)

__all__ = [
    "ALL_METRICS",
    "ARS_BINARY",
    "ARS_ORDINAL",
    "BINARY_SCALE",
    "DATASET_TAGS",
    "DOC_RELEVANCE",
    "FAITHFULNESS",
    "HELPFULNESS",
    "ORDINAL_SCALE",
    "EvalCell",
    "EvalConfig",
    "EvalReport",
    "ExplanationPipeline",
    "MetricScore",
    "QAPair",
    "derange",
    "load_dataset",
    "render_report",
    "run_evaluation",
    "save_dataset",
    "score_answer_vs_reference",
    "score_document_relevance",
    "score_faithfulness",
    "score_helpfulness",
]
