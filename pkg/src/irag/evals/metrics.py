"""The four judge-scored quality metrics.

All metric values live in [0, 1]: binary metrics in {0, 1}, the ordinal
answer-reference metric in {0, 0.5, 1.0} (the raw 0/5/10 judge scale divided
by 10). A judge that produces no usable verdict after its retries yields an
invalid score, which reports exclude from means and count separately --
judge failure is not system failure.
"""
from __future__ import annotations

from dataclasses import dataclass

from irag.errors import JudgeInvalidError
from irag.gateway.judge import judge
from irag.prompts import NO_CONTEXT_MARKER, load_prompt
from irag.retrieval import RankedContext

ARS_BINARY = "ars_binary"
ARS_ORDINAL = "ars_ordinal"
HELPFULNESS = "helpfulness"
FAITHFULNESS = "faithfulness"
DOC_RELEVANCE = "doc_relevance"

ALL_METRICS = (ARS_BINARY, ARS_ORDINAL, HELPFULNESS, FAITHFULNESS, DOC_RELEVANCE)

BINARY_SCALE = [0.0, 1.0]
ORDINAL_SCALE = [0.0, 5.0, 10.0]


@dataclass
class MetricScore:
    metric: str
    qa_id: str
    run_index: int
    value: float  # in [0, 1]; meaningless when valid is False
    justification: str
    valid: bool = True


def score_answer_vs_reference(
    question: str,
    answer: str,
    reference: str,
    mode: str,
    gateway,
    qa_id: str = "",
    run_index: int = 0,
) -> MetricScore:
    """Judge factual agreement of the answer with the reference.

    Binary and ordinal modes share one evaluation prompt; only the allowed
    scores differ. Ordinal verdicts are normalized by 10.
    """
    if mode == "binary":
        metric, scale, divisor = ARS_BINARY, BINARY_SCALE, 1.0
    elif mode == "ordinal":
        metric, scale, divisor = ARS_ORDINAL, ORDINAL_SCALE, 10.0
    else:
        raise ValueError(f"unknown answer-vs-reference mode {mode!r}")
    payload = f"QUESTION:\n{question}\n\nANSWER:\n{answer}\n\nREFERENCE:\n{reference}"
    return _judged_score(
        gateway, "judge_answer_vs_reference", payload, scale, divisor,
        metric, qa_id, run_index,
    )


def score_helpfulness(
    question: str, answer: str, gateway, qa_id: str = "", run_index: int = 0
) -> MetricScore:
    """Binary: does the answer address the question in a practical way?"""
    payload = f"QUESTION:\n{question}\n\nANSWER:\n{answer}"
    return _judged_score(
        gateway, "judge_helpfulness", payload, BINARY_SCALE, 1.0,
        HELPFULNESS, qa_id, run_index,
    )


def score_faithfulness(
    answer: str,
    context: RankedContext,
    gateway,
    abstained: bool = False,
    qa_id: str = "",
    run_index: int = 0,
) -> MetricScore:
    """Binary grounding check of the answer against its retrieval context.

    An abstaining answer scores 1 without a judge call: declining to answer
    is maximally grounded behavior.
    """
    if abstained:
        return MetricScore(
            metric=FAITHFULNESS,
            qa_id=qa_id,
            run_index=run_index,
            value=1.0,
            justification="abstention: no claim was made beyond the context",
        )
    payload = (
        f"CONTEXT EXCERPTS:\n{_context_block(context)}\n\nANSWER:\n{answer}"
    )
    return _judged_score(
        gateway, "judge_faithfulness", payload, BINARY_SCALE, 1.0,
        FAITHFULNESS, qa_id, run_index,
    )


def score_document_relevance(
    question: str, context: RankedContext, gateway, qa_id: str = "", run_index: int = 0
) -> MetricScore:
    """Binary: does the retrieved set contain information relevant to the query?

    Scored jointly over the whole set; an empty context is 0 by definition,
    no judge call.
    """
    if not context.chunks:
        return MetricScore(
            metric=DOC_RELEVANCE,
            qa_id=qa_id,
            run_index=run_index,
            value=0.0,
            justification="no documents were retrieved",
        )
    payload = (
        f"QUESTION:\n{question}\n\nRETRIEVED EXCERPTS:\n{_context_block(context)}"
    )
    return _judged_score(
        gateway, "judge_doc_relevance", payload, BINARY_SCALE, 1.0,
        DOC_RELEVANCE, qa_id, run_index,
    )


def _context_block(context: RankedContext) -> str:
    if not context.chunks:
        return NO_CONTEXT_MARKER
    return "\n\n".join(
        f"[CHUNK {ranked.chunk.chunk_id}]\n{ranked.chunk.text}"
        for ranked in context.chunks
    )


def _judged_score(
    gateway,
    prompt_name: str,
    payload: str,
    scale: list[float],
    divisor: float,
    metric: str,
    qa_id: str,
    run_index: int,
) -> MetricScore:
    try:
        verdict = judge(gateway, load_prompt(prompt_name), payload, scale)
    except JudgeInvalidError as exc:
        return MetricScore(
            metric=metric,
            qa_id=qa_id,
            run_index=run_index,
            value=0.0,
            justification=f"invalid verdict: {exc}",
            valid=False,
        )
    return MetricScore(
        metric=metric,
        qa_id=qa_id,
        run_index=run_index,
        value=verdict.score / divisor,
        justification=verdict.justification,
    )
