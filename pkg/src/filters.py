"""
False-positive filters

Every candidate goes through the same fixed pipeline before it becomes a
Violation: monotonic size, sanitizer, dead code, external validator. Each
filter leaves a FilterRecord; the pipeline stops at the first Reject.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, List, Sequence, Tuple

from core_model import (
    Strategy, FilterStatus, FilterRecord, SourceProgram, LanguageProfile, ViolationCandidate,
)
from toolchain import (
    Toolchain, RunVerdict, DEFAULT_DRIVER_INPUTS, driver_line_map, inserted_body_lines, split_blocks,
    synthesize_driver,
)

logger = logging.getLogger(__name__)

MONOTONIC = "monotonic_size"
SANITIZER = "sanitizer"
DEAD_CODE = "dead_code"
VALIDATOR = "external_validator"

FILTER_ORDER = (MONOTONIC, SANITIZER, DEAD_CODE, VALIDATOR)

# Languages whose if/while/for conditions sit in parentheses and may guard a braceless body
PAREN_CONDITION_LANGUAGES = frozenset({"c", "cpp"})

SANITIZER_HEALTH_LIMIT = Fraction(1, 10)


@dataclass(frozen=True)
class FilterSettings:
    strict_monotonic: bool = False
    allow_skipped_dead_code_filter: bool = False


@dataclass
class FilterContext:
    """Everything the dynamic filters need besides the candidate."""
    toolchain: Toolchain
    profile: LanguageProfile
    scratch: Path
    size_history: Sequence[int]
    previous_code: str
    settings: FilterSettings = field(default_factory=FilterSettings)
    driver_inputs: Tuple[int, ...] = DEFAULT_DRIVER_INPUTS


# ============================================================
# STATIC
# ============================================================

def first_size_drop(sizes: Sequence[int], strict: bool = False) -> Optional[int]:
    """
    Index of the first step whose size marks suspected undefined behavior.

    Default: a size strictly below the step-0 baseline. Strict mode: any
    decrease from the previous step.
    """
    if len(sizes) < 2:
        return None
    baseline = sizes[0]
    for k in range(1, len(sizes)):
        if strict and sizes[k] < sizes[k - 1]:
            return k
        if not strict and sizes[k] < baseline:
            return k
    return None


def monotonic_size_filter(sizes: Sequence[int], strict: bool = False) -> FilterRecord:
    """Reject when an additive mutation made the reference-flag output shrink"""
    step = first_size_drop(sizes, strict)
    if step is None:
        return FilterRecord(MONOTONIC, FilterStatus.PASS, f"sizes {list(sizes)}")
    detail = f"step {step}: size {sizes[step]} dropped below {sizes[0] if not strict else sizes[step - 1]}"
    return FilterRecord(MONOTONIC, FilterStatus.REJECT, detail)


# ============================================================
# DYNAMIC
# ============================================================

def sanitizer_filter(driver: SourceProgram, context: FilterContext) -> FilterRecord:
    run = context.toolchain.run_sanitized(driver, context.profile, Path(context.scratch) / SANITIZER)
    if run.verdict is RunVerdict.UNAVAILABLE:
        return FilterRecord(SANITIZER, FilterStatus.SKIPPED, run.report)
    if run.verdict is RunVerdict.CLEAN:
        return FilterRecord(SANITIZER, FilterStatus.PASS, "clean")
    return FilterRecord(SANITIZER, FilterStatus.REJECT, f"{run.verdict.value}: {run.report}".strip())


def dead_code_filter(candidate: ViolationCandidate, context: FilterContext) -> FilterRecord:
    """
    Every statement the mutation inserted since previous_code must have
    execution count 0.

    The mutant is built for coverage in split_blocks layout, so a header
    whose condition runs never shares a line with the body it guards.
    Skipped for strategies other than dead code, whose candidates make no
    deadness claim.
    """
    if candidate.strategy is not Strategy.DEAD_CODE:
        return FilterRecord(DEAD_CODE, FilterStatus.SKIPPED, "not a dead-code candidate")
    required = not context.settings.allow_skipped_dead_code_filter

    paren_conditions = context.profile.id in PAREN_CONDITION_LANGUAGES
    layout = split_blocks(candidate.program.code, paren_conditions)
    driver = synthesize_driver(candidate.program.with_code(layout), context.profile, context.driver_inputs)
    report = context.toolchain.line_coverage(driver, context.profile, Path(context.scratch) / DEAD_CODE)
    if not report.available:
        return FilterRecord(DEAD_CODE, FilterStatus.SKIPPED, report.detail, required=required)
    if not report.terminated:
        return FilterRecord(DEAD_CODE, FilterStatus.REJECT, f"timeout: {report.detail}", required=required)

    lines = inserted_body_lines(split_blocks(context.previous_code, paren_conditions), layout)
    mapping = driver_line_map(layout, context.profile)
    source = layout.splitlines()
    executed = [
        source[line - 1] for line in sorted(lines)
        if report.line_counts.get(mapping.get(line, -1), 0) > 0
    ]
    if executed:
        return FilterRecord(
            DEAD_CODE, FilterStatus.REJECT,
            f"live-code: inserted statements executed: {'; '.join(executed)}", required=required,
        )
    return FilterRecord(
        DEAD_CODE, FilterStatus.PASS,
        f"{len(lines)} inserted statements, all with count 0", required=required,
    )


def validator_filter(driver: SourceProgram, context: FilterContext) -> FilterRecord:
    run = context.toolchain.run_validator(driver, context.profile, Path(context.scratch) / VALIDATOR)
    if run.verdict is RunVerdict.UNAVAILABLE:
        return FilterRecord(VALIDATOR, FilterStatus.SKIPPED, run.report)
    if run.verdict is RunVerdict.CLEAN:
        return FilterRecord(VALIDATOR, FilterStatus.PASS, "exit 0")
    return FilterRecord(VALIDATOR, FilterStatus.REJECT, f"{run.verdict.value}: {run.report}".strip())


# ============================================================
# PIPELINE
# ============================================================

def blocks(record: FilterRecord) -> bool:
    return record.status is FilterStatus.REJECT or (
        record.status is FilterStatus.SKIPPED and record.required
    )


def run_filters(candidate: ViolationCandidate, context: FilterContext) -> Tuple[bool, Tuple[FilterRecord, ...]]:
    """
    Run the fixed filter pipeline over a candidate.

    Returns:
        (passed, evidence) where evidence holds one record per filter that ran

    Raises:
        SignatureCorrupted: If no driver can be built for the mutant
    """
    evidence: List[FilterRecord] = []

    record = monotonic_size_filter(context.size_history, context.settings.strict_monotonic)
    evidence.append(record)
    if blocks(record):
        logger.warning(f"Candidate rejected by {record.filter_name}: {record.detail}")
        return False, tuple(evidence)

    driver = synthesize_driver(candidate.program, context.profile, context.driver_inputs)

    for check in (
        lambda: sanitizer_filter(driver, context),
        lambda: dead_code_filter(candidate, context),
        lambda: validator_filter(driver, context),
    ):
        record = check()
        evidence.append(record)
        if blocks(record):
            logger.warning(f"Candidate rejected by {record.filter_name}: {record.status.value} {record.detail}")
            return False, tuple(evidence)

    return True, tuple(evidence)


def sanitizer_rejection_rate(evidence_sets: Sequence[Sequence[FilterRecord]]) -> Fraction:
    """Share of filtered candidates the sanitizer rejected"""
    if not evidence_sets:
        return Fraction(0)
    rejected = sum(
        1 for evidence in evidence_sets
        if any(r.filter_name == SANITIZER and r.status is FilterStatus.REJECT for r in evidence)
    )
    return Fraction(rejected, len(evidence_sets))


def sanitizer_health_warning(evidence_sets: Sequence[Sequence[FilterRecord]]) -> Optional[str]:
    rate = sanitizer_rejection_rate(evidence_sets)
    if rate > SANITIZER_HEALTH_LIMIT:
        return (f"Sanitizer rejected {float(rate):.1%} of {len(evidence_sets)} candidates "
                f"(expected at most {float(SANITIZER_HEALTH_LIMIT):.0%})")
    return None
