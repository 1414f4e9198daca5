"""
Differential strategies

Each check maps the compile outcomes of one step (plus the step-0 baseline
for the dead-code strategy) to an optional ViolationCandidate. All checks are
pure functions of their inputs.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, List, Dict, Tuple, Sequence

from core_model import (
    Strategy, Channel, CompilerSpec, CompileOutcome, SizeSample, SourceProgram,
    ViolationCandidate, Threshold, as_fraction, threshold_exceeded,
)
from errors import DegenerateBaseline

logger = logging.getLogger(__name__)

DEFAULT_PIPELINE_THRESHOLD = 0.05
DEFAULT_MULTI_COMPILER_THRESHOLD = 0.10
DEFAULT_SINGLE_COMPILER_THRESHOLD = 0.0

OutcomeKey = Tuple[str, str]


@dataclass(frozen=True)
class StrategyConfig:
    strategy: Strategy
    pipeline_threshold: Threshold = DEFAULT_PIPELINE_THRESHOLD
    multi_compiler_threshold: Threshold = DEFAULT_MULTI_COMPILER_THRESHOLD
    single_compiler_threshold: Threshold = DEFAULT_SINGLE_COMPILER_THRESHOLD
    reference_opt_flag: Optional[str] = None

    def __post_init__(self):
        for name in ('pipeline_threshold', 'multi_compiler_threshold', 'single_compiler_threshold'):
            if as_fraction(getattr(self, name)) < 0:
                raise ValueError(f"{name} must be >= 0")

    def reference_flag(self, compiler: CompilerSpec) -> str:
        """Flag used for size comparison (the size-minimizing flag unless overridden)"""
        return self.reference_opt_flag or compiler.size_opt_flag

    def threshold(self) -> Fraction:
        if self.strategy is Strategy.PIPELINE:
            return as_fraction(self.pipeline_threshold)
        if self.strategy is Strategy.MULTI_COMPILER:
            return as_fraction(self.multi_compiler_threshold)
        if self.strategy is Strategy.SINGLE_COMPILER:
            return as_fraction(self.single_compiler_threshold)
        return Fraction(0)


def sample_of(outcome: CompileOutcome) -> SizeSample:
    return SizeSample(outcome.compiler_id, outcome.opt_flag, outcome.size_value)


def _exceeds(offender: int, baseline: int, threshold: Threshold) -> bool:
    try:
        return threshold_exceeded(offender, baseline, threshold)
    except DegenerateBaseline:
        logger.warning(f"Discarding comparison against a zero-size baseline (offender size {offender})")
        return False


# ============================================================
# CHECKS
# ============================================================

def dead_code_check(
    step_outcome: CompileOutcome,
    baseline_outcome: CompileOutcome,
    program: SourceProgram,
    baseline_step: int = 0,
) -> Optional[ViolationCandidate]:
    """
    Step size above the step-0 size of the same compiler and flag.

    Only dead code was added, so any growth means the compiler kept it.
    """
    if not (step_outcome.success and baseline_outcome.success):
        return None
    if not _exceeds(step_outcome.size_value, baseline_outcome.size_value, 0):
        return None
    return ViolationCandidate(
        strategy=Strategy.DEAD_CODE,
        program=program,
        baseline=sample_of(baseline_outcome),
        offender=sample_of(step_outcome),
        threshold=Fraction(0),
        outcomes=(baseline_outcome, step_outcome),
        baseline_step=baseline_step,
    )


def pipeline_check(
    outcomes: Sequence[CompileOutcome],
    size_flag: str,
    program: SourceProgram,
    threshold: Threshold = DEFAULT_PIPELINE_THRESHOLD,
) -> Optional[ViolationCandidate]:
    """
    Size flag output larger than the smallest output of any other flag.

    Args:
        outcomes: Outcomes of one compiler, one per optimization flag
        size_flag: The size-minimizing flag (offender side)
        program: Program the outcomes were produced from
        threshold: Relative tolerance applied to the baseline
    """
    if not outcomes or not all(o.success for o in outcomes):
        return None
    sized = [o for o in outcomes if o.opt_flag == size_flag]
    others = [o for o in outcomes if o.opt_flag != size_flag]
    if not sized or not others:
        return None
    offender = sized[0]
    baseline = min(others, key=lambda o: (o.size_value, o.opt_flag))
    if not _exceeds(offender.size_value, baseline.size_value, threshold):
        return None
    return ViolationCandidate(
        strategy=Strategy.PIPELINE,
        program=program,
        baseline=sample_of(baseline),
        offender=sample_of(offender),
        threshold=as_fraction(threshold),
        outcomes=tuple(outcomes),
    )


def version_check(
    outcomes: Sequence[CompileOutcome],
    program: SourceProgram,
    threshold: Threshold = DEFAULT_SINGLE_COMPILER_THRESHOLD,
) -> Optional[ViolationCandidate]:
    """
    Trunk (last outcome) larger than the best released version.

    Args:
        outcomes: Same family and flag, ordered oldest to newest, ending at trunk
    """
    if len(outcomes) < 2 or not all(o.success for o in outcomes):
        return None
    trunk = outcomes[-1]
    released = outcomes[:-1]
    baseline = min(released, key=lambda o: o.size_value)
    if not _exceeds(trunk.size_value, baseline.size_value, threshold):
        return None
    return ViolationCandidate(
        strategy=Strategy.SINGLE_COMPILER,
        program=program,
        baseline=sample_of(baseline),
        offender=sample_of(trunk),
        threshold=as_fraction(threshold),
        outcomes=tuple(outcomes),
    )


def multi_compiler_check(
    outcomes: Sequence[CompileOutcome],
    program: SourceProgram,
    threshold: Threshold = DEFAULT_MULTI_COMPILER_THRESHOLD,
) -> Optional[ViolationCandidate]:
    """
    Largest output against the smallest across distinct compilers.

    Ties on either side go to the lexicographically smallest compiler id.
    """
    if len(outcomes) < 2 or not all(o.success for o in outcomes):
        return None
    offender = min(outcomes, key=lambda o: (-o.size_value, o.compiler_id))
    baseline = min(outcomes, key=lambda o: (o.size_value, o.compiler_id))
    if not _exceeds(offender.size_value, baseline.size_value, threshold):
        return None
    return ViolationCandidate(
        strategy=Strategy.MULTI_COMPILER,
        program=program,
        baseline=sample_of(baseline),
        offender=sample_of(offender),
        threshold=as_fraction(threshold),
        outcomes=tuple(sorted(outcomes, key=lambda o: o.compiler_id)),
    )


# ============================================================
# DISPATCH
# ============================================================

def required_compiles(config: StrategyConfig, compilers: Sequence[CompilerSpec]) -> List[OutcomeKey]:
    """(compiler id, flag) pairs a step must compile for the active strategy"""
    if config.strategy is Strategy.PIPELINE:
        return [(c.id, flag) for c in compilers for flag in c.all_flags]
    return [(c.id, config.reference_flag(c)) for c in compilers]


def evaluate(
    config: StrategyConfig,
    compilers: Sequence[CompilerSpec],
    outcomes: Dict[OutcomeKey, CompileOutcome],
    program: SourceProgram,
    baseline_outcomes: Optional[Dict[OutcomeKey, CompileOutcome]] = None,
) -> Optional[ViolationCandidate]:
    """
    Run the active strategy over one step's compile matrix.

    Args:
        config: Strategy and thresholds
        compilers: Compiler matrix in configured order
        outcomes: {(compiler id, flag): outcome} for this step
        program: The mutant the outcomes belong to
        baseline_outcomes: Step-0 outcomes (dead-code strategy only)

    Returns:
        The first candidate found, or None
    """
    strategy = config.strategy
    threshold = config.threshold()

    if strategy is Strategy.DEAD_CODE:
        baseline_outcomes = baseline_outcomes or {}
        for compiler in compilers:
            key = (compiler.id, config.reference_flag(compiler))
            if key not in outcomes or key not in baseline_outcomes:
                continue
            candidate = dead_code_check(outcomes[key], baseline_outcomes[key], program)
            if candidate:
                return candidate
        return None

    if strategy is Strategy.PIPELINE:
        for compiler in compilers:
            per_flag = [outcomes[(compiler.id, f)] for f in compiler.all_flags if (compiler.id, f) in outcomes]
            candidate = pipeline_check(per_flag, config.reference_flag(compiler), program, threshold)
            if candidate:
                return candidate
        return None

    selected = [outcomes[(c.id, config.reference_flag(c))] for c in compilers
                if (c.id, config.reference_flag(c)) in outcomes]
    if len(selected) != len(compilers):
        return None
    if strategy is Strategy.SINGLE_COMPILER:
        if compilers[-1].channel is not Channel.TRUNK:
            raise ValueError(f"Last compiler '{compilers[-1].id}' must be the trunk build")
        return version_check(selected, program, threshold)
    return multi_compiler_check(selected, program, threshold)
