"""
Core domain model for sizeprobe.

Immutable value objects shared by every module (instructions, programs,
compiler specs, compile outcomes, candidates, violations, signatures,
statistics) plus the threshold arithmetic all strategies are built on.
"""

import hashlib
from dataclasses import dataclass, field, asdict
from enum import Enum
from fractions import Fraction
from typing import Optional, List, Dict, Tuple, Any, Union

from errors import DegenerateBaseline


# ============================================================
# ENUMERATIONS
# ============================================================

class Category(str, Enum):
    CONTROL_FLOW = "ControlFlow"
    CONDITIONALS = "Conditionals"
    AGGREGATES_POINTERS = "AggregatesPointers"
    FUNCTION_ARGUMENTS = "FunctionArguments"


class Deadness(str, Enum):
    DEAD = "Dead"
    LIVE = "Live"


class Strategy(str, Enum):
    DEAD_CODE = "dead_code"
    PIPELINE = "pipeline"
    SINGLE_COMPILER = "single_compiler"
    MULTI_COMPILER = "multi_compiler"

    @classmethod
    def parse(cls, value: Union[str, "Strategy"]) -> "Strategy":
        if isinstance(value, Strategy):
            return value
        normalized = str(value).strip().lower().replace("-", "_")
        for strategy in cls:
            if strategy.value == normalized or strategy.name.lower() == normalized:
                return strategy
        valid = ", ".join(s.value for s in cls)
        raise ValueError(f"Invalid strategy '{value}'. Must be one of: {valid}")


class Channel(str, Enum):
    RELEASE = "Release"
    TRUNK = "Trunk"


class SizeMetric(str, Enum):
    INSTRUCTION_COUNT = "InstructionCount"
    TEXT_SECTION_BYTES = "TextSectionBytes"


class FilterStatus(str, Enum):
    PASS = "Pass"
    REJECT = "Reject"
    SKIPPED = "Skipped"


# ============================================================
# THRESHOLD ARITHMETIC
# ============================================================

Threshold = Union[int, float, str, Fraction]


def as_fraction(value: Threshold) -> Fraction:
    """
    Convert a threshold to an exact rational.

    Floats go through their decimal repr so 0.05 becomes exactly 1/20.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def threshold_exceeded(offender_size: int, baseline_size: int, threshold: Threshold) -> bool:
    """
    Check whether an offender size exceeds the baseline by more than a threshold.

    Args:
        offender_size: Size produced by the suspected compiler/configuration
        baseline_size: Size of the reference compilation
        threshold: Relative tolerance (0.05 means 5%)

    Returns:
        True iff offender_size > baseline_size * (1 + threshold)

    Raises:
        DegenerateBaseline: If baseline_size is zero
        ValueError: If threshold is negative
    """
    t = as_fraction(threshold)
    if t < 0:
        raise ValueError(f"Invalid threshold {threshold}: must be >= 0")
    if baseline_size == 0:
        raise DegenerateBaseline("baseline size is 0 (empty function body)")
    return Fraction(offender_size) > Fraction(baseline_size) * (1 + t)


def render_fraction(value: Fraction) -> str:
    """Render an exact rational as an integer or a short decimal."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{float(value):.6g}"


def digest_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ============================================================
# MUTATION TYPES
# ============================================================

@dataclass(frozen=True)
class MutationInstruction:
    """One prompt fragment from the instruction catalog."""
    id: str
    category: Category
    text: str
    deadness: Deadness
    per_language_text: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.text or "\n" in self.text:
            raise ValueError(f"Instruction '{self.id}' text must be a single non-empty line")
        for language, text in self.per_language_text.items():
            if not text or "\n" in text:
                raise ValueError(
                    f"Instruction '{self.id}' text for '{language}' must be a single non-empty line"
                )

    def text_for(self, language: str) -> str:
        return self.per_language_text.get(language, self.text)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "category": self.category.value,
            "text": self.text,
            "deadness": self.deadness.value,
            "per_language_text": dict(sorted(self.per_language_text.items())),
        }


@dataclass(frozen=True)
class LanguageProfile:
    """Everything language-specific a campaign needs."""
    id: str
    display_name: str
    seed_code: str
    function_symbol: str
    driver_template: str
    call_template: str
    definition_pattern: str
    source_suffix: str
    control_keywords: Tuple[str, ...] = ("if", "for", "while", "switch")
    driver_strip_lines: Tuple[str, ...] = ()
    has_unions: bool = True


@dataclass(frozen=True)
class SourceProgram:
    """A mutant together with its lineage back to the seed."""
    language: str
    code: str
    step_index: int = 0
    lineage: Tuple[str, ...] = ()
    parent_digest: Optional[str] = None

    def __post_init__(self):
        if self.step_index != len(self.lineage):
            raise ValueError(
                f"step_index {self.step_index} does not match lineage length {len(self.lineage)}"
            )

    @property
    def digest(self) -> str:
        return digest_text(self.code)

    def derive(self, code: str, instruction_id: str) -> "SourceProgram":
        """Return the next step of this program after applying one instruction."""
        return SourceProgram(
            language=self.language,
            code=code,
            step_index=self.step_index + 1,
            lineage=self.lineage + (instruction_id,),
            parent_digest=self.digest,
        )

    def with_code(self, code: str) -> "SourceProgram":
        """Same lineage, different text (used for driver-wrapped copies)."""
        return SourceProgram(self.language, code, self.step_index, self.lineage, self.parent_digest)


# ============================================================
# TOOLCHAIN TYPES
# ============================================================

@dataclass(frozen=True)
class CompilerSpec:
    """
    One entry of the compiler matrix.

    invocation is a command template with {input}, {output} and {flags}
    placeholders, e.g. "gcc-14 {flags} -S -o {output} {input}".
    """
    id: str
    invocation: str
    version_label: str = ""
    channel: Channel = Channel.RELEASE
    size_opt_flag: str = "-Os"
    perf_opt_flag: str = "-O3"
    other_flags: Tuple[str, ...] = ()
    family: str = ""

    def __post_init__(self):
        if "{input}" not in self.invocation or "{output}" not in self.invocation:
            raise ValueError(
                f"Compiler '{self.id}' invocation must contain {{input}} and {{output}} placeholders"
            )
        if not self.family:
            object.__setattr__(self, "family", self.id.split("-")[0])

    @property
    def all_flags(self) -> List[str]:
        """Size flag first, then the performance flag, then any others (deduplicated)."""
        flags = []
        for flag in (self.size_opt_flag, self.perf_opt_flag) + tuple(self.other_flags):
            if flag and flag not in flags:
                flags.append(flag)
        return flags

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CompilerSpec":
        return cls(
            id=data["id"],
            invocation=data["invocation"],
            version_label=data.get("version_label", ""),
            channel=Channel(data.get("channel", Channel.RELEASE.value)),
            size_opt_flag=data.get("size_opt_flag", "-Os"),
            perf_opt_flag=data.get("perf_opt_flag", "-O3"),
            other_flags=tuple(data.get("other_flags", ())),
            family=data.get("family", ""),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "invocation": self.invocation,
            "version_label": self.version_label,
            "channel": self.channel.value,
            "size_opt_flag": self.size_opt_flag,
            "perf_opt_flag": self.perf_opt_flag,
            "other_flags": list(self.other_flags),
            "family": self.family,
        }


@dataclass(frozen=True)
class SizeMeasurement:
    metric: SizeMetric
    value: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"Size must be non-negative, got {self.value}")


@dataclass(frozen=True)
class CompileOutcome:
    """Result of one compiler invocation."""
    compiler_id: str
    opt_flag: str
    success: bool
    assembly: str = ""
    diagnostics: str = ""
    size: Optional[SizeMeasurement] = None
    wall_time: float = 0.0

    def __post_init__(self):
        if self.success and self.size is None:
            raise ValueError("A successful compile must carry a size")
        if not self.success and self.assembly:
            raise ValueError("A failed compile must not carry assembly")

    @property
    def size_value(self) -> Optional[int]:
        return self.size.value if self.size else None


@dataclass(frozen=True)
class SizeSample:
    """A (compiler, flag, size) point referenced by a candidate."""
    compiler_id: str
    opt_flag: str
    size: int

    def label(self) -> str:
        return f"{self.compiler_id} {self.opt_flag}"


# ============================================================
# VIOLATIONS
# ============================================================

@dataclass(frozen=True)
class ViolationCandidate:
    """A suspicious size delta, pending false-positive filtering."""
    strategy: Strategy
    program: SourceProgram
    baseline: SizeSample
    offender: SizeSample
    threshold: Fraction = Fraction(0)
    outcomes: Tuple[CompileOutcome, ...] = ()
    baseline_step: Optional[int] = None

    @property
    def ratio(self) -> Fraction:
        if self.baseline.size == 0:
            raise DegenerateBaseline("baseline size is 0 (empty function body)")
        return Fraction(self.offender.size, self.baseline.size)

    def recheck(self) -> bool:
        """Re-evaluate the recorded inequality from this record alone."""
        return threshold_exceeded(self.offender.size, self.baseline.size, self.threshold)

    def inequality(self) -> str:
        """Human-readable form of the exact inequality that triggered."""
        if self.strategy is Strategy.DEAD_CODE:
            step = self.program.step_index
            base_step = self.baseline_step or 0
            return (
                f"size_step{step}({self.offender.label()}) = {self.offender.size} > "
                f"size_step{base_step}({self.baseline.label()}) = {self.baseline.size}"
            )
        bound = Fraction(self.baseline.size) * (1 + self.threshold)
        return (
            f"size({self.offender.label()}) = {self.offender.size} > "
            f"size({self.baseline.label()}) = {self.baseline.size} "
            f"x (1 + {render_fraction(self.threshold)}) = {render_fraction(bound)}"
        )


@dataclass(frozen=True)
class FilterRecord:
    """Evidence left by one false-positive filter."""
    filter_name: str
    status: FilterStatus
    detail: str = ""
    required: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "filter": self.filter_name,
            "status": self.status.value,
            "detail": self.detail,
            "required": self.required,
        }


@dataclass(frozen=True)
class ViolationSignature:
    """Per-release exhibition vector, optionally with the culprit revision."""
    version_ids: Tuple[str, ...]
    exhibits: Tuple[bool, ...]
    culprit_revision: Optional[str] = None
    annotations: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.version_ids) != len(self.exhibits):
            raise ValueError("exhibits must align with version_ids")

    @property
    def trunk_only(self) -> bool:
        return not any(self.exhibits)

    def is_duplicate_of(self, other: "ViolationSignature") -> bool:
        """Equal exhibits vectors, or equal known culprit revisions."""
        if self.culprit_revision is not None and self.culprit_revision == other.culprit_revision:
            return True
        return self.version_ids == other.version_ids and self.exhibits == other.exhibits

    def overlaps(self, other: "ViolationSignature") -> bool:
        """Both exhibit on at least one common release but the vectors differ."""
        if self.version_ids != other.version_ids or self.exhibits == other.exhibits:
            return False
        return any(a and b for a, b in zip(self.exhibits, other.exhibits))

    def with_culprit(self, revision: Optional[str]) -> "ViolationSignature":
        return ViolationSignature(self.version_ids, self.exhibits, revision, dict(self.annotations))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version_ids": list(self.version_ids),
            "exhibits": list(self.exhibits),
            "culprit_revision": self.culprit_revision,
            "annotations": dict(sorted(self.annotations.items())),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ViolationSignature":
        return cls(
            version_ids=tuple(data["version_ids"]),
            exhibits=tuple(bool(x) for x in data["exhibits"]),
            culprit_revision=data.get("culprit_revision"),
            annotations=dict(data.get("annotations", {})),
        )


@dataclass(frozen=True)
class Violation:
    """A candidate that survived every enabled filter."""
    candidate: ViolationCandidate
    filter_evidence: Tuple[FilterRecord, ...]
    signature: Optional[ViolationSignature] = None
    report_path: Optional[str] = None

    def __post_init__(self):
        for record in self.filter_evidence:
            if record.status is FilterStatus.REJECT:
                raise ValueError(f"Violation cannot carry a Reject from {record.filter_name}")
            if record.status is FilterStatus.SKIPPED and record.required:
                raise ValueError(f"Required filter {record.filter_name} was skipped")

    def with_signature(self, signature: ViolationSignature) -> "Violation":
        return Violation(self.candidate, self.filter_evidence, signature, self.report_path)

    def with_report_path(self, path: str) -> "Violation":
        return Violation(self.candidate, self.filter_evidence, self.signature, path)


# ============================================================
# STATISTICS
# ============================================================

@dataclass(frozen=True)
class SessionStats:
    """Campaign-level statistics with the columns of the results table."""
    total_programs: int = 0
    compilable: int = 0
    violations: int = 0
    steps_min: int = 0
    steps_mean: float = 0.0
    steps_max: int = 0

    def __post_init__(self):
        if not (self.violations <= self.compilable <= self.total_programs):
            raise ValueError("Expected violations <= compilable <= total_programs")
        if self.total_programs and not (self.steps_min <= self.steps_mean <= self.steps_max):
            raise ValueError("Expected steps_min <= steps_mean <= steps_max")

    @property
    def compilable_pct(self) -> float:
        return percentage(self.compilable, self.total_programs)

    @property
    def violation_pct(self) -> float:
        return percentage(self.violations, self.total_programs)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["compilable_pct"] = self.compilable_pct
        data["violation_pct"] = self.violation_pct
        return data


def percentage(part: int, total: int) -> float:
    """Percentage rounded to two decimals; 0.0 for an empty total."""
    if total == 0:
        return 0.0
    return round(100.0 * part / total, 2)
