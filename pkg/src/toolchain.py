"""
Toolchain

Compiler invocation, size measurement, driver synthesis and the dynamic
checks (sanitizer build, coverage build, external validator) used by the
false-positive filters. Every subprocess runs inside its own scratch
directory under the campaign workdir.
"""

import difflib
import logging
import os
import re
import shlex
import shutil
import subprocess
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, List, Dict, Tuple, Iterable, Set

from core_model import (
    CompilerSpec, CompileOutcome, SizeMeasurement, SizeMetric, SourceProgram, LanguageProfile,
)
from errors import ToolchainMissing, CompileTimeout, MeasurementFailed, SignatureCorrupted, EnvironmentUnstable
from languages import defines_function, render_driver

logger = logging.getLogger(__name__)

DEFAULT_COMMENT_LEADERS = ("#", "//", ";", "@")
DEFAULT_DRIVER_INPUTS = (-1, 0, 1, 10)
TIMEOUT_DIAGNOSTIC = "timeout"

_SANITIZER_MARKERS = ("runtime error:", "Sanitizer", "SUMMARY: ")
_TOKEN = re.compile(r"\w+|[^\w\s]")
_WORD = re.compile(r"[A-Za-z_]\w*")
_CHAR_LITERAL = re.compile(r"'(?:\\[^'\n]{1,8}|[^'\\\n])'")
_CONDITION_KEYWORDS = frozenset({'if', 'while', 'for', 'switch'})
_BRACELESS_HEADER = re.compile(r"^(?:else|do|(?:if|while|for|switch)\s*\(.*\))$")
_HEADER_LINE = re.compile(
    r"^(?:.*\{|\}.*|else|do|(?:if|while|for|switch)\s*\(.*\)|while\s*\(.*\)\s*;|(?:case\b.*|default\s*):)$"
)


@dataclass
class ToolchainSettings:
    """
    How compiles are measured and how the dynamic checks are built.

    Invocation templates use the same {input}/{output} placeholders as
    compiler invocations. A check whose template is None is reported as
    unavailable and its filter records Skipped.
    """
    metric: SizeMetric = SizeMetric.INSTRUCTION_COUNT
    comment_leaders: Tuple[str, ...] = DEFAULT_COMMENT_LEADERS
    compile_timeout: float = 30.0
    run_timeout: float = 5.0
    driver_inputs: Tuple[int, ...] = DEFAULT_DRIVER_INPUTS
    assembler_invocation: str = "cc -c -o {output} {input}"
    size_tool: str = "size"
    sanitizer_invocation: Optional[str] = None
    coverage_invocation: Optional[str] = None
    gcov_tool: str = "gcov"
    validator_invocation: Optional[str] = None


@dataclass(frozen=True)
class ToolchainRun:
    """One compiler invocation with the digest of the code it compiled."""
    compiler: CompilerSpec
    flags: str
    input_digest: str
    outcome: CompileOutcome
    timeout: float


class RunVerdict(str, Enum):
    CLEAN = "Clean"
    FLAGGED = "Flagged"
    TIMEOUT = "Timeout"
    UNAVAILABLE = "Unavailable"


@dataclass(frozen=True)
class DynamicRun:
    """Result of a sanitizer or external-validator run."""
    verdict: RunVerdict
    report: str = ""


@dataclass(frozen=True)
class CoverageReport:
    line_counts: Optional[Dict[int, int]] = None
    terminated: bool = True
    exit_status: int = 0
    available: bool = True
    detail: str = ""

    def __post_init__(self):
        if not self.terminated and self.line_counts is not None:
            raise ValueError("A non-terminating run carries no line counts")


# ============================================================
# COMMAND TEMPLATES
# ============================================================

def expand_invocation(template: str, input_path: str, output_path: str, flags: str = "") -> List[str]:
    """
    Tokenise an invocation template into an argv list.

    A standalone {flags} token expands into the (shell-split) flag list;
    {input} and {output} are substituted inside any token.
    """
    argv = []
    for token in shlex.split(template):
        if token == "{flags}":
            argv.extend(shlex.split(flags))
            continue
        argv.append(token.replace("{input}", input_path).replace("{output}", output_path))
    return argv


def binary_exists(template: str) -> bool:
    """Does the first token of an invocation resolve to an executable?"""
    tokens = shlex.split(template)
    if not tokens:
        return False
    binary = tokens[0]
    if os.sep in binary:
        return Path(binary).exists()
    return shutil.which(binary) is not None


def require_binaries(compilers: Iterable[CompilerSpec]) -> None:
    """
    Raises:
        ToolchainMissing: Naming every compiler whose binary cannot be found
    """
    missing = [c.id for c in compilers if not binary_exists(c.invocation)]
    if missing:
        raise ToolchainMissing(f"Compiler binaries not found for: {', '.join(missing)}")


def scratch_dir(root: Path, *parts) -> Path:
    path = Path(root).joinpath(*[str(p) for p in parts])
    path.mkdir(parents=True, exist_ok=True)
    return path


# ============================================================
# SIZE
# ============================================================

def measure_size(
    assembly: str,
    metric: SizeMetric = SizeMetric.INSTRUCTION_COUNT,
    comment_leaders: Tuple[str, ...] = DEFAULT_COMMENT_LEADERS,
) -> SizeMeasurement:
    """
    Count instructions in assembly text.

    A line counts when it is non-empty after stripping, does not start with
    '.', does not end with ':' and does not start with a comment leader.

    Raises:
        ValueError: For TextSectionBytes, which needs the object file
            (see Toolchain.text_section_bytes)
    """
    if metric is not SizeMetric.INSTRUCTION_COUNT:
        raise ValueError(f"{metric.value} cannot be measured from assembly text alone")
    count = 0
    for raw in assembly.splitlines():
        line = raw.strip()
        if not line or line.startswith('.') or line.endswith(':'):
            continue
        if any(line.startswith(leader) for leader in comment_leaders):
            continue
        count += 1
    return SizeMeasurement(SizeMetric.INSTRUCTION_COUNT, count)


def parse_size_output(output: str) -> int:
    """Text column of Berkeley-format `size` output"""
    lines = [line for line in output.strip().splitlines() if line.strip()]
    if len(lines) < 2:
        raise ValueError(f"Unexpected size output: {output!r}")
    return int(lines[1].split()[0])


# ============================================================
# DRIVERS AND COVERAGE PARSING
# ============================================================

def synthesize_driver(
    program: SourceProgram,
    profile: LanguageProfile,
    inputs: Iterable[int] = DEFAULT_DRIVER_INPUTS,
) -> SourceProgram:
    """
    Append an entry point calling the function under test once per input.

    Raises:
        SignatureCorrupted: If the function under test is no longer defined
    """
    if not defines_function(program.code, profile):
        raise SignatureCorrupted(
            f"'{profile.function_symbol}' is not defined in step {program.step_index} mutant"
        )
    return program.with_code(render_driver(program.code, profile, inputs))


def driver_line_map(code: str, profile: LanguageProfile) -> Dict[int, int]:
    """Mutant line number -> line number of the same line inside the driver source"""
    offset = profile.driver_template.split('{code}', 1)[0].count('\n')
    mapping = {}
    driver_line = offset
    for number, line in enumerate(code.splitlines(), start=1):
        if line.strip() in profile.driver_strip_lines:
            continue
        driver_line += 1
        mapping[number] = driver_line
    return mapping


def parse_gcov(text: str) -> Dict[int, int]:
    """
    Line counts from a textual .gcov file.

    Non-executable lines ('-') and never-executed lines ('#####', '=====')
    count as 0; header lines (line number 0) are skipped.
    """
    counts = {}
    for raw in text.splitlines():
        parts = raw.split(':', 2)
        if len(parts) < 3:
            continue
        count_field, line_field = parts[0].strip(), parts[1].strip()
        if not line_field.isdigit():
            continue
        lineno = int(line_field)
        if lineno == 0:
            continue
        count_field = count_field.rstrip('*')
        if count_field.isdigit():
            count = int(count_field)
        else:
            count = 0
        counts[lineno] = counts.get(lineno, 0) + count
    return counts


def _tokens_with_lines(code: str) -> Tuple[List[str], List[int]]:
    tokens, lines = [], []
    for number, line in enumerate(code.splitlines(), start=1):
        for match in _TOKEN.finditer(line):
            tokens.append(match.group(0))
            lines.append(number)
    return tokens, lines


def added_lines(previous: str, mutated: str) -> Set[int]:
    """
    Lines of the mutated code holding inserted or replaced tokens.

    The diff works on tokens, so re-indenting or re-wrapping existing code
    does not mark lines as added.
    """
    old_tokens, _ = _tokens_with_lines(previous)
    new_tokens, new_lines = _tokens_with_lines(mutated)
    matcher = difflib.SequenceMatcher(a=old_tokens, b=new_tokens, autojunk=False)
    result = set()
    for tag, _, _, j1, j2 in matcher.get_opcodes():
        if tag in ('insert', 'replace'):
            result.update(new_lines[j1:j2])
    return result


def _next_significant(code: str, pos: int) -> int:
    while pos < len(code) and code[pos].isspace():
        pos += 1
    return pos


def _line_is_blank_before(code: str, pos: int) -> bool:
    return not code[code.rfind('\n', 0, pos) + 1:pos].strip()


def split_blocks(code: str, paren_conditions: bool = True) -> str:
    """
    Lay code out so block headers, statements and closing braces each sit on
    their own line.

    Only line breaks and indentation change, so the token stream and the
    program are the same. Braces opening an initializer stay inline.
    Preprocessor lines, comments and literals are copied untouched.

    Args:
        code: Source text
        paren_conditions: Break after a parenthesized if/while/for/switch
            condition that has no braces (C family only; Swift and Rust
            conditions are not parenthesized)
    """
    out: List[str] = []
    n = len(code)
    i = 0
    paren = 0
    init_depth = 0
    condition_depth: Optional[int] = None
    awaiting_condition = False
    last, last_word = '', None

    while i < n:
        ch = code[i]

        if ch == '#' and _line_is_blank_before(code, i):
            end = i
            while True:
                k = code.find('\n', end)
                k = n if k < 0 else k
                if k < n and code[end:k].rstrip().endswith('\\'):
                    end = k + 1
                    continue
                break
            out.extend(('\n', code[i:k], '\n'))
            i = k
            continue
        if code.startswith('//', i):
            k = code.find('\n', i)
            k = n if k < 0 else k
            out.append(code[i:k])
            i = k
            continue
        if code.startswith('/*', i):
            k = code.find('*/', i + 2)
            k = n if k < 0 else k + 2
            out.append(code[i:k])
            i = k
            continue
        if ch == '"':
            j = i + 1
            while j < n and code[j] not in '"\n':
                j += 2 if code[j] == '\\' else 1
            j = min(j + 1, n)
            out.append(code[i:j])
            last, last_word = '"', None
            i = j
            continue
        if ch == "'":
            literal = _CHAR_LITERAL.match(code, i)
            if literal:
                out.append(literal.group(0))
                last, last_word = "'", None
                i = literal.end()
                continue

        word = _WORD.match(code, i)
        if word:
            text = word.group(0)
            out.append(text)
            last, last_word = text[-1], text
            i = word.end()
            if paren_conditions and init_depth == 0:
                nxt = _next_significant(code, i)
                if text in _CONDITION_KEYWORDS and code.startswith('(', nxt):
                    awaiting_condition = True
                elif text in ('else', 'do') and not (
                    code.startswith('{', nxt) or re.match(r'if\b', code[nxt:])
                ):
                    out.append('\n')
            continue

        if ch == '(':
            paren += 1
            if awaiting_condition:
                condition_depth, awaiting_condition = paren, False
            out.append(ch)
        elif ch == ')':
            out.append(ch)
            if condition_depth == paren:
                condition_depth = None
                nxt = _next_significant(code, i + 1)
                if init_depth == 0 and nxt < n and code[nxt] not in '{;':
                    out.append('\n')
            paren -= 1
        elif ch == '{':
            initializer = bool(last) and last in '=,(['
            if init_depth > 0 or paren > 0 or initializer or last_word == 'return':
                init_depth += 1
                out.append(ch)
            else:
                out.extend((ch, '\n'))
        elif ch == '}':
            if init_depth > 0:
                init_depth -= 1
                out.append(ch)
            else:
                out.extend(('\n', ch))
                nxt = _next_significant(code, i + 1)
                if nxt < n and code[nxt] not in ';,)':
                    out.append('\n')
        elif ch == ';':
            out.append(ch)
            if paren == 0 and init_depth == 0:
                out.append('\n')
        else:
            out.append(ch)

        if not ch.isspace():
            last, last_word = ch, None
        i += 1

    lines = (line.strip() for line in ''.join(out).splitlines())
    return '\n'.join(line for line in lines if line)


def is_block_header(line: str) -> bool:
    """Block openers, closing braces, else/do, braceless headers and labels"""
    return _HEADER_LINE.match(line.strip()) is not None


def _closing_lines(lines: List[str]) -> Dict[int, int]:
    """Opening line number -> line number of its closing brace"""
    stack, closing = [], {}
    for number, line in enumerate(lines, start=1):
        text = line.strip()
        if text.startswith('}') and stack:
            closing[stack.pop()] = number
        if text.endswith('{'):
            stack.append(number)
    return closing


def _governed_lines(lines: List[str], number: int, closing: Dict[int, int]) -> List[int]:
    text = lines[number - 1].strip()
    if text.endswith('{'):
        return list(range(number + 1, closing.get(number, len(lines) + 1)))
    if _BRACELESS_HEADER.match(text) and number < len(lines):
        return [number + 1] + _governed_lines(lines, number + 1, closing)
    return []


def inserted_body_lines(previous: str, mutated: str) -> Set[int]:
    """
    Statement lines the mutation inserted, or put under an inserted or
    changed header.

    Both texts are expected in split_blocks layout. Header lines themselves
    are left out: the condition of a dead construct is still evaluated.
    """
    lines = mutated.splitlines()
    closing = _closing_lines(lines)
    selected = set()
    for number in added_lines(previous, mutated):
        if is_block_header(lines[number - 1]):
            selected.update(_governed_lines(lines, number, closing))
        else:
            selected.add(number)
    return {number for number in selected if not is_block_header(lines[number - 1])}


# ============================================================
# TOOLCHAIN
# ============================================================

class Toolchain:
    """Runs compilers and dynamic checks inside per-step scratch directories."""

    def __init__(self, settings: Optional[ToolchainSettings] = None):
        self.settings = settings or ToolchainSettings()

    def _source_path(self, scratch: Path, program: SourceProgram, profile_suffix: str, stem: str) -> Path:
        path = Path(scratch) / f"{stem}{profile_suffix}"
        path.write_text(program.code + "\n", encoding='utf-8')
        return path

    def command_line(self, compiler: CompilerSpec, opt_flag: str, input_path: str, output_path: str) -> List[str]:
        return expand_invocation(compiler.invocation, input_path, output_path, opt_flag)

    def compile_to_asm(
        self,
        compiler: CompilerSpec,
        opt_flag: str,
        program: SourceProgram,
        scratch: Path,
        source_suffix: str = ".c",
        timeout: Optional[float] = None,
    ) -> CompileOutcome:
        """
        Compile a program to assembly and measure it.

        Raises:
            ToolchainMissing: If the compiler binary does not exist
            CompileTimeout: If the compiler exceeds the timeout
        """
        if not program.code.strip():
            raise ValueError("Cannot compile empty program")
        if not binary_exists(compiler.invocation):
            raise ToolchainMissing(f"Compiler binary for '{compiler.id}' not found: {compiler.invocation}")

        timeout = timeout or self.settings.compile_timeout
        scratch = Path(scratch)
        scratch.mkdir(parents=True, exist_ok=True)
        flag_stem = re.sub(r'[^\w.-]', '_', opt_flag) or 'noflag'
        source = self._source_path(scratch, program, source_suffix, "mutant")
        output = scratch / f"mutant{flag_stem}.s"
        argv = self.command_line(compiler, opt_flag, str(source), str(output))
        logger.debug(f"[{compiler.id}] {shlex.join(argv)}")

        started = time.monotonic()
        try:
            result = subprocess.run(argv, cwd=scratch, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            outcome = CompileOutcome(compiler.id, opt_flag, False, diagnostics=TIMEOUT_DIAGNOSTIC,
                                     wall_time=timeout)
            raise CompileTimeout(f"{compiler.id} {opt_flag} exceeded {timeout}s", outcome)
        wall_time = time.monotonic() - started

        if result.returncode != 0:
            diagnostics = (result.stderr or result.stdout).strip() or f"exit status {result.returncode}"
            return CompileOutcome(compiler.id, opt_flag, False, diagnostics=diagnostics, wall_time=wall_time)
        if not output.exists():
            return CompileOutcome(compiler.id, opt_flag, False, diagnostics="no assembly produced",
                                  wall_time=wall_time)

        assembly = output.read_text(encoding='utf-8', errors='replace')
        try:
            size = self.measure(assembly, output, scratch)
        except MeasurementFailed as e:
            logger.warning(f"[{compiler.id}] {opt_flag}: size measurement failed: {e}")
            return CompileOutcome(compiler.id, opt_flag, False, diagnostics=f"measurement failed: {e}",
                                  wall_time=wall_time)
        return CompileOutcome(compiler.id, opt_flag, True, assembly=assembly, size=size, wall_time=wall_time)

    def run(
        self,
        compiler: CompilerSpec,
        opt_flag: str,
        program: SourceProgram,
        scratch: Path,
        source_suffix: str = ".c",
    ) -> ToolchainRun:
        """compile_to_asm with timeouts folded into a failed outcome"""
        timeout = self.settings.compile_timeout
        try:
            outcome = self.compile_to_asm(compiler, opt_flag, program, scratch, source_suffix, timeout)
        except CompileTimeout as e:
            logger.warning(str(e))
            outcome = e.outcome
        return ToolchainRun(compiler, opt_flag, program.digest, outcome, timeout)

    def measure(self, assembly: str, asm_path: Path, scratch: Path) -> SizeMeasurement:
        if self.settings.metric is SizeMetric.TEXT_SECTION_BYTES:
            return self.text_section_bytes(asm_path, scratch)
        return measure_size(assembly, self.settings.metric, self.settings.comment_leaders)

    def text_section_bytes(self, asm_path: Path, scratch: Path) -> SizeMeasurement:
        """
        Assemble the output and read the text section size.

        Raises:
            ToolchainMissing: If the assembler or size tool does not exist
            MeasurementFailed: If either tool fails, times out or prints unreadable output
        """
        obj = Path(scratch) / (Path(asm_path).stem + ".o")
        argv = expand_invocation(self.settings.assembler_invocation, str(asm_path), str(obj))
        if not binary_exists(self.settings.assembler_invocation) or shutil.which(self.settings.size_tool) is None:
            raise ToolchainMissing(f"TextSectionBytes needs '{argv[0]}' and '{self.settings.size_tool}'")
        try:
            subprocess.run(argv, cwd=scratch, capture_output=True, text=True,
                           timeout=self.settings.compile_timeout, check=True)
            result = subprocess.run([self.settings.size_tool, str(obj)], cwd=scratch, capture_output=True,
                                    text=True, timeout=self.settings.compile_timeout, check=True)
            return SizeMeasurement(SizeMetric.TEXT_SECTION_BYTES, parse_size_output(result.stdout))
        except subprocess.CalledProcessError as e:
            tool = Path(str(e.cmd[0])).name
            detail = (e.stderr or e.stdout or "").strip() or f"exit status {e.returncode}"
            raise MeasurementFailed(f"{tool}: {detail}") from e
        except subprocess.TimeoutExpired as e:
            raise MeasurementFailed(f"{Path(str(e.cmd[0])).name}: timed out after {e.timeout}s") from e
        except ValueError as e:
            raise MeasurementFailed(str(e)) from e

    def verify_reproducible(
        self,
        compiler: CompilerSpec,
        opt_flag: str,
        program: SourceProgram,
        scratch: Path,
        source_suffix: str = ".c",
    ) -> CompileOutcome:
        """
        Compile twice and compare sizes.

        Raises:
            EnvironmentUnstable: If the two sizes differ
        """
        first = self.compile_to_asm(compiler, opt_flag, program, Path(scratch) / "first", source_suffix)
        second = self.compile_to_asm(compiler, opt_flag, program, Path(scratch) / "second", source_suffix)
        if first.size_value != second.size_value:
            raise EnvironmentUnstable(
                f"{compiler.id} {opt_flag}: repeated compile gave sizes "
                f"{first.size_value} and {second.size_value}"
            )
        return first

    # ----- dynamic checks -----

    def _build_and_run(
        self,
        template: str,
        program: SourceProgram,
        profile: LanguageProfile,
        scratch: Path,
        stem: str,
    ) -> Tuple[Optional[subprocess.CompletedProcess], str]:
        """Build an executable from a driver program and run it; (None, reason) when not possible"""
        scratch = Path(scratch)
        scratch.mkdir(parents=True, exist_ok=True)
        source = self._source_path(scratch, program, profile.source_suffix, stem)
        binary = scratch / f"{stem}.bin"
        argv = expand_invocation(template, str(source), str(binary))
        logger.debug(f"[{stem}] {shlex.join(argv)}")
        try:
            build = subprocess.run(argv, cwd=scratch, capture_output=True, text=True,
                                   timeout=self.settings.compile_timeout)
        except subprocess.TimeoutExpired:
            return None, "build timeout"
        if build.returncode != 0:
            raise SignatureCorrupted(f"Driver build failed: {build.stderr.strip()[:500]}")
        try:
            result = subprocess.run([str(binary)], cwd=scratch, capture_output=True, text=True,
                                    timeout=self.settings.run_timeout)
        except subprocess.TimeoutExpired:
            return None, TIMEOUT_DIAGNOSTIC
        return result, ""

    def run_sanitized(self, program_with_driver: SourceProgram, profile: LanguageProfile, scratch: Path) -> DynamicRun:
        """
        Build the driver with sanitizers and run it.

        Clean iff the binary exits 0 without any sanitizer report.
        """
        template = self.settings.sanitizer_invocation
        if not template or not binary_exists(template):
            return DynamicRun(RunVerdict.UNAVAILABLE, "no sanitizer toolchain configured")
        result, reason = self._build_and_run(template, program_with_driver, profile, scratch, "sanitized")
        if result is None:
            return DynamicRun(RunVerdict.TIMEOUT, reason)
        report = result.stderr.strip()
        if result.returncode != 0 or any(marker in report for marker in _SANITIZER_MARKERS):
            return DynamicRun(RunVerdict.FLAGGED, report[:2000] or f"exit status {result.returncode}")
        return DynamicRun(RunVerdict.CLEAN)

    def run_validator(self, program_with_driver: SourceProgram, profile: LanguageProfile, scratch: Path) -> DynamicRun:
        """External validator hook: exit 0 passes"""
        template = self.settings.validator_invocation
        if not template or not binary_exists(template):
            return DynamicRun(RunVerdict.UNAVAILABLE, "no external validator configured")
        scratch = Path(scratch)
        scratch.mkdir(parents=True, exist_ok=True)
        source = self._source_path(scratch, program_with_driver, profile.source_suffix, "validated")
        argv = expand_invocation(template, str(source), str(scratch / "validated.out"))
        try:
            result = subprocess.run(argv, cwd=scratch, capture_output=True, text=True,
                                    timeout=self.settings.run_timeout)
        except subprocess.TimeoutExpired:
            return DynamicRun(RunVerdict.TIMEOUT, TIMEOUT_DIAGNOSTIC)
        if result.returncode != 0:
            return DynamicRun(RunVerdict.FLAGGED, (result.stderr or result.stdout).strip()[:2000])
        return DynamicRun(RunVerdict.CLEAN)

    def line_coverage(self, program_with_driver: SourceProgram, profile: LanguageProfile, scratch: Path) -> CoverageReport:
        """
        Per-line execution counts of the driver source, built without optimization.

        Line numbers refer to the driver source (see driver_line_map).
        """
        template = self.settings.coverage_invocation
        if not template or not binary_exists(template) or shutil.which(self.settings.gcov_tool) is None:
            return CoverageReport(available=False, detail="no coverage toolchain configured")
        scratch = Path(scratch)
        result, reason = self._build_and_run(template, program_with_driver, profile, scratch, "covered")
        if result is None:
            return CoverageReport(terminated=False, exit_status=-1, detail=reason)

        gcda_files = sorted(scratch.glob("*.gcda"))
        if not gcda_files:
            return CoverageReport(available=False, exit_status=result.returncode, detail="no coverage data written")
        for gcda in gcda_files:
            subprocess.run([self.settings.gcov_tool, gcda.name], cwd=scratch, capture_output=True,
                           text=True, timeout=self.settings.compile_timeout)
        gcov_file = scratch / f"covered{profile.source_suffix}.gcov"
        if not gcov_file.exists():
            return CoverageReport(available=False, exit_status=result.returncode, detail="gcov produced no report")
        counts = parse_gcov(gcov_file.read_text(encoding='utf-8', errors='replace'))
        return CoverageReport(line_counts=counts, terminated=True, exit_status=result.returncode)
