"""
Violation reports

Canonical JSON reports (sorted keys, fixed schema version, no timestamps or
machine paths) with a shell reproduction script next to each one, the
append-only sink shared by concurrent workers, re-verification of stored
reports, and the campaign statistics outputs (JSON and optional Excel).
"""

import json
import logging
import shlex
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, List, Dict, Any, Sequence, Tuple, Union

import pandas as pd
from filelock import FileLock

from core_model import (
    Strategy, CompilerSpec, CompileOutcome, FilterRecord, FilterStatus, SizeSample, SourceProgram, LanguageProfile,
    SessionStats, Violation, ViolationCandidate, ViolationSignature, digest_text, render_fraction,
)
from errors import ReportError, DegenerateBaseline
from strategies import dead_code_check, pipeline_check, version_check, multi_compiler_check
from toolchain import Toolchain, expand_invocation, scratch_dir

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
STATS_SCHEMA_VERSION = 1
REPORT_FILE = "report.json"
REPRO_FILE = "repro.sh"
INDEX_FILE = "violations.jsonl"


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def report_id(candidate: ViolationCandidate) -> str:
    """Strategy plus a digest of the source and its lineage"""
    program = candidate.program
    key = digest_text(program.code + "\n" + "/".join(program.lineage))
    return f"{candidate.strategy.value}-{key[:12]}"


# ============================================================
# BUILDING REPORTS
# ============================================================

def _sample_dict(sample: SizeSample) -> Dict[str, Any]:
    return {'compiler_id': sample.compiler_id, 'opt_flag': sample.opt_flag, 'size': sample.size}


def _size_entries(candidate: ViolationCandidate) -> List[Dict[str, Any]]:
    entries = []
    for position, outcome in enumerate(candidate.outcomes):
        step = candidate.program.step_index
        if candidate.strategy is Strategy.DEAD_CODE and position == 0:
            step = candidate.baseline_step or 0
        entries.append({
            'compiler_id': outcome.compiler_id,
            'opt_flag': outcome.opt_flag,
            'step': step,
            'success': outcome.success,
            'size': outcome.size_value,
        })
    return entries


def involved_compilers(candidate: ViolationCandidate, compilers: Sequence[CompilerSpec]) -> List[CompilerSpec]:
    """Matrix entries that produced the candidate's outcomes, in matrix order"""
    ids = {o.compiler_id for o in candidate.outcomes} | {candidate.offender.compiler_id,
                                                         candidate.baseline.compiler_id}
    return [c for c in compilers if c.id in ids]


def build_report(
    violation: Violation,
    compilers: Sequence[CompilerSpec],
    profile: LanguageProfile,
    size_metric: str = "InstructionCount",
) -> Dict[str, Any]:
    candidate = violation.candidate
    program = candidate.program
    return {
        'schema_version': REPORT_SCHEMA_VERSION,
        'report_id': report_id(candidate),
        'language': program.language,
        'strategy': candidate.strategy.value,
        'source': program.code,
        'seed': profile.seed_code,
        'step': program.step_index,
        'lineage': list(program.lineage),
        'parent_digest': program.parent_digest,
        'baseline': _sample_dict(candidate.baseline),
        'offender': _sample_dict(candidate.offender),
        'baseline_step': candidate.baseline_step,
        'threshold': str(candidate.threshold),
        'ratio': str(candidate.ratio),
        'ratio_decimal': render_fraction(candidate.ratio),
        'inequality': candidate.inequality(),
        'decision': candidate.recheck(),
        'size_metric': size_metric,
        'sizes': _size_entries(candidate),
        'compilers': [c.to_dict() for c in involved_compilers(candidate, compilers)],
        'filter_evidence': [r.to_dict() for r in violation.filter_evidence],
        'signature': violation.signature.to_dict() if violation.signature else None,
    }


def repro_script(report: Dict[str, Any], source_suffix: str) -> str:
    """POSIX shell script re-running the exact compiler commands of a report"""
    compilers = {c['id']: CompilerSpec.from_dict(c) for c in report['compilers']}
    lines = [
        "#!/bin/sh",
        f"# {report['report_id']}: {report['inequality']}",
        "set -e",
        'cd "$(dirname "$0")"',
        f"cat > mutant{source_suffix} <<'SIZEPROBE_EOF'",
        report['source'],
        "SIZEPROBE_EOF",
    ]
    if report['strategy'] == Strategy.DEAD_CODE.value:
        lines += [f"cat > seed{source_suffix} <<'SIZEPROBE_EOF'", report['seed'], "SIZEPROBE_EOF"]

    seen = set()
    for entry in report['sizes']:
        compiler = compilers.get(entry['compiler_id'])
        if compiler is None:
            continue
        stem = "seed" if report['strategy'] == Strategy.DEAD_CODE.value and entry['step'] != report['step'] else "mutant"
        key = (stem, compiler.id, entry['opt_flag'])
        if key in seen:
            continue
        seen.add(key)
        flag_stem = entry['opt_flag'].strip('-') or 'noflag'
        output = f"{stem}-{compiler.id}-{flag_stem}.s"
        argv = expand_invocation(compiler.invocation, f"{stem}{source_suffix}", output, entry['opt_flag'])
        lines.append(f"echo '== {compiler.id} {entry['opt_flag']} ({stem}, expected size {entry['size']})'")
        lines.append(shlex.join(argv))
    return "\n".join(lines) + "\n"


def emit_report(
    violation: Violation,
    directory: Union[str, Path],
    compilers: Sequence[CompilerSpec],
    profile: LanguageProfile,
    size_metric: str = "InstructionCount",
) -> Path:
    """
    Write <directory>/<report-id>/report.json and repro.sh.

    Returns:
        Path of the JSON report

    Raises:
        OSError: If the output directory is not writable
    """
    report = build_report(violation, compilers, profile, size_metric)
    target = Path(directory) / report['report_id']
    target.mkdir(parents=True, exist_ok=True)
    path = target / REPORT_FILE
    path.write_text(canonical_json(report), encoding='utf-8')
    script = target / REPRO_FILE
    script.write_text(repro_script(report, profile.source_suffix), encoding='utf-8')
    script.chmod(0o755)
    logger.info(f"Report written: {path}")
    return path


# ============================================================
# READING REPORTS
# ============================================================

def load_report(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Raises:
        ReportError: If the file is unreadable, not JSON or of another schema
    """
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_FILE
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except OSError as e:
        raise ReportError(f"cannot read report ({e})", str(path))
    except json.JSONDecodeError as e:
        raise ReportError(f"not valid JSON ({e})", str(path))
    if not isinstance(data, dict) or data.get('schema_version') != REPORT_SCHEMA_VERSION:
        found = data.get('schema_version') if isinstance(data, dict) else None
        raise ReportError(
            f"unsupported schema_version {found!r} (expected {REPORT_SCHEMA_VERSION})", str(path)
        )
    return data


def candidate_from_report(report: Dict[str, Any]) -> ViolationCandidate:
    """Rebuild the candidate a report was written from"""
    def sample(entry: Dict[str, Any]) -> SizeSample:
        return SizeSample(entry['compiler_id'], entry['opt_flag'], int(entry['size']))

    program = SourceProgram(
        language=report['language'],
        code=report['source'],
        step_index=report['step'],
        lineage=tuple(report['lineage']),
        parent_digest=report.get('parent_digest'),
    )
    return ViolationCandidate(
        strategy=Strategy.parse(report['strategy']),
        program=program,
        baseline=sample(report['baseline']),
        offender=sample(report['offender']),
        threshold=Fraction(report['threshold']),
        baseline_step=report.get('baseline_step'),
    )


def signature_from_report(report: Dict[str, Any]) -> Optional[ViolationSignature]:
    data = report.get('signature')
    return ViolationSignature.from_dict(data) if data else None


def violation_from_report(report: Dict[str, Any]) -> Violation:
    evidence = tuple(
        FilterRecord(r['filter'], FilterStatus(r['status']), r.get('detail', ''), r.get('required', False))
        for r in report.get('filter_evidence', [])
    )
    return Violation(candidate_from_report(report), evidence, signature_from_report(report))


def update_report_signature(path: Union[str, Path], signature: ViolationSignature) -> Dict[str, Any]:
    """Store a (new) signature in an existing report, keeping the canonical format"""
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_FILE
    report = load_report(path)
    report['signature'] = signature.to_dict()
    path.write_text(canonical_json(report), encoding='utf-8')
    return report


@dataclass
class VerifyResult:
    report_id: str
    stored_decision: bool
    recomputed_decision: Optional[bool]
    sizes: Dict[str, Optional[int]] = field(default_factory=dict)
    detail: str = ""

    @property
    def matches(self) -> bool:
        return self.recomputed_decision is not None and self.recomputed_decision == self.stored_decision


def verify_report(
    report: Dict[str, Any],
    toolchain: Toolchain,
    profile: LanguageProfile,
    workdir: Union[str, Path],
) -> VerifyResult:
    """
    Re-decide a stored violation with the local toolchains.

    The stored decision is re-derived from the recorded sizes; the
    recomputed one from fresh compiles of the stored source.
    """
    candidate = candidate_from_report(report)
    try:
        stored = candidate.recheck()
    except DegenerateBaseline:
        stored = False
    result = VerifyResult(report['report_id'], stored, None)

    compilers = [CompilerSpec.from_dict(c) for c in report['compilers']]
    by_id = {c.id: c for c in compilers}
    program = candidate.program
    scratch = scratch_dir(workdir, "verify", report['report_id'])

    def compile_one(compiler: CompilerSpec, flag: str, prog: SourceProgram, where: str) -> CompileOutcome:
        outcome = toolchain.run(compiler, flag, prog, scratch / where, profile.source_suffix).outcome
        result.sizes[f"{where} {compiler.id} {flag}"] = outcome.size_value
        return outcome

    strategy = candidate.strategy
    if strategy is Strategy.DEAD_CODE:
        compiler = by_id[candidate.offender.compiler_id]
        seed = SourceProgram(language=program.language, code=report['seed'])
        before = compile_one(compiler, candidate.offender.opt_flag, seed, "seed")
        after = compile_one(compiler, candidate.offender.opt_flag, program, "mutant")
        if before.success and after.success:
            result.recomputed_decision = dead_code_check(after, before, program) is not None
    elif strategy is Strategy.PIPELINE:
        compiler = by_id[candidate.offender.compiler_id]
        flags = []
        for entry in report['sizes']:
            if entry['compiler_id'] == compiler.id and entry['opt_flag'] not in flags:
                flags.append(entry['opt_flag'])
        outcomes = [compile_one(compiler, flag, program, "mutant") for flag in flags]
        if all(o.success for o in outcomes):
            result.recomputed_decision = pipeline_check(
                outcomes, candidate.offender.opt_flag, program, candidate.threshold) is not None
    else:
        flags = {entry['compiler_id']: entry['opt_flag'] for entry in report['sizes']}
        outcomes = [compile_one(c, flags.get(c.id, c.size_opt_flag), program, "mutant") for c in compilers]
        if all(o.success for o in outcomes):
            check = version_check if strategy is Strategy.SINGLE_COMPILER else multi_compiler_check
            result.recomputed_decision = check(outcomes, program, candidate.threshold) is not None

    if result.recomputed_decision is None:
        result.detail = "local compile failed"
    return result


# ============================================================
# SINK
# ============================================================

class ReportSink:
    """
    Append-only report destination shared by concurrent episode workers.

    Writes are serialized by a thread lock and a file lock in the directory.
    """

    def __init__(self, directory: Union[str, Path], compilers: Sequence[CompilerSpec],
                 profile: LanguageProfile, size_metric: str = "InstructionCount"):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.compilers = list(compilers)
        self.profile = profile
        self.size_metric = size_metric
        self._lock = threading.Lock()
        self._file_lock = FileLock(str(self.directory / ".sink.lock"))

    def emit(self, violation: Violation, episode_id: str) -> Path:
        with self._lock, self._file_lock:
            path = emit_report(violation, self.directory, self.compilers, self.profile, self.size_metric)
            entry = {
                'episode_id': episode_id,
                'report': str(path.relative_to(self.directory)),
                'strategy': violation.candidate.strategy.value,
                'inequality': violation.candidate.inequality(),
            }
            with open(self.directory / INDEX_FILE, 'a', encoding='utf-8') as f:
                f.write(json.dumps(entry, sort_keys=True) + "\n")
        return path

    def report_paths(self) -> List[Path]:
        return sorted(self.directory.glob(f"*/{REPORT_FILE}"))


# ============================================================
# STATISTICS OUTPUT
# ============================================================

def stats_document(stats: SessionStats, summary: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    return {
        'schema_version': STATS_SCHEMA_VERSION,
        'stats': stats.to_dict(),
        'config': summary or {},
    }


def write_stats(stats: SessionStats, path: Union[str, Path], summary: Optional[Dict[str, Any]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(stats_document(stats, summary)), encoding='utf-8')
    return path


def export_excel(
    path: Union[str, Path],
    stats: SessionStats,
    episodes: pd.DataFrame,
    candidates: pd.DataFrame,
) -> Path:
    """Workbook with Summary, Episodes and Violations sheets"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    summary = pd.DataFrame([{
        'Total_Programs': stats.total_programs,
        'Compilable': stats.compilable,
        'Compilable_Pct': stats.compilable_pct,
        'Violations': stats.violations,
        'Violation_Pct': stats.violation_pct,
        'Steps_Min': stats.steps_min,
        'Steps_Mean': stats.steps_mean,
        'Steps_Max': stats.steps_max,
    }])
    violations = candidates[candidates['decision'] == 'Violation'] if not candidates.empty else candidates
    with pd.ExcelWriter(path, engine='openpyxl') as writer:
        summary.to_excel(writer, sheet_name="Summary", index=False)
        episodes.to_excel(writer, sheet_name="Episodes", index=False)
        violations.to_excel(writer, sheet_name="Violations", index=False)
    return path


def stats_table(stats: SessionStats) -> str:
    """One-row plain-text table of campaign statistics"""
    frame = pd.DataFrame([{
        'total': stats.total_programs,
        'compilable': f"{stats.compilable} ({stats.compilable_pct:.2f}%)",
        'violations': f"{stats.violations} ({stats.violation_pct:.2f}%)",
        'steps avg': f"{stats.steps_mean:.2f}",
        'steps min': stats.steps_min,
        'steps max': stats.steps_max,
    }])
    return frame.to_string(index=False)
