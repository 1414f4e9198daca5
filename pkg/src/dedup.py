"""
Violation deduplication

Fingerprints a confirmed violation by re-checking it against released
compiler versions, finds the first revision that introduced it, and groups
violations that share a fingerprint or a culprit.
"""

import logging
import shlex
import subprocess
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, List, Dict, Tuple, Callable, Sequence

from core_model import (
    Strategy, CompilerSpec, CompileOutcome, SourceProgram, LanguageProfile,
    Violation, ViolationCandidate, ViolationSignature, threshold_exceeded,
)
from errors import NotBisectable, DegenerateBaseline
from strategies import StrategyConfig, pipeline_check
from toolchain import Toolchain, scratch_dir

logger = logging.getLogger(__name__)

COMPILE_FAILURE = "compile failure"
DEFAULT_PROVIDER_TIMEOUT = 600.0

RevisionCheck = Callable[[str], Optional[bool]]


# ============================================================
# RELEASE SCREENING
# ============================================================

def _compile(toolchain: Toolchain, compiler: CompilerSpec, flag: str, program: SourceProgram,
             scratch: Path, profile: LanguageProfile) -> Optional[CompileOutcome]:
    outcome = toolchain.run(compiler, flag, program, scratch, profile.source_suffix).outcome
    return outcome if outcome.success else None


def recheck_with(
    candidate: ViolationCandidate,
    substitute: CompilerSpec,
    toolchain: Toolchain,
    profile: LanguageProfile,
    scratch: Path,
) -> Optional[bool]:
    """
    Re-run the candidate's check with another compiler in the offender's place.

    Returns:
        True/False for trigger/no trigger, None if the substitute fails to
        compile the test case
    """
    program = candidate.program
    flag = candidate.offender.opt_flag

    if candidate.strategy is Strategy.DEAD_CODE:
        seed = SourceProgram(language=program.language, code=profile.seed_code)
        before = _compile(toolchain, substitute, flag, seed, Path(scratch) / "seed", profile)
        after = _compile(toolchain, substitute, flag, program, Path(scratch) / "mutant", profile)
        if before is None or after is None:
            return None
        return after.size_value > before.size_value

    if candidate.strategy is Strategy.PIPELINE:
        outcomes = []
        for opt_flag in substitute.all_flags:
            outcome = _compile(toolchain, substitute, opt_flag, program, Path(scratch) / "flags", profile)
            if outcome is None:
                return None
            outcomes.append(outcome)
        return pipeline_check(outcomes, substitute.size_opt_flag, program, candidate.threshold) is not None

    outcome = _compile(toolchain, substitute, flag, program, scratch, profile)
    if outcome is None:
        return None
    try:
        return threshold_exceeded(outcome.size_value, candidate.baseline.size, candidate.threshold)
    except DegenerateBaseline:
        return False


def release_screen(
    violation: Violation,
    release_matrix: Sequence[CompilerSpec],
    toolchain: Toolchain,
    profile: LanguageProfile,
    workdir: Path,
) -> ViolationSignature:
    """
    Exhibition vector of a violation over released versions, oldest first.

    Args:
        violation: Confirmed violation (its test case is never modified)
        release_matrix: Same family as the offender, ordered oldest to newest
        toolchain: Toolchain used for the re-checks
        profile: Language of the test case
        workdir: Scratch root for the screening compiles
    """
    exhibits = []
    annotations = {}
    for compiler in release_matrix:
        scratch = scratch_dir(workdir, "screen", compiler.id)
        result = recheck_with(violation.candidate, compiler, toolchain, profile, scratch)
        if result is None:
            annotations[compiler.id] = COMPILE_FAILURE
            result = False
        logger.info(f"  {compiler.id}: {'exhibits' if result else 'clean'}")
        exhibits.append(result)
    return ViolationSignature(
        version_ids=tuple(c.id for c in release_matrix),
        exhibits=tuple(exhibits),
        culprit_revision=violation.signature.culprit_revision if violation.signature else None,
        annotations=annotations,
    )


# ============================================================
# BISECTION
# ============================================================

@dataclass(frozen=True)
class BisectResult:
    culprit: str
    index: int
    evaluations: int
    skipped: Tuple[str, ...] = ()


def bisect_revisions(revisions: Sequence[str], exhibits: RevisionCheck) -> BisectResult:
    """
    First revision where exhibits turns true.

    The endpoints are verified first. Revisions for which exhibits returns None
    (no compiler available) are skipped and the search continues over
    the remaining ones.

    Raises:
        NotBisectable: If the first revision already exhibits or the last one does not
    """
    if len(revisions) < 2:
        raise NotBisectable(f"Need at least 2 revisions, got {len(revisions)}")
    evaluations = 0

    def check(index: int) -> Optional[bool]:
        nonlocal evaluations
        evaluations += 1
        result = exhibits(revisions[index])
        logger.debug(f"  revision {revisions[index]}: {result}")
        return result

    if check(0) is not False:
        raise NotBisectable(f"Start revision {revisions[0]} already exhibits (or is unavailable)")
    last = len(revisions) - 1
    if check(last) is not True:
        raise NotBisectable(f"End revision {revisions[last]} does not exhibit (or is unavailable)")

    good, bad = 0, last
    skipped = set()
    while True:
        pool = [i for i in range(good + 1, bad) if i not in skipped]
        if not pool:
            break
        mid = pool[len(pool) // 2]
        result = check(mid)
        if result is None:
            logger.warning(f"Revision {revisions[mid]} unavailable, skipping")
            skipped.add(mid)
        elif result:
            bad = mid
        else:
            good = mid

    return BisectResult(
        culprit=revisions[bad],
        index=bad,
        evaluations=evaluations,
        skipped=tuple(revisions[i] for i in sorted(skipped)),
    )


def compiler_at_revision(
    compiler: CompilerSpec,
    provider_command: str,
    revision: str,
    timeout: float = DEFAULT_PROVIDER_TIMEOUT,
) -> Optional[CompilerSpec]:
    """
    Ask the provider command for a compiler built at a revision.

    The command is invoked as `<command> <revision>` and must print the
    compiler path; a nonzero exit or a run longer than timeout means the
    revision is unavailable.
    """
    argv = shlex.split(provider_command) + [revision]
    try:
        result = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        logger.warning(f"Provider command timed out after {timeout}s for {revision}")
        return None
    except OSError as e:
        logger.warning(f"Provider command failed for {revision}: {e}")
        return None
    path = result.stdout.strip().splitlines()[-1].strip() if result.stdout.strip() else ""
    if result.returncode != 0 or not path:
        return None
    tokens = shlex.split(compiler.invocation)
    invocation = shlex.join([path] + tokens[1:])
    return replace(compiler, id=f"{compiler.id}@{revision}", invocation=invocation,
                   version_label=revision)


def bisect_violation(
    violation: Violation,
    compiler: CompilerSpec,
    revisions: Sequence[str],
    provider_command: str,
    toolchain: Toolchain,
    profile: LanguageProfile,
    workdir: Path,
    provider_timeout: float = DEFAULT_PROVIDER_TIMEOUT,
) -> BisectResult:
    """
    Culprit revision of a violation, stored by the caller as culprit_revision.

    Args:
        violation: Confirmed violation
        compiler: Offending compiler spec; its binary is replaced per revision
        revisions: Ordered revision ids, first known clean, last known bad
        provider_command: Command mapping a revision id to a compiler path
        provider_timeout: Seconds before a provider run counts as unavailable
    """
    def exhibits_at(revision: str) -> Optional[bool]:
        substitute = compiler_at_revision(compiler, provider_command, revision, provider_timeout)
        if substitute is None:
            return None
        scratch = scratch_dir(workdir, "bisect", revision)
        return recheck_with(violation.candidate, substitute, toolchain, profile, scratch)

    result = bisect_revisions(revisions, exhibits_at)
    logger.info(f"Culprit revision {result.culprit} after {result.evaluations} revision checks")
    return result


# ============================================================
# GROUPING
# ============================================================

@dataclass
class DuplicateGroups:
    groups: List[List[str]] = field(default_factory=list)
    possibly_related: List[Tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            'groups': [list(g) for g in self.groups],
            'possibly_related': [list(p) for p in self.possibly_related],
        }


def group_duplicates(signatures: Dict[str, ViolationSignature]) -> DuplicateGroups:
    """
    Partition violations into duplicate groups.

    Equal exhibits vectors or equal culprit revisions put two violations in
    the same group (transitively). Pairs in different groups whose vectors
    overlap are listed as possibly related.
    """
    ids = sorted(signatures)
    parent = {i: i for i in ids}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for pos, a in enumerate(ids):
        for b in ids[pos + 1:]:
            if signatures[a].is_duplicate_of(signatures[b]):
                union(a, b)

    members: Dict[str, List[str]] = {}
    for i in ids:
        members.setdefault(find(i), []).append(i)
    groups = sorted(members.values(), key=lambda g: g[0])

    related = []
    for pos, a in enumerate(ids):
        for b in ids[pos + 1:]:
            if find(a) != find(b) and signatures[a].overlaps(signatures[b]):
                related.append((a, b))
    return DuplicateGroups(groups=groups, possibly_related=related)
