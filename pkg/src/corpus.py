"""
Regression corpus

Known missed-optimization cases shipped with the repo. Each entry is checked
against the locally configured compilers and reported as trigger or
no-trigger; the outcome depends on the installed compiler versions, so
nothing here ever fails a run.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, List, Dict, Any, Sequence, Union

from core_model import Channel, CompilerSpec, SourceProgram, Strategy
from errors import SizeProbeError
from languages import get_profile
from strategies import StrategyConfig, evaluate, required_compiles
from toolchain import Toolchain, scratch_dir

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"

TRIGGER = "trigger"
NO_TRIGGER = "no-trigger"
SKIPPED = "skipped"
ERROR = "error"


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    language: str
    file: str
    strategy: Strategy
    description: str = ""

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CorpusEntry":
        return cls(
            id=data['id'],
            language=data['language'],
            file=data['file'],
            strategy=Strategy.parse(data['strategy']),
            description=data.get('description', ''),
        )


@dataclass(frozen=True)
class CorpusResult:
    entry_id: str
    status: str
    detail: str = ""


def load_manifest(corpus_dir: Union[str, Path]) -> List[CorpusEntry]:
    with open(Path(corpus_dir) / MANIFEST, 'r', encoding='utf-8') as f:
        data = json.load(f)
    return [CorpusEntry.from_dict(entry) for entry in data['entries']]


def matrix_supports(strategy: Strategy, compilers: Sequence[CompilerSpec]) -> Optional[str]:
    """Why a compiler matrix cannot run a strategy, or None"""
    if not compilers:
        return "no compilers configured"
    if strategy is Strategy.SINGLE_COMPILER:
        if len(compilers) < 2 or compilers[-1].channel is not Channel.TRUNK:
            return "needs released versions followed by a trunk build"
    if strategy is Strategy.MULTI_COMPILER and len({c.family for c in compilers}) < 2:
        return "needs two compiler families"
    return None


def check_entry(
    entry: CorpusEntry,
    corpus_dir: Union[str, Path],
    language: str,
    compilers: Sequence[CompilerSpec],
    toolchain: Toolchain,
    workdir: Union[str, Path],
    overrides: Optional[Dict[str, Dict[str, Any]]] = None,
) -> CorpusResult:
    if entry.language != language:
        return CorpusResult(entry.id, SKIPPED, f"{entry.language} entry, matrix is for {language}")
    reason = matrix_supports(entry.strategy, compilers)
    if reason:
        return CorpusResult(entry.id, SKIPPED, reason)

    profile = get_profile(entry.language, overrides)
    code = (Path(corpus_dir) / entry.file).read_text(encoding='utf-8')
    program = SourceProgram(language=entry.language, code=code)
    seed = SourceProgram(language=entry.language, code=profile.seed_code)
    config = StrategyConfig(strategy=entry.strategy)
    by_id = {c.id: c for c in compilers}

    try:
        outcomes, baseline = {}, {}
        for compiler_id, flag in required_compiles(config, compilers):
            scratch = scratch_dir(workdir, "corpus", entry.id, compiler_id)
            outcomes[(compiler_id, flag)] = toolchain.run(
                by_id[compiler_id], flag, program, scratch, profile.source_suffix).outcome
            if entry.strategy is Strategy.DEAD_CODE:
                baseline[(compiler_id, flag)] = toolchain.run(
                    by_id[compiler_id], flag, seed, scratch / "seed", profile.source_suffix).outcome
    except SizeProbeError as e:
        return CorpusResult(entry.id, ERROR, str(e))

    failed = sorted(f"{k[0]} {k[1]}" for k, o in outcomes.items() if not o.success)
    if failed:
        return CorpusResult(entry.id, ERROR, f"does not compile with {', '.join(failed)}")
    candidate = evaluate(config, compilers, outcomes, program, baseline)
    if candidate is None:
        return CorpusResult(entry.id, NO_TRIGGER)
    return CorpusResult(entry.id, TRIGGER, candidate.inequality())


def check_corpus(
    corpus_dir: Union[str, Path],
    language: str,
    compilers: Sequence[CompilerSpec],
    toolchain: Toolchain,
    workdir: Union[str, Path],
    overrides: Optional[Dict[str, Dict[str, Any]]] = None,
) -> List[CorpusResult]:
    results = []
    for entry in load_manifest(corpus_dir):
        result = check_entry(entry, corpus_dir, language, compilers, toolchain, workdir, overrides)
        logger.info(f"{entry.id}: {result.status} {result.detail}")
        results.append(result)
    return results
