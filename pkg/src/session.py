"""
Campaign session

Runs episodes (seed -> mutate -> compile -> check -> filter, until a
violation, a non-compilable mutant or max_steps) and campaigns (episodes
repeated under a time or episode budget), persisting every step in the
campaign database and aggregating the statistics from it.
"""

import hashlib
import logging
import random
import time
from concurrent.futures import ThreadPoolExecutor, FIRST_COMPLETED, wait
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, List, Dict, Tuple

from campaign_db import (
    CampaignDatabase, VIOLATION, EXHAUSTED_STEPS, COMPILE_FAILURE, PROVIDER_FAILURE,
)
from config import CampaignConfig
from core_model import (
    CompileOutcome, CompilerSpec, FilterRecord, LanguageProfile, MutationInstruction,
    SessionStats, SourceProgram, Violation,
)
from errors import (
    ConfigError, ExtractionFailed, NoEligibleInstruction, ProviderError, SignatureCorrupted, ToolchainMissing,
)
from filters import FilterContext, run_filters, sanitizer_health_warning
from instruction_catalog import load_catalog
from mutation_engine import (
    MutationProvider, build_prompt, eligible_instructions, extract_code, make_provider, mutate,
    sample_instruction,
)
from reports import ReportSink, export_excel, write_stats
from strategies import OutcomeKey, StrategyConfig, evaluate, required_compiles
from toolchain import Toolchain, require_binaries, scratch_dir

logger = logging.getLogger(__name__)

DB_FILE = "campaign.db"
STATS_FILE = "stats.json"
EXCEL_FILE = "stats.xlsx"
REPORTS_DIR = "reports"


def episode_seed(campaign_seed: int, episode_index: int) -> int:
    """Per-episode rng seed, independent of worker scheduling"""
    digest = hashlib.sha256(f"{campaign_seed}:{episode_index}".encode("utf-8")).hexdigest()
    return int(digest[:16], 16)


def episode_name(episode_index: int) -> str:
    return f"ep{episode_index:05d}"


@dataclass
class EpisodeRecord:
    episode_id: str
    episode_index: int
    rng_seed: int
    outcome: str = EXHAUSTED_STEPS
    steps: int = 0
    lineage: Tuple[str, ...] = ()
    violation: Optional[Violation] = None
    report_path: Optional[str] = None
    evidence: List[Tuple[FilterRecord, ...]] = field(default_factory=list)
    detail: str = ""


@dataclass
class CampaignContext:
    """Shared, read-only state of a running campaign (plus the sink and database)."""
    config: CampaignConfig
    profile: LanguageProfile
    catalog: List[MutationInstruction]
    provider: MutationProvider
    toolchain: Toolchain
    strategy_config: StrategyConfig
    db: CampaignDatabase
    sink: ReportSink
    baseline_outcomes: Dict[OutcomeKey, CompileOutcome]

    @property
    def compilers(self) -> List[CompilerSpec]:
        return self.config.compilers

    @property
    def campaign_dir(self) -> Path:
        return self.config.campaign_dir


@dataclass
class CampaignResult:
    stats: SessionStats
    episodes: List[EpisodeRecord]
    health_warning: Optional[str] = None

    @property
    def violations(self) -> List[EpisodeRecord]:
        return [e for e in self.episodes if e.outcome == VIOLATION]


# ============================================================
# EPISODE
# ============================================================

def _request_code(context: CampaignContext, instruction: MutationInstruction, program: SourceProgram) -> str:
    """Mutate and extract, retrying once on an unusable response"""
    request = build_prompt(context.profile, instruction, program.code)
    for attempt in range(2):
        raw = mutate(context.provider, request)
        try:
            return extract_code(raw, context.profile)
        except ExtractionFailed as e:
            if attempt == 1:
                raise
            logger.warning(f"{e}; retrying once")


def compile_matrix(
    context: CampaignContext,
    program: SourceProgram,
    episode_id: str,
) -> Dict[OutcomeKey, CompileOutcome]:
    by_id = {c.id: c for c in context.compilers}
    outcomes = {}
    for compiler_id, flag in required_compiles(context.strategy_config, context.compilers):
        scratch = context.campaign_dir / episode_id / str(program.step_index) / compiler_id
        run = context.toolchain.run(by_id[compiler_id], flag, program, scratch, context.profile.source_suffix)
        outcomes[(compiler_id, flag)] = run.outcome
    return outcomes


def run_episode(context: CampaignContext, episode_index: int) -> EpisodeRecord:
    """
    One seed-to-termination run.

    Ends with Violation (first confirmed one), CompileFailure (no matrix
    entry compiles the mutant, or its driver cannot be built), ProviderFailure
    (not counted in the statistics) or ExhaustedSteps.
    """
    config = context.config
    episode_id = episode_name(episode_index)
    record = EpisodeRecord(episode_id, episode_index, episode_seed(config.seed, episode_index))
    rng = random.Random(record.rng_seed)
    db = context.db

    program = SourceProgram(language=context.profile.id, code=context.profile.seed_code)
    db.create_episode(episode_id, episode_index, record.rng_seed)
    db.add_step(episode_id, program, compilable=True)
    db.add_outcomes(episode_id, 0, list(context.baseline_outcomes.values()))
    history: Dict[OutcomeKey, List[int]] = {
        key: [outcome.size_value] for key, outcome in context.baseline_outcomes.items()
    }

    for step in range(1, config.max_steps + 1):
        try:
            instruction = sample_instruction(context.strategy_config.strategy, rng, context.catalog,
                                             program.code, context.profile)
        except NoEligibleInstruction as e:
            logger.warning(f"[{episode_id}] {e}")
            record.detail = str(e)
            break

        started = time.monotonic()
        try:
            code = _request_code(context, instruction, program)
        except ProviderError as e:
            logger.warning(f"[{episode_id}] step {step}: provider failure: {e}")
            record.outcome = PROVIDER_FAILURE
            record.detail = str(e)
            break
        latency = time.monotonic() - started

        program = program.derive(code, instruction.id)
        record.steps = step
        record.lineage = program.lineage
        outcomes = compile_matrix(context, program, episode_id)
        compilable = any(o.success for o in outcomes.values())
        db.add_step(episode_id, program, compilable, latency)
        db.add_outcomes(episode_id, step, list(outcomes.values()))
        logger.info(f"[{episode_id}] step {step}: {instruction.id} -> "
                    + ", ".join(f"{k[0]} {k[1]}={o.size_value}" for k, o in sorted(outcomes.items())))

        if not compilable:
            record.outcome = COMPILE_FAILURE
            record.detail = "mutant does not compile"
            break
        if not all(o.success for o in outcomes.values()):
            logger.info(f"[{episode_id}] step {step}: partial compile failure, skipping check")
            continue
        for key, outcome in outcomes.items():
            history.setdefault(key, []).append(outcome.size_value)

        candidate = evaluate(context.strategy_config, context.compilers, outcomes, program,
                             context.baseline_outcomes)
        if candidate is None:
            continue
        logger.info(f"[{episode_id}] candidate: {candidate.inequality()}")

        filter_context = FilterContext(
            toolchain=context.toolchain,
            profile=context.profile,
            scratch=scratch_dir(context.campaign_dir, episode_id, step, "filters"),
            size_history=history[(candidate.offender.compiler_id, candidate.offender.opt_flag)],
            previous_code=context.profile.seed_code,
            settings=config.filters,
            driver_inputs=config.toolchain.driver_inputs,
        )
        try:
            passed, evidence = run_filters(candidate, filter_context)
        except SignatureCorrupted as e:
            logger.warning(f"[{episode_id}] step {step}: {e}")
            record.outcome = COMPILE_FAILURE
            record.detail = str(e)
            break
        record.evidence.append(evidence)
        db.add_candidate(episode_id, candidate, passed, evidence)
        if not passed:
            continue

        violation = Violation(candidate, evidence)
        path = context.sink.emit(violation, episode_id)
        record.violation = violation.with_report_path(str(path.relative_to(context.campaign_dir)))
        record.report_path = record.violation.report_path
        record.outcome = VIOLATION
        logger.info(f"[{episode_id}] ✅ violation at step {step}: {candidate.inequality()}")
        break

    db.finish_episode(episode_id, record.outcome, record.steps, record.report_path)
    return record


# ============================================================
# CAMPAIGN
# ============================================================

def check_environment(
    config: CampaignConfig,
    toolchain: Toolchain,
    profile: LanguageProfile,
    strategy_config: StrategyConfig,
) -> Dict[OutcomeKey, CompileOutcome]:
    """
    Campaign-start checks; returns the step-0 outcomes.

    Raises:
        ToolchainMissing: If a compiler binary is missing or cannot compile the seed
        EnvironmentUnstable: If compiling the seed twice gives different sizes
    """
    require_binaries(config.compilers)
    seed = SourceProgram(language=profile.id, code=profile.seed_code)
    root = config.campaign_dir / "startup"
    required = set(required_compiles(strategy_config, config.compilers))
    baseline = {}
    for compiler in config.compilers:
        flags = list(compiler.all_flags)
        for key in sorted(required):
            if key[0] == compiler.id and key[1] not in flags:
                flags.append(key[1])
        for flag in flags:
            scratch = root / compiler.id / (flag.strip('-') or 'noflag')
            outcome = toolchain.verify_reproducible(compiler, flag, seed, scratch, profile.source_suffix)
            if not outcome.success:
                raise ToolchainMissing(
                    f"{compiler.id} {flag} cannot compile the {profile.display_name} seed: {outcome.diagnostics}"
                )
            if (compiler.id, flag) in required:
                baseline[(compiler.id, flag)] = outcome
    logger.info(f"Seed compiles on {len(config.compilers)} compilers; sizes reproducible")
    return baseline


def prepare_campaign_dir(config: CampaignConfig) -> Path:
    """Create the campaign directory, dropping the database and index of an earlier run"""
    campaign_dir = config.campaign_dir
    campaign_dir.mkdir(parents=True, exist_ok=True)
    for stale in (campaign_dir / DB_FILE, campaign_dir / REPORTS_DIR / "violations.jsonl"):
        if stale.exists():
            logger.warning(f"Replacing previous campaign data: {stale}")
            stale.unlink()
    return campaign_dir


def build_context(config: CampaignConfig, provider: Optional[MutationProvider] = None,
                  toolchain: Optional[Toolchain] = None) -> CampaignContext:
    profile = config.profile()
    try:
        catalog = load_catalog(config.catalog_path)
    except (OSError, ValueError) as e:
        raise ConfigError('catalog', str(e))
    strategy_config = config.strategy_config()
    if not eligible_instructions(strategy_config.strategy, catalog):
        raise NoEligibleInstruction(
            f"Catalog has no instruction usable with strategy {strategy_config.strategy.value}"
        )
    toolchain = toolchain or Toolchain(config.toolchain)
    campaign_dir = prepare_campaign_dir(config)
    baseline = check_environment(config, toolchain, profile, strategy_config)
    return CampaignContext(
        config=config,
        profile=profile,
        catalog=catalog,
        provider=provider or make_provider(config.provider, profile),
        toolchain=toolchain,
        strategy_config=strategy_config,
        db=CampaignDatabase(str(campaign_dir / DB_FILE)),
        sink=ReportSink(campaign_dir / REPORTS_DIR, config.compilers, profile, config.toolchain.metric.value),
        baseline_outcomes=baseline,
    )


def run_campaign(
    config: CampaignConfig,
    provider: Optional[MutationProvider] = None,
    toolchain: Optional[Toolchain] = None,
) -> CampaignResult:
    """
    Run episodes until the episode count or the time budget is used up.

    Args:
        config: Validated campaign configuration
        provider: Mutation provider (built from config.provider when None)
        toolchain: Toolchain (built from config.toolchain when None)

    Raises:
        ToolchainMissing: Campaign-fatal startup failure
        EnvironmentUnstable: Non-reproducible seed compiles
    """
    context = build_context(config, provider, toolchain)
    logger.info(f"Campaign {config.campaign_id}: {config.language}, {config.strategy.value}, "
                f"{len(config.compilers)} compilers, jobs={config.jobs}")

    started = time.monotonic()

    def budget_allows(index: int) -> bool:
        if config.episodes is not None and index >= config.episodes:
            return False
        if config.time_budget is not None and time.monotonic() - started >= config.time_budget:
            return False
        return True

    records: List[EpisodeRecord] = []
    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        pending = set()
        next_index = 0
        while True:
            while len(pending) < config.jobs and budget_allows(next_index):
                pending.add(pool.submit(run_episode, context, next_index))
                next_index += 1
            if not pending:
                break
            done, pending = wait(pending, return_when=FIRST_COMPLETED)
            for future in done:
                record = future.result()
                records.append(record)
                logger.info(f"[{record.episode_id}] {record.outcome} after {record.steps} steps")

    records.sort(key=lambda r: r.episode_index)
    stats = context.db.compute_stats()
    warning = sanitizer_health_warning([e for r in records for e in r.evidence])
    if warning:
        logger.warning(f"Campaign health: {warning}")

    write_stats(stats, context.campaign_dir / STATS_FILE, config.to_dict())
    if config.excel:
        export_excel(context.campaign_dir / EXCEL_FILE, stats, context.db.episodes_frame(),
                     context.db.candidates_frame())
    return CampaignResult(stats=stats, episodes=records, health_warning=warning)
