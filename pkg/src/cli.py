#!/usr/bin/env python3
"""
sizeprobe command line

Subcommands:
    run      run a fuzzing campaign
    verify   re-check stored reports (or the regression corpus) with local compilers
    screen   fingerprint reports against released compilers and group duplicates
    bisect   find the first revision exhibiting a reported violation
    catalog  print the mutation instruction catalog
"""

import argparse
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional, List

import pandas as pd

from config import load_config, load_compilers, load_tool_settings
from core_model import ViolationSignature
from corpus import check_corpus, TRIGGER, NO_TRIGGER
from dedup import release_screen, bisect_violation, group_duplicates
from errors import ConfigError, SizeProbeError
from instruction_catalog import load_catalog, dump_catalog
from languages import get_profile
from reports import (
    canonical_json, load_report, stats_table, update_report_signature, verify_report,
    violation_from_report, REPORT_FILE,
)
from session import run_campaign
from toolchain import Toolchain

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def setup_logging(log_dir: Path, verbose: bool = False) -> str:
    """Log to a timestamped file under log_dir and to stdout"""
    log_dir = Path(log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    log_file = log_dir / f"sizeprobe_{timestamp}.log"

    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler(sys.stdout)
        ],
        force=True,
    )
    return str(log_file)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='sizeprobe', description='LLM-driven compiler code-size fuzzer')
    parser.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='Run a fuzzing campaign')
    run.add_argument('--config', help='JSON config file')
    run.add_argument('--language', help='Language of the campaign (c, cpp, rust, swift)')
    run.add_argument('--strategy', help='dead_code, pipeline, single_compiler or multi_compiler')
    run.add_argument('--compilers', help='Compiler matrix JSON file')
    run.add_argument('--provider', choices=['remote', 'stub'], help='Mutation provider')
    run.add_argument('--endpoint', help='Chat-completion endpoint URL')
    run.add_argument('--model', help='Model name sent to the endpoint')
    run.add_argument('--time-budget', help='Wall-clock budget (seconds, or 30m / 8h)')
    run.add_argument('--episodes', type=int, help='Number of episodes (replaces the time budget)')
    run.add_argument('--max-steps', type=int, help='Mutations per episode (default: 10)')
    run.add_argument('--threshold-pipeline', type=float, help='Pipeline threshold (default: 0.05)')
    run.add_argument('--threshold-multi', type=float, help='Multi-compiler threshold (default: 0.10)')
    run.add_argument('--threshold-single', type=float, help='Single-compiler threshold (default: 0)')
    run.add_argument('--seed', type=int, help='Campaign rng seed')
    run.add_argument('--workdir', help='Working directory for scratch files, reports and stats')
    run.add_argument('--campaign-id', help='Campaign directory name under the workdir')
    run.add_argument('--jobs', type=int, help='Concurrent episodes (default: 1)')
    run.add_argument('--catalog', help='Instruction catalog JSON file')
    run.add_argument('--excel', action='store_true', default=None, help='Also write stats.xlsx')

    verify = sub.add_parser('verify', help='Re-check reports with local compilers')
    verify.add_argument('reports', nargs='*', help='Report files or directories')
    verify.add_argument('--corpus', help='Check the regression corpus in this directory instead')
    verify.add_argument('--compilers', help='Compiler matrix for --corpus')
    verify.add_argument('--language', default='c', help='Language of the --corpus matrix (default: c)')
    verify.add_argument('--config', help='JSON config file (toolchain and language sections)')
    verify.add_argument('--workdir', default='sizeprobe-work', help='Scratch directory')

    screen = sub.add_parser('screen', help='Release-screen reports and group duplicates')
    screen.add_argument('reports', nargs='+', help='Report files or directories')
    screen.add_argument('--releases', required=True, help='Release matrix JSON file, oldest first')
    screen.add_argument('--groups', help='Where to write groups.json (default: next to the first report dir)')
    screen.add_argument('--config', help='JSON config file (toolchain and language sections)')
    screen.add_argument('--workdir', default='sizeprobe-work', help='Scratch directory')

    bisect = sub.add_parser('bisect', help='Find the culprit revision of a report')
    bisect.add_argument('report', help='Report file or directory')
    bisect.add_argument('--revisions', required=True, help='File with one revision id per line, oldest first')
    bisect.add_argument('--provider-command', required=True,
                        help='Command printing a compiler path for `<command> <revision>`')
    bisect.add_argument('--compiler', help='Compiler id to replace (default: the offender)')
    bisect.add_argument('--config', help='JSON config file (toolchain and language sections)')
    bisect.add_argument('--workdir', default='sizeprobe-work', help='Scratch directory')

    catalog = sub.add_parser('catalog', help='Print the instruction catalog')
    catalog.add_argument('--catalog', help='Instruction catalog JSON file')
    catalog.add_argument('--json', action='store_true', help='Print as JSON')
    return parser


# ============================================================
# COMMANDS
# ============================================================

def cmd_run(args: argparse.Namespace) -> int:
    flags = {
        'language': args.language,
        'strategy': args.strategy,
        'compilers': args.compilers,
        'provider': args.provider,
        'endpoint': args.endpoint,
        'model': args.model,
        'time_budget': args.time_budget,
        'episodes': args.episodes,
        'max_steps': args.max_steps,
        'threshold_pipeline': args.threshold_pipeline,
        'threshold_multi': args.threshold_multi,
        'threshold_single': args.threshold_single,
        'seed': args.seed,
        'workdir': args.workdir,
        'campaign_id': args.campaign_id,
        'jobs': args.jobs,
        'catalog': args.catalog,
        'excel': args.excel,
    }
    config = load_config(args.config, flags=flags)
    log_file = setup_logging(Path(config.workdir) / "logs", args.verbose)
    print(f"📝 Logging to {log_file}")

    result = run_campaign(config)
    print(f"\n📊 Campaign {config.campaign_id} ({config.language}, {config.strategy.value})")
    print(stats_table(result.stats))
    for record in result.violations:
        print(f"   ✅ {record.episode_id}: {record.report_path}")
    if result.health_warning:
        print(f"⚠️  {result.health_warning}")
    return EXIT_OK


def _report_paths(paths: List[str]) -> List[Path]:
    found = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir() and not (path / REPORT_FILE).exists():
            found.extend(sorted(path.glob(f"*/{REPORT_FILE}")))
        else:
            found.append(path)
    return found


def cmd_verify(args: argparse.Namespace) -> int:
    settings, overrides = load_tool_settings(args.config)
    toolchain = Toolchain(settings)

    if args.corpus:
        if not args.compilers:
            raise ConfigError('compilers', "--corpus needs --compilers")
        compilers = load_compilers(args.compilers)
        results = check_corpus(args.corpus, args.language, compilers, toolchain, args.workdir, overrides)
        for result in results:
            marker = {TRIGGER: '🎯', NO_TRIGGER: '  '}.get(result.status, '⚠️ ')
            print(f"{marker} {result.entry_id:32s} {result.status:11s} {result.detail}")
        return EXIT_OK

    if not args.reports:
        raise ConfigError('reports', "give report paths or --corpus")
    all_match = True
    for path in _report_paths(args.reports):
        report = load_report(path)
        profile = get_profile(report['language'], overrides)
        result = verify_report(report, toolchain, profile, args.workdir)
        if result.matches:
            print(f"✅ {result.report_id}: reproduced ({report['inequality']})")
        else:
            all_match = False
            print(f"❌ {result.report_id}: stored {result.stored_decision}, "
                  f"recomputed {result.recomputed_decision} {result.detail}")
    return EXIT_OK if all_match else EXIT_FAILED


def cmd_screen(args: argparse.Namespace) -> int:
    settings, overrides = load_tool_settings(args.config)
    toolchain = Toolchain(settings)
    releases = load_compilers(args.releases)

    signatures = {}
    paths = _report_paths(args.reports)
    for path in paths:
        report = load_report(path)
        profile = get_profile(report['language'], overrides)
        print(f"🔍 {report['report_id']}")
        signature = release_screen(violation_from_report(report), releases, toolchain, profile, args.workdir)
        update_report_signature(path, signature)
        vector = ''.join('X' if e else '.' for e in signature.exhibits)
        print(f"   [{vector}] {', '.join(signature.version_ids)}")
        signatures[report['report_id']] = signature

    groups = group_duplicates(signatures)
    target = Path(args.groups) if args.groups else Path(paths[0]).resolve().parent.parent / "groups.json"
    target.write_text(canonical_json(groups.to_dict()), encoding='utf-8')
    print(f"📊 {len(groups.groups)} groups, {len(groups.possibly_related)} possibly related pairs -> {target}")
    return EXIT_OK


def cmd_bisect(args: argparse.Namespace) -> int:
    settings, overrides = load_tool_settings(args.config)
    toolchain = Toolchain(settings)
    report = load_report(args.report)
    violation = violation_from_report(report)
    profile = get_profile(report['language'], overrides)

    compiler_id = args.compiler or violation.candidate.offender.compiler_id
    compilers = {c['id']: c for c in report['compilers']}
    if compiler_id not in compilers:
        raise ConfigError('compiler', f"'{compiler_id}' is not part of report {report['report_id']}")
    compiler = load_compilers([compilers[compiler_id]])[0]
    revisions = [line.strip() for line in Path(args.revisions).read_text(encoding='utf-8').splitlines()
                 if line.strip() and not line.startswith('#')]

    result = bisect_violation(violation, compiler, revisions, args.provider_command, toolchain, profile,
                              args.workdir)
    signature = violation.signature or ViolationSignature((), ())
    update_report_signature(args.report, signature.with_culprit(result.culprit))
    print(f"🎯 First bad revision: {result.culprit} ({result.evaluations} revision checks)")
    if result.skipped:
        print(f"⚠️  Skipped unavailable revisions: {', '.join(result.skipped)}")
    return EXIT_OK


def cmd_catalog(args: argparse.Namespace) -> int:
    try:
        catalog = load_catalog(args.catalog)
    except (OSError, ValueError) as e:
        raise ConfigError('catalog', str(e))
    if args.json:
        print(dump_catalog(catalog))
        return EXIT_OK
    frame = pd.DataFrame([
        {'id': i.id, 'category': i.category.value, 'deadness': i.deadness.value, 'text': i.text}
        for i in catalog
    ])
    print(f"📋 {len(catalog)} mutation instructions")
    print(frame.to_string(index=False))
    return EXIT_OK


COMMANDS = {
    'run': cmd_run,
    'verify': cmd_verify,
    'screen': cmd_screen,
    'bisect': cmd_bisect,
    'catalog': cmd_catalog,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"❌ Configuration error: {e}")
        return EXIT_CONFIG
    except SizeProbeError as e:
        logger.error(str(e))
        print(f"❌ {type(e).__name__}: {e}")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
