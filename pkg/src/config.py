"""
Campaign configuration

Merges defaults, a JSON config file, environment variables (a local .env is
loaded first) and command-line flags into one validated CampaignConfig.
Precedence: flags > env > file > defaults.
"""

import json
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, List, Dict, Any, Mapping, Tuple, Union

from dotenv import load_dotenv

from core_model import (
    Strategy, Channel, CompilerSpec, LanguageProfile, SizeMetric, as_fraction,
)
from errors import ConfigError, UnknownLanguage
from filters import FilterSettings
from languages import get_profile
from mutation_engine import ProviderSettings, REMOTE, STUB
from strategies import (
    StrategyConfig, DEFAULT_PIPELINE_THRESHOLD, DEFAULT_MULTI_COMPILER_THRESHOLD,
    DEFAULT_SINGLE_COMPILER_THRESHOLD,
)
from toolchain import ToolchainSettings

logger = logging.getLogger(__name__)

ENV_ENDPOINT = "SIZEPROBE_LLM_ENDPOINT"
ENV_MODEL = "SIZEPROBE_LLM_MODEL"
ENV_API_KEY = "SIZEPROBE_LLM_API_KEY"

DEFAULT_TIME_BUDGET = 8 * 3600.0
DEFAULT_MAX_STEPS = 10

_DURATION = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([smh]?)\s*$")
_DURATION_UNITS = {'': 1, 's': 1, 'm': 60, 'h': 3600}

# Flat keys accepted from files and flags, with the attribute they set
_PROVIDER_KEYS = {'provider': 'kind', 'endpoint': 'endpoint', 'model': 'model_name',
                  'api_key': 'api_key', 'request_timeout': 'request_timeout', 'sampling': 'sampling'}


@dataclass
class CampaignConfig:
    language: str = "c"
    strategy: Strategy = Strategy.MULTI_COMPILER
    compilers: List[CompilerSpec] = field(default_factory=list)
    provider: ProviderSettings = field(default_factory=ProviderSettings)
    pipeline_threshold: float = DEFAULT_PIPELINE_THRESHOLD
    multi_compiler_threshold: float = DEFAULT_MULTI_COMPILER_THRESHOLD
    single_compiler_threshold: float = DEFAULT_SINGLE_COMPILER_THRESHOLD
    reference_opt_flag: Optional[str] = None
    max_steps: int = DEFAULT_MAX_STEPS
    time_budget: Optional[float] = DEFAULT_TIME_BUDGET
    episodes: Optional[int] = None
    seed: int = 0
    workdir: str = "sizeprobe-work"
    campaign_id: str = "campaign"
    jobs: int = 1
    catalog_path: Optional[str] = None
    toolchain: ToolchainSettings = field(default_factory=ToolchainSettings)
    filters: FilterSettings = field(default_factory=FilterSettings)
    languages: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    excel: bool = False

    @property
    def campaign_dir(self) -> Path:
        return Path(self.workdir) / self.campaign_id

    def strategy_config(self) -> StrategyConfig:
        return StrategyConfig(
            strategy=self.strategy,
            pipeline_threshold=self.pipeline_threshold,
            multi_compiler_threshold=self.multi_compiler_threshold,
            single_compiler_threshold=self.single_compiler_threshold,
            reference_opt_flag=self.reference_opt_flag,
        )

    def profile(self) -> LanguageProfile:
        return get_profile(self.language, self.languages)

    def to_dict(self) -> Dict[str, Any]:
        """Config summary stored next to campaign results (no secrets)"""
        return {
            'language': self.language,
            'strategy': self.strategy.value,
            'compilers': [c.id for c in self.compilers],
            'provider': self.provider.kind,
            'model': self.provider.model_name,
            'pipeline_threshold': self.pipeline_threshold,
            'multi_compiler_threshold': self.multi_compiler_threshold,
            'single_compiler_threshold': self.single_compiler_threshold,
            'max_steps': self.max_steps,
            'episodes': self.episodes,
            'seed': self.seed,
            'size_metric': self.toolchain.metric.value,
        }


def parse_duration(value: Union[str, int, float]) -> float:
    """Seconds from 3600, "90s", "30m" or "8h" """
    if isinstance(value, (int, float)):
        return float(value)
    match = _DURATION.match(str(value))
    if not match:
        raise ValueError(f"Invalid duration '{value}'. Use seconds or a number with s/m/h")
    return float(match.group(1)) * _DURATION_UNITS[match.group(2)]


def load_compilers(source: Union[str, Path, List[Dict[str, Any]]]) -> List[CompilerSpec]:
    """
    Compiler matrix from a JSON file (list of CompilerSpec records) or an
    already-parsed list.
    """
    if isinstance(source, (str, Path)):
        try:
            with open(source, 'r', encoding='utf-8') as f:
                entries = json.load(f)
        except FileNotFoundError:
            raise ConfigError('compilers', f"file not found: {source}")
        except json.JSONDecodeError as e:
            raise ConfigError('compilers', f"invalid JSON in {source} ({e})")
    else:
        entries = source
    if not isinstance(entries, list):
        raise ConfigError('compilers', "compiler matrix must be a JSON list")
    try:
        return [CompilerSpec.from_dict(entry) for entry in entries]
    except (KeyError, ValueError) as e:
        raise ConfigError('compilers', f"invalid compiler entry ({e})")


def _read_file(path: Optional[Union[str, Path]]) -> Dict[str, Any]:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError('config', f"file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ConfigError('config', "config file must contain a JSON object")
    # Matrix paths are relative to the config file
    if isinstance(data.get('compilers'), str) and not Path(data['compilers']).is_absolute():
        data['compilers'] = str(path.parent / data['compilers'])
    return data


def _flatten(file_data: Dict[str, Any]) -> Dict[str, Any]:
    """Lift the nested provider section into flat keys"""
    merged = dict(file_data)
    provider = merged.pop('provider', None)
    if isinstance(provider, dict):
        for key, attr in _PROVIDER_KEYS.items():
            if attr in provider:
                merged[key] = provider[attr]
            elif key in provider:
                merged[key] = provider[key]
    elif provider is not None:
        merged['provider'] = provider
    return merged


def load_config(
    path: Optional[Union[str, Path]] = None,
    env: Optional[Mapping[str, str]] = None,
    flags: Optional[Mapping[str, Any]] = None,
) -> CampaignConfig:
    """
    Build and validate a campaign configuration.

    Args:
        path: Optional JSON config file
        env: Environment mapping; None loads .env and uses os.environ
        flags: Command-line values (None entries are ignored)

    Raises:
        ConfigError: Naming the offending key
    """
    if env is None:
        load_dotenv()
        env = os.environ

    merged = _flatten(_read_file(path))
    if env.get(ENV_ENDPOINT):
        merged['endpoint'] = env[ENV_ENDPOINT]
    if env.get(ENV_MODEL):
        merged['model'] = env[ENV_MODEL]
    if env.get(ENV_API_KEY):
        merged['api_key'] = env[ENV_API_KEY]
    for key, value in (flags or {}).items():
        if value is not None:
            merged[key] = value

    config = _build(merged)
    validate(config)
    logger.debug(f"Loaded config: {config.to_dict()}")
    return config


def _build(merged: Dict[str, Any]) -> CampaignConfig:
    config = CampaignConfig()

    if 'strategy' in merged:
        try:
            config.strategy = Strategy.parse(merged['strategy'])
        except ValueError as e:
            raise ConfigError('strategy', str(e))

    for key in ('language', 'workdir', 'campaign_id', 'reference_opt_flag'):
        if key in merged:
            setattr(config, key, merged[key])
    if 'catalog' in merged or 'catalog_path' in merged:
        config.catalog_path = merged.get('catalog', merged.get('catalog_path'))
    if 'languages' in merged:
        config.languages = dict(merged['languages'])
    if 'excel' in merged:
        config.excel = bool(merged['excel'])

    for key, attr in (('threshold_pipeline', 'pipeline_threshold'),
                      ('threshold_multi', 'multi_compiler_threshold'),
                      ('threshold_single', 'single_compiler_threshold'),
                      ('pipeline_threshold', 'pipeline_threshold'),
                      ('multi_compiler_threshold', 'multi_compiler_threshold'),
                      ('single_compiler_threshold', 'single_compiler_threshold')):
        if key in merged:
            try:
                setattr(config, attr, float(merged[key]))
            except (TypeError, ValueError):
                raise ConfigError(attr, f"not a number: {merged[key]!r}")

    for key in ('max_steps', 'seed', 'jobs', 'episodes'):
        if key in merged:
            try:
                setattr(config, key, int(merged[key]))
            except (TypeError, ValueError):
                raise ConfigError(key, f"not an integer: {merged[key]!r}")

    if 'time_budget' in merged:
        try:
            config.time_budget = parse_duration(merged['time_budget'])
        except ValueError as e:
            raise ConfigError('time_budget', str(e))
    elif config.episodes is not None:
        config.time_budget = None

    if 'compilers' in merged:
        config.compilers = load_compilers(merged['compilers'])

    provider = ProviderSettings()
    for key, attr in _PROVIDER_KEYS.items():
        if key in merged:
            setattr(provider, attr, merged[key])
    config.provider = provider

    config.toolchain = toolchain_settings(merged.get('toolchain'), merged.get('size_metric'))

    try:
        config.filters = FilterSettings(**dict(merged.get('filters') or {}))
    except TypeError as e:
        raise ConfigError('filters', str(e))
    return config


def toolchain_settings(section: Optional[Dict[str, Any]], size_metric: Optional[str] = None) -> ToolchainSettings:
    """ToolchainSettings from the "toolchain" section of a config file"""
    values = dict(section or {})
    if size_metric:
        values['metric'] = size_metric
    try:
        if 'metric' in values:
            values['metric'] = SizeMetric(values['metric'])
        for key in ('comment_leaders', 'driver_inputs'):
            if key in values:
                values[key] = tuple(values[key])
        return ToolchainSettings(**values)
    except (TypeError, ValueError) as e:
        raise ConfigError('toolchain', str(e))


def load_tool_settings(path: Optional[Union[str, Path]] = None) -> Tuple[ToolchainSettings, Dict[str, Dict[str, Any]]]:
    """
    Toolchain settings and language overrides only, for commands that work
    on existing reports and need no campaign setup.
    """
    data = _read_file(path)
    return toolchain_settings(data.get('toolchain'), data.get('size_metric')), dict(data.get('languages') or {})


def validate(config: CampaignConfig) -> None:
    """
    Raises:
        ConfigError: On the first invalid key
    """
    try:
        config.profile()
    except (UnknownLanguage, TypeError) as e:
        raise ConfigError('language', str(e))

    compilers = config.compilers
    if config.strategy in (Strategy.DEAD_CODE, Strategy.PIPELINE):
        if len(compilers) < 1:
            raise ConfigError('compilers', "need ≥1")
    elif config.strategy is Strategy.SINGLE_COMPILER:
        if len(compilers) < 2:
            raise ConfigError('compilers', "need ≥2")
        if compilers[-1].channel is not Channel.TRUNK:
            raise ConfigError('compilers', f"last entry '{compilers[-1].id}' must have channel Trunk")
        if any(c.channel is Channel.TRUNK for c in compilers[:-1]):
            raise ConfigError('compilers', "only the last entry may have channel Trunk")
        families = {c.family for c in compilers}
        if len(families) > 1:
            raise ConfigError('compilers', f"versions must share one family, got {sorted(families)}")
    elif config.strategy is Strategy.MULTI_COMPILER:
        if len(compilers) < 2:
            raise ConfigError('compilers', "need ≥2")
        if len({c.family for c in compilers}) < 2:
            raise ConfigError('compilers', "need ≥2 distinct compiler families")
    ids = [c.id for c in compilers]
    if len(set(ids)) != len(ids):
        raise ConfigError('compilers', "compiler ids must be unique")

    for attr in ('pipeline_threshold', 'multi_compiler_threshold', 'single_compiler_threshold'):
        value = as_fraction(getattr(config, attr))
        if not (0 <= value <= 1):
            raise ConfigError(attr, f"must be in [0, 1], got {getattr(config, attr)}")

    if config.max_steps < 1:
        raise ConfigError('max_steps', "must be ≥1")
    if config.jobs < 1:
        raise ConfigError('jobs', "must be ≥1")
    if config.episodes is not None and config.episodes < 0:
        raise ConfigError('episodes', "must be ≥0")
    if config.time_budget is not None and config.time_budget < 0:
        raise ConfigError('time_budget', "must be ≥0")
    if config.episodes is None and config.time_budget is None:
        raise ConfigError('time_budget', "set a time budget or an episode count")

    if config.provider.kind not in (REMOTE, STUB):
        raise ConfigError('provider', f"must be {REMOTE} or {STUB}, got {config.provider.kind!r}")
    if config.provider.kind == REMOTE:
        if not config.provider.endpoint:
            raise ConfigError('endpoint', f"remote provider needs an endpoint (--endpoint or {ENV_ENDPOINT})")
        if not config.provider.model_name:
            raise ConfigError('model', f"remote provider needs a model (--model or {ENV_MODEL})")
