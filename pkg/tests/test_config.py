"""
Tests for campaign configuration loading and validation.
"""

import json
import pytest
from pathlib import Path
import sys

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from config import (
    ENV_ENDPOINT, ENV_MODEL, load_compilers, load_config, load_tool_settings, parse_duration,
)
from core_model import SizeMetric, Strategy
from errors import ConfigError

GCC = {'id': 'gcc-14', 'invocation': 'gcc-14 {flags} -S -o {output} {input}', 'version_label': '14.2'}
CLANG = {'id': 'clang-18', 'invocation': 'clang-18 {flags} -S -o {output} {input}', 'version_label': '18.1',
         'size_opt_flag': '-Oz'}


def _write(tmp_path, data, name='campaign.json'):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding='utf-8')
    return path


class TestDefaults:

    def test_two_compilers(self):
        config = load_config(env={}, flags={'compilers': [GCC, CLANG]})
        assert config.strategy is Strategy.MULTI_COMPILER
        assert config.pipeline_threshold == 0.05
        assert config.multi_compiler_threshold == 0.10
        assert config.single_compiler_threshold == 0.0
        assert config.max_steps == 10
        assert config.time_budget == 8 * 3600
        assert config.provider.kind == 'stub'
        assert config.compilers[1].size_opt_flag == '-Oz'

    def test_episodes_drop_default_budget(self):
        config = load_config(env={}, flags={'compilers': [GCC, CLANG], 'episodes': 5})
        assert config.time_budget is None
        assert config.episodes == 5


class TestValidation:

    def test_multi_compiler_needs_two(self):
        with pytest.raises(ConfigError) as excinfo:
            load_config(env={}, flags={'compilers': [GCC]})
        assert excinfo.value.key == 'compilers'
        assert 'compilers: need ≥2' in str(excinfo.value)

    def test_multi_compiler_needs_two_families(self):
        other = dict(GCC, id='gcc-13')
        with pytest.raises(ConfigError, match='families'):
            load_config(env={}, flags={'compilers': [GCC, other]})

    def test_dead_code_one_compiler(self):
        config = load_config(env={}, flags={'compilers': [GCC], 'strategy': 'dead-code'})
        assert config.strategy is Strategy.DEAD_CODE

    def test_single_compiler_trunk_last(self):
        trunk = dict(GCC, id='gcc-trunk', channel='Trunk')
        old = dict(GCC, id='gcc-13')
        config = load_config(env={}, flags={'compilers': [old, GCC, trunk], 'strategy': 'single_compiler'})
        assert config.compilers[-1].id == 'gcc-trunk'
        with pytest.raises(ConfigError, match='Trunk'):
            load_config(env={}, flags={'compilers': [trunk, GCC], 'strategy': 'single_compiler'})

    def test_single_compiler_one_family(self):
        trunk = dict(CLANG, id='clang-trunk', channel='Trunk')
        with pytest.raises(ConfigError, match='family'):
            load_config(env={}, flags={'compilers': [GCC, trunk], 'strategy': 'single_compiler'})

    def test_threshold_range(self):
        with pytest.raises(ConfigError) as excinfo:
            load_config(env={}, flags={'compilers': [GCC, CLANG], 'threshold_multi': 1.5})
        assert excinfo.value.key == 'multi_compiler_threshold'

    def test_threshold_bounds_inclusive(self):
        config = load_config(env={}, flags={'compilers': [GCC, CLANG], 'threshold_multi': 1.0,
                                            'threshold_pipeline': 0.0})
        assert config.multi_compiler_threshold == 1.0

    def test_unknown_language(self):
        with pytest.raises(ConfigError) as excinfo:
            load_config(env={}, flags={'compilers': [GCC, CLANG], 'language': 'cobol'})
        assert excinfo.value.key == 'language'

    def test_unknown_strategy(self):
        with pytest.raises(ConfigError) as excinfo:
            load_config(env={}, flags={'compilers': [GCC, CLANG], 'strategy': 'fastest'})
        assert excinfo.value.key == 'strategy'

    def test_duplicate_ids(self):
        with pytest.raises(ConfigError, match='unique'):
            load_config(env={}, flags={'compilers': [GCC, CLANG, GCC]})

    def test_max_steps(self):
        with pytest.raises(ConfigError, match='max_steps'):
            load_config(env={}, flags={'compilers': [GCC, CLANG], 'max_steps': 0})

    def test_remote_needs_endpoint_and_model(self):
        with pytest.raises(ConfigError) as excinfo:
            load_config(env={}, flags={'compilers': [GCC, CLANG], 'provider': 'remote'})
        assert excinfo.value.key == 'endpoint'
        with pytest.raises(ConfigError) as excinfo:
            load_config(env={ENV_ENDPOINT: 'http://llm.local/v1'},
                        flags={'compilers': [GCC, CLANG], 'provider': 'remote'})
        assert excinfo.value.key == 'model'


class TestPrecedence:

    def test_env_overrides_file(self, tmp_path):
        path = _write(tmp_path, {'compilers': [GCC, CLANG], 'provider': {'kind': 'remote',
                      'endpoint': 'http://file.local/v1', 'model_name': 'file-model'}})
        config = load_config(path, env={ENV_ENDPOINT: 'http://env.local/v1'})
        assert config.provider.endpoint == 'http://env.local/v1'
        assert config.provider.model_name == 'file-model'

    def test_flags_override_env(self, tmp_path):
        path = _write(tmp_path, {'compilers': [GCC, CLANG], 'max_steps': 4})
        config = load_config(path, env={ENV_MODEL: 'env-model'},
                             flags={'model': 'flag-model', 'max_steps': 6, 'seed': None})
        assert config.provider.model_name == 'flag-model'
        assert config.max_steps == 6
        assert config.seed == 0

    def test_file_values(self, tmp_path):
        path = _write(tmp_path, {'compilers': [GCC, CLANG], 'time_budget': '30m', 'size_metric': 'TextSectionBytes',
                                 'filters': {'strict_monotonic': True}})
        config = load_config(path, env={})
        assert config.time_budget == 1800
        assert config.toolchain.metric is SizeMetric.TEXT_SECTION_BYTES
        assert config.filters.strict_monotonic

    def test_matrix_path_relative_to_file(self, tmp_path):
        (tmp_path / 'configs').mkdir()
        _write(tmp_path / 'configs', [GCC, CLANG], 'matrix.json')
        path = _write(tmp_path / 'configs', {'compilers': 'matrix.json'})
        assert [c.id for c in load_config(path, env={}).compilers] == ['gcc-14', 'clang-18']

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as excinfo:
            load_config(tmp_path / 'absent.json', env={})
        assert excinfo.value.key == 'config'

    def test_unknown_toolchain_key(self, tmp_path):
        path = _write(tmp_path, {'compilers': [GCC, CLANG], 'toolchain': {'warp_speed': 9}})
        with pytest.raises(ConfigError) as excinfo:
            load_config(path, env={})
        assert excinfo.value.key == 'toolchain'


class TestHelpers:

    def test_parse_duration(self):
        assert parse_duration('90s') == 90
        assert parse_duration('30m') == 1800
        assert parse_duration('8h') == 8 * 3600
        assert parse_duration(' 12 ') == 12
        assert parse_duration(2.5) == 2.5
        with pytest.raises(ValueError):
            parse_duration('soon')

    def test_load_compilers_file(self, tmp_path):
        path = _write(tmp_path, [GCC], 'matrix.json')
        assert load_compilers(path)[0].family == 'gcc'

    def test_load_compilers_bad_json(self, tmp_path):
        path = tmp_path / 'matrix.json'
        path.write_text('[{', encoding='utf-8')
        with pytest.raises(ConfigError, match='invalid JSON'):
            load_compilers(path)

    def test_load_compilers_missing_field(self):
        with pytest.raises(ConfigError):
            load_compilers([{'id': 'gcc-14'}])

    def test_tool_settings_only(self, tmp_path):
        path = _write(tmp_path, {'toolchain': {'compile_timeout': 12}, 'languages': {'c': {'function_symbol': 'g'}}})
        settings, languages = load_tool_settings(path)
        assert settings.compile_timeout == 12
        assert languages == {'c': {'function_symbol': 'g'}}


class TestShippedConfigs:

    CONFIG_DIR = Path(__file__).parent.parent / 'config'

    def test_example_campaign(self):
        config = load_config(self.CONFIG_DIR / 'campaign.example.json', env={})
        assert config.provider.kind == 'remote'
        assert [c.family for c in config.compilers] == ['gcc', 'clang']
        assert config.toolchain.coverage_invocation is not None

    def test_dead_code_campaign(self):
        config = load_config(self.CONFIG_DIR / 'campaign.dead-code.json', env={})
        assert config.strategy is Strategy.DEAD_CODE
        assert config.episodes == 100
        assert config.time_budget is None

    def test_release_matrices(self):
        assert len(load_compilers(self.CONFIG_DIR / 'compilers.gcc-releases.json')) == 3
        rust = load_compilers(self.CONFIG_DIR / 'compilers.rust.json')
        assert rust[-1].size_opt_flag == 'opt-level=z'
