"""
Shared fixtures: a scripted fake compiler, stub providers with
predictable rules, and campaign configs wired to both.
"""

import shlex
import shutil
import sys
from pathlib import Path

import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from config import CampaignConfig
from core_model import Channel, CompilerSpec, Strategy
from filters import FilterSettings
from instruction_catalog import default_catalog
from languages import get_profile
from mutation_engine import StubProvider
from stub_rules import fresh_index, insert_in_body
from toolchain import Toolchain, ToolchainSettings

FIXTURES = Path(__file__).parent / 'fixtures'
FAKE_CC = FIXTURES / 'fake_cc.py'
FAKE_REVISIONS = FIXTURES / 'fake_revisions.py'


def fake_invocation(options: str = "") -> str:
    """Invocation template running fake_cc with extra options"""
    head = f"{shlex.quote(sys.executable)} {shlex.quote(str(FAKE_CC))}"
    if options:
        head += f" {options}"
    return head + " {flags} -S -o {output} {input}"


def fake_compiler(compiler_id: str, options: str = "", channel: Channel = Channel.RELEASE,
                  family: str = "") -> CompilerSpec:
    return CompilerSpec(
        id=compiler_id,
        invocation=fake_invocation(options),
        version_label=compiler_id,
        channel=channel,
        family=family,
    )


def add_statement(code: str) -> str:
    """Insert exactly one new statement into the function under test"""
    profile = get_profile('c')
    return insert_in_body(code, profile, f"a += {fresh_index(code)}; /* sp{fresh_index(code)} */")


def statement_provider(fail_at_step: int = 0) -> StubProvider:
    """
    Stub provider adding one statement per step for every instruction.

    With fail_at_step, the mutant of that step contains SYNTAX_ERROR.
    """
    def rule(code: str) -> str:
        mutated = add_statement(code)
        if fail_at_step and mutated.count(';') - 1 >= fail_at_step:
            mutated = mutated.replace("a +=", "SYNTAX_ERROR a +=", 1)
        return mutated
    return StubProvider({i.id: rule for i in default_catalog()}, fence_language='c')


@pytest.fixture
def c_profile():
    return get_profile('c')


@pytest.fixture
def toolchain():
    return Toolchain(ToolchainSettings(compile_timeout=30.0))


@pytest.fixture
def campaign_config(tmp_path):
    """Multi-compiler config over two fake compilers that agree on every size"""
    def make(**overrides):
        values = dict(
            language='c',
            strategy=Strategy.MULTI_COMPILER,
            compilers=[fake_compiler('gcc-fake'), fake_compiler('clang-fake')],
            episodes=1,
            time_budget=None,
            seed=42,
            workdir=str(tmp_path / 'work'),
            campaign_id='test',
            filters=FilterSettings(allow_skipped_dead_code_filter=True),
        )
        values.update(overrides)
        return CampaignConfig(**values)
    return make


requires_cc = pytest.mark.skipif(
    shutil.which('gcc') is None or shutil.which('gcov') is None,
    reason="needs a local gcc with gcov",
)
