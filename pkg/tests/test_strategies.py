"""
Tests for the four differential strategies and their dispatch.
"""

import pytest
from fractions import Fraction
from pathlib import Path
import sys

from hypothesis import given, settings, strategies as st

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from core_model import (
    Channel, CompileOutcome, CompilerSpec, SizeMeasurement, SizeMetric, SourceProgram, Strategy,
)
from strategies import (
    StrategyConfig, dead_code_check, evaluate, multi_compiler_check, pipeline_check,
    required_compiles, version_check,
)

PROGRAM = SourceProgram('c', 'int f(int a) { return 0; }').derive('int f(int a) { a++; return 0; }', 'cf_loop')


def ok(compiler_id, flag, size):
    return CompileOutcome(compiler_id, flag, True, 'nop', size=SizeMeasurement(SizeMetric.INSTRUCTION_COUNT, size))


def failed(compiler_id, flag):
    return CompileOutcome(compiler_id, flag, False, diagnostics='error')


def spec(compiler_id, channel=Channel.RELEASE, size_flag='-Os'):
    return CompilerSpec(id=compiler_id, invocation='cc {flags} -S -o {output} {input}',
                        channel=channel, size_opt_flag=size_flag)


class TestDeadCodeCheck:

    def test_growth_triggers(self):
        candidate = dead_code_check(ok('gcc', '-Os', 9), ok('gcc', '-Os', 3), PROGRAM)
        assert candidate is not None
        assert candidate.strategy is Strategy.DEAD_CODE
        assert candidate.baseline_step == 0
        assert candidate.inequality() == "size_step1(gcc -Os) = 9 > size_step0(gcc -Os) = 3"

    def test_equal_size_is_fine(self):
        assert dead_code_check(ok('gcc', '-Os', 3), ok('gcc', '-Os', 3), PROGRAM) is None

    def test_zero_baseline_discarded(self):
        assert dead_code_check(ok('gcc', '-Os', 3), ok('gcc', '-Os', 0), PROGRAM) is None

    def test_failed_compile(self):
        assert dead_code_check(failed('gcc', '-Os'), ok('gcc', '-Os', 3), PROGRAM) is None


class TestPipelineCheck:

    def test_size_flag_larger_than_o3(self):
        outcomes = [ok('clang', '-Oz', 106), ok('clang', '-O3', 100)]
        candidate = pipeline_check(outcomes, '-Oz', PROGRAM, 0.05)
        assert candidate.offender.opt_flag == '-Oz'
        assert candidate.baseline.opt_flag == '-O3'

    def test_exact_boundary(self):
        assert pipeline_check([ok('clang', '-Oz', 105), ok('clang', '-O3', 100)], '-Oz', PROGRAM, 0.05) is None

    def test_baseline_is_smallest_other_flag(self):
        outcomes = [ok('gcc', '-Os', 12), ok('gcc', '-O3', 20), ok('gcc', '-O2', 10)]
        candidate = pipeline_check(outcomes, '-Os', PROGRAM, 0.05)
        assert candidate.baseline.opt_flag == '-O2'
        assert candidate.ratio == Fraction(6, 5)

    def test_needs_all_outcomes_successful(self):
        assert pipeline_check([ok('gcc', '-Os', 50), failed('gcc', '-O3')], '-Os', PROGRAM) is None


class TestVersionCheck:

    def test_trunk_regression(self):
        outcomes = [ok('gcc-12', '-Os', 20), ok('gcc-13', '-Os', 18), ok('gcc-trunk', '-Os', 19)]
        candidate = version_check(outcomes, PROGRAM, 0)
        assert candidate.offender.compiler_id == 'gcc-trunk'
        assert candidate.baseline.compiler_id == 'gcc-13'

    def test_trunk_best(self):
        outcomes = [ok('gcc-12', '-Os', 20), ok('gcc-trunk', '-Os', 18)]
        assert version_check(outcomes, PROGRAM, 0) is None

    def test_single_version(self):
        assert version_check([ok('gcc-trunk', '-Os', 18)], PROGRAM) is None


class TestMultiCompilerCheck:

    def test_largest_against_smallest(self):
        outcomes = [ok('gcc-14', '-Os', 34), ok('clang-18', '-Os', 25)]
        candidate = multi_compiler_check(outcomes, PROGRAM, 0.10)
        assert candidate.ratio == Fraction(34, 25)
        assert candidate.offender.compiler_id == 'gcc-14'

    def test_within_threshold(self):
        assert multi_compiler_check([ok('gcc-14', '-Os', 110), ok('clang-18', '-Os', 100)], PROGRAM, 0.10) is None

    def test_tie_break_by_id(self):
        outcomes = [ok('zcc', '-Os', 30), ok('acc', '-Os', 30), ok('mcc', '-Os', 20), ok('bcc', '-Os', 20)]
        candidate = multi_compiler_check(outcomes, PROGRAM, 0.10)
        assert candidate.offender.compiler_id == 'acc'
        assert candidate.baseline.compiler_id == 'bcc'


class TestDispatch:

    def test_required_compiles(self):
        compilers = [spec('gcc-14'), spec('clang-18', size_flag='-Oz')]
        assert required_compiles(StrategyConfig(Strategy.MULTI_COMPILER), compilers) == [
            ('gcc-14', '-Os'), ('clang-18', '-Oz')]
        assert required_compiles(StrategyConfig(Strategy.PIPELINE), compilers) == [
            ('gcc-14', '-Os'), ('gcc-14', '-O3'), ('clang-18', '-Oz'), ('clang-18', '-O3')]
        assert required_compiles(StrategyConfig(Strategy.MULTI_COMPILER, reference_opt_flag='-O2'), compilers) == [
            ('gcc-14', '-O2'), ('clang-18', '-O2')]

    def test_evaluate_multi(self):
        compilers = [spec('gcc-14'), spec('clang-18')]
        outcomes = {('gcc-14', '-Os'): ok('gcc-14', '-Os', 34), ('clang-18', '-Os'): ok('clang-18', '-Os', 25)}
        candidate = evaluate(StrategyConfig(Strategy.MULTI_COMPILER), compilers, outcomes, PROGRAM)
        assert candidate.threshold == Fraction(1, 10)

    def test_evaluate_dead_code_uses_baseline(self):
        compilers = [spec('gcc-14')]
        outcomes = {('gcc-14', '-Os'): ok('gcc-14', '-Os', 9)}
        baseline = {('gcc-14', '-Os'): ok('gcc-14', '-Os', 3)}
        candidate = evaluate(StrategyConfig(Strategy.DEAD_CODE), compilers, outcomes, PROGRAM, baseline)
        assert candidate.offender.size == 9
        assert candidate.baseline.size == 3

    def test_evaluate_single_needs_trunk_last(self):
        compilers = [spec('gcc-12'), spec('gcc-13')]
        outcomes = {('gcc-12', '-Os'): ok('gcc-12', '-Os', 1), ('gcc-13', '-Os'): ok('gcc-13', '-Os', 2)}
        with pytest.raises(ValueError):
            evaluate(StrategyConfig(Strategy.SINGLE_COMPILER), compilers, outcomes, PROGRAM)

    def test_evaluate_pipeline_per_compiler(self):
        compilers = [spec('gcc-14'), spec('clang-18')]
        outcomes = {
            ('gcc-14', '-Os'): ok('gcc-14', '-Os', 10), ('gcc-14', '-O3'): ok('gcc-14', '-O3', 12),
            ('clang-18', '-Os'): ok('clang-18', '-Os', 20), ('clang-18', '-O3'): ok('clang-18', '-O3', 10),
        }
        candidate = evaluate(StrategyConfig(Strategy.PIPELINE), compilers, outcomes, PROGRAM)
        assert candidate.offender.compiler_id == 'clang-18'

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            StrategyConfig(Strategy.PIPELINE, pipeline_threshold=-0.01)


SIZES = st.integers(min_value=1, max_value=10_000)
THRESHOLDS = st.sampled_from([0, 0.05, 0.10, Fraction(1, 3)])


def emitted(sizes, threshold):
    """Every candidate the four checks produce for one size vector"""
    versions = [ok(f"gcc-{i}", '-Os', s) for i, s in enumerate(sizes)]
    flags = [ok('gcc', flag, s) for flag, s in zip(('-Os', '-O3', '-O2', '-O1'), sizes)]
    candidates = [
        dead_code_check(ok('gcc', '-Os', sizes[-1]), ok('gcc', '-Os', sizes[0]), PROGRAM),
        pipeline_check(flags, '-Os', PROGRAM, threshold),
        version_check(versions, PROGRAM, threshold),
        multi_compiler_check(versions, PROGRAM, threshold),
    ]
    return [c for c in candidates if c is not None]


class TestCheckProperties:

    @settings(max_examples=200, deadline=None)
    @given(st.lists(SIZES, min_size=2, max_size=4), THRESHOLDS, st.integers(min_value=2, max_value=1000))
    def test_scaling_sizes_keeps_decisions(self, sizes, threshold, k):
        original = emitted(sizes, threshold)
        scaled = emitted([s * k for s in sizes], threshold)
        assert [c.strategy for c in original] == [c.strategy for c in scaled]
        for a, b in zip(original, scaled):
            assert (a.offender.compiler_id, a.offender.opt_flag) == (b.offender.compiler_id, b.offender.opt_flag)
            assert a.ratio == b.ratio

    @settings(max_examples=200, deadline=None)
    @given(st.lists(SIZES, min_size=2, max_size=4), THRESHOLDS)
    def test_emitted_candidates_recheck_from_record(self, sizes, threshold):
        for candidate in emitted(sizes, threshold):
            assert candidate.recheck()
            assert candidate.offender.size > candidate.baseline.size * (1 + candidate.threshold)
