"""
Tests for the toolchain: invocation templates, size measurement, compiles
through the fake compiler, drivers and coverage parsing.
"""

import shlex
import sys
import pytest
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from conftest import fake_compiler, fake_invocation, requires_cc
from core_model import CompilerSpec, SizeMetric, SourceProgram
from errors import CompileTimeout, EnvironmentUnstable, SignatureCorrupted, ToolchainMissing
from toolchain import (
    RunVerdict, Toolchain, ToolchainSettings, TIMEOUT_DIAGNOSTIC, added_lines, driver_line_map,
    expand_invocation, inserted_body_lines, is_block_header, measure_size, parse_gcov, parse_size_output,
    require_binaries, split_blocks, synthesize_driver,
)


SEED = 'int f(int a) { return 0; }'

FAILING_TOOL = "import sys; sys.stderr.write('bad directive'); sys.exit(1)"

TOUCH_OUTPUT = "import sys, pathlib; pathlib.Path(sys.argv[2]).write_bytes(b'')"


class TestInvocation:

    def test_flags_expand_into_tokens(self):
        argv = expand_invocation('gcc-14 {flags} -S -o {output} {input}', 'in.c', 'out.s', '-Os -fno-inline')
        assert argv == ['gcc-14', '-Os', '-fno-inline', '-S', '-o', 'out.s', 'in.c']

    def test_placeholder_inside_token(self):
        argv = expand_invocation('rustc --emit=asm={output} {input}', 'in.rs', 'out.s')
        assert argv == ['rustc', '--emit=asm=out.s', 'in.rs']

    def test_require_binaries(self):
        missing = CompilerSpec(id='ghost-1', invocation='no-such-compiler-xyz {flags} -o {output} {input}')
        with pytest.raises(ToolchainMissing, match='ghost-1'):
            require_binaries([fake_compiler('gcc-fake'), missing])


class TestMeasureSize:

    def test_counts_instructions_only(self):
        assembly = "\n".join([
            "\t.file\t\"x.c\"",
            "\t.text",
            "f:",
            ".LFB0:",
            "\t# comment",
            "\t// another",
            "\tmovl\t%edi, %eax",
            "",
            "\tret",
            "@ arm comment",
        ])
        assert measure_size(assembly).value == 2

    def test_text_section_needs_object(self):
        with pytest.raises(ValueError):
            measure_size("nop", SizeMetric.TEXT_SECTION_BYTES)

    def test_parse_size_output(self):
        output = "   text\t   data\t    bss\t    dec\t    hex\tfilename\n     83\t      0\t      0\t     83\t     53\tm.o\n"
        assert parse_size_output(output) == 83


class TestCompile:

    def test_fake_compile(self, toolchain, tmp_path):
        outcome = toolchain.compile_to_asm(fake_compiler('gcc-fake'), '-Os', SourceProgram('c', SEED), tmp_path)
        assert outcome.success
        assert outcome.size_value == 5
        assert (tmp_path / 'mutant.c').exists()
        assert (tmp_path / 'mutant-Os.s').exists()

    def test_inflation_by_flag(self, toolchain, tmp_path):
        compiler = fake_compiler('gcc-fake', '--inflate-from 1 --inflate-by 3 --inflate-flag=-Os')
        program = SourceProgram('c', SEED)
        assert toolchain.compile_to_asm(compiler, '-Os', program, tmp_path / 'os').size_value == 8
        assert toolchain.compile_to_asm(compiler, '-O3', program, tmp_path / 'o3').size_value == 5

    def test_compile_error(self, toolchain, tmp_path):
        program = SourceProgram('c', 'int f(int a) { SYNTAX_ERROR; }')
        outcome = toolchain.compile_to_asm(fake_compiler('gcc-fake'), '-Os', program, tmp_path)
        assert not outcome.success
        assert 'error' in outcome.diagnostics
        assert outcome.assembly == ''

    def test_empty_program(self, toolchain, tmp_path):
        with pytest.raises(ValueError):
            toolchain.compile_to_asm(fake_compiler('gcc-fake'), '-Os', SourceProgram('c', '  '), tmp_path)

    def test_timeout(self, tmp_path):
        toolchain = Toolchain(ToolchainSettings(compile_timeout=0.5))
        compiler = fake_compiler('gcc-slow', '--sleep 5')
        with pytest.raises(CompileTimeout) as excinfo:
            toolchain.compile_to_asm(compiler, '-Os', SourceProgram('c', SEED), tmp_path)
        assert excinfo.value.outcome.diagnostics == TIMEOUT_DIAGNOSTIC

    def test_run_folds_timeout(self, tmp_path):
        toolchain = Toolchain(ToolchainSettings(compile_timeout=0.5))
        run = toolchain.run(fake_compiler('gcc-slow', '--sleep 5'), '-Os', SourceProgram('c', SEED), tmp_path)
        assert not run.outcome.success
        assert run.input_digest == SourceProgram('c', SEED).digest

    def test_reproducible(self, toolchain, tmp_path):
        outcome = toolchain.verify_reproducible(fake_compiler('gcc-fake'), '-Os', SourceProgram('c', SEED), tmp_path)
        assert outcome.size_value == 5

    def test_unstable(self, toolchain, tmp_path):
        counter = tmp_path / 'counter'
        compiler = fake_compiler('gcc-flaky', f'--counter {shlex.quote(str(counter))}')
        with pytest.raises(EnvironmentUnstable):
            toolchain.verify_reproducible(compiler, '-Os', SourceProgram('c', SEED), tmp_path / 'scratch')

    def test_dynamic_checks_unavailable(self, toolchain, c_profile, tmp_path):
        driver = synthesize_driver(SourceProgram('c', SEED), c_profile)
        assert toolchain.run_sanitized(driver, c_profile, tmp_path).verdict is RunVerdict.UNAVAILABLE
        assert toolchain.run_validator(driver, c_profile, tmp_path).verdict is RunVerdict.UNAVAILABLE
        assert not toolchain.line_coverage(driver, c_profile, tmp_path).available

    def test_failing_assembler_is_failed_outcome(self, tmp_path):
        assembler = f"{shlex.quote(sys.executable)} -c {shlex.quote(FAILING_TOOL)} {{input}} {{output}}"
        toolchain = Toolchain(ToolchainSettings(metric=SizeMetric.TEXT_SECTION_BYTES,
                                                assembler_invocation=assembler, size_tool=sys.executable))
        outcome = toolchain.compile_to_asm(fake_compiler('gcc-fake'), '-Os', SourceProgram('c', SEED), tmp_path)
        assert not outcome.success
        assert outcome.size is None
        assert 'bad directive' in outcome.diagnostics

    def test_run_survives_failing_size_tool(self, tmp_path):
        assembler = f"{shlex.quote(sys.executable)} -c {shlex.quote(TOUCH_OUTPUT)} {{input}} {{output}}"
        size_tool = tmp_path / 'size'
        size_tool.write_text(f"#!{sys.executable}\nimport sys\nsys.stderr.write('no text section')\nsys.exit(3)\n")
        size_tool.chmod(0o755)
        toolchain = Toolchain(ToolchainSettings(metric=SizeMetric.TEXT_SECTION_BYTES,
                                                assembler_invocation=assembler, size_tool=str(size_tool)))
        run = toolchain.run(fake_compiler('gcc-fake'), '-Os', SourceProgram('c', SEED), tmp_path / 'scratch')
        assert not run.outcome.success
        assert 'no text section' in run.outcome.diagnostics


class TestValidatorHook:

    def test_exit_status_decides(self, c_profile, tmp_path):
        script = tmp_path / 'validator.py'
        script.write_text("import sys\nsys.exit(1 if 'a / 0' in open(sys.argv[1]).read() else 0)\n")
        template = f"{shlex.quote(sys.executable)} {shlex.quote(str(script))} {{input}}"
        toolchain = Toolchain(ToolchainSettings(validator_invocation=template))
        clean = synthesize_driver(SourceProgram('c', SEED), c_profile)
        bad = synthesize_driver(SourceProgram('c', 'int f(int a) { return a / 0; }'), c_profile)
        assert toolchain.run_validator(clean, c_profile, tmp_path / 'ok').verdict is RunVerdict.CLEAN
        assert toolchain.run_validator(bad, c_profile, tmp_path / 'bad').verdict is RunVerdict.FLAGGED


class TestDrivers:

    def test_driver_requires_function(self, c_profile):
        with pytest.raises(SignatureCorrupted):
            synthesize_driver(SourceProgram('c', 'int g(int a) { return 0; }'), c_profile)

    def test_line_map_c(self, c_profile):
        code = "int f(int a) {\n    a += 1;\n    return 0; }"
        assert driver_line_map(code, c_profile) == {1: 1, 2: 2, 3: 3}

    def test_line_map_skips_stripped_lines(self):
        from languages import get_profile
        rust = get_profile('rust')
        code = "#![no_main]\n#[no_mangle]\npub fn f(a: i32) -> i32 { 0 }"
        assert driver_line_map(code, rust) == {2: 1, 3: 2}


class TestCoverageParsing:

    def test_parse_gcov(self):
        text = "\n".join([
            "        -:    0:Source:covered.c",
            "        -:    1:int f(int a) {",
            "        4:    2:    a += 1;",
            "    #####:    3:    if (0) { a += 2; }",
            "       4*:    4:    return 0; }",
            "    =====:    5:    unreachable();",
        ])
        assert parse_gcov(text) == {1: 0, 2: 4, 3: 0, 4: 4, 5: 0}


class TestAddedLines:

    def test_inserted_statement(self):
        before = "int f(int a) {\n    return 0; }"
        after = "int f(int a) {\n    if (0) { a += 1; }\n    return 0; }"
        assert added_lines(before, after) == {2}

    def test_reindent_is_not_added(self):
        before = "int f(int a) { return 0; }"
        after = "int f(int a) {\n    return 0;\n}"
        assert added_lines(before, after) == set()

    def test_header_and_body_on_separate_lines(self):
        before = "int f(int a) {\n    return 0; }"
        after = "int f(int a) {\n    while (a > 100) {\n        a -= 1;\n    }\n    return 0; }"
        assert added_lines(before, after) == {2, 3, 4}


LOOP_BEFORE = """long f(long a) {
    long x = 0;
    while (x < 10) {
        if (x % 2 == 0) { x += 2; }
        else { x += 1; }
    }
    return x;
}"""

LOOP_AFTER = """long f(long a) {
    long x = 0;
    while (x < 10) {
        if (x % 2 == 0) { x += 2; }
        else { x += 1; }
        if ((x > 20) && (x % 5 == 0)) { x -= 5; }
        if ((x < -5) && (x % 3 == 0)) { x += 3; }
    }
    return x;
}"""


class TestSplitBlocks:

    def test_one_line_conditional(self):
        code = "int f(int a) {\n    if (0) { a += 1; }\n    return 0; }"
        assert split_blocks(code) == "int f(int a) {\nif (0) {\na += 1;\n}\nreturn 0;\n}"

    def test_braceless_bodies(self):
        code = "int f(int a) { if (a > 1) a -= 1; else a += 2; return a; }"
        assert split_blocks(code).splitlines() == [
            "int f(int a) {", "if (a > 1)", "a -= 1;", "else", "a += 2;", "return a;", "}",
        ]

    def test_initializers_and_for_headers_stay_whole(self):
        code = "int f(int a) { int s[3] = {a, 1, 2}; for (int i = 0; i < 3; i++) { a += s[i]; } return a; }"
        assert split_blocks(code).splitlines() == [
            "int f(int a) {", "int s[3] = {a, 1, 2};", "for (int i = 0; i < 3; i++) {", "a += s[i];", "}",
            "return a;", "}",
        ]

    def test_preprocessor_and_literals_untouched(self):
        code = '#include <stdio.h>\nint f(int a) { const char *s = "{;}"; return a; }'
        assert split_blocks(code).splitlines() == [
            "#include <stdio.h>", "int f(int a) {", 'const char *s = "{;}";', "return a;", "}",
        ]

    def test_unparenthesized_conditions(self):
        code = "pub fn f(a: i32) -> i32 { if a > 1 { return 1; } 0 }"
        assert split_blocks(code, paren_conditions=False).splitlines() == [
            "pub fn f(a: i32) -> i32 {", "if a > 1 {", "return 1;", "}", "0", "}",
        ]

    def test_only_whitespace_changes(self):
        assert "".join(split_blocks(LOOP_AFTER).split()) == "".join(LOOP_AFTER.split())


class TestInsertedBodyLines:

    def test_header_is_not_a_body_line(self):
        before = split_blocks("int f(int a) { return 0; }")
        after = split_blocks("int f(int a) {\n    if (0) { a += 1; }\n    return 0; }")
        assert inserted_body_lines(before, after) == {3}

    def test_dead_conditionals_inside_loop(self):
        after = split_blocks(LOOP_AFTER)
        lines = after.splitlines()
        inserted = inserted_body_lines(split_blocks(LOOP_BEFORE), after)
        assert {lines[n - 1] for n in inserted} == {"x -= 5;", "x += 3;"}

    def test_changed_header_brings_its_body(self):
        before = split_blocks("int f(int a) {\n    if (0) { a += 1; }\n    return 0; }")
        after = split_blocks("int f(int a) {\n    if (a > 5) { a += 1; }\n    return 0; }")
        assert inserted_body_lines(before, after) == {3}

    def test_braceless_header_governs_next_line(self):
        before = split_blocks("int f(int a) { return a; }")
        after = split_blocks("int f(int a) { if (a > 100) a -= 1; return a; }")
        assert inserted_body_lines(before, after) == {3}

    def test_header_lines(self):
        for line in ("if (x) {", "}", "};", "else", "if (x)", "while (x);", "case 3:", "default:"):
            assert is_block_header(line), line
        for line in ("x += 1;", "return 0;", "int s[3] = {a, 1, 2};"):
            assert not is_block_header(line), line


@requires_cc
class TestRealCompiler:
    """Runs only where gcc and gcov are installed."""

    def test_gcc_size(self, toolchain, tmp_path):
        gcc = CompilerSpec(id='gcc-local', invocation='gcc {flags} -S -o {output} {input}')
        outcome = toolchain.compile_to_asm(gcc, '-Os', SourceProgram('c', SEED), tmp_path)
        assert outcome.success
        assert outcome.size_value >= 1

    def test_coverage_counts_dead_branch_zero(self, c_profile, tmp_path):
        toolchain = Toolchain(ToolchainSettings(
            coverage_invocation='gcc -O0 --coverage -o {output} {input}'))
        code = "int f(int a) {\n    if (0) { a += 1; }\n    return 0; }"
        driver = synthesize_driver(SourceProgram('c', code), c_profile)
        report = toolchain.line_coverage(driver, c_profile, tmp_path)
        assert report.available and report.terminated
        mapping = driver_line_map(code, c_profile)
        assert report.line_counts.get(mapping[2], 0) == 0
        assert report.line_counts.get(mapping[3], 0) == 4
