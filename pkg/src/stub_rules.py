"""
Deterministic mutation rules used by the stub provider.

Each rule is a plain callable ``code -> code``. Insertions land on their own
line right after the opening brace of the function under test, with fresh
identifiers (sp1, sp2, ...) derived from the code itself, so the same input
always yields the same output.
"""

import re
from typing import Callable, Dict, Optional

from core_model import LanguageProfile
from languages import definition_regex

StubRule = Callable[[str], str]

C_SNIPPETS = {
    'cf_conditional': 'if (a > {n}) { a += {n}; }',
    'cf_nested_conditional': 'if (a > {n}) { if ((a % 2 == 0) && (a < {n}00)) { a -= {n}; } }',
    'cf_dead_conditional': 'if (0) { a += {n}; }',
    'cf_dead_nested_conditional': 'if (0) { if ((a > {n}) && (a % 3 == 0)) { a -= {n}; } }',
    'cf_loop': 'while ((a > 0) && (a < {n}00)) { a += {n}; }',
    'cf_dead_loop': 'while (0 && (a > {n})) { a -= {n}; }',
    'cf_nested_loop': 'while (a > 1000 + {n}) { while ((a % 2 == 0) && (a > {n})) { a -= 1; } a -= 1; }',
    'cf_dead_nested_loop': 'while (0) { while ((a > {n}) && (a % 2 == 0)) { a -= 1; } }',
    'agg_array': 'int sp{n}[3] = {a, {n}, a + {n}}; a += sp{n}[1];',
    'agg_pointers': 'int sp{n} = a; int *sp{n}p = &sp{n}; a = *sp{n}p + {n};',
    'agg_struct': 'struct sp{n}s { int v; } sp{n} = { a }; a = sp{n}.v + {n};',
    'agg_union': 'union sp{n}u { int i; unsigned u; } sp{n}; sp{n}.i = a; a = sp{n}.i + {n};',
}

C_HELPER = 'static int sp{n}h(int x, int y) { return x + y; }'
C_HELPER_CALL = 'a = sp{n}h(a, {n});'

RUST_SNIPPETS = {
    'cf_conditional': 'if a > {n} { let _ = a.wrapping_add({n}); }',
    'cf_nested_conditional': 'if a > {n} { if a % 2 == 0 && a < {n}00 { let _ = a.wrapping_sub({n}); } }',
    'cf_dead_conditional': 'if false { let _ = a.wrapping_add({n}); }',
    'cf_dead_nested_conditional': 'if false { if a > {n} && a % 3 == 0 { let _ = a.wrapping_sub({n}); } }',
    'cf_loop': 'let mut sp{n} = 0; while sp{n} < {n} && a > 0 { sp{n} += 1; }',
    'cf_dead_loop': 'while false && a > {n} { let _ = a; }',
    'cf_nested_loop': 'let mut sp{n} = 0; while sp{n} < {n} { let mut sp{n}i = 0; while sp{n}i < 2 && a > 0 { sp{n}i += 1; } sp{n} += 1; }',
    'cf_dead_nested_loop': 'while false { while a > {n} && a % 2 == 0 { let _ = a; } }',
    'agg_array': 'let sp{n} = [a, {n}, a.wrapping_add({n})]; let _ = sp{n}[1];',
    'agg_pointers': 'let sp{n} = &a; let _ = *sp{n};',
    'agg_struct': 'struct Sp{n} { v: i32 } let sp{n} = Sp{n} { v: a }; let _ = sp{n}.v;',
    'agg_union': 'union Sp{n} { i: i32, u: u32 } let sp{n} = Sp{n} { i: a }; let _ = unsafe { sp{n}.i };',
    'fn_arguments': 'fn sp{n}h(x: i32, y: i32) -> i32 { x.wrapping_add(y) } let _ = sp{n}h(a, {n});',
}

SWIFT_SNIPPETS = {
    'cf_conditional': 'if a > {n} { _ = a &+ {n} }',
    'cf_nested_conditional': 'if a > {n} { if a % 2 == 0 && a < {n}00 { _ = a &- {n} } }',
    'cf_dead_conditional': 'if false { _ = a &+ {n} }',
    'cf_dead_nested_conditional': 'if false { if a > {n} && a % 3 == 0 { _ = a &- {n} } }',
    'cf_loop': 'var sp{n} = 0; while sp{n} < {n} && a > 0 { sp{n} += 1 }',
    'cf_dead_loop': 'while false && a > {n} { _ = a }',
    'cf_nested_loop': 'var sp{n} = 0; while sp{n} < {n} { var sp{n}i = 0; while sp{n}i < 2 && a > 0 { sp{n}i += 1 }; sp{n} += 1 }',
    'cf_dead_nested_loop': 'while false { while a > {n} && a % 2 == 0 { _ = a } }',
    'agg_array': 'let sp{n} = [a, {n}, a &+ {n}]; _ = sp{n}[1]',
    'agg_pointers': 'var sp{n} = a; withUnsafeMutablePointer(to: &sp{n}) { $0.pointee &+= {n} }',
    'agg_struct': 'struct Sp{n} { var v: Int }; let sp{n} = Sp{n}(v: a); _ = sp{n}.v',
    'agg_union': 'enum Sp{n} { case low, high }; let sp{n} = a > {n} ? Sp{n}.high : Sp{n}.low; _ = sp{n}',
    'fn_arguments': 'func sp{n}h(x: Int, y: Int) -> Int { return x &+ y }; _ = sp{n}h(x: a, y: {n})',
}

_FRESH = re.compile(r'\b[Ss]p(\d+)')
_EQUALITY = re.compile(r'\(\s*([A-Za-z_]\w*)\s*==\s*(-?\d+)\s*\)')
_DEAD_IF = re.compile(r'\bif\s*\(\s*0\s*\)')
_DEAD_WHILE = re.compile(r'\bwhile\s*\(\s*0\s*(&&|\))')


def fresh_index(code: str) -> int:
    """Next unused spN index in the code"""
    used = [int(m.group(1)) for m in _FRESH.finditer(code)]
    return max(used, default=0) + 1


def insert_in_body(code: str, profile: LanguageProfile, snippet: str) -> str:
    """
    Put a snippet on its own line right after the opening brace of the
    function under test. Code without the function is returned unchanged.
    """
    match = definition_regex(profile).search(code)
    if not match:
        return code
    brace = code.find('{', match.start())
    if brace < 0:
        return code
    head, rest = code[:brace + 1], code[brace + 1:]
    if rest.startswith('\n'):
        return f"{head}\n    {snippet}{rest}"
    return f"{head}\n    {snippet}\n    {rest.lstrip()}"


def insert_before_function(code: str, profile: LanguageProfile, text: str) -> str:
    match = definition_regex(profile).search(code)
    if not match:
        return code
    line_start = code.rfind('\n', 0, match.start()) + 1
    return f"{code[:line_start]}{text}\n{code[line_start:]}"


def complicate_condition(code: str, n: int) -> str:
    """
    Rewrite a condition without changing its meaning.

    (x == 10) becomes (x >= 10 && x <= 10); otherwise the first if/while
    condition gets an always-true conjunct.
    """
    match = _EQUALITY.search(code)
    if match:
        name, value = match.group(1), match.group(2)
        return code[:match.start()] + f"({name} >= {value} && {name} <= {value})" + code[match.end():]
    span = _first_condition_span(code)
    if span is None:
        return code
    start, end = span
    return code[:start] + f"({code[start:end]}) && (a != a + {n} || a == a)" + code[end:]


def complicate_dead_condition(code: str, n: int) -> str:
    """Grow the condition of an existing dead construct, keeping it false"""
    if _DEAD_IF.search(code):
        return _DEAD_IF.sub(f"if (0 && (a > {n} || a < -{n}))", code, count=1)
    match = _DEAD_WHILE.search(code)
    if match:
        tail = ' &&' if match.group(1) == '&&' else ')'
        replacement = f"while (0 && (a != {n}){tail}"
        return code[:match.start()] + replacement + code[match.end():]
    return complicate_condition(code, n)


def _first_condition_span(code: str) -> Optional[tuple]:
    """(start, end) of the text inside the first if/while parentheses"""
    match = re.search(r'\b(?:if|while)\s*\(', code)
    if not match:
        return None
    depth = 0
    for pos in range(match.end() - 1, len(code)):
        if code[pos] == '(':
            depth += 1
        elif code[pos] == ')':
            depth -= 1
            if depth == 0:
                return match.end(), pos
    return None


def _snippet_rule(profile: LanguageProfile, template: str) -> StubRule:
    def rule(code: str) -> str:
        n = fresh_index(code)
        return insert_in_body(code, profile, template.replace('{n}', str(n)))
    return rule


def _c_helper_rule(profile: LanguageProfile) -> StubRule:
    def rule(code: str) -> str:
        n = str(fresh_index(code))
        code = insert_before_function(code, profile, C_HELPER.replace('{n}', n))
        return insert_in_body(code, profile, C_HELPER_CALL.replace('{n}', n))
    return rule


def _condition_rule(transform: Callable[[str, int], str]) -> StubRule:
    def rule(code: str) -> str:
        return transform(code, fresh_index(code))
    return rule


def default_rules(profile: LanguageProfile) -> Dict[str, StubRule]:
    """
    Rule table for the 15 default instructions in the given language.

    Args:
        profile: Language profile (c/cpp share the C snippets)

    Returns:
        {instruction_id: rule}
    """
    if profile.id == 'rust':
        snippets = RUST_SNIPPETS
    elif profile.id == 'swift':
        snippets = SWIFT_SNIPPETS
    else:
        snippets = C_SNIPPETS

    rules = {instruction_id: _snippet_rule(profile, template) for instruction_id, template in snippets.items()}
    if 'fn_arguments' not in rules:
        rules['fn_arguments'] = _c_helper_rule(profile)
    rules['cond_complicate'] = _condition_rule(complicate_condition)
    rules['cond_dead_complicate'] = _condition_rule(complicate_dead_condition)
    return rules
