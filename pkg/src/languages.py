#!/usr/bin/env python3
"""
Language Profiles
Seed programs, driver templates and keyword tables for each supported language
"""

import dataclasses
import re
from typing import Dict, Any, Optional, Iterable

from core_model import LanguageProfile
from errors import UnknownLanguage

C_DEFINITION = r"\b[A-Za-z_]\w*[\s*&]+{symbol}\s*\([^;{}]*\)\s*(?:const\s*)?\{"

C_DRIVER = """{code}

#include <stdio.h>

int main(void) {
    volatile long sizeprobe_sink = 0;
{calls}
    printf("%ld\\n", (long)sizeprobe_sink);
    return 0;
}
"""

CPP_DRIVER = """{code}

#include <cstdio>

int main() {
    volatile long sizeprobe_sink = 0;
{calls}
    std::printf("%ld\\n", (long)sizeprobe_sink);
    return 0;
}
"""

RUST_DRIVER = """{code}

fn main() {
    let mut sizeprobe_sink: i64 = 0;
{calls}
    println!("{}", std::hint::black_box(sizeprobe_sink));
}
"""

SWIFT_DRIVER = """{code}

var sizeprobeSink = 0
{calls}
print(sizeprobeSink)
"""

BUILTIN_PROFILES = {
    'c': LanguageProfile(
        id='c',
        display_name='C',
        seed_code='int f(int a) { return 0; }',
        function_symbol='f',
        driver_template=C_DRIVER,
        call_template='    sizeprobe_sink += (long)f({input});',
        definition_pattern=C_DEFINITION,
        source_suffix='.c',
        control_keywords=('if', 'for', 'while', 'switch'),
    ),
    'cpp': LanguageProfile(
        id='cpp',
        display_name='C++',
        seed_code='int f(int a) { return 0; }',
        function_symbol='f',
        driver_template=CPP_DRIVER,
        call_template='    sizeprobe_sink += (long)f({input});',
        definition_pattern=C_DEFINITION,
        source_suffix='.cpp',
        control_keywords=('if', 'for', 'while', 'switch'),
    ),
    'rust': LanguageProfile(
        id='rust',
        display_name='Rust',
        seed_code='#![no_main]\n#[no_mangle]\npub fn f(a: i32) -> i32 { 0 }',
        function_symbol='f',
        driver_template=RUST_DRIVER,
        call_template='    sizeprobe_sink += f(std::hint::black_box({input})) as i64;',
        definition_pattern=r"\bfn\s+{symbol}\s*(?:<[^>]*>)?\s*\(",
        source_suffix='.rs',
        control_keywords=('if', 'for', 'while', 'loop', 'match'),
        driver_strip_lines=('#![no_main]',),
    ),
    'swift': LanguageProfile(
        id='swift',
        display_name='Swift',
        seed_code='func f(a: Int) -> Int { return a }',
        function_symbol='f',
        driver_template=SWIFT_DRIVER,
        call_template='sizeprobeSink &+= f(a: {input})',
        definition_pattern=r"\bfunc\s+{symbol}\s*(?:<[^>]*>)?\s*\(",
        source_suffix='.swift',
        control_keywords=('if', 'for', 'while', 'switch', 'guard', 'repeat'),
        has_unions=False,
    ),
}


def get_profile(language: str, overrides: Optional[Dict[str, Dict[str, Any]]] = None) -> LanguageProfile:
    """
    Resolve a language id to its profile.

    Args:
        language: Language id ("c", "cpp", "rust", "swift" or a configured one)
        overrides: Optional {language: {field: value}} from the config file

    Raises:
        UnknownLanguage: If the language has neither a built-in nor a configured profile
    """
    profiles = build_profiles(overrides)
    if language not in profiles:
        raise UnknownLanguage(
            f"Unknown language '{language}'. Configured: {', '.join(sorted(profiles))}"
        )
    return profiles[language]


def build_profiles(overrides: Optional[Dict[str, Dict[str, Any]]] = None) -> Dict[str, LanguageProfile]:
    """Built-in profiles with config overrides applied (new ids need every field)"""
    profiles = dict(BUILTIN_PROFILES)
    for language, fields in (overrides or {}).items():
        fields = dict(fields)
        for key in ('control_keywords', 'driver_strip_lines'):
            if key in fields:
                fields[key] = tuple(fields[key])
        if language in profiles:
            profiles[language] = dataclasses.replace(profiles[language], **fields)
        else:
            profiles[language] = LanguageProfile(id=language, **fields)
    return profiles


def definition_regex(profile: LanguageProfile) -> re.Pattern:
    """Compiled regex matching a definition of the function under test"""
    pattern = profile.definition_pattern.replace('{symbol}', re.escape(profile.function_symbol))
    return re.compile(pattern)


def defines_function(code: str, profile: LanguageProfile) -> bool:
    return definition_regex(profile).search(code) is not None


def has_control_flow(code: str, profile: LanguageProfile) -> bool:
    """Plain keyword scan: does the code already contain a loop or conditional?"""
    words = '|'.join(re.escape(k) for k in profile.control_keywords)
    return re.search(rf'\b(?:{words})\b', code) is not None


def render_driver(code: str, profile: LanguageProfile, inputs: Iterable[int]) -> str:
    """Wrap a mutant with an entry point calling the function under test once per input"""
    kept = [line for line in code.splitlines() if line.strip() not in profile.driver_strip_lines]
    calls = '\n'.join(profile.call_template.replace('{input}', str(value)) for value in inputs)
    return profile.driver_template.replace('{code}', '\n'.join(kept)).replace('{calls}', calls)
