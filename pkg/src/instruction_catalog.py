#!/usr/bin/env python3
"""
Mutation Instruction Catalog
Provides the default list of instructions the mutation engine samples from
"""

import json
import re
from pathlib import Path
from typing import List, Dict, Any, Optional, Union

from core_model import MutationInstruction, Category, Deadness

# DEFAULT INSTRUCTIONS - 15 entries in four categories
# The catalog is user editable: `load_catalog()` reads the same shape from JSON.

DEFAULT_INSTRUCTIONS = [
    # Control flow
    {'id': 'cf_conditional', 'category': 'ControlFlow', 'deadness': 'Live',
     'text': 'add a conditional statement with a statement inside'},
    {'id': 'cf_nested_conditional', 'category': 'ControlFlow', 'deadness': 'Live',
     'text': 'add a nested conditional statement with a non trivial condition and a statement inside'},
    {'id': 'cf_dead_conditional', 'category': 'ControlFlow', 'deadness': 'Dead',
     'text': 'add a dead conditional statement with a statement inside'},
    {'id': 'cf_dead_nested_conditional', 'category': 'ControlFlow', 'deadness': 'Dead',
     'text': 'add a dead nested conditional statement with a non trivial condition and a statement inside'},
    {'id': 'cf_loop', 'category': 'ControlFlow', 'deadness': 'Live',
     'text': 'add a loop with a complex condition and statement inside'},
    {'id': 'cf_dead_loop', 'category': 'ControlFlow', 'deadness': 'Dead',
     'text': 'add a dead loop with a complex condition and statement inside'},
    {'id': 'cf_nested_loop', 'category': 'ControlFlow', 'deadness': 'Live',
     'text': 'add a nested loop with a complex condition and a statement inside'},
    {'id': 'cf_dead_nested_loop', 'category': 'ControlFlow', 'deadness': 'Dead',
     'text': 'add a dead nested loop with a complex condition and a statement inside'},

    # Conditionals
    {'id': 'cond_complicate', 'category': 'Conditionals', 'deadness': 'Live',
     'text': 'make a condition more complicated'},
    {'id': 'cond_dead_complicate', 'category': 'Conditionals', 'deadness': 'Dead',
     'text': 'make a dead condition more complicated'},

    # Aggregates / pointers
    {'id': 'agg_array', 'category': 'AggregatesPointers', 'deadness': 'Live',
     'text': 'add array code'},
    {'id': 'agg_pointers', 'category': 'AggregatesPointers', 'deadness': 'Live',
     'text': 'add pointers code'},
    {'id': 'agg_struct', 'category': 'AggregatesPointers', 'deadness': 'Live',
     'text': 'add struct code usage'},
    {'id': 'agg_union', 'category': 'AggregatesPointers', 'deadness': 'Live',
     'text': 'add union code usage',
     'per_language_text': {'swift': 'add enumeration code usage'}},

    # Function arguments
    {'id': 'fn_arguments', 'category': 'FunctionArguments', 'deadness': 'Live',
     'text': 'add function arguments to a function that already exists, no default arguments'},
]

# Fixed allowlist used to check the deadness flag of the default entries
DEAD_INSTRUCTION_IDS = frozenset({
    'cf_dead_conditional',
    'cf_dead_nested_conditional',
    'cf_dead_loop',
    'cf_dead_nested_loop',
    'cond_dead_complicate',
})

DEFAULT_INSTRUCTION_IDS = frozenset(entry['id'] for entry in DEFAULT_INSTRUCTIONS)

_DEAD_WORD = re.compile(r'\bdead\b', re.IGNORECASE)


def expected_deadness(instruction_id: str, text: str) -> Deadness:
    """Deadness a catalog entry must declare: allowlist for known ids, wording otherwise"""
    if instruction_id in DEFAULT_INSTRUCTION_IDS:
        dead = instruction_id in DEAD_INSTRUCTION_IDS
    else:
        dead = bool(_DEAD_WORD.search(text))
    return Deadness.DEAD if dead else Deadness.LIVE


def instruction_from_dict(entry: Dict[str, Any]) -> MutationInstruction:
    """
    Build and validate one catalog entry.

    Raises:
        ValueError: On unknown category/deadness or a deadness flag that
            contradicts the allowlist
    """
    try:
        category = Category(entry['category'])
    except ValueError:
        valid = ', '.join(c.value for c in Category)
        raise ValueError(f"Invalid category '{entry['category']}'. Must be one of: {valid}")
    deadness = Deadness(entry.get('deadness', 'Live'))
    instruction = MutationInstruction(
        id=entry['id'],
        category=category,
        text=entry['text'],
        deadness=deadness,
        per_language_text=dict(entry.get('per_language_text') or {}),
    )
    expected = expected_deadness(instruction.id, instruction.text)
    if instruction.deadness is not expected:
        raise ValueError(
            f"Instruction '{instruction.id}' declares {instruction.deadness.value} "
            f"but must be {expected.value}"
        )
    return instruction


def default_catalog() -> List[MutationInstruction]:
    """Get the 15 default instructions"""
    return [instruction_from_dict(entry) for entry in DEFAULT_INSTRUCTIONS]


def load_catalog(path: Optional[Union[str, Path]] = None) -> List[MutationInstruction]:
    """
    Load an instruction catalog.

    Args:
        path: JSON file holding a list of {id, category, text, deadness,
              per_language_text}; None returns the default catalog

    Returns:
        Validated instructions in file order
    """
    if path is None:
        return default_catalog()
    with open(path, 'r', encoding='utf-8') as f:
        entries = json.load(f)
    if not isinstance(entries, list):
        raise ValueError(f"Catalog {path} must contain a JSON list")
    catalog = [instruction_from_dict(entry) for entry in entries]
    ids = [i.id for i in catalog]
    duplicates = sorted({i for i in ids if ids.count(i) > 1})
    if duplicates:
        raise ValueError(f"Duplicate instruction ids in {path}: {', '.join(duplicates)}")
    return catalog


def dump_catalog(catalog: List[MutationInstruction]) -> str:
    """Serialize a catalog in the same shape `load_catalog()` reads"""
    return json.dumps([i.to_dict() for i in catalog], indent=2, ensure_ascii=False)


def catalog_by_id(catalog: List[MutationInstruction]) -> Dict[str, MutationInstruction]:
    return {instruction.id: instruction for instruction in catalog}


if __name__ == "__main__":
    catalog = default_catalog()
    print(f"📋 {len(catalog)} mutation instructions")
    for category in Category:
        entries = [i for i in catalog if i.category is category]
        print(f"\n{category.value} ({len(entries)})")
        for instruction in entries:
            marker = '💀' if instruction.deadness is Deadness.DEAD else '  '
            print(f"  {marker} {instruction.id:28s} {instruction.text}")
