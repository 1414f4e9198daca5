#!/usr/bin/env python3
"""
Scripted stand-in for a compiler.

Emits `base + per-stmt * (number of ';')` instructions, optionally inflated
once the source holds at least --inflate-from statements. Unknown options
(-Os, -O3, -S, ...) are accepted and ignored except for --inflate-flag.

Usage:
    fake_cc.py [options] <compiler flags> -o OUTPUT INPUT
"""

import argparse
import sys
import time
from pathlib import Path


def statement_count(source: str, drop_dead: bool) -> int:
    if drop_dead:
        source = "\n".join(
            line for line in source.splitlines()
            if "if (0)" not in line and "while (0" not in line
        )
    return source.count(";")


def main():
    parser = argparse.ArgumentParser(description="Fake compiler for sizeprobe tests")
    parser.add_argument("-o", dest="output", required=True)
    parser.add_argument("--base", type=int, default=1)
    parser.add_argument("--per-stmt", type=int, default=4)
    parser.add_argument("--inflate-from", type=int, default=None,
                        help="Statement count from which the output is inflated")
    parser.add_argument("--inflate-by", type=int, default=0)
    parser.add_argument("--inflate-flag", default=None,
                        help="Only inflate when this optimization flag is given")
    parser.add_argument("--drop-dead", action="store_true",
                        help="Remove if (0) / while (0) lines before counting")
    parser.add_argument("--fail-on", default="SYNTAX_ERROR",
                        help="Fail when the source contains this text")
    parser.add_argument("--counter", default=None,
                        help="File whose value is added to the size and incremented per call")
    parser.add_argument("--sleep", type=float, default=0.0)
    args, rest = parser.parse_known_args()

    inputs = [token for token in rest if not token.startswith("-") and Path(token).is_file()]
    if not inputs:
        print("fake_cc: no input file", file=sys.stderr)
        return 2
    source = Path(inputs[-1]).read_text(encoding="utf-8")

    if args.sleep:
        time.sleep(args.sleep)
    if args.fail_on and args.fail_on in source:
        print(f"{inputs[-1]}:1:1: error: expected expression", file=sys.stderr)
        return 1

    statements = statement_count(source, args.drop_dead)
    size = args.base + args.per_stmt * statements
    if args.inflate_from is not None and statements >= args.inflate_from:
        if args.inflate_flag is None or args.inflate_flag in rest:
            size += args.inflate_by
    if args.counter:
        counter = Path(args.counter)
        value = int(counter.read_text()) if counter.exists() else 0
        counter.write_text(str(value + 1))
        size += value

    lines = ["\t.text", "\t.globl f", "f:", "# fake_cc output"]
    lines += ["\tnop"] * size
    Path(args.output).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main())
