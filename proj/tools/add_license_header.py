#!/usr/bin/env python3
# Copyright 2026 The LanForge Authors
# SPDX-License-Identifier: Apache-2.0
"""Prepend the license header to C++ sources that lack it."""

import argparse
import pathlib
import sys

ROOTS = ("src", "include", "tools", "tests")
SUFFIXES = {".cpp", ".hpp", ".h", ".cc"}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("header", type=pathlib.Path, help="file holding the /* ... */ header")
    parser.add_argument("--repo", type=pathlib.Path, default=pathlib.Path(__file__).resolve().parents[1])
    args = parser.parse_args()

    header = args.header.read_text().rstrip("\n") + "\n\n"
    marker = header.splitlines()[1]
    changed = 0
    for root in ROOTS:
        for path in sorted((args.repo / root).rglob("*")):
            if path.suffix not in SUFFIXES or "fixtures" in path.parts:
                continue
            text = path.read_text()
            if marker in text[: len(header) + 200]:
                continue
            path.write_text(header + text)
            changed += 1
    print(f"added header to {changed} files")
    return 0


if __name__ == "__main__":
    sys.exit(main())
