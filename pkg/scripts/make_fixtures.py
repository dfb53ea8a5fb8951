#!/usr/bin/env python3
"""Regenerate the recorded corpus under fixtures/.

Run from the repository root after changing prompt templates, checker prompt
shapes, or the corpus scenarios:

    python scripts/make_fixtures.py
"""

import shutil
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "tests"))

from helpers.corpus import record_corpus, write_benchmark  # noqa: E402
from helpers.corpus5 import (  # noqa: E402
    BENCHMARK_PATH,
    EXCHANGES_DIR,
    FIXTURES_DIR,
    mbpp5_config,
    mbpp5_scripts,
)


def main() -> int:
    FIXTURES_DIR.mkdir(exist_ok=True)
    if EXCHANGES_DIR.exists():
        shutil.rmtree(EXCHANGES_DIR)
    scripts = mbpp5_scripts()
    write_benchmark(scripts, BENCHMARK_PATH)
    record_corpus(scripts, BENCHMARK_PATH, EXCHANGES_DIR, [mbpp5_config()])
    count = len(list(EXCHANGES_DIR.glob("*.json")))
    print(f"wrote {BENCHMARK_PATH} and {count} exchange fixtures in {EXCHANGES_DIR}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
