from pathlib import Path

import pytest

from tuplesieve.arith import build_tables, load_or_build

# big tables cover the N = 1e7 window plus the largest tuple offset used
BIG_LIMIT = 20_000_006
CACHE_DIR = Path(__file__).resolve().parent.parent / ".cache"


@pytest.fixture(scope="session")
def tables_small():
    return build_tables(20_012)


@pytest.fixture(scope="session")
def tables_big():
    return load_or_build(BIG_LIMIT, cache_dir=CACHE_DIR)
