import json
from pathlib import Path

import pytest

ORACLE_FILE = Path(__file__).parent / "oracles" / "oracles.json"


@pytest.fixture(scope="session")
def oracles():
    return json.loads(ORACLE_FILE.read_text())


def as_complex(pair):
    return complex(pair[0], pair[1])
