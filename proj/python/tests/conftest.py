import json
import os
import pathlib
import shutil

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("NECKLACE_CLI") or shutil.which("necklace")
    if not path:
        candidate = ROOT / "build" / "tools" / "necklace"
        path = str(candidate) if candidate.exists() else None
    if not path:
        pytest.skip("necklace executable not built")
    return path


@pytest.fixture(scope="session")
def schema():
    def load(name):
        return json.loads((ROOT / "schemas" / f"{name}.schema.json").read_text())
    return load
