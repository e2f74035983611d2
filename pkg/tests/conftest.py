from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def wdbc_path():
    return REPO_ROOT / "data" / "wdbc.data"


@pytest.fixture(scope="session")
def wdbc_records(wdbc_path):
    from hopp.dataset import load_wdbc

    return load_wdbc(wdbc_path)


@pytest.fixture(scope="session")
def procedures_dir():
    return REPO_ROOT / "procedures"
