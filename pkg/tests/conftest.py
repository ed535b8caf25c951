from pathlib import Path

import pytest

from hierdx.knowledge_base import parse_kb

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def paper_y1_text():
    return (FIXTURES / "paper_y1.json").read_bytes()


@pytest.fixture()
def paper_y1(paper_y1_text):
    return parse_kb(paper_y1_text)
