from __future__ import annotations

from pathlib import Path

import pytest

from helpers import synthetic_sources


@pytest.fixture
def pipeline_config(tmp_path: Path) -> Path:
    return synthetic_sources(tmp_path)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
