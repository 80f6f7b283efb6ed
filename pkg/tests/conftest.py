import pathlib

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

# criterion id -> [(ok, detail), ...], filled by test_acceptance.py
ACCEPTANCE = {}


def record(criterion: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=int):
        parts = ACCEPTANCE[key]
        ok = all(p[0] for p in parts)
        detail = "; ".join(p[1] for p in parts)
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def configs_dir():
    return CONFIGS
