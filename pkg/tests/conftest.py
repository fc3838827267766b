import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_CRITERION_LINES = []


def record_criterion(number, description, passed):
    """Stash one acceptance-criterion verdict; printed after the run ends
    (terminal summary survives pytest's output capture)."""
    _CRITERION_LINES.append((number, description, bool(passed)))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERION_LINES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number, description, passed in sorted(_CRITERION_LINES):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}  {description}: {verdict}")
