import sys
from collections import OrderedDict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: "OrderedDict[int, list]" = OrderedDict()


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA.setdefault(props["criterion"], []).append(
            (report.head_line.split(".")[-1], report.outcome, props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_CRITERIA):
        rows = _CRITERIA[crit]
        ok = all(outcome == "passed" for _, outcome, _ in rows)
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}")
        for name, outcome, detail in rows:
            tr.write_line(f"    {outcome:7s} {name}{': ' + detail if detail else ''}")


@pytest.fixture
def criterion(record_property):
    """Tag a test with its acceptance criterion and attach a detail string."""
    def tag(number, detail=""):
        record_property("criterion", number)
        if detail:
            record_property("detail", detail)
    return tag
