"""Collects per-criterion outcomes of the acceptance suite and prints one
pass/fail line per criterion at the end of the run."""
import pytest

_markers = {}
_criteria = {}


def _entry(n, text=""):
    return _criteria.setdefault(n, {"text": text, "passed": True, "tests": 0, "notes": []})


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _markers[item.nodeid] = m.args


def pytest_runtest_logreport(report):
    marker = _markers.get(report.nodeid)
    if marker is None:
        return
    failed_setup = report.when == "setup" and report.outcome != "passed"
    if report.when != "call" and not failed_setup:
        return
    entry = _entry(*marker)
    entry["text"] = marker[1]
    entry["tests"] += 1
    entry["passed"] &= report.outcome == "passed"


@pytest.fixture
def note(request):
    """``note("...")`` attaches a measured value to the test's criterion line."""
    m = request.node.get_closest_marker("criterion")
    entry = _entry(*m.args) if m else None

    def _note(text):
        if entry is not None:
            entry["notes"].append(text)

    return _note


def pytest_terminal_summary(terminalreporter):
    if not any(e["tests"] for e in _criteria.values()):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        verdict = "PASS" if e["passed"] else "FAIL"
        line = f"criterion {n}: {verdict}  {e['text']}"
        if e["notes"]:
            line += "  [" + "; ".join(e["notes"]) + "]"
        terminalreporter.write_line(line)
