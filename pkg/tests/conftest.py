import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    rows = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if m and (rep.when == "call" or outcome == "error"):
                key = (int(m.group(1)), m.group(2))
                # a criterion with several parametrized cases fails if any case fails
                rows[key] = "FAIL" if outcome != "passed" or rows.get(key) == "FAIL" else "PASS"
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for (n, name), status in sorted(rows.items()):
        terminalreporter.write_line(f"{status}  criterion {n:2d}  {name.replace('_', ' ')}")
