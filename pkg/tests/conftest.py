"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        props = dict(report.user_properties)
        _ACCEPTANCE[report.nodeid] = (report.outcome, props)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (outcome, props) in sorted(_ACCEPTANCE.items(), key=lambda kv: kv[1][1].get("criterion", 99)):
        status = "PASS" if outcome == "passed" else "FAIL"
        label = props.get("label", nodeid.split("::")[-1])
        measured = props.get("measured", "")
        terminalreporter.write_line(f"[{status}] criterion {props.get('criterion', '?'):>2}: {label}  {measured}")
