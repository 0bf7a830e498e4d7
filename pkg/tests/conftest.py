import re


def _criterion_key(nodeid):
    match = re.search(r"test_criterion_(\d+)_(\w+)", nodeid)
    if match:
        return int(match.group(1)), match.group(2)
    return None


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per release criterion when the acceptance module ran."""
    results = {}
    for rep in terminalreporter.stats.get("passed", []):
        if "test_acceptance" in rep.nodeid and rep.when == "call":
            key = _criterion_key(rep.nodeid)
            if key:
                results.setdefault(key, "PASS")
    for status in ("failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance" in getattr(rep, "nodeid", ""):
                key = _criterion_key(rep.nodeid)
                if key:
                    results[key] = "FAIL"
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for (number, name), verdict in sorted(results.items()):
        terminalreporter.write_line(f"criterion {number:02d} {name}: {verdict}")
