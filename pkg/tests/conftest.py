"""Shared pytest hooks.

Each acceptance test prints one CRITERION line; pytest captures those prints,
so this hook replays them in the terminal summary where they stay visible in a
plain ``pytest -v`` run. A criterion test that fails gets a FAIL line derived
from its name, pointing at the failure detail above.
"""

import re

_CRITERION_TEST = re.compile(r"test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            match = _CRITERION_TEST.search(nodeid)
            if "test_acceptance" not in nodeid or match is None:
                continue
            if status == "passed":
                for title, content in getattr(report, "sections", []):
                    if "stdout" not in title:
                        continue
                    lines.extend(
                        line
                        for line in content.splitlines()
                        if line.startswith("CRITERION")
                    )
            else:
                number = int(match.group(1))
                lines.append(
                    f"CRITERION {number} FAIL: see the failure detail above"
                )
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(set(lines), key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
