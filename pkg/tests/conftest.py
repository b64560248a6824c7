import re
import sys

from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    verdicts = dict(getattr(mod, "VERDICTS", {}))
    # a criterion that raised before reaching its verdict still gets a line
    for rep in terminalreporter.stats.get("failed", []):
        m = re.search(r"test_acceptance\.py::test_(\d+)_", rep.nodeid)
        if m and int(m.group(1)) not in verdicts:
            verdicts[int(m.group(1))] = f"FAIL criterion {m.group(1)}: raised {rep.longrepr.reprcrash.message}"
    if verdicts:
        terminalreporter.section("acceptance")
        for k in sorted(verdicts):
            terminalreporter.write_line(verdicts[k])
