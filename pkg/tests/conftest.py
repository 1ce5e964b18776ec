import sys


def pytest_terminal_summary(terminalreporter):
    # surface the acceptance verdict lines even when output capture is on
    mod = sys.modules.get("test_acceptance")
    if mod is not None and getattr(mod, "VERDICTS", None):
        terminalreporter.section("acceptance verdicts")
        for line in mod.VERDICTS:
            terminalreporter.write_line(line)
