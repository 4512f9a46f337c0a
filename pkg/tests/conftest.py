import contextlib
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> (status, detail), filled in by test_acceptance.py
ACCEPTANCE = {}


@contextlib.contextmanager
def criterion(number, title):
    info = {"detail": ""}
    try:
        yield info
    except BaseException:
        ACCEPTANCE[number] = ("FAIL", title, info["detail"])
        print(f"criterion {number} FAIL: {title} {info['detail']}")
        raise
    ACCEPTANCE[number] = ("PASS", title, info["detail"])
    print(f"criterion {number} PASS: {title} {info['detail']}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}  {detail}".rstrip())
