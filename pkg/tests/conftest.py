import io

import pytest

from socialcf.dataset import Dataset, ingest_ratings

SMALL_CSV = """user_id,item_id,rating
User1,Item1,2
User1,Item2,5
User2,Item1,0
User2,Item2,6
User3,Item1,5
User3,Item2,5
User4,Item1,2
User4,Item2,1
"""


@pytest.fixture
def small():
    return ingest_ratings(io.StringIO(SMALL_CSV))


@pytest.fixture
def small_dataset(small):
    return Dataset(small)


# Acceptance reporting: one PASS/FAIL line per criterion at the end of the run.
_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when != "call":
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    _ACCEPTANCE.append((marker.args[0], rep.outcome, detail))


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion reported in the summary")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, detail in sorted(_ACCEPTANCE, key=lambda t: int(t[0].split()[0][2:])):
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"[{status}] {label}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
