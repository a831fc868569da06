import pytest

from sgsov.model import sample_params

# (criterion, verdict, detail) lines collected by the acceptance tests
ACCEPTANCE = []


def record(number, title, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2} {title}: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def p3n1():
    return sample_params(1, 1, 7)


@pytest.fixture(scope="session")
def p3n2():
    return sample_params(1, 2, 7)


@pytest.fixture(scope="session")
def p3n3():
    return sample_params(1, 3, 7)


@pytest.fixture(scope="session")
def p5n2():
    return sample_params(2, 2, 7)


@pytest.fixture(scope="session")
def p3n2_untwisted():
    return sample_params(1, 2, 0, twisted=False)
