import pathlib

import pytest

from mtlz import family_builder as fb
from mtlz import scattering_analytic as sa

REPO = pathlib.Path(__file__).resolve().parents[1]
SPECS = REPO / "specs"

CUBE_TAU = (0.5, 0.3, 0.4)
CUBE_GAMMAS = (0.1, 0.07, 0.05)


@pytest.fixture(scope="session")
def specs_dir():
    return SPECS


@pytest.fixture(scope="session")
def cube_family():
    return fb.build_cube(CUBE_TAU, gammas=CUBE_GAMMAS)


@pytest.fixture(scope="session")
def cube_complex(cube_family):
    return sa.enumerate_cells(sa.build_arrangement(cube_family))


@pytest.fixture(scope="session")
def cube_dual(cube_complex):
    return sa.dual_graph(cube_complex)


@pytest.fixture(scope="session")
def cube_census(cube_dual, cube_family):
    return sa.classify_all_cells(cube_dual, cube_family)


# ------------------------------------------------------- acceptance summary

_CRITERIA: dict = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            n, detail = value
            if report.failed and not detail.startswith("FAIL"):
                detail = "FAIL - " + detail.split(" - ", 1)[-1]
            if hasattr(report, "wasxfail"):
                detail += " [expected failure]"
            _CRITERIA[n] = detail
            return
    name = report.nodeid.rsplit("::", 1)[-1]
    if name.startswith("test_criterion_") and "companion" not in name:
        n = int(name.split("_")[2])
        outcome = "PASS" if report.passed else "FAIL"
        _CRITERIA.setdefault(n, f"{outcome} - {report.longreprtext.splitlines()[-1] if report.failed else ''}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {n}: {_CRITERIA[n]}")
