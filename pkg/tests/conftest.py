import json
from functools import lru_cache
from importlib import resources

import pytest

from bellpoly import polytope
from bellpoly.core import TIInequality


@lru_cache(maxsize=None)
def golden():
    return json.loads(resources.files("bellpoly").joinpath("data/golden.json").read_text())


@lru_cache(maxsize=None)
def facets(n):
    return polytope.facet_enum(polytope.ti_vertices(n))


def table1_ineq(rid):
    row = next(r for r in golden()["table1"]["rows"] if r["id"] == rid)
    return TIInequality.from_coefficients(3, row["coefficients"], row["beta_c"])


def table2_row(rid):
    return next(r for r in golden()["table2"]["rows"] if r["id"] == rid)


def table2_ineq(rid):
    row = table2_row(rid)
    return TIInequality.from_table2_row(row["coefficients"], row["beta_c"])


def nn5_example():
    e = golden()["n5"]["nn_example"]
    return TIInequality.nearest_neighbour(5, e["alpha"], e["beta"], e["gamma"], e["omega1"],
                                          e["omega_last"], e["epsilon"])


@pytest.fixture(scope="session")
def gold():
    return golden()


@pytest.fixture(scope="session")
def facets3():
    return facets(3)


@pytest.fixture(scope="session")
def facets4():
    return facets(4)


@pytest.fixture
def class6():
    return table1_ineq(6)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def report(k, ok, detail):
    line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
