import pathlib
from fractions import Fraction

import pytest

from mcft.charts import jet_chart
from mcft.dsl import parse
from mcft.expr import var
from mcft.lagrangian import build_lagrangian_system

ROOT = pathlib.Path(__file__).resolve().parents[1]
STRING_MCFT = ROOT / "models" / "string.mcft"


@pytest.fixture(scope="session")
def string_text():
    return STRING_MCFT.read_text()


@pytest.fixture(scope="session")
def string_model(string_text):
    return parse(string_text)


@pytest.fixture(scope="session")
def string_chart():
    return jet_chart(["t", "x"], ["y"])


@pytest.fixture(scope="session")
def params():
    return {
        "rho": var("rho", "param", 0),
        "tau": var("tau", "param", 1),
        "gamma": var("gamma", "param", 2),
    }


@pytest.fixture(scope="session")
def string_system(string_chart, params):
    rho, tau, gamma = params["rho"], params["tau"], params["gamma"]
    yt = string_chart.coord("y_t")
    yx = string_chart.coord("y_x")
    st = string_chart.coord("s_t")
    L = Fraction(1, 2) * (rho * yt**2 - tau * yx**2) - gamma * st
    return build_lagrangian_system(string_chart, L)


@pytest.fixture(scope="session")
def undamped_system(string_chart, params):
    rho, tau = params["rho"], params["tau"]
    yt = string_chart.coord("y_t")
    yx = string_chart.coord("y_x")
    L = Fraction(1, 2) * (rho * yt**2 - tau * yx**2)
    return build_lagrangian_system(string_chart, L)
