import math

import numpy as np
import pytest

from robustmdp import backend
from robustmdp.mdp import Mdp

NORMS = [1.0, 1.5, 2.0, 3.0, math.inf]


def make_mdp(rng, S, A, gamma=0.9, reward_scale=1.0):
    kernel = rng.dirichlet(np.ones(S), size=(S, A))
    reward = rng.uniform(0.0, reward_scale, size=(S, A))
    return Mdp(kernel, reward, gamma)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=backend.available())
def backend_name(request):
    return request.param


@pytest.fixture(params=NORMS, ids=lambda p: f"p={p:g}")
def norm(request):
    return request.param


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
