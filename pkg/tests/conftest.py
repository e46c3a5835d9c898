import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

import srk
from srk.corpus import generate_corpus
from srk.dispatch import solve_dispatch
from srk.scenario import parse_scenario
from srk.settlement import settle

settings.register_profile("srk", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("srk")

DATA = Path(srk.__file__).parent / "data"
CORPUS_SEED = 7
CORPUS_SIZE = 200


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def instance_a():
    return parse_scenario(DATA / "instance_a.json")


@pytest.fixture(scope="session")
def instance_b():
    return parse_scenario(DATA / "instance_b.json")


@pytest.fixture(scope="session")
def instance_c():
    return parse_scenario(DATA / "instance_c.json")


@pytest.fixture(scope="session")
def sol_a(instance_a):
    return solve_dispatch(instance_a)


@pytest.fixture(scope="session")
def sol_b(instance_b):
    return solve_dispatch(instance_b)


@pytest.fixture(scope="session")
def sol_c(instance_c):
    return solve_dispatch(instance_c)


class Corpus:
    """The seeded random scenarios with their solutions and settlements."""

    def __init__(self, seed, count):
        start = time.perf_counter()
        self.seed = seed
        self.scenarios = generate_corpus(seed, count)
        self.solutions = [solve_dispatch(s) for s in self.scenarios]
        self.reports = [settle(s, sol, check=False) for s, sol in zip(self.scenarios, self.solutions)]
        self.seconds = time.perf_counter() - start

    def __iter__(self):
        return iter(zip(self.scenarios, self.solutions, self.reports))

    def __len__(self):
        return len(self.scenarios)


@pytest.fixture(scope="session")
def corpus():
    return Corpus(CORPUS_SEED, CORPUS_SIZE)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def acceptance_log(request):
    log = []
    request.config._srk_acceptance = log
    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = getattr(config, "_srk_acceptance", None)
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(log):
        terminalreporter.write_line(line)
