import numpy as np
import pytest

from belieflik.frames import Frame
from belieflik.likelihood import bernoulli_mass
from belieflik.mass import MassFunction

TF = Frame(["T", "F"])


def to_frozen(m: MassFunction) -> dict:
    """Package mass function -> ``{frozenset(labels): mass}`` for the oracles."""
    return {frozenset(s.outcomes()): v for s, v in m.items()}


def random_mass(frame: Frame, rng: np.random.Generator, max_focal: int | None = None) -> MassFunction:
    """Random mass on a random selection of nonempty subsets."""
    subsets = list(range(1, frame.full_bits + 1))
    k = rng.integers(1, (max_focal or len(subsets)) + 1)
    chosen = rng.choice(subsets, size=k, replace=False)
    w = rng.dirichlet(np.ones(k))
    return MassFunction(frame, {int(b): float(v) for b, v in zip(chosen, w)})


@pytest.fixture
def tf():
    return TF


@pytest.fixture
def m532():
    return bernoulli_mass(0.5, 0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
