import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from irsadmm.fpcore import BeamState, cross_terms, update_gamma, update_xi  # noqa: E402
from irsadmm.model import ScenarioConfig, generate_scenario  # noqa: E402

ACCEPTANCE_LINES = []

SMALL = ScenarioConfig(B=3, R=1, K=3, N=4, Nt=4)


def random_beams(sc, ch, rng, full_power=True):
    W = rng.standard_normal((ch.B, ch.K, ch.Nt)) + 1j * rng.standard_normal((ch.B, ch.K, ch.Nt))
    p = np.sum(np.abs(W) ** 2, axis=(1, 2), keepdims=True)
    frac = 1.0 if full_power else rng.uniform(0.2, 1.0, size=(ch.B, 1, 1))
    W *= np.sqrt(frac * sc.P[:, None, None] / p)
    return W


def random_state(sc, ch, rng, shared_theta=True):
    W = random_beams(sc, ch, rng)
    if shared_theta:
        theta = np.tile(np.exp(2j * np.pi * rng.random(ch.NR)), (ch.B, 1))
    else:
        theta = np.exp(2j * np.pi * rng.random((ch.B, ch.NR)))
    ct = cross_terms(ch, W, theta)
    g = update_gamma(sc, ct)
    xi = update_xi(ct, g, sc.omega, sc.noise)
    return BeamState(W=W, theta=theta, gamma=g, xi=xi,
                     lam=np.zeros((ch.B, 0), complex), mu=np.zeros(ch.B), rho=0.0)


@pytest.fixture
def small():
    return generate_scenario(SMALL, 11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
