import numpy as np
import pytest

from gedi.signal_io import AudioSignal, generate_pink_noise
from gedi.synth import synth_corpus

FS = 16000


@pytest.fixture(scope="session")
def corpus():
    """Twenty deterministic synthetic words."""
    return synth_corpus(20, seed=0)


@pytest.fixture(scope="session")
def word(corpus):
    return corpus[0]


@pytest.fixture(scope="session")
def pink():
    return generate_pink_noise(30.0, FS, seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tone(freq, duration=1.0, amp=1.0, fs=FS, phase=0.0):
    t = np.arange(int(round(duration * fs))) / fs
    return AudioSignal(amp * np.sin(2 * np.pi * freq * t + phase), fs)


# One line per acceptance criterion, filled by test_acceptance.py.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
