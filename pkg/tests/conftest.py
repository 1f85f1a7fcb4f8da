import numpy as np
import pytest

from comac.model import NetworkConfig, NomographicFunction, ReadingRange, SensingRange

TEMP_SENSING = SensingRange(-55.0, 130.0)
EX1_READINGS = ReadingRange(1.0, 30.0)


def network(K, M, sigma_N_sq=0.1, readings=EX1_READINGS, **kw):
    return NetworkConfig(K, M, 1.0, sigma_N_sq, TEMP_SENSING, readings, **kw)


def arith(K):
    return NomographicFunction.arithmetic_mean(K, TEMP_SENSING, 1.0)


def geo(K, s_prime=0.5, readings=EX1_READINGS):
    return NomographicFunction.geometric_mean(K, TEMP_SENSING, 1.0, readings, 2.0, s_prime)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance verdicts, one line per criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number, passed: bool, summary: str) -> None:
    line = f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} {summary}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split(":")[0]):
            terminalreporter.write_line(line)
