import itertools
from fractions import Fraction

import pytest


def brute_force_pmf(p, q, s, n):
    """Law of X_n by summing path probabilities over all 2^n step sequences.

    Uses exact rationals when given them, so it shares no rounding with the
    dynamic program it checks.
    """
    pmf = {}
    for steps in itertools.product((0, 1), repeat=n):
        prob = s if steps[0] else 1 - s
        x = steps[0]
        for k, step in enumerate(steps[1:], start=1):
            up = q + (p - q) * Fraction(x, k)
            prob *= up if step else 1 - up
            x += step
        pmf[x] = pmf.get(x, 0) + prob
    return pmf


@pytest.fixture(scope="session")
def oracle():
    return brute_force_pmf


_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def report(number, passed, detail):
        line = f"ACCEPTANCE {number:>2}: {'PASS' if passed else 'FAIL'} | {detail}"
        _ACCEPTANCE.append((number, line))
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE, key=lambda t: t[0]):
        terminalreporter.write_line(line)
