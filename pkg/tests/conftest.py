import numpy as np
import pytest

from torus_ergodic import SymbolCoefficients


@pytest.fixture
def rng():
    return np.random.default_rng(20031220)


def single_row(k, g, dimension=1, freq_radius=None, mom_radius=8):
    """e^{ikx} g(p) as coefficients; ``g`` is a callable on momentum arrays or a constant."""
    k = (k,) if isinstance(k, int) else tuple(k)
    if freq_radius is None:
        freq_radius = max(abs(c) for c in k)
    profile = g if callable(g) else (lambda p, c=g: np.full(len(p), c, dtype=complex))
    return SymbolCoefficients.from_rows({k: profile}, dimension, freq_radius, mom_radius)


# criterion -> list of (part, passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        ok = all(p for _, p, _ in parts)
        detail = "; ".join(f"{name}: {'ok' if p else 'FAILED'} ({info})" for name, p, info in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
