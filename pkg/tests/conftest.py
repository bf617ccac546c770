from __future__ import annotations

from pathlib import Path

import mpmath as mp
import numpy as np
import pytest

from fpdvi.evolution import FPDVIProblem
from fpdvi.maps import AffineMap, ConstantMap, ConstantNonlocal
from fpdvi.vi import Affine, Box, Zero

PROBLEMS = Path(__file__).resolve().parents[1] / "src" / "fpdvi" / "problems"
FIXTURES = Path(__file__).resolve().parent / "fixtures"


def ml_reference(alpha: float, beta: float, z: complex) -> complex:
    """E_{alpha,beta}(z) by the power series in extended precision."""
    z = mp.mpc(z)
    digits = 30 + int(float(abs(z)) ** (1 / alpha) / 2.3)
    with mp.workdps(digits):
        a, b = mp.mpf(alpha), mp.mpf(beta)
        s, zk, k = mp.mpc(0), mp.mpc(1), 0
        tiny = mp.mpf(10) ** (-digits + 3)
        while True:
            t = zk * mp.rgamma(a * k + b)
            s += t
            if k > 5 and abs(t) < tiny * (abs(s) + tiny) and k * alpha > abs(z) ** (1 / alpha) + 5:
                break
            zk *= z
            k += 1
        return complex(s)


def scalar_problem(alpha, A=0.0, B=0.0, f=0.0, g=None, h=1.0, K=None, T=1.0):
    """n = m = 1 problem with G = I, phi = 0; ``g`` is (const, slope) of an affine map or None."""
    gmap = ConstantMap([0.0]) if g is None else AffineMap([g[0]], [[g[1]]])
    hmap = h if not isinstance(h, (int, float)) else ConstantNonlocal([h])
    return FPDVIProblem(alpha, T, np.array([[A]]), ConstantMap([[B]]), ConstantMap([f]), gmap, hmap,
                        K or Box([-10.0], [10.0]), Affine(np.eye(1)), Zero())


@pytest.fixture
def problems_dir() -> Path:
    return PROBLEMS


# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
