from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from dalab.variety import SubspaceComponent


def line(v) -> SubspaceComponent:
    v = np.asarray(v, dtype=complex)
    return SubspaceComponent((v / np.linalg.norm(v))[:, None])


def two_lines(c: float = 0.6):
    return [line([1, 0]), line([c, math.sqrt(1 - c * c)])]


def random_complex(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def monomials(d: int, n: int):
    """All exponent tuples of degree n, in decreasing lexicographic order."""
    out = [a for a in itertools.product(range(n + 1), repeat=d) if sum(a) == n]
    return sorted(out, reverse=True)


def divides(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b))


def random_monomial_generators(rng, d: int, count: int | None = None, max_deg: int = 3):
    count = count or int(rng.integers(1, 4))
    gens = set()
    while len(gens) < count:
        deg = int(rng.integers(1, max_deg + 1))
        cuts = sorted(rng.integers(0, deg + 1, size=d - 1).tolist())
        parts = [b - a for a, b in zip([0] + cuts, cuts + [deg])]
        gens.add(tuple(parts))
    return sorted(gens)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(label: str, ok: bool, detail: str = "") -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
