"""Shared, cached pipeline runs (each analysis costs a fraction of a second)."""

import functools
import warnings

import numpy as np
import pytest

from kdvindex import indexcount as ic
from kdvindex import waves

N = 256
DN_KS = (0.3, 0.5, 0.7, 0.9)
CN_KS = (0.8, 0.95)
PERIODIC_CASES = [("dn", k) for k in DN_KS] + [("cn", k) for k in CN_KS]


@functools.lru_cache(maxsize=None)
def profile(family: str, k: float, n: int = N) -> waves.WaveProfile:
    return (waves.dn_wave if family == "dn" else waves.cn_wave)(k, n)


@functools.lru_cache(maxsize=None)
def analysis(family: str, k: float, n: int = N) -> ic.Analysis:
    return ic.analyze(profile(family, k, n))


@functools.lru_cache(maxsize=None)
def pencil(family: str, k: float, n: int = N, halve: bool = False):
    an = analysis(family, k, n)
    if not halve:
        return ic.pencil_for(an)
    pen, _, _ = ic.pencil_for(an)
    return ic.pencil_for(an, pen.delta / 2)


def exact_sech4(grid: waves.Grid) -> np.ndarray:
    """Closed-form fixture profile centered at node 0."""
    _, _, A, B = waves.sech4_fixture()
    x = np.where(grid.nodes >= grid.period / 2, grid.nodes - grid.period, grid.nodes)
    return A / np.cosh(B * x) ** 4


@functools.lru_cache(maxsize=None)
def fixture_profile(n: int = N, domain: float = 80.0) -> waves.WaveProfile:
    model, c, _, _ = waves.sech4_fixture()
    grid = waves.make_grid(n, domain)
    guess = exact_sech4(grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return waves.solve_fifth_order(model, c, grid, guess)


@functools.lru_cache(maxsize=None)
def fixture_analysis() -> ic.Analysis:
    return ic.analyze(fixture_profile())


@pytest.fixture
def cached():
    return {"profile": profile, "analysis": analysis, "pencil": pencil,
            "fixture_profile": fixture_profile, "fixture_analysis": fixture_analysis}


# -- acceptance summary -----------------------------------------------------------

ACCEPTANCE: list[tuple[str, str, bool, str]] = []


def record(criterion: str, part: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE.append((criterion, part, bool(ok), detail))
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    order = sorted({c for c, *_ in ACCEPTANCE}, key=lambda c: int(c))
    for crit in order:
        parts = [r for r in ACCEPTANCE if r[0] == crit]
        ok = all(r[2] for r in parts)
        tr.write_line(f"criterion {crit:>2}: {'PASS' if ok else 'FAIL'}")
        for _, part, p_ok, detail in parts:
            tr.write_line(f"    [{'pass' if p_ok else 'FAIL'}] {part}: {detail}")
