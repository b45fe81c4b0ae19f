"""Shared fixtures and independent brute-force oracles.

The oracles here work on plain dicts keyed by state tuples and never call
into the library, so they stay independent of the code they check.
"""

import itertools

import pytest

from causalfair import kernels
from causalfair.dist import JointTable


def brute_joint(variables):
    """Enumerate a binary SCM given as [(name, parents, p_one_by_parent_row)]."""
    names = [v[0] for v in variables]
    out = {}
    for state in itertools.product((0, 1), repeat=len(names)):
        s = dict(zip(names, state))
        p = 1.0
        for name, parents, p_one in variables:
            row = 0
            for pa in parents:
                row = row * 2 + s[pa]
            p *= p_one[row] if s[name] else 1 - p_one[row]
        out[state] = p
    return names, out


def brute_prob(names, table, **event):
    return sum(p for st, p in table.items() if all(st[names.index(k)] == v for k, v in event.items()))


def brute_gap(names, table, x, y, given=()):
    """max_z max_{a,b} |P(a,b|z) - P(a|z)P(b|z)| by direct summation."""
    worst = 0.0
    for z in itertools.product((0, 1), repeat=len(given)):
        zev = dict(zip(given, z))
        pz = brute_prob(names, table, **zev)
        if pz < 1e-12:
            continue
        for a in (0, 1):
            for b in (0, 1):
                pab = brute_prob(names, table, **{x: a, y: b}, **zev) / pz
                pa = brute_prob(names, table, **{x: a}, **zev) / pz
                pb = brute_prob(names, table, **{y: b}, **zev) / pz
                worst = max(worst, abs(pab - pa * pb))
    return worst


HIRING = [
    ("A", (), [0.5]),
    ("Y", ("A",), [0.6, 0.3]),
    ("Yhat", ("Y",), [0.1, 0.8]),
]


@pytest.fixture(scope="session")
def hiring_brute():
    return brute_joint(HIRING)


@pytest.fixture
def hiring_joint():
    from causalfair.scm import exact_joint, hiring_scm
    return exact_joint(hiring_scm())


def product_joint(pa=0.3, py=0.6, pyh=0.45):
    probs = [(pa if a else 1 - pa) * (py if y else 1 - py) * (pyh if h else 1 - pyh)
             for a, y, h in itertools.product((0, 1), repeat=3)]
    return JointTable(["A", "Y", "Yhat"], probs)


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    try:
        from tests.test_acceptance import RESULTS
    except ImportError:
        try:
            from test_acceptance import RESULTS
        except ImportError:
            return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, title, detail = RESULTS[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n}. {title}: {detail}")
