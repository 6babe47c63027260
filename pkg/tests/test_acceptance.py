"""Acceptance criteria, one test each, at the stated tolerances.

Each test prints a ``PASS``/``FAIL`` line with the measured values.  The
checks themselves live in ``surfarea.verify`` so that ``surfarea verify``
runs exactly the same code.
"""

import pytest

from surfarea import verify

SEED = 42


def _run(name, capsys):
    res = verify.run_check(name, SEED)
    with capsys.disabled():
        print("\n" + res.line())
    return res


@pytest.mark.parametrize("name", list(verify.CRITERIA), ids=lambda n: f"{verify.CRITERIA[n][0]:02d}-{n}")
def test_criterion(name, capsys):
    res = _run(name, capsys)
    assert res.passed, res.line()


@pytest.mark.parametrize("name", list(verify.EXTRA_SUITES))
def test_extra_suite(name, capsys):
    res = _run(name, capsys)
    assert res.passed, res.line()
