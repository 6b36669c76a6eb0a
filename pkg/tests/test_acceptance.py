"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -s`` (or ``-v``) to see the lines; the
summary is also printed at module teardown.
"""

import pytest

from gaussframe import verify

_LINES = []


@pytest.fixture(scope="module", autouse=True)
def _summary(request):
    yield
    capman = request.config.pluginmanager.getplugin("capturemanager")
    with capman.global_and_fixture_disabled():
        print("\n== acceptance summary ==")
        for line in _LINES:
            print(line)


def _run(name, capsys, **kw):
    r = verify.CHECK_NAMES[name](**kw)
    line = r.line()
    _LINES.append(line)
    with capsys.disabled():
        print("\n" + line)
    assert not r.error, line
    assert r.passed, line
    return r


def test_gaussian_calculus(capsys):
    _run("gaussian_calculus", capsys)


def test_theta(capsys):
    r = _run("theta", capsys)
    assert r.measured["max_sum_over_bound"] <= 1.0


def test_partition(capsys):
    _run("partition", capsys)


def test_frame_bounds(capsys):
    _run("frame_bounds", capsys)


def test_rays(capsys):
    _run("rays", capsys)


def test_gram(capsys):
    _run("gram", capsys)


def test_schur(capsys):
    _run("schur", capsys)


def test_initial_conditions(capsys):
    _run("initial_conditions", capsys)


def test_solve(capsys):
    _run("solve", capsys)
