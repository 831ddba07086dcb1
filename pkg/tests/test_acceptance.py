"""Acceptance criteria, one test per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the PASS/FAIL lines.
The statistical group replays the checked-in configs under ``configs/``.
"""

import pytest

from prodspec import verify

IDENTITY = {
    "1a": verify.check_cubic_factorization,
    "1b": verify.check_branch_mp,
    "1c": verify.check_support_endpoints,
    "1d": verify.check_log_potential,
    "1e": verify.check_g_two_routes,
    "1f": verify.check_multiplicity,
    "1g": verify.check_horn,
}

STATISTICAL = ("2a", "2b", "2c", "2d", "2e", "2f", "2g", "2h")


def report(results):
    for r in results:
        print(verify.format_result(r))
    return [r for r in results if not r.passed]


@pytest.mark.parametrize("tag", list(IDENTITY))
def test_identity(tag):
    assert not report([IDENTITY[tag]()])


def test_plumbing(tmp_path):
    assert not report(verify.plumbing_suite(str(tmp_path)))


@pytest.fixture(scope="module")
def statistical_results(configs_dir):
    return verify.statistical_suite(str(configs_dir))


@pytest.mark.slow
@pytest.mark.parametrize("tag", STATISTICAL)
def test_statistical(tag, statistical_results):
    mine = [r for r in statistical_results if r.name.startswith(tag + " ")]
    assert mine, f"no results for {tag}"
    assert not report(mine)
