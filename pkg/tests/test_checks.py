import pytest

from package.checks import CHECKS, CheckResult, VerifyOptions, run_checks, summarize, verify_instance
from package.scenarios import random_instance

FAST = VerifyOptions(samples=2000, candidates=20, weight_draws=4)


def test_checks_pass_on_random_instances(instance):
    records = verify_instance(instance, FAST)
    failed = [r for r in records if not r[2]]
    assert failed == []
    assert {r[0] for r in records} >= set(CHECKS) - {"mvee_lower_bound"}


def test_injected_fault_is_caught():
    records = verify_instance(random_instance(2), VerifyOptions(samples=2000, candidates=5, inject_fault=True))
    containment = [r for r in records if r[0] == "containment"]
    assert any(not ok for _, label, ok, _ in containment if label.endswith("decoupled_sdp"))
    assert all(ok for _, label, ok, _ in containment if not label.endswith("decoupled_sdp"))
    assert any(not ok for name, _, ok, _ in records if name == "full_vs_decoupled")


def test_injected_fault_fails_the_summary_rows():
    options = VerifyOptions(instances=3, samples=1000, candidates=5, weight_draws=2, inject_fault=True)
    summary = {c.name: c for c in run_checks(options, show_progress=False)}
    assert not summary["containment"].ok
    assert all(label.endswith("decoupled_sdp") for label in summary["containment"].failed)
    assert not summary["full_vs_decoupled"].ok
    assert summary["full_vs_decoupled"].worst > 1e-2
    assert summary["full_vs_s_procedure"].ok


def test_tight_tolerance_fails():
    records = verify_instance(random_instance(6), VerifyOptions(samples=500, candidates=5, equivalence_tol=1e-14))
    assert any(not ok for name, _, ok, _ in records if name == "full_vs_decoupled")


def test_summarize():
    records = [
        ("containment", "seed=1 full_sdp", True, -0.5),
        ("containment", "seed=2 full_sdp", False, 0.25),
        ("containment", "seed=2 full_sdp", False, 0.5),
        ("monotonicity", "seed=1 full_sdp", False, float("inf")),
    ]
    summary = {c.name: c for c in summarize(records)}
    assert list(summary) == list(CHECKS)
    assert summary["containment"].passed == 1
    assert summary["containment"].failed == ["seed=2 full_sdp"]
    assert summary["containment"].worst == 0.5
    assert summary["monotonicity"].worst == 0.0
    assert not summary["monotonicity"].ok
    assert summary["delta_bounds"].ok
    assert CheckResult("x", 3, ["a", "b"], 0.125).to_row() == ["x", 3, 2, "0.125", "a, b"]


def test_run_checks_with_workers():
    options = VerifyOptions(instances=4, samples=500, candidates=5, weight_draws=2)
    serial = run_checks(options, show_progress=False)
    parallel = run_checks(options, workers=2, show_progress=False)
    assert [r.to_row() for r in serial] == [r.to_row() for r in parallel]
    assert all(r.ok for r in serial)


@pytest.mark.slow
def test_full_suite_on_fifty_instances():
    summary = run_checks(VerifyOptions(instances=50), show_progress=False)
    assert [c.name for c in summary] == list(CHECKS)
    assert [c.to_row() for c in summary if not c.ok] == []
