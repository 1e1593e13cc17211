import numpy as np
import pytest

from mvsearch import SynthConfig, generate

# ---------------------------------------------------------------------------
# Acceptance summary: one PASS/FAIL line per criterion after the run.

_ACCEPTANCE_DOCS = {}
_ACCEPTANCE_RESULTS = {}


def pytest_collection_modifyitems(items):
    for item in items:
        if "test_acceptance" in item.nodeid:
            doc = (getattr(item, "obj", None).__doc__ or "").strip().splitlines()
            _ACCEPTANCE_DOCS[item.nodeid] = doc[0] if doc else item.name


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE_RESULTS[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    labels = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}
    for nodeid in sorted(_ACCEPTANCE_RESULTS):
        outcome = _ACCEPTANCE_RESULTS[nodeid]
        label = labels.get(outcome, outcome.upper())
        terminalreporter.write_line(f"[{label}] {_ACCEPTANCE_DOCS.get(nodeid, nodeid)}")


# ---------------------------------------------------------------------------
# Shared fixtures


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def clustered_dataset():
    """Small well-separated dataset with ground-truthed queries."""
    config = SynthConfig(
        num_categories=4,
        objects_per_category=3,
        views_min=2,
        views_max=3,
        dim=16,
        category_separation=3.0,
        object_spread=0.08,
        view_noise_sigma=0.05,
        clutter_sigma=0.0,
        queries_per_category=2,
        seed=11,
    )
    return generate(config)


@pytest.fixture
def clustered_db(clustered_dataset):
    return clustered_dataset.to_database()


@pytest.fixture
def clustered_queries(clustered_dataset):
    return clustered_dataset.to_queries()
