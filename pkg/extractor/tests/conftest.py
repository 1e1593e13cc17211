"""Shared fixtures: tiny synthetic image manifests."""

import json
import random

import pytest
from PIL import Image

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
# Image fixtures

# distinct dominant colors, one per category
PALETTE = {
    "red": (220, 40, 40),
    "blue": (40, 60, 220),
    "green": (40, 200, 80),
}


def make_image(color, size=(96, 72), speckles=200, seed=0):
    """Solid color plus random speckle so images are not identical."""
    rng = random.Random(seed)
    img = Image.new("RGB", size, color)
    pixels = img.load()
    for _ in range(speckles):
        x, y = rng.randrange(size[0]), rng.randrange(size[1])
        pixels[x, y] = (rng.randrange(256), rng.randrange(256), rng.randrange(256))
    return img


def write_image_set(root, categories, objects_per_category=2, views_per_object=2):
    """Write PNGs and a manifest; returns the manifest path."""
    seed = 0
    objects = []
    for cat in categories:
        for oi in range(objects_per_category):
            object_id = f"{cat}_{oi}"
            views = []
            for vi in range(views_per_object):
                name = f"{object_id}_v{vi}.png"
                make_image(PALETTE[cat], seed=seed).save(root / name)
                views.append(name)
                seed += 1
            objects.append({"id": object_id, "category": cat, "views": views})
    manifest = root / "manifest.json"
    manifest.write_text(json.dumps({"objects": objects}, indent=2))
    return manifest


@pytest.fixture
def two_class_manifest(tmp_path):
    return write_image_set(tmp_path, ["red", "blue"])


@pytest.fixture
def three_class_manifest(tmp_path):
    return write_image_set(tmp_path, ["red", "blue", "green"])
