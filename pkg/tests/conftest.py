"""Shared fixtures and the acceptance summary hook."""

from __future__ import annotations

import re
import textwrap

import numpy as np
import pytest

from nodulemorph.maskio import BinaryMask


def grid(text: str) -> np.ndarray:
    """Parse string art into a bool grid: '#' and '1' are foreground."""
    rows = [line for line in textwrap.dedent(text).strip("\n").splitlines() if line.strip()]
    width = max(len(r) for r in rows)
    out = np.zeros((len(rows), width), dtype=bool)
    for i, row in enumerate(rows):
        for j, ch in enumerate(row):
            out[i, j] = ch in "#1"
    return out


def mask(text: str) -> BinaryMask:
    return BinaryMask(grid(text))


def disc(radius: int, pad: int = 2) -> np.ndarray:
    """Filled disc of pixel centers within `radius` of the middle."""
    size = 2 * radius + 1 + 2 * pad
    c = radius + pad
    rows, cols = np.mgrid[0:size, 0:size]
    return (rows - c) ** 2 + (cols - c) ** 2 <= radius**2


@pytest.fixture
def rect_7x3() -> BinaryMask:
    out = np.zeros((7, 11), dtype=bool)
    out[2:5, 2:9] = True  # 7 wide, 3 tall
    return BinaryMask(out)


_CRITERION_LABELS = {
    1: "classification metrics",
    2: "stratified folds and pooled accuracy",
    3: "shape features and exact moments",
    4: "hu invariance and coarse-grid drift",
    5: "minority oversampling",
    6: "forest and mlp training",
    7: "dice and iou",
    8: "synthetic cohort end to end",
    9: "clinical-cohort values (documented, optional)",
}

_acceptance_outcomes: dict[int, str] = {}


def pytest_runtest_logreport(report):
    match = re.search(r"test_acceptance\.py.*criterion_(\d+)", report.nodeid)
    if not match:
        return
    n = int(match.group(1))
    if report.when == "call" or (report.when == "setup" and report.outcome == "skipped"):
        _acceptance_outcomes[n] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance_outcomes):
        outcome = _acceptance_outcomes[n]
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}.get(outcome, outcome.upper())
        label = _CRITERION_LABELS.get(n, "")
        terminalreporter.write_line(f"criterion {n} ({label}): {status}")
