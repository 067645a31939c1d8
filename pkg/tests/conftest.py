import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from bboxqa.datamodel import AnnotationSet, Annotator, Box, ImageRef, LabeledBox

LABELS = ("person", "vehicle", "bicycle")


def make_set(boxes, images=None, annotators=None, labels=LABELS, size=(100, 100), assignments=()):
    """Small AnnotationSet from tuples (image, annotator, label, x, y, w, h[, score])."""
    lbs = []
    for t in boxes:
        image, ann, label, x, y, w, h = t[:7]
        lbs.append(LabeledBox(image, ann, label, Box(x, y, w, h), t[7] if len(t) > 7 else None))
    images = images or sorted({b.image_id for b in lbs})
    annotators = annotators or sorted({b.annotator_id for b in lbs})
    return AnnotationSet(
        tuple(ImageRef(i, *size) for i in images),
        tuple(Annotator(a) for a in annotators),
        labels,
        tuple(lbs),
        frozenset(assignments),
    )


@pytest.fixture
def small_set():
    return make_set(
        [
            ("im1", "A", "person", 0, 0, 10, 10),
            ("im1", "B", "person", 0, 0, 10, 10),
            ("im1", "B", "vehicle", 50, 50, 20, 10),
        ]
    )


# Acceptance verdicts, printed as one line per criterion at the end of the run.
ACCEPTANCE: dict[int, tuple[bool, str, str]] = {}


def verdict(number: int, title: str, ok: bool, detail: str):
    ACCEPTANCE[number] = (bool(ok), title, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}")
