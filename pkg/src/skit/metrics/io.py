"""Box files and metric reports.

Box file format: one record per line, whitespace or comma separated::

    image_id class_id x_min y_min x_max y_max [score]

Blank lines and lines starting with ``#`` are skipped. Ground-truth files
omit the score; detection files must carry it.
"""
from __future__ import annotations

import csv
import math
import re
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Optional

from .boxes import BoundingBox

FIELDS = ("image_id", "class_id", "x_min", "y_min", "x_max", "y_max", "score")
_SPLIT = re.compile(r"[,\s]+")


class BoxFileError(ValueError):
    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = path
        self.lineno = lineno


def parse_boxes(lines: Iterable[str], path="<input>", require_score: Optional[bool] = None):
    """Parse box records into ``{image_id: {class_id: [BoundingBox, ...]}}``.

    Image ids keep first-appearance order, which is also the detection index
    order used for score tie-breaking.
    """
    out: dict[str, dict[str, list[BoundingBox]]] = defaultdict(lambda: defaultdict(list))
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p for p in _SPLIT.split(line) if p]
        if len(parts) not in (6, 7):
            raise BoxFileError(path, lineno, f"expected 6 or 7 fields, got {len(parts)}")
        if require_score is True and len(parts) == 6:
            raise BoxFileError(path, lineno, "detection record without score")
        if require_score is False and len(parts) == 7:
            raise BoxFileError(path, lineno, "ground-truth record with a score")
        try:
            coords = [float(v) for v in parts[2:6]]
            score = float(parts[6]) if len(parts) == 7 else None
        except ValueError as exc:
            raise BoxFileError(path, lineno, str(exc)) from None
        try:
            box = BoundingBox(*coords, class_id=parts[1], score=score)
        except ValueError as exc:
            raise BoxFileError(path, lineno, str(exc)) from None
        out[parts[0]][parts[1]].append(box)
    return {k: dict(v) for k, v in out.items()}


def read_boxes(path, require_score: Optional[bool] = None):
    path = Path(path)
    with path.open() as fh:
        return parse_boxes(fh, path, require_score)


def write_boxes(path, images: dict) -> None:
    with Path(path).open("w") as fh:
        fh.write("# " + " ".join(FIELDS) + "\n")
        for image_id, by_class in images.items():
            for class_id, boxes in by_class.items():
                for b in boxes:
                    rec = [image_id, class_id, *(repr(float(v)) for v in b.as_tuple())]
                    if b.score is not None:
                        rec.append(repr(float(b.score)))
                    fh.write(" ".join(str(r) for r in rec) + "\n")


def per_class(images: dict, class_id: str) -> dict:
    """``{image_id: [boxes of class_id]}`` keeping every image id."""
    return {k: list(v.get(class_id, ())) for k, v in images.items()}


REPORT_HEADER = ("class_id", "metric", "iou", "area", "max_det", "value")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.10g}"
    return str(v)


def write_report(path, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in REPORT_HEADER])
