"""Annotations and training targets.

An annotation set holds page-change midpoint marks, sparse per-frame
attribute labels and acceptable-capture ranges, all indexed at a stated
fps. Training targets are derived from it: marks expand to padded
binary vectors, the page-change channel shifts by the look-ahead, and
masks say which outputs carry supervision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ATTRIBUTE_NAMES = (
    "hand_covering_content",
    "hand_not_covering_content",
    "content_out_of_frame",
    "page_out_of_frame_no_loss",
    "blur",
    "glare",
    "page_lifted",
    "two_pages",
    "graphical",
    "overall_cape",
)
N_ATTRS = len(ATTRIBUTE_NAMES)
HAZARD_SLOTS = tuple(range(9))  # all but overall_cape
OVERALL_SLOT = 9


class AnnotationSchemaError(ValueError):
    """Schema violation; the message names the offending field."""


@dataclass(frozen=True)
class AttributeVector:
    """Ten optional unit-interval values in the canonical slot order.

    Missing labels are None; present values must lie in [0, 1].
    """

    values: tuple

    def __post_init__(self):
        if len(self.values) != N_ATTRS:
            raise AnnotationSchemaError(f"attribute vector needs {N_ATTRS} slots")
        for name, v in zip(ATTRIBUTE_NAMES, self.values):
            if v is not None and not (0.0 <= v <= 1.0):
                raise AnnotationSchemaError(f"attribute {name} outside [0,1]: {v}")

    @classmethod
    def from_dict(cls, d: dict) -> "AttributeVector":
        unknown = set(d) - set(ATTRIBUTE_NAMES)
        if unknown:
            raise AnnotationSchemaError(f"unknown attribute name(s): {sorted(unknown)}")
        return cls(tuple(d.get(n) for n in ATTRIBUTE_NAMES))

    def to_dict(self) -> dict:
        return {n: v for n, v in zip(ATTRIBUTE_NAMES, self.values) if v is not None}

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """(values, present_mask) with missing slots zeroed."""
        vals = np.array([0.0 if v is None else float(v) for v in self.values], np.float32)
        present = np.array([v is not None for v in self.values], bool)
        return vals, present


@dataclass
class AnnotationSet:
    video_id: str
    fps: float
    pce_marks: list[int] = field(default_factory=list)
    attribute_labels: dict[int, AttributeVector] = field(default_factory=dict)
    capture_ranges: list[tuple[int, int]] = field(default_factory=list)

    def validate(self) -> "AnnotationSet":
        if self.fps <= 0:
            raise AnnotationSchemaError(f"fps must be positive, got {self.fps}")
        marks = list(self.pce_marks)
        if any(m < 0 for m in marks):
            raise AnnotationSchemaError("pce_marks contains a negative index")
        if any(b <= a for a, b in zip(marks, marks[1:])):
            raise AnnotationSchemaError("pce_marks not sorted strictly increasing")
        prev_end = -1
        for start, end in self.capture_ranges:
            if start < 0 or end < start:
                raise AnnotationSchemaError(f"capture_ranges entry invalid: [{start},{end}]")
            if start <= prev_end:
                raise AnnotationSchemaError("capture_ranges not disjoint and sorted")
            prev_end = end
        if any(i < 0 for i in self.attribute_labels):
            raise AnnotationSchemaError("attribute_labels contains a negative frame index")
        return self


def load_annotations(path) -> AnnotationSet:
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise AnnotationSchemaError(f"malformed annotation document: {e}") from e
    for key in ("video_id", "fps", "pce_marks", "attribute_labels", "capture_ranges"):
        if key not in doc:
            raise AnnotationSchemaError(f"missing field '{key}'")
    try:
        labels = {int(k): AttributeVector.from_dict(v)
                  for k, v in doc["attribute_labels"].items()}
    except (TypeError, AttributeError) as e:
        raise AnnotationSchemaError(f"attribute_labels malformed: {e}") from e
    out = AnnotationSet(
        video_id=str(doc["video_id"]),
        fps=float(doc["fps"]),
        pce_marks=[int(m) for m in doc["pce_marks"]],
        attribute_labels=labels,
        capture_ranges=[(int(a), int(b)) for a, b in doc["capture_ranges"]],
    )
    return out.validate()


def save_annotations(ann: AnnotationSet, path) -> None:
    ann.validate()
    doc = {
        "video_id": ann.video_id,
        "fps": ann.fps,
        "pce_marks": list(ann.pce_marks),
        "attribute_labels": {str(k): ann.attribute_labels[k].to_dict()
                             for k in sorted(ann.attribute_labels)},
        "capture_ranges": [list(r) for r in ann.capture_ranges],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", "utf-8")


# ------------------------------------------------------------------ targets

@dataclass
class TargetTensor:
    pce: np.ndarray        # (T,) float32 binary
    attrs: np.ndarray      # (T, 10) float32
    pce_mask: np.ndarray   # (T,) float32
    attr_mask: np.ndarray  # (T, 10) float32

    def __len__(self) -> int:
        return self.pce.shape[0]


def expand_pce_targets(marks, pad: int = 4, seq_len: int = 0) -> np.ndarray:
    """v[i] = 1 iff some mark m has |i - m| <= pad, clipped to the sequence."""
    v = np.zeros(seq_len, np.float32)
    for m in marks:
        if m >= seq_len:
            raise ValueError(f"mark {m} outside sequence of length {seq_len}")
        v[max(0, m - pad):min(seq_len, m + pad + 1)] = 1.0
    return v


def shift_laf(targets: TargetTensor, laf: int) -> TargetTensor:
    """Shift the page-change channel so output t supervises frame t - laf.

    The first ``laf`` outputs lose their supervision; attribute targets
    stay aligned to the current frame.
    """
    if laf < 0:
        raise ValueError("laf must be >= 0")
    if laf == 0:
        return TargetTensor(targets.pce.copy(), targets.attrs.copy(),
                            targets.pce_mask.copy(), targets.attr_mask.copy())
    n = len(targets)
    pce = np.zeros_like(targets.pce)
    mask = np.zeros_like(targets.pce_mask)
    if laf < n:
        pce[laf:] = targets.pce[:n - laf]
        mask[laf:] = targets.pce_mask[:n - laf]
    return TargetTensor(pce, targets.attrs.copy(), mask, targets.attr_mask.copy())


def _nearest_output(index_map: np.ndarray, src: int) -> int:
    """Output index whose mapped source index is nearest to ``src``;
    ties break toward the earlier output."""
    pos = int(np.searchsorted(index_map, src))
    best, best_d = None, None
    for j in (pos - 1, pos, pos + 1):
        if 0 <= j < len(index_map):
            d = abs(int(index_map[j]) - src)
            if best_d is None or d < best_d:
                best, best_d = j, d
    # searchsorted('left') lands after any run of equal values starts, so
    # walk back to the first output with the same distance
    while best > 0 and abs(int(index_map[best - 1]) - src) == best_d:
        best -= 1
    return best


def remap_labels(ann: AnnotationSet, index_map, dst_fps: float | None = None) -> AnnotationSet:
    """Carry annotations through an fps-resampling index map.

    Marks and range endpoints move to the nearest mapped output (ties to
    the earlier one); attribute labels copy onto every output frame that
    replays their source frame. Ranges that collide after heavy
    downsampling are merged so the set stays valid.
    """
    index_map = np.asarray(index_map, np.int64)
    if len(index_map) == 0:
        return AnnotationSet(ann.video_id, dst_fps or ann.fps).validate()
    marks = sorted({_nearest_output(index_map, m) for m in ann.pce_marks})
    ranges: list[tuple[int, int]] = []
    for a, b in ann.capture_ranges:
        ja, jb = _nearest_output(index_map, a), _nearest_output(index_map, b)
        if ranges and ja <= ranges[-1][1]:
            ranges[-1] = (ranges[-1][0], max(ranges[-1][1], jb))
        else:
            ranges.append((ja, jb))
    labels: dict[int, AttributeVector] = {}
    for j, src in enumerate(index_map):
        if int(src) in ann.attribute_labels:
            labels[j] = ann.attribute_labels[int(src)]
    return AnnotationSet(ann.video_id, dst_fps or ann.fps, marks, labels, ranges).validate()


def build_targets(ann: AnnotationSet, seq_len: int, pad: int = 4, laf: int = 0,
                  soft_labels: np.ndarray | None = None) -> TargetTensor:
    """Assemble per-frame training targets.

    Attribute targets come from ``soft_labels`` (a (seq_len, 10) array of
    teacher probabilities) when given, fully unmasked; otherwise from the
    sparse human labels with per-slot masks. The page-change channel is
    expanded by ``pad`` and then shifted by ``laf``.
    """
    pce = expand_pce_targets([m for m in ann.pce_marks if m < seq_len], pad, seq_len)
    pce_mask = np.ones(seq_len, np.float32)
    if soft_labels is not None:
        soft_labels = np.asarray(soft_labels, np.float32)
        if soft_labels.shape != (seq_len, N_ATTRS):
            raise ValueError(f"soft labels shape {soft_labels.shape}, "
                             f"expected {(seq_len, N_ATTRS)}")
        attrs = soft_labels.copy()
        attr_mask = np.ones((seq_len, N_ATTRS), np.float32)
    else:
        attrs = np.zeros((seq_len, N_ATTRS), np.float32)
        attr_mask = np.zeros((seq_len, N_ATTRS), np.float32)
        for idx, vec in ann.attribute_labels.items():
            if idx < seq_len:
                vals, present = vec.dense()
                attrs[idx] = vals
                attr_mask[idx] = present
    return shift_laf(TargetTensor(pce, attrs, pce_mask, attr_mask), laf)
