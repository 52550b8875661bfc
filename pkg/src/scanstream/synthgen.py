"""Procedural scan-video generator with exact ground truth.

Each video is a sequence of steady page views separated by page-turn
(diagonal wipe with a darkened fold band) or pan transitions. Steady
segments carry optional quality hazards (hands, out-of-frame shifts,
blur, glare) confined to a prefix and/or suffix of the segment so every
page keeps one contiguous hazard-free run, which becomes its acceptable
capture range. Everything derives deterministically from the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import framestream as fs
from . import labelstore as ls

CAPTURE_MODES = ("right_only", "left_only", "both", "panning")

DESK_VALUE = 96
PAGE_VALUE = 242
BAR_VALUE = 62
HAND_VALUE = 38

# fractions of frame height/width
DESK_MARGIN = 0.05
CONTENT_MARGIN = 0.16
SHAKE_FRACTION = 0.02

STEADY_HAZARDS = (
    "hand_covering_content",
    "hand_not_covering_content",
    "content_out_of_frame",
    "page_out_of_frame_no_loss",
    "blur",
    "glare",
)

DEFAULT_HAZARD_RATES = {name: 0.3 for name in STEADY_HAZARDS} | {"graphical": 0.15}


class SynthConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_pages: int = 8
    fps: float = 30.0
    width: int = 240
    height: int = 320
    dwell_frames: int = 36
    turn_frames: int = 12
    hazard_rates: dict = field(default_factory=lambda: dict(DEFAULT_HAZARD_RATES))
    capture_mode: str = "right_only"

    def __post_init__(self):
        if self.n_pages < 1:
            raise SynthConfigError("n_pages must be >= 1")
        if self.turn_frames < 3:
            raise SynthConfigError("turn_frames must be >= 3")
        if self.fps <= 0 or self.width <= 0 or self.height <= 0 or self.dwell_frames < 1:
            raise SynthConfigError("fps, dimensions and dwell_frames must be positive")
        if self.capture_mode not in CAPTURE_MODES:
            raise SynthConfigError(f"unknown capture_mode: {self.capture_mode}")
        for name, p in self.hazard_rates.items():
            if name not in DEFAULT_HAZARD_RATES:
                raise SynthConfigError(f"unknown hazard name: {name}")
            if not (0.0 <= p <= 1.0):
                raise SynthConfigError(f"hazard rate for {name} outside [0,1]")


@dataclass
class SynthVideo:
    frames: fs.FrameSequence
    annotations: ls.AnnotationSet
    segments: list  # (kind, start, end_exclusive, page_index)


# ---------------------------------------------------------------- rendering

def _translate(img: np.ndarray, dy: int, dx: int, fill: int) -> np.ndarray:
    h, w = img.shape
    out = np.full_like(img, fill)
    ys = slice(max(0, dy), min(h, h + dy))
    xs = slice(max(0, dx), min(w, w + dx))
    ys_src = slice(max(0, -dy), min(h, h - dy))
    xs_src = slice(max(0, -dx), min(w, w - dx))
    out[ys, xs] = img[ys_src, xs_src]
    return out


def _ellipse_mask(h, w, cy, cx, ry, rx):
    yy, xx = np.ogrid[:h, :w]
    return ((yy - cy) / max(ry, 1)) ** 2 + ((xx - cx) / max(rx, 1)) ** 2 <= 1.0


def render_page(content_seed: int, width: int, height: int,
                graphical_prob: float = 0.0, two_panels: bool = False):
    """One page scene: desk border, white page, text bars or (with the
    given probability) large graphical shapes. Returns (frame, is_graphical)."""
    g = np.random.default_rng(content_seed)
    img = np.full((height, width), DESK_VALUE, np.uint8)
    py0, py1 = round(DESK_MARGIN * height), round((1 - DESK_MARGIN) * height)
    px0, px1 = round(DESK_MARGIN * width), round((1 - DESK_MARGIN) * width)
    img[py0:py1, px0:px1] = PAGE_VALUE
    graphical = bool(g.random() < graphical_prob)

    panels = 2 if two_panels else 1
    for panel in range(panels):
        x0 = round(CONTENT_MARGIN * width) if panel == 0 else round(width * 0.5 + 6)
        x1 = round(width * 0.5 - 6) if (two_panels and panel == 0) \
            else round((1 - CONTENT_MARGIN) * width)
        if panel == 1:
            x0 = max(x0, round(width * 0.5 + 6))
        y0, y1 = round(CONTENT_MARGIN * height), round((1 - CONTENT_MARGIN) * height)
        if graphical:
            for _ in range(int(g.integers(2, 5))):
                gy0 = int(g.integers(y0, max(y0 + 1, y1 - 20)))
                gx0 = int(g.integers(x0, max(x0 + 1, x1 - 20)))
                gy1 = min(y1, gy0 + int(g.integers(20, max(21, (y1 - y0) // 2))))
                gx1 = min(x1, gx0 + int(g.integers(20, max(21, (x1 - x0) // 2))))
                val = int(g.integers(70, 140))
                if g.random() < 0.5:
                    img[gy0:gy1, gx0:gx1] = val
                else:
                    cy, cx = (gy0 + gy1) // 2, (gx0 + gx1) // 2
                    mask = _ellipse_mask(height, width, cy, cx,
                                         (gy1 - gy0) // 2, (gx1 - gx0) // 2)
                    img[mask] = val
        else:
            bar_h = max(3, round(0.028 * height))
            gap = max(2, round(0.018 * height))
            y = y0
            while y + bar_h <= y1:
                frac = g.uniform(0.55, 1.0)
                bw = max(8, round((x1 - x0) * frac))
                val = BAR_VALUE + int(g.integers(-12, 13))
                img[y:y + bar_h, x0:x0 + bw] = val
                y += bar_h + gap
    return img, graphical


def animate_turn(page_a: np.ndarray, page_b: np.ndarray, t: float) -> np.ndarray:
    """Diagonal wipe from a to b with a darkened fold band at the boundary."""
    if t <= 0.0:
        return page_a.copy()
    if t >= 1.0:
        return page_b.copy()
    h, w = page_a.shape
    yy, xx = np.ogrid[:h, :w]
    diag = yy + xx
    boundary = t * (h + w - 2)
    out = np.where(diag <= boundary, page_b, page_a)
    band = np.abs(diag - boundary) < max(4, 0.025 * (h + w))
    out = out.astype(np.float32)
    out[band] *= 0.45
    return np.clip(out, 0, 255).astype(np.uint8)


def animate_pan(page_a: np.ndarray, page_b: np.ndarray, t: float) -> np.ndarray:
    """Horizontal slide from a to b; t=0 -> a, t=1 -> b."""
    h, w = page_a.shape
    off = round(t * w)
    out = np.empty_like(page_a)
    if off < w:
        out[:, :w - off] = page_a[:, off:]
    if off > 0:
        out[:, w - off:] = page_b[:, :off]
    return out


# ------------------------------------------------------------------ hazards

def _page_and_content_boxes(frame: np.ndarray):
    bright = frame >= 200
    dark = frame < 128
    if not bright.any():
        h, w = frame.shape
        return (0, h - 1, 0, w - 1), None
    rows = np.nonzero(bright.any(axis=1))[0]
    cols = np.nonzero(bright.any(axis=0))[0]
    page = (rows[0], rows[-1], cols[0], cols[-1])
    inner = dark.copy()
    inner[:page[0], :] = False
    inner[page[1] + 1:, :] = False
    inner[:, :page[2]] = False
    inner[:, page[3] + 1:] = False
    if not inner.any():
        return page, None
    rows = np.nonzero(inner.any(axis=1))[0]
    cols = np.nonzero(inner.any(axis=0))[0]
    return page, (rows[0], rows[-1], cols[0], cols[-1])


def _box_blur5(frame: np.ndarray) -> np.ndarray:
    padded = np.pad(frame.astype(np.float32), 2, mode="edge")
    c = np.cumsum(np.cumsum(padded, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    h, w = frame.shape
    s = c[5:5 + h, 5:5 + w] - c[:h, 5:5 + w] - c[5:5 + h, :w] + c[:h, :w]
    return np.clip(np.floor(s / 25.0 + 0.5), 0, 255).astype(np.uint8)


def apply_hazard(frame: np.ndarray, hazard: str, rng: np.random.Generator):
    """Degrade a frame with one named hazard; returns (frame, attribute deltas)."""
    h, w = frame.shape
    deltas = {hazard: 1.0}
    page, content = _page_and_content_boxes(frame)

    if hazard == "blur":
        return _box_blur5(frame), deltas

    if hazard == "glare":
        cy = int(rng.integers(h // 4, 3 * h // 4))
        cx = int(rng.integers(w // 4, 3 * w // 4))
        radius = 0.22 * min(h, w) * rng.uniform(0.8, 1.3)
        yy, xx = np.ogrid[:h, :w]
        d2 = ((yy - cy) ** 2 + (xx - cx) ** 2) / radius ** 2
        bump = 130.0 * np.maximum(0.0, 1.0 - d2)
        return np.clip(frame.astype(np.float32) + bump, 0, 255).astype(np.uint8), deltas

    if hazard == "hand_covering_content":
        if content is None:
            cy, cx = h // 2, w // 2
        else:
            cy = int(rng.integers(content[0], content[1] + 1))
            cx = int(rng.integers(content[2], content[3] + 1))
        ry = max(6, round(0.10 * h * rng.uniform(0.8, 1.3)))
        rx = max(6, round(0.12 * w * rng.uniform(0.8, 1.3)))
        out = frame.copy()
        out[_ellipse_mask(h, w, cy, cx, ry, rx)] = HAND_VALUE
        return out, deltas

    if hazard == "hand_not_covering_content":
        # widest bright band inside the page, below/above the content
        lo = content[1] + 2 if content is not None else page[0]
        hi = page[1]
        if hi - lo < 8:  # fall back to the band above the content
            lo, hi = page[0], (content[0] - 2 if content is not None else page[1])
        band = max(4, hi - lo)
        ry = max(3, min(band // 2 - 1, round(0.05 * h)))
        cy = int(np.clip((lo + hi) // 2, ry, h - 1 - ry))
        cx = int(rng.integers(page[2] + w // 8, page[3] - w // 8 + 1))
        rx = max(4, round(0.08 * w))
        out = frame.copy()
        out[_ellipse_mask(h, w, cy, cx, ry, rx)] = HAND_VALUE
        return out, deltas

    if hazard in ("content_out_of_frame", "page_out_of_frame_no_loss"):
        sign = -1 if rng.random() < 0.5 else 1
        axis = "x" if rng.random() < 0.7 else "y"
        size = w if axis == "x" else h
        if axis == "x":
            lo_edge, hi_edge = page[2], page[3]
            c_lo = content[2] if content is not None else size // 4
            c_hi = content[3] if content is not None else 3 * size // 4
        else:
            lo_edge, hi_edge = page[0], page[1]
            c_lo = content[0] if content is not None else size // 4
            c_hi = content[1] if content is not None else 3 * size // 4
        # shifting by +d moves pixels toward the high border
        edge = (size - 1 - hi_edge) if sign > 0 else lo_edge
        room = (size - 1 - c_hi) if sign > 0 else c_lo
        if hazard == "page_out_of_frame_no_loss":
            # past the page edge but short of the content
            dist = edge + max(2, round((room - edge) * 0.4))
        else:
            dist = room + max(4, round(0.08 * size * rng.uniform(1.0, 1.8)))
        dy, dx = (0, sign * dist) if axis == "x" else (sign * dist, 0)
        return _translate(frame, dy, dx, DESK_VALUE), deltas

    raise SynthConfigError(f"unknown hazard: {hazard}")

# --------------------------------------------------------------- generation

def _segment_plan(cfg: SynthConfig, rng: np.random.Generator):
    """Alternating steady/transition segments with jittered dwell."""
    plan = []
    pos = 0
    for page in range(cfg.n_pages):
        dwell = max(8, round(cfg.dwell_frames * rng.uniform(0.7, 1.3)))
        plan.append(("steady", pos, pos + dwell, page))
        pos += dwell
        if page < cfg.n_pages - 1:
            kind = "pan" if cfg.capture_mode == "panning" else "turn"
            plan.append((kind, pos, pos + cfg.turn_frames, page))
            pos += cfg.turn_frames
    return plan, pos


def _plan_hazards(seg_len: int, cfg: SynthConfig, rng: np.random.Generator):
    """Assign occurring hazards to non-overlapping prefix/suffix runs.

    Returns (runs, clean_lo, clean_hi) where runs maps local frame ->
    (hazard_name, run_seed) and [clean_lo, clean_hi) is hazard-free.
    """
    prefix_end = 0
    suffix_start = seg_len
    runs = {}
    budget = int(seg_len * 0.7)
    for name in STEADY_HAZARDS:
        rate = cfg.hazard_rates.get(name, 0.0)
        occurs = rng.random() < rate
        length = int(round(seg_len * rng.uniform(0.15, 0.35)))
        side = rng.random() < 0.5
        run_seed = int(rng.integers(2 ** 62))
        if not occurs or length == 0:
            continue
        used = prefix_end + (seg_len - suffix_start)
        length = min(length, budget - used)
        if length <= 0:
            continue
        if side:
            for k in range(prefix_end, prefix_end + length):
                runs[k] = (name, run_seed)
            prefix_end += length
        else:
            for k in range(suffix_start - length, suffix_start):
                runs[k] = (name, run_seed)
            suffix_start -= length
    return runs, prefix_end, suffix_start


def generate_video(cfg: SynthConfig) -> SynthVideo:
    rng = np.random.default_rng(cfg.seed)
    h, w = cfg.height, cfg.width
    two_panels = cfg.capture_mode == "both"
    page_seeds = [int(rng.integers(2 ** 62)) for _ in range(cfg.n_pages)]
    g_rate = cfg.hazard_rates.get("graphical", 0.0)
    scenes, graphical = [], []
    for s in page_seeds:
        img, is_g = render_page(s, w, h, graphical_prob=g_rate, two_panels=two_panels)
        scenes.append(img)
        graphical.append(is_g)

    plan, total = _segment_plan(cfg, rng)
    frames = np.empty((total, h, w), np.uint8)
    attrs = np.zeros((total, ls.N_ATTRS), np.float32)
    marks = []
    ranges = []
    sy = max(1, round(SHAKE_FRACTION * h))
    sx = max(1, round(SHAKE_FRACTION * w))

    for kind, start, end, page in plan:
        seg_len = end - start
        if kind == "steady":
            runs, clean_lo, clean_hi = _plan_hazards(seg_len, cfg, rng)
            for k in range(seg_len):
                img = scenes[page]
                if k in runs:
                    name, run_seed = runs[k]
                    img, deltas = apply_hazard(img, name, np.random.default_rng(run_seed))
                    for dname, val in deltas.items():
                        attrs[start + k, ls.ATTRIBUTE_NAMES.index(dname)] = val
                dy = int(rng.integers(-sy, sy + 1))
                dx = int(rng.integers(-sx, sx + 1))
                frames[start + k] = _translate(img, dy, dx, DESK_VALUE)
            if graphical[page]:
                attrs[start:end, ls.ATTRIBUTE_NAMES.index("graphical")] = 1.0
            if two_panels:
                attrs[start:end, ls.ATTRIBUTE_NAMES.index("two_pages")] = 1.0
            hazard_free = attrs[start:end, list(ls.HAZARD_SLOTS)].sum(axis=1) == 0
            if hazard_free.any() and clean_hi > clean_lo:
                lo = start + clean_lo
                hi = start + clean_hi - 1
                if not graphical[page] and not two_panels:
                    ranges.append((lo, hi))
        else:
            marks.append(start + cfg.turn_frames // 2)
            nxt = scenes[page + 1]
            for k in range(seg_len):
                t = (k + 1) / (seg_len + 1)
                if kind == "turn":
                    if cfg.capture_mode == "left_only":
                        img = animate_turn(nxt, scenes[page], 1.0 - t)
                    else:
                        img = animate_turn(scenes[page], nxt, t)
                    attrs[start + k, ls.ATTRIBUTE_NAMES.index("page_lifted")] = 1.0
                else:
                    img = animate_pan(scenes[page], nxt, t)
                    attrs[start + k, ls.ATTRIBUTE_NAMES.index("content_out_of_frame")] = 1.0
                if two_panels:
                    attrs[start + k, ls.ATTRIBUTE_NAMES.index("two_pages")] = 1.0
                dy = int(rng.integers(-sy, sy + 1))
                dx = int(rng.integers(-sx, sx + 1))
                frames[start + k] = _translate(img, dy, dx, DESK_VALUE)

    # overall capture quality: steady frame with no hazard attribute set
    steady_mask = np.zeros(total, bool)
    for kind, start, end, _ in plan:
        if kind == "steady":
            steady_mask[start:end] = True
    clean = attrs[:, list(ls.HAZARD_SLOTS)].sum(axis=1) == 0
    attrs[:, ls.OVERALL_SLOT] = (steady_mask & clean).astype(np.float32)

    labels = {
        i: ls.AttributeVector(tuple(float(v) for v in attrs[i]))
        for i in range(total)
    }
    ann = ls.AnnotationSet(
        video_id=f"synth-{cfg.seed:08x}",
        fps=cfg.fps,
        pce_marks=marks,
        attribute_labels=labels,
        capture_ranges=ranges,
    ).validate()
    seq = fs.FrameSequence(frames, cfg.fps, ann.video_id)
    return SynthVideo(seq, ann, plan)


# ------------------------------------------------------------------- corpus

def write_video(video: SynthVideo, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for i in range(len(video.frames)):
        name = f"frame_{i:05d}.pgm"
        fs.write_pgm(video.frames.frames[i], out_dir / name)
        names.append(name)
    manifest = fs.FrameManifest(
        video_id=video.annotations.video_id,
        fps=video.frames.fps,
        width=video.frames.width,
        height=video.frames.height,
        frame_paths=tuple(out_dir / n for n in names),
    )
    fs.save_manifest(manifest, out_dir / "manifest.json")
    ls.save_annotations(video.annotations, out_dir / "annotations.json")


def generate_corpus(cfg: SynthConfig, n_videos: int, out_dir, seed: int | None = None):
    """Write ``n_videos`` videos plus an index; returns the index dict.

    Per-video seeds derive from ``seed`` (default: cfg.seed) so the whole
    corpus is reproducible byte for byte.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    base_seed = cfg.seed if seed is None else seed
    ss = np.random.SeedSequence(base_seed)
    video_seeds = [int(s.generate_state(1)[0]) for s in ss.spawn(n_videos)]
    entries = []
    from dataclasses import replace
    for i, vseed in enumerate(video_seeds):
        vcfg = replace(cfg, seed=vseed)
        video = generate_video(vcfg)
        vdir = out_dir / f"video_{i:03d}"
        write_video(video, vdir)
        entries.append({
            "video_id": video.annotations.video_id,
            "dir": vdir.name,
            "seed": vseed,
            "n_pages": cfg.n_pages,
            "fps": cfg.fps,
            "capture_mode": cfg.capture_mode,
        })
    index = {"base_seed": base_seed, "videos": entries}
    (out_dir / "corpus.json").write_text(json.dumps(index, indent=1) + "\n", "utf-8")
    return index


def load_corpus(corpus_dir):
    """Yield (manifest, annotations) pairs from a generated corpus."""
    corpus_dir = Path(corpus_dir)
    index = json.loads((corpus_dir / "corpus.json").read_text("utf-8"))
    out = []
    for entry in index["videos"]:
        vdir = corpus_dir / entry["dir"]
        manifest = fs.load_manifest(vdir / "manifest.json")
        ann = ls.load_annotations(vdir / "annotations.json")
        out.append((manifest, ann))
    return out
