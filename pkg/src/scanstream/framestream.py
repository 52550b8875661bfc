"""Frame ingestion and geometry: manifests, PGM frames, fps resampling,
letterbox resizing, and the training-time augmentations.

A frame is a 2-D uint8 array (rows, cols); a sequence stacks them as
(T, H, W) with the source fps attached. All operations are pure and
deterministic given their rng.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class ManifestMissingError(FileNotFoundError):
    pass


class ManifestParseError(ValueError):
    pass


class InvalidFpsError(ValueError):
    pass


class EmptyFrameListError(ValueError):
    pass


class FrameFileError(FileNotFoundError):
    pass


@dataclass(frozen=True)
class FrameManifest:
    video_id: str
    fps: float
    width: int
    height: int
    frame_paths: tuple[Path, ...]

    def __len__(self) -> int:
        return len(self.frame_paths)


@dataclass
class FrameSequence:
    """Grayscale frames (T, H, W) uint8 at a given fps."""

    frames: np.ndarray
    fps: float
    video_id: str = ""

    def __post_init__(self):
        self.frames = np.asarray(self.frames)
        if self.frames.ndim != 3 or self.frames.dtype != np.uint8:
            raise ValueError("frames must be a (T, H, W) uint8 array")
        if self.fps <= 0:
            raise InvalidFpsError(f"invalid fps: {self.fps}")

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]


@dataclass(frozen=True)
class AugmentOptions:
    rot90_steps: int = 0
    flip_h: bool = False
    flip_v: bool = False
    target_fps: float | None = None
    fps_bounds: tuple[float, float] = (20.0, 40.0)

    def __post_init__(self):
        if self.rot90_steps not in (0, 1, 2, 3):
            raise ValueError("rot90_steps must be in {0,1,2,3}")
        if self.target_fps is not None:
            lo, hi = self.fps_bounds
            if not (lo <= self.target_fps <= hi):
                raise ValueError(f"target_fps {self.target_fps} outside [{lo}, {hi}]")


def random_augment_options(rng: np.random.Generator,
                           fps_bounds=(20.0, 40.0)) -> AugmentOptions:
    return AugmentOptions(
        rot90_steps=int(rng.integers(0, 4)),
        flip_h=bool(rng.integers(0, 2)),
        flip_v=bool(rng.integers(0, 2)),
        target_fps=float(rng.uniform(*fps_bounds)),
        fps_bounds=fps_bounds,
    )


# ----------------------------------------------------------------- manifest

def load_manifest(path) -> FrameManifest:
    path = Path(path)
    if not path.is_file():
        raise ManifestMissingError(f"manifest not found: {path}")
    try:
        doc = json.loads(path.read_text("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ManifestParseError(f"malformed manifest {path}: {e}") from e
    for key in ("video_id", "fps", "width", "height", "frames"):
        if key not in doc:
            raise ManifestParseError(f"manifest {path} missing field '{key}'")
    fps = float(doc["fps"])
    if fps <= 0:
        raise InvalidFpsError(f"invalid fps: {doc['fps']}")
    frames = doc["frames"]
    if not frames:
        raise EmptyFrameListError(f"manifest {path} lists no frames")
    base = path.parent
    return FrameManifest(
        video_id=str(doc["video_id"]),
        fps=fps,
        width=int(doc["width"]),
        height=int(doc["height"]),
        frame_paths=tuple(base / f for f in frames),
    )


def save_manifest(manifest: FrameManifest, path) -> None:
    path = Path(path)
    doc = {
        "video_id": manifest.video_id,
        "fps": manifest.fps,
        "width": manifest.width,
        "height": manifest.height,
        "frames": [str(p.relative_to(path.parent)) for p in manifest.frame_paths],
    }
    path.write_text(json.dumps(doc, indent=1) + "\n", "utf-8")


def read_pgm(path) -> np.ndarray:
    """Binary PGM (P5, maxval 255) -> (H, W) uint8."""
    path = Path(path)
    if not path.is_file():
        raise FrameFileError(f"frame file not found: {path}")
    raw = path.read_bytes()
    if raw[:2] != b"P5":
        raise ManifestParseError(f"{path}: not a binary PGM (P5) file")
    # header tokens: width, height, maxval; '#' comments run to end of line
    tokens: list[int] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ManifestParseError(f"{path}: truncated PGM header")
        tokens.append(int(raw[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = tokens
    if maxval != 255:
        raise ManifestParseError(f"{path}: unsupported PGM maxval {maxval}")
    data = raw[pos:pos + w * h]
    if len(data) != w * h:
        raise ManifestParseError(f"{path}: PGM pixel data truncated")
    return np.frombuffer(data, np.uint8).reshape(h, w).copy()


def write_pgm(frame: np.ndarray, path) -> None:
    frame = np.asarray(frame, np.uint8)
    h, w = frame.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + frame.tobytes())


def load_sequence(manifest: FrameManifest) -> FrameSequence:
    frames = np.empty((len(manifest), manifest.height, manifest.width), np.uint8)
    for i, p in enumerate(manifest.frame_paths):
        f = read_pgm(p)
        if f.shape != (manifest.height, manifest.width):
            raise ManifestParseError(
                f"{p}: frame is {f.shape[1]}x{f.shape[0]}, manifest says "
                f"{manifest.width}x{manifest.height}")
        frames[i] = f
    return FrameSequence(frames, manifest.fps, manifest.video_id)


# ---------------------------------------------------------------- grayscale

def to_grayscale(r, g, b):
    """BT.601 luma from 8-bit channels; round-half-up to uint8."""
    y = 0.299 * np.asarray(r, np.float64) + 0.587 * np.asarray(g, np.float64) \
        + 0.114 * np.asarray(b, np.float64)
    return np.clip(np.floor(y + 0.5), 0, 255).astype(np.uint8)


# --------------------------------------------------------------- resampling

def resample_index_map(n_frames: int, src_fps: float, dst_fps: float) -> np.ndarray:
    """Nearest-timestamp source index for each output frame.

    Output j maps to round(j * src_fps / dst_fps); emission stops when
    the mapped index would run past the source.
    """
    if src_fps <= 0 or dst_fps <= 0:
        raise InvalidFpsError("fps must be positive")
    n_out = int(np.ceil(n_frames * dst_fps / src_fps)) + 2
    # multiply before dividing: j*src/dst is exact for integer fps pairs
    idx = np.floor(np.arange(n_out) * src_fps / dst_fps + 0.5).astype(np.int64)
    return idx[idx < n_frames]


def resample_fps(seq: FrameSequence, dst_fps: float) -> tuple[FrameSequence, np.ndarray]:
    index_map = resample_index_map(len(seq), seq.fps, dst_fps)
    out = FrameSequence(seq.frames[index_map].copy(), dst_fps, seq.video_id)
    return out, index_map


# ----------------------------------------------------------------- resizing

def _bilinear_axis(src: int, dst: int):
    # half-pixel alignment: exact identity when src == dst
    pos = (np.arange(dst) + 0.5) * (src / dst) - 0.5
    pos = np.clip(pos, 0, src - 1)
    lo = np.floor(pos).astype(np.int64)
    hi = np.minimum(lo + 1, src - 1)
    frac = (pos - lo).astype(np.float32)
    return lo, hi, frac


def resize_bilinear(frames: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of (..., H, W) uint8 arrays, rounded back to uint8."""
    ylo, yhi, fy = _bilinear_axis(frames.shape[-2], out_h)
    xlo, xhi, fx = _bilinear_axis(frames.shape[-1], out_w)
    f = frames.astype(np.float32)
    rows = f[..., ylo, :] * (1 - fy)[:, None] + f[..., yhi, :] * fy[:, None]
    out = rows[..., :, xlo] * (1 - fx) + rows[..., :, xhi] * fx
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def letterbox_resize(frame: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Aspect-preserving resize, centered on a zero (black) canvas."""
    out = letterbox_batch(frame[None], target_w, target_h)
    return out[0]


def letterbox_batch(frames: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    if target_w <= 0 or target_h <= 0:
        raise ValueError("target dimensions must be positive")
    h, w = frames.shape[-2], frames.shape[-1]
    scale = min(target_w / w, target_h / h)
    cw = max(1, round(w * scale))
    ch = max(1, round(h * scale))
    content = resize_bilinear(frames, ch, cw)
    out = np.zeros(frames.shape[:-2] + (target_h, target_w), np.uint8)
    oy = (target_h - ch) // 2
    ox = (target_w - cw) // 2
    out[..., oy:oy + ch, ox:ox + cw] = content
    return out


# ------------------------------------------------------------- augmentation

def augment(window: FrameSequence, opts: AugmentOptions) -> FrameSequence:
    """Apply one rot90/flip composition to every frame, then retarget fps."""
    if len(window) == 0:
        raise ValueError("cannot augment an empty window")
    frames = window.frames
    if opts.rot90_steps:
        frames = np.rot90(frames, k=opts.rot90_steps, axes=(1, 2))
    if opts.flip_h:
        frames = frames[:, :, ::-1]
    if opts.flip_v:
        frames = frames[:, ::-1, :]
    out = FrameSequence(np.ascontiguousarray(frames), window.fps, window.video_id)
    if opts.target_fps is not None and opts.target_fps != window.fps:
        out, _ = resample_fps(out, opts.target_fps)
    return out


def augment_with_map(window: FrameSequence, opts: AugmentOptions):
    """Like augment() but also returns the fps-resampling index map."""
    spatial = augment(window, replace(opts, target_fps=None))
    if opts.target_fps is not None and opts.target_fps != window.fps:
        return resample_fps(spatial, opts.target_fps)
    return spatial, np.arange(len(spatial), dtype=np.int64)


# ----------------------------------------------------------- window sampling

def window_sample(seq: FrameSequence, length: int = 128,
                  rng: np.random.Generator | None = None):
    """Uniform contiguous window; short sequences are tail-padded by
    repeating the final frame. Returns (window, valid_mask, start)."""
    rng = rng or np.random.default_rng()
    n = len(seq)
    if n == 0:
        raise ValueError("cannot sample a window from an empty sequence")
    if n >= length:
        start = int(rng.integers(0, n - length + 1))
        frames = seq.frames[start:start + length].copy()
        valid = np.ones(length, bool)
    else:
        start = 0
        pad = np.repeat(seq.frames[-1:], length - n, axis=0)
        frames = np.concatenate([seq.frames, pad], axis=0)
        valid = np.zeros(length, bool)
        valid[:n] = True
    return FrameSequence(frames, seq.fps, seq.video_id), valid, start
