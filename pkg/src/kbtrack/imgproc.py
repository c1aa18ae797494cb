"""Image primitives, PPM I/O, region cropping and synthetic sequence generation.

Images are plain ``uint8`` numpy arrays of shape ``(height, width, 3)`` in RGB
order.  Positions are continuous ``(x, y)`` coordinates; pixel ``(x, y)``
lives at ``img[y, x]``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


def load_image(path):
    """Load an RGB image.  Binary PPM (P6) is always supported; other
    formats are delegated to Pillow when it is installed."""
    with open(path, "rb") as f:
        magic = f.read(2)
    if magic == b"P6":
        return _load_ppm(path)
    try:
        from PIL import Image as PILImage
    except ImportError:
        raise ValueError(f"unsupported image format (not P6 PPM): {path}") from None
    with PILImage.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def _load_ppm(path):
    with open(path, "rb") as f:
        data = f.read()
    pos = 0

    def next_token():
        nonlocal pos
        while pos < len(data):
            ch = data[pos : pos + 1]
            if ch == b"#":  # comment runs to end of line
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif ch.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"malformed PPM header: {path}")
        return data[start:pos]

    if next_token() != b"P6":
        raise ValueError(f"malformed PPM header (expected P6): {path}")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError:
        raise ValueError(f"malformed PPM header: {path}") from None
    if width < 1 or height < 1:
        raise ValueError(f"malformed PPM dimensions {width}x{height}: {path}")
    if maxval != 255:
        raise ValueError(f"unsupported PPM maxval {maxval} (only 255): {path}")
    pos += 1  # single whitespace byte after maxval
    payload = data[pos : pos + width * height * 3]
    if len(payload) != width * height * 3:
        raise ValueError(f"malformed PPM: truncated pixel data in {path}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3).copy()


def save_image(path, img):
    """Write ``img`` as a binary PPM (P6, maxval 255), bit-exact."""
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("image must have shape (height, width, 3)")
    h, w = img.shape[:2]
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(img.tobytes())


@dataclass(frozen=True)
class Region:
    """Pixels of an axis-aligned box around a continuous center.

    ``positions`` is ``(n, 2)`` float64 with columns ``(x, y)``; ``colors``
    is the matching ``(n, 3)`` uint8 slice of the image.  The box is the
    full rectangle ``|p - center| <= bandwidth`` clipped to image bounds;
    circular masking is left to the spatial kernel.
    """

    center: tuple
    bandwidth: tuple
    positions: np.ndarray
    colors: np.ndarray

    @property
    def size(self):
        return len(self.positions)


def crop_region(img, center, bandwidth):
    """Collect every integer pixel position within the box at ``center``
    with half-extents ``bandwidth``, clipped to the image."""
    h, w = img.shape[:2]
    cx, cy = float(center[0]), float(center[1])
    hx, hy = float(bandwidth[0]), float(bandwidth[1])
    if not (0 <= cx <= w - 1 and 0 <= cy <= h - 1):
        raise ValueError(f"center {center} out of bounds for {w}x{h} image")
    x0 = max(int(math.ceil(cx - hx)), 0)
    x1 = min(int(math.floor(cx + hx)), w - 1)
    y0 = max(int(math.ceil(cy - hy)), 0)
    y1 = min(int(math.floor(cy + hy)), h - 1)
    xs, ys = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
    positions = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)
    colors = img[ys.ravel(), xs.ravel()]
    return Region(center=(cx, cy), bandwidth=(hx, hy), positions=positions, colors=colors)


@dataclass
class SequenceDataset:
    """Ordered frames with per-frame ground truth boxes.

    ``ground_truth[i]`` is ``(cx, cy, hx, hy)`` or ``None`` when the truth
    is absent for that frame.
    """

    frames: list
    ground_truth: list
    frame_rate: float = 25.0

    def __post_init__(self):
        if len(self.frames) != len(self.ground_truth):
            raise ValueError("ground_truth length must match frames length")

    def __len__(self):
        return len(self.frames)


def save_ground_truth(path, ground_truth):
    """One line per frame: ``frame_index cx cy hx hy``, or ``frame_index -``
    for frames without ground truth."""
    with open(path, "w") as f:
        for i, gt in enumerate(ground_truth):
            if gt is None:
                f.write(f"{i} -\n")
            else:
                cx, cy, hx, hy = gt
                f.write(f"{i} {cx:.6g} {cy:.6g} {hx:.6g} {hy:.6g}\n")


def load_ground_truth(path):
    truth = []
    with open(path) as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            idx = int(parts[0])
            if idx != len(truth):
                raise ValueError(f"non-contiguous frame index {idx} in {path}")
            if parts[1] == "-":
                truth.append(None)
            elif len(parts) == 5:
                truth.append(tuple(float(v) for v in parts[1:]))
            else:
                raise ValueError(f"malformed ground truth line: {line!r}")
    return truth


def save_dataset(dirpath, dataset):
    """Write a dataset directory: ``frame_%04d.ppm`` plus ``gt.txt``."""
    os.makedirs(dirpath, exist_ok=True)
    for i, frame in enumerate(dataset.frames):
        save_image(os.path.join(dirpath, f"frame_{i:04d}.ppm"), frame)
    save_ground_truth(os.path.join(dirpath, "gt.txt"), dataset.ground_truth)


def load_dataset(dirpath, frame_rate=25.0):
    names = sorted(
        n for n in os.listdir(dirpath) if n.startswith("frame_") and n.endswith(".ppm")
    )
    if not names:
        raise ValueError(f"no frame_*.ppm files in {dirpath}")
    frames = [load_image(os.path.join(dirpath, n)) for n in names]
    gt_path = os.path.join(dirpath, "gt.txt")
    if os.path.exists(gt_path):
        truth = load_ground_truth(gt_path)
        if len(truth) != len(frames):
            raise ValueError("gt.txt length does not match frame count")
    else:
        truth = [None] * len(frames)
    return SequenceDataset(frames=frames, ground_truth=truth, frame_rate=frame_rate)


@dataclass
class SynthConfig:
    """Parameters of the deterministic synthetic sequence generator."""

    width: int = 64
    height: int = 64
    n_frames: int = 30
    target_size: tuple = (12, 12)
    target_color: tuple = (200, 40, 40)
    path: Sequence = ((16.0, 16.0), (48.0, 48.0))
    background_color: tuple = (70, 110, 80)
    background_noise: float = 12.0
    color_margin: float = 60.0
    illumination_drift: float = 0.0  # additive brightness per frame, all channels
    occluder_rect: Optional[tuple] = None  # (x0, y0, w, h)
    occluder_frames: Optional[tuple] = None  # inclusive (first, last)
    occluder_color: tuple = (120, 120, 130)
    seed: int = 0

    def half_extents(self):
        return (self.target_size[0] / 2.0, self.target_size[1] / 2.0)


def synth_sequence(cfg: SynthConfig) -> SequenceDataset:
    """Render a synthetic sequence: textured static background, a solid
    rectangular target moving along a piecewise-linear waypoint path,
    optional global illumination drift and an optional static occluder.

    Deterministic in ``cfg`` (including the seed); ground truth follows the
    parametric path exactly, through occluded frames as well.
    """
    if not cfg.path:
        raise ValueError("motion path must contain at least one waypoint")
    if cfg.target_size[0] > cfg.width or cfg.target_size[1] > cfg.height:
        raise ValueError("target larger than canvas")
    margin = max(
        abs(float(t) - float(b))
        for t, b in zip(cfg.target_color, cfg.background_color)
    )
    if margin < cfg.color_margin:
        raise ValueError(
            f"target color within {margin:.0f} of background; "
            f"requires margin >= {cfg.color_margin}"
        )

    rng = np.random.default_rng(cfg.seed)
    base = np.array(cfg.background_color, dtype=np.float64)
    texture = base + rng.normal(0.0, cfg.background_noise, size=(cfg.height, cfg.width, 3))
    texture = np.clip(texture, 0, 255)

    hx, hy = cfg.half_extents()
    centers = _path_centers(cfg.path, cfg.n_frames)
    xs, ys = np.meshgrid(np.arange(cfg.width), np.arange(cfg.height))

    frames = []
    truth = []
    for t, (cx, cy) in enumerate(centers):
        frame = texture.copy()
        mask = (np.abs(xs - cx) <= hx) & (np.abs(ys - cy) <= hy)
        frame[mask] = cfg.target_color
        if _occluded(cfg, t):
            x0, y0, ow, oh = cfg.occluder_rect
            frame[int(y0) : int(y0 + oh), int(x0) : int(x0 + ow)] = cfg.occluder_color
        frame = frame + cfg.illumination_drift * t
        frames.append(np.clip(frame, 0, 255).astype(np.uint8))
        truth.append((cx, cy, hx, hy))
    return SequenceDataset(frames=frames, ground_truth=truth)


def _occluded(cfg, t):
    if cfg.occluder_rect is None or cfg.occluder_frames is None:
        return False
    first, last = cfg.occluder_frames
    return first <= t <= last


def _path_centers(path, n_frames):
    """Evenly sample ``n_frames`` centers along the waypoint polyline
    (by waypoint-segment parameter, not arc length)."""
    pts = np.asarray(path, dtype=np.float64)
    if len(pts) == 1 or n_frames == 1:
        return [tuple(pts[0])] * n_frames if len(pts) == 1 else [tuple(pts[0])]
    seg = np.linspace(0.0, len(pts) - 1, n_frames)
    centers = []
    for s in seg:
        i = min(int(s), len(pts) - 2)
        frac = s - i
        c = (1 - frac) * pts[i] + frac * pts[i + 1]
        centers.append((float(c[0]), float(c[1])))
    return centers
