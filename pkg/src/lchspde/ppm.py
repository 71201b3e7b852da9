"""Binary PPM (P6) heatmaps with a fixed viridis-like palette."""

from __future__ import annotations

from pathlib import Path

import numpy as np

# anchor colours of the palette, evenly spaced from low to high
_ANCHORS = np.array(
    [
        (68, 1, 84),
        (72, 40, 120),
        (62, 74, 137),
        (49, 104, 142),
        (38, 130, 142),
        (31, 158, 137),
        (53, 183, 121),
        (110, 206, 88),
        (181, 222, 43),
        (253, 231, 37),
    ],
    dtype=float,
)


def palette(size: int = 256) -> np.ndarray:
    """``(size, 3)`` uint8 colour table interpolated between the anchors."""
    x = np.linspace(0.0, len(_ANCHORS) - 1, size)
    lo = np.floor(x).astype(int).clip(0, len(_ANCHORS) - 2)
    frac = (x - lo)[:, None]
    rgb = (1 - frac) * _ANCHORS[lo] + frac * _ANCHORS[lo + 1]
    return np.rint(rgb).astype(np.uint8)


PALETTE = palette()


def heatmap_bytes(values: np.ndarray, scale: int = 16, vmin: float | None = None, vmax: float | None = None) -> bytes:
    """Encode a 1D or 2D array as a P6 image; row 0 of the array is the top row."""
    a = np.asarray(values, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2 or a.size == 0:
        raise ValueError("heatmap needs a non-empty 1D or 2D array")
    if scale < 1:
        raise ValueError("scale must be >= 1")
    lo = float(np.min(a)) if vmin is None else vmin
    hi = float(np.max(a)) if vmax is None else vmax
    span = hi - lo
    t = np.zeros_like(a) if span <= 0 else np.clip((a - lo) / span, 0.0, 1.0)
    idx = np.rint(t * (len(PALETTE) - 1)).astype(int)
    img = PALETTE[idx]
    img = np.repeat(np.repeat(img, scale, axis=0), scale, axis=1)
    h, w = img.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def write_heatmap(path: str | Path, values: np.ndarray, **kwargs) -> Path:
    path = Path(path)
    path.write_bytes(heatmap_bytes(values, **kwargs))
    return path


def read_ppm(data: bytes) -> np.ndarray:
    """Decode a P6 image written by :func:`heatmap_bytes` into ``(h, w, 3)`` uint8."""
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6" or len(parts) < 4:
        raise ValueError("not a binary PPM")
    w, h = (int(v) for v in parts[1].split())
    if int(parts[2]) != 255:
        raise ValueError("only 8-bit PPM is supported")
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)


__all__ = ["PALETTE", "heatmap_bytes", "palette", "read_ppm", "write_heatmap"]
