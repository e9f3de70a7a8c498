"""Binary PPM (P6) output and latent-to-image helpers."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def encode_ppm(image) -> bytes:
    """Encode an ``(H, W, 3)`` array of values in [0, 1] as 8-bit P6.

    Bytes are ``floor(255 * v + 0.5)`` (round half up).
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {img.shape}")
    if not np.isfinite(img).all() or (img < 0).any() or (img > 1).any():
        raise ValueError("image values must be finite and lie in [0, 1]")
    pixels = np.floor(img * 255.0 + 0.5).astype(np.uint8)
    h, w = img.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes(order="C")


def write_ppm(image, path: str | Path) -> None:
    data = encode_ppm(image)
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise OSError(f"failed to write PPM to {path}: {exc}") from exc


def channel_image(channel: np.ndarray) -> np.ndarray:
    """Min-max normalize one ``(H, W)`` channel into a gray ``(H, W, 3)`` image."""
    lo, hi = float(channel.min()), float(channel.max())
    if hi > lo:
        gray = (channel - lo) / (hi - lo)
    else:
        gray = np.full(channel.shape, 0.5)
    return np.repeat(np.clip(gray, 0.0, 1.0)[..., None], 3, axis=-1)


def latent_rgb(data: np.ndarray) -> np.ndarray:
    """First three channels of an ``(H, W, C)`` latent clipped to [0, 1]; fewer channels are repeated."""
    idx = [min(i, data.shape[2] - 1) for i in range(3)]
    return np.clip(data[..., idx], 0.0, 1.0)
