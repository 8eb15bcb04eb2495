"""JPEG and image file helpers used by the dataset tools, protocol and server."""

from __future__ import annotations

from io import BytesIO
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .core import GdsError

JPEG_QUALITY = 90
SOI_MARKER = b"\xff\xd8"


class ImageIoError(GdsError):
    """An image file or byte payload could not be read or written."""


def encode_jpeg(pixels: np.ndarray, quality: int = JPEG_QUALITY) -> bytes:
    """Encode a grayscale or RGB uint8 array as JPEG bytes (deterministic)."""
    image = Image.fromarray(np.ascontiguousarray(pixels.astype(np.uint8, copy=False)))
    buf = BytesIO()
    image.save(buf, format="JPEG", quality=quality)
    return buf.getvalue()


def decode_jpeg(data: bytes) -> np.ndarray:
    try:
        with Image.open(BytesIO(data)) as image:
            if image.mode == "L":
                return np.asarray(image)
            return np.asarray(image.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageIoError(f"undecodable image payload: {exc}") from exc


def read_image(path: Path | str) -> np.ndarray:
    try:
        with Image.open(path) as image:
            if image.mode == "L":
                return np.asarray(image)
            return np.asarray(image.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageIoError(f"cannot read image {path}: {exc}") from exc


def write_jpeg(path: Path | str, pixels: np.ndarray, quality: int = JPEG_QUALITY) -> None:
    Path(path).write_bytes(encode_jpeg(pixels, quality=quality))


def looks_like_jpeg(data: bytes) -> bool:
    return data.startswith(SOI_MARKER)
