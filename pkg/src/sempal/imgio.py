"""Load/save the pipeline's external artifacts.

Images are 8- or 16-bit PNGs mapped to float RGB in [0, 1]. Feature
tensors use a small binary format (see FEATURE_MAGIC). Strokes are JSON.
All I/O is pure given its inputs; no shared mutable state.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import cv2
import numpy as np

from .errors import DataError

FEATURE_MAGIC = b"CPFT"

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


@dataclass
class ImageRGB:
    """An editable canvas: (height, width, 3) float64 RGB in [0, 1]."""

    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.shape != (self.height, self.width, 3):
            raise DataError(
                f"image data shape {self.data.shape} does not match "
                f"{self.height}x{self.width}x3"
            )
        if self.width <= 0 or self.height <= 0:
            raise DataError("zero-size image")
        lo, hi = float(self.data.min()), float(self.data.max())
        if lo < 0.0 or hi > 1.0:
            raise DataError(f"channel values outside [0, 1]: min={lo}, max={hi}")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ImageRGB":
        arr = np.asarray(arr, dtype=np.float64)
        return cls(width=arr.shape[1], height=arr.shape[0], data=arr)

    def pixel(self, x: int, y: int) -> np.ndarray:
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise DataError(f"pixel ({x}, {y}) out of bounds")
        return self.data[y, x]


@dataclass
class RawFeatureTensor:
    """Per-pixel feature vectors: (height, width, dim) float32, all finite."""

    width: int
    height: int
    dim: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.shape != (self.height, self.width, self.dim):
            raise DataError(
                f"tensor shape {self.data.shape} does not match "
                f"{self.height}x{self.width}x{self.dim}"
            )
        if self.dim < 1:
            raise DataError("feature dim must be >= 1")
        if not np.isfinite(self.data).all():
            raise DataError("feature tensor contains non-finite values")


@dataclass
class Stroke:
    """One user stroke: covered pixels plus one target color."""

    pixels: list[tuple[int, int]]
    target: tuple[float, float, float]


@dataclass
class StrokeSet:
    """User strokes against a declared image size.

    Overlapping pixels resolve last-wins; the fidelity set is the
    deduplicated union of all stroke pixels, ordered by (y, x).
    """

    image_width: int
    image_height: int
    strokes: list[Stroke] = field(default_factory=list)

    def __post_init__(self):
        for s in self.strokes:
            if not s.pixels:
                raise DataError("empty stroke")
            if len(s.target) != 3 or any(not (0.0 <= c <= 1.0) for c in s.target):
                raise DataError(f"stroke target outside [0, 1]: {s.target}")
            for x, y in s.pixels:
                if not (0 <= x < self.image_width and 0 <= y < self.image_height):
                    raise DataError(f"stroke pixel ({x}, {y}) out of bounds")

    def resolved(self) -> tuple[list[tuple[int, int]], np.ndarray]:
        """Deduplicated stroke pixels sorted by (y, x) with last-wins targets."""
        table: dict[tuple[int, int], tuple[float, float, float]] = {}
        for s in self.strokes:
            for p in s.pixels:
                table[(int(p[0]), int(p[1]))] = s.target
        coords = sorted(table.keys(), key=lambda p: (p[1], p[0]))
        targets = np.array([table[p] for p in coords], dtype=np.float64)
        return coords, targets


def quantize8(data: np.ndarray) -> np.ndarray:
    """Quantize [0,1] floats to bytes with round-half-up."""
    return np.floor(np.asarray(data, dtype=np.float64) * 255.0 + 0.5).astype(np.uint8)


def decode_image(blob: bytes, source: str = "<bytes>") -> ImageRGB:
    """Decode an 8- or 16-bit RGB(A) PNG; channels scaled by the max code value."""
    if blob[:8] != _PNG_SIGNATURE:
        raise DataError(f"not a PNG file: {source}")
    raw = cv2.imdecode(np.frombuffer(blob, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise DataError(f"could not decode PNG: {source}")
    if raw.ndim != 3 or raw.shape[2] not in (3, 4):
        raise DataError(f"unsupported PNG layout (need RGB or RGBA): {source}")
    if raw.shape[0] == 0 or raw.shape[1] == 0:
        raise DataError(f"zero-size image: {source}")
    if raw.dtype == np.uint8:
        maxval = 255.0
    elif raw.dtype == np.uint16:
        maxval = 65535.0
    else:
        raise DataError(f"unsupported PNG bit depth {raw.dtype}: {source}")
    bgr = raw[:, :, :3]  # alpha dropped
    rgb = bgr[:, :, ::-1].astype(np.float64) / maxval
    return ImageRGB.from_array(rgb)


def load_image(path: str) -> ImageRGB:
    """Load an 8- or 16-bit RGB(A) PNG from disk."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except FileNotFoundError:
        raise DataError(f"no such image file: {path}")
    return decode_image(blob, source=str(path))


def encode_png(img: ImageRGB) -> bytes:
    """8-bit PNG bytes; channel byte = round-half-up of 255 * value."""
    ok, buf = cv2.imencode(".png", quantize8(img.data)[:, :, ::-1])
    if not ok:
        raise DataError("could not encode PNG")
    return buf.tobytes()


def encode_gray_png(values: np.ndarray) -> bytes:
    """Single-channel 8-bit PNG bytes from [0,1] float values."""
    ok, buf = cv2.imencode(".png", quantize8(values))
    if not ok:
        raise DataError("could not encode PNG")
    return buf.tobytes()


def save_image(img: ImageRGB, path: str) -> None:
    """Write an 8-bit PNG; channel byte = round-half-up of 255 * value."""
    with open(path, "wb") as fh:
        fh.write(encode_png(img))


def save_gray_image(values: np.ndarray, path: str) -> None:
    """Write a single-channel 8-bit PNG from [0,1] float values."""
    if not cv2.imwrite(str(path), quantize8(values)):
        raise DataError(f"could not write PNG: {path}")


def save_label_map(labels: np.ndarray, path: str) -> None:
    """Debug export of a superpixel label map as 16-bit grayscale (id mod 65536)."""
    gray = (np.asarray(labels) % 65536).astype(np.uint16)
    if not cv2.imwrite(str(path), gray):
        raise DataError(f"could not write PNG: {path}")


def decode_feature_tensor(blob: bytes, source: str = "<bytes>") -> RawFeatureTensor:
    """Parse the binary feature tensor format (magic, u32 dims, f32 payload)."""
    if len(blob) < 16 or blob[:4] != FEATURE_MAGIC:
        raise DataError(f"bad feature tensor magic: {source}")
    width, height, dim = struct.unpack_from("<III", blob, 4)
    if width == 0 or height == 0 or dim == 0:
        raise DataError(f"zero dimension in tensor header: {source}")
    expected = 16 + width * height * dim * 4
    if len(blob) < expected:
        raise DataError(
            f"truncated tensor payload: have {len(blob)} bytes, need {expected}"
        )
    flat = np.frombuffer(blob, dtype="<f4", count=width * height * dim, offset=16)
    if not np.isfinite(flat).all():
        raise DataError(f"non-finite values in tensor: {source}")
    data = flat.reshape(height, width, dim).copy()
    return RawFeatureTensor(width=width, height=height, dim=dim, data=data)


def load_feature_tensor(path: str) -> RawFeatureTensor:
    """Read the binary feature tensor format from disk."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except FileNotFoundError:
        raise DataError(f"no such tensor file: {path}")
    return decode_feature_tensor(blob, source=str(path))


def save_feature_tensor(tensor: RawFeatureTensor, path: str) -> None:
    """Write the binary feature tensor format; bit-exact round trip."""
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<III", tensor.width, tensor.height, tensor.dim))
        fh.write(np.ascontiguousarray(tensor.data, dtype="<f4").tobytes())


def load_strokes(path: str) -> StrokeSet:
    """Parse the JSON stroke document and validate it."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"no such strokes file: {path}")
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid strokes JSON: {exc}")
    return strokes_from_dict(doc)


def strokes_from_dict(doc: dict) -> StrokeSet:
    """Build a validated StrokeSet from a parsed stroke document."""
    try:
        width = int(doc["image_width"])
        height = int(doc["image_height"])
        raw_strokes = doc["strokes"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed stroke document: {exc}")
    if not isinstance(raw_strokes, list):
        raise DataError("strokes must be a list")
    strokes = []
    for entry in raw_strokes:
        try:
            pixels = [(int(p[0]), int(p[1])) for p in entry["pixels"]]
            target = tuple(float(c) for c in entry["target"])
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise DataError(f"malformed stroke entry: {exc}")
        strokes.append(Stroke(pixels=pixels, target=target))
    return StrokeSet(image_width=width, image_height=height, strokes=strokes)


def save_strokes(strokes: StrokeSet, path: str) -> None:
    doc = {
        "image_width": strokes.image_width,
        "image_height": strokes.image_height,
        "strokes": [
            {"pixels": [[x, y] for x, y in s.pixels], "target": list(s.target)}
            for s in strokes.strokes
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
