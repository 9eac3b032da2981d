"""ROI preprocessing: padded crop, bilinear resize, 3-channel ImageNet tensor.

The crop box is the largest-component bounding box expanded by a padding
(default 10 px) and clamped to the image.  The crop is resized to a square
raster (default 224) with corner-aligned bilinear sampling, replicated to
three channels, and normalized with the canonical ImageNet statistics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .maskio import BinaryMask, GrayImage
from .morphology import largest_component

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
DEFAULT_PADDING = 10
DEFAULT_SIZE = 224


@dataclass(frozen=True)
class BoundingBox:
    """Inclusive pixel-index box."""

    row_min: int
    col_min: int
    row_max: int
    col_max: int

    def __post_init__(self):
        if self.row_min > self.row_max or self.col_min > self.col_max:
            raise ValueError(f"degenerate box: {self}")

    @property
    def height(self) -> int:
        return self.row_max - self.row_min + 1

    @property
    def width(self) -> int:
        return self.col_max - self.col_min + 1

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.row_min, self.col_min, self.row_max, self.col_max)


@dataclass
class RoiTensor:
    """Normalized 3-channel ROI, shape (3, size, size), float32."""

    data: np.ndarray
    sample_id: str
    box: BoundingBox
    mean: tuple[float, float, float] = IMAGENET_MEAN
    std: tuple[float, float, float] = IMAGENET_STD

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 3 or self.data.shape[0] != 3:
            raise ValueError(f"tensor must have shape (3, h, w), got {self.data.shape}")


def bounding_box(mask: BinaryMask) -> BoundingBox:
    """Tight box over the foreground of the largest component."""
    comp = largest_component(mask)
    r0, c0, r1, c1 = comp.bounds
    return BoundingBox(r0, c0, r1, c1)


def expand_and_clamp(box: BoundingBox, padding: int, image_w: int, image_h: int) -> BoundingBox:
    """Move every side outward by `padding`, then clamp to the image."""
    if padding < 0:
        raise ValueError("padding must be nonnegative")
    return BoundingBox(
        row_min=max(0, box.row_min - padding),
        col_min=max(0, box.col_min - padding),
        row_max=min(image_h - 1, box.row_max + padding),
        col_max=min(image_w - 1, box.col_max + padding),
    )


def square_box(box: BoundingBox, image_w: int, image_h: int) -> BoundingBox:
    """Grow the shorter sides to make the box square, then clamp.

    When the square exceeds an image dimension the box is clamped, so the
    result is only as square as the image allows.
    """
    side = max(box.height, box.width)
    grow_r = side - box.height
    grow_c = side - box.width
    return BoundingBox(
        row_min=max(0, box.row_min - grow_r // 2),
        col_min=max(0, box.col_min - grow_c // 2),
        row_max=min(image_h - 1, box.row_max + (grow_r - grow_r // 2)),
        col_max=min(image_w - 1, box.col_max + (grow_c - grow_c // 2)),
    )


def crop_resize(image: GrayImage, box: BoundingBox, size: int = DEFAULT_SIZE) -> np.ndarray:
    """Crop the box and resize to size x size with corner-aligned bilinear sampling.

    Output values are convex combinations of input values, so they stay
    within the crop's [min, max]; a size x size crop passes through
    bit-identically.
    """
    arr = image.intensities
    if box.row_max >= arr.shape[0] or box.col_max >= arr.shape[1] or box.row_min < 0 or box.col_min < 0:
        raise ValueError(f"box {box} outside image of shape {arr.shape}")
    crop = arr[box.row_min : box.row_max + 1, box.col_min : box.col_max + 1].astype(np.float64)
    h, w = crop.shape

    def sample_coords(n_src: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if n_src == 1:
            zeros = np.zeros(size, dtype=np.int64)
            return zeros, zeros, np.zeros(size, dtype=np.float64)
        pos = np.arange(size, dtype=np.float64) * (n_src - 1) / (size - 1)
        lo = np.floor(pos).astype(np.int64)
        lo = np.minimum(lo, n_src - 2)
        return lo, lo + 1, pos - lo

    r_lo, r_hi, r_t = sample_coords(h)
    c_lo, c_hi, c_t = sample_coords(w)
    top = crop[r_lo][:, c_lo] * (1 - c_t) + crop[r_lo][:, c_hi] * c_t
    bottom = crop[r_hi][:, c_lo] * (1 - c_t) + crop[r_hi][:, c_hi] * c_t
    return top * (1 - r_t[:, None]) + bottom * r_t[:, None]


def normalize(gray: np.ndarray, sample_id: str = "", box: BoundingBox | None = None) -> RoiTensor:
    """Replicate a gray raster to 3 channels and apply ImageNet normalization.

    Channel c of the output is (gray/255 - mean_c) / std_c.
    """
    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim != 2:
        raise ValueError(f"expected a 2-D gray raster, got shape {gray.shape}")
    scaled = gray / 255.0
    channels = [(scaled - m) / s for m, s in zip(IMAGENET_MEAN, IMAGENET_STD)]
    data = np.stack(channels, axis=0).astype(np.float32)
    if box is None:
        box = BoundingBox(0, 0, gray.shape[0] - 1, gray.shape[1] - 1)
    return RoiTensor(data=data, sample_id=sample_id, box=box)


def denormalize(t: RoiTensor) -> np.ndarray:
    """Recover the gray raster from channel 0 (inverse of normalize)."""
    return (t.data[0].astype(np.float64) * t.std[0] + t.mean[0]) * 255.0


def extract_roi(
    image: GrayImage,
    mask: BinaryMask,
    sample_id: str = "",
    padding: int = DEFAULT_PADDING,
    size: int = DEFAULT_SIZE,
    square: bool = False,
) -> RoiTensor:
    """Full preprocessing for one sample: box, pad, clamp, resize, normalize."""
    if (image.height, image.width) != (mask.height, mask.width):
        raise FormatError(
            f"image {image.height}x{image.width} and mask {mask.height}x{mask.width} dimensions differ"
        )
    box = bounding_box(mask)
    box = expand_and_clamp(box, padding, image_w=image.width, image_h=image.height)
    if square:
        box = square_box(box, image_w=image.width, image_h=image.height)
    gray = crop_resize(image, box, size=size)
    return normalize(gray, sample_id=sample_id, box=box)


def export_tensor(t: RoiTensor, path: str | Path) -> None:
    """Write one JSON header line then the raw little-endian float32 payload.

    Payload is channel-row-col (C order).  The header records shape, dtype,
    sample_id, source box, and the normalization constants.
    """
    header = {
        "shape": list(t.data.shape),
        "dtype": "float32-le",
        "sample_id": t.sample_id,
        "box": list(t.box.as_tuple()),
        "mean": list(t.mean),
        "std": list(t.std),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(t.data, dtype="<f4").tobytes())


def load_tensor(path: str | Path) -> RoiTensor:
    """Inverse of export_tensor."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
        shape = tuple(header["shape"])
    except (ValueError, KeyError) as exc:
        raise FormatError(f"bad tensor header in {path}: {exc}") from exc
    expected = int(np.prod(shape)) * 4
    if len(payload) != expected:
        raise FormatError(f"tensor payload of {path} has {len(payload)} bytes, expected {expected}")
    data = np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
    return RoiTensor(
        data=data,
        sample_id=header.get("sample_id", ""),
        box=BoundingBox(*header.get("box", (0, 0, shape[1] - 1, shape[2] - 1))),
        mean=tuple(header.get("mean", IMAGENET_MEAN)),
        std=tuple(header.get("std", IMAGENET_STD)),
    )
