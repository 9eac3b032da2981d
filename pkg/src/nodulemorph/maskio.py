"""Load masks, ultrasound images, and TI-RADS labels into a validated catalog.

Masks and images are 8-bit PNG or PGM rasters.  Labels come from a CSV with
header ``sample_id,tirads``.  TI-RADS categories 1-3 map to Benign and 4-5
(including subcategories like "4a") to Malignant.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError, LabelError

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 127
_RASTER_SUFFIXES = (".png", ".pgm")


class ClassLabel(enum.Enum):
    BENIGN = "benign"
    MALIGNANT = "malignant"


@dataclass
class BinaryMask:
    """Row-major foreground flags for one raster."""

    pixels: np.ndarray  # bool, shape (height, width)

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=bool)
        if self.pixels.ndim != 2 or self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise FormatError(f"mask must be a 2-D raster with positive dimensions, got shape {self.pixels.shape}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def foreground_count(self) -> int:
        return int(self.pixels.sum())


@dataclass
class GrayImage:
    """8-bit grayscale raster."""

    intensities: np.ndarray  # uint8, shape (height, width)

    def __post_init__(self):
        arr = np.asarray(self.intensities)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise FormatError(f"image must be a 2-D raster with positive dimensions, got shape {arr.shape}")
        self.intensities = arr.astype(np.uint8)

    @property
    def height(self) -> int:
        return self.intensities.shape[0]

    @property
    def width(self) -> int:
        return self.intensities.shape[1]


def _decode_raster(path: Path) -> np.ndarray:
    """Decode a raster file to a 2-D uint8 array (channel 0 of multi-channel)."""
    try:
        with Image.open(path) as img:
            if img.mode == "P":
                img = img.convert("RGB")
            elif img.mode == "1":
                img = img.convert("L")
            arr = np.asarray(img)
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise OSError(f"cannot decode raster {path}: {exc}") from exc
    if arr.ndim == 3:
        arr = arr[..., 0]
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise FormatError(f"raster {path} has invalid shape {arr.shape}")
    return arr.astype(np.uint8)


def load_mask(path: str | Path, threshold: int = DEFAULT_THRESHOLD) -> BinaryMask:
    """Load a mask raster; a pixel is foreground iff its intensity > threshold."""
    arr = _decode_raster(Path(path))
    return BinaryMask(arr > threshold)


def save_mask(mask: BinaryMask, path: str | Path) -> None:
    """Write a mask as an 8-bit raster (foreground 255, background 0)."""
    arr = np.where(mask.pixels, 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(Path(path))


def load_image(path: str | Path) -> GrayImage:
    """Load an ultrasound image as 8-bit grayscale (channel 0 if multi-channel)."""
    return GrayImage(_decode_raster(Path(path)))


def map_tirads(category: str) -> ClassLabel:
    """Map a TI-RADS category string to a binary class by its leading digit.

    Categories 1-3 are Benign, 4-5 Malignant.  Subcategory suffixes
    ("4a", "4b", "4c") follow their leading digit.
    """
    text = str(category).strip()
    if not text or not text[0].isdigit():
        raise LabelError(f"unparsable TI-RADS category: {category!r}")
    digit = int(text[0])
    if len(text) > 1 and (text[1].isdigit() or not text[1:].isalpha()):
        raise LabelError(f"unparsable TI-RADS category: {category!r}")
    if digit in (1, 2, 3):
        return ClassLabel.BENIGN
    if digit in (4, 5):
        return ClassLabel.MALIGNANT
    raise LabelError(f"TI-RADS category out of range 1-5: {category!r}")


@dataclass
class CatalogSample:
    sample_id: str
    mask: BinaryMask
    image: GrayImage | None = None
    label: ClassLabel | None = None
    tirads: str | None = None


@dataclass
class DatasetCatalog:
    """Immutable collection of matched (image, mask, label) records."""

    samples: list[CatalogSample]
    skipped: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    mask_provenance: str = "unspecified"

    def __post_init__(self):
        ids = [s.sample_id for s in self.samples]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise FormatError(f"duplicate sample_id(s): {dupes}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def labeled(self) -> list[CatalogSample]:
        return [s for s in self.samples if s.label is not None]

    def class_histogram(self) -> dict[str, int]:
        hist = {ClassLabel.BENIGN.value: 0, ClassLabel.MALIGNANT.value: 0}
        for s in self.labeled:
            hist[s.label.value] += 1
        return hist

    def summary(self) -> dict:
        return {
            "n_samples": len(self.samples),
            "n_labeled": len(self.labeled),
            "class_histogram": self.class_histogram(),
            "mask_provenance": self.mask_provenance,
            "skipped": self.skipped,
            "warnings": self.warnings,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def _scan_rasters(directory: Path) -> dict[str, Path]:
    """Map lowercase filename stems to raster paths, rejecting duplicates."""
    found: dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        if path.is_file() and path.suffix.lower() in _RASTER_SUFFIXES:
            stem = path.stem.lower()
            if stem in found:
                raise FormatError(f"duplicate sample_id {stem!r}: {found[stem].name} and {path.name}")
            found[stem] = path
    return found


def _read_labels_csv(path: Path) -> dict[str, str]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:2]] != ["sample_id", "tirads"]:
            raise FormatError(f"labels CSV {path} must have header sample_id,tirads, got {reader.fieldnames}")
        labels: dict[str, str] = {}
        for row in reader:
            sid = (row["sample_id"] or "").strip().lower()
            if not sid:
                continue
            if sid in labels:
                raise FormatError(f"duplicate sample_id {sid!r} in labels CSV {path}")
            labels[sid] = (row["tirads"] or "").strip()
    return labels


def load_catalog(
    image_dir: str | Path | None,
    mask_dir: str | Path,
    labels_csv: str | Path | None = None,
    threshold: int = DEFAULT_THRESHOLD,
    mask_provenance: str = "unspecified",
) -> DatasetCatalog:
    """Build a catalog from a mask directory, optional images, optional labels.

    Masks pair with images by filename stem (case-insensitive).  Only samples
    whose mask decodes are returned; labels referencing a missing mask are
    recorded as skipped with a warning rather than failing the load.
    """
    mask_dir = Path(mask_dir)
    if not mask_dir.is_dir():
        raise FileNotFoundError(f"mask directory not found: {mask_dir}")
    mask_paths = _scan_rasters(mask_dir)

    image_paths: dict[str, Path] = {}
    if image_dir is not None:
        image_dir = Path(image_dir)
        if not image_dir.is_dir():
            raise FileNotFoundError(f"image directory not found: {image_dir}")
        image_paths = _scan_rasters(image_dir)

    labels: dict[str, str] = {}
    if labels_csv is not None:
        labels = _read_labels_csv(Path(labels_csv))

    samples: list[CatalogSample] = []
    skipped: list[str] = []
    warnings: list[str] = []

    for stem in sorted(mask_paths):
        try:
            mask = load_mask(mask_paths[stem], threshold=threshold)
        except (OSError, FormatError) as exc:
            msg = f"mask {mask_paths[stem].name} skipped: {exc}"
            warnings.append(msg)
            skipped.append(f"{stem}: {exc}")
            log.warning(msg)
            continue
        image = None
        if stem in image_paths:
            try:
                image = load_image(image_paths[stem])
            except (OSError, FormatError) as exc:
                warnings.append(f"image for {stem} unreadable, kept mask only: {exc}")
        label = None
        tirads = labels.get(stem)
        if tirads is not None:
            label = map_tirads(tirads)
        samples.append(CatalogSample(sample_id=stem, mask=mask, image=image, label=label, tirads=tirads))

    for sid in sorted(set(labels) - set(mask_paths)):
        msg = f"label row {sid!r} has no mask file, skipped"
        warnings.append(msg)
        skipped.append(f"{sid}: label without mask")
        log.warning(msg)

    if not samples:
        warnings.append(f"no decodable masks found in {mask_dir}")
        log.warning("no decodable masks found in %s", mask_dir)

    return DatasetCatalog(samples=samples, skipped=skipped, warnings=warnings, mask_provenance=mask_provenance)
