"""Seeded synthetic cohort: smooth ellipses vs spiculated star shapes.

The two classes differ strongly in form factor and solidity, so the
cohort is a self-contained end-to-end fixture for the feature and
cross-validation pipeline.  Benign samples are ellipses with mild
rotation and axis jitter; malignant samples are star-convex regions
whose radius alternates between outer and inner spike vertices.
Every sample also gets a gray image (darker nodule over speckle) so the
ROI path can run on the same cohort.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .maskio import BinaryMask, ClassLabel, GrayImage, save_mask
from .rng import substream

DEFAULT_COHORT_SEED = 42
DEFAULT_N_PER_CLASS = 30
DEFAULT_CANVAS = 160

_BENIGN_TIRADS = ("2", "3")
_MALIGNANT_TIRADS = ("4a", "4b", "5")


def ellipse_mask(size: int, center: tuple[float, float], axes: tuple[float, float], angle: float) -> np.ndarray:
    """Filled rotated ellipse on a size x size canvas, as a bool grid."""
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    dr = rows - center[0]
    dc = cols - center[1]
    ca, sa = np.cos(angle), np.sin(angle)
    u = dr * ca + dc * sa
    v = -dr * sa + dc * ca
    return (u / axes[0]) ** 2 + (v / axes[1]) ** 2 <= 1.0


def spiculated_mask(
    size: int,
    center: tuple[float, float],
    r_outer: float,
    r_inner: float,
    n_spikes: int,
    phase: float,
) -> np.ndarray:
    """Star-convex region with n_spikes alternating outer/inner vertices.

    The boundary radius is linear in angle between consecutive vertices,
    which renders as sharp spikes and deep notches.
    """
    vertex_angles = np.linspace(0.0, 2.0 * np.pi, 2 * n_spikes, endpoint=False)
    vertex_radii = np.where(np.arange(2 * n_spikes) % 2 == 0, r_outer, r_inner)
    # Wrap one vertex at each end so interpolation is periodic.
    ang = np.concatenate([[vertex_angles[-1] - 2.0 * np.pi], vertex_angles, [vertex_angles[0] + 2.0 * np.pi]])
    rad = np.concatenate([[vertex_radii[-1]], vertex_radii, [vertex_radii[0]]])

    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    dr = rows - center[0]
    dc = cols - center[1]
    r = np.hypot(dr, dc)
    theta = np.mod(np.arctan2(dc, dr) - phase, 2.0 * np.pi)
    boundary = np.interp(theta, ang, rad)
    return r <= boundary


def synth_image(mask: np.ndarray, seed: int) -> np.ndarray:
    """Speckled gray image with a darker region under the mask, uint8."""
    rng = substream(seed, "image")
    canvas = rng.normal(110.0, 16.0, size=mask.shape)
    canvas[mask] -= 45.0
    canvas += rng.normal(0.0, 6.0, size=mask.shape)
    return np.clip(canvas, 0, 255).astype(np.uint8)


@dataclass
class CohortSample:
    sample_id: str
    mask: BinaryMask
    image: GrayImage
    label: ClassLabel
    tirads: str


def make_cohort(
    seed: int = DEFAULT_COHORT_SEED,
    n_per_class: int = DEFAULT_N_PER_CLASS,
    size: int = DEFAULT_CANVAS,
) -> list[CohortSample]:
    """Deterministic in-memory cohort: n benign ellipses, n spiculated stars."""
    samples: list[CohortSample] = []
    for i in range(n_per_class):
        rng = substream(seed, "cohort", "benign", i)
        center = (size / 2.0 + rng.uniform(-10, 10), size / 2.0 + rng.uniform(-10, 10))
        axes = (rng.uniform(25, 45), rng.uniform(18, 38))
        grid = ellipse_mask(size, center, axes, angle=rng.uniform(0, np.pi))
        sample_id = f"benign_{i:03d}"
        samples.append(
            CohortSample(
                sample_id=sample_id,
                mask=BinaryMask(grid),
                image=GrayImage(synth_image(grid, substream(seed, "cohort", "benign", i, "img").integers(0, 2**32))),
                label=ClassLabel.BENIGN,
                tirads=_BENIGN_TIRADS[i % len(_BENIGN_TIRADS)],
            )
        )
    for i in range(n_per_class):
        rng = substream(seed, "cohort", "malignant", i)
        center = (size / 2.0 + rng.uniform(-8, 8), size / 2.0 + rng.uniform(-8, 8))
        r_outer = rng.uniform(32, 48)
        r_inner = r_outer * rng.uniform(0.35, 0.55)
        grid = spiculated_mask(
            size,
            center,
            r_outer=r_outer,
            r_inner=r_inner,
            n_spikes=int(rng.integers(8, 15)),
            phase=rng.uniform(0, 2 * np.pi),
        )
        sample_id = f"malig_{i:03d}"
        samples.append(
            CohortSample(
                sample_id=sample_id,
                mask=BinaryMask(grid),
                image=GrayImage(synth_image(grid, substream(seed, "cohort", "malignant", i, "img").integers(0, 2**32))),
                label=ClassLabel.MALIGNANT,
                tirads=_MALIGNANT_TIRADS[i % len(_MALIGNANT_TIRADS)],
            )
        )
    return samples


def write_cohort(
    out_dir: str | Path,
    seed: int = DEFAULT_COHORT_SEED,
    n_per_class: int = DEFAULT_N_PER_CLASS,
    size: int = DEFAULT_CANVAS,
) -> dict:
    """Write masks/, images/, and labels.csv under out_dir; returns paths."""
    out = Path(out_dir)
    mask_dir = out / "masks"
    image_dir = out / "images"
    mask_dir.mkdir(parents=True, exist_ok=True)
    image_dir.mkdir(parents=True, exist_ok=True)
    samples = make_cohort(seed=seed, n_per_class=n_per_class, size=size)
    lines = ["sample_id,tirads"]
    for s in samples:
        save_mask(s.mask, mask_dir / f"{s.sample_id}.png")
        Image.fromarray(s.image.intensities, mode="L").save(image_dir / f"{s.sample_id}.png")
        lines.append(f"{s.sample_id},{s.tirads}")
    labels_csv = out / "labels.csv"
    labels_csv.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return {
        "mask_dir": str(mask_dir),
        "image_dir": str(image_dir),
        "labels_csv": str(labels_csv),
        "n_benign": n_per_class,
        "n_malignant": n_per_class,
    }
