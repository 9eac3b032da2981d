"""Morphological descriptors of binary nodule masks.

Computes the 15-value shape feature vector: area, perimeter, convex area,
filled area, solidity, form factor, eccentricity, aspect ratio, and the
seven Hu invariants.  All geometry runs over pixel centers at integer
coordinates; pixels themselves are modeled as unit squares, which is why
second-order covariance entries carry a +1/12 correction (a w-by-h
rectangle then reproduces the continuous w^2/12 variance and 1-pixel-thick
shapes keep a nonzero minor axis).

Moments are accumulated in exact integer/rational arithmetic so symmetric
shapes produce exactly symmetric moments; every value is rounded to float
only once, when stored.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import EmptyMaskError
from .maskio import BinaryMask

log = logging.getLogger(__name__)

FEATURE_NAMES = (
    "area",
    "perimeter",
    "convex_area",
    "filled_area",
    "solidity",
    "form_factor",
    "eccentricity",
    "aspect_ratio",
    "hu1",
    "hu2",
    "hu3",
    "hu4",
    "hu5",
    "hu6",
    "hu7",
)

# 8-neighborhood in clockwise order (image coords: row down, col right),
# starting north: N NE E SE S SW W NW
_CLOCKWISE8 = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
_OFFSETS8 = _CLOCKWISE8
_OFFSETS4 = ((-1, 0), (1, 0), (0, -1), (0, 1))


@dataclass
class Component:
    """One maximal 8-connected set of foreground pixels."""

    pixels: np.ndarray  # int, shape (n, 2), (row, col), row-major scan order

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.int64)
        if self.pixels.ndim != 2 or self.pixels.shape[1] != 2 or len(self.pixels) == 0:
            raise ValueError("component needs a nonempty (n, 2) pixel array")

    @property
    def area(self) -> int:
        return len(self.pixels)

    @property
    def bounds(self) -> tuple[int, int, int, int]:
        """(row_min, col_min, row_max, col_max), inclusive."""
        rows = self.pixels[:, 0]
        cols = self.pixels[:, 1]
        return int(rows.min()), int(cols.min()), int(rows.max()), int(cols.max())

    def to_grid(self, pad: int = 0) -> tuple[np.ndarray, tuple[int, int]]:
        """Rasterize onto a tight bool grid; returns (grid, (row_off, col_off))."""
        r0, c0, r1, c1 = self.bounds
        grid = np.zeros((r1 - r0 + 1 + 2 * pad, c1 - c0 + 1 + 2 * pad), dtype=bool)
        grid[self.pixels[:, 0] - r0 + pad, self.pixels[:, 1] - c0 + pad] = True
        return grid, (r0 - pad, c0 - pad)


@dataclass
class Contour:
    """Closed Moore-neighbor boundary path of a component."""

    points: np.ndarray  # int, shape (m, 2), (row, col), clockwise

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.int64)
        if self.points.ndim != 2 or self.points.shape[1] != 2 or len(self.points) == 0:
            raise ValueError("contour needs a nonempty (m, 2) point array")

    def __len__(self) -> int:
        return len(self.points)


def connected_components(mask: BinaryMask) -> list[Component]:
    """Partition foreground into maximal 8-connected components.

    Components are ordered by their (min row, min col); an empty mask yields
    an empty list.
    """
    grid = mask.pixels
    h, w = grid.shape
    visited = np.zeros_like(grid, dtype=bool)
    components: list[Component] = []
    for r0 in range(h):
        row = grid[r0]
        for c0 in range(w):
            if not row[c0] or visited[r0, c0]:
                continue
            # flood fill from the first unvisited pixel in scan order
            queue = deque([(r0, c0)])
            visited[r0, c0] = True
            pix = []
            while queue:
                r, c = queue.popleft()
                pix.append((r, c))
                for dr, dc in _OFFSETS8:
                    nr, nc = r + dr, c + dc
                    if 0 <= nr < h and 0 <= nc < w and grid[nr, nc] and not visited[nr, nc]:
                        visited[nr, nc] = True
                        queue.append((nr, nc))
            pix.sort()
            components.append(Component(np.array(pix, dtype=np.int64)))
    components.sort(key=lambda comp: (comp.bounds[0], comp.bounds[1]))
    return components


def largest_component(mask: BinaryMask) -> Component:
    """The component with the most pixels; ties go to the smaller (min row, min col)."""
    comps = connected_components(mask)
    if not comps:
        raise EmptyMaskError("mask has no foreground pixels")
    # components are ordered by (min row, min col) and max() keeps the first tie
    return max(comps, key=lambda comp: comp.area)


def trace_contour(component: Component) -> Contour:
    """Clockwise Moore-neighbor boundary trace.

    Starts at the lexicographically smallest pixel; a single pixel yields a
    1-point contour.  Stops when the trace is about to repeat its very first
    move out of the start pixel (Jacob's criterion), so 1-pixel spurs that
    must be walked twice stay on the path.
    """
    grid, (roff, coff) = component.to_grid(pad=1)
    pts = component.pixels
    start_idx = np.lexsort((pts[:, 1], pts[:, 0]))[0]
    start = (int(pts[start_idx, 0]) - roff, int(pts[start_idx, 1]) - coff)

    if not any(grid[start[0] + dr, start[1] + dc] for dr, dc in _CLOCKWISE8):
        return Contour(np.array([[start[0] + roff, start[1] + coff]], dtype=np.int64))

    def step(cur: tuple[int, int], backtrack: int) -> tuple[tuple[int, int], int]:
        """First foreground neighbor scanning clockwise after the backtrack cell."""
        for i in range(1, 9):
            idx = (backtrack + i) % 8
            nxt = (cur[0] + _CLOCKWISE8[idx][0], cur[1] + _CLOCKWISE8[idx][1])
            if grid[nxt]:
                prev_idx = (backtrack + i - 1) % 8
                prev_cell = (cur[0] + _CLOCKWISE8[prev_idx][0], cur[1] + _CLOCKWISE8[prev_idx][1])
                new_backtrack = _CLOCKWISE8.index((prev_cell[0] - nxt[0], prev_cell[1] - nxt[1]))
                return nxt, new_backtrack
        raise AssertionError("unreachable: caller ensures a foreground neighbor exists")

    # start is topmost-then-leftmost, so its west neighbor is background
    contour: list[tuple[int, int]] = []
    cur, backtrack = start, _CLOCKWISE8.index((0, -1))
    first_next: tuple[int, int] | None = None
    limit = 8 * component.area + 8
    while True:
        nxt, new_backtrack = step(cur, backtrack)
        if cur == start:
            if first_next is None:
                first_next = nxt
            elif nxt == first_next:
                break
        contour.append(cur)
        cur, backtrack = nxt, new_backtrack
        if len(contour) > limit:
            raise RuntimeError("contour trace failed to terminate")
    arr = np.array(contour, dtype=np.int64)
    arr[:, 0] += roff
    arr[:, 1] += coff
    return Contour(arr)


def perimeter(contour: Contour) -> float:
    """Chain length of the closed contour: 1 per axial step, sqrt(2) per diagonal.

    A single-pixel contour has perimeter 4 (unit-square convention).
    """
    pts = contour.points
    if len(pts) == 1:
        return 4.0
    closed = np.vstack([pts, pts[:1]])
    steps = np.abs(np.diff(closed, axis=0))
    diagonal = (steps[:, 0] == 1) & (steps[:, 1] == 1)
    return float(np.count_nonzero(~diagonal) + math.sqrt(2.0) * np.count_nonzero(diagonal))


def _cross(o, a, b) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull of integer points, counterclockwise.

    Collinear inputs collapse to their two extreme points (or one point).
    """
    pts = sorted({(int(p[0]), int(p[1])) for p in points})
    if len(pts) <= 2:
        return np.array(pts, dtype=np.int64)
    lower: list[tuple[int, int]] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[int, int]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:  # all points collinear
        return np.array([pts[0], pts[-1]], dtype=np.int64)
    return np.array(hull, dtype=np.int64)


def convex_hull_area(component: Component) -> int:
    """Number of pixel centers inside or on the convex hull of the component.

    Rasterized-hull counting (not polygon area), so a convex component has
    convex_area equal to its own pixel count.  All tests are exact integer
    cross products; no floating point is involved.
    """
    hull = convex_hull(component.pixels)
    if len(hull) == 1:
        return 1
    if len(hull) == 2:
        dr = abs(int(hull[1][0]) - int(hull[0][0]))
        dc = abs(int(hull[1][1]) - int(hull[0][1]))
        return math.gcd(dr, dc) + 1
    r0, c0, r1, c1 = component.bounds
    rr, cc = np.meshgrid(
        np.arange(r0, r1 + 1, dtype=np.int64),
        np.arange(c0, c1 + 1, dtype=np.int64),
        indexing="ij",
    )
    inside = np.ones(rr.shape, dtype=bool)
    n = len(hull)
    for i in range(n):
        ar, ac = int(hull[i][0]), int(hull[i][1])
        br, bc = int(hull[(i + 1) % n][0]), int(hull[(i + 1) % n][1])
        # hull is CCW (in (row, col) axes), interior has nonnegative cross
        cross = (br - ar) * (cc - ac) - (bc - ac) * (rr - ar)
        inside &= cross >= 0
    return int(inside.sum())


def _fill_grid(grid: np.ndarray) -> np.ndarray:
    """Foreground plus any background not 4-connected to the grid border."""
    h, w = grid.shape
    outside = np.zeros_like(grid, dtype=bool)
    queue = deque()
    for r in range(h):
        for c in (0, w - 1):
            if not grid[r, c] and not outside[r, c]:
                outside[r, c] = True
                queue.append((r, c))
    for c in range(w):
        for r in (0, h - 1):
            if not grid[r, c] and not outside[r, c]:
                outside[r, c] = True
                queue.append((r, c))
    while queue:
        r, c = queue.popleft()
        for dr, dc in _OFFSETS4:
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and not grid[nr, nc] and not outside[nr, nc]:
                outside[nr, nc] = True
                queue.append((nr, nc))
    return grid | ~outside


def fill_holes(target: BinaryMask | Component) -> int:
    """Pixel count after filling enclosed holes.

    A hole is background not 4-connected to the raster border through
    background.  For a Component the raster is its own bounding grid, so
    other components in the source mask do not block the border flood.
    """
    if isinstance(target, Component):
        grid, _ = target.to_grid()
    else:
        grid = target.pixels
    return int(_fill_grid(grid).sum())


@dataclass
class MomentSet:
    """Raw, central, and normalized image moments of one component.

    Conventions: ``raw[(p, q)]`` is the integer sum of col^p * row^q over
    pixel centers; ``central`` are about the centroid, computed exactly and
    rounded once.  ``normalized`` are eta_pq = mu_pq / m00^(1+(p+q)/2) with
    the unit-square +m00/12 correction applied to mu20 and mu02 (the same
    pixel model as the covariance), so Hu values of thin shapes stay
    consistent with their covariance ellipse.  ``covariance`` is the 2x2
    matrix in (row, col) axis order with +1/12 on both diagonal entries.
    """

    raw: dict[tuple[int, int], int]
    central: dict[tuple[int, int], float]
    normalized: dict[tuple[int, int], float]
    covariance: np.ndarray
    _central_exact: dict[tuple[int, int], Fraction] = field(repr=False, default_factory=dict)

    @property
    def m00(self) -> int:
        return self.raw[(0, 0)]

    @property
    def centroid(self) -> tuple[float, float]:
        """(row, col) centroid."""
        return self.raw[(0, 1)] / self.m00, self.raw[(1, 0)] / self.m00

    def eigenvalues(self) -> tuple[float, float]:
        """Covariance eigenvalues, descending; both strictly positive."""
        a = float(self.covariance[0, 0])
        c = float(self.covariance[1, 1])
        b = float(self.covariance[0, 1])
        half_trace = (a + c) / 2.0
        root = math.sqrt(((a - c) / 2.0) ** 2 + b * b)
        return half_trace + root, half_trace - root


def moments(component: Component) -> MomentSet:
    """All raw/central/normalized moments of order <= 3, plus the covariance.

    Raw moments accumulate as exact integers; central moments are derived
    through rational arithmetic, so symmetric shapes yield exactly zero odd
    moments and the naive per-pixel summation is matched exactly.
    """
    rows = component.pixels[:, 0]
    cols = component.pixels[:, 1]
    raw: dict[tuple[int, int], int] = {}
    col_pows = {p: cols.astype(np.int64) ** p for p in range(4)}
    row_pows = {q: rows.astype(np.int64) ** q for q in range(4)}
    for p in range(4):
        for q in range(4):
            if p + q <= 3:
                raw[(p, q)] = int(np.sum(col_pows[p] * row_pows[q], dtype=np.int64))
    m00 = raw[(0, 0)]
    cx = Fraction(raw[(1, 0)], m00)  # centroid col
    cy = Fraction(raw[(0, 1)], m00)  # centroid row
    central_exact: dict[tuple[int, int], Fraction] = {}
    for (p, q), _ in raw.items():
        acc = Fraction(0)
        for i in range(p + 1):
            for j in range(q + 1):
                acc += (
                    math.comb(p, i)
                    * math.comb(q, j)
                    * (-cx) ** (p - i)
                    * (-cy) ** (q - j)
                    * raw[(i, j)]
                )
        central_exact[(p, q)] = acc
    central = {pq: float(v) for pq, v in central_exact.items()}
    twelfth = Fraction(m00, 12)
    normalized: dict[tuple[int, int], float] = {}
    for (p, q), mu in central_exact.items():
        if p + q < 2:
            continue
        if (p, q) in ((2, 0), (0, 2)):
            mu = mu + twelfth
        normalized[(p, q)] = float(mu) / m00 ** (1 + (p + q) / 2)
    var_row = float(central_exact[(0, 2)] / m00 + Fraction(1, 12))
    var_col = float(central_exact[(2, 0)] / m00 + Fraction(1, 12))
    cov_rc = float(central_exact[(1, 1)] / m00)
    covariance = np.array([[var_row, cov_rc], [cov_rc, var_col]], dtype=np.float64)
    return MomentSet(
        raw=raw,
        central=central,
        normalized=normalized,
        covariance=covariance,
        _central_exact=central_exact,
    )


def hu_moments(m: MomentSet) -> tuple[float, ...]:
    """The seven Hu invariants from the normalized moments (raw, no log)."""
    e = m.normalized
    n20, n02, n11 = e[(2, 0)], e[(0, 2)], e[(1, 1)]
    n30, n03, n21, n12 = e[(3, 0)], e[(0, 3)], e[(2, 1)], e[(1, 2)]
    s1 = n30 + n12
    s2 = n21 + n03
    d1 = n30 - 3 * n12
    d2 = 3 * n21 - n03
    phi1 = n20 + n02
    phi2 = (n20 - n02) ** 2 + 4 * n11**2
    phi3 = d1**2 + d2**2
    phi4 = s1**2 + s2**2
    phi5 = d1 * s1 * (s1**2 - 3 * s2**2) + d2 * s2 * (3 * s1**2 - s2**2)
    phi6 = (n20 - n02) * (s1**2 - s2**2) + 4 * n11 * s1 * s2
    phi7 = d2 * s1 * (s1**2 - 3 * s2**2) - d1 * s2 * (3 * s1**2 - s2**2)
    return (phi1, phi2, phi3, phi4, phi5, phi6, phi7)


@dataclass
class FeatureVector:
    """The fixed-order 15-value morphological descriptor of one nodule."""

    area: int
    perimeter: float
    convex_area: int
    filled_area: int
    solidity: float
    form_factor: float
    eccentricity: float
    aspect_ratio: float
    hu1: float
    hu2: float
    hu3: float
    hu4: float
    hu5: float
    hu6: float
    hu7: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=np.float64)


def extract_features(mask: BinaryMask) -> FeatureVector:
    """Compute the 15-feature vector from the largest component of a mask.

    solidity = area / convex_area, form_factor = 4*pi*area / perimeter^2,
    eccentricity = sqrt(1 - l2/l1) and aspect_ratio = sqrt(l1/l2) from the
    corrected covariance eigenvalues (axis length is proportional to
    sqrt(lambda), so the ratio of axes is exactly sqrt(l1/l2)).
    """
    comps = connected_components(mask)
    if not comps:
        raise EmptyMaskError("cannot extract features from an empty mask")
    comp = max(comps, key=lambda c: c.area)
    if len(comps) > 1:
        discarded = sorted((c.area for c in comps if c is not comp), reverse=True)
        log.warning("mask has %d components; using largest (%d px), discarding sizes %s",
                    len(comps), comp.area, discarded)

    area = comp.area
    perim = perimeter(trace_contour(comp))
    convex_area = convex_hull_area(comp)
    filled_area = fill_holes(comp)
    mset = moments(comp)
    lam1, lam2 = mset.eigenvalues()
    hu = hu_moments(mset)
    return FeatureVector(
        area=area,
        perimeter=perim,
        convex_area=convex_area,
        filled_area=filled_area,
        solidity=area / convex_area,
        form_factor=4.0 * math.pi * area / perim**2,
        eccentricity=math.sqrt(max(0.0, 1.0 - lam2 / lam1)),
        aspect_ratio=math.sqrt(lam1 / lam2),
        hu1=hu[0], hu2=hu[1], hu3=hu[2], hu4=hu[3], hu5=hu[4], hu6=hu[5], hu7=hu[6],
    )


def write_features_csv(path, rows: list[tuple[str, FeatureVector]]) -> None:
    """Write the interchange CSV: sample_id followed by the 15 features in order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("sample_id",) + FEATURE_NAMES)
        for sample_id, fv in rows:
            out = [sample_id]
            for name in FEATURE_NAMES:
                value = getattr(fv, name)
                out.append(str(value) if isinstance(value, int) else repr(float(value)))
            writer.writerow(out)
