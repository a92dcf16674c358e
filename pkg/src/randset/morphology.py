"""Connected components, boundary pixels, and osculating-disc occupancy.

Foreground is 8-connected; a foreground pixel is a boundary pixel when at
least one of its 4-neighbours is background or outside the raster. The
occupancy ratio of a boundary pixel is the fraction of a pixel disc around
it that lands on foreground, with off-raster positions counting as
background while the denominator stays the full disc size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import BinaryRaster

__all__ = [
    "Component",
    "DiscMask",
    "connected_components",
    "disc_mask",
    "occupancy_ratio",
    "occupancy_counts",
]

_EIGHT = np.ones((3, 3), dtype=bool)
_FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True, eq=False)
class Component:
    """One 8-connected foreground region.

    ``pixels`` and ``boundary`` are (n, 2) integer arrays of (x, y)
    coordinates in row-major scan order (y, then x). Every boundary pixel
    has a background or off-raster 4-neighbour; every other pixel of the
    component has all four 4-neighbours inside the foreground.
    """

    pixels: np.ndarray
    boundary: np.ndarray
    bbox: tuple[int, int, int, int]  # (xmin, ymin, xmax, ymax) inclusive

    @property
    def area(self) -> int:
        return len(self.pixels)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary)

    def __repr__(self):
        return f"Component(area={self.area}, boundary={self.n_boundary}, bbox={self.bbox})"


@dataclass(frozen=True, eq=False)
class DiscMask:
    """Integer offsets (dx, dy) with dx^2 + dy^2 <= radius^2."""

    radius: int
    offsets: np.ndarray  # (size, 2) columns (dx, dy)

    @property
    def size(self) -> int:
        return len(self.offsets)

    def footprint(self) -> np.ndarray:
        """(2r+1, 2r+1) boolean stencil of the disc, center at (r, r)."""
        r = self.radius
        fp = np.zeros((2 * r + 1, 2 * r + 1), dtype=bool)
        fp[self.offsets[:, 1] + r, self.offsets[:, 0] + r] = True
        return fp


def disc_mask(r: int) -> DiscMask:
    if r < 1:
        raise ValueError(f"disc radius must be >= 1, got {r}")
    span = np.arange(-r, r + 1)
    dx, dy = np.meshgrid(span, span, indexing="xy")
    keep = dx * dx + dy * dy <= r * r
    offsets = np.column_stack([dx[keep], dy[keep]]).astype(np.int64)
    return DiscMask(radius=int(r), offsets=offsets)


def connected_components(raster: BinaryRaster) -> list[Component]:
    """Split the foreground into 8-connected components.

    Output order is deterministic: components sorted by their smallest
    pixel in row-major order. Empty foreground gives an empty list.
    """
    bits = raster.bits
    labels, n = ndimage.label(bits, structure=_EIGHT)
    if n == 0:
        return []
    interior = ndimage.binary_erosion(bits, structure=_FOUR, border_value=0)
    on_boundary = bits & ~interior

    comps = []
    for lab, sl in enumerate(ndimage.find_objects(labels), start=1):
        mask = labels[sl] == lab
        ys, xs = np.nonzero(mask)
        y0, x0 = sl[0].start, sl[1].start
        pixels = np.column_stack([xs + x0, ys + y0])
        bys, bxs = np.nonzero(mask & on_boundary[sl])
        boundary = np.column_stack([bxs + x0, bys + y0])
        bbox = (int(xs.min() + x0), int(ys.min() + y0), int(xs.max() + x0), int(ys.max() + y0))
        comps.append(Component(pixels=pixels, boundary=boundary, bbox=bbox))
    comps.sort(key=lambda c: (int(c.pixels[0, 1]), int(c.pixels[0, 0])))
    return comps


def occupancy_counts(raster: BinaryRaster, mask: DiscMask) -> np.ndarray:
    """Foreground hits of the disc around every pixel, as an int grid.

    Positions outside the raster count as background. Entry (y, x) is the
    number of disc offsets from (x, y) landing on foreground.
    """
    fp = mask.footprint()
    return ndimage.convolve(raster.bits.astype(np.int32), fp.astype(np.int32), mode="constant", cval=0)


def occupancy_ratio(raster: BinaryRaster, z: tuple[int, int], mask: DiscMask) -> float:
    """Occupied fraction of the disc centred at foreground pixel z = (x, y)."""
    x, y = int(z[0]), int(z[1])
    if not (0 <= x < raster.width and 0 <= y < raster.height) or not raster.bits[y, x]:
        raise ValueError(f"pixel ({x}, {y}) is not a foreground pixel")
    px = x + mask.offsets[:, 0]
    py = y + mask.offsets[:, 1]
    inside = (px >= 0) & (px < raster.width) & (py >= 0) & (py < raster.height)
    hits = int(raster.bits[py[inside], px[inside]].sum())
    return hits / mask.size
