"""Per-component shape features of a realisation.

Each connected component is summarised by two descriptors:

* the curvature histogram: occupancy ratios of the disc around every
  boundary pixel, binned into l = disc size bins at u = 1/l, ..., 1, each
  bin [u - 1/l, u) except the last which is closed at 1;
* the perimeter/area ratio: boundary pixel count over total pixel count.

Occupancy is measured against the whole raster, so nearby components
contribute to each other's boundary occupancy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .morphology import Component, DiscMask, connected_components, disc_mask, occupancy_counts
from .raster import BinaryRaster

__all__ = [
    "ComponentFeatures",
    "RealisationFeatures",
    "FeatureFileError",
    "curvature_histogram",
    "pa_ratio",
    "extract_features",
    "save_features",
    "load_features",
]

SCHEMA_VERSION = 1


class FeatureFileError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ComponentFeatures:
    """Curvature histogram plus scalar perimeter/area ratio of one component.

    ``curvature_hist`` has one entry per histogram bin (l = disc size) and
    sums to 1; ``pa`` equals ``n_boundary / area``.
    """

    curvature_hist: np.ndarray
    pa: float
    n_boundary: int
    area: int

    def __post_init__(self):
        h = np.asarray(self.curvature_hist, dtype=float)
        h.setflags(write=False)
        object.__setattr__(self, "curvature_hist", h)


@dataclass(frozen=True, eq=False)
class RealisationFeatures:
    """Features of every component of one realisation, in component order."""

    components: tuple[ComponentFeatures, ...]
    radius: int
    source_id: str
    class_label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("realisation must have at least one component")
        lengths = {len(c.curvature_hist) for c in self.components}
        if len(lengths) != 1:
            raise ValueError(f"components disagree on histogram length: {sorted(lengths)}")

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def hist_length(self) -> int:
        return len(self.components[0].curvature_hist)

    def pa_values(self) -> np.ndarray:
        return np.array([c.pa for c in self.components])

    def hist_matrix(self) -> np.ndarray:
        return np.stack([c.curvature_hist for c in self.components])


def _bin_counts(hit_counts: np.ndarray, l: int) -> np.ndarray:
    # Occupancy is k/l for integer k in [1, l]; bin j (1-based) covers
    # [(j-1)/l, j/l), so k lands in bin k+1, except k in {l-1, l} which
    # share the closed last bin. Integer arithmetic avoids edge rounding.
    bins = np.minimum(hit_counts + 1, l)
    return np.bincount(bins - 1, minlength=l).astype(np.int64)


def curvature_histogram(raster: BinaryRaster, comp: Component, mask: DiscMask) -> np.ndarray:
    """Histogram of boundary occupancy ratios of one component, summing to 1."""
    counts = occupancy_counts(raster, mask)
    k = counts[comp.boundary[:, 1], comp.boundary[:, 0]]
    return _bin_counts(k, mask.size) / comp.n_boundary


def pa_ratio(comp: Component) -> float:
    """Boundary pixel count divided by total pixel count."""
    return comp.n_boundary / comp.area


def _component_overflows(comp: Component, r: int, width: int, height: int) -> bool:
    b = comp.boundary
    return bool(
        (b[:, 0] < r).any()
        or (b[:, 0] >= width - r).any()
        or (b[:, 1] < r).any()
        or (b[:, 1] >= height - r).any()
    )


def extract_features(
    raster: BinaryRaster,
    r: int,
    source_id: str = "",
    class_label: str | None = None,
    drop_border_components: bool = False,
) -> RealisationFeatures:
    """Compute features of every connected component of a raster.

    ``drop_border_components`` excludes components whose boundary discs
    overflow the observation window (edge-effect mitigation).
    """
    mask = disc_mask(r)
    comps = connected_components(raster)
    if drop_border_components:
        comps = [c for c in comps if not _component_overflows(c, r, raster.width, raster.height)]
    if not comps:
        raise ValueError(f"no components in realisation {source_id!r}")
    counts = occupancy_counts(raster, mask)
    feats = []
    for comp in comps:
        k = counts[comp.boundary[:, 1], comp.boundary[:, 0]]
        hist = _bin_counts(k, mask.size) / comp.n_boundary
        feats.append(
            ComponentFeatures(
                curvature_hist=hist,
                pa=pa_ratio(comp),
                n_boundary=comp.n_boundary,
                area=comp.area,
            )
        )
    return RealisationFeatures(
        components=tuple(feats), radius=int(r), source_id=source_id, class_label=class_label
    )


def _expected_hist_length(r: int) -> int:
    return disc_mask(r).size


def save_features(path, realisations: list[RealisationFeatures]) -> None:
    """Write realisation features as schema-versioned JSON."""
    recs = []
    for rf in realisations:
        recs.append(
            {
                "r": rf.radius,
                "source_id": rf.source_id,
                "class_label": rf.class_label,
                "components": [
                    {
                        "t": [float(v) for v in c.curvature_hist],
                        "pa": float(c.pa),
                        "n_boundary": int(c.n_boundary),
                        "area": int(c.area),
                    }
                    for c in rf.components
                ],
            }
        )
    doc = {"schema": SCHEMA_VERSION, "realisations": recs}
    Path(path).write_text(json.dumps(doc, indent=1))


def load_features(path) -> list[RealisationFeatures]:
    """Load a feature file, validating schema and per-record consistency."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FeatureFileError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA_VERSION:
        raise FeatureFileError(
            f"schema mismatch: expected {SCHEMA_VERSION}, got {doc.get('schema')!r}"
        )
    out = []
    for idx, rec in enumerate(doc.get("realisations", [])):
        try:
            r = int(rec["r"])
            expected_l = _expected_hist_length(r)
            comps = []
            for c in rec["components"]:
                t = np.array(c["t"], dtype=float)
                if not np.all(np.isfinite(t)):
                    raise FeatureFileError(f"record {idx}: non-numeric histogram entry")
                if len(t) != expected_l:
                    raise FeatureFileError(
                        f"record {idx}: histogram length {len(t)} != {expected_l} for r={r}"
                    )
                comps.append(
                    ComponentFeatures(
                        curvature_hist=t,
                        pa=float(c["pa"]),
                        n_boundary=int(c["n_boundary"]),
                        area=int(c["area"]),
                    )
                )
            out.append(
                RealisationFeatures(
                    components=tuple(comps),
                    radius=r,
                    source_id=str(rec["source_id"]),
                    class_label=rec.get("class_label"),
                )
            )
        except FeatureFileError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise FeatureFileError(f"record {idx}: {exc}") from exc
    return out
