"""Seeded disc-process generators for three germ-grain model classes.

These are documented proxies: a Boolean model (Poisson germs), a Matérn
cluster construction (Poisson parents with uniform offspring discs), and a
Matérn type-II hard-core thinning (repulsive). Germs are sampled on the
window extended by the maximum disc radius so edge intensity is unbiased,
and configurations rasterize by the pixel-center inclusion rule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .raster import BinaryRaster

__all__ = [
    "ClusterParams",
    "HardCoreParams",
    "ModelSpec",
    "DiscConfiguration",
    "simulate",
    "rasterize",
    "load_model_spec",
    "load_model_file",
    "default_model_spec",
    "DEFAULT_MODEL_LABELS",
]

_KINDS = ("boolean", "cluster", "hardcore")


@dataclass(frozen=True)
class ClusterParams:
    parent_intensity: float  # parents per pixel^2
    mean_offspring: float
    cluster_radius: float


@dataclass(frozen=True)
class HardCoreParams:
    proposal_intensity: float  # proposals per pixel^2
    hard_core_distance: float


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of one disc-process class."""

    kind: str
    window: tuple[int, int]
    disc_radius: float | tuple[float, float]
    intensity: float | None = None  # boolean germs per pixel^2
    cluster: ClusterParams | None = None
    hardcore: HardCoreParams | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}, expected one of {_KINDS}")
        w, h = self.window
        if w < 32 or h < 32:
            raise ValueError(f"window must be at least 32x32, got {w}x{h}")
        lo, hi = self.radius_range()
        if lo <= 0 or hi < lo:
            raise ValueError(f"bad disc radius {self.disc_radius!r}")
        if self.kind == "boolean":
            if self.intensity is None or self.intensity < 0:
                raise ValueError("boolean model needs a nonnegative intensity")
        elif self.kind == "cluster":
            c = self.cluster
            if c is None or c.parent_intensity <= 0 or c.mean_offspring <= 0 or c.cluster_radius <= 0:
                raise ValueError("cluster model needs positive parent_intensity, mean_offspring, cluster_radius")
        else:
            hc = self.hardcore
            if hc is None or hc.proposal_intensity <= 0 or hc.hard_core_distance < 0:
                raise ValueError("hardcore model needs positive proposal_intensity and nonnegative hard_core_distance")

    def radius_range(self) -> tuple[float, float]:
        if isinstance(self.disc_radius, (tuple, list)):
            lo, hi = self.disc_radius
            return float(lo), float(hi)
        return float(self.disc_radius), float(self.disc_radius)


@dataclass(frozen=True, eq=False)
class DiscConfiguration:
    """Discs as an (n, 3) array of columns (center_x, center_y, radius)."""

    discs: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.discs, dtype=float).reshape(-1, 3)
        d.setflags(write=False)
        object.__setattr__(self, "discs", d)

    def __len__(self):
        return len(self.discs)


def _sample_radii(spec: ModelSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = spec.radius_range()
    if lo == hi:
        return np.full(n, lo)
    return rng.uniform(lo, hi, size=n)


def _uniform_centers(n, w, h, margin, rng):
    xs = rng.uniform(-margin, w + margin, size=n)
    ys = rng.uniform(-margin, h + margin, size=n)
    return xs, ys


def simulate(spec: ModelSpec, seed: int) -> DiscConfiguration:
    """Draw one seeded disc configuration from the model."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    w, h = spec.window
    margin = spec.radius_range()[1]
    ext_area = (w + 2 * margin) * (h + 2 * margin)

    if spec.kind == "boolean":
        n = rng.poisson(spec.intensity * ext_area)
        xs, ys = _uniform_centers(n, w, h, margin, rng)
    elif spec.kind == "cluster":
        c = spec.cluster
        # Parents live on a further extension so offspring reach the window.
        pm = margin + c.cluster_radius
        n_parents = rng.poisson(c.parent_intensity * (w + 2 * pm) * (h + 2 * pm))
        pxs, pys = _uniform_centers(n_parents, w, h, pm, rng)
        counts = rng.poisson(c.mean_offspring, size=n_parents)
        total = int(counts.sum())
        # Uniform draws in each parent's disc via rejection-free polar sampling.
        theta = rng.uniform(0.0, 2.0 * np.pi, size=total)
        rad = c.cluster_radius * np.sqrt(rng.uniform(0.0, 1.0, size=total))
        xs = np.repeat(pxs, counts) + rad * np.cos(theta)
        ys = np.repeat(pys, counts) + rad * np.sin(theta)
    else:
        hc = spec.hardcore
        n = rng.poisson(hc.proposal_intensity * ext_area)
        xs, ys = _uniform_centers(n, w, h, margin, rng)
        marks = rng.uniform(0.0, 1.0, size=n)
        keep = _matern_ii_keep(xs, ys, marks, hc.hard_core_distance)
        xs, ys = xs[keep], ys[keep]

    radii = _sample_radii(spec, len(xs), rng)
    return DiscConfiguration(discs=np.column_stack([xs, ys, radii]))


def _matern_ii_keep(xs, ys, marks, hcd: float) -> np.ndarray:
    """Keep a point iff no earlier-marked proposal lies strictly within hcd.

    Every earlier-marked proposal inhibits, whether or not it survives
    itself (type-II thinning).
    """
    n = len(xs)
    if hcd <= 0 or n == 0:
        return np.ones(n, dtype=bool)
    order = np.argsort(marks, kind="stable")
    keep = np.ones(n, dtype=bool)
    hcd2 = hcd * hcd
    for pos, i in enumerate(order):
        later = order[pos + 1 :]
        d2 = (xs[later] - xs[i]) ** 2 + (ys[later] - ys[i]) ** 2
        keep[later[d2 < hcd2]] = False
    return keep


def rasterize(config: DiscConfiguration, window: tuple[int, int]) -> BinaryRaster:
    """Pixel (x, y) is foreground iff its center lies in some disc."""
    w, h = int(window[0]), int(window[1])
    bits = np.zeros((h, w), dtype=bool)
    for cx, cy, r in config.discs:
        x0 = max(0, int(np.floor(cx - r - 0.5)))
        x1 = min(w - 1, int(np.ceil(cx + r - 0.5)))
        y0 = max(0, int(np.floor(cy - r - 0.5)))
        y1 = min(h - 1, int(np.ceil(cy + r - 0.5)))
        if x0 > x1 or y0 > y1:
            continue
        px = np.arange(x0, x1 + 1) + 0.5
        py = np.arange(y0, y1 + 1) + 0.5
        inside = (px[None, :] - cx) ** 2 + (py[:, None] - cy) ** 2 <= r * r
        bits[y0 : y1 + 1, x0 : x1 + 1] |= inside
    return BinaryRaster.from_array(bits)


def _spec_from_dict(doc: dict) -> ModelSpec:
    kind = doc["kind"]
    kwargs = dict(
        kind=kind,
        window=tuple(doc["window"]),
        disc_radius=tuple(doc["disc_radius"]) if isinstance(doc["disc_radius"], list) else float(doc["disc_radius"]),
    )
    if kind == "boolean":
        kwargs["intensity"] = float(doc["intensity"])
    elif kind == "cluster":
        kwargs["cluster"] = ClusterParams(**doc["cluster"])
    else:
        kwargs["hardcore"] = HardCoreParams(**doc["hardcore"])
    return ModelSpec(**kwargs)


def load_model_spec(doc: dict) -> ModelSpec:
    return _spec_from_dict(doc)


def load_model_file(path, label: str | None = None) -> dict[str, ModelSpec]:
    """Load model specs from JSON: either one spec or a {models: {...}} map.

    Returns a label -> spec mapping; a single-spec file uses its "label"
    key or its kind as the label. ``label`` filters the result.
    """
    doc = json.loads(Path(path).read_text())
    if "models" in doc:
        specs = {name: _spec_from_dict(d) for name, d in doc["models"].items()}
    else:
        specs = {doc.get("label", doc["kind"]): _spec_from_dict(doc)}
    if label is not None:
        if label not in specs:
            raise KeyError(f"model {label!r} not in file (has {sorted(specs)})")
        return {label: specs[label]}
    return specs


def _default_doc() -> dict:
    text = resources.files("randset.data").joinpath("default_models.json").read_text()
    return json.loads(text)


DEFAULT_MODEL_LABELS = ("boolean", "cluster", "hardcore")


def default_model_spec(label: str) -> ModelSpec:
    """One of the frozen desk-scale model parameterizations."""
    doc = _default_doc()
    if label not in doc["models"]:
        raise KeyError(f"no default model {label!r} (have {sorted(doc['models'])})")
    return _spec_from_dict(doc["models"][label])
