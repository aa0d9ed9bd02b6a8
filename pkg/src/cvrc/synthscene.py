"""Synthetic DEM, interferogram and ground-truth generator.

Stands in for real acquisitions: a flat plain carrying a large cone, a
rough secondary mountain built from fractal value noise, and a lake disk.
The interferogram encodes elevation as wrapped phase (one fringe per
``height_ambiguity`` meters), attenuates amplitude with slope, randomizes
the summit scree, and mixes in circular complex noise controlled by a
coherence parameter.  Ground-truth aspect labels come from adjacent-pixel
elevation differences thresholded between the slope and flat teacher areas.

Aspect convention used consistently across ground truth, teacher areas and
baselines: a pixel is labeled by its ascent direction, so elevation rising
eastward (positive east-west difference) gives the East class, rising
southward (downward in row order) gives South.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import raster
from .raster import (
    CLASS_EAST,
    CLASS_FLAT,
    CLASS_NORTH,
    CLASS_SOUTH,
    CLASS_WEST,
    EAST_WEST,
    MASKED,
    NORTH_SOUTH,
    Rect,
)

# Sub-stream tags so every consumer of the scene seed is independent.
_STREAM_NOISE_FIELD = 11
_STREAM_SCREE = 23
_STREAM_SPECKLE = 29

SLOPE_AMP_SCALE_DEG = 20.0  # amplitude = 1 / (1 + slope_deg / this)
SCREE_AMPLITUDE = 0.05


@dataclass(frozen=True)
class SceneSpec:
    """Geometry and radiometry of one synthetic scene.

    ``cone`` is (row, col, base_radius_px, peak_height_m); ``rough_mountain``
    is (row, col, radius_px, height_m, octaves); ``lake`` is
    (row, col, radius_px).  Pixel spacing follows the 30 m (range, columns)
    by 50 m (azimuth, rows) grid of the source data.
    """

    width: int
    height: int
    flat_height: float = 120.0
    range_spacing: float = 30.0
    azimuth_spacing: float = 50.0
    cone: tuple | None = None
    rough_mountain: tuple | None = None
    lake: tuple | None = None
    height_ambiguity: float = 80.0
    coherence: float = 1.0
    summit_scree_radius: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("scene dimensions must be >= 1")
        if self.range_spacing <= 0 or self.azimuth_spacing <= 0:
            raise ValueError("pixel spacing must be positive")
        if self.height_ambiguity <= 0:
            raise ValueError("height ambiguity must be positive")
        if not 0.0 <= self.coherence <= 1.0:
            raise ValueError("coherence must lie in [0, 1]")


@dataclass(frozen=True)
class DEM:
    """Elevation grid in meters with its pixel spacing."""

    elevation: np.ndarray
    range_spacing: float = 30.0
    azimuth_spacing: float = 50.0

    def __post_init__(self):
        if self.elevation.ndim != 2:
            raise ValueError("elevation must be 2-D")
        if not np.all(np.isfinite(self.elevation)):
            raise ValueError("elevation contains non-finite values")
        if self.range_spacing <= 0 or self.azimuth_spacing <= 0:
            raise ValueError("pixel spacing must be positive")


@dataclass(frozen=True)
class GroundTruth:
    aspect: np.ndarray  # uint8 class labels, MASKED on water
    slope_ew: np.ndarray  # signed degrees, positive ascending eastward
    water_mask: np.ndarray  # bool
    threshold: float  # elevation-difference flat/slope split (m)


@dataclass(frozen=True)
class SyntheticScene:
    """Everything one experiment needs, generated from a single spec."""

    spec: SceneSpec
    dem: DEM
    interferogram: np.ndarray
    diff_ew: np.ndarray
    diff_ns: np.ndarray
    truth: GroundTruth
    teacher_areas: list
    regions: dict


def _radial(spec: SceneSpec, row: float, col: float) -> np.ndarray:
    rr = np.arange(spec.height, dtype=np.float64)[:, None] - row
    cc = np.arange(spec.width, dtype=np.float64)[None, :] - col
    return np.hypot(rr, cc)


def _value_noise(height: int, width: int, cells: int, rng) -> np.ndarray:
    """Bilinear value noise on a cells x cells lattice, in [-1, 1]."""
    lattice = rng.uniform(-1.0, 1.0, size=(cells + 1, cells + 1))
    ry = np.linspace(0.0, cells, height)
    cx = np.linspace(0.0, cells, width)
    iy = np.minimum(ry.astype(np.int64), cells - 1)
    ix = np.minimum(cx.astype(np.int64), cells - 1)
    fy = (ry - iy)[:, None]
    fx = (cx - ix)[None, :]
    a = lattice[np.ix_(iy, ix)]
    b = lattice[np.ix_(iy, ix + 1)]
    c = lattice[np.ix_(iy + 1, ix)]
    d = lattice[np.ix_(iy + 1, ix + 1)]
    return a * (1 - fy) * (1 - fx) + b * (1 - fy) * fx + c * fy * (1 - fx) + d * fy * fx


def _fractal_noise(height: int, width: int, octaves: int, rng) -> np.ndarray:
    total = np.zeros((height, width))
    amp = 1.0
    norm = 0.0
    for octave in range(octaves):
        cells = 4 * 2**octave
        total += amp * _value_noise(height, width, cells, rng)
        norm += amp
        amp *= 0.5
    return total / norm


def generate_dem(spec: SceneSpec) -> DEM:
    """Flat plane + linear-flank cone + fractal rough mountain + lake disk."""
    elev = np.full((spec.height, spec.width), float(spec.flat_height))

    if spec.cone is not None:
        row, col, radius, peak = spec.cone
        if radius <= 0 or peak <= 0:
            raise ValueError("cone radius and peak height must be positive")
        r = _radial(spec, row, col)
        elev += peak * np.clip(1.0 - r / radius, 0.0, None)

    if spec.rough_mountain is not None:
        row, col, radius, height_m, octaves = spec.rough_mountain
        if radius <= 0 or height_m <= 0 or int(octaves) < 1:
            raise ValueError("rough mountain needs positive radius, height, octaves")
        r = _radial(spec, row, col)
        dome = np.clip(1.0 - (r / radius) ** 2, 0.0, None)
        rng = np.random.default_rng([spec.seed, _STREAM_NOISE_FIELD])
        bumps = _fractal_noise(spec.height, spec.width, int(octaves), rng)
        elev += height_m * dome * np.clip(1.0 + 0.6 * bumps, 0.0, None)

    if spec.lake is not None:
        lrow, lcol, lradius = spec.lake
        if lradius <= 0:
            raise ValueError("lake radius must be positive")
        if spec.cone is not None:
            crow, ccol = spec.cone[0], spec.cone[1]
            if np.hypot(crow - lrow, ccol - lcol) <= lradius:
                raise ValueError("ill-posed scene: lake disk covers the cone peak")
        disk = _radial(spec, lrow, lcol) <= lradius
        if np.any(disk):
            elev[disk] = elev[disk].min()  # flat water surface

    return DEM(elev, spec.range_spacing, spec.azimuth_spacing)


def water_mask(spec: SceneSpec) -> np.ndarray:
    if spec.lake is None:
        return np.zeros((spec.height, spec.width), dtype=bool)
    lrow, lcol, lradius = spec.lake
    return _radial(spec, lrow, lcol) <= lradius


def _wrap_phase(raw: np.ndarray) -> np.ndarray:
    """Wrap to the principal range (-pi, pi]."""
    phi = np.mod(raw + np.pi, 2.0 * np.pi) - np.pi
    phi[phi == -np.pi] = np.pi
    return phi


def dem_to_interferogram(dem: DEM, spec: SceneSpec) -> np.ndarray:
    """Phase from wrapped elevation, slope-attenuated amplitude, noise mix.

    phase = wrap(2 pi h / height_ambiguity); amplitude falls off with slope
    magnitude; inside the summit scree radius the amplitude drops to 0.05
    with uniformly random phase.  The clean signal s is then mixed with
    circular complex Gaussian noise n of unit power:
    z = coherence * s + sqrt(1 - coherence^2) * n, so coherence 1 returns
    the clean signal exactly.
    """
    elev = dem.elevation
    phase = _wrap_phase(2.0 * np.pi * elev / spec.height_ambiguity)

    grad_ns, grad_ew = np.gradient(elev, dem.azimuth_spacing, dem.range_spacing)
    slope_deg = np.degrees(np.arctan(np.hypot(grad_ew, grad_ns)))
    amplitude = 1.0 / (1.0 + slope_deg / SLOPE_AMP_SCALE_DEG)

    if spec.cone is not None and spec.summit_scree_radius > 0:
        scree = _radial(spec, spec.cone[0], spec.cone[1]) <= spec.summit_scree_radius
        if np.any(scree):
            rng = np.random.default_rng([spec.seed, _STREAM_SCREE])
            amplitude = amplitude.copy()
            amplitude[scree] = SCREE_AMPLITUDE
            phase = phase.copy()
            phase[scree] = rng.uniform(-np.pi, np.pi, size=int(scree.sum()))

    signal = amplitude * np.exp(1j * phase)
    gamma = float(spec.coherence)
    rng = np.random.default_rng([spec.seed, _STREAM_SPECKLE])
    shape = signal.shape
    noise = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)
    return gamma * signal + np.sqrt(1.0 - gamma * gamma) * noise


def _adjacent_differences(elev: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dew = np.diff(elev, axis=1)
    dew = np.concatenate([dew, dew[:, -1:]], axis=1)
    dns = np.diff(elev, axis=0)
    dns = np.concatenate([dns, dns[-1:, :]], axis=0)
    return dew, dns


def ground_truth_aspect(
    dem: DEM,
    teacher_areas,
    water: np.ndarray | None = None,
    threshold: float | None = None,
) -> tuple[np.ndarray, float]:
    """Label every pixel from adjacent elevation differences.

    The flat/slope threshold is the midpoint between the mean per-pixel
    dominant difference magnitude over the four slope teacher areas and over
    the flat teacher area; a scene whose slope areas are no steeper than its
    flat area is rejected as degenerate.  Pass ``threshold`` to skip the
    estimate and label with a known split (e.g. uniform test terrain).  A
    pixel below the threshold in both directions is Flat; otherwise the
    dominant direction's sign picks the class (east-west wins ties).  Water
    pixels come back MASKED.
    """
    elev = dem.elevation
    dew, dns = _adjacent_differences(elev)
    dominant = np.maximum(np.abs(dew), np.abs(dns))

    if threshold is None:
        by_class = {int(label): Rect(*rect) for label, rect in teacher_areas}
        missing = [c for c in range(raster.N_CLASSES) if c not in by_class]
        if missing:
            raise ValueError(
                f"teacher areas must cover all five classes; missing {missing}"
            )
        slope_vals = np.concatenate(
            [dominant[by_class[c].slices()].ravel() for c in
             (CLASS_NORTH, CLASS_EAST, CLASS_SOUTH, CLASS_WEST)]
        )
        flat_vals = dominant[by_class[CLASS_FLAT].slices()].ravel()
        mean_slope = float(slope_vals.mean())
        mean_flat = float(flat_vals.mean())
        if mean_slope <= mean_flat:
            raise ValueError(
                "degenerate threshold: slope-area mean difference "
                f"{mean_slope:.6g} <= flat-area mean {mean_flat:.6g}"
            )
        tau = 0.5 * (mean_slope + mean_flat)
    else:
        tau = float(threshold)
        if tau <= 0.0:
            raise ValueError("explicit threshold must be positive")

    labels = np.full(elev.shape, CLASS_FLAT, dtype=np.uint8)
    sloped = dominant >= tau
    ew_wins = np.abs(dew) >= np.abs(dns)
    labels[sloped & ew_wins & (dew > 0)] = CLASS_EAST
    labels[sloped & ew_wins & (dew <= 0)] = CLASS_WEST
    labels[sloped & ~ew_wins & (dns > 0)] = CLASS_SOUTH
    labels[sloped & ~ew_wins & (dns <= 0)] = CLASS_NORTH
    if water is not None:
        labels[water] = MASKED
    return labels, tau


def ground_truth_slope(dem: DEM) -> np.ndarray:
    """Signed east-west slope angle in degrees, positive ascending eastward."""
    if dem.elevation.shape[1] < 2:
        raise ValueError("slope needs width >= 2")
    dew, _ = _adjacent_differences(dem.elevation)
    return np.degrees(np.arctan(dew / dem.range_spacing))


# -- reference scene layout ---------------------------------------------------


def reference_scene(
    width: int = 400,
    height: int = 400,
    coherence: float = 0.7,
    seed: int = 1,
) -> SceneSpec:
    """Cone + rough mountain + lake layout scaled to the raster size."""
    m = min(width, height)
    cone_radius = round(0.30 * m)
    return SceneSpec(
        width=width,
        height=height,
        cone=(round(0.375 * height), round(0.375 * width), cone_radius,
              round(0.36 * cone_radius * 30.0)),
        rough_mountain=(round(0.75 * height), round(0.75 * width),
                        round(0.19 * m), round(10.5 * 0.19 * m), 4),
        lake=(round(0.20 * height), round(0.825 * width), round(0.0875 * m)),
        coherence=coherence,
        summit_scree_radius=max(2.0, 0.015 * m),
        seed=seed,
    )


def default_teacher_areas(spec: SceneSpec) -> list[tuple[int, Rect]]:
    """One labeled rectangle per class on the cone flanks plus a flat patch.

    Ascent-direction convention: the East area sits on the west flank (going
    east ascends), the South area on the north flank, and so on.
    """
    if spec.cone is None:
        raise ValueError("default teacher areas need a cone in the scene")
    crow, ccol = int(spec.cone[0]), int(spec.cone[1])
    m = min(spec.width, spec.height)
    size = round(0.15 * m)
    dist = round(0.1625 * m)
    half = size // 2

    def centered(row, col):
        return Rect(int(row - half), int(col - half), size, size)

    return [
        (CLASS_EAST, centered(crow, ccol - dist)),   # west flank ascends east
        (CLASS_WEST, centered(crow, ccol + dist)),   # east flank ascends west
        (CLASS_SOUTH, centered(crow - dist, ccol)),  # north flank ascends south
        (CLASS_NORTH, centered(crow + dist, ccol)),  # south flank ascends north
        (CLASS_FLAT, Rect(round(0.80 * spec.height), round(0.075 * spec.width),
                          size, size)),
    ]


def default_regions(spec: SceneSpec) -> dict[str, Rect]:
    """Evaluation rectangles: flat plain, lake surroundings, mountain, ridge."""
    h, w = spec.height, spec.width
    regions = {
        "flat": Rect(round(0.75 * h), round(0.04 * w), round(0.22 * h), round(0.42 * w)),
        "mountain": Rect(round(0.55 * h), round(0.55 * w), round(0.40 * h), round(0.40 * w)),
        "ridge": Rect(round(0.675 * h), round(0.60 * w), round(0.125 * h), round(0.125 * w)),
    }
    if spec.lake is not None:
        lrow, lcol, lradius = spec.lake
        pad = round(1.4 * lradius)
        top = max(0, int(lrow - pad))
        left = max(0, int(lcol - pad))
        regions["lake"] = Rect(top, left,
                               min(2 * pad, h - top), min(2 * pad, w - left))
    return regions


def build_scene(spec: SceneSpec, teacher_areas=None, regions=None) -> SyntheticScene:
    """Generate the DEM, interferogram, differences and ground truth."""
    dem = generate_dem(spec)
    interferogram = dem_to_interferogram(dem, spec)
    diff_ew = raster.phase_difference(interferogram, EAST_WEST)
    diff_ns = raster.phase_difference(interferogram, NORTH_SOUTH)
    if teacher_areas is None:
        teacher_areas = default_teacher_areas(spec)
    if regions is None:
        regions = default_regions(spec)
    water = water_mask(spec)
    aspect, tau = ground_truth_aspect(dem, teacher_areas, water)
    truth = GroundTruth(
        aspect=aspect,
        slope_ew=ground_truth_slope(dem),
        water_mask=water,
        threshold=tau,
    )
    return SyntheticScene(
        spec=spec,
        dem=dem,
        interferogram=interferogram,
        diff_ew=diff_ew,
        diff_ns=diff_ns,
        truth=truth,
        teacher_areas=list(teacher_areas),
        regions=dict(regions),
    )


# -- file formats -------------------------------------------------------------

_DEM_MAGIC = b"DEM1"
_GRD_MAGIC = b"GRD1"


def save_dem(path, dem: DEM) -> None:
    """DEM1: magic, u32 width/height, f32 spacing pair, f32 elevations."""
    h, w = dem.elevation.shape
    with open(path, "wb") as fh:
        fh.write(_DEM_MAGIC)
        fh.write(struct.pack("<II", w, h))
        fh.write(struct.pack("<ff", dem.range_spacing, dem.azimuth_spacing))
        fh.write(np.ascontiguousarray(dem.elevation, dtype="<f4").tobytes())


def load_dem(path) -> DEM:
    raw = Path(path).read_bytes()
    if raw[:4] != _DEM_MAGIC:
        raise ValueError(f"{path}: not a DEM1 file")
    w, h = struct.unpack_from("<II", raw, 4)
    rng_sp, azi_sp = struct.unpack_from("<ff", raw, 12)
    need = 20 + 4 * w * h
    if len(raw) != need:
        raise ValueError(f"{path}: truncated DEM ({len(raw)} != {need})")
    elev = np.frombuffer(raw, dtype="<f4", count=w * h, offset=20)
    return DEM(elev.reshape(h, w).astype(np.float64), float(rng_sp), float(azi_sp))


def save_grid(path, grid) -> None:
    """GRD1: magic, u32 width/height, f32 values row-major (slope truth etc.)."""
    arr = np.asarray(grid, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("grid must be 2-D")
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(_GRD_MAGIC)
        fh.write(struct.pack("<II", w, h))
        fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_grid(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != _GRD_MAGIC:
        raise ValueError(f"{path}: not a GRD1 file")
    w, h = struct.unpack_from("<II", raw, 4)
    need = 12 + 4 * w * h
    if len(raw) != need:
        raise ValueError(f"{path}: truncated grid ({len(raw)} != {need})")
    vals = np.frombuffer(raw, dtype="<f4", count=w * h, offset=12)
    return vals.reshape(h, w).astype(np.float64)
