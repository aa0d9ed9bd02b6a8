"""Complex rasters: phase differencing, frame sampling, scan serialization.

A raster is a row-major (height, width) complex array; amplitude carries
normalized backscatter and phase stays in the principal range by
construction.  Directional phase differences are taken through the conjugate
product, which is wrap-safe.  Two serializations feed the reservoirs:

* teacher frames, small labeled rectangles emitted column-by-column (east-
  west direction) or row-by-row (north-south direction), and
* full-image scans with a one-pixel-wide window that sweeps the image in
  reading order for the east-west raster and in transposed order for the
  north-south raster, producing one continuous sequence per image.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

EAST_WEST = "ew"
NORTH_SOUTH = "ns"

N_CLASSES = 5
CLASS_NORTH, CLASS_EAST, CLASS_SOUTH, CLASS_WEST, CLASS_FLAT = range(N_CLASSES)
CLASS_NAMES = ("north", "east", "south", "west", "flat")
MASKED = 255  # water pixels excluded from evaluation
MISSING = 254  # pixels the scan never assigns (map borders)


class Rect(NamedTuple):
    """Axis-aligned rectangle in pixel coordinates."""

    top: int
    left: int
    height: int
    width: int

    def slices(self) -> tuple[slice, slice]:
        return (
            slice(self.top, self.top + self.height),
            slice(self.left, self.left + self.width),
        )


@dataclass(frozen=True)
class Frame:
    """A teacher sub-image: origin, extent and serialization direction."""

    row: int
    col: int
    rows: int
    cols: int
    direction: str


def check_direction(direction: str) -> str:
    if direction not in (EAST_WEST, NORTH_SOUTH):
        raise ValueError(f"direction must be {EAST_WEST!r} or {NORTH_SOUTH!r}")
    return direction


def as_raster(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"raster must be 2-D and nonempty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("raster contains non-finite values")
    return arr


def phase_difference(r, direction: str) -> np.ndarray:
    """Adjacent-pixel phase difference with the input amplitude kept.

    Output pixel (i, j) carries |r(i, j)| and the phase of
    r(i, j+1) * conj(r(i, j)) (east-west; row-adjacent for north-south).
    The conjugate product wraps the difference into the principal range.
    The last column (row) replicates the previous difference so the output
    keeps the input dimensions.
    """
    arr = as_raster(r)
    check_direction(direction)
    h, w = arr.shape
    if direction == EAST_WEST:
        if w < 2:
            raise ValueError("east-west difference needs width >= 2")
        dphi = np.angle(arr[:, 1:] * np.conj(arr[:, :-1]))
        dphi = np.concatenate([dphi, dphi[:, -1:]], axis=1)
    else:
        if h < 2:
            raise ValueError("north-south difference needs height >= 2")
        dphi = np.angle(arr[1:, :] * np.conj(arr[:-1, :]))
        dphi = np.concatenate([dphi, dphi[-1:, :]], axis=0)
    return np.abs(arr) * np.exp(1j * dphi)


def frame_shape_for(direction: str, n_w: int, n_t: int) -> tuple[int, int]:
    """Teacher frame extent (rows, cols): n_w x n_t east-west, transposed north-south."""
    check_direction(direction)
    return (n_w, n_t) if direction == EAST_WEST else (n_t, n_w)


def sample_frames(
    diff,
    areas,
    per_area: int,
    frame_shape: tuple[int, int],
    seed,
    direction: str = EAST_WEST,
) -> list[tuple[Frame, int]]:
    """Draw ``per_area`` frames uniformly (with replacement) from each area.

    ``areas`` is a sequence of (class_index, Rect).  Each frame lies fully
    inside its source rectangle; an area too small to hold a frame is
    rejected with its class named.
    """
    arr = as_raster(diff)
    fr, fc = frame_shape
    check_direction(direction)
    if per_area < 1:
        raise ValueError("per_area must be >= 1")
    rng = np.random.default_rng(seed)
    out: list[tuple[Frame, int]] = []
    for label, rect in areas:
        rect = Rect(*rect)
        if rect.top < 0 or rect.left < 0:
            raise ValueError(f"area {label}: negative origin {rect}")
        if rect.top + rect.height > arr.shape[0] or rect.left + rect.width > arr.shape[1]:
            raise ValueError(f"area {label}: rectangle {rect} exceeds raster bounds")
        if rect.height < fr or rect.width < fc:
            raise ValueError(
                f"area {label}: rectangle {rect.height}x{rect.width} cannot hold "
                f"a {fr}x{fc} frame"
            )
        rows = rng.integers(rect.top, rect.top + rect.height - fr + 1, size=per_area)
        cols = rng.integers(rect.left, rect.left + rect.width - fc + 1, size=per_area)
        for r, c in zip(rows, cols):
            out.append((Frame(int(r), int(c), fr, fc, direction), int(label)))
    return out


def frame_to_sequence(diff, frame: Frame) -> np.ndarray:
    """Serialize one frame into (n_t, n_w) input vectors.

    East-west frames emit their columns left to right, each read top to
    bottom; north-south frames emit their rows top to bottom, each read left
    to right.  Either way the sequence has n_t steps of width n_w.
    """
    arr = as_raster(diff)
    if frame.row < 0 or frame.col < 0:
        raise ValueError(f"frame origin out of bounds: {frame}")
    if frame.row + frame.rows > arr.shape[0] or frame.col + frame.cols > arr.shape[1]:
        raise ValueError(f"frame exceeds raster bounds: {frame}")
    block = arr[frame.row : frame.row + frame.rows, frame.col : frame.col + frame.cols]
    if frame.direction == EAST_WEST:
        return np.ascontiguousarray(block.T)
    return np.ascontiguousarray(block)


def scan_sequence(diff, direction: str, n_w: int) -> tuple[np.ndarray, np.ndarray]:
    """Serialize a whole raster into one continuous scan sequence.

    East-west: an n_w x 1 (vertical) window sweeps left to right along a row
    band, the band then shifts down one pixel, until the bottom; sequence
    length is (H - n_w + 1) * W.  North-south is the transposed sweep: a
    1 x n_w window runs top to bottom, the band shifts right one pixel;
    length (W - n_w + 1) * H.  The second return value assigns each step to
    the window-center pixel (offset n_w // 2 along the window).
    """
    arr = as_raster(diff)
    check_direction(direction)
    if n_w < 1:
        raise ValueError("n_w must be >= 1")
    h, w = arr.shape
    off = n_w // 2
    if direction == EAST_WEST:
        if h < n_w:
            raise ValueError(f"raster height {h} smaller than window {n_w}")
        windows = sliding_window_view(arr, n_w, axis=0)  # (H-n_w+1, W, n_w)
        seq = windows.reshape(-1, n_w)
        bands = np.arange(h - n_w + 1) + off
        coords = np.empty((seq.shape[0], 2), dtype=np.int64)
        coords[:, 0] = np.repeat(bands, w)
        coords[:, 1] = np.tile(np.arange(w), h - n_w + 1)
    else:
        if w < n_w:
            raise ValueError(f"raster width {w} smaller than window {n_w}")
        windows = sliding_window_view(arr, n_w, axis=1)  # (H, W-n_w+1, n_w)
        seq = windows.transpose(1, 0, 2).reshape(-1, n_w)
        bands = np.arange(w - n_w + 1) + off
        coords = np.empty((seq.shape[0], 2), dtype=np.int64)
        coords[:, 0] = np.tile(np.arange(h), w - n_w + 1)
        coords[:, 1] = np.repeat(bands, h)
    return np.ascontiguousarray(seq), coords


def outputs_to_map(outputs, coords, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """Realign per-step output vectors onto the pixel grid.

    Returns the (height, width, n_out) grid and a boolean coverage mask;
    uncovered pixels are the map borders a scan cannot center on.  Duplicate
    coordinates indicate a scan bug and are rejected.
    """
    outputs = np.asarray(outputs, dtype=np.complex128)
    coords = np.asarray(coords, dtype=np.int64)
    if outputs.ndim != 2 or coords.shape != (outputs.shape[0], 2):
        raise ValueError("outputs must be (T, n_out) with matching (T, 2) coords")
    if coords.size:
        if coords.min() < 0 or coords[:, 0].max() >= height or coords[:, 1].max() >= width:
            raise ValueError("coordinates outside the target grid")
    flat = coords[:, 0] * width + coords[:, 1]
    if np.unique(flat).size != flat.size:
        raise ValueError("duplicate scan coordinate (scan bug)")
    grid = np.zeros((height, width, outputs.shape[1]), dtype=np.complex128)
    covered = np.zeros((height, width), dtype=bool)
    grid[coords[:, 0], coords[:, 1]] = outputs
    covered[coords[:, 0], coords[:, 1]] = True
    return grid, covered


# -- file formats -----------------------------------------------------------

_CXR_MAGIC = b"CXR1"


def save_cxr(path, raster) -> None:
    """CXR1: magic, u32 width, u32 height, then f32 (re, im) pairs row-major."""
    arr = as_raster(raster)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(_CXR_MAGIC)
        fh.write(struct.pack("<II", w, h))
        fh.write(np.ascontiguousarray(arr, dtype="<c8").tobytes())


def load_cxr(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != _CXR_MAGIC:
        raise ValueError(f"{path}: not a CXR1 raster file")
    w, h = struct.unpack_from("<II", raw, 4)
    need = 12 + 8 * w * h
    if len(raw) != need:
        raise ValueError(f"{path}: truncated raster ({len(raw)} != {need})")
    data = np.frombuffer(raw, dtype="<c8", count=w * h, offset=12)
    return as_raster(data.reshape(h, w).astype(np.complex128))


def save_pgm(path, labels) -> None:
    """8-bit binary PGM with classes 0-4, MASKED=255, MISSING=254."""
    arr = np.asarray(labels)
    if arr.ndim != 2:
        raise ValueError("label map must be 2-D")
    arr = arr.astype(np.uint8)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(arr.tobytes())


def load_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM file")
    w, h = (int(tok) for tok in parts[1].split())
    if parts[2] != b"255":
        raise ValueError(f"{path}: expected maxval 255")
    data = parts[3]
    if len(data) < w * h:
        raise ValueError(f"{path}: truncated PGM payload")
    return np.frombuffer(data[: w * h], dtype=np.uint8).reshape(h, w).copy()
