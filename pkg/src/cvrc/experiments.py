"""End-to-end aspect-classification and slope-estimation pipelines.

Two independent networks are trained on the east-west and north-south
difference rasters from randomly sampled teacher frames, then swept across
the full image; their per-pixel outputs are averaged and the class whose
output lands closest to unity wins.  Baselines: the same engine over split
real/imaginary channels, and direct thresholding of the neighbor phase
differences.  Slope estimation drives a single network along image rows
against a delayed angle teacher.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from . import raster, readout, reservoir
from .raster import (
    CLASS_EAST,
    CLASS_FLAT,
    CLASS_NORTH,
    CLASS_SOUTH,
    CLASS_WEST,
    EAST_WEST,
    MISSING,
    N_CLASSES,
    NORTH_SOUTH,
    Rect,
)
from .reservoir import REALPAIR, ReservoirConfig


def child_seed(root: int, stream: int) -> int:
    """Deterministic per-consumer seed derived from one top-level seed."""
    return int(np.random.SeedSequence((int(root), int(stream))).generate_state(1)[0])


@dataclass(frozen=True)
class AspectHyper:
    """Serialization and readout hyperparameters shared by both networks."""

    n_w: int = 5
    n_t: int = 5
    per_area: int = 1000
    lam: float = 1e-12


@dataclass
class AspectRun:
    """Both trained directional networks plus their shared hyperparameters."""

    config_ew: ReservoirConfig
    config_ns: ReservoirConfig
    weights_ew: reservoir.ReservoirWeights
    weights_ns: reservoir.ReservoirWeights
    readout_ew: readout.ReadoutModel
    readout_ns: readout.ReadoutModel
    hyper: AspectHyper
    learn_time: float = 0.0


@dataclass(frozen=True)
class SlopeSpec:
    """Row/column layout and network settings of a slope-estimation run."""

    config: ReservoirConfig
    train_rows: tuple
    eval_rows: tuple
    col_start: int
    col_stop: int
    delay: int = 5
    lam: float = 1e-12

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError("delay must be >= 0")
        if self.col_stop <= self.col_start:
            raise ValueError("empty column range")


@dataclass
class SlopeRun:
    spec: SlopeSpec
    weights: reservoir.ReservoirWeights
    model: readout.ReadoutModel
    learn_time: float = 0.0


@dataclass(frozen=True)
class Metrics:
    """Evaluation summary of one classification run."""

    overall: float
    per_region: dict
    confusion: np.ndarray
    learn_time: float = 0.0
    classify_time: float = 0.0
    rmse: float | None = None


def evaluate_labels(labels, truth_aspect, regions,
                    learn_time: float = 0.0, classify_time: float = 0.0) -> Metrics:
    """Score a label map overall and per region."""
    overall, confusion = accuracy(labels, truth_aspect)
    per_region = {
        name: accuracy(labels, truth_aspect, rect)[0]
        for name, rect in regions.items()
    }
    return Metrics(overall=overall, per_region=per_region, confusion=confusion,
                   learn_time=learn_time, classify_time=classify_time)


def _maybe_widen(config: ReservoirConfig, seq: np.ndarray) -> np.ndarray:
    if config.value_domain == REALPAIR:
        return reservoir.split_realpair(seq)
    return seq


def _teacher_sequence(diff, teacher_areas, hyper, direction, seed):
    """Sample, shuffle and serialize the teacher frames of one direction.

    Equivalent to concatenating frame_to_sequence over the shuffled frames,
    done as one vectorized gather so serialization stays cheap next to the
    reservoir drive.
    """
    shape = raster.frame_shape_for(direction, hyper.n_w, hyper.n_t)
    frames = raster.sample_frames(
        diff, teacher_areas, hyper.per_area, shape, seed=[seed, 0], direction=direction
    )
    order = np.random.default_rng([seed, 1]).permutation(len(frames))
    arr = raster.as_raster(diff)
    rows0 = np.array([frames[i][0].row for i in order], dtype=np.int32)[:, None, None]
    cols0 = np.array([frames[i][0].col for i in order], dtype=np.int32)[:, None, None]
    labels = np.array([frames[i][1] for i in order], dtype=np.int64)
    step = np.arange(hyper.n_t, dtype=np.int32)[None, :, None]
    lane = np.arange(hyper.n_w, dtype=np.int32)[None, None, :]
    if direction == EAST_WEST:
        ridx, cidx = rows0 + lane, cols0 + step
    else:
        ridx, cidx = rows0 + step, cols0 + lane
    seq = arr[ridx, cidx].reshape(labels.size * hyper.n_t, hyper.n_w)
    return np.ascontiguousarray(seq), labels


def train_aspect(
    diff_ew,
    diff_ns,
    teacher_areas,
    hyper: AspectHyper,
    config_ew: ReservoirConfig,
    config_ns: ReservoirConfig,
    sample_seed: int,
) -> AspectRun:
    """Train both directional networks on randomly sampled teacher frames.

    Frames are concatenated into one long sequence per direction (state is
    not reset between frames); the state at the last step of each frame
    becomes that frame's training row.
    """
    if config_ew.n_in != hyper.n_w or config_ns.n_in != hyper.n_w:
        raise ValueError("config n_in must equal the frame width n_w")
    started = time.perf_counter()
    trained = {}
    for direction, diff, config, stream in (
        (EAST_WEST, diff_ew, config_ew, 0),
        (NORTH_SOUTH, diff_ns, config_ns, 1),
    ):
        seq, labels = _teacher_sequence(
            diff, teacher_areas, hyper, direction, seed=[sample_seed, stream]
        )
        seq = _maybe_widen(config, seq)
        weights = reservoir.init_weights(config)
        last_steps = hyper.n_t - 1 + hyper.n_t * np.arange(labels.size)
        states, _ = reservoir.run_collect(weights, config, seq, last_steps)
        targets = readout.build_teacher(labels, N_CLASSES)
        model = readout.train(
            readout.TrainingBatch(states, targets, hyper.lam, config.value_domain)
        )
        trained[direction] = (weights, model)
    learn_time = time.perf_counter() - started
    return AspectRun(
        config_ew=config_ew,
        config_ns=config_ns,
        weights_ew=trained[EAST_WEST][0],
        weights_ns=trained[NORTH_SOUTH][0],
        readout_ew=trained[EAST_WEST][1],
        readout_ns=trained[NORTH_SOUTH][1],
        hyper=hyper,
        learn_time=learn_time,
    )


def _scan_outputs(diff, direction, run: AspectRun):
    config = run.config_ew if direction == EAST_WEST else run.config_ns
    weights = run.weights_ew if direction == EAST_WEST else run.weights_ns
    model = run.readout_ew if direction == EAST_WEST else run.readout_ns
    seq, coords = raster.scan_sequence(diff, direction, run.hyper.n_w)
    seq = _maybe_widen(config, seq)
    states, _ = reservoir.run_collect(weights, config, seq, range(seq.shape[0]))
    outputs = readout.forward_batch(model, states)
    h, w = np.asarray(diff).shape
    return raster.outputs_to_map(outputs, coords, w, h)


def classify_aspect(run: AspectRun, diff_ew, diff_ns) -> tuple[np.ndarray, float]:
    """Scan both rasters, average the two outputs, pick the class nearest 1.

    Pixels missing either directional output stay MISSING.  Returns the
    label map and the wall-clock classification time.
    """
    ew_shape = np.asarray(diff_ew).shape
    if ew_shape != np.asarray(diff_ns).shape:
        raise ValueError("difference rasters must share dimensions")
    started = time.perf_counter()
    grid_ew, cov_ew = _scan_outputs(diff_ew, EAST_WEST, run)
    grid_ns, cov_ns = _scan_outputs(diff_ns, NORTH_SOUTH, run)
    both = cov_ew & cov_ns
    labels = np.full(ew_shape, MISSING, dtype=np.uint8)
    merged = 0.5 * (grid_ew[both] + grid_ns[both])
    if run.config_ew.value_domain == REALPAIR:
        distance = np.abs(merged.real - 1.0)
    else:
        distance = np.abs(merged - 1.0)
    labels[both] = np.argmin(distance, axis=1).astype(np.uint8)
    return labels, time.perf_counter() - started


def neighbor_threshold(diff_ew, diff_ns, teacher_areas) -> float:
    """Flat/slope phase threshold by the same midpoint rule as the ground truth."""
    stat = np.maximum(np.abs(np.angle(diff_ew)), np.abs(np.angle(diff_ns)))
    by_class = {int(label): Rect(*rect) for label, rect in teacher_areas}
    slope_vals = np.concatenate(
        [stat[by_class[c].slices()].ravel() for c in
         (CLASS_NORTH, CLASS_EAST, CLASS_SOUTH, CLASS_WEST)]
    )
    flat_vals = stat[by_class[CLASS_FLAT].slices()].ravel()
    mean_slope = float(slope_vals.mean())
    mean_flat = float(flat_vals.mean())
    if mean_slope <= mean_flat:
        raise ValueError(
            f"degenerate threshold: slope mean {mean_slope:.6g} <= "
            f"flat mean {mean_flat:.6g}"
        )
    return 0.5 * (mean_slope + mean_flat)


def neighbor_difference_classify(diff_ew, diff_ns, tau: float) -> np.ndarray:
    """Classify each pixel directly from its two phase differences."""
    if np.asarray(diff_ew).shape != np.asarray(diff_ns).shape:
        raise ValueError("difference rasters must share dimensions")
    pew = np.angle(diff_ew)
    pns = np.angle(diff_ns)
    labels = np.full(pew.shape, CLASS_FLAT, dtype=np.uint8)
    sloped = (np.abs(pew) >= tau) | (np.abs(pns) >= tau)
    ew_wins = np.abs(pew) >= np.abs(pns)
    labels[sloped & ew_wins & (pew > 0)] = CLASS_EAST
    labels[sloped & ew_wins & (pew <= 0)] = CLASS_WEST
    labels[sloped & ~ew_wins & (pns > 0)] = CLASS_SOUTH
    labels[sloped & ~ew_wins & (pns <= 0)] = CLASS_NORTH
    return labels


def accuracy(pred, truth, region: Rect | None = None) -> tuple[float, np.ndarray]:
    """Concordance rate over evaluable pixels plus the 5x5 confusion matrix.

    MASKED truth pixels and MISSING predictions are excluded from both the
    numerator and the denominator.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("prediction and truth dimensions differ")
    if region is not None:
        sl = Rect(*region).slices()
        pred = pred[sl]
        truth = truth[sl]
    evaluable = (truth < N_CLASSES) & (pred < N_CLASSES)
    n = int(evaluable.sum())
    if n == 0:
        raise ValueError("no evaluable pixels in the requested region")
    t = truth[evaluable].astype(np.int64)
    p = pred[evaluable].astype(np.int64)
    confusion = np.bincount(t * N_CLASSES + p, minlength=N_CLASSES * N_CLASSES)
    confusion = confusion.reshape(N_CLASSES, N_CLASSES)
    pct = 100.0 * float(np.trace(confusion)) / n
    return pct, confusion


def output_rmse(outputs, targets) -> np.ndarray:
    """Per-sample sqrt(mean_k |y_k - d_k|^2); callers average as needed."""
    y = np.asarray(outputs, dtype=np.complex128)
    d = np.asarray(targets, dtype=np.complex128)
    if y.ndim == 1:
        y = y[None, :]
        d = d[None, :]
    if y.shape != d.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {d.shape}")
    if y.shape[1] == 0:
        raise ValueError("component count K must be >= 1")
    return np.sqrt(np.mean(np.abs(y - d) ** 2, axis=1))


# -- slope-angle estimation ---------------------------------------------------


def _row_windows(diff, row: int, n_w: int, col_start: int, col_stop: int) -> np.ndarray:
    arr = raster.as_raster(diff)
    off = n_w // 2
    top = row - off
    if top < 0 or top + n_w > arr.shape[0]:
        raise ValueError(f"row {row} windows exceed raster height")
    if col_start < 0 or col_stop > arr.shape[1]:
        raise ValueError("column range exceeds raster width")
    return np.ascontiguousarray(arr[top : top + n_w, col_start:col_stop].T)


def train_slope(diff_ew, truth_slope, spec: SlopeSpec) -> SlopeRun:
    """Fit a one-output readout against a delayed angle teacher.

    Each training row is driven from a zero state through its column
    windows; the teacher for step t is the true angle d pixels back, so the
    first d steps of every row are excluded from the batch.
    """
    truth_slope = np.asarray(truth_slope, dtype=np.float64)
    usable = spec.col_stop - spec.col_start
    if spec.delay >= usable:
        raise ValueError(f"delay {spec.delay} >= usable row length {usable}")
    started = time.perf_counter()
    weights = reservoir.init_weights(spec.config)
    blocks = []
    targets = []
    for row in spec.train_rows:
        seq = _row_windows(diff_ew, int(row), spec.config.n_in, spec.col_start, spec.col_stop)
        seq = _maybe_widen(spec.config, seq)
        states, _ = reservoir.run_collect(
            weights, spec.config, seq, range(seq.shape[0])
        )
        blocks.append(states[spec.delay :])
        targets.append(truth_slope[int(row), spec.col_start : spec.col_stop - spec.delay])
    states = np.vstack(blocks)
    d = np.concatenate(targets).astype(np.complex128)[:, None]
    model = readout.train(
        readout.TrainingBatch(states, d, spec.lam, spec.config.value_domain)
    )
    learn_time = time.perf_counter() - started
    return SlopeRun(spec=spec, weights=weights, model=model, learn_time=learn_time)


def estimate_slope(run: SlopeRun, diff_ew, row: int) -> tuple[np.ndarray, np.ndarray]:
    """Predicted angles along one row; the output at step t lands on column t-d."""
    spec = run.spec
    seq = _row_windows(diff_ew, int(row), spec.config.n_in, spec.col_start, spec.col_stop)
    seq = _maybe_widen(spec.config, seq)
    states, _ = reservoir.run_collect(run.weights, spec.config, seq, range(seq.shape[0]))
    outputs = readout.forward_batch(run.model, states)
    cols = np.arange(spec.col_start, spec.col_stop - spec.delay)
    return cols, outputs[spec.delay :, 0].real


def neighbor_slope_estimate(
    diff_ew, row: int, cols, height_ambiguity: float, range_spacing: float
) -> np.ndarray:
    """Angle straight from the per-pixel phase difference (no smoothing)."""
    arr = raster.as_raster(diff_ew)
    dphi = np.angle(arr[int(row), np.asarray(cols, dtype=np.int64)])
    dh = dphi * height_ambiguity / (2.0 * np.pi)
    return np.degrees(np.arctan(dh / range_spacing))


# -- sweeps and traces --------------------------------------------------------


@dataclass(frozen=True)
class AspectScene:
    """The inputs one aspect experiment needs, however they were produced."""

    diff_ew: np.ndarray
    diff_ns: np.ndarray
    teacher_areas: list
    truth_aspect: np.ndarray
    regions: dict

    @classmethod
    def from_synthetic(cls, scene) -> "AspectScene":
        return cls(
            diff_ew=scene.diff_ew,
            diff_ns=scene.diff_ns,
            teacher_areas=scene.teacher_areas,
            truth_aspect=scene.truth.aspect,
            regions=scene.regions,
        )


def isolated_pixel_count(labels) -> int:
    """Count valid pixels whose class differs from every valid 4-neighbor."""
    arr = np.asarray(labels)
    valid = arr < N_CLASSES
    same = np.zeros(arr.shape, dtype=bool)
    neighbors = np.zeros(arr.shape, dtype=bool)
    for shift, axis in ((1, 0), (-1, 0), (1, 1), (-1, 1)):
        rolled = np.roll(arr, shift, axis=axis)
        rolled_valid = np.roll(valid, shift, axis=axis)
        edge = np.zeros(arr.shape, dtype=bool)
        if axis == 0:
            edge[0 if shift == 1 else -1, :] = True
        else:
            edge[:, 0 if shift == 1 else -1] = True
        usable = valid & rolled_valid & ~edge
        neighbors |= usable
        same |= usable & (rolled == arr)
    return int(np.count_nonzero(valid & neighbors & ~same))


def _evaluate(labels, truth_aspect, regions) -> dict:
    overall, confusion = accuracy(labels, truth_aspect)
    out = {"overall": overall, "confusion": confusion}
    for name, rect in regions.items():
        out[name] = accuracy(labels, truth_aspect, rect)[0]
    return out


def sweep_neurons(
    scene: AspectScene,
    n_res_list,
    hyper: AspectHyper,
    config_ew: ReservoirConfig,
    config_ns: ReservoirConfig,
    sample_seed: int,
) -> list[dict]:
    """Repeat the aspect experiment for each reservoir size."""
    if not list(n_res_list):
        raise ValueError("neuron grid must be nonempty")
    rows = []
    for n_res in n_res_list:
        run = train_aspect(
            scene.diff_ew,
            scene.diff_ns,
            scene.teacher_areas,
            hyper,
            replace(config_ew, n_res=int(n_res)),
            replace(config_ns, n_res=int(n_res)),
            sample_seed,
        )
        labels, classify_time = classify_aspect(run, scene.diff_ew, scene.diff_ns)
        scores = _evaluate(labels, scene.truth_aspect, scene.regions)
        row = {"n_res": int(n_res), "learn_time": run.learn_time,
               "classify_time": classify_time, "overall": scores["overall"]}
        row.update({k: v for k, v in scores.items() if k not in ("overall", "confusion")})
        rows.append(row)
    return rows


def sweep_frames(
    scene: AspectScene,
    sizes,
    hyper: AspectHyper,
    config_ew: ReservoirConfig,
    config_ns: ReservoirConfig,
    sample_seed: int,
    combos=None,
) -> list[dict]:
    """Repeat the aspect experiment over a (n_w, n_t) grid.

    The input width tracks n_w, so the networks are rebuilt per combination;
    the scan window tracks n_w as well.  ``combos`` restricts the grid to
    explicit (n_w, n_t) pairs.
    """
    sizes = [int(s) for s in sizes]
    if combos is None:
        if not sizes:
            raise ValueError("frame grid must be nonempty")
        combos = list(product(sizes, sizes))
    rows = []
    for n_w, n_t in combos:
        combo_hyper = replace(hyper, n_w=int(n_w), n_t=int(n_t))
        run = train_aspect(
            scene.diff_ew,
            scene.diff_ns,
            scene.teacher_areas,
            combo_hyper,
            replace(config_ew, n_in=int(n_w)),
            replace(config_ns, n_in=int(n_w)),
            sample_seed,
        )
        labels, classify_time = classify_aspect(run, scene.diff_ew, scene.diff_ns)
        scores = _evaluate(labels, scene.truth_aspect, scene.regions)
        row = {
            "n_w": int(n_w),
            "n_t": int(n_t),
            "overall": scores["overall"],
            "isolated_flips": isolated_pixel_count(labels),
            "learn_time": run.learn_time,
            "classify_time": classify_time,
        }
        row.update({k: v for k, v in scores.items() if k not in ("overall", "confusion")})
        rows.append(row)
    return rows


@dataclass(frozen=True)
class TraceLine:
    """A scan segment: a row for east-west traces, a column for north-south."""

    direction: str
    index: int
    start: int
    stop: int


@dataclass(frozen=True)
class TraceResult:
    rows: np.ndarray
    cols: np.ndarray
    amplitude: np.ndarray  # (steps, n_res) |x_i|
    phase: np.ndarray  # (steps, n_res) arg(x_i)
    rmse: np.ndarray  # (steps,) output error vs +-1 teacher; NaN off-mask


def trace_reservoir(run: AspectRun, diff, line: TraceLine, truth_aspect) -> TraceResult:
    """Record every reservoir state along one scan line plus per-step RMSE."""
    raster.check_direction(line.direction)
    if line.direction == EAST_WEST:
        config, weights, model = run.config_ew, run.weights_ew, run.readout_ew
        seq = _row_windows(diff, line.index, run.hyper.n_w, line.start, line.stop)
        rows = np.full(seq.shape[0], line.index, dtype=np.int64)
        cols = np.arange(line.start, line.stop, dtype=np.int64)
    else:
        config, weights, model = run.config_ns, run.weights_ns, run.readout_ns
        arr = raster.as_raster(diff)
        off = run.hyper.n_w // 2
        left = line.index - off
        if left < 0 or left + run.hyper.n_w > arr.shape[1]:
            raise ValueError(f"column {line.index} windows exceed raster width")
        if line.start < 0 or line.stop > arr.shape[0]:
            raise ValueError("row range exceeds raster height")
        seq = np.ascontiguousarray(
            arr[line.start : line.stop, left : left + run.hyper.n_w]
        )
        rows = np.arange(line.start, line.stop, dtype=np.int64)
        cols = np.full(seq.shape[0], line.index, dtype=np.int64)
    seq = _maybe_widen(config, seq)
    states, _ = reservoir.run_collect(weights, config, seq, range(seq.shape[0]))
    outputs = readout.forward_batch(model, states)

    truth_aspect = np.asarray(truth_aspect)
    classes = truth_aspect[rows, cols]
    rmse = np.full(seq.shape[0], np.nan)
    valid = classes < N_CLASSES
    if np.any(valid):
        teacher = readout.build_teacher(classes[valid].astype(np.int64), N_CLASSES)
        rmse[valid] = output_rmse(outputs[valid], teacher)
    return TraceResult(
        rows=rows,
        cols=cols,
        amplitude=np.abs(states),
        phase=np.angle(states),
        rmse=rmse,
    )
