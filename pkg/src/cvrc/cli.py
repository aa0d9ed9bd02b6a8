"""Batch command-line front end.

Subcommands: synth, aspect, slope, sweep, trace.  Every report command
writes delimited output (CSV, PGM) together with rendered PNG figures.
Exit codes: 0 success, 2 usage/config error, 3 I/O error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import cxnum, experiments, figures, raster, readout, reservoir, synthscene
from .config import ConfigError, RunConfig
from .experiments import (
    AspectHyper,
    AspectScene,
    SlopeSpec,
    TraceLine,
    child_seed,
)
from .raster import EAST_WEST, NORTH_SOUTH
from .reservoir import COMPLEX, GENERAL, REALPAIR, SIMPLIFIED, ReservoirConfig

SCENE_FILES = {
    "dem": "dem.dem1",
    "interferogram": "interferogram.cxr1",
    "diff_ew": "diff_ew.cxr1",
    "diff_ns": "diff_ns.cxr1",
    "truth_aspect": "truth_aspect.pgm",
    "truth_slope": "truth_slope.grd1",
}

# Seed streams for the deterministic split of the top-level seed.
_SEED_SCENE = 0
_SEED_WEIGHTS_EW = 1
_SEED_WEIGHTS_NS = 2
_SEED_SAMPLING = 3
_SEED_SLOPE = 4


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig.defaults()
    if args.seed is not None:
        cfg.set("seed", str(args.seed), where="--seed")
    return cfg


def _ensure_out_dir(path: str) -> Path:
    """Create the output directory and prove it is writable before any work."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write_probe"
    probe.write_bytes(b"")
    probe.unlink()
    return out


def _require_scene_files(scene_dir: str, names) -> dict[str, Path]:
    base = Path(scene_dir)
    paths = {}
    for name in names:
        path = base / SCENE_FILES[name]
        if not path.is_file():
            raise FileNotFoundError(f"missing scene input: {path}")
        paths[name] = path
    return paths


def _aspect_config(cfg: RunConfig, domain: str, dynamics: str, seed: int) -> ReservoirConfig:
    return ReservoirConfig(
        n_in=cfg["aspect.n_w"],
        n_res=cfg["aspect.n_res"],
        init_spectral_radius=cfg["aspect.init_spectral_radius"],
        desired_spectral_radius=cfg["aspect.spectral_radius"],
        leak_rate=cfg["aspect.leak_rate"],
        dynamics_mode=dynamics,
        delta=cfg["aspect.delta"],
        time_const=cfg["aspect.time_const"],
        input_scale=cfg["aspect.input_scale"],
        seed=seed,
        value_domain=domain,
    )


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _parse_trace_spec(text: str, shape, n_w: int) -> TraceLine:
    """Parse 'i=210' / 'i=210:70-470' (east-west row) or 'j=...' (north-south)."""
    height, width = shape
    body = text.strip().replace(" ", "")
    if "=" not in body:
        raise ConfigError(f"bad trace spec {text!r}; expected i=ROW or j=COL")
    head, _, rest = body.partition("=")
    if head not in ("i", "j"):
        raise ConfigError(f"bad trace spec {text!r}; expected i=ROW or j=COL")
    idx_text, _, span_text = rest.partition(":")
    try:
        index = int(idx_text)
    except ValueError as err:
        raise ConfigError(f"bad trace index in {text!r}") from err
    limit = width if head == "i" else height
    start, stop = 0, limit
    if span_text:
        lo, dash, hi = span_text.partition("-")
        if not dash:
            raise ConfigError(f"bad trace span in {text!r}; expected LO-HI")
        try:
            start, stop = int(lo), int(hi)
        except ValueError as err:
            raise ConfigError(f"bad trace span in {text!r}") from err
    if not 0 <= start < stop <= limit:
        raise ConfigError(f"trace span {start}-{stop} outside raster")
    off = n_w // 2
    axis_limit = height if head == "i" else width
    if index - off < 0 or index - off + n_w > axis_limit:
        raise ConfigError(f"trace line {index} too close to the raster edge")
    direction = EAST_WEST if head == "i" else NORTH_SOUTH
    return TraceLine(direction=direction, index=index, start=start, stop=stop)


def _write_trace(out: Path, trace, stem: str, title: str) -> None:
    n_res = trace.amplitude.shape[1]
    header = (["step", "row", "col"]
              + [f"amp_{i}" for i in range(n_res)]
              + [f"phase_{i}" for i in range(n_res)]
              + ["rmse"])
    rows = []
    for t in range(trace.amplitude.shape[0]):
        rows.append(
            [t, int(trace.rows[t]), int(trace.cols[t])]
            + [f"{v:.9g}" for v in trace.amplitude[t]]
            + [f"{v:.9g}" for v in trace.phase[t]]
            + [f"{trace.rmse[t]:.9g}"]
        )
    _write_csv(out / f"{stem}.csv", header, rows)
    figures.save_trace_figure(trace, out / f"{stem}.png", title=title)


# -- subcommands --------------------------------------------------------------


def cmd_synth(cfg: RunConfig, args) -> int:
    out = _ensure_out_dir(args.out or "scene")
    seed = child_seed(cfg["seed"], _SEED_SCENE)
    spec = cfg.scene_spec(seed)
    scene = synthscene.build_scene(spec, cfg.teacher_areas(spec), cfg.regions(spec))
    synthscene.save_dem(out / SCENE_FILES["dem"], scene.dem)
    raster.save_cxr(out / SCENE_FILES["interferogram"], scene.interferogram)
    raster.save_cxr(out / SCENE_FILES["diff_ew"], scene.diff_ew)
    raster.save_cxr(out / SCENE_FILES["diff_ns"], scene.diff_ns)
    raster.save_pgm(out / SCENE_FILES["truth_aspect"], scene.truth.aspect)
    synthscene.save_grid(out / SCENE_FILES["truth_slope"], scene.truth.slope_ew)
    print(f"synth: wrote {len(SCENE_FILES)} files to {out} "
          f"({spec.width}x{spec.height}, coherence {spec.coherence:g}, "
          f"threshold {scene.truth.threshold:.3f} m)")
    return 0


def cmd_aspect(cfg: RunConfig, args) -> int:
    inputs = _require_scene_files(cfg["io.scene_dir"],
                                  ("diff_ew", "diff_ns", "truth_aspect"))
    out = _ensure_out_dir(args.out or "out_aspect")
    seed = cfg["seed"]
    spec = cfg.scene_spec(child_seed(seed, _SEED_SCENE))
    areas = cfg.teacher_areas(spec)
    regions = cfg.regions(spec)
    diff_ew = raster.load_cxr(inputs["diff_ew"])
    diff_ns = raster.load_cxr(inputs["diff_ns"])
    truth_aspect = raster.load_pgm(inputs["truth_aspect"])

    baseline = args.baseline
    dynamics = GENERAL if args.dynamics == "general" else SIMPLIFIED
    hyper = AspectHyper(
        n_w=cfg["aspect.n_w"], n_t=cfg["aspect.n_t"],
        per_area=cfg["aspect.per_area"], lam=cfg["aspect.lambda"],
    )
    run = None
    if baseline == "neighbor":
        started = time.perf_counter()
        tau = experiments.neighbor_threshold(diff_ew, diff_ns, areas)
        learn_time = time.perf_counter() - started
        started = time.perf_counter()
        labels = experiments.neighbor_difference_classify(diff_ew, diff_ns, tau)
        classify_time = time.perf_counter() - started
    else:
        domain = REALPAIR if baseline == "rvrc" else COMPLEX
        run = experiments.train_aspect(
            diff_ew, diff_ns, areas, hyper,
            _aspect_config(cfg, domain, dynamics, child_seed(seed, _SEED_WEIGHTS_EW)),
            _aspect_config(cfg, domain, dynamics, child_seed(seed, _SEED_WEIGHTS_NS)),
            sample_seed=child_seed(seed, _SEED_SAMPLING),
        )
        labels, classify_time = experiments.classify_aspect(run, diff_ew, diff_ns)
        learn_time = run.learn_time
        readout.save_model(run.readout_ew, out / "model_ew.cvm1")
        readout.save_model(run.readout_ns, out / "model_ns.cvm1")

    metrics = experiments.evaluate_labels(labels, truth_aspect, regions,
                                          learn_time, classify_time)
    region_rows = [("overall", metrics.overall, int(metrics.confusion.sum()))]
    for name, rect in regions.items():
        pct, conf = experiments.accuracy(labels, truth_aspect, rect)
        region_rows.append((name, pct, int(conf.sum())))

    raster.save_pgm(out / "labels.pgm", labels)
    figures.save_label_figure(labels, out / "labels.png",
                              title=f"aspect classification ({baseline})")
    _write_csv(out / "metrics.csv", ["region", "accuracy_pct", "pixels"],
               [(name, f"{pct:.4f}", n) for name, pct, n in region_rows])
    _write_csv(out / "confusion.csv",
               ["truth\\pred"] + list(raster.CLASS_NAMES),
               [[raster.CLASS_NAMES[i]] + list(metrics.confusion[i]) for i in range(5)])

    report = [f"method: {baseline}", f"seed: {seed}",
              f"scene: {cfg['io.scene_dir']}"]
    report += [f"accuracy {name}: {pct:.2f} % ({n} px)" for name, pct, n in region_rows]
    report += [f"learning time: {metrics.learn_time:.3f} s",
               f"classification time: {metrics.classify_time:.3f} s"]
    (out / "report.txt").write_text("\n".join(report) + "\n", encoding="utf-8")
    print("\n".join(report))

    if args.trace:
        if run is None:
            raise ConfigError("--trace needs a reservoir baseline (cvrc or rvrc)")
        line = _parse_trace_spec(args.trace, diff_ew.shape, hyper.n_w)
        diff = diff_ew if line.direction == EAST_WEST else diff_ns
        trace = experiments.trace_reservoir(run, diff, line, truth_aspect)
        _write_trace(out, trace, "trace", f"reservoir trace {args.trace}")
    return 0


def cmd_slope(cfg: RunConfig, args) -> int:
    inputs = _require_scene_files(cfg["io.scene_dir"], ("diff_ew", "truth_slope"))
    out = _ensure_out_dir(args.out or "out_slope")
    seed = cfg["seed"]
    spec = cfg.scene_spec(child_seed(seed, _SEED_SCENE))
    diff_ew = raster.load_cxr(inputs["diff_ew"])
    truth_slope = synthscene.load_grid(inputs["truth_slope"])
    train_rows, eval_rows, col_start, col_stop = cfg.slope_rows(spec)
    for row in tuple(train_rows) + tuple(eval_rows):
        if not 0 <= row < diff_ew.shape[0]:
            raise ConfigError(f"slope row {row} outside raster height {diff_ew.shape[0]}")

    domain = REALPAIR if args.baseline == "rvrc" else COMPLEX
    dynamics = GENERAL if args.dynamics == "general" else SIMPLIFIED
    sspec = SlopeSpec(
        config=ReservoirConfig(
            n_in=cfg["slope.n_w"],
            n_res=cfg["slope.n_res"],
            init_spectral_radius=cfg["slope.init_spectral_radius"],
            desired_spectral_radius=cfg["slope.spectral_radius"],
            leak_rate=cfg["slope.leak_rate"],
            dynamics_mode=dynamics,
            input_scale=cfg["slope.input_scale"],
            seed=child_seed(seed, _SEED_SLOPE),
            value_domain=domain,
        ),
        train_rows=tuple(train_rows),
        eval_rows=tuple(eval_rows),
        col_start=col_start,
        col_stop=col_stop,
        delay=cfg["slope.delay"],
        lam=cfg["slope.lambda"],
    )
    run = experiments.train_slope(diff_ew, truth_slope, sspec)

    report = [f"seed: {seed}", f"train rows: {','.join(str(r) for r in train_rows)}",
              f"learning time: {run.learn_time:.3f} s"]
    for row in eval_rows:
        cols, predicted = experiments.estimate_slope(run, diff_ew, row)
        neighbor = experiments.neighbor_slope_estimate(
            diff_ew, row, cols, spec.height_ambiguity, spec.range_spacing
        )
        truth_row = truth_slope[row, cols]
        err_rc = np.abs(predicted - truth_row)
        err_nb = np.abs(neighbor - truth_row)
        _write_csv(
            out / f"slope_row{row}.csv",
            ["col", "truth_deg", "cvrc_deg", "neighbor_deg", "err_cvrc", "err_neighbor"],
            [(int(c), f"{t:.6f}", f"{p:.6f}", f"{nb:.6f}", f"{er:.6f}", f"{en:.6f}")
             for c, t, p, nb, er, en in zip(cols, truth_row, predicted, neighbor, err_rc, err_nb)],
        )
        figures.save_slope_figure(
            cols, truth_row, predicted, neighbor,
            out / f"slope_row{row}.png",
            title=f"row {row} ({'trained' if row in train_rows else 'unseen'})",
        )
        tag = "trained" if row in train_rows else "unseen"
        report.append(
            f"row {row} ({tag}): mean |err| reservoir {err_rc.mean():.3f} deg, "
            f"neighbor {err_nb.mean():.3f} deg"
        )
    (out / "report.txt").write_text("\n".join(report) + "\n", encoding="utf-8")
    print("\n".join(report))
    return 0


def _load_aspect_scene(cfg: RunConfig, spec) -> AspectScene:
    inputs = _require_scene_files(cfg["io.scene_dir"],
                                  ("diff_ew", "diff_ns", "truth_aspect"))
    return AspectScene(
        diff_ew=raster.load_cxr(inputs["diff_ew"]),
        diff_ns=raster.load_cxr(inputs["diff_ns"]),
        teacher_areas=cfg.teacher_areas(spec),
        truth_aspect=raster.load_pgm(inputs["truth_aspect"]),
        regions=cfg.regions(spec),
    )


def cmd_sweep(cfg: RunConfig, args) -> int:
    kind = cfg["sweep.kind"]
    if kind not in ("neurons", "frames"):
        raise ConfigError(f"sweep.kind must be 'neurons' or 'frames', got {kind!r}")
    grid = cfg.sweep_grid(kind)
    if not grid:
        raise ConfigError(f"empty sweep grid for kind {kind!r}")
    seed = cfg["seed"]
    spec = cfg.scene_spec(child_seed(seed, _SEED_SCENE))
    scene = _load_aspect_scene(cfg, spec)
    out = _ensure_out_dir(args.out or "out_sweep")
    dynamics = GENERAL if args.dynamics == "general" else SIMPLIFIED
    domain = REALPAIR if args.baseline == "rvrc" else COMPLEX
    hyper = AspectHyper(
        n_w=cfg["aspect.n_w"], n_t=cfg["aspect.n_t"],
        per_area=cfg["aspect.per_area"], lam=cfg["aspect.lambda"],
    )
    config_ew = _aspect_config(cfg, domain, dynamics, child_seed(seed, _SEED_WEIGHTS_EW))
    config_ns = _aspect_config(cfg, domain, dynamics, child_seed(seed, _SEED_WEIGHTS_NS))
    sample_seed = child_seed(seed, _SEED_SAMPLING)

    if kind == "neurons":
        rows = experiments.sweep_neurons(scene, grid, hyper, config_ew, config_ns, sample_seed)
        header = list(rows[0].keys())
        _write_csv(out / "sweep_neurons.csv", header,
                   [[_fmt(row[k]) for k in header] for row in rows])
        figures.save_neuron_sweep_figure(rows, out / "sweep_neurons.png")
        print(f"sweep: wrote {len(rows)} rows to {out / 'sweep_neurons.csv'}")
    else:
        rows = experiments.sweep_frames(scene, grid, hyper, config_ew, config_ns, sample_seed)
        header = list(rows[0].keys())
        _write_csv(out / "sweep_frames.csv", header,
                   [[_fmt(row[k]) for k in header] for row in rows])
        figures.save_frame_sweep_figure(rows, out / "sweep_frames.png")
        print(f"sweep: wrote {len(rows)} rows to {out / 'sweep_frames.csv'}")
    return 0


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def cmd_trace(cfg: RunConfig, args) -> int:
    spec_text = args.trace or cfg["trace.line"]
    if not spec_text:
        raise ConfigError("trace needs --trace SPEC (e.g. --trace i=210)")
    seed = cfg["seed"]
    spec = cfg.scene_spec(child_seed(seed, _SEED_SCENE))
    scene = _load_aspect_scene(cfg, spec)
    out = _ensure_out_dir(args.out or "out_trace")
    dynamics = GENERAL if args.dynamics == "general" else SIMPLIFIED
    domain = REALPAIR if args.baseline == "rvrc" else COMPLEX
    if args.baseline == "neighbor":
        raise ConfigError("trace needs a reservoir baseline (cvrc or rvrc)")
    hyper = AspectHyper(
        n_w=cfg["aspect.n_w"], n_t=cfg["aspect.n_t"],
        per_area=cfg["aspect.per_area"], lam=cfg["aspect.lambda"],
    )
    run = experiments.train_aspect(
        scene.diff_ew, scene.diff_ns, scene.teacher_areas, hyper,
        _aspect_config(cfg, domain, dynamics, child_seed(seed, _SEED_WEIGHTS_EW)),
        _aspect_config(cfg, domain, dynamics, child_seed(seed, _SEED_WEIGHTS_NS)),
        sample_seed=child_seed(seed, _SEED_SAMPLING),
    )
    line = _parse_trace_spec(spec_text, scene.diff_ew.shape, hyper.n_w)
    diff = scene.diff_ew if line.direction == EAST_WEST else scene.diff_ns
    trace = experiments.trace_reservoir(run, diff, line, scene.truth_aspect)
    _write_trace(out, trace, "trace", f"reservoir trace {spec_text}")
    print(f"trace: wrote {out / 'trace.csv'}")
    return 0


# -- entry point ---------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvrc",
        description="Reservoir-computing terrain analysis on complex rasters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, helptext in (
        ("synth", cmd_synth, "generate a synthetic scene and write its rasters"),
        ("aspect", cmd_aspect, "train, classify and evaluate aspect labels"),
        ("slope", cmd_slope, "train and evaluate slope-angle estimation"),
        ("sweep", cmd_sweep, "sweep reservoir size or frame size"),
        ("trace", cmd_trace, "dump reservoir signals along one scan line"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", metavar="PATH", help="plain-text key=value config")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--seed", type=int, metavar="N", help="top-level seed override")
        p.add_argument("--baseline", choices=("cvrc", "rvrc", "neighbor"),
                       default="cvrc", help="method to run")
        p.add_argument("--trace", metavar="SPEC",
                       help="scan line, e.g. i=210 or j=270:10-400")
        p.add_argument("--dynamics", choices=("simplified", "general"),
                       default="simplified", help="state-update dynamics variant")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        return args.func(cfg, args)
    except ConfigError as err:
        print(f"cvrc {args.command}: config error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"cvrc {args.command}: i/o error: {err}", file=sys.stderr)
        return 3
    except (cxnum.SolverFailure, cxnum.NoConvergence, np.linalg.LinAlgError,
            ValueError) as err:
        print(f"cvrc {args.command}: numeric failure: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
