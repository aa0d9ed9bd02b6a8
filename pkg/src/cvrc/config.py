"""Plain-text run configuration: ``key = value`` pairs with strict keys.

Unknown keys are rejected outright.  Geometric keys default to ``auto`` and
are resolved against the scene layout, so one config scales from quick test
scenes to the full reference scene.  Flags given on the command line win
over file values.
"""

from __future__ import annotations

from pathlib import Path

from .raster import CLASS_NAMES, Rect
from .synthscene import SceneSpec, default_regions, default_teacher_areas, reference_scene

AUTO = "auto"
NONE = "none"


class ConfigError(Exception):
    """Malformed configuration file or value."""


def _parse_number(text: str) -> float:
    try:
        return float(text)
    except ValueError as err:
        raise ConfigError(f"expected a number, got {text!r}") from err


def _parse_int(text: str) -> int:
    value = _parse_number(text)
    if value != int(value):
        raise ConfigError(f"expected an integer, got {text!r}")
    return int(value)


def _parse_numbers(text: str):
    items = [tok.strip() for tok in text.split(",") if tok.strip()]
    return tuple(_parse_number(tok) for tok in items)


def _parse_ints(text: str):
    items = [tok.strip() for tok in text.split(",") if tok.strip()]
    return tuple(_parse_int(tok) for tok in items)


# key -> (parser, default-as-text); parsers run on assignment.
_SCHEMA = {
    "seed": (_parse_int, "1"),
    "io.scene_dir": (str, "scene"),
    "scene.width": (_parse_int, "400"),
    "scene.height": (_parse_int, "400"),
    "scene.flat_height_m": (_parse_number, "120"),
    "scene.range_spacing_m": (_parse_number, "30"),
    "scene.azimuth_spacing_m": (_parse_number, "50"),
    "scene.cone": (str, AUTO),
    "scene.rough_mountain": (str, AUTO),
    "scene.lake": (str, AUTO),
    "scene.height_ambiguity_m": (_parse_number, "80"),
    "scene.coherence": (_parse_number, "0.7"),
    "scene.scree_radius_px": (str, AUTO),
    "aspect.n_w": (_parse_int, "5"),
    "aspect.n_t": (_parse_int, "5"),
    "aspect.per_area": (_parse_int, "1000"),
    "aspect.lambda": (_parse_number, "1e-12"),
    "aspect.n_res": (_parse_int, "5"),
    "aspect.init_spectral_radius": (_parse_number, "0.16"),
    "aspect.spectral_radius": (_parse_number, "0.10"),
    "aspect.leak_rate": (_parse_number, "0.30"),
    "aspect.input_scale": (_parse_number, "1.0"),
    "aspect.delta": (_parse_number, "1.0"),
    "aspect.time_const": (_parse_number, "1.0"),
    "slope.n_res": (_parse_int, "300"),
    "slope.spectral_radius": (_parse_number, "0.90"),
    "slope.init_spectral_radius": (_parse_number, "0.90"),
    "slope.leak_rate": (_parse_number, "0.80"),
    "slope.lambda": (_parse_number, "1e-12"),
    "slope.delay": (_parse_int, "5"),
    "slope.n_w": (_parse_int, "5"),
    "slope.input_scale": (_parse_number, "1.0"),
    "slope.train_rows": (str, AUTO),
    "slope.eval_rows": (str, AUTO),
    "slope.cols": (str, AUTO),
    "sweep.kind": (str, "neurons"),
    "sweep.neurons": (str, "1,5,15,30,40,50"),
    "sweep.frames": (str, "1,5,50"),
    "trace.line": (str, ""),
}
_AREA_KEYS = {f"area.{name}": (str, AUTO) for name in CLASS_NAMES}
_SCHEMA.update(_AREA_KEYS)
_REGION_PREFIX = "region."


class RunConfig:
    """Typed view over the parsed key/value pairs."""

    def __init__(self, values: dict[str, object], regions: dict[str, str]):
        self._values = values
        self._region_text = regions

    @classmethod
    def defaults(cls) -> "RunConfig":
        values = {key: parser(default) for key, (parser, default) in _SCHEMA.items()}
        return cls(values, {})

    @classmethod
    def load(cls, path) -> "RunConfig":
        cfg = cls.defaults()
        text = Path(path).read_text(encoding="utf-8")
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            cfg.set(key, value, where=f"{path}:{lineno}")
        return cfg

    def set(self, key: str, value: str, where: str = "override") -> None:
        if key.startswith(_REGION_PREFIX):
            name = key[len(_REGION_PREFIX):]
            if not name.isidentifier():
                raise ConfigError(f"{where}: bad region name {name!r}")
            self._region_text[name] = value
            return
        if key not in _SCHEMA:
            raise ConfigError(f"{where}: unknown key {key!r}")
        parser, _ = _SCHEMA[key]
        try:
            self._values[key] = parser(value)
        except ConfigError as err:
            raise ConfigError(f"{where}: {key}: {err}") from err

    def __getitem__(self, key: str):
        return self._values[key]

    # -- resolution against the scene geometry --------------------------------

    def scene_spec(self, seed: int) -> SceneSpec:
        width = self["scene.width"]
        height = self["scene.height"]
        auto = reference_scene(width, height, coherence=self["scene.coherence"], seed=seed)

        def feature(key: str, auto_value, arity: int):
            text = str(self[key]).strip()
            if text == AUTO:
                return auto_value
            if text == NONE:
                return None
            values = _parse_numbers(text)
            if len(values) != arity:
                raise ConfigError(f"{key}: expected {arity} numbers, got {len(values)}")
            return values

        scree_text = str(self["scene.scree_radius_px"]).strip()
        scree = auto.summit_scree_radius if scree_text == AUTO else _parse_number(scree_text)
        return SceneSpec(
            width=width,
            height=height,
            flat_height=self["scene.flat_height_m"],
            range_spacing=self["scene.range_spacing_m"],
            azimuth_spacing=self["scene.azimuth_spacing_m"],
            cone=feature("scene.cone", auto.cone, 4),
            rough_mountain=feature("scene.rough_mountain", auto.rough_mountain, 5),
            lake=feature("scene.lake", auto.lake, 3),
            height_ambiguity=self["scene.height_ambiguity_m"],
            coherence=self["scene.coherence"],
            summit_scree_radius=scree,
            seed=seed,
        )

    def teacher_areas(self, spec: SceneSpec) -> list[tuple[int, Rect]]:
        auto_areas = dict((label, rect) for label, rect in default_teacher_areas(spec))
        areas = []
        for class_index, name in enumerate(CLASS_NAMES):
            text = str(self[f"area.{name}"]).strip()
            if text == AUTO:
                rect = auto_areas[class_index]
            else:
                values = _parse_ints(text)
                if len(values) != 4:
                    raise ConfigError(f"area.{name}: expected top,left,height,width")
                rect = Rect(*values)
            areas.append((class_index, rect))
        return areas

    def regions(self, spec: SceneSpec) -> dict[str, Rect]:
        if not self._region_text:
            return default_regions(spec)
        regions = {}
        for name, text in self._region_text.items():
            values = _parse_ints(text)
            if len(values) != 4:
                raise ConfigError(f"region.{name}: expected top,left,height,width")
            regions[name] = Rect(*values)
        return regions

    def slope_rows(self, spec: SceneSpec) -> tuple[tuple, tuple, int, int]:
        """(train_rows, eval_rows, col_start, col_stop) resolved to the scene."""
        h, w = spec.height, spec.width
        text = str(self["slope.train_rows"]).strip()
        if text == AUTO:
            train_rows = tuple(round(f * h) for f in (0.25, 0.375, 0.50, 0.625, 0.75))
        else:
            train_rows = _parse_ints(text)
        text = str(self["slope.eval_rows"]).strip()
        if text == AUTO:
            eval_rows = (round(0.50 * h), round(0.825 * h))
        else:
            eval_rows = _parse_ints(text)
        text = str(self["slope.cols"]).strip()
        if text == AUTO:
            col_start, col_stop = round(0.05 * w), round(0.95 * w)
        else:
            cols = _parse_ints(text)
            if len(cols) != 2:
                raise ConfigError("slope.cols: expected start,stop")
            col_start, col_stop = cols
        if not train_rows or not eval_rows:
            raise ConfigError("slope rows must be nonempty")
        return train_rows, eval_rows, col_start, col_stop

    def sweep_grid(self, kind: str) -> list[int]:
        key = "sweep.neurons" if kind == "neurons" else "sweep.frames"
        values = _parse_ints(str(self[key]))
        return [int(v) for v in values]
