import numpy as np
import pytest

from cvrc import raster, synthscene
from cvrc.raster import (
    CLASS_EAST,
    CLASS_FLAT,
    CLASS_NORTH,
    CLASS_SOUTH,
    CLASS_WEST,
    MASKED,
)
from cvrc.synthscene import (
    DEM,
    SceneSpec,
    build_scene,
    default_regions,
    default_teacher_areas,
    dem_to_interferogram,
    generate_dem,
    ground_truth_aspect,
    ground_truth_slope,
    load_dem,
    load_grid,
    reference_scene,
    save_dem,
    save_grid,
    water_mask,
)


def flat_spec(height=30, width=30, **kw):
    return SceneSpec(width=width, height=height, flat_height=100.0, **kw)


def cone_spec(**kw):
    return SceneSpec(
        width=80, height=80, flat_height=100.0,
        cone=(40, 40, 30, 600.0), **kw,
    )


class TestGenerateDem:
    def test_flat_only(self):
        dem = generate_dem(flat_spec())
        assert np.all(dem.elevation == 100.0)

    def test_cone_geometry(self):
        dem = generate_dem(cone_spec())
        assert dem.elevation[40, 40] == pytest.approx(700.0)
        # at base radius the flank reaches the plain
        assert dem.elevation[40, 70] == pytest.approx(100.0)
        assert dem.elevation[40, 40 - 15] == pytest.approx(400.0)

    def test_seed_deterministic(self):
        spec = SceneSpec(width=50, height=50, rough_mountain=(25, 25, 15, 300, 4),
                         seed=9)
        assert np.array_equal(generate_dem(spec).elevation,
                              generate_dem(spec).elevation)

    def test_lake_is_flat(self):
        spec = SceneSpec(width=60, height=60, flat_height=100.0,
                         cone=(20, 20, 15, 500.0), lake=(45, 45, 8))
        dem = generate_dem(spec)
        mask = water_mask(spec)
        assert np.unique(dem.elevation[mask]).size == 1

    def test_lake_over_cone_peak_rejected(self):
        spec = SceneSpec(width=60, height=60, cone=(30, 30, 20, 500.0),
                         lake=(32, 32, 10))
        with pytest.raises(ValueError, match="ill-posed"):
            generate_dem(spec)


class TestInterferogram:
    def test_zero_elevation_clean(self):
        spec = SceneSpec(width=30, height=30, flat_height=0.0, coherence=1.0)
        z = dem_to_interferogram(generate_dem(spec), spec)
        assert np.all(z == 1.0 + 0.0j)

    def test_half_ambiguity_is_pi(self):
        spec = SceneSpec(width=20, height=20, flat_height=40.0,
                         height_ambiguity=80.0, coherence=1.0)
        z = dem_to_interferogram(generate_dem(spec), spec)
        assert np.allclose(np.angle(z), np.pi, atol=1e-12)

    def test_clean_matches_phase_amplitude_model(self):
        spec = cone_spec(coherence=1.0)
        dem = generate_dem(spec)
        z = dem_to_interferogram(dem, spec)
        raw = 2 * np.pi * dem.elevation / spec.height_ambiguity
        expected_phase = np.mod(raw + np.pi, 2 * np.pi) - np.pi
        expected_phase[expected_phase == -np.pi] = np.pi
        gy, gx = np.gradient(dem.elevation, dem.azimuth_spacing, dem.range_spacing)
        slope = np.degrees(np.arctan(np.hypot(gx, gy)))
        expected_amp = 1.0 / (1.0 + slope / 20.0)
        assert np.allclose(np.abs(z), expected_amp, atol=1e-12)
        # compare as complex values to avoid +-pi bookkeeping
        assert np.allclose(z, expected_amp * np.exp(1j * expected_phase), atol=1e-12)

    def test_full_coherence_reproduces_clean_signal_bitwise(self):
        spec = SceneSpec(width=40, height=40, flat_height=120.0,
                         cone=(20, 20, 15, 400.0), coherence=1.0,
                         summit_scree_radius=4.0, seed=5)
        a = dem_to_interferogram(generate_dem(spec), spec)
        b = dem_to_interferogram(generate_dem(spec), spec)
        assert np.array_equal(a, b)
        # coherence 1: no noise leakage, |z| below 1 everywhere but exactly
        # the model amplitude, including the randomized scree disk
        scree = synthscene._radial(spec, 20, 20) <= 4.0
        assert np.allclose(np.abs(a[scree]), 0.05, atol=1e-12)

    def test_fringe_count_on_ramp(self):
        h_amb = 50.0
        width = 200
        slope_per_px = 2.0  # meters per pixel eastward
        elev = np.tile(slope_per_px * np.arange(width), (20, 1))
        spec = SceneSpec(width=width, height=20, height_ambiguity=h_amb,
                         coherence=1.0)
        z = dem_to_interferogram(DEM(elev, 30.0, 50.0), spec)
        raw = 2 * np.pi * elev[0] / h_amb
        # one jump each time the raw phase crosses an odd multiple of pi
        expected_wraps = int((raw[-1] / np.pi + 1) // 2)
        phases = np.angle(z[0])
        wraps = int(np.count_nonzero(np.abs(np.diff(phases)) > np.pi))
        assert wraps == expected_wraps

    def test_noise_power_balance(self):
        gamma = 0.6
        spec = SceneSpec(width=320, height=320, flat_height=0.0,
                         coherence=gamma, seed=3)
        z = dem_to_interferogram(generate_dem(spec), spec)
        # signal is exactly 1+0j everywhere: E|z|^2 = g^2 + (1 - g^2)
        expected = gamma**2 * 1.0 + (1 - gamma**2)
        measured = float(np.mean(np.abs(z) ** 2))
        assert measured == pytest.approx(expected, rel=0.05)


class TestGroundTruthAspect:
    def test_flat_dem_all_flat_with_known_threshold(self):
        dem = generate_dem(flat_spec())
        labels, tau = ground_truth_aspect(dem, [], threshold=1.0)
        assert np.all(labels == CLASS_FLAT)
        assert tau == 1.0

    def test_east_ramp_all_east(self):
        elev = np.tile(5.0 * np.arange(30), (30, 1))
        labels, _ = ground_truth_aspect(DEM(elev), [], threshold=1.0)
        assert np.all(labels == CLASS_EAST)

    def test_cone_quadrants(self):
        spec = cone_spec()
        dem = generate_dem(spec)
        areas = default_teacher_areas(spec)
        labels, tau = ground_truth_aspect(dem, areas)
        assert tau > 0
        # ascent-direction convention: west flank ascends east, and so on
        assert labels[40, 25] == CLASS_EAST
        assert labels[40, 55] == CLASS_WEST
        assert labels[25, 40] == CLASS_SOUTH
        assert labels[55, 40] == CLASS_NORTH
        corner = labels[5, 5]
        assert corner == CLASS_FLAT

    def test_offset_invariance(self):
        spec = cone_spec()
        dem = generate_dem(spec)
        areas = default_teacher_areas(spec)
        base, tau0 = ground_truth_aspect(dem, areas)
        shifted, tau1 = ground_truth_aspect(
            DEM(dem.elevation + 500.0, dem.range_spacing, dem.azimuth_spacing), areas
        )
        assert np.array_equal(base, shifted)
        assert tau0 == pytest.approx(tau1, rel=1e-12)

    def test_degenerate_threshold_rejected(self):
        spec = cone_spec()
        dem = generate_dem(flat_spec(height=80, width=80))
        with pytest.raises(ValueError, match="degenerate threshold"):
            ground_truth_aspect(dem, default_teacher_areas(spec))

    def test_water_masked_exactly(self):
        spec = SceneSpec(width=60, height=60, flat_height=100.0,
                         cone=(20, 20, 15, 500.0), lake=(45, 45, 8))
        dem = generate_dem(spec)
        water = water_mask(spec)
        labels, _ = ground_truth_aspect(dem, [], water=water, threshold=1.0)
        assert np.array_equal(labels == MASKED, water)

    def test_missing_class_rejected(self):
        dem = generate_dem(cone_spec())
        with pytest.raises(ValueError, match="five classes"):
            ground_truth_aspect(dem, [(0, raster.Rect(0, 0, 5, 5))])


class TestGroundTruthSlope:
    def test_flat_zero(self):
        dem = generate_dem(flat_spec())
        assert np.all(ground_truth_slope(dem) == 0.0)

    def test_unit_gradient_is_45_deg(self):
        elev = np.tile(30.0 * np.arange(10), (4, 1))
        slope = ground_truth_slope(DEM(elev, range_spacing=30.0))
        assert np.allclose(slope, 45.0, atol=1e-12)

    def test_cone_flank_matches_analytic(self):
        spec = cone_spec()
        dem = generate_dem(spec)
        slope = ground_truth_slope(dem)
        analytic = np.degrees(np.arctan(600.0 / 30.0 / 30.0))
        flank = slope[40, 28:36]  # west flank, ascending eastward
        assert np.abs(flank - analytic).max() < 0.1

    def test_sign_convention(self):
        elev = np.tile(10.0 * np.arange(10), (4, 1))
        assert np.all(ground_truth_slope(DEM(elev)) > 0)  # ascending eastward
        assert np.all(ground_truth_slope(DEM(elev[:, ::-1].copy())) < 0)


class TestSceneLayout:
    def test_reference_scene_scales(self):
        for size in (160, 200, 400):
            spec = reference_scene(size, size, coherence=0.7, seed=1)
            areas = default_teacher_areas(spec)
            assert {label for label, _ in areas} == {0, 1, 2, 3, 4}
            for _, rect in areas:
                assert rect.top >= 0 and rect.left >= 0
                assert rect.top + rect.height <= size
                assert rect.left + rect.width <= size
            for rect in default_regions(spec).values():
                assert rect.top + rect.height <= size
                assert rect.left + rect.width <= size

    def test_build_scene_bundles_everything(self):
        spec = reference_scene(120, 120, coherence=0.9, seed=2)
        scene = build_scene(spec)
        assert scene.diff_ew.shape == (120, 120)
        assert scene.truth.aspect.shape == (120, 120)
        assert scene.truth.threshold > 0
        assert np.array_equal(scene.truth.aspect == MASKED, scene.truth.water_mask)
        # teacher rectangles big enough for the largest swept frame
        for _, rect in scene.teacher_areas:
            assert rect.height >= 18 and rect.width >= 18

    def test_teacher_areas_match_truth_labels(self):
        # every pixel of each teacher rectangle carries that class in truth
        spec = reference_scene(200, 200, coherence=0.8, seed=3)
        scene = build_scene(spec)
        for label, rect in scene.teacher_areas:
            block = scene.truth.aspect[rect.slices()]
            assert np.all(block == label), f"class {label}"


class TestFiles:
    def test_dem_round_trip(self, tmp_path):
        dem = generate_dem(cone_spec())
        path = tmp_path / "d.dem1"
        save_dem(path, dem)
        loaded = load_dem(path)
        assert loaded.range_spacing == 30.0
        assert loaded.azimuth_spacing == 50.0
        assert np.allclose(loaded.elevation, dem.elevation, atol=1e-3)
        assert path.read_bytes()[:4] == b"DEM1"

    def test_grid_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        grid = rng.standard_normal((7, 9)) * 40
        path = tmp_path / "g.grd1"
        save_grid(path, grid)
        assert np.allclose(load_grid(path), grid, atol=1e-3)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.dem1"
        path.write_bytes(b"JUNK" + b"\x00" * 32)
        with pytest.raises(ValueError, match="DEM1"):
            load_dem(path)
        with pytest.raises(ValueError, match="GRD1"):
            load_grid(path)
