import numpy as np
import pytest

from cvrc import cxnum, readout
from cvrc.readout import (
    ReadoutModel,
    TrainingBatch,
    assemble_design,
    build_teacher,
    forward,
    forward_batch,
    load_model,
    save_model,
    train,
)
from cvrc.reservoir import REALPAIR

from _oracles import ridge_params_oracle


class TestAssembleDesign:
    def test_single_state(self):
        out = assemble_design([[0.5, 0.5j]])
        assert np.array_equal(out, np.array([[0.5, 0.5j, 1.0]]))

    def test_shape(self):
        rng = np.random.default_rng(1)
        states = rng.standard_normal((7, 3)) + 1j * rng.standard_normal((7, 3))
        out = assemble_design(states)
        assert out.shape == (7, 4)

    def test_bias_column_is_ones(self):
        rng = np.random.default_rng(2)
        out = assemble_design(rng.standard_normal((5, 2)))
        assert np.all(out[:, -1] == 1.0)

    def test_ragged_rejected(self):
        with pytest.raises(ValueError):
            assemble_design([[1.0, 2.0], [1.0]])


class TestBuildTeacher:
    def test_north_row(self):
        out = build_teacher([0], 5)
        assert np.array_equal(out[0], np.array([1, -1, -1, -1, -1], dtype=complex))

    def test_flat_row(self):
        out = build_teacher([4], 5)
        assert np.array_equal(out[0], np.array([-1, -1, -1, -1, 1], dtype=complex))

    def test_exactly_one_positive_per_row(self):
        rng = np.random.default_rng(3)
        labels = rng.integers(0, 5, size=40)
        out = build_teacher(labels, 5)
        assert np.all((out == 1).sum(axis=1) == 1)
        assert np.all((out == -1).sum(axis=1) == 4)

    def test_row_sums(self):
        rng = np.random.default_rng(4)
        for n_classes in (2, 5, 9):
            labels = rng.integers(0, n_classes, size=16)
            out = build_teacher(labels, n_classes)
            assert np.all(out.sum(axis=1) == 2 - n_classes)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            build_teacher([5], 5)
        with pytest.raises(ValueError):
            build_teacher([-1], 5)


class TestTrain:
    def test_interpolation_regime(self):
        # N == n_res + 1 independent states: lam = 0 reproduces targets.
        rng = np.random.default_rng(5)
        states = rng.standard_normal((5, 4)) + 1j * rng.standard_normal((5, 4))
        targets = build_teacher([0, 1, 2, 3, 4], 5)
        model = train(TrainingBatch(states, targets, 0.0))
        outs = forward_batch(model, states)
        assert np.abs(outs - targets).max() < 1e-8

    def test_shrinkage_limit(self):
        rng = np.random.default_rng(6)
        states = rng.standard_normal((20, 4)) + 1j * rng.standard_normal((20, 4))
        targets = rng.standard_normal((20, 3)) + 1j * rng.standard_normal((20, 3))
        model = train(TrainingBatch(states, targets, 1e12))
        assert np.abs(model.w_out).max() < 1e-6

    def test_matches_normal_equation_oracle(self):
        rng = np.random.default_rng(7)
        states = rng.standard_normal((12, 5)) + 1j * rng.standard_normal((12, 5))
        targets = rng.standard_normal((12, 2)) + 1j * rng.standard_normal((12, 2))
        lam = 1e-6
        model = train(TrainingBatch(states, targets, lam))
        expected = ridge_params_oracle(assemble_design(states), targets, lam)
        got = np.hstack([model.w_out, model.b_out[:, None]])
        assert np.abs(got - expected).max() <= 1e-8 * np.abs(expected).max()

    def test_monotone_shrinkage(self):
        rng = np.random.default_rng(8)
        states = rng.standard_normal((30, 6)) + 1j * rng.standard_normal((30, 6))
        targets = rng.standard_normal((30, 4)) + 1j * rng.standard_normal((30, 4))
        norms = []
        for lam in (0.0, 1e-6, 1e-3, 1e-1, 10.0, 1e3):
            model = train(TrainingBatch(states, targets, lam))
            norms.append(np.linalg.norm(model.w_out))
        assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))

    def test_mismatched_batch_rejected(self):
        with pytest.raises(ValueError):
            TrainingBatch(np.ones((3, 2)), np.ones((2, 1)), 0.0)


class TestForward:
    def test_bias_only(self):
        model = ReadoutModel(
            w_out=np.zeros((2, 3), dtype=complex),
            b_out=np.array([1.0, -1.0], dtype=complex),
        )
        out = forward(model, np.ones(3))
        assert np.array_equal(out, np.array([1.0, -1.0], dtype=complex))

    def test_identity_selects_column(self):
        model = ReadoutModel(
            w_out=np.eye(3, dtype=complex),
            b_out=np.array([0.0, 0.5, 0.0], dtype=complex),
        )
        out = forward(model, np.array([0.0, 1.0, 0.0]))
        assert np.array_equal(out, np.array([0.0, 1.5, 0.0], dtype=complex))

    def test_round_trip_on_training_state(self):
        rng = np.random.default_rng(9)
        states = rng.standard_normal((6, 5)) + 1j * rng.standard_normal((6, 5))
        targets = build_teacher([0, 1, 2, 3, 4, 0], 5)
        model = train(TrainingBatch(states, targets, 0.0))
        for i in range(6):
            assert np.abs(forward(model, states[i]) - targets[i]).max() < 1e-6

    def test_dimension_checks(self):
        model = ReadoutModel(
            w_out=np.zeros((2, 3), dtype=complex), b_out=np.zeros(2, dtype=complex)
        )
        with pytest.raises(ValueError):
            forward(model, np.ones(4))
        with pytest.raises(ValueError):
            forward_batch(model, np.ones((5, 4)))


class TestPersistence:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(10)
        model = ReadoutModel(
            w_out=rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4)),
            b_out=rng.standard_normal(3) + 1j * rng.standard_normal(3),
            value_domain=REALPAIR,
        )
        path = tmp_path / "model.cvm1"
        save_model(model, path)
        loaded = load_model(path)
        assert np.array_equal(loaded.w_out, model.w_out)
        assert np.array_equal(loaded.b_out, model.b_out)
        assert loaded.value_domain == REALPAIR
        assert path.read_bytes()[:4] == b"CVM1"

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bogus.cvm1"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ValueError, match="CVM1"):
            load_model(path)

    def test_truncated_rejected(self, tmp_path):
        model = ReadoutModel(
            w_out=np.ones((1, 1), dtype=complex), b_out=np.zeros(1, dtype=complex)
        )
        path = tmp_path / "model.cvm1"
        save_model(model, path)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(ValueError, match="truncated"):
            load_model(path)


def test_train_uses_regularized_solver_contract():
    # Rank-deficient design at lam = 0 surfaces the solver failure.
    states = np.ones((4, 3), dtype=complex)
    targets = np.ones((4, 2), dtype=complex)
    with pytest.raises(cxnum.SolverFailure):
        train(TrainingBatch(states, targets, 0.0))
