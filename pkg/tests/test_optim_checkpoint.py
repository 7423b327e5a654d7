"""Adam update algebra, checkpoint round trips, and LSTM cell gradients."""

import numpy as np
import pytest

from crashsynth.grad import ops
from crashsynth.grad.check import gradient_check
from crashsynth.grad.checkpoint import load_checkpoint, save_checkpoint
from crashsynth.grad.layers import LSTMCell, ParamBank
from crashsynth.grad.optim import AdamState, adam_step
from crashsynth.grad.tensor import Tensor


def rng_for(seed):
    return np.random.Generator(np.random.PCG64(seed))


class TestAdam:
    def test_zero_gradient_zero_moments_leaves_parameters_unchanged(self):
        p = Tensor(np.array([1.5, -2.0]), requires_grad=True)
        state = AdamState()
        adam_step(state, {"p": p}, {"p": np.zeros(2)})
        np.testing.assert_array_equal(p.data, [1.5, -2.0])

    def test_constant_gradient_moves_against_its_sign(self):
        p = Tensor(np.array([0.0, 0.0]), requires_grad=True)
        state = AdamState()
        g = np.array([3.0, -0.25])
        for _ in range(50):
            adam_step(state, {"p": p}, {"p": g})
        assert p.data[0] < 0.0
        assert p.data[1] > 0.0

    def test_first_step_from_zero_moments_matches_hand_formula(self):
        # m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
        p = Tensor(np.array([0.0]), requires_grad=True)
        state = AdamState(lr=1e-3)
        adam_step(state, {"p": p}, {"p": np.array([1.0])})
        expected = -1e-3 * 1.0 / (1.0 + 1e-8)
        assert p.data[0] == pytest.approx(expected, rel=1e-12)

    def test_shape_mismatch_rejected(self):
        p = Tensor(np.zeros((2, 2)), requires_grad=True)
        with pytest.raises(ValueError, match="shape"):
            adam_step(AdamState(), {"p": p}, {"p": np.zeros(3)})

    def test_step_counter_strictly_increases(self):
        p = Tensor(np.zeros(1), requires_grad=True)
        state = AdamState()
        for expected in (1, 2, 3):
            adam_step(state, {"p": p}, {"p": np.ones(1)})
            assert state.step == expected


class TestCheckpoint:
    def test_bit_exact_round_trip(self, tmp_path):
        rng = rng_for(5)
        arrays = {
            "enc.w": rng.normal(size=(7, 3)),
            "enc.b": rng.normal(size=3),
            "head.w": np.array([[np.pi], [-1e300], [5e-324]]),
        }
        meta = {"kind": "test", "width": 3}
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, arrays, meta)
        loaded, loaded_meta = load_checkpoint(path)
        assert loaded_meta == meta
        assert set(loaded) == set(arrays)
        for name in arrays:
            assert loaded[name].shape == arrays[name].shape
            assert loaded[name].tobytes() == arrays[name].tobytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ValueError, match="magic"):
            load_checkpoint(path)


class TestLSTMCell:
    def test_single_step_all_gates_pass_gradient_check(self):
        rng = rng_for(31)
        bank = ParamBank()
        cell = LSTMCell(bank, "cell", n_in=2, n_hidden=3, rng=rng)
        x = Tensor(rng.normal(size=(2, 2)))
        proj = rng.normal(size=(2, 3))

        def f():
            h, c = cell.initial_state(2)
            h, c = cell.step(x, (h, c))
            return ops.reduce_sum(ops.mask_mul(h, proj))

        assert gradient_check(f, bank.as_dict()) < 1e-4

    def test_unrolled_steps_pass_gradient_check(self):
        rng = rng_for(32)
        bank = ParamBank()
        cell = LSTMCell(bank, "cell", n_in=2, n_hidden=3, rng=rng)
        xs = [Tensor(rng.normal(size=(1, 2))) for _ in range(3)]
        proj = rng.normal(size=(1, 3))

        def f():
            state = cell.initial_state(1)
            for x in xs:
                h, c = cell.step(x, state)
                state = (h, c)
            return ops.reduce_sum(ops.mask_mul(state[0], proj))

        assert gradient_check(f, bank.as_dict()) < 1e-4
