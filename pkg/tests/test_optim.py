import numpy as np
import pytest

from corrcolor import autograd as ag
from corrcolor.autograd import parameter
from corrcolor.optim import Adam, OptimizerError


class TestAdam:
    def test_moves_against_gradient_sign(self):
        p = parameter([1.0])
        opt = Adam({"p": p}, lr=0.1)
        p.grad = np.array([1.0])
        opt.step()
        assert p.data[0] < 1.0

    def test_zero_gradient_is_fixed_point_without_decay(self):
        p = parameter([0.5, -0.3])
        opt = Adam({"p": p}, lr=0.1, weight_decay=0.0)
        before = p.data.copy()
        for _ in range(5):
            p.grad = np.zeros(2)
            opt.step()
        np.testing.assert_array_equal(p.data, before)

    def test_zero_gradient_with_decay_shrinks_parameters(self):
        p = parameter([1.0])
        opt = Adam({"p": p}, lr=0.1, weight_decay=0.1)
        p.grad = np.array([0.0])
        opt.step()
        assert abs(p.data[0]) < 1.0

    def test_quadratic_loss_decreases_every_step(self):
        target = np.array([1.0, 1.0])
        w = parameter(np.zeros(2))
        opt = Adam({"w": w}, lr=0.1)
        losses = []
        for _ in range(10):
            loss = ag.tsum(ag.square(ag.sub(w, target)))
            loss.backward()
            losses.append(loss.item())
            opt.step()
            opt.zero_grad()
        final = ag.tsum(ag.square(ag.sub(w, target))).item()
        losses.append(final)
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_missing_gradient_raises(self):
        p = parameter([1.0])
        opt = Adam({"p": p}, lr=0.1)
        with pytest.raises(OptimizerError, match="missing gradient.*'p'"):
            opt.step()

    def test_step_counter_increments(self):
        p = parameter([1.0])
        opt = Adam({"p": p}, lr=0.1)
        for expected in (1, 2, 3):
            p.grad = np.array([0.1])
            opt.step()
            assert opt.step_count == expected

    def test_state_roundtrip_preserves_trajectory(self):
        def train(steps, opt, p):
            history = []
            for _ in range(steps):
                loss = ag.tsum(ag.square(p))
                loss.backward()
                opt.step()
                opt.zero_grad()
                history.append(p.data.copy())
            return history

        p1 = parameter([2.0, -1.0])
        opt1 = Adam({"p": p1}, lr=0.05)
        straight = train(6, opt1, p1)

        p2 = parameter([2.0, -1.0])
        opt2 = Adam({"p": p2}, lr=0.05)
        train(3, opt2, p2)
        state = opt2.state_dict()

        p3 = parameter(p2.data.copy())
        opt3 = Adam({"p": p3}, lr=0.05)
        opt3.load_state_dict(state)
        resumed = train(3, opt3, p3)

        np.testing.assert_array_equal(straight[-1], resumed[-1])

    def test_accumulator_shapes_match_parameters(self):
        params = {"a": parameter(np.zeros((2, 3))), "b": parameter(np.zeros(4))}
        opt = Adam(params, lr=0.1)
        assert opt.m["a"].shape == (2, 3)
        assert opt.v["b"].shape == (4,)
