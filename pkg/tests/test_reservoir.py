import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from analog_readout import InvalidParameterError, ReservoirParams, make_mask, run_reservoir
from analog_readout.reservoir import evolve


def params(n, mask=None, **kw):
    if mask is None:
        mask = make_mask(n, 3)
    return ReservoirParams(n_nodes=n, mask=mask, **kw)


class TestMakeMask:
    def test_single_node_in_range(self):
        m = make_mask(1, seed=7)
        assert m.shape == (1,)
        assert -1.0 <= m[0] <= 1.0

    def test_deterministic(self):
        np.testing.assert_array_equal(make_mask(64, seed=7), make_mask(64, seed=7))

    def test_golden_first_entry(self):
        # numpy default_rng(42).uniform(-1, 1)
        assert make_mask(64, seed=42)[0] == pytest.approx(0.5479120971119267, abs=1e-15)

    def test_range(self):
        m = make_mask(1000, seed=1)
        assert np.all(np.abs(m) <= 1.0)

    def test_zero_nodes_rejected(self):
        with pytest.raises(InvalidParameterError):
            make_mask(0, seed=1)


class TestParams:
    def test_mask_length_checked(self):
        with pytest.raises(InvalidParameterError):
            ReservoirParams(n_nodes=3, mask=[0.1, 0.2])

    def test_mask_range_checked(self):
        with pytest.raises(InvalidParameterError):
            ReservoirParams(n_nodes=2, mask=[0.1, 1.5])

    @pytest.mark.parametrize("k", [-1, 4])
    def test_desync_offset_range(self, k):
        with pytest.raises(InvalidParameterError):
            params(4, desync_offset=k)

    def test_theta_positive(self):
        with pytest.raises(InvalidParameterError):
            params(4, theta=0.0)

    def test_unstable_feedback_warns(self):
        with pytest.warns(RuntimeWarning):
            params(4, feedback_gain=1.2)

    def test_stable_feedback_silent(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            params(4, feedback_gain=0.9)

    def test_delay_duration(self):
        p = params(64, theta=130e-9)
        assert p.delay_duration == pytest.approx(65 * 130e-9)
        assert p.loop_duration == pytest.approx(64 * 130e-9)


class TestRunReservoir:
    def test_zero_drive_gives_zero_states(self):
        p = params(8, input_gain=0.0, phase=0.0)
        trace = run_reservoir(p, np.linspace(-3, 3, 20))
        assert np.all(trace.states == 0.0)

    def test_memoryless_when_feedback_off(self):
        p = params(5, input_gain=0.7, feedback_gain=0.0, phase=0.3)
        u = np.random.default_rng(0).normal(size=30)
        trace = run_reservoir(p, u, initial_state=np.full(5, 0.4))
        expected = np.sin(0.7 * p.mask[:, None] * u[None, :] + 0.3)
        np.testing.assert_allclose(trace.states, expected, rtol=0, atol=1e-15)

    def test_two_node_hand_evaluation(self):
        p = ReservoirParams(n_nodes=2, mask=[1.0, -1.0], input_gain=0.5,
                            feedback_gain=0.5, phase=0.0, desync_offset=1)
        trace = run_reservoir(p, [1.0, 1.0])
        x = trace.states
        assert x[0, 0] == pytest.approx(math.sin(0.5), abs=1e-15)
        assert x[1, 0] == pytest.approx(math.sin(-0.5), abs=1e-15)
        # node 2 at step 1 reads node 1 at step 0
        assert x[1, 1] == pytest.approx(math.sin(-0.5 + 0.5 * math.sin(0.5)), abs=1e-15)
        # node 1 at step 1 wraps to node 2 at step -1, the zero initial state
        assert x[0, 1] == pytest.approx(math.sin(0.5), abs=1e-15)

    def test_wrap_reads_two_steps_back(self):
        # brute-force recurrence written out node by node
        n, k, L = 5, 2, 12
        p = params(n, input_gain=0.4, feedback_gain=0.6, phase=0.2, desync_offset=k)
        u = np.random.default_rng(5).normal(size=L)
        x0 = np.random.default_rng(6).uniform(-1, 1, n)
        ref = np.zeros((n, L))

        def past(i, step):
            return x0[i] if step < 0 else ref[i, step]

        for step in range(L):
            for i in range(n):
                if i >= k:
                    fb = past(i - k, step - 1)
                else:
                    fb = past(n + i - k, step - 2)
                ref[i, step] = math.sin(0.4 * p.mask[i] * u[step] + 0.6 * fb + 0.2)
        trace = run_reservoir(p, u, initial_state=x0)
        np.testing.assert_allclose(trace.states, ref, rtol=0, atol=1e-15)

    def test_no_desync(self):
        p = params(3, input_gain=0.3, feedback_gain=0.5, desync_offset=0)
        u = [1.0, -1.0, 0.5]
        x = run_reservoir(p, u).states
        expected = np.sin(0.3 * p.mask * u[2] + 0.5 * x[:, 1])
        np.testing.assert_allclose(x[:, 2], expected, atol=1e-15)

    def test_initial_state_length_checked(self):
        with pytest.raises(InvalidParameterError):
            run_reservoir(params(4), [1.0, 2.0], initial_state=np.zeros(3))

    def test_non_finite_input_rejected(self):
        with pytest.raises(InvalidParameterError):
            run_reservoir(params(4), [1.0, np.nan])

    def test_shape(self):
        trace = run_reservoir(params(7), np.zeros(13))
        assert trace.states.shape == (7, 13)
        assert (trace.n_nodes, trace.length) == (7, 13)
        assert trace.design.shape == (13, 7)

    def test_batched_matches_single_bitwise(self):
        mask = make_mask(6, 1)
        u = np.random.default_rng(2).normal(size=40)
        combos = [(0.1, 0.8, 0.0), (0.3, 0.5, 0.4)]
        batch = evolve([c[0] for c in combos], [c[1] for c in combos],
                       [c[2] for c in combos], mask, u, np.zeros(6))
        for j, (a, b, phi) in enumerate(combos):
            p = ReservoirParams(6, mask, input_gain=a, feedback_gain=b, phase=phi)
            np.testing.assert_array_equal(run_reservoir(p, u).states, batch[j].T)


def hops(n, k, steps):
    """Number of feedback hops from each (node, step) back to the initial state."""
    e = np.zeros((n, steps), dtype=int)
    for step in range(steps):
        for i in range(n):
            src_i, src_step = (i - k, step - 1) if i >= k else (n + i - k, step - 2)
            e[i, step] = 1 + (e[src_i, src_step] if src_step >= 0 else 0)
    return e


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 12),
    beta=st.floats(-0.95, 0.95),
    alpha=st.floats(-2, 2),
    phase=st.floats(-math.pi, math.pi),
    seed=st.integers(0, 2**32 - 1),
)
def test_fading_memory(n, beta, alpha, phase, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(0, n))
    p = ReservoirParams(n, rng.uniform(-1, 1, n), input_gain=alpha,
                        feedback_gain=beta, phase=phase, desync_offset=k)
    u = rng.normal(0, 2, 60)
    a = rng.uniform(-1, 1, n)
    b = rng.uniform(-1, 1, n)
    diff = np.abs(run_reservoir(p, u, a).states - run_reservoir(p, u, b).states)
    bound = abs(beta) ** hops(n, k, 60) * np.max(np.abs(a - b))
    assert np.all(diff <= bound + 1e-12)


@settings(max_examples=40, deadline=None)
@given(
    alpha=st.floats(-50, 50),
    beta=st.floats(-3, 3),
    phase=st.floats(-10, 10),
    u=st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40),
)
def test_states_bounded_and_deterministic(alpha, beta, phase, u):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        p = ReservoirParams(4, [0.5, -1.0, 1.0, 0.1], input_gain=alpha,
                            feedback_gain=beta, phase=phase)
    first = run_reservoir(p, u).states
    assert np.all(np.abs(first) <= 1.0)
    np.testing.assert_array_equal(first, run_reservoir(p, u).states)
