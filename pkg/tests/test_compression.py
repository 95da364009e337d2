import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semoffload.compression import (
    CompressionInstance,
    eta_bounds,
    exact_user_oracle,
    initial_anchor,
    relaxed_feasible,
    round_and_recover,
    sca_iterate,
    sca_linearize,
    solve_compression,
    solve_inner_convex,
    solve_without_compression,
    surrogate_value,
)
from semoffload.config import FitParams
from semoffload.errors import AnchorError, UserInfeasibleError

from .instances import random_compression_instances

FIT = FitParams()


def one(Bd, Bb, Bg, a=1000.0, t=0.02, y=85.0):
    return CompressionInstance([Bd], [Bb], [Bg], [a], [t], [y], FIT)


def test_accuracy_floor_example():
    lo, hi, ok = eta_bounds(one(0.05, 0.01, 0.0))
    expected = (80 / 15) ** (1 / 0.6) / 1000
    assert lo[0] == pytest.approx(expected, rel=1e-12)
    assert lo[0] == pytest.approx(0.01628, abs=1e-5)
    assert ok[0]


def test_unreachable_accuracy_blocks_offload():
    _, _, ok = eta_bounds(one(0.05, 0.01, 0.0, y=100.0))
    assert not ok[0]


def test_interval_contains_one_when_deadline_is_loose():
    lo, hi, ok = eta_bounds(one(0.05, 0.01, 0.0, t=0.02))
    assert ok[0] and lo[0] <= 1.0 and hi[0] == 1.0


def test_linearize_at_anchor_is_exact():
    inst = one(0.03, 0.05, 1e-3)
    sur = sca_linearize(inst, [0.6], [0.5])
    assert sur.bound(0.6, 0.5)[0] == pytest.approx(np.log(inst.denominator(0.6, 0.5))[0], rel=1e-14)


def test_equal_local_and_offload_constants_give_zero_x_slope():
    sur = sca_linearize(one(0.03, 0.03, 0.0), [0.5], [0.7])
    assert sur.slope_x[0] == 0.0


def test_anchor_with_nonpositive_delay():
    with pytest.raises(AnchorError):
        sca_linearize(one(0.03, 0.05, 0.0), [1.0], [0.0])


def test_surrogate_overestimates_log_delay():
    rng = np.random.default_rng(0)
    inst = random_compression_instances(rng, 50)
    x_a = rng.uniform(0, 1, 50)
    eta_a = rng.uniform(1 - x_a, 1)
    eta_a = np.maximum(eta_a, 0.01)
    sur = sca_linearize(inst, x_a, eta_a)
    for _ in range(200):
        x = rng.uniform(0, 1, 50)
        eta = rng.uniform(np.maximum(1 - x, 1e-3), 1)
        assert np.all(sur.bound(x, eta) >= np.log(inst.denominator(x, eta)) - 1e-12)


def test_offloading_dominant_relaxation_goes_to_one():
    inst = one(0.05, 0.005, 1e-4)
    sol = solve_inner_convex(inst, sca_linearize(inst, *initial_anchor(inst)))
    assert sol.x[0] == pytest.approx(1.0)
    assert sol.feasible[0]


def test_local_dominant_instance_rounds_to_local():
    inst = one(0.005, 1.0, 1e-4)
    sol = solve_inner_convex(inst, sca_linearize(inst, [0.0], [1.0]))
    out = round_and_recover(inst, sol.x, sol.eta)
    assert out.offload[0] == 0 and out.eta[0] == 1 and out.ratio[0] == 1


@pytest.mark.parametrize("seed", range(5))
def test_inner_step_never_below_anchor(seed):
    rng = np.random.default_rng(seed)
    inst = random_compression_instances(rng, 100)
    x0, eta0 = initial_anchor(inst)
    sur = sca_linearize(inst, x0, eta0)
    sol = solve_inner_convex(inst, sur)
    anchor_ok = relaxed_feasible(inst, x0, eta0) & inst.can_offload
    before = surrogate_value(inst, sur, x0, eta0)
    after = surrogate_value(inst, sur, sol.x, sol.eta)
    assert np.all(after[anchor_ok] >= before[anchor_ok] - 1e-12)


def test_sca_trace_monotone():
    for seed in range(100):
        inst = random_compression_instances(np.random.default_rng(seed), 10)
        state = sca_iterate(inst, *initial_anchor(inst))
        assert np.all(np.diff(state.trace) >= -1e-9), seed


def test_sca_fixed_point():
    inst = random_compression_instances(np.random.default_rng(3), 30)
    first = sca_iterate(inst, *initial_anchor(inst), tol=1e-4)
    assert first.converged
    again = sca_iterate(inst, first.x, first.eta, tol=1e-4)
    assert again.iterations == 1
    assert abs(again.trace[-1] - again.trace[0]) <= 1e-4


def test_sca_zero_iterations_returns_init():
    inst = random_compression_instances(np.random.default_rng(4), 5)
    x0, eta0 = initial_anchor(inst)
    state = sca_iterate(inst, x0, eta0, max_iter=0)
    assert state.iterations == 0 and len(state.trace) == 1
    assert np.array_equal(state.x, x0) and np.array_equal(state.eta, eta0)
    assert state.trace[0] == pytest.approx(float(np.sum(inst.objective(x0, eta0))))


def test_rounding_example():
    inst = one(0.019, 0.1, 1e-4)
    out = round_and_recover(inst, [0.97], [0.02])
    assert out.offload[0] == 1
    assert out.ratio[0] == pytest.approx(50.0)


def test_rounding_integral_local():
    inst = one(0.005, 1.0, 1e-4)
    out = round_and_recover(inst, [0.0], [1.0])
    assert out.offload[0] == 0 and out.ratio[0] == 1


def test_rounding_without_offload_option():
    inst = one(0.015, np.inf, 0.0)
    out = round_and_recover(inst, [0.8], [0.3])
    assert out.offload[0] == 0


def test_both_branches_infeasible():
    inst = one(0.05, 2.0, 1e-3)
    with pytest.raises(UserInfeasibleError):
        exact_user_oracle(inst)
    with pytest.raises(UserInfeasibleError):
        round_and_recover(inst, [0.5], [0.5])


def test_tie_between_branches():
    inst = one(0.01, 0.01, 0.0)
    assert inst.objective(1.0, 1.0)[0] == inst.objective(0.0, 1.0)[0]


@pytest.mark.parametrize("seed", range(3))
def test_rounded_output_feasible_and_below_oracle(seed):
    inst = random_compression_instances(np.random.default_rng(seed), 200)
    sol, _ = solve_compression(inst)
    oracle = exact_user_oracle(inst)
    assert np.all(oracle.objective >= sol.objective - 1e-6)
    off = sol.offload > 0
    delay = np.where(off, inst.denominator(1.0, sol.eta), inst.local_delay)
    assert np.all(delay <= inst.delay_limit * (1 + 1e-9))
    alpha = inst.raw_volume * sol.eta
    assert np.all(FIT.p - FIT.q * alpha ** -FIT.r >= inst.accuracy_limit * (1 - 1e-9))
    assert np.all(np.isin(sol.offload, [0.0, 1.0])) and np.all(sol.ratio >= 1)


def test_without_compression_keeps_full_volume():
    inst = random_compression_instances(np.random.default_rng(9), 100)
    lo, hi, ok = eta_bounds(inst)
    full_ok = ok & (hi >= 1.0)
    if not np.any(full_ok | inst.local_ok()):
        pytest.skip("no uncompressed branch available")
    keep = np.flatnonzero(full_ok | inst.local_ok())
    sol = solve_without_compression(inst.subset(keep))
    assert np.all(sol.eta == 1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_offload_objective_is_quasiconcave_in_eta(seed, u, v, w):
    # ln of (concave accuracy / affine delay): the midpoint never falls below both ends
    inst = random_compression_instances(np.random.default_rng(seed), 1)
    lo, hi, ok = eta_bounds(inst)
    if not ok[0]:
        return
    e1 = lo + (hi - lo) * u
    e2 = lo + (hi - lo) * v
    em = w * e1 + (1 - w) * e2
    f = lambda e: inst.objective(1.0, e)[0]
    assert f(em) >= min(f(e1), f(e2)) - 1e-12
