import numpy as np
import pytest

from splitwit.dicke import coherent_state_x, rotate, squeezed_frame_state
from splitwit.errors import InvalidArgument, InvalidSpec
from splitwit.specs import (WitnessSpec, d_spec, euler_matrix, named_spec,
                            s_spec, witness_value)
from splitwit.witness import (noise_summary, optimize_rotations, robustness, search_optimal,
                              split_summary)


def test_euler_matrix_matches_scipy():
    from scipy.spatial.transform import Rotation
    angles = np.random.default_rng(0).uniform(-3, 3, size=(5, 3))
    for a in angles:
        assert np.allclose(euler_matrix(a), Rotation.from_euler("ZYZ", a).as_matrix(), atol=1e-14)


def test_spec_round_trips():
    spec = d_spec()
    assert np.array_equal(WitnessSpec.from_text(spec.to_text()).to_vector(), spec.to_vector())
    assert WitnessSpec.from_text("# comment\n1, 0 0 0 1 0 0 0 -1\n0 0 0 0 0 0\n").order == 1
    assert d_spec().is_symmetric() and s_spec().swapped().is_symmetric()
    with pytest.raises(InvalidSpec):
        named_spec("Q")


def test_s_in_squeezed_frame_needs_no_rotation():
    state = squeezed_frame_state(40, 0.0058)
    summary = split_summary(state)
    w_opt, angles = optimize_rotations(s_spec(), summary, restarts=8, seed=1)
    assert abs(w_opt - witness_value(s_spec(), summary)) < 1e-6 * abs(w_opt)


def test_isotropic_noise_gives_zero():
    w_opt, _ = optimize_rotations(s_spec().normalized(), noise_summary(30), restarts=4)
    assert abs(w_opt) < 1e-10


def test_rotating_the_state_keeps_optimum():
    state = squeezed_frame_state(24, 0.01)
    turned = rotate(rotate(state, "y", 0.7), "z", -1.1)
    a, _ = optimize_rotations(d_spec(), split_summary(state), restarts=8)
    b, _ = optimize_rotations(d_spec(), split_summary(turned), restarts=8)
    assert abs(a - b) < 1e-6 * max(1, abs(a))


def test_robustness_invariants():
    state = squeezed_frame_state(20, 0.0058)
    r = robustness(s_spec(), state)
    assert r.detected and 0 < r.p_star < 1
    # order 1: the white-noise value vanishes, so p* W_opt equals the bound
    assert abs(r.noise_value) < 1e-12
    assert r.p_star * r.witness_value_opt >= r.bound - 1e-8
    assert abs(robustness(s_spec().scaled(7.5), state).p_star - r.p_star) < 1e-9
    lifted = s_spec().as_order2()
    assert abs(robustness(lifted, state).p_star - r.p_star) < 1e-9
    turned = rotate(rotate(state, "x", 0.4), "y", 1.3)
    assert abs(robustness(s_spec(), turned).p_star - r.p_star) < 1e-4
    rd = robustness(d_spec(), state)
    lhs = rd.p_star * rd.witness_value_opt + (1 - rd.p_star) * rd.noise_value
    assert abs(lhs - rd.bound) < 1e-8


@pytest.mark.parametrize("name", ["S", "D"])
def test_coherent_state_not_detected(name):
    r = robustness(named_spec(name), coherent_state_x(16))
    assert not r.detected and r.p_star == 1.0


def test_d_more_tolerant_at_large_n():
    state = squeezed_frame_state(500, 0.0058)
    ps = robustness(s_spec(), state).p_star
    pd = robustness(d_spec(), state).p_star
    assert pd < ps


def test_search_order1_small():
    state = squeezed_frame_state(10, 0.0058)
    ref = robustness(s_spec(), state).p_star
    res = search_optimal(state, 1, restarts=1, seed=0, refine=1)
    assert res.detected and res.p_star <= ref + 1e-3
    again = search_optimal(state, 1, restarts=1, seed=0, refine=1)
    assert again.p_star == res.p_star
    assert np.array_equal(again.spec.to_vector(), res.spec.to_vector())


def test_search_rejects_bad_order():
    with pytest.raises(InvalidArgument):
        search_optimal(squeezed_frame_state(4, 0.1), 3)


def test_summary_rotation_consistency():
    state = squeezed_frame_state(8, 0.1)
    summary = split_summary(state)
    ra, rb = euler_matrix([0.3, 1.0, -0.2]), euler_matrix([1.2, -0.5, 0.9])
    rot = summary.rotated(ra, rb)
    assert np.allclose(rot.cross, ra @ summary.cross @ rb.T)
    assert abs(np.trace(rot.second_a) - np.trace(summary.second_a)) < 1e-12
