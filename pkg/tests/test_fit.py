import numpy as np
import pytest
from oracles import central_difference

from uwsim.fit import (
    DegenerateProblemError,
    FitProblem,
    _mse_and_grad,
    fit,
    forward_mse,
    gradient,
)
from uwsim.optics import WaterProfile, simulate_classic
from uwsim.scenes import depth_ramp, textured_image

TRUE = WaterProfile((0.8, 0.3, 0.2), (0.7, 0.8, 0.9))
INIT = WaterProfile((0.1, 0.1, 0.1), (0.5, 0.5, 0.5))


def problem(clean, depth, observed, init=INIT, **kw):
    return FitProblem(clean, depth, observed, init, **kw)


def test_forward_mse_self_consistent(scene64):
    clean, depth = scene64
    p = problem(clean, depth, simulate_classic(clean, depth, TRUE))
    assert forward_mse(p, TRUE) == pytest.approx(0, abs=1e-30)
    assert forward_mse(p, WaterProfile((0.9, 0.3, 0.2), TRUE.veiling)) > 0


def test_constant_scene_equal_to_veiling():
    a = (0.3, 0.4, 0.5)
    clean = np.broadcast_to(np.array(a), (8, 8, 3)).copy()
    depth = depth_ramp(8, 8)
    p = problem(clean, depth, np.full((8, 8, 3), 0.2))
    m1 = forward_mse(p, WaterProfile((0.1, 0.2, 0.3), a))
    m2 = forward_mse(p, WaterProfile((2.0, 1.0, 3.0), a))
    assert m1 == pytest.approx(m2, abs=1e-15)
    g_beta, _ = gradient(p, WaterProfile((0.5, 0.5, 0.5), a))
    assert np.all(g_beta == 0)


def test_gradient_zero_at_truth(scene64):
    clean, depth = scene64
    p = problem(clean, depth, simulate_classic(clean, depth, TRUE))
    gb, ga = gradient(p, TRUE)
    assert np.linalg.norm(np.concatenate([gb, ga])) <= 1e-8


@pytest.mark.parametrize("seed", range(10))
def test_gradient_matches_finite_difference(seed):
    r = np.random.default_rng(seed)
    clean = r.random((16, 16, 3))
    depth = 0.4 + 9.6 * r.random((16, 16))
    observed = r.random((16, 16, 3))
    p = problem(clean, depth, observed)
    theta = np.concatenate([r.uniform(0.05, 1.0, 3), r.uniform(0.05, 0.95, 3)])
    analytic = _mse_and_grad(p, theta)[1]
    numeric = central_difference(lambda th: _mse_and_grad(p, th, want_grad=False)[0], theta)
    assert np.allclose(analytic, numeric, rtol=1e-4, atol=1e-10)


def test_fit_round_trip(scene64):
    clean, depth = scene64
    res = fit(problem(clean, depth, simulate_classic(clean, depth, TRUE)))
    assert res.converged
    assert res.final_mse <= 1e-8
    assert np.allclose(res.profile.beta, TRUE.beta, atol=1e-3)
    assert np.allclose(res.profile.veiling, TRUE.veiling, atol=1e-3)
    assert res.gradient_norm <= 1e-10


def test_fit_mse_is_monotone(scene64):
    clean, depth = scene64
    res = fit(problem(clean, depth, simulate_classic(clean, depth, TRUE), max_iters=60))
    hist = np.array(res.mse_history)
    assert np.all(np.diff(hist) <= 0)
    assert res.iterations <= 60


def test_fit_clean_observed_drives_beta_to_zero(scene64):
    clean, depth = scene64
    res = fit(problem(clean, depth, clean, init=WaterProfile((0.5, 0.5, 0.5), (0.2, 0.6, 0.4))))
    assert max(res.profile.beta) < 1e-3
    assert res.final_mse < 1e-10


def test_fit_noisy(scene64, rng):
    clean, depth = scene64
    observed = simulate_classic(clean, depth, TRUE) + rng.uniform(-0.01, 0.01, clean.shape)
    res = fit(problem(clean, depth, observed))
    assert np.allclose(res.profile.beta, TRUE.beta, atol=0.05)


def test_degenerate_problems(scene64):
    clean, depth = scene64
    with pytest.raises(DegenerateProblemError, match="depth"):
        fit(problem(clean, np.full_like(depth, 2.0), clean))
    flat = np.full_like(clean, 0.5)
    with pytest.raises(DegenerateProblemError, match="constant"):
        fit(problem(flat, depth, flat))


def test_problem_validation(scene64):
    clean, depth = scene64
    with pytest.raises(ValueError, match="mismatch"):
        problem(clean, depth, clean[:10])
    with pytest.raises(ValueError):
        problem(clean, depth, clean, beta_max=0.0)


def test_result_serializes(scene64):
    clean, depth = scene64
    res = fit(problem(clean, depth, simulate_classic(clean, depth, TRUE), max_iters=5))
    d = res.to_dict()
    assert set(d) == {"profile", "final_mse", "iterations", "converged", "gradient_norm"}
    assert d["iterations"] == 5 and d["converged"] is False
