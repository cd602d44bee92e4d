import numpy as np
import pytest

import shapelift


def make_instance(k=5, p=12, z=2, seed=7, **kwargs):
    return shapelift.synth_instance(k, p, z, seed, **kwargs)


def test_synth_instance_shapes_and_determinism():
    a = make_instance()
    b = make_instance()
    assert a["points"].shape == (2, 12)
    assert len(a["bases"]) == 5
    assert all(basis.shape == (3, 12) for basis in a["bases"])
    assert np.array_equal(a["points"], b["points"])
    assert np.count_nonzero(a["true_coeffs"]) == 2
    assert a["seed"] == 7


def test_solve_noiseless_recovers_the_planted_motion():
    inst = make_instance(seed=11)
    res = shapelift.solve_noiseless(inst["points"], inst["visibility"], inst["bases"])
    assert res["converged"]
    rel = np.linalg.norm(res["coeffs"] - np.abs(inst["true_coeffs"])) / np.linalg.norm(
        inst["true_coeffs"]
    )
    assert rel < 1e-2
    assert res["shape"].shape == (3, 12)
    assert len(res["rotations"]) == 5
    assert res["tightness"].shape == (5,)


def test_solve_noisy_handles_occlusions():
    inst = make_instance(seed=13, noise_sigma=0.02)
    visibility = inst["visibility"].copy()
    visibility[0] = False
    res = shapelift.solve_noisy(
        inst["points"], visibility, inst["bases"], lam=0.05, tol=1e-4, max_iter=500
    )
    assert res["objective"] > 0.0
    assert res["iterations"] <= 500


def test_solve_altmin_warm_start():
    inst = make_instance(seed=17, shared_rotation=True)
    cold = shapelift.solve_altmin(inst["points"], inst["visibility"], inst["bases"], lam=0.05)
    warm = shapelift.solve_altmin(
        inst["points"], inst["visibility"], inst["bases"], lam=0.05, warm=True
    )
    hist = np.asarray(cold["objective_history"])
    assert np.all(np.diff(hist) <= 1e-9)
    assert warm["objective_history"][-1] <= cold["objective_history"][-1] + 1e-6
    assert cold["rotation"].shape == (3, 3)


def test_prox_spectral_and_l1_projection():
    y = np.array([[3.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    x = shapelift.prox_spectral(y, 100.0)
    assert np.allclose(x, 0.0)

    v = np.array([3.0, -1.0, 0.5])
    proj = shapelift.project_l1_ball(v, 1.0)
    assert abs(np.abs(proj).sum() - 1.0) < 1e-12


def test_reconstruction_error_is_zero_for_identical_shapes():
    shape = np.random.default_rng(0).normal(size=(3, 10))
    assert shapelift.reconstruction_error(shape, shape) < 1e-12


def test_learn_dictionary_smoke():
    rng = np.random.default_rng(1)
    shapes = []
    for _ in range(6):
        s = rng.normal(size=(3, 9))
        shapes.append(s - s.mean(axis=1, keepdims=True))
    res = shapelift.learn_dictionary(shapes, 2, beta=0.01)
    assert len(res["bases"]) == 2
    assert res["coeffs"].shape == (2, 6)
    assert res["coeffs"].min() >= 0.0
    hist = np.asarray(res["objective_history"])
    assert np.all(np.diff(hist) <= 1e-9)


def test_invalid_input_raises_value_error():
    inst = make_instance()
    with pytest.raises(ValueError):
        shapelift.solve_noisy(
            inst["points"][:, :5], inst["visibility"], inst["bases"], lam=0.1
        )
    with pytest.raises(ValueError):
        shapelift.project_l1_ball(np.array([1.0, 2.0]), -1.0)
