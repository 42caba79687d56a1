import numpy as np
import pytest

from waverom.errors import ConditioningError
from waverom.library import build_library
from waverom.sr3 import fit_sr3, speed_model_to_json
from waverom.tracking import PeakPoint, WaveTrack


def _track(label, unwrapped, k_space=1000):
    points = [PeakPoint(t, float(x % k_space), 1.0) for t, x in enumerate(unwrapped)]
    return WaveTrack(label=label, points=points, unwrapped_x=np.asarray(unwrapped, float))


def test_linear_library_terms():
    lib = build_library({"linear"})
    assert lib.names == ["1", "t"]


def test_linear_sin_library_terms():
    lib = build_library({"linear", "sin"}, sin_freqs=(0.1,))
    assert lib.names == ["1", "t", "sin(0.1 t)", "cos(0.1 t)"]


def test_polynomial_adds_t_squared():
    lib = build_library({"linear", "polynomial"}, poly_degree=2)
    assert lib.names == ["1", "t", "t^2"]


def test_library_errors():
    with pytest.raises(ValueError):
        build_library({"sin"})  # missing frequency grid
    with pytest.raises(ValueError):
        build_library({"exp"}, exp_rates=())
    with pytest.raises(ValueError):
        build_library({"polynomial"}, poly_degree=1)
    with pytest.raises(ValueError):
        build_library({"wavelets"})
    with pytest.raises(ValueError):
        build_library(set())


def test_library_evaluate_shape():
    lib = build_library({"linear", "exp"}, exp_rates=(0.1,))
    matrix = lib.evaluate(np.arange(5.0))
    assert matrix.shape == (5, 3)
    assert np.allclose(matrix[:, 0], 1.0)
    assert np.allclose(matrix[:, 2], np.exp(0.1 * np.arange(5.0)))


def test_regularization_free_limit_matches_least_squares(rng):
    # oracle: ordinary least squares via lstsq, computed independently
    t = np.arange(60, dtype=float)
    truth = 1.5 + 0.3 * t + 2.0 * np.sin(0.2 * t)
    lib = build_library({"linear", "sin"}, sin_freqs=(0.2, 0.5))
    theta = lib.evaluate(t)
    coef_oracle = np.linalg.lstsq(theta, truth, rcond=None)[0]

    model = fit_sr3([_track(0, truth)], lib, lam=0.0, zeta=1e8)
    assert np.allclose(model.coefficients[:, 0], coef_oracle, atol=1e-6)


def test_lambda_zero_satisfies_normal_equations(rng):
    t = np.arange(80, dtype=float)
    x = 3.0 + 0.5 * t + rng.normal(0, 0.3, size=80)
    lib = build_library({"linear", "sin"}, sin_freqs=(0.7,))
    model = fit_sr3([_track(0, x)], lib, lam=0.0, zeta=1.0, max_iter=2000, tol=1e-15)
    theta = lib.evaluate(t)
    residual = theta.T @ (x - theta @ model.coefficients[:, 0])
    assert np.linalg.norm(residual) <= 1e-8 * np.linalg.norm(theta.T @ x)


def test_sparse_recovery_l1_sweep():
    t = np.arange(50, dtype=float)
    x = 3.0 * t
    lib = build_library({"linear", "polynomial", "sin"}, poly_degree=2, sin_freqs=(1.0,))
    hits = []
    for lam in (0.001, 0.005, 0.01, 0.05):
        model = fit_sr3([_track(0, x)], lib, lam=lam, zeta=1.0, regularizer="l1")
        active = model.active_terms(0)
        if active == ["t"]:
            coef = model.sparse_coefficients[lib.names.index("t"), 0]
            hits.append(abs(coef - 3.0) <= 0.01)
    assert any(hits)


def test_sparse_recovery_l0_exact():
    t = np.arange(50, dtype=float)
    x = 3.0 * t
    lib = build_library({"linear", "polynomial", "sin"}, poly_degree=2, sin_freqs=(1.0,))
    model = fit_sr3([_track(0, x)], lib, lam=0.5, zeta=1.0, regularizer="l0")
    assert model.active_terms(0) == ["t"]
    assert model.sparse_coefficients[lib.names.index("t"), 0] == pytest.approx(3.0, abs=1e-8)


@pytest.mark.parametrize("regularizer", ["l1", "l0"])
def test_objective_non_increasing_random_instances(rng, regularizer):
    lib = build_library({"linear", "sin"}, sin_freqs=(0.3, 0.9))
    for _ in range(20):
        n = int(rng.integers(10, 40))
        x = rng.normal(size=n).cumsum()
        model = fit_sr3([_track(0, x)], lib, lam=float(rng.uniform(0.01, 1.0)),
                        zeta=1.0, regularizer=regularizer, max_iter=50)
        diffs = np.diff(model.objective_history)
        assert np.all(diffs <= 1e-9)


def test_multi_wave_columns_align(parallel_pulses):
    from waverom.tracking import cluster_waves, detect_ridges

    field, _ = parallel_pulses
    points = detect_ridges(field, min_prominence=0.3, min_separation=5)
    tracks = cluster_waves(points, 2, kernel_scale=5.0, k_space=180)
    model = fit_sr3(tracks, build_library({"linear"}), lam=0.0, zeta=1e6)
    assert model.coefficients.shape == (2, 2)
    assert model.coefficients[1, 0] == pytest.approx(2.0, abs=1e-6)
    assert model.coefficients[1, 1] == pytest.approx(2.0, abs=1e-6)
    assert model.mask.shape == (len(points), 2)
    assert np.all(model.mask.sum(axis=1) == 1.0)


def test_rank_deficient_library_raises():
    lib = build_library({"constant", "exp"}, exp_rates=(0.0,))  # exp(0 t) duplicates 1
    with pytest.raises(ConditioningError, match="zeta"):
        fit_sr3([_track(0, 2.0 * np.ones(30))], lib, lam=0.0, zeta=1e14)


def test_too_few_points_raises():
    lib = build_library({"linear", "polynomial"}, poly_degree=3)
    with pytest.raises(ValueError, match="needs >="):
        fit_sr3([_track(0, [1.0, 2.0])], lib)


def test_model_json_export(tmp_path):
    t = np.arange(40, dtype=float)
    lib = build_library({"linear"})
    model = fit_sr3([_track(0, 5.0 + 2.0 * t)], lib, lam=0.0, zeta=1e6)
    import json

    doc = json.loads(speed_model_to_json(model, tmp_path / "model.json"))
    assert [term["name"] for term in doc["terms"]] == ["1", "t"]
    assert doc["converged"] is True
    assert np.isclose(doc["coefficients"][1][0], 2.0, atol=1e-6)


def test_predict_evaluates_trajectory():
    t = np.arange(40, dtype=float)
    lib = build_library({"linear"})
    model = fit_sr3([_track(0, 5.0 + 2.0 * t)], lib, lam=0.0, zeta=1e6)
    assert model.predict([0.0, 10.0]) == pytest.approx([5.0, 25.0], abs=1e-5)
