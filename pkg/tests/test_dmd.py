import numpy as np
import pytest

from waverom.dmd import DMD, dmd_forecast, exact_dmd


def _rotation_data(theta=0.1, n_steps=50, u0=(1.0, 0.0)):
    """Closed-form oracle: u_{k+1} = R(theta) u_k."""
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    data = np.empty((n_steps, 2))
    data[0] = u0
    for k in range(n_steps - 1):
        data[k + 1] = rot @ data[k]
    return data


def test_rotation_eigenvalues_recovered():
    data = _rotation_data(theta=0.1)
    model = exact_dmd(data, rank=2)
    expected = np.exp(1j * np.array([0.1, -0.1]))
    got = np.sort_complex(model.eigenvalues)
    assert np.allclose(np.sort_complex(expected), got, atol=1e-10)


def test_constant_data_eigenvalue_one(rng):
    row = rng.normal(size=6)
    data = np.tile(row, (20, 1))
    model = exact_dmd(data, rank=3)  # numerical rank is 1
    assert model.rank == 1
    assert model.eigenvalues[0] == pytest.approx(1.0, abs=1e-10)
    mode = model.modes[:, 0].real
    unit = row / np.linalg.norm(row)
    align = abs(np.dot(mode / np.linalg.norm(mode), unit))
    assert align == pytest.approx(1.0, abs=1e-10)


def test_reconstruction_error_on_linear_data():
    data = _rotation_data(theta=0.27, n_steps=60)
    model = exact_dmd(data, rank=2)
    recon = dmd_forecast(model, 59)
    assert np.abs(recon - data).max() <= 1e-8


def test_forecast_initial_condition():
    data = _rotation_data(theta=0.15)
    model = exact_dmd(data, rank=2)
    assert np.allclose(dmd_forecast(model, 0)[0], data[0], atol=1e-10)


def test_forecast_matches_held_out_continuation():
    full = _rotation_data(theta=0.2, n_steps=100)
    model = exact_dmd(full[:60], rank=2)
    forecast = dmd_forecast(model, 99)
    rel = np.linalg.norm(forecast[60:] - full[60:]) / np.linalg.norm(full[60:])
    assert rel <= 1e-6


def test_unit_modulus_forecast_bounded():
    data = _rotation_data(theta=0.3, n_steps=40)
    model = exact_dmd(data, rank=2)
    forecast = dmd_forecast(model, 2000)
    norms = np.linalg.norm(forecast, axis=1)
    assert norms.max() <= norms[0] * (1.0 + 1e-6)


def test_random_diagonalizable_map_recovery(rng):
    eigs = np.array([0.95, 0.8, -0.5])
    basis = rng.normal(size=(5, 3))
    amplitude = rng.normal(size=3)
    data = np.array([basis @ (eigs**k * amplitude) for k in range(40)])
    model = exact_dmd(data, rank=3)
    assert np.allclose(np.sort(model.eigenvalues.real), np.sort(eigs), atol=1e-8)
    assert np.abs(model.eigenvalues.imag).max() <= 1e-8


def test_continuous_conversion_identity():
    data = _rotation_data(theta=0.1)
    model = exact_dmd(data, rank=2, dt=0.5)
    back = np.exp(model.continuous_eigenvalues * model.dt)
    assert np.allclose(back, model.eigenvalues, atol=1e-12)


def test_zero_data_rejected():
    with pytest.raises(ValueError, match="zero"):
        exact_dmd(np.zeros((10, 4)), rank=2)


def test_rank_bounds():
    data = _rotation_data(n_steps=10)
    with pytest.raises(ValueError):
        exact_dmd(data, rank=0)
    with pytest.raises(ValueError):
        exact_dmd(data, rank=3)


def test_scalar_series_squeezed():
    series = 0.9 ** np.arange(30)
    model = exact_dmd(series, rank=1)
    out = dmd_forecast(model, 29)
    assert out.shape == (30,)
    assert np.allclose(out, series, atol=1e-8)


def test_dmd_estimator(rng):
    data = _rotation_data(theta=0.12, n_steps=50)
    est = DMD(rank=2).fit(data)
    assert est.eigenvalues_.shape == (2,)
    pred = est.predict(49)
    assert np.abs(pred - data).max() <= 1e-8
    assert est.get_params() == {"rank": 2, "dt": 1.0}
