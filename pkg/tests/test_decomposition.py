import numpy as np
import pytest

from waverom.decomposition import POD, RobustPCA, pod, rpca
from waverom.field import SpatiotemporalField
from waverom.frames import ShiftSpec, shift_field
from waverom.synth import PulseSpec, SpeedSpec, SynthSpec, synth_field


def test_pod_rank_one_outer_product(rng):
    a = rng.normal(size=30)  # spatial
    b = rng.normal(size=50)  # temporal
    data = np.outer(b, a)  # (T, K)
    decomp = pod(data, rank=3)
    assert decomp.singular_values[0] > 1e-8
    assert np.all(decomp.singular_values[1:] < 1e-10 * decomp.singular_values[0])
    mode = decomp.modes[:, 0]
    unit = a / np.linalg.norm(a)
    assert min(np.linalg.norm(mode - unit), np.linalg.norm(mode + unit)) < 1e-10


def test_pod_modes_orthonormal(rng):
    data = rng.normal(size=(40, 25))
    decomp = pod(data, rank=10)
    gram = decomp.modes.T @ decomp.modes
    assert np.abs(gram - np.eye(10)).max() <= 1e-10


def test_pod_singular_values_match_full_svd(rng):
    # oracle: svdvals of the data matrix computed directly
    data = rng.normal(size=(30, 20))
    expected = np.linalg.svd(data.T, compute_uv=False)
    decomp = pod(data, rank=5)
    assert np.allclose(decomp.singular_values, expected[:5], atol=1e-10)
    assert decomp.total_energy == pytest.approx(float(np.sum(expected**2)))


def test_pod_full_rank_reconstruction(rng):
    data = rng.normal(size=(25, 15))
    decomp = pod(data, rank=15)
    err = np.linalg.norm(decomp.reconstruct() - data) / np.linalg.norm(data)
    assert err <= 1e-8


def test_pod_rank_validation(rng):
    data = rng.normal(size=(10, 8))
    with pytest.raises(ValueError):
        pod(data, rank=0)
    with pytest.raises(ValueError):
        pod(data, rank=9)


def test_pod_energy_straightened_vs_lab():
    spec = SynthSpec(
        n_space=120, n_time=400,
        pulses=(PulseSpec(position=30.0, width=5.0, speed=SpeedSpec(value=3.0)),),
    )
    field, _ = synth_field(spec)
    lab = pod(field, 1)
    straightened = shift_field(field, ShiftSpec(3.0 * np.arange(400), "linear"))
    straight = pod(straightened, 1)
    assert straight.energy_fractions[0] >= 0.9
    assert lab.energy_fractions[0] < 0.5


def test_rpca_zero_matrix():
    low_rank, sparse = rpca(np.zeros((10, 12)))
    assert np.all(low_rank == 0.0)
    assert np.all(sparse == 0.0)


def _planted(rng, n=60, m=200, rank=2, spike_fraction=0.01, spike_scale=10.0):
    low = rng.normal(size=(n, rank)) @ rng.normal(size=(rank, m))
    sparse = np.zeros((n, m))
    n_spikes = int(spike_fraction * n * m)
    idx = rng.choice(n * m, n_spikes, replace=False)
    sparse.flat[idx] = spike_scale * rng.choice([-1.0, 1.0], n_spikes)
    return low, sparse


def test_rpca_planted_recovery(rng):
    low, sparse = _planted(rng)
    got_low, got_sparse = rpca(low + sparse)
    rel = np.linalg.norm(got_low - low) / np.linalg.norm(low)
    assert rel <= 1e-4


def test_rpca_feasibility_any_input(rng):
    data = rng.normal(size=(30, 40)) * 5.0
    low_rank, sparse = rpca(data)
    assert np.abs(low_rank + sparse - data).max() <= 1e-6


def test_rpca_rank_bound_on_planted(rng):
    low, sparse = _planted(rng, rank=2)
    got_low, _ = rpca(low + sparse)
    svals = np.linalg.svd(got_low, compute_uv=False)
    assert np.all(svals[2:] < 1e-6 * svals[0])


def test_rpca_field_in_field_out(single_pulse):
    field, _ = single_pulse
    low_rank, sparse = rpca(field)
    assert isinstance(low_rank, SpatiotemporalField)
    assert low_rank.dt == field.dt
    assert np.abs(low_rank.values + sparse.values - field.values).max() <= 1e-6


def test_rpca_nonconvergence_flagged(rng):
    data = rng.normal(size=(20, 20))
    with pytest.warns(RuntimeWarning, match="feasibility"):
        rpca(data, max_iter=2)


def test_pod_estimator_round_trip(rng):
    data = rng.normal(size=(40, 25))
    est = POD(rank=25).fit(data)
    coeffs = est.transform(data)
    assert coeffs.shape == (40, 25)
    back = est.inverse_transform(coeffs)
    assert np.allclose(back, data, atol=1e-8)
    assert est.get_params() == {"rank": 25}


def test_robust_pca_estimator(rng):
    low, sparse = _planted(rng, n=30, m=60)
    est = RobustPCA()
    got = est.fit_transform(low + sparse)
    assert est.converged_
    assert np.linalg.norm(got - low) / np.linalg.norm(low) <= 1e-3
