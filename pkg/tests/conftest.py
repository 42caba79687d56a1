import numpy as np
import pytest

from waverom.synth import PulseSpec, SpeedSpec, SynthSpec, synth_field


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def single_pulse():
    """Noiseless single gaussian pulse at 2 px/step on K=180."""
    spec = SynthSpec(
        n_space=180, n_time=80,
        pulses=(PulseSpec(position=20.0, width=4.0, speed=SpeedSpec(value=2.0)),),
    )
    return synth_field(spec)


@pytest.fixture
def parallel_pulses():
    """Two co-moving pulses separated by K/2, noiseless."""
    spec = SynthSpec(
        n_space=180, n_time=60,
        pulses=(
            PulseSpec(position=20.0, width=4.0, speed=SpeedSpec(value=2.0)),
            PulseSpec(position=110.0, width=4.0, speed=SpeedSpec(value=2.0)),
        ),
    )
    return synth_field(spec)
