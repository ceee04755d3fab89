import pytest

from cogaccess import SensingProfile, SystemParams, default_profile, default_params
from cogaccess.sensing import TABLE_I


def params_with_instants(m: int) -> SystemParams:
    base = default_params()
    return SystemParams(
        noise_density=base.noise_density,
        power_primary=base.power_primary,
        power_secondary=base.power_secondary,
        bandwidth_hz=base.bandwidth_hz,
        slot_seconds=base.slot_seconds,
        sensing_quantum_seconds=base.slot_seconds / m,
        packet_bits=base.packet_bits,
    )


def truncated_profile(m: int) -> SensingProfile:
    return SensingProfile(TABLE_I[:m], TABLE_I[:m])


@pytest.fixture
def params():
    return default_params()


@pytest.fixture
def profile():
    return default_profile(10)


@pytest.fixture
def params_m2():
    return params_with_instants(2)


@pytest.fixture
def profile_m2():
    return truncated_profile(2)
