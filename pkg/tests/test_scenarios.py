import json
import math

import numpy as np
import pytest

from precodekit.errors import UnknownScenario
from precodekit.model import Architecture, ConstraintKind, ObjectiveKind
from precodekit.scenarios import (PRESENCE, ScenarioDescriptor, generate_channel,
                                  instantiate_scenario, load_catalog, noise_variance)


def test_noise_variance_examples():
    assert noise_variance(0) == 1.0
    assert noise_variance(10) == pytest.approx(0.1, rel=1e-15)
    assert noise_variance(5) == pytest.approx(0.316228, abs=1e-6)


def test_noise_variance_five_db_ratio():
    snrs = np.linspace(-20, 40, 25)
    vals = [noise_variance(s) for s in snrs]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    for a in snrs:
        assert noise_variance(a + 5) / noise_variance(a) == pytest.approx(10 ** -0.5, rel=1e-14)


def test_generate_channel_determinism_and_moments():
    a = generate_channel((100, 1000), 7)
    np.testing.assert_array_equal(a, generate_channel((100, 1000), 7))
    assert 0.98 <= np.mean(np.abs(a) ** 2) <= 1.02
    assert 0.48 <= np.var(a.real) <= 0.52
    assert 0.48 <= np.var(a.imag) <= 0.52


def test_scenario_examples():
    _, t1 = instantiate_scenario(1, 0, 3)
    assert t1.obj is ObjectiveKind.POWER_MIN
    users = sorted(c.user for c in t1.constraints_of(ConstraintKind.PER_USER_RATE))
    assert users == list(range(t1.sys.K))
    _, t3 = instantiate_scenario(3, 0, 3)
    assert t3.sys.architecture is Architecture.ONE_BIT
    assert t3.first("OneBit") is not None and t3.first("CiMargin") is not None
    _, t6 = instantiate_scenario(6, 0, 3)
    assert t6.first("TotalPower") is not None and t6.first("InterferenceTemperature") is not None


@pytest.mark.parametrize("sid", range(1, 10))
@pytest.mark.parametrize("snr", [0.0, 12.5, 25.0])
def test_presence_table_and_description(sid, snr):
    D, theta = instantiate_scenario(sid, snr, 11)
    assert theta.ch.present() == PRESENCE[sid]
    assert theta.sigma2 == noise_variance(snr)
    entry = load_catalog().entry(sid)
    assert entry["objective_phrase"] in D.text


def test_determinism_and_common_channels():
    _, a = instantiate_scenario(8, 0, 5)
    _, b = instantiate_scenario(8, 0, 5)
    _, c = instantiate_scenario(8, 20, 5)
    assert a.to_json() == b.to_json()
    np.testing.assert_array_equal(a.H, c.H)
    np.testing.assert_array_equal(a.ch.G_si, c.ch.G_si)
    _, d = instantiate_scenario(8, 0, 6)
    assert not np.array_equal(a.H, d.H)


@pytest.mark.parametrize("sid", range(1, 10))
def test_descriptor_json_round_trip(sid):
    _, theta = instantiate_scenario(sid, 5, 1)
    back = ScenarioDescriptor.from_json(theta.to_json())
    assert back.to_json() == theta.to_json()
    data = json.loads(theta.to_json())
    assert set(data) == {"sys", "ch", "obj", "con", "seed", "snr_db"}


def test_unknown_scenario():
    with pytest.raises(UnknownScenario):
        instantiate_scenario(42, 0, 0)


def test_catalog_override(tmp_path):
    entry = dict(load_catalog().entry(8), scenario_id=10, name="Small sum rate", N_t=4, K=2)
    path = tmp_path / "extra.json"
    path.write_text(json.dumps({"scenarios": [entry]}))
    cat = load_catalog(path)
    assert len(cat) == 10 and len(load_catalog()) == 9
    _, theta = instantiate_scenario(10, 0, 0, cat)
    assert theta.H.shape == (2, 4)


def test_descriptor_rejects_bad_presence():
    _, theta = instantiate_scenario(6, 0, 0)
    data = theta.to_dict()
    data["ch"]["g"] = None
    with pytest.raises(ValueError):
        ScenarioDescriptor.from_dict(data)
    assert math.isfinite(theta.p_max)
