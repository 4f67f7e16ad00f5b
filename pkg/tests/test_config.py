import logging
from importlib import resources

import pytest
from hypothesis import given, settings, strategies as st

from uavmimo import config as C


def test_defaults_match_reference_setup(default_cfg):
    c = default_cfg
    assert (c.deployment.isd, c.deployment.tiers, c.deployment.bs_height) == (500.0, 3, 25.0)
    assert c.deployment.users_per_sector == 15.0 and c.deployment.indoor_fraction == 0.8
    assert c.channel.carrier_ghz == 2.0
    assert (c.radio.bs_power_dbm, c.radio.n_prbs, c.radio.overhead_symbols) == (46.0, 50, 3)
    assert (c.radio.nf_bs_db, c.radio.nf_ue_db) == (7.0, 9.0)
    assert (c.antenna.downtilt, c.antenna.element_max_gain, c.antenna.hpbw_az) == (12.0, 8.0, 65.0)
    assert c.antenna.array("su").n_antennas == 16 and c.antenna.array("mu").n_antennas == 128
    assert (c.uplink.p_max, c.uplink.p0, c.uplink.alpha) == (23.0, -58.0, 0.5)
    assert (c.mac.k_max_su, c.mac.k_max_mu) == (1, 8)
    assert c.experiment.drops == 500


def test_round_trip(default_cfg):
    cfg = default_cfg.with_(experiment={"mode": "mu", "csi": "r3ep", "uav_height": 150.0, "master_seed": 2 ** 63},
                            channel={"k_factor_db": 7.25}, mac={"shuffle": True})
    text = C.to_string(cfg)
    back = C.from_string(text)
    assert back == cfg
    assert C.to_string(back) == text


@settings(max_examples=50, deadline=None)
@given(st.floats(1.5, 300), st.floats(0, 1), st.integers(1, 10 ** 6), st.floats(-20, 20, allow_subnormal=False))
def test_round_trip_property(h, ratio, drops, nf):
    cfg = C.ExperimentConfig().with_(experiment={"uav_height": h, "drops": drops},
                                     deployment={"uav_ratio": ratio}, radio={"nf_ue_db": nf})
    assert C.from_string(C.to_string(cfg)) == cfg


def test_packaged_default_file(default_cfg):
    text = resources.files("uavmimo").joinpath("data/default.ini").read_text()
    assert C.from_string(text) == default_cfg


def test_partial_file_uses_defaults(tmp_path, default_cfg):
    p = tmp_path / "c.ini"
    p.write_text("[experiment]\nmode = mu  # digital array\ndrops = 3\n")
    cfg = C.load(p)
    assert cfg.mode == "mu" and cfg.experiment.drops == 3
    assert cfg.deployment == default_cfg.deployment
    C.save(cfg, tmp_path / "out.ini")
    assert C.load(tmp_path / "out.ini") == cfg


@pytest.mark.parametrize("text,field", [
    ("[experiment]\ndrops = 0\n", "[experiment] drops"),
    ("[experiment]\nmode = hybrid\n", "[experiment] mode"),
    ("[experiment]\ncsi = magic\n", "[experiment] csi"),
    ("[experiment]\nuav_height = 500\n", "[experiment] uav_height"),
    ("[experiment]\ndrops = many\n", "[experiment] drops"),
    ("[deployment]\ntiers = 5\n", "[deployment] tiers"),
    ("[deployment]\nuav_ratio = 1.5\n", "[deployment] uav_ratio"),
    ("[uplink]\nalpha = -0.1\n", "[uplink] alpha"),
    ("[radio]\noverhead_symbols = 14\n", "[radio] overhead_symbols"),
    ("[mac]\nshuffle = maybe\n", "[mac] shuffle"),
    ("[deployment]\nflux = 1\n", "[deployment] flux"),
    ("[weather]\nrain = 1\n", "[weather]"),
])
def test_errors_name_the_field(text, field):
    with pytest.raises(C.ConfigError) as err:
        C.from_string(text)
    assert str(err.value).startswith(field)


def test_malformed_file():
    with pytest.raises(C.ConfigError):
        C.from_string("no section header\n")


def test_csi_ignored_in_single_user_mode(caplog, default_cfg):
    cfg = default_cfg.with_(experiment={"csi": "r3pc"})
    with caplog.at_level(logging.WARNING):
        assert C.effective_csi(cfg) is None
    assert "ignored" in caplog.text
    assert C.effective_csi(cfg.with_(experiment={"mode": "mu"})) == "r3pc"


def test_uniform_height_keyword():
    cfg = C.from_string("[experiment]\nuav_height = uniform\n")
    assert cfg.experiment.uav_height is None
