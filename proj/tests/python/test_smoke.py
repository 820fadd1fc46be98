import os
import pathlib

import pytest

import idmob

SCENARIOS = pathlib.Path(
    os.environ.get("IDMOB_SCENARIOS", pathlib.Path(__file__).resolve().parents[2] / "scenarios")
)


def test_geohex_roundtrip():
    code = idmob.geohex_encode(35.780516755235475, 139.57031250000003, 9)
    assert code == "XM566370240"
    lat, lon, level = idmob.geohex_decode(code)
    assert level == 9
    assert idmob.geohex_encode(lat, lon, level) == code
    coarse = idmob.geohex_encode(35.780516755235475, 139.57031250000003, 2)
    assert idmob.geohex_contains(coarse, code)
    assert idmob.spatial_filter(coarse, [code]) == [code]


def test_errors_carry_codes():
    with pytest.raises(idmob.Error) as err:
        idmob.geohex_encode(0.0, 0.0, 16)
    assert err.value.code == "LevelOutOfRange"


def test_crypto_roundtrip_and_tamper():
    master = idmob.master_from_seed(b"python smoke device")
    key = idmob.derive_key(master, 3)
    assert len(key) == 32
    assert key != idmob.derive_key(master, 4)
    for scheme in ("chacha20-poly1305", "aes-256-gcm"):
        ct = idmob.encrypt(key, b"heart rate 72", scheme)
        assert idmob.decrypt(key, ct, scheme) == b"heart rate 72"
        bad = bytes([ct[0]]) + bytes([ct[1] ^ 1]) + ct[2:]
        with pytest.raises(idmob.Error) as err:
            idmob.decrypt(key, bad, scheme)
        assert err.value.code == "AuthenticationFailure"
    assert idmob.sha256(b"abc").startswith("ba7816bf")


def test_market_purchase_flow():
    m = idmob.Market(seed=1)
    vendor, device, customer = (m.create_account() for _ in range(3))
    pub, priv = idmob.generate_keypair(b"python smoke customer key")
    m.vendor_register(vendor, "Acme", [1], [10])
    m.add_valid_device(vendor, device)
    m.customer_register(customer, pub)
    m.mint(customer, tokens=25)

    master = idmob.master_from_seed(b"python smoke device")
    plain = b"spo2=98"
    handle = m.put(idmob.encrypt(idmob.derive_key(master, 0), plain))
    m.sensor_data_push(device, vendor, 1, "spo2:u8", 1000, "XM566370240", handle, 0)
    assert m.sensor_data_length(vendor, 1) == 1
    assert m.query_sensor(1, 0) == vendor
    assert m.sensor_data_pull(vendor, 1, 0)["price"] == 10

    with pytest.raises(idmob.Error) as err:
        m.add_valid_device(customer, device)
    assert err.value.code == "NotAVendor"

    m.request_for_data(customer, vendor, 1, 0)
    assert m.balance(customer)["tokens"] == 15
    wrapped = idmob.wrap_key(pub, idmob.derive_key(master, 0), customer)
    assert m.transfer_key_and_data(vendor, wrapped, customer, 1, 0) == handle
    assert m.vote_for_vendor(customer, vendor, "up") == 1

    key = idmob.unwrap_key(priv, m.delivered_key(vendor, 1, 0), customer)
    content, latency = m.get(handle)
    assert idmob.decrypt(key, content) == plain
    assert latency > 0

    assert m.poll_events() == []
    m.tick()
    kinds = [line.split()[2] for line in m.poll_events()]
    assert "KeyTransferred" in kinds and "VoteCast" in kinds


def test_scenario_run_and_replay():
    report, log = idmob.run_scenario_file(SCENARIOS / "fig3_basic.scn")
    assert report["purchases.verified"] == "3"
    assert report["block_interval_s"] == str(idmob.DEFAULT_BLOCK_INTERVAL_S)
    assert idmob.replay(log) == report
    again, log2 = idmob.run_scenario_file(SCENARIOS / "fig3_basic.scn", concurrent=True)
    assert log2 == log


def test_scenario_validation_error():
    with pytest.raises(idmob.Error) as err:
        idmob.run_scenario("customer c\nat 1 ghost register_customer\n")
    assert err.value.code == "ValidationError"
