import json
import os
from pathlib import Path

import pytest

import sgspy

CONFIG = os.environ.get(
    "SGS_CONFIG", str(Path(__file__).resolve().parents[2] / "config" / "gateway.json")
)


def test_coap_get_vector():
    m = sgspy.coap_decode(bytes([0x40, 0x01, 0x30, 0x39]))
    assert m["type"] == 0
    assert m["code"] == (0, 1)
    assert m["message_id"] == 12345
    assert m["token"] == b"" and m["options"] == [] and m["payload"] == b""
    assert sgspy.coap_encode(m) == bytes([0x40, 0x01, 0x30, 0x39])


def test_coap_round_trip_with_options():
    msg = {
        "type": 1,
        "code": (0, 2),
        "message_id": 7,
        "token": b"\x01\x02",
        "options": [(11, b"sensors"), (11, b"s1"), (12, b"\x32"), (300, b"x" * 20)],
        "payload": b'{"value":1}',
    }
    wire = sgspy.coap_encode(msg)
    assert sgspy.coap_decode(wire) == msg


def test_coap_malformed_raises():
    with pytest.raises(sgspy.SgsError):
        sgspy.coap_decode(bytes([0x80, 0x01, 0x00, 0x00]))


def test_remaining_length():
    assert sgspy.decode_remaining_length(bytes([0xC1, 0x02])) == (321, 2)
    assert sgspy.encode_remaining_length(321) == bytes([0xC1, 0x02])
    assert sgspy.decode_remaining_length(bytes([0x80])) is None


def test_mqtt_reencode():
    assert sgspy.mqtt_reencode(bytes([0xD0, 0x00])) == ("PINGRESP", bytes([0xD0, 0x00]), 2)
    assert sgspy.mqtt_reencode(bytes([0x30])) is None


@pytest.mark.parametrize(
    "flt,topic,expected",
    [
        ("obs/#", "obs/sensors/s1/temp", True),
        ("obs/+/s1/#", "obs/sensors/s1", True),
        ("obs/+", "obs/sensors/s1", False),
        ("#", "raw/x", True),
        ("obs/sensors/s2/#", "obs/sensors/s1/temp", False),
    ],
)
def test_matches(flt, topic, expected):
    assert sgspy.matches(flt, topic) is expected


def test_topic_mapping():
    raw = sgspy.topic_from_uri_path(["sensors", "s1", "temp"])
    assert raw == "raw/sensors/s1/temp"
    assert sgspy.north_topic(raw) == "obs/sensors/s1/temp"
    assert sgspy.raw_topic("obs/sensors/s1/temp") == raw


def test_gateway_annotates_json_and_xml_identically():
    gw = sgspy.Gateway(CONFIG)
    t = "2014-06-01T12:00:00Z"
    a = gw.ingest("raw/sensors/s1/temp", json.dumps({"value": 21.5, "time": t}))
    b = gw.ingest("raw/sensors/s1/temp", f'<reading value="21.5" time="{t}"/>', format="xml", protocol="mqtt")
    assert a == b
    shape = sgspy.check_shape(a)
    assert shape["exact"] and shape["missing"] == []
    assert len(sgspy.from_jsonld(a)) == 11

    latest = gw.latest("raw/sensors/s1/temp")
    assert latest["jsonld"] == b
    assert latest["sequence"] == 2
    assert gw.counters()["ingested"] == 2


def test_gateway_rejects_unparseable_payload():
    gw = sgspy.Gateway(CONFIG)
    with pytest.raises(sgspy.SgsError):
        gw.ingest("raw/sensors/s1/temp", "not a reading")
    assert gw.counters()["parse_errors"] == 1
    assert gw.latest("raw/sensors/s1/temp") is None
