"""Python bindings for the semantic gateway core."""

from ._sgs import (
    SgsError,
    Gateway,
    check_shape,
    coap_decode,
    coap_encode,
    decode_remaining_length,
    encode_remaining_length,
    from_jsonld,
    matches,
    mqtt_reencode,
    north_topic,
    raw_topic,
    topic_from_uri_path,
)

__all__ = [
    "SgsError",
    "Gateway",
    "check_shape",
    "coap_decode",
    "coap_encode",
    "decode_remaining_length",
    "encode_remaining_length",
    "from_jsonld",
    "matches",
    "mqtt_reencode",
    "north_topic",
    "raw_topic",
    "topic_from_uri_path",
]
