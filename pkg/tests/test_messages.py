import dataclasses
import json
import uuid

import pytest
from hypothesis import given, settings, strategies as st

from ctmaas.codec import (
    MalformedMessageError,
    UnknownMessageTypeError,
    decode,
    encode,
)
from ctmaas.geo import GeoPoint
from ctmaas.messages import (
    CamMessage,
    HazardCause,
    HazardMessage,
    IvimKind,
    IvimMessage,
    MessageValidationError,
    PriorityDirection,
    PriorityMessage,
    PriorityVerdict,
    RelevanceZone,
    RoadWorksFamily,
    is_relevant,
    validate,
)

from .conftest import equator_point

# ---- strategies over valid wire messages ----
# round-trip equality is judged against the generator, so values are drawn
# at wire precision (6 decimals for degrees, 2 for m/s and meters, 3 for s)

def q(places):
    return lambda x: round(x, places)


st_point = st.builds(GeoPoint,
                     st.floats(-89.0, 89.0).map(q(6)),
                     st.floats(-179.0, 179.0).map(q(6)),
                     st.floats(-100.0, 4000.0).map(q(2)))
st_zone = st.builds(RelevanceZone, st_point, st.floats(0.01, 50_000.0).map(q(2)))
st_msg_id = st.uuids(version=4).map(str)
st_name = st.text(st.characters(codec="ascii", min_codepoint=48, max_codepoint=122),
                  min_size=1, max_size=12)


def st_validity():
    return st.tuples(st.floats(0.0, 1e9).map(q(3)),
                     st.floats(0.001, 1e6).map(q(3))).map(
        lambda t: (t[0], round(t[0] + max(t[1], 0.001), 3)))


st_cam = st.builds(
    CamMessage,
    station_id=st_name, vehicle_id=st_name, trip_id=st_name, driver_id=st_name,
    timestamp=st.floats(0.001, 2e9).map(q(3)).filter(lambda t: t > 0),
    position=st_point,
    speed_ms=st.floats(0.0, 90.0).map(q(2)),
    heading_deg=st.floats(0.0, 359.99).map(q(6)),
)


@st.composite
def st_hazard(draw):
    cause = draw(st.sampled_from(list(HazardCause)))
    valid_from, valid_to = draw(st_validity())
    free_text = draw(st_name) if cause is HazardCause.VmsFreeText else \
        draw(st.one_of(st.none(), st_name))
    return HazardMessage(draw(st_msg_id), cause, draw(st_zone), valid_from, valid_to,
                         draw(st_name), free_text)


@st.composite
def st_ivim(draw):
    kind = draw(st.sampled_from(list(IvimKind)))
    if kind is IvimKind.TrafficCongestion:
        payload = {}
    elif kind is IvimKind.VmsFreeText:
        payload = {"text": draw(st_name)}
    elif kind is IvimKind.SpeedAdvisory:
        payload = {"advised_speed_ms": draw(st.floats(0.5, 40.0).map(q(2)))}
    elif kind is IvimKind.RerouteAdvisory:
        payload = {"edge_ids": draw(st.lists(st_name, max_size=6))}
    else:
        payload = {"sign_code": draw(st_name)}
    valid_from, valid_to = draw(st_validity())
    return IvimMessage(draw(st_msg_id), kind, draw(st_zone), payload, valid_from, valid_to)


@st.composite
def st_priority(draw):
    direction = draw(st.sampled_from(list(PriorityDirection)))
    verdict = draw(st.sampled_from(list(PriorityVerdict))) \
        if direction is PriorityDirection.Response else None
    return PriorityMessage(draw(st_msg_id), direction, draw(st_name), draw(st_name),
                           draw(st_name), draw(st.floats(0.0, 2e9).map(q(3))), verdict)


st_any_message = st.one_of(st_cam, st_hazard(), st_ivim(), st_priority())


# ---- type invariants ----

def valid_cam(**overrides):
    base = dict(station_id="s1", vehicle_id="v1", trip_id="t1", driver_id="d1",
                timestamp=1000.0, position=GeoPoint(0.0, 0.0), speed_ms=10.0,
                heading_deg=90.0)
    base.update(overrides)
    return CamMessage(**base)


def test_cam_invariant_violations_each_named():
    msg = valid_cam(speed_ms=-1.0, heading_deg=361.0, timestamp=-5.0)
    with pytest.raises(MessageValidationError) as err:
        validate(msg)
    text = str(err.value)
    assert "speed" in text and "heading" in text and "timestamp" in text
    assert len(err.value.violations) == 3


def test_heading_360_is_invalid_359_999_is_valid():
    with pytest.raises(MessageValidationError):
        validate(valid_cam(heading_deg=360.0))
    validate(valid_cam(heading_deg=359.999))


def test_zone_radius_bounds():
    with pytest.raises(MessageValidationError):
        validate(HazardMessage(str(uuid.uuid4()), HazardCause.LaneClosure,
                               RelevanceZone(GeoPoint(0, 0), 0.0), 0.0, 10.0, "x"))
    with pytest.raises(MessageValidationError):
        validate(HazardMessage(str(uuid.uuid4()), HazardCause.LaneClosure,
                               RelevanceZone(GeoPoint(0, 0), 50_001.0), 0.0, 10.0, "x"))


def test_free_text_required_only_for_vms():
    zone = RelevanceZone(GeoPoint(0, 0), 100.0)
    with pytest.raises(MessageValidationError, match="free_text required"):
        validate(HazardMessage(str(uuid.uuid4()), HazardCause.VmsFreeText, zone,
                               0.0, 10.0, "x", None))
    validate(HazardMessage(str(uuid.uuid4()), HazardCause.VmsFreeText, zone,
                           0.0, 10.0, "x", "ACCIDENT AHEAD"))
    validate(HazardMessage(str(uuid.uuid4()), HazardCause.LaneClosure, zone,
                           0.0, 10.0, "x", None))


def test_validity_ordering_enforced():
    zone = RelevanceZone(GeoPoint(0, 0), 100.0)
    with pytest.raises(MessageValidationError, match="valid_from"):
        validate(HazardMessage(str(uuid.uuid4()), HazardCause.LaneClosure, zone,
                               10.0, 10.0, "x"))


def test_msg_id_must_be_uuid():
    zone = RelevanceZone(GeoPoint(0, 0), 100.0)
    with pytest.raises(MessageValidationError, match="UUID"):
        validate(HazardMessage("not-a-uuid", HazardCause.LaneClosure, zone, 0.0, 10.0, "x"))


def test_ivim_payload_shape_checked():
    zone = RelevanceZone(GeoPoint(0, 0), 100.0)
    with pytest.raises(MessageValidationError, match="advised_speed_ms"):
        validate(IvimMessage(str(uuid.uuid4()), IvimKind.SpeedAdvisory, zone, {}, 0.0, 10.0))
    with pytest.raises(MessageValidationError, match="unexpected"):
        validate(IvimMessage(str(uuid.uuid4()), IvimKind.TrafficCongestion, zone,
                             {"bogus": 1}, 0.0, 10.0))


def test_priority_verdict_presence_rule():
    with pytest.raises(MessageValidationError, match="verdict required"):
        validate(PriorityMessage(str(uuid.uuid4()), PriorityDirection.Response,
                                 "v", "i", "a", 10.0, None))
    with pytest.raises(MessageValidationError, match="absent"):
        validate(PriorityMessage(str(uuid.uuid4()), PriorityDirection.Request,
                                 "v", "i", "a", 10.0, PriorityVerdict.Granted))


@given(st_any_message)
@settings(max_examples=200)
def test_single_field_mutation_is_caught(msg):
    validate(msg)
    bad = {
        CamMessage: ("heading_deg", 400.0),
        HazardMessage: ("valid_to", -1e12),
        IvimMessage: ("payload", {"nonsense": True}),
        PriorityMessage: ("msg_id", "xx"),
    }[type(msg)]
    mutated = dataclasses.replace(msg, **{bad[0]: bad[1]})
    with pytest.raises(MessageValidationError):
        validate(mutated)


def test_cause_catalogue_is_exhaustive_and_family_tagged():
    families = {c: c.family for c in HazardCause}
    assert len(families) == 9
    rww = [c for c, f in families.items() if f is RoadWorksFamily.RWW]
    rhw = [c for c, f in families.items() if f is RoadWorksFamily.RHW]
    assert len(rww) == 5 and len(rhw) == 4
    # the in-vehicle signage rows are advisory kinds, completing the catalogue
    assert {IvimKind.TrafficCongestion, IvimKind.VmsFreeText} <= set(IvimKind)
    distinct_rows = {c.wire_name for c in HazardCause} | {"TrafficCongestion"}
    assert len(distinct_rows) == 10


# ---- relevance ----

def test_point_at_center_is_relevant():
    zone = RelevanceZone(GeoPoint(0, 0), 1000.0)
    assert is_relevant(zone, GeoPoint(0, 0))


def test_point_beyond_radius_not_relevant():
    zone = RelevanceZone(GeoPoint(0, 0), 1000.0)
    p = GeoPoint(0, 0.02)  # about 2224 m east
    assert not is_relevant(zone, p)


def test_boundary_point_is_relevant_closed_ball():
    # the ball is closed: d == radius counts as inside (exercised at the wire
    # quantum, one centimeter, since radii carry 2-decimal precision)
    center, p = equator_point(0.0), equator_point(1000.0)
    assert is_relevant(RelevanceZone(center, 1000.01), p)
    assert not is_relevant(RelevanceZone(center, 999.99), p)
    assert is_relevant(RelevanceZone(center, 0.01), center)  # d == 0 <= r


# ---- codec ----

def test_minimal_cam_encodes_with_msg_type():
    data = encode(valid_cam())
    assert b'"msg_type":"CAM"' in data
    assert b"msg_id" not in data


def test_encode_rejects_invalid_enumerating_violations():
    with pytest.raises(MessageValidationError, match="free_text required"):
        encode(HazardMessage(str(uuid.uuid4()), HazardCause.VmsFreeText,
                             RelevanceZone(GeoPoint(0, 0), 10.0), 0.0, 10.0, "x"))


@given(st_any_message)
@settings(max_examples=300)
def test_round_trip_all_families(msg):
    assert decode(encode(msg)) == msg


@given(st_any_message)
@settings(max_examples=100)
def test_canonical_encoding_is_deterministic(msg):
    copy = dataclasses.replace(msg)
    assert encode(msg) == encode(copy)


def test_keys_are_sorted():
    doc = json.loads(encode(valid_cam()))
    assert list(doc) == sorted(doc)
    assert list(doc["position"]) == sorted(doc["position"])


def test_decode_error_classes_distinguishable():
    with pytest.raises(MalformedMessageError):
        decode(b'{"msg_type": "CAM"')  # truncated document
    with pytest.raises(MalformedMessageError):
        decode(b"[1, 2]")
    with pytest.raises(UnknownMessageTypeError):
        decode(b'{"msg_type": "BOGUS"}')
    doc = json.loads(encode(valid_cam()))
    doc["heading_deg"] = 361.0
    with pytest.raises(MessageValidationError, match="heading"):
        decode(json.dumps(doc))


def test_wire_precision_quantization():
    msg = valid_cam(speed_ms=13.4567, heading_deg=12.3456789,
                    position=GeoPoint(0.123456789, -0.000000123, 1.005))
    doc = json.loads(encode(msg))
    assert doc["speed_ms"] == 13.46
    assert doc["heading_deg"] == 12.345679
    assert doc["position"]["lat"] == 0.123457
    assert doc["position"]["lon"] == 0.0  # -0.0 is normalized on the wire
    assert b'-0.0' not in encode(msg)
    # a heading that rounds up to a full turn wraps to zero and stays valid
    wrap = valid_cam(heading_deg=359.9999997)
    assert json.loads(encode(wrap))["heading_deg"] == 0.0
    decode(encode(wrap))


def test_golden_files_byte_match(fixtures_dir):
    golden = {
        "cam": CamMessage("veh-0001", "veh-0001", "trip-0001", "drv-0001", 120.0,
                          GeoPoint(0.001, 0.0125, 12.0), 13.5, 90.0),
        "hazard": HazardMessage("8c36c3a4-9d4d-5a39-a8e8-b44a326f1211",
                                HazardCause.PlannedRoadWorks,
                                RelevanceZone(GeoPoint(0.0, 0.009), 750.0),
                                0.0, 3600.0, "tm-console"),
        "ivim": IvimMessage("c5c9a9a2-01ef-5a88-9c57-4f52c1b8f5aa", IvimKind.SpeedAdvisory,
                            RelevanceZone(GeoPoint(-0.0045, 0.009), 500.0),
                            {"advised_speed_ms": 8.33}, 60.0, 180.0),
        "priority": PriorityMessage("3f2d9d0e-54b1-5a6e-8f0f-10b3f0e54c77",
                                    PriorityDirection.Response, "veh-0002", "X-C", "e2",
                                    38.0, PriorityVerdict.Granted),
    }
    for name, msg in golden.items():
        expected = (fixtures_dir / "golden" / f"{name}.json").read_bytes()
        assert encode(msg) + b"\n" == expected
