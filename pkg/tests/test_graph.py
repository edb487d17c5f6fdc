import json

import pytest

from ctmaas.network import (
    GraphError,
    SpeedSample,
    UnknownEdgeError,
    edge_travel_time,
    load_graph,
    update_edge_speed,
)
from ctmaas.network.graph import RoadEdge


def minimal_doc():
    return {
        "nodes": [{"id": "A", "lat": 0.0, "lon": 0.0},
                  {"id": "B", "lat": 0.0, "lon": 0.009}],
        "edges": [{"id": "e1", "from": "A", "to": "B",
                   "length_m": 1000.0, "free_flow_speed_ms": 15.0}],
    }


def test_load_minimal_graph():
    g = load_graph(json.dumps(minimal_doc()))
    assert len(g.nodes) == 2
    assert len(g.edges) == 1
    assert [e.id for e in g.adjacency["A"]] == ["e1"]
    assert g.adjacency["B"] == []
    assert g.edge("e1").current_speed_ms == 15.0


def test_dangling_edge_endpoint_names_the_node():
    doc = minimal_doc()
    doc["edges"][0]["to"] = "X"
    with pytest.raises(GraphError, match="X"):
        load_graph(doc)


def test_nonpositive_values_name_the_edge():
    doc = minimal_doc()
    doc["edges"][0]["length_m"] = 0.0
    with pytest.raises(GraphError, match="e1"):
        load_graph(doc)
    doc = minimal_doc()
    doc["edges"][0]["free_flow_speed_ms"] = -3.0
    with pytest.raises(GraphError, match="e1"):
        load_graph(doc)


def test_parse_failure():
    with pytest.raises(GraphError, match="JSON"):
        load_graph("{not json")


def test_duplicate_ids_rejected():
    doc = minimal_doc()
    doc["nodes"].append({"id": "A", "lat": 0.0, "lon": 0.01})
    with pytest.raises(GraphError, match="duplicate node"):
        load_graph(doc)


def test_self_loop_rejected():
    doc = minimal_doc()
    doc["edges"][0]["to"] = "A"
    with pytest.raises(GraphError):
        load_graph(doc)


def test_hexnet_fixture_counts(hexnet):
    assert len(hexnet.nodes) == 6
    assert len(hexnet.edges) == 9


def test_edge_travel_time_arithmetic():
    e = RoadEdge("e", "A", "B", 1000.0, 25.0, 10.0)
    assert edge_travel_time(e) == pytest.approx(100.0)
    e2 = RoadEdge("f", "A", "B", 500.0, 25.0, 25.0)
    assert edge_travel_time(e2) == pytest.approx(20.0)


def test_travel_time_doubles_when_speed_halves():
    fast = RoadEdge("e", "A", "B", 800.0, 20.0, 20.0)
    slow = RoadEdge("f", "A", "B", 800.0, 20.0, 10.0)
    assert edge_travel_time(slow) == pytest.approx(2 * edge_travel_time(fast))


def samples(edge_id, values, t0=1000.0):
    return [SpeedSample(edge_id, t0 + i, v, f"veh-{i}") for i, v in enumerate(values)]


def test_update_speed_mean(hexnet):
    new = update_edge_speed(hexnet, "e9", samples("e9", [10.0, 10.0, 10.0]))
    assert new == pytest.approx(10.0)
    assert hexnet.edge("e9").current_speed_ms == pytest.approx(10.0)


def test_update_speed_clamps_to_free_flow(hexnet):
    new = update_edge_speed(hexnet, "e9", samples("e9", [30.0, 30.0]))
    assert new == pytest.approx(25.0)


def test_update_speed_floor(hexnet):
    new = update_edge_speed(hexnet, "e9", samples("e9", [0.0, 0.0, 0.0]))
    assert new == pytest.approx(0.5)


def test_empty_window_decays_toward_free_flow(hexnet):
    hexnet.set_current_speed("e9", 5.0)
    new = update_edge_speed(hexnet, "e9", [], now=0.0)
    assert new == pytest.approx(15.0)  # 5 + 0.5 * (25 - 5)


def test_old_samples_fall_out_of_window(hexnet):
    old = [SpeedSample("e9", 100.0, 3.0, "v1")]
    fresh = [SpeedSample("e9", 200.0, 12.0, "v2")]
    new = update_edge_speed(hexnet, "e9", old + fresh, now=200.0)
    assert new == pytest.approx(12.0)


def test_unknown_edge_raises(hexnet):
    with pytest.raises(UnknownEdgeError):
        update_edge_speed(hexnet, "nope", [])


def test_sample_for_wrong_edge_rejected(hexnet):
    with pytest.raises(ValueError, match="e1"):
        update_edge_speed(hexnet, "e9", [SpeedSample("e1", 0.0, 5.0, "v")])
