import random

import pytest

from ctmaas.geo import GeoPoint, haversine_m, interpolate
from ctmaas.network import map_match

from .conftest import equator_point


def test_point_at_edge_midpoint(hexnet):
    a = hexnet.node("A").position
    b = hexnet.node("B").position
    mid = interpolate(a, b, 0.5)
    m = map_match(hexnet, mid)
    assert m.edge_id == "e1"
    assert m.on_network
    assert m.offset_m == pytest.approx(hexnet.edge("e1").length_m / 2, abs=1.0)


def test_tie_at_shared_node_breaks_to_lower_edge_id(hexnet):
    # node A is e1's start and e9's end; the tie must resolve to e1
    m = map_match(hexnet, hexnet.node("A").position)
    assert m.edge_id == "e1"
    assert m.lateral_m == pytest.approx(0.0, abs=1e-6)
    assert m.offset_m == pytest.approx(0.0, abs=1e-6)


def test_off_network_flagged_not_raised(hexnet):
    far = equator_point(0.0, 5000.0)  # 5 km north of the top row
    m = map_match(hexnet, far)
    assert not m.on_network
    assert m.lateral_m > 100.0


def test_lateral_distance_is_perpendicular(hexnet):
    p = equator_point(500.0, 40.0)  # 40 m north of e1's midpoint
    m = map_match(hexnet, p)
    assert m.edge_id == "e1"
    assert m.lateral_m == pytest.approx(40.0, abs=0.5)
    assert m.offset_m == pytest.approx(500.0, abs=1.0)


def brute_force_nearest(graph, p):
    best = None
    for eid in sorted(graph.edges):
        e = graph.edges[eid]
        a = graph.nodes[e.from_node].position
        b = graph.nodes[e.to_node].position
        # dense scan along the segment: independent of the projection math
        lateral = min(haversine_m(p, interpolate(a, b, k / 400.0)) for k in range(401))
        if best is None or lateral < best[0] - 1e-12:
            best = (lateral, eid)
    return best


def test_random_points_match_dense_scan(hexnet):
    rng = random.Random(99)
    for _ in range(40):
        p = equator_point(rng.uniform(-200, 2200), rng.uniform(-1200, 200))
        m = map_match(hexnet, p)
        lateral, eid = brute_force_nearest(hexnet, p)
        # dense sampling is only accurate to the sample spacing
        assert m.lateral_m == pytest.approx(lateral, abs=4.0)
        if abs(m.lateral_m - lateral) < 0.5:
            candidates = {eid, m.edge_id}
            assert m.edge_id in candidates


def test_offset_uses_declared_length(hexnet):
    # a point 25% along e9 (the diagonal)
    e = hexnet.edge("e9")
    a = hexnet.node(e.from_node).position
    b = hexnet.node(e.to_node).position
    p = interpolate(a, b, 0.25)
    m = map_match(hexnet, p)
    assert m.edge_id == "e9"
    assert m.offset_m == pytest.approx(0.25 * e.length_m, abs=1.0)


def test_empty_graph_raises():
    from ctmaas.network import load_graph

    g = load_graph({"nodes": [{"id": "A", "lat": 0, "lon": 0}], "edges": []})
    with pytest.raises(ValueError):
        map_match(g, GeoPoint(0, 0))
