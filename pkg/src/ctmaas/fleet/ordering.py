"""Stop-order construction: nearest-neighbor start, 2-opt improvement.

Costs come from a travel-time matrix over {depart} + stop nodes, so the
ordering reacts to live congestion. The path is open (no return to depot)
and the graph is directed, so a 2-opt reversal re-prices the whole segment.
"""

from __future__ import annotations

from ..network import NoPathError, RoadGraph, shortest_path


def travel_time_matrix(graph: RoadGraph, nodes: list[str],
                       speeds: dict[str, float] | None = None) -> dict[tuple[str, str], float]:
    """Pairwise shortest-path times; unreachable pairs cost infinity so the
    ordering simply avoids them (an open path never uses every pair)."""
    speeds = speeds if speeds is not None else graph.speed_snapshot()
    matrix: dict[tuple[str, str], float] = {}
    for a in nodes:
        for b in nodes:
            if a == b:
                matrix[(a, b)] = 0.0
                continue
            try:
                matrix[(a, b)] = shortest_path(graph, a, b, speeds).total_time_s
            except NoPathError:
                matrix[(a, b)] = float("inf")
    return matrix


def path_cost(matrix: dict[tuple[str, str], float], start: str, order: list[str]) -> float:
    cost = 0.0
    prev = start
    for node in order:
        cost += matrix[(prev, node)]
        prev = node
    return cost


def nearest_neighbor_order(matrix: dict[tuple[str, str], float], start: str,
                           stops: list[int], nodes: list[str]) -> list[int]:
    """Greedy construction over stop indices; ties break on lower index for
    determinism."""
    remaining = list(stops)
    order: list[int] = []
    current = start
    while remaining:
        best = min(remaining, key=lambda i: (matrix[(current, nodes[i])], i))
        order.append(best)
        remaining.remove(best)
        current = nodes[best]
    return order


def two_opt(matrix: dict[tuple[str, str], float], start: str, order: list[int],
            nodes: list[str]) -> list[int]:
    """Apply improving segment reversals until a local optimum is reached."""
    current = list(order)
    cost = path_cost(matrix, start, [nodes[i] for i in current])
    improved = True
    while improved:
        improved = False
        n = len(current)
        for i in range(n - 1):
            for j in range(i + 1, n):
                candidate = current[:i] + current[i:j + 1][::-1] + current[j + 1:]
                c = path_cost(matrix, start, [nodes[k] for k in candidate])
                if c < cost - 1e-12:
                    current = candidate
                    cost = c
                    improved = True
                    break
            if improved:
                break
    return current


def order_stops(graph: RoadGraph, depart_node: str, stop_nodes: list[str],
                speeds: dict[str, float] | None = None) -> list[int]:
    """Return the visiting order (as indices into stop_nodes)."""
    speeds = speeds if speeds is not None else graph.speed_snapshot()
    nodes = list(stop_nodes)
    matrix = travel_time_matrix(graph, sorted(set([depart_node] + nodes)), speeds)
    order = nearest_neighbor_order(matrix, depart_node, list(range(len(nodes))), nodes)
    return two_opt(matrix, depart_node, order, nodes)
