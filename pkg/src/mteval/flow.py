"""Exact solver for the balanced transportation problem.

Word mover's distance reduces to a minimum-cost flow on the bipartite
graph of the two texts' terms.  Problem sizes are segment-scale (tens to a
few hundred nodes), so the solver favours exactness over asymptotics:
successive shortest paths with Johnson potentials, Dijkstra run dense and
vectorized over numpy arrays.  All arc costs are nonnegative, so no
negative-cycle handling is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FlowSolution:
    """Optimal flows of a transportation instance.

    ``flows`` maps (supply index, demand index) to the shipped mass; row
    sums reproduce the supplies and column sums the demands (up to float
    dust), and ``cost`` is the cumulative shipped-mass-times-cost optimum.
    """

    flows: dict[tuple[int, int], float]
    cost: float
    n_sources: int
    n_sinks: int

    def row_sums(self) -> np.ndarray:
        sums = np.zeros(self.n_sources)
        for (i, _), value in self.flows.items():
            sums[i] += value
        return sums

    def col_sums(self) -> np.ndarray:
        sums = np.zeros(self.n_sinks)
        for (_, j), value in self.flows.items():
            sums[j] += value
        return sums


def solve_transport(supplies, demands, costs) -> FlowSolution:
    """Minimize sum(F * costs) subject to F >= 0, F 1 = supplies, F^T 1 = demands.

    Supplies and demands must be nonnegative and balanced to within 1e-9
    of their scale; costs must be finite and nonnegative.  The optimum is
    exact up to float rounding (well inside 1e-9 for unit-scale masses).
    """
    a = np.asarray(supplies, dtype=float).copy()
    b = np.asarray(demands, dtype=float).copy()
    costs = np.asarray(costs, dtype=float)
    n, m = len(a), len(b)
    if costs.shape != (n, m):
        raise ValueError(f"cost matrix shape {costs.shape} does not match {n} supplies x {m} demands")
    if n == 0 or m == 0:
        raise ValueError("transportation instance needs at least one supply and one demand")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("supplies and demands must be nonnegative")
    if not np.all(np.isfinite(costs)) or np.any(costs < 0):
        raise ValueError("costs must be finite and nonnegative")
    total_a = float(a.sum())
    total_b = float(b.sum())
    scale = max(total_a, total_b, 1.0)
    if abs(total_a - total_b) > 1e-9 * scale:
        raise ValueError(f"unbalanced instance: supplies sum to {total_a}, demands to {total_b}")

    # Residuals below tol are float dust from saturation arithmetic, not mass.
    tol = 1e-14 * scale

    source = n + m
    sink = n + m + 1
    n_nodes = n + m + 2
    supply_nodes = np.arange(n)
    demand_nodes = np.arange(n, n + m)

    potentials = np.zeros(n_nodes)
    flow = np.zeros((n, m))
    used_supply = np.zeros(n)
    used_demand = np.zeros(m)

    max_rounds = 2 * (n + m) + 2 * n * m + 16
    for _ in range(max_rounds):
        dist, parent = _dijkstra(
            a, b, costs, flow, used_supply, used_demand, potentials, tol, n, m, source, sink
        )
        if not np.isfinite(dist[sink]):
            break
        reached = np.isfinite(dist)
        potentials[reached] += dist[reached]
        potentials[~reached] += dist[sink]

        # walk the path backwards to find the bottleneck
        path = []
        node = sink
        while node != source:
            prev = int(parent[node])
            path.append((prev, node))
            node = prev
        bottleneck = np.inf
        for u, v in path:
            if u == source:
                residual = a[v] - used_supply[v]
            elif v == sink:
                residual = b[u - n] - used_demand[u - n]
            elif u < n:
                residual = np.inf  # forward bipartite arc, uncapacitated
            else:
                residual = flow[v, u - n]  # backward arc cancels shipped mass
            bottleneck = min(bottleneck, residual)
        if bottleneck <= tol:
            break
        for u, v in path:
            if u == source:
                used_supply[v] += bottleneck
            elif v == sink:
                used_demand[u - n] += bottleneck
            elif u < n:
                flow[u, v - n] += bottleneck
            else:
                flow[v, u - n] -= bottleneck
    else:
        raise RuntimeError("transportation solver failed to converge; please report this instance")

    if np.any(np.abs(flow.sum(axis=1) - a) > 1e-9 * scale) or np.any(np.abs(flow.sum(axis=0) - b) > 1e-9 * scale):
        raise RuntimeError("transportation solver left unmet supply or demand beyond tolerance")

    flow[flow < 0] = 0.0
    nonzero = np.argwhere(flow > 0)
    flows = {(int(i), int(j)): float(flow[i, j]) for i, j in nonzero}
    return FlowSolution(flows=flows, cost=float((flow * costs).sum()), n_sources=n, n_sinks=m)


def _dijkstra(a, b, costs, flow, used_supply, used_demand, potentials, tol, n, m, source, sink):
    """Shortest reduced-cost distances from the super source over the residual graph."""
    n_nodes = n + m + 2
    dist = np.full(n_nodes, np.inf)
    parent = np.full(n_nodes, -1, dtype=np.int64)
    visited = np.zeros(n_nodes, dtype=bool)
    dist[source] = 0.0

    supply_ids = np.arange(n)
    demand_ids = np.arange(n, n + m)
    for _ in range(n_nodes):
        pending = np.where(visited, np.inf, dist)
        u = int(np.argmin(pending))
        if not np.isfinite(pending[u]):
            break
        visited[u] = True
        base = dist[u]
        if u == source:
            available = (a - used_supply) > tol
            reduced = np.maximum(potentials[source] - potentials[supply_ids], 0.0)
            candidate = base + reduced
            better = available & (candidate < dist[:n])
            dist[:n][better] = candidate[better]
            parent[:n][better] = u
        elif u < n:
            reduced = np.maximum(costs[u] + potentials[u] - potentials[demand_ids], 0.0)
            candidate = base + reduced
            better = candidate < dist[n : n + m]
            dist[n : n + m][better] = candidate[better]
            parent[n : n + m][better] = u
        elif u < n + m:
            j = u - n
            if b[j] - used_demand[j] > tol:
                candidate = base + max(potentials[u] - potentials[sink], 0.0)
                if candidate < dist[sink]:
                    dist[sink] = candidate
                    parent[sink] = u
            has_flow = flow[:, j] > tol
            reduced = np.maximum(-costs[:, j] + potentials[u] - potentials[supply_ids], 0.0)
            candidate = base + reduced
            better = has_flow & (candidate < dist[:n])
            dist[:n][better] = candidate[better]
            parent[:n][better] = u
    return dist, parent
