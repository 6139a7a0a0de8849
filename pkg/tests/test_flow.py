import numpy as np
import pytest
from scipy.optimize import linprog

from mteval.flow import FlowSolution, solve_transport

from oracles import brute_force_transport


def random_instance(rng, max_dim=4):
    n = int(rng.integers(1, max_dim + 1))
    m = int(rng.integers(1, max_dim + 1))
    a = rng.uniform(0.1, 1.0, size=n)
    b = rng.uniform(0.1, 1.0, size=m)
    b *= a.sum() / b.sum()  # balance
    costs = rng.uniform(0.0, 10.0, size=(n, m))
    return a, b, costs


def linprog_cost(a, b, costs):
    """Independent LP check: flatten the transportation polytope for scipy."""
    n, m = len(a), len(b)
    eq = np.zeros((n + m, n * m))
    for i in range(n):
        eq[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        eq[n + j, j::m] = 1.0
    result = linprog(costs.ravel(), A_eq=eq[:-1], b_eq=np.concatenate([a, b])[:-1], bounds=(0, None), method="highs")
    assert result.status == 0
    return result.fun


def test_single_pair():
    solution = solve_transport([2.0], [2.0], [[3.5]])
    assert solution.cost == 7.0
    assert solution.flows == {(0, 0): 2.0}


def test_identity_costs_zero_diagonal():
    # moving mass onto itself is free no matter the off-diagonal costs
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        a = rng.uniform(0.1, 2.0, size=n)
        costs = rng.uniform(1.0, 9.0, size=(n, n))
        np.fill_diagonal(costs, 0.0)
        solution = solve_transport(a, a, costs)
        assert solution.cost == 0.0


def test_flow_requires_backward_arcs():
    # Greedy shortest-path routing sends the first unit 0->0; the optimum
    # (cost 1) must cancel it, exercising the residual arcs.
    solution = solve_transport([1.0, 1.0], [1.0, 1.0], [[0.0, 1.0], [0.0, 10.0]])
    assert abs(solution.cost - 1.0) < 1e-12
    assert abs(solution.flows[(0, 1)] - 1.0) < 1e-12
    assert abs(solution.flows[(1, 0)] - 1.0) < 1e-12


def test_marginals_are_respected():
    rng = np.random.default_rng(2)
    for _ in range(50):
        a, b, costs = random_instance(rng)
        solution = solve_transport(a, b, costs)
        row = np.zeros(len(a))
        col = np.zeros(len(b))
        for (i, j), f in solution.flows.items():
            assert f >= 0.0
            row[i] += f
            col[j] += f
        assert np.allclose(row, a, atol=1e-9, rtol=0)
        assert np.allclose(col, b, atol=1e-9, rtol=0)


def test_cost_matches_brute_force_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a, b, costs = random_instance(rng)
        got = solve_transport(a, b, costs).cost
        want = brute_force_transport(a, b, costs)
        assert abs(got - want) < 1e-9


def test_cost_matches_linear_programming():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a, b, costs = random_instance(rng, max_dim=6)
        got = solve_transport(a, b, costs).cost
        assert abs(got - linprog_cost(a, b, costs)) < 1e-8


def test_integral_instances_solved_exactly():
    # with integer data the optimum is integral; no drift allowed
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 4))
        a = rng.integers(1, 5, size=n).astype(float)
        b = rng.multinomial(int(a.sum()), np.ones(m) / m).astype(float)
        if np.any(b == 0):
            continue
        costs = rng.integers(0, 9, size=(n, m)).astype(float)
        solution = solve_transport(a, b, costs)
        assert solution.cost == round(solution.cost)
        assert abs(solution.cost - brute_force_transport(a, b, costs)) < 1e-9


def test_solution_bookkeeping():
    solution = solve_transport([1.0, 2.0], [3.0], [[1.0], [2.0]])
    assert isinstance(solution, FlowSolution)
    assert solution.n_sources == 2
    assert solution.n_sinks == 1
    assert np.allclose(solution.row_sums(), [1.0, 2.0])
    assert np.allclose(solution.col_sums(), [3.0])
    assert solution.cost == 1.0 + 4.0


def test_input_validation():
    with pytest.raises(ValueError, match="balance"):
        solve_transport([1.0], [2.0], [[1.0]])
    with pytest.raises(ValueError, match="negative"):
        solve_transport([-1.0, 2.0], [1.0], [[1.0], [1.0]])
    with pytest.raises(ValueError, match="shape"):
        solve_transport([1.0], [1.0], [[1.0, 2.0]])
    with pytest.raises(ValueError, match="finite"):
        solve_transport([1.0], [1.0], [[np.inf]])
    with pytest.raises(ValueError, match="at least one"):
        solve_transport([], [], np.zeros((0, 0)))
