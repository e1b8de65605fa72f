"""Exact state machine behaviour, stream determinism, and the batch engine."""

import numpy as np
import pytest
from fractions import Fraction

from urnnet.dynamics import (
    HeterogeneousScheme,
    ReplacementMatrix,
    UrnState,
    default_initial_state,
    expected_fractions_after_step,
    geometric_checkpoints,
    make_stream,
    mean_field_path,
    record_times,
    run_trajectory,
    simulate_runs,
    step,
)
from urnnet.errors import InvalidParamsError, ZeroInDegreeError
from urnnet.graph import DirectedGraph, generate_graph


def two_cycle():
    return generate_graph("cycle_directed", {"n": 2})


class TestReplacementMatrix:
    def test_validation(self):
        with pytest.raises(InvalidParamsError):
            ReplacementMatrix(2, 0, 1)
        with pytest.raises(InvalidParamsError):
            ReplacementMatrix(0, -1, 1)
        with pytest.raises(InvalidParamsError):
            ReplacementMatrix(0, 0, 0)

    def test_normalized_params(self):
        r = ReplacementMatrix(1, 3, 4)
        assert (r.alpha, r.beta) == (0.25, 0.75)

    def test_classification(self):
        assert ReplacementMatrix(1, 1, 1).is_polya()
        assert ReplacementMatrix(3, 3, 3).is_polya()
        assert ReplacementMatrix(2, 2, 3).is_friedman()
        assert not ReplacementMatrix(2, 1, 3).is_friedman()

    def test_matrix_rows_balanced(self):
        m = ReplacementMatrix(1, 3, 4).as_matrix()
        assert m.sum(axis=1).tolist() == [4, 4]


class TestUrnState:
    def test_fractions(self):
        s = UrnState(np.array([1, 1]), np.array([1, 1]))
        assert s.fractions().tolist() == [0.5, 0.5]
        s = UrnState(np.array([2, 0]), np.array([1, 3]))
        assert np.allclose(s.fractions(), [2 / 3, 0.0])
        s = UrnState(np.array([3]), np.array([1]))
        assert s.fractions().tolist() == [0.75]

    def test_invariants(self):
        with pytest.raises(InvalidParamsError):
            UrnState(np.array([0]), np.array([0]))
        with pytest.raises(InvalidParamsError):
            UrnState(np.array([-1]), np.array([2]))


def test_single_polya_urn_step():
    g = DirectedGraph(1, frozenset({(1, 1)}))
    scheme = ReplacementMatrix(1, 1, 1)
    s = default_initial_state(1)
    nxt = step(s, g, scheme, make_stream(5))
    assert nxt.totals().tolist() == [3]
    assert sorted([int(nxt.white[0]), int(nxt.black[0])]) == [1, 2]


def test_star_ball_bookkeeping_m2():
    g = generate_graph("star_undirected", {"n": 5})
    s = default_initial_state(5)
    nxt = step(s, g, ReplacementMatrix(1, 1, 2), make_stream(1))
    gained = nxt.totals() - s.totals()
    assert gained.tolist() == [8, 2, 2, 2, 2]
    assert nxt.time == 1


def test_total_ball_identity_homogeneous():
    g = generate_graph("cycle_undirected", {"n": 6})
    m = 3
    s = default_initial_state(6)
    rng = make_stream(11)
    for t in range(1, 21):
        s = step(s, g, ReplacementMatrix(2, 1, m), rng)
        assert int(s.totals().sum()) == 6 * 2 + t * m * g.n_edges


def test_all_white_rule_is_deterministic():
    # a = m, b = 0 sends only white regardless of the draw.
    g = generate_graph("cycle_undirected", {"n": 4})
    m = 2
    s = default_initial_state(4)
    rng = make_stream(3)
    prev = s.fractions()
    for t in range(1, 31):
        s = step(s, g, ReplacementMatrix(m, 0, m), rng)
        assert np.array_equal(s.black, np.ones(4, dtype=np.int64))
        assert np.array_equal(s.white, 1 + t * m * 2 * np.ones(4, dtype=np.int64))
        assert np.all(s.fractions() >= prev)
        prev = s.fractions()


def test_step_requires_reinforced_graph():
    g = DirectedGraph(2, frozenset({(1, 2)}))
    s = default_initial_state(2)
    with pytest.raises(ZeroInDegreeError):
        step(s, g, ReplacementMatrix(1, 1, 1), make_stream(0))
    nxt = step(s, g, ReplacementMatrix(1, 1, 1), make_stream(0), allow_zero_in_degree=True)
    assert int(nxt.white[0]) == 1 and int(nxt.black[0]) == 1


def test_heterogeneous_inflow_exact():
    g = two_cycle()
    scheme = HeterogeneousScheme((ReplacementMatrix(1, 2, 5), ReplacementMatrix(0, 1, 3)))
    s = default_initial_state(2)
    rng = make_stream(17)
    for t in range(1, 11):
        s = step(s, g, scheme, rng)
        # urn 1 only hears from vertex 2 (m=3), urn 2 from vertex 1 (m=5)
        assert s.totals().tolist() == [2 + 3 * t, 2 + 5 * t]


def test_two_cycle_step_support():
    g = two_cycle()
    seen = set()
    for seed in range(60):
        nxt = step(default_initial_state(2), g, ReplacementMatrix(1, 1, 1), make_stream(seed))
        seen.add((int(nxt.white[0]), int(nxt.white[1])))
    assert seen == {(1, 1), (1, 2), (2, 1), (2, 2)}


def test_expected_fractions_after_step_exact():
    g = two_cycle()
    s = UrnState(np.array([3, 1]), np.array([1, 3]))
    out = expected_fractions_after_step(s, g, ReplacementMatrix(1, 1, 1))
    assert out == [Fraction(13, 20), Fraction(7, 20)]


def test_trajectory_t0():
    g = two_cycle()
    traj = run_trajectory(g, ReplacementMatrix(1, 1, 1), default_initial_state(2), 0, 9)
    assert len(traj) == 1
    assert traj[0][0] == 0
    assert np.array_equal(traj[0][1], [0.5, 0.5])


def test_trajectory_determinism():
    g = generate_graph("star_undirected", {"n": 5})
    kw = dict(record="geometric_checkpoints")
    a = run_trajectory(g, ReplacementMatrix(1, 1, 2), default_initial_state(5), 500, 123, **kw)
    b = run_trajectory(g, ReplacementMatrix(1, 1, 2), default_initial_state(5), 500, 123, **kw)
    assert [t for t, _ in a] == [t for t, _ in b]
    for (_, za), (_, zb) in zip(a, b):
        assert np.array_equal(za, zb)


def test_record_policies():
    assert record_times(5, "every_step") == [0, 1, 2, 3, 4, 5]
    assert record_times(5, "final_only") == [5]
    geo = record_times(100, "geometric_checkpoints")
    assert geo[0] == 0 and geo[-1] == 100 and geo == sorted(set(geo))
    with pytest.raises(InvalidParamsError):
        record_times(5, "hourly")


def test_geometric_checkpoints_cover_endpoint():
    cps = geometric_checkpoints(10_000)
    assert cps[0] == 1 and cps[-1] == 10_000
    assert len(cps) >= 15


def test_engine_matches_exact_steps():
    g = generate_graph("star_undirected", {"n": 5})
    scheme = ReplacementMatrix(2, 1, 3)
    init = default_initial_state(5)
    rng = make_stream(99, run_index=3)
    s = init
    for _ in range(40):
        s = step(s, g, scheme, rng)
    out = simulate_runs(g, scheme, init, 40, 99, [3], snapshot_times=[40])
    assert np.array_equal(out.snapshots[40][0], s.white)
    assert np.array_equal(out.snapshot_totals[40], s.totals())


def test_engine_matches_exact_steps_heterogeneous():
    g = generate_graph("cycle_directed", {"n": 3})
    scheme = HeterogeneousScheme(
        (ReplacementMatrix(1, 0, 2), ReplacementMatrix(0, 1, 1), ReplacementMatrix(3, 2, 5))
    )
    init = default_initial_state(3)
    rng = make_stream(7, run_index=1)
    s = init
    for _ in range(25):
        s = step(s, g, scheme, rng)
    out = simulate_runs(g, scheme, init, 25, 7, [1], snapshot_times=[25])
    assert np.array_equal(out.snapshots[25][0], s.white)


def test_trajectory_equals_ensemble_member():
    g = two_cycle()
    scheme = ReplacementMatrix(1, 1, 1)
    init = default_initial_state(2)
    traj = run_trajectory(g, scheme, init, 64, 7, record="final_only", run_index=5)
    out = simulate_runs(g, scheme, init, 64, 7, range(8), snapshot_times=[64])
    assert np.array_equal(out.snapshots[64][5] / out.snapshot_totals[64], traj[-1][1])


def test_engine_zero_in_degree_freezes_urn():
    g = DirectedGraph(3, frozenset({(1, 2), (2, 1), (3, 1)}))  # vertex 3 never reinforced
    scheme = ReplacementMatrix(1, 1, 1)
    init = default_initial_state(3)
    with pytest.raises(ZeroInDegreeError):
        simulate_runs(g, scheme, init, 10, 0, [0])
    out = simulate_runs(
        g, scheme, init, 10, 0, [0], snapshot_times=[10], allow_zero_in_degree=True
    )
    assert out.snapshots[10][0][2] == 1
    assert out.snapshot_totals[10][2] == 2


def test_overflow_guard():
    g = DirectedGraph(1, frozenset({(1, 1)}))
    big = 2**40
    scheme = ReplacementMatrix(big, big, big)
    with pytest.raises(InvalidParamsError):
        simulate_runs(g, scheme, default_initial_state(1), 2**14, 0, [0])


def test_make_stream_validation():
    with pytest.raises(InvalidParamsError):
        make_stream(-1)
    with pytest.raises(InvalidParamsError):
        make_stream(0, run_index=2**64)


def test_friedman_consensus_single_run():
    # A single long run settles near 1/2 under a = b = 0.  The graph must
    # not be bipartite-like: with a + b = 0 an adjacency eigenvalue at -1
    # creates a neutral drift mode and a whole line of equilibria (the
    # undirected star ends up at (1/2 - s, (1/2 + s) 1) for random s).
    g = generate_graph("cycle_undirected", {"n": 5})
    traj = run_trajectory(
        g, ReplacementMatrix(0, 0, 1), default_initial_state(5), 100_000, 21, record="final_only"
    )
    assert np.abs(traj[-1][1] - 0.5).max() < 0.05


def test_mean_field_path_fixed_point():
    g = generate_graph("star_undirected", {"n": 5})
    scheme = ReplacementMatrix(1, 1, 4)  # alpha = beta = 1/4, c = 1/2
    init = default_initial_state(5)
    path = mean_field_path(g, scheme, init, 50)
    assert np.abs(path - 0.5).max() <= 1e-14


def test_mean_field_path_converges_to_consensus():
    g = generate_graph("star_undirected", {"n": 5})
    scheme = ReplacementMatrix(1, 2, 4)  # c = 0.4
    init = UrnState(np.array([9, 1, 9, 1, 5]), np.array([1, 9, 1, 9, 5]))
    path = mean_field_path(g, scheme, init, 20_000)
    assert np.abs(path[-1] - 0.4).max() < 1e-3
