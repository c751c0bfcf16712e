import itertools
import json
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import graphs, random_connected_graph
from oracles import brute_map_python, map_optimum_of
from partmerge import rng as rngmod
from partmerge.graph import Graph, generate_grid
from partmerge.mrf import (
    MapSolver,
    PairwiseMRF,
    PreconditionError,
    SizeError,
    evaluate_H,
    exact_map,
    exact_solver,
    icm,
    icm_detailed,
    load_mrf,
    map_lower_bound,
    pm_map,
    psi_gap,
    random_mrf,
    restrict,
    total_gap,
)
from partmerge.partition import PartitionParams

EQ = np.eye(2)  # 1 if equal else 0


def two_node_equal():
    return PairwiseMRF(Graph.from_edges(2, [(0, 1)]), 2, np.zeros((2, 2)), [EQ])


def single(theta):
    return PairwiseMRF(Graph.from_edges(1, []), len(theta), [theta], np.zeros((0, 2, 2)))


class TestEvaluate:
    def test_single_node(self):
        assert evaluate_H(single([0.0, 1.0]), [1]) == 1.0

    def test_single_edge(self):
        assert evaluate_H(two_node_equal(), [0, 0]) == 1.0
        assert evaluate_H(two_node_equal(), [0, 1]) == 0.0

    def test_edgeless(self):
        node = np.array([[0.5, 1.0], [2.0, -1.0], [0.0, 3.0]])
        mrf = PairwiseMRF(Graph.from_edges(3, []), 2, node, np.zeros((0, 2, 2)))
        assert evaluate_H(mrf, [1, 0, 1]) == pytest.approx(1.0 + 2.0 + 3.0)

    def test_bad_assignment(self):
        with pytest.raises(ValueError):
            evaluate_H(two_node_equal(), [0, 2])
        with pytest.raises(ValueError):
            evaluate_H(two_node_equal(), [0])


class TestModel:
    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            PairwiseMRF(Graph.from_edges(1, []), 2, [[0.0, np.inf]], np.zeros((0, 2, 2)))

    def test_edge_symmetry(self):
        mrf = random_mrf(generate_grid(3, 2), 3, seed=5)
        for u, v in mrf.graph.edges:
            assert np.array_equal(mrf.edge_table(u, v), mrf.edge_table(v, u).T)

    def test_json_round_trip(self, tmp_path):
        mrf = random_mrf(generate_grid(3, 3), 3, seed=2)
        path = tmp_path / "m.json"
        path.write_text(json.dumps(mrf.to_dict()))
        back = load_mrf(path)
        assert back.graph == mrf.graph
        assert np.array_equal(back.node_logpot, mrf.node_logpot)
        assert np.array_equal(back.edge_logpot, mrf.edge_logpot)

    def test_raw_domain_and_reversed_edge(self):
        doc = {"n": 2, "q": 2, "domain": "raw", "nodes": [[1, 1], [1, 1]],
               "edges": [{"u": 1, "v": 0, "table": [1, 2, 3, 4]}]}
        mrf = PairwiseMRF.from_dict(doc)
        # stored as (0, 1): entry [x0, x1] = raw[x1][x0]
        assert mrf.edge_table(1, 0)[0, 1] == pytest.approx(np.log(2))
        assert mrf.edge_table(0, 1)[1, 0] == pytest.approx(np.log(2))

    def test_raw_nonpositive_rejected(self):
        doc = {"n": 1, "q": 2, "domain": "raw", "nodes": [[0, 1]], "edges": []}
        with pytest.raises(ValueError):
            PairwiseMRF.from_dict(doc)

    def test_duplicate_edge_rejected(self):
        doc = {"n": 2, "q": 2, "nodes": [[0, 0], [0, 0]],
               "edges": [{"u": 0, "v": 1, "table": [0] * 4}, {"u": 1, "v": 0, "table": [0] * 4}]}
        with pytest.raises(ValueError):
            PairwiseMRF.from_dict(doc)

    def test_nonnegative_flag(self):
        assert random_mrf(generate_grid(2, 2), 2, 0).nonnegative
        assert not random_mrf(generate_grid(2, 2), 2, 0, low=-1.0).nonnegative


class TestExactMap:
    def test_single_node(self):
        assert exact_map(single([0.0, 1.0])).tolist() == [1]

    def test_tie_break_lexicographic(self):
        assert exact_map(two_node_equal()).tolist() == [0, 0]

    def test_matches_python_enumeration(self):
        g = random_connected_graph(random.Random(8), 8, 0.3)
        mrf = random_mrf(g, 2, seed=8)
        best, arg = brute_map_python(mrf)
        x = exact_map(mrf)
        assert evaluate_H(mrf, x) == pytest.approx(best, rel=1e-12)
        assert tuple(x.tolist()) == arg

    def test_matches_tensor_oracle_across_chunks(self):
        # 3^11 > one enumeration chunk
        g = random_connected_graph(random.Random(1), 11, 0.2)
        mrf = random_mrf(g, 3, seed=1)
        h_star, _ = map_optimum_of(mrf)
        assert evaluate_H(mrf, exact_map(mrf)) == pytest.approx(h_star, rel=1e-12)

    def test_size_limit(self):
        mrf = random_mrf(generate_grid(5, 5), 2, 0)
        with pytest.raises(SizeError, match="2\\^25"):
            exact_map(mrf)

    def test_label_permutation(self):
        rnd = random.Random(4)
        g = random_connected_graph(rnd, 7, 0.3)
        mrf = random_mrf(g, 3, seed=4)
        perm = list(range(7))
        rnd.shuffle(perm)  # new id of old vertex v is perm[v]
        edges = [(perm[u], perm[v]) for u, v in g.edges]
        pg = Graph.from_edges(7, edges)
        node = np.empty_like(mrf.node_logpot)
        node[perm] = mrf.node_logpot
        tables = {}
        for k, (u, v) in enumerate(g.edges):
            a, b = perm[u], perm[v]
            tables[(min(a, b), max(a, b))] = mrf.edge_logpot[k] if a < b else mrf.edge_logpot[k].T
        pm = PairwiseMRF(pg, 3, node, [tables[e] for e in pg.edges])
        x, y = exact_map(mrf), exact_map(pm)
        assert np.array_equal(y[perm], x)


class TestICM:
    def test_fixed_point(self):
        mrf = random_mrf(generate_grid(3, 2), 2, 3)
        x = exact_map(mrf)
        res = icm_detailed(mrf, x, rng=np.random.default_rng(0))
        assert np.array_equal(res.assignment, x)
        assert res.converged and res.sweeps == 1

    def test_two_node_attractive(self):
        for seed in range(10):
            x = icm(two_node_equal(), [0, 1], rng=np.random.default_rng(seed))
            assert x[0] == x[1]

    def test_two_node_attractive_both_orders(self):
        # visiting 0 first copies x1 = 1; visiting 1 first copies x0 = 0
        outcomes = {tuple(icm(two_node_equal(), [0, 1], rng=np.random.default_rng(s)).tolist())
                    for s in range(30)}
        assert outcomes == {(0, 0), (1, 1)}

    def test_sweep_cap(self):
        mrf = random_mrf(generate_grid(4, 4), 3, 1)
        res = icm_detailed(mrf, np.zeros(16, dtype=int), max_sweeps=1, rng=np.random.default_rng(0))
        assert res.sweeps == 1

    @settings(max_examples=30, deadline=None)
    @given(graphs(min_n=1, max_n=10), st.integers(2, 3), st.integers(0, 1000))
    def test_monotone(self, g, q, seed):
        mrf = random_mrf(g, q, seed, low=-1.0, high=1.0)
        rng = np.random.default_rng(seed)
        init = rng.integers(0, q, size=g.n)
        x = init.copy()
        values = [evaluate_H(mrf, x)]

        def watch(i, old, new):
            x[i] = new
            values.append(evaluate_H(mrf, x))

        res = icm_detailed(mrf, init, max_sweeps=50, rng=rng, callback=watch)
        assert np.all(np.diff(values) >= -1e-12)
        assert np.array_equal(res.assignment, x)
        assert res.converged or res.sweeps == 50


class TestRestrict:
    def test_identity(self):
        mrf = random_mrf(generate_grid(3, 3), 2, 0)
        sub, back = restrict(mrf, range(9))
        assert back == list(range(9))
        assert sub.graph == mrf.graph
        assert np.array_equal(sub.edge_logpot, mrf.edge_logpot)

    def test_single_vertex(self):
        mrf = random_mrf(generate_grid(3, 3), 2, 0)
        sub, back = restrict(mrf, [4])
        assert (sub.n, sub.graph.m, back) == (1, 0, [4])
        assert np.array_equal(sub.node_logpot[0], mrf.node_logpot[4])

    def test_p3_block(self, p3):
        mrf = random_mrf(p3, 2, 0)
        sub, back = restrict(mrf, {1, 0})
        assert sub.graph.edges == ((0, 1),)
        assert np.array_equal(sub.edge_logpot[0], mrf.edge_logpot[0])

    @settings(max_examples=40, deadline=None)
    @given(graphs(min_n=1, max_n=10), st.integers(0, 10**6))
    def test_decomposition_identity(self, g, seed):
        rnd = random.Random(seed)
        mrf = random_mrf(g, 3, seed, low=-2.0, high=2.0)
        labels = [rnd.randrange(3) for _ in range(g.n)]
        blocks = [[v for v in range(g.n) if labels[v] == c] for c in range(3)]
        blocks = [b for b in blocks if b]
        x = np.array([rnd.randrange(3) for _ in range(g.n)])
        total = 0.0
        for blk in blocks:
            sub, back = restrict(mrf, blk)
            total += evaluate_H(sub, x[back])
        for u, v in g.edges:
            if labels[u] != labels[v]:
                total += mrf.edge_table(u, v)[x[u], x[v]]
        assert total == pytest.approx(evaluate_H(mrf, x), rel=1e-9, abs=1e-9)


class TestPsiGap:
    def test_indicator(self):
        assert psi_gap(two_node_equal(), (0, 1)) == (1.0, 0.0)

    def test_constant(self):
        mrf = PairwiseMRF(Graph.from_edges(2, [(0, 1)]), 2, np.zeros((2, 2)), [np.full((2, 2), 0.7)])
        hi, lo = psi_gap(mrf, 0)
        assert hi - lo == 0.0

    def test_table(self):
        mrf = PairwiseMRF(Graph.from_edges(2, [(0, 1)]), 2, np.zeros((2, 2)), [[[0.5, 2.5], [-1, 0]]])
        assert psi_gap(mrf, (1, 0)) == (2.5, -1.0)


class TestLowerBound:
    def test_single_edge(self):
        assert map_lower_bound(two_node_equal()) == 0.5
        assert map_optimum_of(two_node_equal())[0] == 1.0

    def test_edgeless(self):
        assert map_lower_bound(single([0.0, 1.0])) == 0.0

    def test_requires_nonnegative(self):
        with pytest.raises(PreconditionError):
            map_lower_bound(random_mrf(generate_grid(2, 2), 2, 0, low=-1.0))

    def test_random(self):
        rnd = random.Random(12)
        for k in range(20):
            g = random_connected_graph(rnd, rnd.randint(2, 9), 0.3)
            mrf = random_mrf(g, 2, k)
            assert map_lower_bound(mrf) <= map_optimum_of(mrf)[0] + 1e-12


def alpha_solver(alpha):
    """Returns the lowest-scoring assignment still within a factor alpha of the
    block optimum (nonnegative potentials)."""

    def solve(sub, _rng):
        best = map_optimum_of(sub)[0]
        worst, arg = None, None
        for x in itertools.product(range(sub.q), repeat=sub.n):
            h = evaluate_H(sub, np.array(x))
            if h >= best / alpha - 1e-12 and (worst is None or h < worst):
                worst, arg = h, x
        return np.array(arg, dtype=np.int64)

    return MapSolver(f"alpha{alpha}", solve, lambda _k: alpha)


class TestPipeline:
    def test_single_block_equals_centralized(self):
        mrf = random_mrf(generate_grid(3, 3), 2, 6)
        x, cert, part = pm_map(mrf, PartitionParams(10, 1e-9, 1), "exact")
        assert part.p == 1
        assert cert.boundary_penalty == 0.0
        assert np.array_equal(x, exact_map(mrf))
        assert cert.implied_opt_upper == pytest.approx(cert.h_hat)

    def test_p3_split(self, p3):
        mrf = random_mrf(p3, 2, 11)
        x, cert, part = pm_map(mrf, PartitionParams(1, 0.5, 0, order=(0, 1, 2)), "exact")
        assert part.blocks == ((0, 1), (2,))
        hi, lo = psi_gap(mrf, (1, 2))
        assert cert.boundary_penalty == pytest.approx(hi - lo)
        h_star = map_optimum_of(mrf)[0]
        assert evaluate_H(mrf, x) >= h_star - (hi - lo) - 1e-12

    def test_certificate_random(self):
        rnd = random.Random(5)
        for k in range(25):
            g = random_connected_graph(rnd, rnd.randint(2, 10), 0.25)
            mrf = random_mrf(g, rnd.choice([2, 3]), k)
            x, cert, part = pm_map(mrf, PartitionParams(rnd.randint(1, 3), 0.5, k), "exact")
            h_star = map_optimum_of(mrf)[0]
            assert cert.boundary_penalty == pytest.approx(total_gap(mrf, part.boundary))
            assert h_star <= cert.implied_opt_upper * (1 + 1e-9) + 1e-12

    def test_alpha_certificate(self):
        rnd = random.Random(9)
        alpha = 1.5
        for k in range(15):
            g = random_connected_graph(rnd, rnd.randint(2, 8), 0.3)
            mrf = random_mrf(g, 2, 100 + k)
            x, cert, _ = pm_map(mrf, PartitionParams(2, 0.5, k), alpha_solver(alpha))
            h_star = map_optimum_of(mrf)[0]
            assert cert.alpha_used == alpha
            assert evaluate_H(mrf, x) >= (h_star - cert.boundary_penalty) / alpha - 1e-9
            assert h_star <= cert.implied_opt_upper + 1e-9

    def test_icm_has_no_certified_upper(self):
        mrf = random_mrf(generate_grid(4, 4), 2, 0)
        _, cert, _ = pm_map(mrf, PartitionParams(2, 0.3, 0), "icm")
        assert cert.alpha_used is None and cert.implied_opt_upper is None
        assert cert.k_tilde_hop == 11  # interior vertex of a 4x4 grid: 1 + 4 + 6

    def test_growth_echo(self):
        mrf = random_mrf(generate_grid(4, 4), 2, 0)
        _, cert, _ = pm_map(mrf, PartitionParams(3, 0.3, 0), "icm", growth=(2, 2))
        assert cert.k_tilde_analytic == 18

    def test_oversized_block(self):
        mrf = random_mrf(generate_grid(5, 5), 2, 0)
        with pytest.raises(SizeError, match="block 0"):
            pm_map(mrf, PartitionParams(20, 1e-9, 0), exact_solver(2**20))

    @pytest.mark.parametrize("solver", ["exact", "icm"])
    def test_parallel_determinism(self, solver):
        mrf = random_mrf(generate_grid(6, 6), 2, 3)
        params = PartitionParams(2, 0.3, 42)
        outs = []
        for width in (1, 2, 8):
            x, cert, part = pm_map(mrf, params, solver, width)
            outs.append(json.dumps([x.tolist(), cert.to_dict(), part.to_dict()], sort_keys=True))
        assert outs[0] == outs[1] == outs[2]

    def test_block_seeds_independent_of_schedule(self):
        a = rngmod.stream(7, rngmod.BLOCK, 3).random()
        b = rngmod.stream(7, rngmod.BLOCK, 3).random()
        assert a == b != rngmod.stream(7, rngmod.BLOCK, 4).random()
