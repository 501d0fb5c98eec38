#!/usr/bin/env python3
"""
Tests for the agent-based simulator.

This script tests that:
1. Node fitness and single-event rules match hand-computed values
2. Sampled one-event outcomes agree with the exact enumeration
3. Runs are deterministic per seed and stop for the right reason
4. Ensembles derive seeds and regenerate graphs as documented

Set DIFFUSION_GAME_SLOW=1 for the long statistical checks.
"""

import os
import unittest
import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.append(str(project_root))

from src.core.errors import PreconditionError, SimulationInvariantError
from src.core.netgraph import Graph, build_erdos_renyi, build_regular, load_edge_list
from src.game.ess_analytics import ess_uniform
from src.game.game_core import (
    SelectionParams,
    fitness_f,
    fitness_n,
    im_switch_probability,
    payoff_preset,
)
from src.simulation.diffusion_sim import (
    SimConfig,
    SimState,
    Terminal,
    UpdateRule,
    detect_steady,
    init_strategies,
    node_fitness,
    one_step_distribution,
    run,
    run_ensemble,
    sample_one_step,
    step_bd,
    step_db,
    total_variation,
)
from src.simulation.random_streams import RandomStream, derive_seed

SLOW = os.environ.get("DIFFUSION_GAME_SLOW") == "1"


def _config(rule, preset=1, alpha=0.5, **kwargs):
    return SimConfig(rule=rule, payoff=payoff_preset(preset), alpha=alpha, **kwargs)


class TestNodeFitness(unittest.TestCase):

    def test_complete_graph_forward_node(self):
        """K4, strategies (f, f, f, n), alpha=0.5, PM1: node 0 scores 0.5 + 0.5*(0.8+0.8+0.6)."""
        graph = build_regular(4, 3, seed=0)
        state = SimState(graph, [1, 1, 1, 0])
        self.assertAlmostEqual(node_fitness(graph, state, 0, _config("im")), 1.6, places=12)
        self.assertAlmostEqual(node_fitness(graph, state, 3, _config("im")), 1.4, places=12)

    def test_matches_closed_form_fitness(self):
        graph = build_regular(30, 4, seed=1)
        state = init_strategies(graph, 0.5, seed=2)
        cfg = _config("bd", preset=3, alpha=0.3)
        sel = SelectionParams(0.3)
        for v in range(graph.node_count):
            k = graph.degree(v)
            forward = state.forward_neighbors[v]
            expected = (fitness_f(k, forward, sel, cfg.payoff) if state.strategies[v]
                        else fitness_n(k, k - forward, sel, cfg.payoff))
            self.assertAlmostEqual(node_fitness(graph, state, v, cfg), expected, places=12)

    def test_isolated_node(self):
        graph = Graph.from_edges(3, [(0, 1)])
        state = SimState(graph, [1, 0, 1])
        self.assertAlmostEqual(node_fitness(graph, state, 2, _config("im", alpha=0.25)), 0.75, places=12)


class TestSingleEvent(unittest.TestCase):

    def test_death_birth_on_path(self):
        """Path 1-0-2, only node 1 forwards: node 0 copies f with probability 0.8/(0.8+0.4)."""
        graph = load_edge_list("0 1\n0 2\n")
        cfg = _config("db", preset=2, alpha=1.0)
        distribution = one_step_distribution(graph, [0, 1, 0], cfg)
        self.assertAlmostEqual(distribution[(0, 1)], (2.0 / 3.0) / 3.0, places=12)
        self.assertAlmostEqual(distribution[(0, 0)], (1.0 / 3.0) / 3.0, places=12)

    def test_birth_death_two_nodes(self):
        """Single edge, alpha=1, PM1: both nodes score 0.6 so each spreads with probability 1/2."""
        graph = load_edge_list("0 1\n")
        cfg = _config("bd", preset=1, alpha=1.0)
        distribution = one_step_distribution(graph, [1, 0], cfg)
        self.assertAlmostEqual(distribution[(1, 1)], 0.5, places=12)
        self.assertAlmostEqual(distribution[(0, 0)], 0.5, places=12)

    def test_imitation_matches_switch_probability(self):
        """The exact IM enumeration agrees with the pair-level switch probability."""
        graph = build_regular(4, 3, seed=0)
        strategies = [1, 1, 0, 0]
        cfg = _config("im", preset=2, alpha=0.4)
        sel = SelectionParams(0.4)
        state = SimState(graph, strategies)
        distribution = one_step_distribution(graph, strategies, cfg)
        # Node 2 is S_n with one S_n neighbour and two S_f neighbours
        own = fitness_n(3, 1, sel, cfg.payoff)
        same = node_fitness(graph, state, 3, cfg)
        other = node_fitness(graph, state, 0, cfg)
        self.assertAlmostEqual(distribution[(2, 1)] * 4,
                               im_switch_probability(3, 1, own, same, other), places=12)

    def test_distribution_sums_to_one(self):
        graph = build_erdos_renyi(12, 3, seed=5)
        strategies = init_strategies(graph, 0.5, seed=1).strategies
        for rule in ("im", "bd", "db"):
            with self.subTest(rule=rule):
                distribution = one_step_distribution(graph, strategies, _config(rule, preset=2))
                self.assertAlmostEqual(sum(distribution.values()), 1.0, places=12)

    def test_sampled_outcomes_match_enumeration(self):
        graph = build_regular(10, 3, seed=4)
        strategies = [1, 0] * 5
        trials, bound = (100_000, 0.01) if SLOW else (50_000, 0.02)
        for rule in ("im", "bd", "db"):
            with self.subTest(rule=rule):
                cfg = _config(rule, preset=3, alpha=0.6, seed=17)
                exact = one_step_distribution(graph, strategies, cfg)
                sampled = sample_one_step(graph, strategies, cfg, trials)
                self.assertLess(total_variation(exact, sampled), bound)

    def test_complete_graph_random_assignments(self):
        """K4, five random strategy assignments, every rule."""
        graph = build_regular(4, 3, seed=0)
        trials, bound = (100_000, 0.01) if SLOW else (20_000, 0.02)
        for assignment in range(5):
            strategies = init_strategies(graph, 0.5, seed=100 + assignment).strategies
            for rule in ("im", "bd", "db"):
                with self.subTest(assignment=assignment, rule=rule):
                    cfg = _config(rule, preset=2, alpha=0.8, seed=assignment)
                    exact = one_step_distribution(graph, strategies, cfg)
                    sampled = sample_one_step(graph, strategies, cfg, trials)
                    self.assertLess(total_variation(exact, sampled), bound)

    def test_birth_death_isolated_parent_is_noop(self):
        graph = Graph.from_edges(3, [(0, 1)])
        state = SimState(graph, [1, 0, 1])
        cfg = _config("bd", alpha=0.0)
        rng = RandomStream(7)
        for _ in range(200):
            step_bd(graph, state, cfg, rng)
            node, strategy = state.last_update
            if node == 2:
                self.assertEqual(strategy, 1)
            state.verify()
        self.assertEqual(state.strategies[2], 1)

    def test_death_birth_counters_stay_consistent(self):
        graph = build_regular(40, 4, seed=9)
        state = init_strategies(graph, 0.5, seed=3)
        cfg = _config("db", preset=2, alpha=0.2)
        rng = RandomStream(11)
        for _ in range(2000):
            step_db(graph, state, cfg, rng)
        state.verify()
        self.assertEqual(state.step, 2000)


class TestSimState(unittest.TestCase):

    def test_flip_updates_edge_counts(self):
        graph = load_edge_list("0 1\n1 2\n2 0\n2 3\n")
        state = SimState(graph, [1, 1, 0, 0])
        self.assertEqual((state.count_ff, state.count_fn, state.count_nn), (1, 2, 1))
        state.flip(2)
        self.assertEqual((state.count_f, state.count_ff, state.count_fn, state.count_nn), (3, 3, 1, 0))
        self.assertEqual(state.recount(), (3, 3, 1, 0))

    def test_verify_detects_drift(self):
        graph = load_edge_list("0 1\n")
        state = SimState(graph, [1, 0])
        state.count_ff = 5
        with self.assertRaises(SimulationInvariantError):
            state.verify()

    def test_tracked_fitness_follows_flips(self):
        graph = build_regular(20, 4, seed=2)
        state = init_strategies(graph, 0.5, seed=8)
        state.track_fitness(payoff_preset(2), 0.3)
        for v in (0, 5, 5, 11):
            state.flip(v)
        state.verify()
        cfg = _config("bd", preset=2, alpha=0.3)
        for v in (0, 5, 11):
            self.assertAlmostEqual(state.fitness[v], node_fitness(graph, state, v, cfg), places=12)


class TestSteadyDetection(unittest.TestCase):

    def test_flat_window(self):
        self.assertTrue(detect_steady([0.5] * 10, 1e-3))

    def test_trending_window(self):
        self.assertFalse(detect_steady([0.1 * i for i in range(10)], 1e-3))

    def test_window_too_short(self):
        with self.assertRaises(PreconditionError):
            detect_steady([0.5], 1e-3)


class TestSimConfig(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(PreconditionError):
            _config("im", alpha=1.5)
        with self.assertRaises(PreconditionError):
            _config("im", window=50, max_steps=50)
        with self.assertRaises(PreconditionError):
            _config("im", seed=-1)
        with self.assertRaises(ValueError):
            _config("moran")

    def test_rule_coerced(self):
        self.assertIs(_config("bd").rule, UpdateRule.BD)


class TestRun(unittest.TestCase):

    def test_absorbed_start(self):
        graph = build_regular(20, 4, seed=1)
        trajectory = run(graph, _config("im", initial_pf=1.0))
        self.assertEqual(trajectory.terminal, Terminal.ABSORBED_ALL_F)
        self.assertEqual(trajectory.final_pf, 1.0)
        self.assertEqual(trajectory.generations, 0)

    def test_zero_max_steps(self):
        graph = build_regular(20, 4, seed=1)
        trajectory = run(graph, _config("db", max_steps=0, window=2))
        self.assertEqual(trajectory.terminal, Terminal.MAX_STEPS)
        self.assertEqual(len(trajectory.samples), 1)

    def test_deterministic_per_seed(self):
        graph = build_regular(100, 6, seed=3)
        cfg = _config("im", preset=2, alpha=0.1, max_steps=40, window=10, seed=5)
        first, second = run(graph, cfg), run(graph, cfg)
        self.assertEqual(first.to_csv(), second.to_csv())
        self.assertEqual(first.final_pf, second.final_pf)

    def test_samples_once_per_generation(self):
        graph = build_regular(50, 4, seed=3)
        trajectory = run(graph, _config("bd", preset=2, alpha=0.1, max_steps=5, window=4,
                                        steady_tol=1e-12))
        steps = [sample.step for sample in trajectory.samples]
        self.assertEqual(steps[0], 0)
        self.assertLessEqual(len(steps), 6)
        self.assertTrue(all(b - a == 50 for a, b in zip(steps[:-2], steps[1:-1])))
        self.assertLessEqual(steps[-1] - steps[-2], 50)
        self.assertTrue(trajectory.to_csv().startswith("step,p_f,p_ff,p_fn,p_nn\n"))

    def test_small_complete_graph_absorbs(self):
        """PM1 with strong selection on a tiny graph reaches all-forward."""
        graph = build_regular(6, 5, seed=0)
        trajectory = run(graph, _config("db", preset=1, alpha=1.0, max_steps=5000, window=4990,
                                        initial_pf=0.5, seed=3))
        self.assertIn(trajectory.terminal, (Terminal.ABSORBED_ALL_F, Terminal.ABSORBED_ALL_N))
        self.assertIn(trajectory.final_pf, (0.0, 1.0))

    @unittest.skipUnless(SLOW, "set DIFFUSION_GAME_SLOW=1 for simulation-versus-theory checks")
    def test_imitation_tracks_interior_ess(self):
        """PM2 on a 1000-node 20-regular graph stays close to the closed-form ESS."""
        cfg = _config("im", preset=2, alpha=0.1, max_steps=2000, window=50, seed=2024)
        result = run_ensemble(lambda seed: build_regular(1000, 20, seed), cfg, runs=5)
        expected = ess_uniform(payoff_preset(2), 20).selected_ess
        self.assertLess(abs(result.mean_final_pf - expected), 0.1)


class TestEnsemble(unittest.TestCase):

    def test_single_run_has_zero_spread(self):
        graph = build_regular(30, 4, seed=1)
        result = run_ensemble(graph, _config("db", preset=2, alpha=0.1, max_steps=10, window=5), runs=1)
        self.assertEqual(result.runs, 1)
        self.assertEqual(result.std_final_pf, 0.0)
        self.assertEqual(result.mean_final_pf, result.per_run_final[0])

    def test_graph_regeneration_schedule(self):
        seeds = []

        def factory(seed):
            seeds.append(seed)
            return build_regular(20, 4, seed)

        cfg = _config("im", preset=2, alpha=0.1, max_steps=3, window=2, seed=9)
        result = run_ensemble(factory, cfg, runs=5, regen_every=2)
        self.assertEqual(seeds, [derive_seed(9, 3, 0), derive_seed(9, 3, 1), derive_seed(9, 3, 2)])
        self.assertEqual(len(result.per_run_final), 5)
        self.assertEqual(sum(result.terminals.values()), 5)

    def test_reproducible(self):
        graph = build_regular(30, 4, seed=1)
        cfg = _config("bd", preset=3, alpha=0.2, max_steps=8, window=4, seed=4)
        first = run_ensemble(graph, cfg, runs=3)
        second = run_ensemble(graph, cfg, runs=3)
        self.assertEqual(first.per_run_final, second.per_run_final)
        self.assertEqual(first.to_dict()["config"]["seed"], 4)

    def test_invalid_arguments(self):
        graph = build_regular(10, 3, seed=1)
        with self.assertRaises(PreconditionError):
            run_ensemble(graph, _config("im"), runs=0)
        with self.assertRaises(PreconditionError):
            run_ensemble(graph, _config("im"), runs=2, regen_every=0)

    @unittest.skipUnless(SLOW, "set DIFFUSION_GAME_SLOW=1 for simulation-versus-theory checks")
    def test_regime_ordering(self):
        """Ensemble means fall from PM1 to PM4 on a shared graph and seed schedule."""
        means = []
        for preset in (1, 2, 3, 4):
            cfg = _config("im", preset=preset, alpha=0.1, max_steps=2000, window=50, seed=2024)
            result = run_ensemble(lambda seed: build_regular(1000, 20, seed), cfg, runs=5)
            means.append(result.mean_final_pf)
        for earlier, later in zip(means, means[1:]):
            with self.subTest(means=means):
                self.assertGreater(earlier, later)


class TestRandomStreams(unittest.TestCase):

    def test_derived_seeds_are_stable_and_distinct(self):
        self.assertEqual(derive_seed(1, 2), derive_seed(1, 2))
        self.assertNotEqual(derive_seed(1, 2), derive_seed(1, 3))
        with self.assertRaises(ValueError):
            derive_seed(-1)

    def test_index_range(self):
        stream = RandomStream(3, buffer_size=16)
        draws = [stream.index(5) for _ in range(100)]
        self.assertTrue(all(0 <= d < 5 for d in draws))


if __name__ == "__main__":
    unittest.main()
