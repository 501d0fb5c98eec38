#!/usr/bin/env python3
"""
Tests for payoffs, fitness functions and network-state algebra.
"""

import unittest
import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.append(str(project_root))

from src.core.errors import DegenerateCaseError, PreconditionError
from src.game.game_core import (
    PAYOFF_PRESETS,
    PayoffMatrix,
    Regime,
    SelectionParams,
    Strategy,
    classify_regime,
    closure_state,
    config_prob_f,
    config_prob_n,
    fitness_f,
    fitness_n,
    im_switch_probability,
    is_feasible,
    pair_closure,
    payoff_preset,
    state_from_pf_pff,
    transition_probabilities_im,
)


class TestPayoffMatrix(unittest.TestCase):

    def test_entries_must_be_open_unit_interval(self):
        with self.assertRaises(PreconditionError):
            PayoffMatrix(1.0, 0.5, 0.5)
        with self.assertRaises(PreconditionError):
            PayoffMatrix(0.5, 0.0, 0.5)

    def test_presets(self):
        self.assertEqual(payoff_preset(2).as_tuple(), (0.6, 0.8, 0.4))
        self.assertEqual(len(PAYOFF_PRESETS), 4)
        with self.assertRaises(PreconditionError):
            payoff_preset(5)

    def test_normalized_affine_map(self):
        """(3, 1, 2) maps onto [0.1, 0.9] preserving order."""
        matrix = PayoffMatrix.normalized(3.0, 1.0, 2.0)
        self.assertAlmostEqual(matrix.u_ff, 0.9, places=12)
        self.assertAlmostEqual(matrix.u_fn, 0.1, places=12)
        self.assertAlmostEqual(matrix.u_nn, 0.5, places=12)

    def test_normalized_constant_payoffs(self):
        self.assertEqual(PayoffMatrix.normalized(2.0, 2.0, 2.0).as_tuple(), (0.5, 0.5, 0.5))

    def test_symmetric_mixed_payoff(self):
        matrix = payoff_preset(1)
        self.assertEqual(matrix.payoff(Strategy.FORWARD, Strategy.NOT_FORWARD),
                         matrix.payoff(Strategy.NOT_FORWARD, Strategy.FORWARD))


class TestRegimeClassification(unittest.TestCase):

    def test_presets(self):
        self.assertEqual(classify_regime(payoff_preset(1)), Regime.ALL_FORWARD)
        self.assertEqual(classify_regime(payoff_preset(2)), Regime.ANTI_COORDINATION)
        self.assertEqual(classify_regime(payoff_preset(3)), Regime.ANTI_COORDINATION)
        self.assertEqual(classify_regime(payoff_preset(4)), Regime.NONE_FORWARD)

    def test_coordination_and_ties(self):
        self.assertEqual(classify_regime(PayoffMatrix(0.8, 0.4, 0.6)), Regime.COORDINATION)
        self.assertEqual(classify_regime(PayoffMatrix(0.5, 0.5, 0.4)), Regime.DEGENERATE)


class TestFitness(unittest.TestCase):

    def test_forward_fitness(self):
        """k=3, two forwarding neighbours, alpha=0.5, PM1: 0.5 + 0.5*(1.6+0.6) = 1.6."""
        self.assertAlmostEqual(fitness_f(3, 2, SelectionParams(0.5), payoff_preset(1)), 1.6, places=12)

    def test_not_forward_fitness(self):
        self.assertAlmostEqual(fitness_n(3, 1, SelectionParams(0.5), payoff_preset(1)), 1.3, places=12)

    def test_zero_selection_is_baseline(self):
        self.assertEqual(fitness_f(10, 4, SelectionParams(0.0), payoff_preset(3)), 1.0)
        self.assertEqual(fitness_n(10, 4, SelectionParams(0.0), payoff_preset(3)), 1.0)

    def test_count_out_of_range(self):
        with self.assertRaises(PreconditionError):
            fitness_f(3, 4, SelectionParams(0.1), payoff_preset(1))
        with self.assertRaises(PreconditionError):
            SelectionParams(1.5)

    def test_configuration_probabilities(self):
        self.assertAlmostEqual(config_prob_f(3, 0, 0.5), 0.125, places=12)
        self.assertAlmostEqual(sum(config_prob_n(10, j, 0.3) for j in range(11)), 1.0, places=12)
        with self.assertRaises(PreconditionError):
            config_prob_f(3, 1, 1.2)


class TestNetworkState(unittest.TestCase):

    def test_interior_state(self):
        state = state_from_pf_pff(0.5, 0.3)
        self.assertAlmostEqual(state.p_fn, 0.4, places=12)
        self.assertAlmostEqual(state.p_nn, 0.3, places=12)
        self.assertAlmostEqual(state.p_f_given_f, 0.6, places=12)
        self.assertAlmostEqual(state.p_f_given_n, 0.4, places=12)
        self.assertAlmostEqual(state.p_n_given_n, 0.6, places=12)
        self.assertAlmostEqual(state.p_ff + state.p_fn + state.p_nn, 1.0, places=12)

    def test_boundary_conditionals_are_vacuous(self):
        state = state_from_pf_pff(1.0, 1.0)
        self.assertIsNone(state.p_f_given_f)
        self.assertTrue(state.is_boundary)
        with self.assertRaises(DegenerateCaseError):
            _ = state.conditionals

    def test_infeasible_states_rejected(self):
        self.assertFalse(is_feasible(0.5, 0.6))
        with self.assertRaises(PreconditionError):
            state_from_pf_pff(0.5, 0.6)
        with self.assertRaises(PreconditionError):
            state_from_pf_pff(0.8, 0.5)

    def test_pair_closure_identities(self):
        """Conditionals differ by 1/(k-1) and edge classes are consistent."""
        state = pair_closure(0.5, 10)
        self.assertAlmostEqual(state.p_f_given_f - state.p_f_given_n, 1.0 / 9.0, places=12)
        self.assertAlmostEqual(state.p_f_given_f + state.p_n_given_f, 1.0, places=12)
        self.assertAlmostEqual(state.p_f_given_n + state.p_n_given_n, 1.0, places=12)
        self.assertAlmostEqual(state.p_f * state.p_n_given_f, state.p_n * state.p_f_given_n, places=12)
        self.assertAlmostEqual(state.p_ff + state.p_fn + state.p_nn, 1.0, places=12)

    def test_pair_closure_boundaries_flagged(self):
        state = pair_closure(0.0, 5)
        self.assertEqual(state.vacuous_classes, (Strategy.FORWARD,))
        self.assertAlmostEqual(state.p_f_given_f, 0.25, places=12)

    def test_pair_closure_requires_degree_three(self):
        with self.assertRaises(PreconditionError):
            pair_closure(0.5, 2)
        with self.assertRaises(DegenerateCaseError):
            closure_state(0.5, 2.0)


class TestImitationTransitions(unittest.TestCase):

    def test_switch_probability(self):
        self.assertAlmostEqual(im_switch_probability(3, 1, 1.0, 1.0, 1.0), 0.5, places=12)
        self.assertEqual(im_switch_probability(3, 3, 1.0, 1.0, 1.0), 0.0)

    def test_neutral_drift(self):
        """Without selection, up and down moves are equally likely."""
        state = pair_closure(0.3, 5)
        up, down = transition_probabilities_im(state, 5, SelectionParams(0.0), payoff_preset(2))
        self.assertGreater(up, 0.0)
        self.assertAlmostEqual(up, down, places=12)

    def test_drift_towards_interior_ess(self):
        """PM2 on k=10 has its interior ESS near 0.708."""
        sel = SelectionParams(0.05)
        up, down = transition_probabilities_im(pair_closure(0.3, 10), 10, sel, payoff_preset(2))
        self.assertGreater(up, down)
        up, down = transition_probabilities_im(pair_closure(0.9, 10), 10, sel, payoff_preset(2))
        self.assertLess(up, down)

    def test_boundary_has_no_moves(self):
        state = state_from_pf_pff(0.0, 0.0)
        self.assertEqual(transition_probabilities_im(state, 4, SelectionParams(0.1), payoff_preset(1)),
                         (0.0, 0.0))


if __name__ == "__main__":
    unittest.main()
