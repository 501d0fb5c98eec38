#!/usr/bin/env python3
"""
Test script to verify the inversion of the observed news-group stable states.

This script tests that:
1. Every group's relation reproduces its observed ESS on the 500-site complete graph
2. The Markdown report and CSV table are written
"""

import tempfile
import unittest
import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.append(str(project_root))

from invert_memetracker_groups import OBSERVED_GROUPS, invert_groups, write_report


class TestGroupInversion(unittest.TestCase):
    """Inversion of the five observed groups."""

    def setUp(self):
        self.rows = invert_groups(simulate=False)

    def test_one_row_per_group(self):
        self.assertEqual([row["group"] for row in self.rows], sorted(OBSERVED_GROUPS))

    def test_recovered_stable_states(self):
        for row in self.rows:
            self.assertAlmostEqual(row["recovered_p_star"], row["p_star"], delta=1e-9)
            self.assertIsNone(row["simulated_mean"])

    def test_normalized_payoffs_in_unit_interval(self):
        for row in self.rows:
            for name in ("u_ff", "u_fn", "u_nn"):
                self.assertGreater(row[name], 0.0)
                self.assertLess(row[name], 1.0)

    def test_group_three_large_k_ratio(self):
        row = next(row for row in self.rows if row["group"] == 3)
        self.assertAlmostEqual(row["large_k_ratio"], 0.88679, delta=1e-5)

    def test_report_written(self):
        with tempfile.TemporaryDirectory() as tmp:
            report_path = write_report(self.rows, Path(tmp) / "results")
            self.assertTrue(report_path.exists())
            self.assertTrue((Path(tmp) / "results" / "memetracker_inversion.csv").exists())
            self.assertIn("Groupe 5", report_path.read_text())


if __name__ == "__main__":
    unittest.main()
