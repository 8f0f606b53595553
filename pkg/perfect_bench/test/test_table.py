import io
import math
import unittest

from ..lib import __format_version__
from ..lib.errors import InvalidInputError
from ..lib.table import TABLE_COLUMNS, expected_runtimes, scaling_row, scaling_table, write_table_csv


class TestScalingTable(unittest.TestCase):
    def test_uniform_closed_form(self):
        harmonic = math.fsum(1.0 / k for k in range(1, 11))
        means = expected_runtimes("uniform", {}, 10)
        self.assertAlmostEqual(means["mean_rev"], 10 * (harmonic - 1))
        self.assertAlmostEqual(means["mean_id"], 10 * (harmonic - 1))

    def test_geometric(self):
        row = scaling_row("geometric:0.5", 100)
        expected = 99 + math.fsum(0.5**r / (1 - 0.5**r) for r in range(2, 100))
        self.assertAlmostEqual(row["mean_rev"], expected, places=8)
        self.assertAlmostEqual(row["ratio_rev"], 1.0, delta=0.01)
        row = scaling_row("geometric:0.5", 20)
        self.assertAlmostEqual(row["mean_id"], 2**19 - 1, delta=1e-6 * 2**19)
        self.assertGreater(row["mean_id"] / row["mean_rev"], 1e4)

    def test_zipf_ratio(self):
        rows = scaling_table(("zipf",), (1000, 10000, 100000))
        ratios = [r["ratio_rev"] for r in rows]
        self.assertTrue(all(1.0 <= r <= 1.25 for r in ratios), ratios)
        self.assertTrue(ratios[0] > ratios[1] > ratios[2])

    def test_rows(self):
        rows = scaling_table(("gzl:0.5", "power:1"), (1000,))
        self.assertEqual([r["family"] for r in rows], ["gzl", "power"])
        self.assertEqual(rows[0]["params"], "alpha=0.5")
        for r in rows:
            self.assertTrue(0.8 <= r["ratio_rev"] <= 1.3)
        self.assertRaises(InvalidInputError, scaling_row, "zipf", 1)
        self.assertRaises(InvalidInputError, scaling_row, "gzl:1", 100)

    def test_csv(self):
        out = io.StringIO()
        write_table_csv(scaling_table(("zipf",), (10, 20)), out)
        lines = out.getvalue().splitlines()
        self.assertEqual(lines[0].split(","), ["format_version"] + list(TABLE_COLUMNS))
        self.assertEqual(len(lines), 3)
        self.assertTrue(lines[1].startswith(f"{__format_version__},zipf,,10,"))


if __name__ == "__main__":
    unittest.main()
