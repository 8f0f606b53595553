import unittest

from ..lib.errors import InvalidInputError
from ..lib.iterator import expand_ranges, full_range, range_values


class TestIterator(unittest.TestCase):
    def test_full_range(self):
        self.assertEqual(list(full_range(-3, 2)), [-3, -2, -1, 0, 1, 2])
        self.assertEqual(list(full_range(5, 11, 2)), [5, 7, 9, 11])
        self.assertEqual(list(full_range(3, 11, 3)), [3, 6, 9])

    def test_range_values(self):
        self.assertEqual(range_values("n", [3, 5]), [3, 4, 5])
        self.assertEqual(range_values("n", [2, 8, 3]), [2, 5, 8])
        self.assertEqual(range_values("w", ["zipf", "uniform"]), ["zipf", "uniform"])
        self.assertEqual(range_values("n", {"__list__": [3, 5]}), [3, 5])
        self.assertEqual(range_values("eps", [0.1, 0.2]), [0.1, 0.2])
        self.assertRaises(InvalidInputError, range_values, "n", [1, 2, 3, 4])
        self.assertRaises(InvalidInputError, range_values, "n", 3)
        self.assertRaises(InvalidInputError, range_values, "n", [])

    def test_expand_ranges(self):
        config = {
            "chain": "mtf",
            "algorithm": ["cftp", "fmmr"],
            "params": {"n": [3, 4], "weights": "zipf"},
            "__range__": ["params.n", "algorithm"],
        }
        result = list(expand_ranges(config))
        self.assertEqual([k for k, _ in result], [0, 1, 2, 3])
        self.assertEqual(
            [(c["params"]["n"], c["algorithm"]) for _, c in result],
            [(3, "cftp"), (3, "fmmr"), (4, "cftp"), (4, "fmmr")],
        )
        for _, c in result:
            self.assertNotIn("__range__", c)
            self.assertEqual(c["params"]["weights"], "zipf")
        # The input config is left untouched.
        self.assertEqual(config["params"]["n"], [3, 4])

    def test_no_range(self):
        config = {"chain": "mtf", "params": {"n": [3, 4]}}
        self.assertEqual(list(expand_ranges(config)), [(0, config)])

    def test_missing_field(self):
        config = {"chain": "mtf", "__range__": ["params.n"]}
        self.assertRaises(InvalidInputError, list, expand_ranges(config))


if __name__ == "__main__":
    unittest.main()
