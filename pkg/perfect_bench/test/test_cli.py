import csv
import json
import os
import tempfile
import unittest
from unittest import mock

from ..lib import __format_version__
from ..lib.chain import make_chain
from ..lib.stats import StatReport, exact_report
from ..tools import perfect_sample
from ..tools.perfect_sample import (
    EXIT_FAILED,
    EXIT_OK,
    EXIT_USAGE,
    dist_report,
    main,
    parse_param,
    verify_document,
)


class TestParams(unittest.TestCase):
    def test_parse_param(self):
        self.assertEqual(parse_param("n=4"), ("n", 4))
        self.assertEqual(parse_param("epsilon=0.2"), ("epsilon", 0.2))
        self.assertEqual(parse_param("weights=zipf"), ("weights", "zipf"))


class TestMain(unittest.TestCase):
    def test_no_command(self):
        self.assertEqual(main([]), EXIT_USAGE)

    def test_sample(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "runs.csv")
            status = main(
                [
                    "sample", "three-state", "fmmr", "-p", "epsilon=0.2",
                    "--start", "0", "--reps", "10", "-o", path,
                ]
            )
            self.assertEqual(status, EXIT_OK)
            with open(path, newline="") as f:
                rows = list(csv.DictReader(f))
            self.assertEqual(len(rows), 10)
            self.assertTrue(all(row["window"] == "1" for row in rows))

    def test_fmmr_needs_start(self):
        self.assertEqual(main(["sample", "mtf", "fmmr", "--n", "4", "--reps", "1"]), EXIT_USAGE)

    def test_unknown_chain(self):
        self.assertEqual(main(["sample", "ising", "cftp", "--reps", "1"]), EXIT_USAGE)

    def test_table(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "table.csv")
            status = main(["table", "--families", "uniform", "--sizes", "10,20", "-o", path])
            self.assertEqual(status, EXIT_OK)
            with open(path, newline="") as f:
                self.assertEqual(len(list(csv.DictReader(f))), 2)


class TestDist(unittest.TestCase):
    def test_three_state(self):
        eps = 0.2
        report = dist_report(make_chain("three-state", epsilon=eps), start="0", cftp=True)
        self.assertAlmostEqual(report["cftp_cdf"][0], eps)
        self.assertEqual(report["format_version"], __format_version__)
        self.assertAlmostEqual(report["stationary"]["0"], eps)
        for p in report["fmmr_cdf"]:
            self.assertAlmostEqual(p, 1.0)
        json.dumps(report)

    def test_mtf(self):
        model = make_chain("mtf", n=3, weights="uniform")
        report = dist_report(model, start="rev")
        self.assertEqual(report["start"], "3-2-1")
        self.assertAlmostEqual(report["fmmr"]["mean"], 2.5)
        self.assertEqual(report["format_version"], __format_version__)
        self.assertNotIn("cftp", report)


class TestVerifyOutput(unittest.TestCase):
    def reports(self):
        return [
            StatReport("gof", 3.2, 4, 0.52, 1e-3, anchor="stationary-output"),
            exact_report("order", False, deviation=0.1, anchor="bruhat-monotone"),
        ]

    def test_document(self):
        doc = verify_document(self.reports())
        self.assertEqual(doc["format_version"], __format_version__)
        self.assertEqual([r["name"] for r in doc["reports"]], ["gof", "order"])
        json.dumps(doc)

    def test_output_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "verify.json")
            with mock.patch.object(
                perfect_sample, "verify_suite", return_value=self.reports()
            ):
                status = main(["verify", "-o", path])
            self.assertEqual(status, EXIT_FAILED)
            with open(path) as f:
                doc = json.load(f)
        self.assertEqual(doc["format_version"], __format_version__)
        self.assertEqual(len(doc["reports"]), 2)


if __name__ == "__main__":
    unittest.main()
