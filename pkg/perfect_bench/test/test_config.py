import os
import unittest

from ..lib.config import (
    OUTPUT_DIR_ENV,
    ExperimentConfig,
    ExperimentSpec,
    get_run_id,
    get_run_options,
)
from ..lib.errors import InvalidInputError
from ..lib.samplers import Algorithm

CONFIG_FILE = os.path.join(os.path.dirname(__file__), "configs", "test_experiments.json")


class TestExperimentConfig(unittest.TestCase):
    def test_load_file(self):
        run_options = get_run_options()
        run_options["seed"] = 42
        config = ExperimentConfig(run_options)
        config.load_json_file(CONFIG_FILE)
        specs = {spec.id: spec for spec in config.experiments}
        self.assertEqual(
            sorted(specs),
            ["mtf_fmmr:0", "mtf_fmmr:1", "three_state_cftp:0", "three_state_cftp:1"],
        )
        self.assertEqual(specs["mtf_fmmr:1"].params, {"n": 4, "weights": "zipf"})
        self.assertEqual(specs["mtf_fmmr:0"].algorithm, Algorithm.FMMR)
        self.assertEqual(specs["mtf_fmmr:0"].replications, 20)
        self.assertEqual(specs["mtf_fmmr:0"].seed, 42)
        self.assertEqual(specs["three_state_cftp:1"].params, {"epsilon": 0.5})
        self.assertTrue(specs["three_state_cftp:0"].doubling)
        self.assertEqual(specs["three_state_cftp:0"].replications, 1000)
        self.assertEqual(specs["three_state_cftp:0"].format, "json")

    def test_load_json(self):
        config = ExperimentConfig(get_run_options())
        config.load_json('{"a": {"chain": "mtf", "algorithm": "cftp", "params": {"n": 3}}}')
        (spec,) = config.experiments
        self.assertEqual(spec.id, get_run_id("a", 0))
        self.assertEqual(spec.to_dict()["algorithm"], "cftp")

    def test_invalid(self):
        config = ExperimentConfig(get_run_options())
        self.assertRaises(
            InvalidInputError,
            config.load,
            {"a": {"chain": "mtf", "algorithm": "cftp", "colour": "red"}},
        )
        self.assertRaises(InvalidInputError, config.load, {"a": {"chain": "mtf"}})
        self.assertRaises(InvalidInputError, config.load, {"a": [1, 2]})
        self.assertRaises(ValueError, ExperimentSpec, "x", "mtf", "gibbs")
        self.assertRaises(InvalidInputError, ExperimentSpec, "x", "mtf", "fmmr")
        self.assertRaises(InvalidInputError, ExperimentSpec, "x", "mtf", "fmmr_set")
        self.assertRaises(
            InvalidInputError, ExperimentSpec, "x", "mtf", "cftp", replications=0
        )
        self.assertRaises(
            InvalidInputError, ExperimentSpec, "x", "mtf", "cftp", format="xml"
        )

    def test_output_path(self):
        spec = ExperimentSpec("sweep:3", "mtf", "cftp")
        self.assertEqual(spec.output_path("out"), os.path.join("out", "sweep_3.csv"))
        spec = ExperimentSpec("a", "mtf", "cftp", output="x.json", format="json")
        self.assertEqual(spec.output_path("out"), "x.json")

    def test_output_dir_env(self):
        old = os.environ.get(OUTPUT_DIR_ENV)
        os.environ[OUTPUT_DIR_ENV] = "/tmp/results"
        try:
            self.assertEqual(get_run_options()["output_dir"], "/tmp/results")
        finally:
            if old is None:
                del os.environ[OUTPUT_DIR_ENV]
            else:
                os.environ[OUTPUT_DIR_ENV] = old


if __name__ == "__main__":
    unittest.main()
